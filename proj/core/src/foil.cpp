#include "cxrl/foil.hpp"

#include <cctype>
#include <cmath>
#include <nlohmann/json.hpp>

namespace cxrl {

// ---------------------------------------------------------------------------
// Concept expressions

ConceptExpr ConceptExpr::atom(Concept c) {
  ConceptExpr e;
  e.kind_ = Kind::Concept;
  e.concept_ = c;
  return e;
}

ConceptExpr ConceptExpr::negate(ConceptExpr operand) {
  ConceptExpr e;
  e.kind_ = Kind::Not;
  e.operands_.push_back(std::move(operand));
  return e;
}

ConceptExpr ConceptExpr::conjunction(ConceptExpr lhs, ConceptExpr rhs) {
  ConceptExpr e;
  e.kind_ = Kind::And;
  e.operands_.push_back(std::move(lhs));
  e.operands_.push_back(std::move(rhs));
  return e;
}

ConceptExpr ConceptExpr::disjunction(ConceptExpr lhs, ConceptExpr rhs) {
  ConceptExpr e;
  e.kind_ = Kind::Or;
  e.operands_.push_back(std::move(lhs));
  e.operands_.push_back(std::move(rhs));
  return e;
}

bool ConceptExpr::evaluate(const ConceptVec& c) const {
  switch (kind_) {
    case Kind::Concept: return c[concept_];
    case Kind::Not: return !operands_[0].evaluate(c);
    case Kind::And: return operands_[0].evaluate(c) && operands_[1].evaluate(c);
    case Kind::Or: return operands_[0].evaluate(c) || operands_[1].evaluate(c);
  }
  return false;
}

namespace {

int precedence(ConceptExpr::Kind k) {
  switch (k) {
    case ConceptExpr::Kind::Or: return 1;
    case ConceptExpr::Kind::And: return 2;
    default: return 3;
  }
}

}  // namespace

std::string ConceptExpr::to_string() const {
  // Binary operators are parsed left-associatively, so a right operand of the
  // same precedence needs parentheses to keep its shape.
  auto wrap = [](const ConceptExpr& e, int min_prec, bool strict) {
    const int p = precedence(e.kind_);
    const bool paren = strict ? p <= min_prec : p < min_prec;
    return paren ? "(" + e.to_string() + ")" : e.to_string();
  };
  switch (kind_) {
    case Kind::Concept: return std::string(concept_id(concept_));
    case Kind::Not: return "not " + wrap(operands_[0], 3, false);
    case Kind::And: return wrap(operands_[0], 2, false) + " and " + wrap(operands_[1], 2, true);
    case Kind::Or: return wrap(operands_[0], 1, false) + " or " + wrap(operands_[1], 1, true);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Query parsing

QueryError::QueryError(std::size_t column, const std::string& what)
    : std::runtime_error("column " + std::to_string(column) + ": " + what), column_(column) {}

namespace {

struct Token {
  enum class Kind { Word, LParen, RParen, Semicolon, End } kind;
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
    } else if (ch == '(') {
      tokens.push_back({Token::Kind::LParen, text.substr(i, 1), i + 1});
      ++i;
    } else if (ch == ')') {
      tokens.push_back({Token::Kind::RParen, text.substr(i, 1), i + 1});
      ++i;
    } else if (ch == ';') {
      tokens.push_back({Token::Kind::Semicolon, text.substr(i, 1), i + 1});
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      const std::size_t start = i;
      while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
      tokens.push_back({Token::Kind::Word, text.substr(start, i - start), start + 1});
    } else {
      throw QueryError(i + 1, std::string("unexpected character '") + ch + "'");
    }
  }
  tokens.push_back({Token::Kind::End, {}, text.size() + 1});
  return tokens;
}

bool is_keyword(std::string_view w) {
  return w == "do" || w == "until" || w == "while" || w == "and" || w == "or" || w == "not";
}

class QueryParser {
 public:
  explicit QueryParser(std::string_view text) : tokens_(tokenize(text)) {}

  FoilQuery parse() {
    FoilQuery query;
    while (true) {
      while (peek().kind == Token::Kind::Semicolon) advance();
      if (peek().kind == Token::Kind::End) break;
      query.rules.push_back(rule());
      const Token& t = peek();
      if (t.kind == Token::Kind::Semicolon) {
        advance();
      } else if (t.kind != Token::Kind::End) {
        throw QueryError(t.column, "expected ';' or end of query, got '" + std::string(t.text) + "'");
      }
    }
    if (query.rules.empty()) throw QueryError(1, "query has no rules");
    return query;
  }

  ConceptExpr standalone_expression() {
    ConceptExpr e = expression();
    if (peek().kind != Token::Kind::End) {
      throw QueryError(peek().column, "unexpected '" + std::string(peek().text) + "' after expression");
    }
    return e;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool at_word(std::string_view w) const { return peek().kind == Token::Kind::Word && peek().text == w; }

  FoilRule rule() {
    if (!at_word("do")) throw QueryError(peek().column, "expected 'do'");
    advance();
    const Token& name = advance();
    if (name.kind != Token::Kind::Word || is_keyword(name.text)) {
      throw QueryError(name.column, "expected an action after 'do'");
    }
    const auto action = parse_action(name.text);
    if (!action) throw QueryError(name.column, "unknown action '" + std::string(name.text) + "'");
    FoilRule r;
    r.action = *action;
    if (at_word("until") || at_word("while")) {
      r.guard = advance().text == "until" ? Guard::Until : Guard::While;
      r.condition = expression();
    }
    return r;
  }

  ConceptExpr expression() {
    ConceptExpr lhs = term();
    while (at_word("or")) {
      advance();
      lhs = ConceptExpr::disjunction(std::move(lhs), term());
    }
    return lhs;
  }

  ConceptExpr term() {
    ConceptExpr lhs = factor();
    while (at_word("and")) {
      advance();
      lhs = ConceptExpr::conjunction(std::move(lhs), factor());
    }
    return lhs;
  }

  ConceptExpr factor() {
    const Token& t = advance();
    if (t.kind == Token::Kind::LParen) {
      ConceptExpr inner = expression();
      const Token& close = advance();
      if (close.kind != Token::Kind::RParen) throw QueryError(close.column, "expected ')'");
      return inner;
    }
    if (t.kind == Token::Kind::Word && t.text == "not") return ConceptExpr::negate(factor());
    if (t.kind != Token::Kind::Word || is_keyword(t.text)) {
      throw QueryError(t.column, t.kind == Token::Kind::End ? "expected a concept name, got end of query"
                                                            : "expected a concept name, got '" + std::string(t.text) + "'");
    }
    const auto c = parse_concept(t.text);
    if (!c) throw QueryError(t.column, "unknown concept '" + std::string(t.text) + "'");
    return ConceptExpr::atom(*c);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace

FoilQuery parse_query(std::string_view text) { return QueryParser(text).parse(); }

FoilQuery query_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
    throw QueryError(1, "structured query needs a 'rules' array");
  }
  FoilQuery query;
  for (const auto& item : doc["rules"]) {
    if (!item.is_object() || !item.contains("action") || !item["action"].is_string()) {
      throw QueryError(1, "every rule needs an 'action' string");
    }
    const std::string name = item["action"].get<std::string>();
    const auto action = parse_action(name);
    if (!action) throw QueryError(1, "unknown action '" + name + "'");
    FoilRule rule;
    rule.action = *action;
    const bool has_until = item.contains("until") && !item["until"].is_null();
    const bool has_while = item.contains("while") && !item["while"].is_null();
    if (has_until && has_while) throw QueryError(1, "a rule takes at most one of 'until' and 'while'");
    if (has_until || has_while) {
      const auto& cond = item[has_until ? "until" : "while"];
      if (!cond.is_string()) throw QueryError(1, "conditions are expression strings");
      rule.guard = has_until ? Guard::Until : Guard::While;
      rule.condition = QueryParser(cond.get<std::string>()).standalone_expression();
    }
    query.rules.push_back(std::move(rule));
  }
  if (query.rules.empty()) throw QueryError(1, "query has no rules");
  return query;
}

nlohmann::json to_json(const FoilQuery& query) {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : query.rules) {
    nlohmann::json item{{"action", to_string(r.action)}};
    if (r.guard == Guard::Until) item["until"] = r.condition->to_string();
    if (r.guard == Guard::While) item["while"] = r.condition->to_string();
    rules.push_back(std::move(item));
  }
  return {{"rules", std::move(rules)}};
}

std::string to_dsl(const FoilQuery& query) {
  std::string out;
  for (const auto& r : query.rules) {
    if (!out.empty()) out += "; ";
    out += "do ";
    out += to_string(r.action);
    if (r.guard != Guard::None) {
      out += r.guard == Guard::Until ? " until " : " while ";
      out += r.condition->to_string();
    }
  }
  return out;
}

ActiveFoil active_foil_action(const FoilQuery& query, const ConceptVec& c, std::size_t cursor) {
  while (cursor < query.rules.size()) {
    const FoilRule& rule = query.rules[cursor];
    switch (rule.guard) {
      case Guard::None: {
        // The last unguarded rule stays in effect; earlier ones last one step.
        const bool last = cursor + 1 == query.rules.size();
        return {rule.action, last ? cursor : cursor + 1};
      }
      case Guard::Until:
        if (!rule.condition->evaluate(c)) return {rule.action, cursor};
        break;
      case Guard::While:
        if (rule.condition->evaluate(c)) return {rule.action, cursor};
        break;
    }
    ++cursor;
  }
  return {std::nullopt, query.rules.size()};
}

// ---------------------------------------------------------------------------
// Imposed rewards and Q_I

std::string_view to_string(FoilMode m) {
  return m == FoilMode::RewardGap ? "reward_gap" : "guarantee_adoption";
}

std::optional<FoilMode> parse_foil_mode(std::string_view name) {
  if (name == "reward_gap" || name == "reward-gap") return FoilMode::RewardGap;
  if (name == "guarantee_adoption" || name == "guarantee-adoption") return FoilMode::GuaranteeAdoption;
  return std::nullopt;
}

double agent_distance(const EnvState& a, const EnvState& b) { return manhattan(a.agent, b.agent); }

int FoilParams::effective_horizon() const {
  return horizon ? *horizon : static_cast<int>(std::ceil(3.0 * sigma));
}

void FoilParams::validate(double lambda) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
  if (!(epsilon_margin > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(lambda_f > 0.0 && lambda_f <= lambda)) throw std::invalid_argument("lambda_f must lie in (0, lambda]");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (rollouts < 0) throw std::invalid_argument("rollouts must be nonnegative");
  const int n = effective_horizon();
  if (n < 0) throw std::invalid_argument("horizon must be nonnegative");
  if (!allow_short_horizon && n < static_cast<int>(std::ceil(3.0 * sigma))) {
    throw std::invalid_argument("horizon must be at least ceil(3 sigma) = " +
                                std::to_string(static_cast<int>(std::ceil(3.0 * sigma))) +
                                " unless short horizons are explicitly allowed");
  }
  if (!distance) throw std::invalid_argument("distance function is required");
}

double rbf_weight(const EnvState& s_i, const EnvState& s_t, double sigma, const DistanceFn& distance) {
  const double ratio = distance(s_i, s_t) / sigma;
  return std::exp(-(ratio * ratio));
}

std::optional<double> expected_reward(const TransitionSource& source, const EnvState& s, Action a) {
  const auto dist = source.successors(s, a);
  if (!dist) return std::nullopt;
  double total = 0.0;
  for (const auto& succ : *dist) total += succ.probability * succ.reward;
  return total;
}

double scaled_gap(double gap, const EnvState& s_i, const EnvState& s_t, const FoilParams& params, double lambda) {
  const double weight = rbf_weight(s_i, s_t, params.sigma, params.distance);
  return (params.lambda_f / lambda) * weight * gap * (1.0 + params.epsilon_margin);
}

double imposed_reward(const EnvState& s_i, Action a_f, Action a_t, const EnvState& s_t, const FoilParams& params,
                      const RewardFn& reward, double lambda) {
  return scaled_gap(reward(s_i, a_f) - reward(s_i, a_t), s_i, s_t, params, lambda);
}

FoilTraining train_qi(const QTable& q_t, const FoilQuery& query, const EnvState& s_t, const FoilParams& params,
                      const GridWorld& world, const TransitionSource& transitions, const Translator& translator,
                      double lambda) {
  params.validate(lambda);
  const int horizon = params.effective_horizon();
  FoilTraining out;
  Rng rng(params.seed);

  // Unknown rewards surface as nullopt and end the episode.
  auto gap_at = [&](const EnvState& s, Action a_f, Action a_t) -> std::optional<double> {
    if (params.mode == FoilMode::GuaranteeAdoption) {
      const FeatureVec f = world.features(s);
      return q_t.get(f, a_t) - q_t.get(f, a_f);
    }
    const auto r_f = expected_reward(transitions, s, a_f);
    const auto r_t = expected_reward(transitions, s, a_t);
    if (!r_f || !r_t) return std::nullopt;
    return *r_f - *r_t;
  };

  for (int episode = 0; episode < params.rollouts; ++episode) {
    ++out.episodes;
    EnvState s = s_t;
    std::size_t cursor = 0;
    for (int t = 0; t < horizon && !s.terminated(); ++t) {
      const FeatureVec f = world.features(s);
      const Action a_t = greedy_action(q_t.values(f));
      const ActiveFoil active = active_foil_action(query, translator.concepts(s), cursor);
      cursor = active.cursor;
      const Action action = active.action.value_or(a_t);

      std::optional<double> imposed;
      if (active.action) {
        const auto gap = gap_at(s, *active.action, a_t);
        if (!gap) {
          ++out.truncated_episodes;
          break;
        }
        imposed = scaled_gap(*gap, s, s_t, params, lambda);
      }

      const auto dist = transitions.successors(s, action);
      if (!dist) {
        ++out.truncated_episodes;
        break;
      }
      const EnvState next = sample(*dist, rng.uniform()).state;
      if (imposed) {
        q_update(out.q_i, f, action, *imposed, world.features(next), next.terminated(), params.alpha,
                 params.lambda_f);
      }
      s = next;
    }
  }
  return out;
}

QTable compose_qf(const QTable& q_t, const QTable& q_i) {
  QTable q_f(q_t.default_value() + q_i.default_value());
  auto add_row = [&](const FeatureVec& f) {
    if (q_f.contains(f)) return;
    const ActionValues a = q_t.values(f);
    const ActionValues b = q_i.values(f);
    for (Action act : kActions) q_f.set(f, act, at(a, act) + at(b, act));
  };
  for (const auto& [f, v] : q_t.rows()) add_row(f);
  for (const auto& [f, v] : q_i.rows()) add_row(f);
  return q_f;
}

std::function<Action(const FeatureVec&)> foil_policy(const QTable& q_f) {
  return [q = std::make_shared<const QTable>(q_f)](const FeatureVec& f) { return greedy_action(q->values(f)); };
}

}  // namespace cxrl
