#include "cxrl/gridworld.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "cxrl/format.hpp"

namespace cxrl {

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Left: return "Left";
    case Action::Right: return "Right";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  };
  const std::string key = lower(name);
  for (Action a : kActions) {
    if (lower(to_string(a)) == key) return a;
  }
  return std::nullopt;
}

Coord offset(Action a) {
  switch (a) {
    case Action::Up: return {0, 1};
    case Action::Down: return {0, -1};
    case Action::Left: return {-1, 0};
    case Action::Right: return {1, 0};
  }
  return {0, 0};
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Running: return "Running";
    case Status::AtGoal: return "AtGoal";
    case Status::InTrap: return "InTrap";
    case Status::CaughtByMonster: return "CaughtByMonster";
  }
  return "?";
}

std::optional<Status> parse_status(std::string_view name) {
  for (Status s : {Status::Running, Status::AtGoal, Status::InTrap, Status::CaughtByMonster}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

ParseError::ParseError(int line, int column, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

// ---------------------------------------------------------------------------
// Grid file parsing

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct LineReader {
  std::vector<std::string_view> lines;

  explicit LineReader(std::string_view text) {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      lines.push_back(text.substr(pos, end - pos));
      pos = end + 1;
    }
  }
};

int column_of(std::string_view line, std::string_view part) {
  return static_cast<int>(part.data() - line.data()) + 1;
}

template <typename T>
T parse_number(std::string_view field, int line, int column) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw ParseError(line, column, "expected a number, got '" + std::string(field) + "'");
  }
  return value;
}

Rect parse_rect(std::string_view value, std::string_view line, int line_no) {
  std::array<int, 4> v{};
  std::size_t i = 0;
  while (true) {
    std::size_t comma = value.find(',');
    std::string_view part = trim(value.substr(0, comma));
    if (i >= v.size()) throw ParseError(line_no, column_of(line, part), "zone takes four integers");
    v[i++] = parse_number<int>(part, line_no, column_of(line, part));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (i != v.size()) throw ParseError(line_no, column_of(line, value), "zone takes four integers");
  return {std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]), std::max(v[1], v[3])};
}

}  // namespace

GridLayout load_layout(std::string_view text) {
  GridLayout layout;
  const LineReader reader(text);
  std::optional<int> width;
  std::optional<int> height;
  std::vector<Vocabulary::ConceptEntry> concepts;
  std::vector<Vocabulary::OutcomeEntry> outcomes;

  std::size_t i = 0;
  bool saw_map = false;
  for (; i < reader.lines.size(); ++i) {
    const std::string_view raw = reader.lines[i];
    const int line_no = static_cast<int>(i) + 1;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError(line_no, column_of(raw, line), "expected 'key: value'");
    }
    const std::string_view key = trim(line.substr(0, colon));
    const std::string_view value = trim(line.substr(colon + 1));
    const int vcol = column_of(raw, value);
    if (key == "map") {
      saw_map = true;
      ++i;
      break;
    } else if (key == "width") {
      width = parse_number<int>(value, line_no, vcol);
    } else if (key == "height") {
      height = parse_number<int>(value, line_no, vcol);
    } else if (key == "zone") {
      layout.zone = parse_rect(value, raw, line_no);
    } else if (key == "p_intent") {
      layout.p_intent = parse_number<double>(value, line_no, vcol);
    } else if (key == "step_penalty") {
      layout.rewards.step_penalty = parse_number<double>(value, line_no, vcol);
    } else if (key == "forest_penalty") {
      layout.rewards.forest_penalty = parse_number<double>(value, line_no, vcol);
    } else if (key == "terminal_penalty") {
      layout.rewards.terminal_penalty = parse_number<double>(value, line_no, vcol);
    } else if (key == "goal_reward") {
      layout.rewards.goal_reward = parse_number<double>(value, line_no, vcol);
    } else if (key == "concept") {
      // concept: <id> = <phrase>
      const std::size_t eq = value.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, vcol, "expected 'concept: <id> = <phrase>'");
      const std::string_view id = trim(value.substr(0, eq));
      const auto c = parse_concept(id);
      if (!c) throw ParseError(line_no, column_of(raw, id), "unknown concept '" + std::string(id) + "'");
      concepts.push_back({*c, std::string(trim(value.substr(eq + 1)))});
    } else if (key == "outcome") {
      // outcome: <id> <+|-> = <phrase>
      const std::size_t eq = value.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, vcol, "expected 'outcome: <id> <+|-> = <phrase>'");
      std::string_view head = trim(value.substr(0, eq));
      if (head.empty() || (head.back() != '+' && head.back() != '-')) {
        throw ParseError(line_no, vcol, "outcome needs a '+' or '-' valence flag");
      }
      const Valence valence = head.back() == '+' ? Valence::Positive : Valence::Negative;
      const std::string_view id = trim(head.substr(0, head.size() - 1));
      const auto o = parse_outcome(id);
      if (!o) throw ParseError(line_no, column_of(raw, id), "unknown outcome '" + std::string(id) + "'");
      outcomes.push_back({*o, std::string(trim(value.substr(eq + 1))), valence});
    } else {
      throw ParseError(line_no, column_of(raw, key), "unknown key '" + std::string(key) + "'");
    }
  }
  const int last_line = static_cast<int>(reader.lines.size());
  if (!saw_map) throw ParseError(last_line, 1, "missing 'map:' section");
  if (!width) throw ParseError(last_line, 1, "missing 'width:'");
  if (!height) throw ParseError(last_line, 1, "missing 'height:'");
  if (*width <= 0 || *height <= 0) throw ValidationError("width and height must be positive");
  layout.width = *width;
  layout.height = *height;

  std::vector<std::pair<std::string_view, int>> rows;
  for (; i < reader.lines.size(); ++i) {
    std::string_view row = reader.lines[i];
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (trim(row).empty()) continue;
    rows.emplace_back(row, static_cast<int>(i) + 1);
  }
  if (static_cast<int>(rows.size()) != layout.height) {
    throw ParseError(rows.empty() ? last_line : rows.back().second, 1,
                     "map has " + std::to_string(rows.size()) + " rows, expected " +
                         std::to_string(layout.height));
  }

  bool seen_start = false;
  bool seen_goal = false;
  for (int r = 0; r < layout.height; ++r) {
    const auto [row, line_no] = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != layout.width) {
      throw ParseError(line_no, 1,
                       "row has " + std::to_string(row.size()) + " tiles, expected " +
                           std::to_string(layout.width));
    }
    // First row in the file is the top of the world.
    const int y = layout.height - 1 - r;
    for (int x = 0; x < layout.width; ++x) {
      const Coord c{x, y};
      const int col = x + 1;
      switch (row[static_cast<std::size_t>(x)]) {
        case '.': break;
        case 'S':
          if (seen_start) throw ParseError(line_no, col, "more than one start tile");
          seen_start = true;
          layout.start = c;
          break;
        case 'G':
          if (seen_goal) throw ParseError(line_no, col, "more than one goal tile");
          seen_goal = true;
          layout.goal = c;
          break;
        case 'F': layout.forests.insert(c); break;
        case 'T': layout.traps.insert(c); break;
        case 'M':
          if (layout.monster_start) throw ParseError(line_no, col, "more than one monster");
          layout.monster_start = c;
          break;
        default:
          throw ParseError(line_no, col,
                           std::string("unexpected tile '") + row[static_cast<std::size_t>(x)] + "'");
      }
    }
  }
  if (!seen_start) throw ParseError(last_line, 1, "map has no start tile 'S'");
  if (!seen_goal) throw ParseError(last_line, 1, "map has no goal tile 'G'");

  Vocabulary defaults = Vocabulary::defaults();
  for (const auto& d : defaults.concepts) {
    if (std::none_of(concepts.begin(), concepts.end(), [&](const auto& e) { return e.id == d.id; })) {
      concepts.push_back(d);
    }
  }
  for (const auto& d : defaults.outcomes) {
    if (std::none_of(outcomes.begin(), outcomes.end(), [&](const auto& e) { return e.id == d.id; })) {
      outcomes.push_back(d);
    }
  }
  layout.vocabulary.concepts = std::move(concepts);
  layout.vocabulary.outcomes = std::move(outcomes);

  validate(layout);
  return layout;
}

GridLayout load_layout_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_layout(buffer.str());
}

void validate(const GridLayout& l) {
  if (l.width <= 0 || l.height <= 0) throw ValidationError("width and height must be positive");
  if (!l.in_bounds(l.start)) throw ValidationError("start outside bounds");
  if (!l.in_bounds(l.goal)) throw ValidationError("goal outside bounds");
  if (l.start == l.goal) throw ValidationError("start equals goal");
  if (l.traps.contains(l.goal)) throw ValidationError("goal on a trap");
  for (Coord t : l.traps) {
    if (!l.in_bounds(t)) throw ValidationError("trap outside bounds");
    if (!l.in_zone(t)) throw ValidationError("trap outside zone");
  }
  for (Coord f : l.forests) {
    if (!l.in_bounds(f)) throw ValidationError("forest outside bounds");
  }
  if (l.monster_start && !l.in_zone(*l.monster_start)) throw ValidationError("monster outside zone");
  if (l.zone && (!l.in_bounds({l.zone->x1, l.zone->y1}) || !l.in_bounds({l.zone->x2, l.zone->y2}))) {
    throw ValidationError("zone outside bounds");
  }
  if (!(l.p_intent > 0.0 && l.p_intent <= 1.0)) throw ValidationError("p_intent must lie in (0, 1]");
  const RewardConfig& r = l.rewards;
  if (!(r.step_penalty < 0.0)) throw ValidationError("step_penalty must be negative");
  if (!(r.forest_penalty < r.step_penalty)) throw ValidationError("forest_penalty must be below step_penalty");
  if (!(r.terminal_penalty < r.forest_penalty)) throw ValidationError("terminal_penalty must be below forest_penalty");
  if (!(r.goal_reward > 0.0)) throw ValidationError("goal_reward must be positive");
  if (l.vocabulary.concepts.size() != kConceptCount || l.vocabulary.outcomes.size() != kOutcomeCount) {
    throw ValidationError("vocabulary must name every concept and outcome exactly once");
  }
}

std::string to_grid_text(const GridLayout& l) {
  std::ostringstream out;
  out << "width: " << l.width << '\n';
  out << "height: " << l.height << '\n';
  if (l.zone) out << "zone: " << l.zone->x1 << ',' << l.zone->y1 << ',' << l.zone->x2 << ',' << l.zone->y2 << '\n';
  out << "p_intent: " << format_double(l.p_intent) << '\n';
  out << "step_penalty: " << format_double(l.rewards.step_penalty) << '\n';
  out << "forest_penalty: " << format_double(l.rewards.forest_penalty) << '\n';
  out << "terminal_penalty: " << format_double(l.rewards.terminal_penalty) << '\n';
  out << "goal_reward: " << format_double(l.rewards.goal_reward) << '\n';
  if (l.vocabulary != Vocabulary::defaults()) {
    for (const auto& c : l.vocabulary.concepts) out << "concept: " << concept_id(c.id) << " = " << c.phrase << '\n';
    for (const auto& o : l.vocabulary.outcomes) {
      out << "outcome: " << outcome_id(o.id) << (o.valence == Valence::Positive ? " +" : " -") << " = " << o.phrase
          << '\n';
    }
  }
  out << "map:\n";
  for (int y = l.height - 1; y >= 0; --y) {
    for (int x = 0; x < l.width; ++x) {
      const Coord c{x, y};
      char ch = '.';
      if (c == l.start) ch = 'S';
      else if (c == l.goal) ch = 'G';
      else if (l.monster_start && c == *l.monster_start) ch = 'M';
      else if (l.traps.contains(c)) ch = 'T';
      else if (l.forests.contains(c)) ch = 'F';
      out << ch;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// States

std::string encode_state(const EnvState& s) {
  std::string out = std::to_string(s.agent.x) + ',' + std::to_string(s.agent.y) + ';';
  out += s.monster ? std::to_string(s.monster->x) + ',' + std::to_string(s.monster->y) : "-";
  out += ';';
  out += to_string(s.status);
  return out;
}

EnvState decode_state(std::string_view text) {
  auto fail = [&] { return std::invalid_argument("malformed state encoding '" + std::string(text) + "'"); };
  auto coord = [&](std::string_view part) {
    const std::size_t comma = part.find(',');
    if (comma == std::string_view::npos) throw fail();
    Coord c;
    auto r1 = std::from_chars(part.data(), part.data() + comma, c.x);
    auto r2 = std::from_chars(part.data() + comma + 1, part.data() + part.size(), c.y);
    if (r1.ec != std::errc() || r2.ec != std::errc() || r2.ptr != part.data() + part.size()) throw fail();
    return c;
  };
  const std::size_t a = text.find(';');
  const std::size_t b = a == std::string_view::npos ? a : text.find(';', a + 1);
  if (b == std::string_view::npos) throw fail();
  EnvState s;
  s.agent = coord(text.substr(0, a));
  const std::string_view m = text.substr(a + 1, b - a - 1);
  if (m != "-") s.monster = coord(m);
  const auto status = parse_status(text.substr(b + 1));
  if (!status) throw fail();
  s.status = *status;
  return s;
}

std::size_t FeatureVecHash::operator()(const FeatureVec& f) const noexcept {
  std::size_t h = std::hash<int>{}(f.x);
  h = h * 1000003u ^ std::hash<int>{}(f.y);
  return h * 31u + (f.adj_forest ? 1u : 0u) + (f.adj_monster ? 2u : 0u) + (f.adj_trap ? 4u : 0u);
}

// ---------------------------------------------------------------------------
// Dynamics

GridWorld::GridWorld(GridLayout layout) : layout_(std::move(layout)) { validate(layout_); }

EnvState GridWorld::initial_state() const {
  EnvState s;
  s.agent = layout_.start;
  s.monster = layout_.monster_start;
  s.status = classify(s.agent, s.monster);
  return s;
}

Status GridWorld::classify(Coord agent, const std::optional<Coord>& monster) const {
  if (agent == layout_.goal) return Status::AtGoal;
  if (layout_.is_trap(agent)) return Status::InTrap;
  if (monster && manhattan(agent, *monster) <= 1) return Status::CaughtByMonster;
  return Status::Running;
}

EnvState GridWorld::resolve(const EnvState& from, Coord agent_tile) const {
  EnvState next;
  next.agent = agent_tile;
  next.monster = from.monster;
  next.step_count = from.step_count + 1;
  if (agent_tile != layout_.goal && !layout_.is_trap(agent_tile) && next.monster &&
      layout_.in_zone(agent_tile) && manhattan(agent_tile, *next.monster) > 1) {
    // Pursuit: one tile along the axis with the larger gap, x on ties. Both
    // endpoints are inside the rectangular zone, so the monster stays in it.
    Coord& m = *next.monster;
    const int dx = agent_tile.x - m.x;
    const int dy = agent_tile.y - m.y;
    if (std::abs(dx) >= std::abs(dy)) {
      m.x += dx > 0 ? 1 : -1;
    } else {
      m.y += dy > 0 ? 1 : -1;
    }
  }
  next.status = classify(next.agent, next.monster);
  return next;
}

double GridWorld::reward_for(const EnvState& next) const {
  const RewardConfig& r = layout_.rewards;
  double reward = r.step_penalty;
  if (layout_.is_forest(next.agent)) reward += r.forest_penalty;
  if (next.status == Status::InTrap || next.status == Status::CaughtByMonster) reward += r.terminal_penalty;
  if (next.status == Status::AtGoal) reward += r.goal_reward;
  return reward;
}

Distribution GridWorld::true_transition(const EnvState& state, Action action) const {
  if (state.terminated()) return {{state, 1.0, 0.0}};

  std::array<std::pair<Action, double>, 3> branches{};
  const double slip = (1.0 - layout_.p_intent) / 2.0;
  branches[0] = {action, layout_.p_intent};
  if (action == Action::Up || action == Action::Down) {
    branches[1] = {Action::Left, slip};
    branches[2] = {Action::Right, slip};
  } else {
    branches[1] = {Action::Up, slip};
    branches[2] = {Action::Down, slip};
  }

  Distribution dist;
  for (const auto& [move, p] : branches) {
    if (p <= 0.0) continue;
    const Coord d = offset(move);
    Coord tile{state.agent.x + d.x, state.agent.y + d.y};
    if (!layout_.in_bounds(tile)) tile = state.agent;
    EnvState next = resolve(state, tile);
    auto it = std::find_if(dist.begin(), dist.end(), [&](const Successor& s) { return s.state == next; });
    if (it != dist.end()) {
      it->probability += p;
    } else {
      const double reward = reward_for(next);
      dist.push_back({next, p, reward});
    }
  }
  std::sort(dist.begin(), dist.end(), [](const Successor& a, const Successor& b) { return a.state < b.state; });
  return dist;
}

const Successor& sample(const Distribution& dist, double u) {
  double acc = 0.0;
  for (const auto& s : dist) {
    acc += s.probability;
    if (u < acc) return s;
  }
  return dist.back();
}

std::pair<EnvState, double> GridWorld::step(const EnvState& state, Action action, Rng& rng) const {
  if (state.terminated()) return {state, 0.0};
  const Distribution dist = true_transition(state, action);
  const Successor& s = sample(dist, rng.uniform());
  return {s.state, s.reward};
}

FeatureVec GridWorld::features(const EnvState& state) const {
  FeatureVec f;
  f.x = state.agent.x;
  f.y = state.agent.y;
  for (Action a : kActions) {
    const Coord d = offset(a);
    const Coord n{state.agent.x + d.x, state.agent.y + d.y};
    if (!layout_.in_bounds(n)) continue;
    f.adj_forest = f.adj_forest || layout_.is_forest(n);
    f.adj_trap = f.adj_trap || layout_.is_trap(n);
  }
  f.adj_monster = state.monster && manhattan(state.agent, *state.monster) <= 1;
  return f;
}

}  // namespace cxrl
