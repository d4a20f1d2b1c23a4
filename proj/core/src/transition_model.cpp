#include "cxrl/transition_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cxrl/format.hpp"

namespace cxrl {

EmpiricalModel::EmpiricalModel(double smoothing) : smoothing_(smoothing) {
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw std::invalid_argument("smoothing must be a nonnegative finite number");
  }
}

void EmpiricalModel::record(const EnvState& s, Action a, const EnvState& next, std::uint64_t count) {
  EnvState key = s;
  key.step_count = 0;
  EnvState succ = next;
  succ.step_count = 0;
  table_[{key, a}][succ] += count;
}

std::optional<std::map<EnvState, double>> EmpiricalModel::predict(const EnvState& s, Action a) const {
  auto it = table_.find({s, a});
  if (it == table_.end() || it->second.empty()) return std::nullopt;
  const Counts& counts = it->second;
  double total = 0.0;
  for (const auto& [succ, n] : counts) total += static_cast<double>(n) + smoothing_;
  std::map<EnvState, double> out;
  for (const auto& [succ, n] : counts) {
    EnvState next = succ;
    next.step_count = s.step_count + 1;
    out.emplace(next, (static_cast<double>(n) + smoothing_) / total);
  }
  return out;
}

std::uint64_t EmpiricalModel::total_samples() const {
  std::uint64_t n = 0;
  for (const auto& [key, counts] : table_) {
    for (const auto& [succ, c] : counts) n += c;
  }
  return n;
}

std::string serialize(const EmpiricalModel& m) {
  std::ostringstream out;
  out << "tmodel v1\n";
  out << "smoothing " << format_double(m.smoothing()) << '\n';
  for (const auto& [key, counts] : m.table()) {
    for (const auto& [succ, n] : counts) {
      out << encode_state(key.first) << '|' << to_string(key.second) << '|' << encode_state(succ) << '|' << n << '\n';
    }
  }
  return out.str();
}

EmpiricalModel deserialize_tmodel(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 1;
  auto fail = [&](const std::string& why) {
    return std::runtime_error("tmodel line " + std::to_string(line_no) + ": " + why);
  };
  if (!std::getline(in, line) || line != "tmodel v1") throw fail("expected header 'tmodel v1'");
  ++line_no;
  if (!std::getline(in, line) || !line.starts_with("smoothing ")) throw fail("expected 'smoothing <value>'");
  EmpiricalModel model(parse_double(std::string_view(line).substr(10)));
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string_view, 4> parts;
    std::string_view rest = line;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const std::size_t bar = rest.find('|');
      if ((bar == std::string_view::npos) != (i + 1 == parts.size())) throw fail("expected four '|' fields");
      parts[i] = rest.substr(0, bar);
      if (bar != std::string_view::npos) rest.remove_prefix(bar + 1);
    }
    const auto action = parse_action(parts[1]);
    if (!action) throw fail("unknown action");
    std::uint64_t count = 0;
    try {
      count = std::stoull(std::string(parts[3]));
      model.record(decode_state(parts[0]), *action, decode_state(parts[2]), count);
    } catch (const std::exception& e) {
      throw fail(e.what());
    }
  }
  return model;
}

void save_tmodel(const EmpiricalModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize(m);
}

EmpiricalModel load_tmodel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_tmodel(buffer.str());
}

std::optional<Distribution> LearnedTransitions::successors(const EnvState& state, Action action) const {
  if (state.terminated()) return Distribution{{state, 1.0, 0.0}};
  auto predicted = model_->predict(state, action);
  if (!predicted) {
    if (fallback_ != nullptr) return fallback_->successors(state, action);
    return std::nullopt;
  }
  Distribution dist;
  dist.reserve(predicted->size());
  for (const auto& [next, p] : *predicted) dist.push_back({next, p, world_->reward_for(next)});
  return dist;
}

void explore(const GridWorld& world, EmpiricalModel& model, int episodes, int max_steps, std::uint64_t seed) {
  Rng rng(seed);
  for (int e = 0; e < episodes; ++e) {
    EnvState s = world.initial_state();
    for (int t = 0; t < max_steps && !s.terminated(); ++t) {
      const Action a = kActions[rng.below(kActions.size())];
      auto [next, reward] = world.step(s, a, rng);
      model.record(s, a, next);
      s = next;
    }
  }
}

double total_variation(const std::map<EnvState, double>& p, const std::map<EnvState, double>& q) {
  std::set<EnvState> support;
  for (const auto& [s, v] : p) support.insert(s);
  for (const auto& [s, v] : q) support.insert(s);
  double sum = 0.0;
  for (const auto& s : support) {
    const auto ip = p.find(s);
    const auto iq = q.find(s);
    const double a = ip == p.end() ? 0.0 : ip->second;
    const double b = iq == q.end() ? 0.0 : iq->second;
    sum += std::abs(a - b);
  }
  return 0.5 * sum;
}

std::map<EnvState, double> as_map(const Distribution& d) {
  std::map<EnvState, double> out;
  for (const auto& s : d) out[s.state] += s.probability;
  return out;
}

}  // namespace cxrl
