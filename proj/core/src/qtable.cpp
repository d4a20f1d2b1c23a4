#include "cxrl/qtable.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cxrl/format.hpp"

namespace cxrl {

QTable::QTable(double default_value) : default_value_(default_value) {
  if (!std::isfinite(default_value)) throw std::invalid_argument("QTable default value must be finite");
}

double QTable::get(const FeatureVec& f, Action a) const {
  auto it = rows_.find(f);
  return it == rows_.end() ? default_value_ : at(it->second, a);
}

ActionValues QTable::values(const FeatureVec& f) const {
  auto it = rows_.find(f);
  if (it == rows_.end()) return {default_value_, default_value_, default_value_, default_value_};
  return it->second;
}

void QTable::set(const FeatureVec& f, Action a, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("QTable values must be finite");
  auto [it, inserted] = rows_.try_emplace(f);
  if (inserted) it->second.fill(default_value_);
  at(it->second, a) = value;
}

std::string serialize(const QTable& q) {
  std::ostringstream out;
  out << "qtab v1\n";
  out << "default " << format_double(q.default_value()) << '\n';
  for (const auto& [f, values] : q.rows()) {
    for (Action a : kActions) {
      out << f.x << ' ' << f.y << ' ' << int(f.adj_forest) << ' ' << int(f.adj_monster) << ' ' << int(f.adj_trap)
          << ' ' << to_string(a) << ' ' << format_double(at(values, a)) << '\n';
    }
  }
  return out.str();
}

QTable deserialize_qtable(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    return std::runtime_error("qtab line " + std::to_string(line_no) + ": " + why);
  };

  ++line_no;
  if (!std::getline(in, line) || line != "qtab v1") throw fail("expected header 'qtab v1'");
  ++line_no;
  std::string key;
  std::string value;
  if (!std::getline(in, line)) throw fail("missing default line");
  {
    std::istringstream fields(line);
    if (!(fields >> key >> value) || key != "default") throw fail("expected 'default <value>'");
  }
  QTable q(parse_double(value));
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    FeatureVec f;
    int forest = 0;
    int monster = 0;
    int trap = 0;
    std::string action;
    if (!(fields >> f.x >> f.y >> forest >> monster >> trap >> action >> value)) throw fail("malformed row");
    f.adj_forest = forest != 0;
    f.adj_monster = monster != 0;
    f.adj_trap = trap != 0;
    const auto a = parse_action(action);
    if (!a) throw fail("unknown action '" + action + "'");
    try {
      q.set(f, *a, parse_double(value));
    } catch (const std::invalid_argument& e) {
      throw fail(e.what());
    }
  }
  return q;
}

void save_qtable(const QTable& q, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize(q);
}

QTable load_qtable(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_qtable(buffer.str());
}

}  // namespace cxrl
