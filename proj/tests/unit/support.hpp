#pragma once

#include <string>

#include "cxrl/gridworld.hpp"

namespace cxrl::testing {

inline std::string data_path(const std::string& name) { return std::string(CXRL_DATA_DIR) + "/" + name; }

inline GridLayout layout_of(const std::string& name) { return load_layout_file(data_path(name)); }

inline EnvState running(int x, int y, std::optional<Coord> monster = std::nullopt) {
  EnvState s;
  s.agent = {x, y};
  s.monster = monster;
  return s;
}

/// An open layout with no hazards, start at the origin and goal in the far corner.
inline GridLayout open_layout(int w, int h, double p_intent = 1.0) {
  GridLayout l;
  l.width = w;
  l.height = h;
  l.start = {0, 0};
  l.goal = {w - 1, h - 1};
  l.p_intent = p_intent;
  l.vocabulary = Vocabulary::defaults();
  return l;
}

}  // namespace cxrl::testing
