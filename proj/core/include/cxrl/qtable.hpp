#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "cxrl/gridworld.hpp"

namespace cxrl {

using ActionValues = std::array<double, 4>;

inline double& at(ActionValues& v, Action a) { return v[static_cast<std::size_t>(a)]; }
inline double at(const ActionValues& v, Action a) { return v[static_cast<std::size_t>(a)]; }

/// Tabular state-action values keyed by FeatureVec. Rows are created on first
/// write; every read of an absent row yields default_value for all actions.
class QTable {
 public:
  using Rows = std::map<FeatureVec, ActionValues>;

  explicit QTable(double default_value = 0.0);

  double default_value() const { return default_value_; }

  double get(const FeatureVec& f, Action a) const;
  ActionValues values(const FeatureVec& f) const;
  bool contains(const FeatureVec& f) const { return rows_.contains(f); }

  /// Throws std::invalid_argument for non-finite values.
  void set(const FeatureVec& f, Action a, double value);

  const Rows& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  double default_value_;
  Rows rows_;
};

/// Text artifact: a "qtab v1" header, the default value, then one
/// "x y adj_forest adj_monster adj_trap Action value" row per entry. Values are
/// written in shortest round-trip form, so load(save(q)) == q bit for bit.
std::string serialize(const QTable& q);
QTable deserialize_qtable(std::string_view text);
void save_qtable(const QTable& q, const std::string& path);
QTable load_qtable(const std::string& path);

}  // namespace cxrl
