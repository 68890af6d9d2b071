#include "crisp/core.hpp"

#include <cmath>

namespace crisp {

double l2_distance(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), Errc::dimension_mismatch,
          "l2_distance: size " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double sparse_reward(const GoalVec& achieved, const GoalVec& goal, double delta) {
  require(delta > 0.0, Errc::invalid_argument, "sparse_reward: delta must be > 0");
  return l2_distance(achieved, goal) <= delta ? 0.0 : -1.0;
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace crisp
