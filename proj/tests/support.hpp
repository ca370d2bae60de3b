#ifndef SEGFIT_TESTS_SUPPORT_HPP
#define SEGFIT_TESTS_SUPPORT_HPP

#include "segfit/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace segfit::test {

inline Point random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  double x = u(rng), y = u(rng), z = u(rng);
  return {x, y, z};
}

inline PointSet random_points(std::mt19937_64& rng, std::size_t count, double lo, double hi) {
  PointSet out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_point(rng, lo, hi));
  return out;
}

// Same arithmetic as the index: sqrt of the minimum squared norm.
inline double brute_nearest(const PointSet& s, const Point& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : s) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

}  // namespace segfit::test

#endif
