// Parametric model rules: theta -> sampled point set.

#ifndef SEGFIT_MODEL_HPP
#define SEGFIT_MODEL_HPP

#include "segfit/geom.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

using Params = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double width() const noexcept { return hi - lo; }
  [[nodiscard]] double mid() const noexcept { return 0.5 * (lo + hi); }
  [[nodiscard]] bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

enum class RuleKind { VerticalSegment };

inline std::string to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::VerticalSegment: return "vertical_segment";
  }
  return "unknown";
}

inline RuleKind rule_kind_from_string(const std::string& s) {
  if (s == "vertical_segment") return RuleKind::VerticalSegment;
  throw std::invalid_argument("unknown rule kind '" + s + "'");
}

/// A parametric rule g together with the domain of its parameter.
///
/// vertical_segment: theta = (x); the model is the segment
/// {(x, y, z_plane) : y_min <= y <= y_max} sampled every `sample_step`.
class RuleSpec {
 public:
  RuleSpec(RuleKind kind, std::vector<Interval> bounds, double sample_step, double y_min,
           double y_max, double z_plane = 0.0)
      : kind_(kind),
        bounds_(std::move(bounds)),
        step_(sample_step),
        y_min_(y_min),
        y_max_(y_max),
        z_plane_(z_plane) {
    if (kind_ == RuleKind::VerticalSegment && bounds_.size() != 1)
      throw std::invalid_argument("vertical_segment takes exactly one parameter");
    for (const auto& b : bounds_)
      if (!(b.lo < b.hi)) throw std::invalid_argument("bounds require lo < hi");
    if (!(step_ > 0.0)) throw std::invalid_argument("sample_step must be positive");
    if (!(y_min_ < y_max_)) throw std::invalid_argument("y_min must be below y_max");
  }

  static RuleSpec vertical_segment(Interval x_bounds, double sample_step, double y_min,
                                   double y_max, double z_plane = 0.0) {
    return RuleSpec(RuleKind::VerticalSegment, {x_bounds}, sample_step, y_min, y_max, z_plane);
  }

  [[nodiscard]] RuleKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dim() const noexcept { return bounds_.size(); }
  [[nodiscard]] const std::vector<Interval>& bounds() const noexcept { return bounds_; }
  [[nodiscard]] double sample_step() const noexcept { return step_; }
  [[nodiscard]] double y_min() const noexcept { return y_min_; }
  [[nodiscard]] double y_max() const noexcept { return y_max_; }
  [[nodiscard]] double z_plane() const noexcept { return z_plane_; }

  /// Points per sampled model.
  [[nodiscard]] std::size_t samples_per_model() const noexcept {
    return static_cast<std::size_t>(std::floor((y_max_ - y_min_) / step_)) + 1;
  }

  [[nodiscard]] bool in_bounds(std::span<const double> theta) const noexcept {
    if (theta.size() != bounds_.size()) return false;
    for (std::size_t k = 0; k < theta.size(); ++k)
      if (!bounds_[k].contains(theta[k])) return false;
    return true;
  }

  void check(std::span<const double> theta) const {
    if (theta.size() != bounds_.size())
      throw std::invalid_argument("theta has " + std::to_string(theta.size()) +
                                  " components, rule expects " + std::to_string(bounds_.size()));
    if (!in_bounds(theta)) throw std::domain_error("theta outside rule bounds");
  }

 private:
  RuleKind kind_;
  std::vector<Interval> bounds_;
  double step_;
  double y_min_, y_max_, z_plane_;
};

/// Ordered tuple (theta_1 ... theta_n).
struct Solution {
  std::vector<Params> thetas;

  [[nodiscard]] std::size_t n() const noexcept { return thetas.size(); }

  [[nodiscard]] Params flatten() const {
    Params out;
    for (const auto& t : thetas) out.insert(out.end(), t.begin(), t.end());
    return out;
  }

  static Solution unflatten(std::span<const double> flat, std::size_t d) {
    if (d == 0 || flat.size() % d != 0)
      throw std::invalid_argument("flat vector length not a multiple of d");
    Solution s;
    for (std::size_t i = 0; i < flat.size(); i += d)
      s.thetas.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(i),
                            flat.begin() + static_cast<std::ptrdiff_t>(i + d));
    return s;
  }

  friend bool operator==(const Solution&, const Solution&) = default;
};

inline void append_model(PointSet& out, const RuleSpec& rule, std::span<const double> theta) {
  rule.check(theta);
  switch (rule.kind()) {
    case RuleKind::VerticalSegment: {
      const std::size_t count = rule.samples_per_model();
      for (std::size_t j = 0; j < count; ++j)
        out.push_back({theta[0], rule.y_min() + static_cast<double>(j) * rule.sample_step(),
                       rule.z_plane()});
      break;
    }
  }
}

inline PointSet sample_model(const RuleSpec& rule, std::span<const double> theta) {
  PointSet out;
  out.reserve(rule.samples_per_model());
  append_model(out, rule, theta);
  return out;
}

/// Concatenation of per-model samples, model 1 first. Duplicates are kept.
inline PointSet sample_union(const RuleSpec& rule, std::span<const Params> thetas) {
  PointSet out;
  out.reserve(rule.samples_per_model() * thetas.size());
  for (const auto& t : thetas) append_model(out, rule, t);
  return out;
}

inline PointSet sample_union(const RuleSpec& rule, const Solution& solution) {
  return sample_union(rule, std::span<const Params>(solution.thetas));
}

inline Params clamp_to_bounds(const RuleSpec& rule, std::span<const double> theta) {
  if (theta.size() != rule.dim()) throw std::invalid_argument("theta dimension mismatch");
  Params out(theta.begin(), theta.end());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = std::clamp(out[k], rule.bounds()[k].lo, rule.bounds()[k].hi);
  return out;
}

/// Data x-extent widened by 5% of its width on each side.
inline Interval default_x_bounds(const PointSet& data) {
  const auto [lo, hi] = bounding_box(data);
  double w = hi.x() - lo.x();
  if (w <= 0.0) w = 1.0;
  return {lo.x() - 0.05 * w, hi.x() + 0.05 * w};
}

}  // namespace segfit

#endif  // SEGFIT_MODEL_HPP
