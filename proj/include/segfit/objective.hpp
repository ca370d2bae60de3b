// Similarity estimator, verify function and evaluation-cost ledger.

#ifndef SEGFIT_OBJECTIVE_HPP
#define SEGFIT_OBJECTIVE_HPP

#include "segfit/geom.hpp"
#include "segfit/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

struct SimilarityConfig {
  double sigma = 0.05;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("similarity sigma must be positive");
  }
};

/// Beyond this many sigmas exp(-x^2 / 2 sigma^2) underflows to exactly 0.
inline constexpr double kKernelSupport = 39.0;

inline double gaussian_kernel(double dist, double sigma) noexcept {
  const double u = dist / sigma;
  return std::exp(-0.5 * u * u);
}

/// Twice the median nearest-neighbour spacing of `data` (0.05 when undefined).
inline double default_sigma(const PointSet& data) {
  if (data.size() < 2) return 0.05;
  const auto [lo, hi] = bounding_box(data);
  const double cell =
      std::max((hi - lo).norm() / std::cbrt(static_cast<double>(data.size())), 1e-9);
  const GridIndex index(data, cell);
  std::vector<double> nn(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) nn[i] = index.nearest_other(i);
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  const double s = 2.0 * *mid;
  return s > 0.0 ? s : 0.05;
}

/// Bundles data D, its index, the rule g, the model count n and sigma.
class Problem {
 public:
  Problem(PointSet data, RuleSpec rule, std::size_t n_models, SimilarityConfig sim)
      : data_(std::move(data)),
        rule_(std::move(rule)),
        n_(n_models),
        sim_(sim),
        index_(validated(data_, n_, sim_), sim_.sigma) {}

  [[nodiscard]] const PointSet& data() const noexcept { return data_; }
  [[nodiscard]] const GridIndex& data_index() const noexcept { return index_; }
  [[nodiscard]] const RuleSpec& rule() const noexcept { return rule_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] const SimilarityConfig& sim() const noexcept { return sim_; }

 private:
  static const PointSet& validated(const PointSet& data, std::size_t n,
                                   const SimilarityConfig& sim) {
    if (data.empty()) throw std::invalid_argument("problem data is empty");
    if (n < 1) throw std::invalid_argument("problem needs at least one model");
    sim.validate();
    return data;
  }

  PointSet data_;
  RuleSpec rule_;
  std::size_t n_;
  SimilarityConfig sim_;
  GridIndex index_;
};

namespace detail {

inline double mean_kernel(const PointSet& queries, const GridIndex& target, double sigma) {
  const double cutoff = kKernelSupport * sigma;
  double sum = 0.0;
  for (const auto& q : queries) {
    if (auto d = target.nearest_within(q, cutoff)) sum += gaussian_kernel(*d, sigma);
  }
  return sum / static_cast<double>(queries.size());
}

}  // namespace detail

/// s(M, D) = 1/2 (mean_{d in D} K(dist(d, M)) + mean_{m in M} K(dist(m, D))),
/// K(x) = exp(-x^2 / 2 sigma^2). Zero for an empty model.
inline double similarity(const PointSet& model_points, const PointSet& data,
                         const GridIndex& data_index, double sigma) {
  if (model_points.empty() || data.empty()) return 0.0;
  const GridIndex model_index(model_points, sigma);
  const double coverage = detail::mean_kernel(data, model_index, sigma);
  const double fidelity = detail::mean_kernel(model_points, data_index, sigma);
  return 0.5 * (coverage + fidelity);
}

inline double similarity(const PointSet& model_points, const Problem& problem) {
  return similarity(model_points, problem.data(), problem.data_index(), problem.sim().sigma);
}

/// Symmetric convenience form that indexes both sets.
inline double similarity(const PointSet& a, const PointSet& b, double sigma) {
  if (a.empty() || b.empty()) return 0.0;
  return similarity(a, b, GridIndex(b, sigma), sigma);
}

struct IterationCost {
  std::int64_t iteration = 0;
  std::int64_t f_evals = 0;
  double t_hypothesis = 0.0;
  double t_verify = 0.0;
};

/// Counts f-evaluations and splits wall time into hypothesis and verify parts.
///
/// With timing disabled the clocks are never read and all times stay zero,
/// which keeps serialized traces reproducible byte for byte.
class CostLedger {
 public:
  explicit CostLedger(bool timing = true) : timing_(timing) {}

  [[nodiscard]] bool timing() const noexcept { return timing_; }
  [[nodiscard]] std::int64_t f_evals() const noexcept { return f_evals_; }
  [[nodiscard]] double hypothesis_time() const noexcept { return t_h_; }
  [[nodiscard]] double verify_time() const noexcept { return t_v_; }
  [[nodiscard]] const std::vector<IterationCost>& rows() const noexcept { return rows_; }

  void count_eval(double seconds) {
    ++f_evals_;
    t_v_ += seconds;
  }
  void add_hypothesis_time(double seconds) { t_h_ += seconds; }

  /// Closes iteration `j`, attributing everything since the previous close.
  void close_iteration(std::int64_t j) {
    rows_.push_back({j, f_evals_ - mark_evals_, t_h_ - mark_h_, t_v_ - mark_v_});
    mark_evals_ = f_evals_;
    mark_h_ = t_h_;
    mark_v_ = t_v_;
  }

  /// Scoped wall-clock measurement; yields 0 when timing is off.
  class Stopwatch {
   public:
    explicit Stopwatch(bool on) : on_(on) {
      if (on_) start_ = std::chrono::steady_clock::now();
    }
    [[nodiscard]] double seconds() const {
      if (!on_) return 0.0;
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    bool on_;
    std::chrono::steady_clock::time_point start_{};
  };

  [[nodiscard]] Stopwatch stopwatch() const { return Stopwatch(timing_); }

 private:
  bool timing_;
  std::int64_t f_evals_ = 0;
  double t_h_ = 0.0, t_v_ = 0.0;
  std::int64_t mark_evals_ = 0;
  double mark_h_ = 0.0, mark_v_ = 0.0;
  std::vector<IterationCost> rows_;
};

/// f(theta_1 ... theta_i); the empty prefix scores 0.
inline double verify(const Problem& problem, std::span<const Params> prefix) {
  if (prefix.size() > problem.n())
    throw std::invalid_argument("prefix longer than the number of models");
  if (prefix.empty()) return 0.0;
  return similarity(sample_union(problem.rule(), prefix), problem);
}

/// Counted form: one ledger evaluation per non-empty prefix.
inline double verify(const Problem& problem, std::span<const Params> prefix, CostLedger& ledger) {
  if (prefix.empty()) return verify(problem, prefix);
  const auto watch = ledger.stopwatch();
  const double f = verify(problem, prefix);
  ledger.count_eval(watch.seconds());
  return f;
}

inline double verify(const Problem& problem, const Solution& s) {
  return verify(problem, std::span<const Params>(s.thetas));
}

inline double verify(const Problem& problem, const Solution& s, CostLedger& ledger) {
  return verify(problem, std::span<const Params>(s.thetas), ledger);
}

/// Incremental reward r_i = f(prefix_i) - f(prefix_{i-1}).
inline double reward(double f_curr, double f_prev) noexcept { return f_curr - f_prev; }

struct CostReport {
  std::int64_t iterations = 0;
  std::int64_t f_evals = 0;
  double t_hypothesis = 0.0;
  double t_verify = 0.0;
  std::vector<IterationCost> rows;

  [[nodiscard]] double total_time() const noexcept { return t_hypothesis + t_verify; }
  /// Mean cost of one f-evaluation (t_f); zero before any evaluation.
  [[nodiscard]] double t_f() const noexcept {
    return f_evals > 0 ? t_verify / static_cast<double>(f_evals) : 0.0;
  }
  [[nodiscard]] double evals_per_iteration() const noexcept {
    return iterations > 0 ? static_cast<double>(f_evals) / static_cast<double>(iterations) : 0.0;
  }
  /// Mean hypothesis time per iteration (t^H).
  [[nodiscard]] double t_hypothesis_per_iteration() const noexcept {
    return iterations > 0 ? t_hypothesis / static_cast<double>(iterations) : 0.0;
  }
};

inline CostReport cost_report(const CostLedger& ledger) {
  return {static_cast<std::int64_t>(ledger.rows().size()), ledger.f_evals(),
          ledger.hypothesis_time(), ledger.verify_time(), ledger.rows()};
}

/// CSV columns: iteration, f_evals, t_hypothesis_s, t_verify_s.
inline void write_cost_csv(std::ostream& out, const CostReport& report) {
  out << "iteration,f_evals,t_hypothesis_s,t_verify_s\n";
  out << std::setprecision(9);
  for (const auto& r : report.rows)
    out << r.iteration << ',' << r.f_evals << ',' << r.t_hypothesis << ',' << r.t_verify << '\n';
}

inline std::vector<IterationCost> read_cost_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "iteration,f_evals,t_hypothesis_s,t_verify_s")
    throw std::runtime_error("cost CSV: unexpected header");
  std::vector<IterationCost> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    IterationCost r;
    char c1, c2, c3;
    if (!(ss >> r.iteration >> c1 >> r.f_evals >> c2 >> r.t_hypothesis >> c3 >> r.t_verify) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw std::runtime_error("cost CSV: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

}  // namespace segfit

#endif  // SEGFIT_OBJECTIVE_HPP
