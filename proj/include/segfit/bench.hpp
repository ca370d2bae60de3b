// Synthetic scenes, the grid-search oracle and multi-seed experiments.

#ifndef SEGFIT_BENCH_HPP
#define SEGFIT_BENCH_HPP

#include "segfit/cs.hpp"
#include "segfit/drl.hpp"
#include "segfit/fit_result.hpp"
#include "segfit/geom.hpp"
#include "segfit/model.hpp"
#include "segfit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace segfit {

struct SceneConfig {
  std::size_t n_segments = 4;
  std::vector<double> ground_truth_x{-3.0, -1.0, 1.0, 3.0};
  double y_min = -2.0;
  double y_max = 2.0;
  double z_plane = 0.0;
  std::size_t points_per_segment = 100;
  double jitter_sigma = 0.02;
  std::size_t outlier_count = 120;
  Box outlier_box{Point(-5.0, -3.0, 0.0), Point(5.0, 3.0, 0.0)};
  std::uint64_t seed = 7;

  void validate() const {
    if (ground_truth_x.size() != n_segments)
      throw std::invalid_argument("scene.ground_truth_x must have n_segments entries");
    if (points_per_segment < 2) throw std::invalid_argument("scene.points_per_segment must be >= 2");
    if (!(y_min < y_max)) throw std::invalid_argument("scene.y_extent requires y_min < y_max");
    if (!(jitter_sigma >= 0.0)) throw std::invalid_argument("scene.jitter_sigma must be >= 0");
    for (int k = 0; k < 3; ++k)
      if (!(outlier_box.min[k] <= outlier_box.max[k]))
        throw std::invalid_argument("scene.outlier_box min must not exceed max");
  }
};

struct Scene {
  PointSet clean;
  PointSet corrupted;
  Solution truth;
};

namespace detail {
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
}  // namespace detail

/// Clean vertical segments with Gaussian x-jitter, then uniform outliers.
inline Scene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Scene scene;
  for (double x0 : cfg.ground_truth_x) {
    for (std::size_t k = 0; k < cfg.points_per_segment; ++k) {
      const double y = detail::uniform(rng, cfg.y_min, cfg.y_max);
      const double x = cfg.jitter_sigma > 0.0 ? x0 + cfg.jitter_sigma * jitter(rng) : x0;
      scene.clean.push_back({x, y, cfg.z_plane});
    }
    scene.truth.thetas.push_back({x0});
  }
  scene.corrupted = scene.clean;
  for (std::size_t k = 0; k < cfg.outlier_count; ++k) {
    Point p;
    for (int a = 0; a < 3; ++a) p[a] = detail::uniform(rng, cfg.outlier_box.min[a], cfg.outlier_box.max[a]);
    scene.corrupted.push_back(p);
  }
  return scene;
}

struct OracleResult {
  Solution solution;
  double score = 0.0;
};

/// Grid values lo, lo + step, ... <= hi (only lo when step exceeds the width).
inline std::vector<double> grid_values(const Interval& b, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const auto count = static_cast<std::size_t>(std::floor(b.width() / step + 1e-9)) + 1;
  std::vector<double> v(count);
  for (std::size_t k = 0; k < count; ++k) v[k] = std::min(b.lo + static_cast<double>(k) * step, b.hi);
  return v;
}

/// Exhaustive scan for n = 1; for n > 1 each model in turn maximizes f given
/// the already-placed prefix, a lower bound on the joint optimum.
inline OracleResult grid_oracle(const Problem& problem, double step) {
  if (problem.rule().dim() != 1)
    throw std::invalid_argument("grid_oracle supports one parameter per model only");
  const auto values = grid_values(problem.rule().bounds()[0], step);
  std::vector<Params> prefix;
  double score = 0.0;
  for (std::size_t i = 0; i < problem.n(); ++i) {
    prefix.push_back({values.front()});
    double best = -1.0, best_x = values.front();
    for (double x : values) {
      prefix.back()[0] = x;
      const double f = verify(problem, std::span<const Params>(prefix));
      if (f > best) {
        best = f;
        best_x = x;
      }
    }
    prefix.back()[0] = best_x;
    score = best;
  }
  return {Solution{prefix}, score};
}

/// Rule settings as configured; unset bounds come from the data.
struct RuleConfig {
  RuleKind kind = RuleKind::VerticalSegment;
  std::optional<std::vector<Interval>> bounds;
  double sample_step = 0.05;
  double y_min = -2.0;
  double y_max = 2.0;
  double z_plane = 0.0;

  [[nodiscard]] RuleSpec resolve(const PointSet& data) const {
    return RuleSpec(kind, bounds ? *bounds : std::vector<Interval>{default_x_bounds(data)},
                    sample_step, y_min, y_max, z_plane);
  }
};

struct ExperimentConfig {
  SceneConfig scene;
  RuleConfig rule;
  std::optional<double> sigma;  // unset: twice the median neighbour spacing
  std::optional<std::size_t> n_models;  // unset: scene.n_segments
  DrlConfig drl;
  CsConfig cs;
  std::size_t runs = 5;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  bool timing = true;

  void validate() const {
    scene.validate();
    drl.validate();
    cs.validate();
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (n_models && *n_models < 1) throw std::invalid_argument("n_models must be >= 1");
    if (sigma && !(*sigma > 0.0)) throw std::invalid_argument("similarity.sigma must be positive");
    if (rule.bounds) {
      for (double x : scene.ground_truth_x)
        if (!rule.bounds->front().contains(x))
          throw std::invalid_argument("scene.ground_truth_x lies outside rule.bounds");
    }
  }
};

inline Problem make_problem(const ExperimentConfig& cfg, PointSet data) {
  const RuleSpec rule = cfg.rule.resolve(data);
  const double sigma = cfg.sigma ? *cfg.sigma : default_sigma(data);
  const std::size_t n = cfg.n_models ? *cfg.n_models : cfg.scene.n_segments;
  return Problem(std::move(data), rule, n, SimilarityConfig{sigma});
}

inline Problem make_problem(const ExperimentConfig& cfg) {
  return make_problem(cfg, generate_scene(cfg.scene).corrupted);
}

enum class Method { Drl, Cs };

inline std::string to_string(Method m) { return m == Method::Drl ? "drl" : "cs"; }

inline Method method_from_string(const std::string& s) {
  if (s == "drl") return Method::Drl;
  if (s == "cs") return Method::Cs;
  throw std::invalid_argument("unknown method '" + s + "' (expected drl or cs)");
}

/// Runs one method with `seed`, honoring the experiment's timing switch.
inline FitResult run_method(const Problem& problem, const ExperimentConfig& cfg, Method m,
                            std::uint64_t seed) {
  if (m == Method::Drl) {
    DrlConfig c = cfg.drl;
    c.seed = seed;
    c.timing = cfg.timing;
    return fit_drl(problem, c);
  }
  CsConfig c = cfg.cs;
  c.seed = seed;
  c.timing = cfg.timing;
  return fit_cs(problem, c);
}

struct SummaryRow {
  std::string method;
  std::int64_t iteration = 0;
  double mean_score = 0.0;
  double std_score = 0.0;
  double mean_cum_f_evals = 0.0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

using TraceSummary = std::vector<SummaryRow>;

/// Sample mean and standard deviation (n - 1 denominator; 0 for one run).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Mean/std of the best-so-far score per iteration across runs.
inline TraceSummary summarize(const std::string& method, const std::vector<FitResult>& runs) {
  TraceSummary rows;
  if (runs.empty()) return rows;
  std::size_t len = runs.front().trace.size();
  for (const auto& r : runs) len = std::min(len, r.trace.size());
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> scores, evals;
    for (const auto& r : runs) {
      scores.push_back(r.trace[t].best_score);
      evals.push_back(static_cast<double>(r.trace[t].f_evals_cum));
    }
    const auto [m, s] = mean_std(scores);
    rows.push_back({method, runs.front().trace[t].iteration, m, s, mean_std(evals).first});
  }
  return rows;
}

inline constexpr const char* kSummaryHeader =
    "method,iteration,mean_score,std_score,mean_cum_f_evals";

inline void write_summary_csv(std::ostream& out, const TraceSummary& rows) {
  out << kSummaryHeader << '\n' << std::setprecision(17);
  for (const auto& r : rows)
    out << r.method << ',' << r.iteration << ',' << r.mean_score << ',' << r.std_score << ','
        << r.mean_cum_f_evals << '\n';
}

inline TraceSummary read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader)
    throw std::runtime_error("summary CSV: unexpected header");
  TraceSummary rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("summary CSV: malformed row");
    SummaryRow r;
    r.method = line.substr(0, comma);
    std::istringstream ss(line.substr(comma + 1));
    char c1, c2, c3;
    if (!(ss >> r.iteration >> c1 >> r.mean_score >> c2 >> r.std_score >> c3 >> r.mean_cum_f_evals) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw std::runtime_error("summary CSV: malformed row '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

/// Best-so-far scores of all runs at a 1-based iteration (clamped to the trace).
inline std::vector<double> scores_at(const std::vector<FitResult>& runs, std::int64_t iteration) {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (r.trace.empty()) {
      out.push_back(r.best_score);
      continue;
    }
    const auto idx = std::clamp<std::int64_t>(iteration, 1, static_cast<std::int64_t>(r.trace.size()));
    out.push_back(r.trace[static_cast<std::size_t>(idx - 1)].best_score);
  }
  return out;
}

/// Best-so-far scores once at most `evals` f-evaluations were spent.
inline std::vector<double> scores_at_evals(const std::vector<FitResult>& runs, std::int64_t evals) {
  std::vector<double> out;
  for (const auto& r : runs) {
    double s = 0.0;
    bool any = false;
    for (const auto& row : r.trace) {
      if (row.f_evals_cum > evals) break;
      s = row.best_score;
      any = true;
    }
    out.push_back(any ? s : 0.0);
  }
  return out;
}

struct ComparisonRow {
  std::string view;  // "budget" or "equal_evals"
  std::int64_t drl_iteration = 0, drl_f_evals = 0;
  double drl_median = 0.0, drl_mean = 0.0;
  std::int64_t cs_iteration = 0, cs_f_evals = 0;
  double cs_median = 0.0, cs_mean = 0.0;
};

struct ExperimentResult {
  Problem problem;
  std::vector<FitResult> drl_runs;
  std::vector<FitResult> cs_runs;
  TraceSummary summary;
  std::vector<ComparisonRow> comparison;
};

inline std::vector<ComparisonRow> compare(const ExperimentConfig& cfg,
                                          const std::vector<FitResult>& drl,
                                          const std::vector<FitResult>& cs) {
  const std::int64_t drl_evals = cfg.drl.j_max * static_cast<std::int64_t>(
                                                     cfg.n_models.value_or(cfg.scene.n_segments) + 1);
  auto row = [](std::string view, std::int64_t di, std::int64_t de, const std::vector<double>& ds,
                std::int64_t ci, std::int64_t ce, const std::vector<double>& cs_scores) {
    return ComparisonRow{std::move(view), di, de, median(ds), mean_std(ds).first,
                         ci, ce, median(cs_scores), mean_std(cs_scores).first};
  };
  std::vector<ComparisonRow> rows;
  rows.push_back(row("budget", cfg.drl.j_max, drl_evals, scores_at(drl, cfg.drl.j_max), cfg.cs.j_max,
                     cfg.cs.j_max, scores_at(cs, cfg.cs.j_max)));
  const std::int64_t cs_iter = std::min(drl_evals, cfg.cs.j_max);
  rows.push_back(row("equal_evals", cfg.drl.j_max, drl_evals, scores_at(drl, cfg.drl.j_max), cs_iter,
                     cs_iter, scores_at_evals(cs, cs_iter)));
  return rows;
}

inline void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "view,drl_iteration,drl_f_evals,drl_median_score,drl_mean_score,"
         "cs_iteration,cs_f_evals,cs_median_score,cs_mean_score\n"
      << std::setprecision(17);
  for (const auto& r : rows)
    out << r.view << ',' << r.drl_iteration << ',' << r.drl_f_evals << ',' << r.drl_median << ','
        << r.drl_mean << ',' << r.cs_iteration << ',' << r.cs_f_evals << ',' << r.cs_median << ','
        << r.cs_mean << '\n';
}

inline std::vector<ComparisonRow> read_comparison_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "view,drl_iteration,drl_f_evals,drl_median_score,drl_mean_score,"
              "cs_iteration,cs_f_evals,cs_median_score,cs_mean_score")
    throw std::runtime_error("comparison CSV: unexpected header");
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    ComparisonRow r;
    if (!(ss >> r.view >> r.drl_iteration >> r.drl_f_evals >> r.drl_median >> r.drl_mean >>
          r.cs_iteration >> r.cs_f_evals >> r.cs_median >> r.cs_mean))
      throw std::runtime_error("comparison CSV: malformed row");
    rows.push_back(r);
  }
  return rows;
}

namespace detail {
inline void write_file(const std::filesystem::path& path, const auto& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
  if (!out) throw std::runtime_error("error writing " + path.string());
}
}  // namespace detail

/// Runs both methods `runs` times (seeds seed .. seed + runs - 1) in parallel
/// and, when `write` is set, writes per-run traces and costs, summary.csv and
/// comparison.csv into cfg.output_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  if (write) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
      throw std::runtime_error("cannot create output directory " + dir.string());
  }

  ExperimentResult res{make_problem(cfg), {}, {}, {}, {}};
  std::vector<std::future<FitResult>> drl_jobs, cs_jobs;
  for (std::size_t k = 0; k < cfg.runs; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    drl_jobs.push_back(std::async(std::launch::async, [&res, &cfg, seed] {
      return run_method(res.problem, cfg, Method::Drl, seed);
    }));
    cs_jobs.push_back(std::async(std::launch::async, [&res, &cfg, seed] {
      return run_method(res.problem, cfg, Method::Cs, seed);
    }));
  }
  for (auto& f : drl_jobs) res.drl_runs.push_back(f.get());
  for (auto& f : cs_jobs) res.cs_runs.push_back(f.get());

  res.summary = summarize("drl", res.drl_runs);
  const auto cs_summary = summarize("cs", res.cs_runs);
  res.summary.insert(res.summary.end(), cs_summary.begin(), cs_summary.end());
  res.comparison = compare(cfg, res.drl_runs, res.cs_runs);

  if (write) {
    for (std::size_t k = 0; k < cfg.runs; ++k) {
      for (auto [name, runs] : {std::pair{"drl", &res.drl_runs}, std::pair{"cs", &res.cs_runs}}) {
        const auto& r = (*runs)[k];
        detail::write_file(dir / (std::string(name) + "_run" + std::to_string(k) + ".csv"),
                           [&](std::ostream& o) { write_trace_csv(o, r.trace); });
        detail::write_file(dir / (std::string(name) + "_cost_run" + std::to_string(k) + ".csv"),
                           [&](std::ostream& o) { write_cost_csv(o, cost_report(r.ledger)); });
      }
    }
    detail::write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, res.summary); });
    detail::write_file(dir / "comparison.csv",
                       [&](std::ostream& o) { write_comparison_csv(o, res.comparison); });
  }
  return res;
}

}  // namespace segfit

#endif  // SEGFIT_BENCH_HPP
