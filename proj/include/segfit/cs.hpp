// Steady-state cuckoo search over the concatenated (n*d)-vector.
//
// Every iteration evaluates f exactly once: either a Levy-flight candidate or
// one re-randomized nest during an abandonment sweep. The initial population
// is part of the same budget.

#ifndef SEGFIT_CS_HPP
#define SEGFIT_CS_HPP

#include "segfit/fit_result.hpp"
#include "segfit/model.hpp"
#include "segfit/objective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace segfit {

struct CsConfig {
  std::size_t population = 25;
  double pa = 0.25;
  double levy_beta = 1.5;
  double step_scale = 0.01;  // alpha, fraction of the bounds width
  std::int64_t j_max = 1000;
  std::uint64_t seed = 1;
  bool timing = true;

  void validate() const {
    if (population < 2) throw std::invalid_argument("cs.population must be >= 2");
    if (!(pa >= 0.0 && pa <= 1.0)) throw std::invalid_argument("cs.pa must lie in [0,1]");
    if (!(levy_beta > 1.0 && levy_beta <= 2.0))
      throw std::invalid_argument("cs.levy_beta must lie in (1,2]");
    if (!(step_scale > 0.0)) throw std::invalid_argument("cs.step_scale must be positive");
    if (j_max < 0) throw std::invalid_argument("cs.j_max must be >= 0");
  }
};

struct Nest {
  Params x;  // flattened solution, length n*d
  double fitness = 0.0;
};

/// Mantegna's scale for the numerator Gaussian.
inline double mantegna_sigma(double beta) {
  return std::pow(std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0) /
                      (std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0)),
                  1.0 / beta);
}

/// Heavy-tailed steps u / |v|^(1/beta), u ~ N(0, sigma_u^2), v ~ N(0, 1).
inline std::vector<double> levy_step(double beta, std::size_t dim, std::mt19937_64& rng) {
  if (!(beta > 1.0 && beta <= 2.0)) throw std::invalid_argument("levy beta must lie in (1,2]");
  std::normal_distribution<double> u(0.0, mantegna_sigma(beta));
  std::normal_distribution<double> v(0.0, 1.0);
  std::vector<double> out(dim);
  for (auto& s : out) {
    const double a = u(rng);
    const double b = v(rng);
    s = a / std::pow(std::abs(b), 1.0 / beta);
  }
  return out;
}

/// Population state carried between iterations.
struct CsState {
  std::vector<Nest> nests;
  Nest best;
  std::int64_t iteration = 0;  // search iterations since the initial population
};

namespace detail {

inline Params clamp_flat(const RuleSpec& rule, Params x) {
  const std::size_t d = rule.dim();
  for (std::size_t k = 0; k < x.size(); ++k)
    x[k] = std::clamp(x[k], rule.bounds()[k % d].lo, rule.bounds()[k % d].hi);
  return x;
}

inline Params random_flat(const RuleSpec& rule, std::size_t n, std::mt19937_64& rng) {
  Params x;
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& b : rule.bounds()) x.push_back(std::uniform_real_distribution<double>(b.lo, b.hi)(rng));
  return x;
}

inline double evaluate(const Problem& problem, const Params& x, CostLedger& ledger) {
  return verify(problem, Solution::unflatten(x, problem.rule().dim()), ledger);
}

}  // namespace detail

inline std::int64_t abandonment_period(const CsConfig& cfg, std::size_t pop) {
  return static_cast<std::int64_t>(std::ceil(1.0 / cfg.pa)) * static_cast<std::int64_t>(pop);
}

/// One Levy candidate, plus an abandonment sweep when the period elapses.
///
/// The candidate from nest i is x_i + alpha * width * L (.) (x_i - x_best);
/// when x_i is the best nest itself the difference is replaced by ones. It
/// replaces a uniformly chosen nest if strictly fitter. Every
/// ceil(1/pa) * population iterations the worst ceil(pa * population) nests
/// other than the best are re-randomized, one evaluation each, while the
/// budget lasts. `on_eval(score)` runs after every evaluation once the
/// population and best reflect it. Returns the evaluations spent.
template <typename OnEval>
std::int64_t cs_iterate(CsState& st, const CsConfig& cfg, const Problem& problem,
                        std::mt19937_64& rng, CostLedger& ledger, std::int64_t budget,
                        OnEval&& on_eval) {
  if (budget <= 0 || st.nests.empty()) return 0;
  const RuleSpec& rule = problem.rule();
  const std::size_t pop = st.nests.size();
  std::uniform_int_distribution<std::size_t> pick(0, pop - 1);
  std::int64_t spent = 0;

  auto watch = ledger.stopwatch();
  const std::size_t i = pick(rng);
  const Params& xi = st.nests[i].x;
  const auto L = levy_step(cfg.levy_beta, xi.size(), rng);
  const bool at_best = (xi == st.best.x);
  Params cand(xi.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double width = rule.bounds()[k % rule.dim()].width();
    const double diff = at_best ? 1.0 : xi[k] - st.best.x[k];
    cand[k] = xi[k] + cfg.step_scale * width * L[k] * diff;
  }
  cand = detail::clamp_flat(rule, std::move(cand));
  ledger.add_hypothesis_time(watch.seconds());

  const double fc = detail::evaluate(problem, cand, ledger);
  ++spent;
  ++st.iteration;
  const std::size_t j = pick(rng);
  if (fc > st.nests[j].fitness) st.nests[j] = {cand, fc};
  if (fc > st.best.fitness) st.best = {std::move(cand), fc};
  on_eval(fc);

  if (cfg.pa > 0.0 && st.iteration % abandonment_period(cfg, pop) == 0) {
    std::vector<std::size_t> order(pop);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return st.nests[a].fitness < st.nests[b].fitness;
    });
    auto abandon = static_cast<std::size_t>(std::ceil(cfg.pa * static_cast<double>(pop)));
    for (std::size_t k : order) {
      if (abandon == 0 || spent >= budget) break;
      if (st.nests[k].x == st.best.x) continue;
      watch = ledger.stopwatch();
      Params x = detail::random_flat(rule, problem.n(), rng);
      ledger.add_hypothesis_time(watch.seconds());
      const double f = detail::evaluate(problem, x, ledger);
      ++spent;
      --abandon;
      st.nests[k] = {x, f};
      if (f > st.best.fitness) st.best = {std::move(x), f};
      on_eval(f);
    }
  }
  return spent;
}

inline std::int64_t cs_iterate(CsState& st, const CsConfig& cfg, const Problem& problem,
                               std::mt19937_64& rng, CostLedger& ledger, std::int64_t budget) {
  return cs_iterate(st, cfg, problem, rng, ledger, budget, [](double) {});
}

inline FitResult fit_cs(const Problem& problem, const CsConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  FitResult result;
  result.ledger = CostLedger(cfg.timing);
  result.seed = cfg.seed;
  CostLedger& ledger = result.ledger;
  const std::size_t d = problem.rule().dim();

  CsState st;
  std::int64_t j = 0;
  auto record = [&](double score) {
    ++j;
    ledger.close_iteration(j);
    const auto& row = ledger.rows().back();
    result.trace.push_back({j, score, st.best.fitness, ledger.f_evals(), row.t_hypothesis,
                            row.t_verify});
  };

  // Initial population, one evaluation each, counted against j_max.
  for (std::size_t k = 0; k < cfg.population && j < cfg.j_max; ++k) {
    auto watch = ledger.stopwatch();
    Params x = detail::random_flat(problem.rule(), problem.n(), rng);
    ledger.add_hypothesis_time(watch.seconds());
    const double f = detail::evaluate(problem, x, ledger);
    st.nests.push_back({x, f});
    if (st.nests.size() == 1 || f > st.best.fitness) st.best = st.nests.back();
    record(f);
  }
  if (st.nests.empty()) {
    result.best_solution = Solution::unflatten(detail::random_flat(problem.rule(), problem.n(), rng), d);
    result.best_score = verify(problem, result.best_solution);
    return result;
  }
  while (j < cfg.j_max)
    cs_iterate(st, cfg, problem, rng, ledger, cfg.j_max - j, record);

  result.best_solution = Solution::unflatten(st.best.x, d);
  result.best_score = st.best.fitness;
  return result;
}

}  // namespace segfit

#endif  // SEGFIT_CS_HPP
