#include "segfit/cs.hpp"
#include "toys.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace segfit;

namespace {

Problem two_segment_problem() {
  auto rule = RuleSpec::vertical_segment({-5.0, 5.0}, 0.1, -1.0, 1.0);
  PointSet data = sample_model(rule, Params{-2.0});
  data.append(sample_model(rule, Params{1.5}));
  return Problem(data, rule, 2, {0.15});
}

CsConfig config(std::int64_t j_max, std::uint64_t seed) {
  CsConfig cfg;
  cfg.j_max = j_max;
  cfg.seed = seed;
  cfg.timing = false;
  return cfg;
}

CsState seeded_state(const Problem& p, std::mt19937_64& rng, std::size_t pop, CostLedger& ledger) {
  CsState st;
  for (std::size_t k = 0; k < pop; ++k) {
    Params x = detail::random_flat(p.rule(), p.n(), rng);
    const double f = detail::evaluate(p, x, ledger);
    st.nests.push_back({x, f});
    if (k == 0 || f > st.best.fitness) st.best = st.nests.back();
  }
  return st;
}

}  // namespace

TEST(LevyStep, ShapeAndDeterminism) {
  std::mt19937_64 a(1), b(1);
  auto x = levy_step(1.5, 3, a);
  EXPECT_EQ(x.size(), 3u);
  EXPECT_EQ(x, levy_step(1.5, 3, b));
  EXPECT_THROW(levy_step(1.0, 3, a), std::invalid_argument);
  EXPECT_THROW(levy_step(2.5, 3, a), std::invalid_argument);
}

TEST(LevyStep, MantegnaScaleAtOnePointFive) {
  EXPECT_NEAR(mantegna_sigma(1.5), 0.6966, 1e-4);
}

TEST(LevyStep, TailHeavierThanGaussian) {
  std::mt19937_64 rng(2);
  auto s = levy_step(1.5, 100000, rng);
  for (auto& v : s) v = std::abs(v);
  auto sorted = s;
  std::nth_element(sorted.begin(), sorted.begin() + 50000, sorted.end());
  const double med = sorted[50000];
  const double frac = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > 5 * med; })) / 1e5;
  // |N(0,1)| has median 0.6745; P(|Z| > 5 * 0.6745) = erfc(3.3724 / sqrt 2).
  const double gaussian = std::erfc(5.0 * 0.674489750196 / std::sqrt(2.0));
  EXPECT_GT(frac, gaussian);
  EXPECT_GT(frac, 10 * gaussian);
}

TEST(CsIterate, OneEvaluationPerIterationOutsideAbandonment) {
  auto p = two_segment_problem();
  std::mt19937_64 rng(3);
  CostLedger ledger(false);
  auto st = seeded_state(p, rng, 5, ledger);
  auto cfg = config(0, 0);
  cfg.population = 5;
  const auto period = abandonment_period(cfg, 5);
  EXPECT_EQ(period, 20);
  const auto start = ledger.f_evals();
  std::int64_t total = 0;
  for (int k = 1; k <= 3 * period; ++k) {
    const auto spent = cs_iterate(st, cfg, p, rng, ledger, 1000);
    total += spent;
    EXPECT_EQ(spent, k % period == 0 ? 3 : 1) << "iteration " << k;  // ceil(0.25 * 5) = 2 re-randomized
  }
  EXPECT_EQ(ledger.f_evals() - start, total);
}

TEST(CsIterate, RejectionLeavesPopulation) {
  // Every nest already holds the global optimum, so no candidate can be strictly better.
  auto p = two_segment_problem();
  auto cfg = config(0, 0);
  cfg.pa = 0.0;
  CostLedger ledger(false);
  const Params opt{-2.0, 1.5};
  const double f = detail::evaluate(p, opt, ledger);
  CsState st;
  for (int k = 0; k < 4; ++k) st.nests.push_back({opt, f});
  st.best = st.nests[0];
  std::mt19937_64 rng(4);
  for (int k = 0; k < 30; ++k) cs_iterate(st, cfg, p, rng, ledger, 1);
  for (const auto& n : st.nests) EXPECT_EQ(n.x, opt);
  EXPECT_EQ(st.best.x, opt);
}

TEST(CsIterate, ElitismAndBounds) {
  auto p = two_segment_problem();
  auto cfg = config(0, 0);
  cfg.population = 6;
  std::mt19937_64 rng(5);
  CostLedger ledger(false);
  auto st = seeded_state(p, rng, 6, ledger);
  double best = st.best.fitness;
  for (int k = 0; k < 300; ++k) {
    cs_iterate(st, cfg, p, rng, ledger, 1000, [&](double score) {
      EXPECT_GE(st.best.fitness, best);
      if (score > best) {
        EXPECT_EQ(st.best.fitness, score);
      }
      best = st.best.fitness;
    });
    for (const auto& n : st.nests)
      for (std::size_t i = 0; i < p.n(); ++i) EXPECT_TRUE(p.rule().in_bounds(std::span(n.x).subspan(i, 1)));
  }
}

TEST(FitCs, LedgerEqualsBudget) {
  auto p = two_segment_problem();
  for (std::int64_t j : {1, 10, 25, 26, 137, 300}) {
    auto r = fit_cs(p, config(j, 7));
    EXPECT_EQ(r.ledger.f_evals(), j);
    EXPECT_EQ(static_cast<std::int64_t>(r.trace.size()), j);
    for (const auto& row : r.ledger.rows()) EXPECT_EQ(row.f_evals, 1);
  }
}

TEST(FitCs, PopulationBudgetReturnsBestInitialNest) {
  auto p = two_segment_problem();
  auto r = fit_cs(p, config(25, 8));
  double best = 0.0;
  for (const auto& row : r.trace) best = std::max(best, row.greedy_score);
  EXPECT_EQ(r.best_score, best);
  EXPECT_EQ(verify(p, r.best_solution), best);
}

TEST(FitCs, TraceIsMonotoneAndReproducible) {
  auto p = two_segment_problem();
  auto a = fit_cs(p, config(400, 9));
  auto b = fit_cs(p, config(400, 9));
  EXPECT_EQ(a.trace, b.trace);
  for (std::size_t j = 1; j < a.trace.size(); ++j) EXPECT_GE(a.trace[j].best_score, a.trace[j - 1].best_score);
  EXPECT_EQ(a.best_score, a.trace.back().best_score);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a.trace);
  write_trace_csv(sb, b.trace);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(FitCs, ToyProblemReachesOptimum) {
  auto p = test::cs_toy_problem();
  EXPECT_NEAR(verify(p, Solution{{{2.0}}}), 1.0, 1e-15);
  EXPECT_NEAR(verify(p, Solution{{{3.0}}}), std::exp(-1.0), 1e-15);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = fit_cs(p, config(500, seed));
    if (std::abs(r.best_solution.thetas[0][0] - 2.0) < 0.05) ++hits;
  }
  EXPECT_GE(hits, 4);
}

TEST(FitCs, ZeroBudget) {
  auto p = two_segment_problem();
  auto r = fit_cs(p, config(0, 1));
  EXPECT_TRUE(r.trace.empty());
  EXPECT_EQ(r.ledger.f_evals(), 0);
  EXPECT_EQ(r.best_score, verify(p, r.best_solution));
}

TEST(CsConfig, Validation) {
  CsConfig c;
  c.population = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.levy_beta = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.pa = 1.2;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}
