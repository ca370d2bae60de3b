#include "segfit/objective.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace segfit;
using segfit::test::random_points;

namespace {

// Independent O(|A||B|) evaluation of the estimator.
double brute_similarity(const PointSet& m, const PointSet& d, double sigma) {
  if (m.empty() || d.empty()) return 0.0;
  auto side = [&](const PointSet& q, const PointSet& t) {
    double sum = 0.0;
    for (const auto& p : q) {
      const double dist = segfit::test::brute_nearest(t, p);
      sum += std::exp(-dist * dist / (2.0 * sigma * sigma));
    }
    return sum / static_cast<double>(q.size());
  };
  return 0.5 * (side(d, m) + side(m, d));
}

RuleSpec segment_rule() { return RuleSpec::vertical_segment({-5.0, 5.0}, 0.05, -2.0, 2.0); }

Problem clean_single_segment(double x0, double sigma = 0.05) {
  auto rule = segment_rule();
  return Problem(sample_model(rule, Params{x0}), rule, 1, {sigma});
}

}  // namespace

TEST(Similarity, SelfSimilarityIsExactlyOne) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    auto d = random_points(rng, 1 + k % 50, -3.0, 3.0);
    EXPECT_EQ(similarity(d, d, 0.1), 1.0);
  }
}

TEST(Similarity, EmptyModelScoresZero) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    auto d = random_points(rng, 1 + k % 30, -3.0, 3.0);
    EXPECT_EQ(similarity(PointSet{}, d, 0.2), 0.0);
    Problem p(d, segment_rule(), 1, {0.2});
    EXPECT_EQ(similarity(PointSet{}, p), 0.0);
  }
}

TEST(Similarity, OneSigmaApartGivesExpMinusHalf) {
  const double sigma = 0.3;
  PointSet d({Point(0, 0, 0)}), m({Point(sigma, 0, 0)});
  EXPECT_NEAR(similarity(m, d, sigma), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(similarity(m, d, sigma), 0.60653, 1e-5);
}

TEST(Similarity, MatchesBruteForceEstimator) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> su(0.05, 1.0);
  for (int k = 0; k < 100; ++k) {
    auto a = random_points(rng, 5 + k % 40, -2.0, 2.0);
    auto b = random_points(rng, 5 + (7 * k) % 40, -2.0, 2.0);
    const double sigma = su(rng);
    EXPECT_NEAR(similarity(a, b, sigma), brute_similarity(a, b, sigma), 1e-13);
  }
}

TEST(Similarity, BoundedInUnitInterval) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    auto a = random_points(rng, 1 + k % 20, -1.0, 1.0);
    auto b = random_points(rng, 1 + k % 13, -1.0, 1.0);
    const double s = similarity(a, b, 0.2);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Similarity, SymmetricInItsArguments) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    auto a = random_points(rng, 3 + k % 30, -2.0, 2.0);
    auto b = random_points(rng, 3 + (3 * k) % 30, -2.0, 2.0);
    EXPECT_NEAR(similarity(a, b, 0.25), similarity(b, a, 0.25), 1e-12);
  }
}

TEST(Similarity, InvariantUnderCommonTranslation) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    auto a = random_points(rng, 3 + k % 30, -2.0, 2.0);
    auto b = random_points(rng, 3 + (5 * k) % 30, -2.0, 2.0);
    const Point t = segfit::test::random_point(rng, -10.0, 10.0);
    PointSet at, bt;
    for (const auto& p : a) at.push_back(p + t);
    for (const auto& p : b) bt.push_back(p + t);
    EXPECT_NEAR(similarity(a, b, 0.3), similarity(at, bt, 0.3), 1e-12);
  }
}

TEST(Similarity, FarOutlierStrictlyDecreases) {
  std::mt19937_64 rng(7);
  const double sigma = 0.1;
  for (int k = 0; k < 100; ++k) {
    auto m = random_points(rng, 5 + k % 20, -1.0, 1.0);
    auto d = random_points(rng, 5 + k % 25, -1.0, 1.0);
    Point o = segfit::test::random_point(rng, -1.0, 1.0);
    o.x() = (k % 2 == 0 ? 1.0 : -1.0) * (1.1 + 10.0 * sigma + 0.5 * (k % 5));
    ASSERT_GT(segfit::test::brute_nearest(m, o), 10.0 * sigma);
    PointSet d2 = d;
    d2.push_back(o);
    EXPECT_LT(similarity(m, d2, sigma), similarity(m, d, sigma));
  }
}

TEST(Similarity, PerfectOverlapScoresOneImperfectBelow) {
  PointSet a({Point(0, 0, 0), Point(1, 0, 0)});
  PointSet b({Point(0, 0, 0), Point(1, 0, 0), Point(1, 0, 0)});
  EXPECT_EQ(similarity(a, b, 0.1), 1.0);  // duplicates still have zero-distance partners
  PointSet c({Point(0, 0, 0), Point(1, 0, 1e-3)});
  EXPECT_LT(similarity(a, c, 0.1), 1.0);
}

TEST(Similarity, KernelCutoffIsExact) {
  // Beyond the support radius the kernel is exactly zero in double precision.
  EXPECT_EQ(gaussian_kernel(kKernelSupport, 1.0), 0.0);
  EXPECT_GT(gaussian_kernel(38.5, 1.0), 0.0);
  PointSet a({Point(0, 0, 0)}), b({Point(38.6, 0, 0)});
  EXPECT_EQ(similarity(a, b, 1.0), brute_similarity(a, b, 1.0));
}

TEST(DefaultSigma, TwiceMedianSpacing) {
  PointSet d;
  for (int i = 0; i < 11; ++i) d.push_back(Point(0.1 * i, 0, 0));
  EXPECT_NEAR(default_sigma(d), 0.2, 1e-12);
}

TEST(Verify, EmptyPrefixIsFreeAndZero) {
  auto p = clean_single_segment(1.0);
  CostLedger ledger;
  std::vector<Params> none;
  EXPECT_EQ(verify(p, std::span<const Params>(none), ledger), 0.0);
  EXPECT_EQ(ledger.f_evals(), 0);
}

TEST(Verify, ModelOnDataScoresOne) {
  auto p = clean_single_segment(1.0);
  CostLedger ledger;
  EXPECT_EQ(verify(p, Solution{{{1.0}}}, ledger), 1.0);
  EXPECT_EQ(ledger.f_evals(), 1);
}

TEST(Verify, TruthBeatsOffsetFit) {
  for (double x0 : {-3.0, 0.0, 2.5}) {
    auto p = clean_single_segment(x0);
    EXPECT_GT(verify(p, Solution{{{x0}}}), verify(p, Solution{{{x0 + 1.0}}}));
  }
}

TEST(Verify, OutOfBoundsIsDomainError) {
  auto p = clean_single_segment(0.0);
  EXPECT_THROW(verify(p, Solution{{{6.0}}}), std::domain_error);
}

TEST(Verify, PrefixLongerThanNIsRejected) {
  auto p = clean_single_segment(0.0);
  EXPECT_THROW(verify(p, Solution{{{0.0}, {1.0}}}), std::invalid_argument);
}

TEST(Verify, RepeatedCallsAreBitIdentical) {
  std::mt19937_64 rng(8);
  auto d = random_points(rng, 300, -4.0, 4.0);
  Problem p(d, segment_rule(), 3, {0.1});
  Solution s{{{-1.3}, {0.2}, {2.9}}};
  const double a = verify(p, s);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(verify(p, s), a);
}

TEST(Reward, Subtraction) {
  EXPECT_NEAR(reward(0.7, 0.4), 0.3, 1e-15);
  EXPECT_EQ(reward(0.4, 0.4), 0.0);
}

TEST(Reward, TelescopesOverRandomEpisodes) {
  std::mt19937_64 rng(9);
  auto d = random_points(rng, 200, -4.0, 4.0);
  Problem p(d, segment_rule(), 6, {0.15});
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int e = 0; e < 100; ++e) {
    std::vector<Params> prefix;
    double prev = 0.0, total = 0.0;
    for (std::size_t i = 0; i < p.n(); ++i) {
      prefix.push_back({u(rng)});
      const double cur = verify(p, std::span<const Params>(prefix));
      total += reward(cur, prev);
      prev = cur;
    }
    EXPECT_NEAR(total, verify(p, std::span<const Params>(prefix)), 1e-9);
  }
}

TEST(CostLedger, FreshReportIsZero) {
  auto r = cost_report(CostLedger{});
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.f_evals, 0);
  EXPECT_EQ(r.t_hypothesis, 0.0);
  EXPECT_EQ(r.t_verify, 0.0);
  EXPECT_EQ(r.t_f(), 0.0);
  EXPECT_TRUE(r.rows.empty());
}

TEST(CostLedger, RowsHoldPerIterationDeltas) {
  CostLedger ledger(false);
  ledger.count_eval(0.0);
  ledger.count_eval(0.0);
  ledger.close_iteration(1);
  ledger.count_eval(0.0);
  ledger.close_iteration(2);
  ledger.close_iteration(3);
  ASSERT_EQ(ledger.rows().size(), 3u);
  EXPECT_EQ(ledger.rows()[0].f_evals, 2);
  EXPECT_EQ(ledger.rows()[1].f_evals, 1);
  EXPECT_EQ(ledger.rows()[2].f_evals, 0);
  EXPECT_EQ(cost_report(ledger).evals_per_iteration(), 1.0);
}

TEST(CostLedger, DisabledTimingNeverAccumulatesTime) {
  auto p = clean_single_segment(0.0);
  CostLedger ledger(false);
  for (int k = 0; k < 10; ++k) verify(p, Solution{{{0.0}}}, ledger);
  EXPECT_EQ(ledger.verify_time(), 0.0);
  EXPECT_EQ(ledger.f_evals(), 10);
}

TEST(CostLedger, CsvHeaderAndRows) {
  CostLedger ledger(false);
  ledger.count_eval(0.0);
  ledger.close_iteration(1);
  std::ostringstream out;
  write_cost_csv(out, cost_report(ledger));
  EXPECT_EQ(out.str(), "iteration,f_evals,t_hypothesis_s,t_verify_s\n1,1,0,0\n");
}
