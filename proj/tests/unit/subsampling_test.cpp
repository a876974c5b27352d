#include <gtest/gtest.h>

#include <random>

#include "../oracles.hpp"
#include "rfvar/errors.hpp"
#include "rfvar/estimators.hpp"
#include "rfvar/models.hpp"
#include "rfvar/subsampling.hpp"

using namespace rfvar;

TEST(Grid, CountsAndEnumeration) {
  const auto g = SubsampleGrid::from_gamma({30, 40}, 0.9);
  EXPECT_EQ(g.b, (Shape{21, 27}));
  EXPECT_EQ(g.h, (Shape{1, 1}));
  EXPECT_EQ(g.counts({30, 40}), (Shape{10, 14}));
  EXPECT_EQ(g.block_count({30, 40}), 140u);
  EXPECT_NEAR(g.tau_b(), std::sqrt(21.0 * 27.0), 1e-12);

  const auto s = SubsampleGrid::make({3, 4}, {2, 3});
  EXPECT_EQ(s.counts({8, 10}), (Shape{3, 3}));
  const auto origins = enumerate_blocks({8, 10}, s);
  ASSERT_EQ(origins.size(), 9u);
  EXPECT_EQ(origins[0], (Shape{0, 0}));
  EXPECT_EQ(origins[1], (Shape{0, 3}));
  EXPECT_EQ(origins[8], (Shape{4, 6}));
  EXPECT_THROW(SubsampleGrid::make({0, 2}), PreconditionError);
  EXPECT_THROW(SubsampleGrid::make({9, 2}).counts({8, 10}), PreconditionError);
}

TEST(Grid, BlockValuesMatchCopiedBlocks) {
  const Field f = oracle::random_field({9, 8}, 1, 4);
  const auto g = SubsampleGrid::make({4, 3}, {2, 1});
  const auto origins = enumerate_blocks(f.shape(), g);
  auto stat = [](const Field& b) { return lrv_estimate(b, Shape{1, 1}, {}).sigma2.scalar_value(); };
  const auto values = subsample_values(f, g, stat);
  ASSERT_EQ(values.size(), origins.size());
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const Field want = oracle::block(f, origins[i], g.b);
    const Field got = extract_block(f, origins[i], g.b);
    EXPECT_TRUE(std::equal(got.data().begin(), got.data().end(), want.data().begin()));
    EXPECT_EQ(values[i], stat(want));
  }
}

TEST(Quantile, IsTheOrderStatistic) {
  std::mt19937 gen(12);
  std::normal_distribution<double> nd;
  for (std::size_t n : {1u, 2u, 7u, 10u, 100u, 140u, 333u}) {
    std::vector<double> v(n);
    for (double& x : v) x = nd(gen);
    const double center = 0.3, tau = 2.5;
    const auto dist = empirical_distribution(v, center, tau);
    std::vector<double> scaled;
    for (double x : v) scaled.push_back(tau * (x - center));
    for (double gamma : {0.01, 0.05, 0.1, 0.25, 0.5, 0.7, 0.75, 0.9, 0.95, 0.99}) {
      EXPECT_EQ(subsample_quantile(dist, gamma), oracle::order_statistic(scaled, gamma)) << n << " " << gamma;
    }
  }
  const std::vector<double> ten{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto d = empirical_distribution(ten, 0.0, 1.0);
  EXPECT_EQ(subsample_quantile(d, 0.9), 9.0);
  EXPECT_EQ(subsample_quantile(d, 0.91), 10.0);
  EXPECT_EQ(subsample_quantile(d, 0.7), 7.0);
  EXPECT_DOUBLE_EQ(d.cdf(3.5), 0.3);
  EXPECT_THROW(subsample_quantile(d, 1.0), PreconditionError);
}

TEST(BlockTable, SummedAreaMatchesBlockAutocovariances) {
  for (std::size_t p : {1u, 2u}) {
    const Field f = oracle::random_field({13, 15}, p, 30 + static_cast<unsigned>(p));
    const auto g = SubsampleGrid::make({6, 7}, {2, 3});
    const BlockAutocovTable table(f, g, {3, 3});
    const auto origins = enumerate_blocks(f.shape(), g);
    ASSERT_EQ(table.block_count(), origins.size());
    for (std::size_t b = 0; b < origins.size(); ++b) {
      const Field blk = oracle::block(f, origins[b], g.b);
      for (const Lag& j : table.lags()) {
        const CovMatrix want = oracle::autocov(blk, j);
        const CovMatrix& got = table.at(b, table.lag_index(j));
        for (std::size_t e = 0; e < want.entries().size(); ++e) EXPECT_NEAR(got.entries()[e], want.entries()[e], 1e-10);
      }
      const CutRule cut = CutRule::power_l2(2.0, 1e-3);
      const CovMatrix est = table.estimate(b, Shape{2, 3}, {}, cut);
      const CovMatrix direct = threshold_lrv(blk, Shape{2, 3}, {}, cut).sigma2;
      for (std::size_t e = 0; e < est.entries().size(); ++e) EXPECT_NEAR(est.entries()[e], direct.entries()[e], 1e-10);
      if (p == 1) EXPECT_NEAR(table.ring_sum(b, 2), ring_statistic(blk, 2), 1e-10);
    }
  }
}

TEST(Ring, SumOverMaxNormShell) {
  const Field f = oracle::random_field({10, 12}, 1, 3);
  for (Index k = 0; k <= 4; ++k) {
    double want = 0.0;
    for (const Lag& j : oracle::box({k, k})) {
      if (j.max_abs() == k) want += oracle::autocov(f, j).scalar_value();
    }
    EXPECT_NEAR(ring_statistic(f, k), want, 1e-12);
  }
}

TEST(SubsampleRmse, MatchesBlockLoopAndSurface) {
  const Field f = simulate(make_m1(), {30, 40}, {5, 0});
  const auto g = SubsampleGrid::from_gamma(f.shape(), 0.9);
  const auto origins = enumerate_blocks(f.shape(), g);
  const Shape m{2, 2}, mc{1, 1};
  const CutRule cut = CutRule::power_l2(4.0);
  const double center = lrv_estimate(f, mc, {}).sigma2.scalar_value();
  double ss = 0.0, mean = 0.0;
  for (const Shape& o : origins) {
    const Field blk = oracle::block(f, o, g.b);
    const double v = threshold_lrv(blk, m, {}, cut).sigma2.scalar_value();
    ss += (v - center) * (v - center);
    mean += lrv_estimate(blk, m, {}).sigma2.scalar_value();
  }
  const double n = static_cast<double>(origins.size());
  EXPECT_NEAR(subsample_rmse(f, g, m, mc, cut), std::sqrt(ss / n), 1e-9);
  EXPECT_NEAR(subsample_mean(f, g, m), mean / n, 1e-9);

  const BlockAutocovTable table(f, g, {3, 3});
  const std::vector<Shape> ms{{0, 0}, {1, 1}, {2, 3}, {3, 3}};
  const std::vector<double> alphas{0.0, 3.5, 6.0};
  const auto surface = subsample_rmse_surface(table, ms, alphas, CutKind::power_l2, 1e-4, center);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    for (std::size_t k = 0; k < ms.size(); ++k) {
      EXPECT_NEAR(surface[a * ms.size() + k], subsample_rmse(f, g, ms[k], mc, CutRule::power_l2(alphas[a])), 1e-9);
    }
  }
}

TEST(SelectM, StopRulesFollowRingTests) {
  const Field f = simulate(make_m1(), {30, 40}, {11, 3});
  const auto g = SubsampleGrid::from_gamma(f.shape(), 0.9);
  const auto acc = select_m(f, g, 0.9, 4, StopRule::first_acceptance);
  const auto rej = select_m(f, g, 0.9, 4, StopRule::first_rejection);
  ASSERT_FALSE(acc.tests.empty());
  for (const RingTest& t : acc.tests) {
    EXPECT_LE(t.lower, t.upper);
    EXPECT_EQ(t.rejects, !(t.lower <= 0.0 && 0.0 <= t.upper));
  }
  if (!acc.exhausted) {
    const RingTest& last = acc.tests.back();
    EXPECT_FALSE(last.rejects);
    EXPECT_EQ(acc.m_opt, (Shape{last.k - 1, last.k - 1}));
  }
  EXPECT_TRUE(acc.tests.front().rejects);  // r(1) = 5.4 for M1
  EXPECT_EQ(rej.m_opt, (Shape{0, 0}));
  EXPECT_THROW(select_m(f, g, 1.5, 4), PreconditionError);
  EXPECT_THROW(select_m(oracle::random_field({30, 40}, 2, 1), g, 0.9, 4), PreconditionError);
}

TEST(Tune, AlphaGridAndPick) {
  const auto grid = make_alpha_grid(10.0, 0.1);
  ASSERT_EQ(grid.size(), 101u);
  EXPECT_DOUBLE_EQ(grid.back(), 10.0);
  const std::vector<double> a{0, 1, 2, 3, 4};
  const std::vector<double> r{2.0, 1.9, 2.01, 2.05, 1.5};
  EXPECT_EQ(pick_alpha(a, r, 0.01), 4.0);
  const std::vector<double> r2{2.0, 1.9, 2.01, 2.05, 2.5};
  EXPECT_EQ(pick_alpha(a, r2, 0.01), 2.0);
  EXPECT_EQ(pick_alpha(a, r2, 0.0), 1.0);

  const Field f = simulate(make_m1(), {30, 40}, {1, 0});
  const auto g = SubsampleGrid::from_gamma(f.shape(), 0.9);
  const auto tuned = tune_alpha(f, g, grid, 0.01);
  ASSERT_EQ(tuned.rmse.size(), grid.size());
  EXPECT_EQ(tuned.alpha, pick_alpha(grid, tuned.rmse, 0.01));
  EXPECT_NEAR(tuned.rmse[0], subsample_rmse(f, g, tuned.m, CutRule::power_l2(0.0)), 1e-9);
}
