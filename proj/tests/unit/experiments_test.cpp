#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <stdexcept>

#include "rfvar/estimators.hpp"
#include "rfvar/experiments.hpp"
#include "rfvar/models.hpp"

using namespace rfvar;

TEST(Harness, ParallelForVisitsEveryIndexOnce) {
  for (std::size_t threads : {1u, 2u, 5u}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), threads, [&](std::size_t i, std::size_t w) {
      EXPECT_LT(w, threads);
      hits[i]++;
    });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(Harness, ParallelForRethrowsLowestIndexFailure) {
  try {
    parallel_for(50, 3, [](std::size_t i, std::size_t) {
      if (i == 31 || i == 12) throw std::runtime_error("at " + std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "at 12");
  }
}

TEST(Harness, PairwiseSum) {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 0.0);
  EXPECT_EQ(pairwise_sum(v), 500500.0);
  EXPECT_EQ(pairwise_sum({}), 0.0);
  std::vector<double> tiny(1 << 20, 0.1);
  EXPECT_NEAR(pairwise_sum(tiny), 0.1 * (1 << 20), 1e-8);
}

TEST(Harness, RowsSatisfyMseDecomposition) {
  const auto report = mc_experiment(make_m1(), {30, 40}, {{1, 1}, {2, 2}, {4, 4}}, {}, CutRule::none(), 200, 17, 1);
  ASSERT_EQ(report.rows.size(), 3u);
  for (const auto& row : report.rows) {
    EXPECT_NEAR(row.rmse * row.rmse, row.variance + row.bias * row.bias, 1e-9);
    EXPECT_NEAR(row.bias, row.mean - 11.56, 1e-12);
  }
}

TEST(Harness, MatchesSequentialReplicationLoop) {
  const std::size_t reps = 40;
  const Shape m{2, 2};
  const auto report = mc_experiment(make_m1(), {20, 25}, {m}, {}, CutRule::power_l2(4.0), reps, 3, 1);
  double sum = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const Field f = simulate(make_m1(), {20, 25}, {3, r});
    sum += threshold_lrv(f, m, {}, CutRule::power_l2(4.0)).sigma2.scalar_value();
  }
  EXPECT_NEAR(report.rows[0].mean, sum / reps, 1e-10);
}

TEST(Harness, DeterministicAcrossThreadCounts) {
  const std::vector<Shape> ms{{0, 0}, {2, 2}};
  const auto a = mc_experiment(make_m2(), {30, 30}, ms, {}, CutRule::none(), 30, 8, 1);
  const auto b = mc_experiment(make_m2(), {30, 30}, ms, {}, CutRule::none(), 30, 8, 3);
  for (std::size_t k = 0; k < ms.size(); ++k) {
    EXPECT_EQ(a.rows[k].mean, b.rows[k].mean);
    EXPECT_EQ(a.rows[k].rmse, b.rows[k].rmse);
  }
  const auto t1 = type1_error_study(make_m2(), {40, 40}, 30, {3.0, 3.6}, 0.05, 9);
  Type1Options opt;
  opt.threads = 2;
  const auto t2 = type1_error_study(make_m2(), {40, 40}, 30, {3.0, 3.6}, 0.05, 9, opt);
  EXPECT_EQ(t1.rejections, t2.rejections);
}

TEST(Harness, MultivariateRowsTrackMatrixError) {
  const ModelSpec spec = make_vector_mix(2, {1.0, 0.0, 0.5, 1.0}, {make_m1(), make_m1()});
  EstimatorConfig cfg{"cw", {2, 2}, {}, CutRule::none(), false};
  const auto report = estimator_study(spec, {30, 40}, {cfg}, 20, 4);
  EXPECT_EQ(report.sigma2.p(), 2u);
  EXPECT_GT(report.rows[0].mean_max_error, 0.0);
  EXPECT_GE(report.rows[0].mean_max_error, std::abs(report.rows[0].bias) - 1e-12);
}

TEST(Harness, ReproducePresetsRender) {
  ReproduceOptions opt;
  opt.reps = 20;
  opt.seed = 5;
  for (int id : {1, 2, 3}) {
    const TableReport t = reproduce_table(id, opt);
    EXPECT_EQ(t.columns.size(), id == 3 ? 6u : 11u);
    EXPECT_EQ(t.rows.size(), 3u);
  }
  EXPECT_THROW(reproduce_table(4, opt), std::exception);
  const auto tables = reproducible_tables();
  EXPECT_EQ(tables, (std::vector<int>{1, 2, 3, 5, 6, 8, 10}));
}
