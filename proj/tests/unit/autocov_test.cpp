#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "rfvar/autocov.hpp"
#include "rfvar/errors.hpp"
#include "rfvar/estimators.hpp"

using namespace rfvar;

namespace {

std::vector<Shape> small_shapes() {
  std::vector<Shape> out;
  for (Index a = 1; a <= 64; ++a) out.push_back({a});
  for (Index a = 1; a <= 64; ++a) {
    for (Index b = 1; a * b <= 64; ++b) out.push_back({a, b});
  }
  for (Index a = 1; a <= 4; ++a) {
    for (Index b = 1; b <= 4; ++b) {
      for (Index c = 1; a * b * c <= 64; ++c) out.push_back({a, b, c});
    }
  }
  return out;
}

Shape minus_one(const Shape& n) {
  Shape m = n;
  for (Index& v : m) v -= 1;
  return m;
}

void expect_close(const CovMatrix& got, const CovMatrix& want, double tol) {
  ASSERT_EQ(got.p(), want.p());
  for (std::size_t i = 0; i < got.entries().size(); ++i) {
    EXPECT_NEAR(got.entries()[i], want.entries()[i], tol * (1.0 + std::abs(want.entries()[i])));
  }
}

}  // namespace

TEST(Autocov, MatchesBruteForceOnEverySmallGrid) {
  unsigned seed = 1;
  for (const Shape& n : small_shapes()) {
    for (std::size_t p : {1u, 2u}) {
      const Field f = oracle::random_field(n, p, seed++);
      const Shape box = minus_one(n);
      const AutocovTable direct(f, box, AutocovMethod::direct);
      const AutocovTable fft(f, box, AutocovMethod::fft);
      for (const Lag& j : oracle::box(box)) {
        const CovMatrix want = oracle::autocov(f, j);
        expect_close(sample_autocov(f, j), want, 1e-12);
        expect_close(direct.at(j), want, 1e-12);
        expect_close(fft.at(j), want, 1e-10);
      }
    }
  }
}

TEST(Autocov, LrvMatchesBruteForceForEveryKernel) {
  unsigned seed = 500;
  const std::vector<KernelSpec> kernels{{KernelKind::constant, 0.0},
                                        {KernelKind::bartlett, 0.0},
                                        {KernelKind::tukey_hanning, 0.0},
                                        {KernelKind::quadratic_spectral, 1.5}};
  std::mt19937 pick(3);
  for (const Shape& n : small_shapes()) {
    for (std::size_t p : {1u, 2u}) {
      const Field f = oracle::random_field(n, p, seed++);
      Shape m(n.size());
      for (std::size_t a = 0; a < n.size(); ++a) m[a] = static_cast<Index>(pick() % static_cast<unsigned>(n[a]));
      for (const KernelSpec& k : kernels) {
        expect_close(lrv_estimate(f, m, k).sigma2, oracle::lrv(f, m, k), 1e-11);
      }
    }
  }
}

TEST(Autocov, NegativeLagIsTranspose) {
  const Field f = oracle::random_field({7, 9}, 3, 11);
  for (const Lag& j : oracle::box({6, 8})) {
    expect_close(sample_autocov(f, -j), sample_autocov(f, j).transposed(), 1e-13);
  }
  const AutocovTable table(f, {6, 8}, AutocovMethod::direct);
  for (const Lag& j : table.lags()) EXPECT_EQ(table.at(-j), table.at(j).transposed());
}

TEST(Autocov, ScalesWithSquareOfFactor) {
  const Field f = oracle::random_field({12, 10}, 2, 5);
  for (double c : {-3.0, 0.5, 7.25}) {
    const Field g = f.scaled(c);
    for (const Lag& j : oracle::box({3, 3})) expect_close(sample_autocov(g, j), c * c * sample_autocov(f, j), 1e-13);
    expect_close(lrv_estimate(g, Shape{2, 2}, {}).sigma2, c * c * lrv_estimate(f, Shape{2, 2}, {}).sigma2, 1e-13);
  }
}

TEST(Autocov, LagOutsideGridHasNoOverlap) {
  const Field f = oracle::random_field({4, 5}, 1, 2);
  EXPECT_THROW(sample_autocov(f, Lag{4, 0}), ZeroOverlapError);
  EXPECT_THROW(sample_autocov(f, Lag{0, -5}), ZeroOverlapError);
  EXPECT_NO_THROW(sample_autocov(f, Lag{3, -4}));
}

TEST(Autocov, FftAndDirectTablesAgreeOnLargerGrid) {
  const Field f = oracle::random_field({40, 50}, 1, 9);
  const AutocovTable direct(f, {12, 12}, AutocovMethod::direct);
  const AutocovTable fft(f, {12, 12}, AutocovMethod::fft);
  EXPECT_TRUE(fft.used_fft());
  EXPECT_FALSE(direct.used_fft());
  for (std::size_t i = 0; i < direct.lags().size(); ++i) expect_close(fft[i], direct[i], 1e-11);
}

TEST(Autocov, OverlapCountAndLagBox) {
  EXPECT_EQ(overlap_count(Shape{30, 40}, Lag{2, -3}), 28u * 37u);
  EXPECT_EQ(overlap_count(Shape{30, 40}, Lag{30, 0}), 0u);
  EXPECT_EQ(lag_box(Shape{2, 1}).size(), 15u);
  EXPECT_EQ(ring_lags(2, 2).size(), 16u);
  EXPECT_EQ(ring_lags(0, 3).size(), 1u);
  EXPECT_EQ(lag_box(Shape{2, 1}), oracle::box({2, 1}));
}
