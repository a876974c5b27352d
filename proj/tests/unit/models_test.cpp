#include <gtest/gtest.h>

#include <cmath>

#include "../oracles.hpp"
#include "rfvar/autocov.hpp"
#include "rfvar/errors.hpp"
#include "rfvar/models.hpp"
#include "rfvar/normal.hpp"

using namespace rfvar;

namespace {

double autocov_sum(const ModelSpec& spec) {
  double s = 0.0;
  for (const Lag& j : oracle::box(analytic_support(spec))) s += analytic_autocov(spec, j);
  return s;
}

}  // namespace

TEST(Models, AnalyticVariances) {
  EXPECT_NEAR(analytic_sigma2(make_m1()).scalar_value(), 11.56, 1e-12);
  EXPECT_NEAR(analytic_sigma2(make_m4(0.2)).scalar_value(), 13.1225, 1e-12);
  EXPECT_NEAR(analytic_sigma2(make_m2()).scalar_value(), 148.84, 1e-10);
  EXPECT_NEAR(analytic_sigma2(make_white()).scalar_value(), 1.0, 0.0);
}

TEST(Models, AutocovariancesSumToVariance) {
  for (const ModelSpec& spec : {make_m1(), make_m2(), make_m5(0.3, 5), make_m5(0.1, 3)}) {
    EXPECT_NEAR(autocov_sum(spec), analytic_sigma2(spec).scalar_value(), 1e-10) << model_name(spec);
  }
}

TEST(Models, StencilAutocovIsCorrelationOfCoefficients) {
  const Stencil s = Stencil::m2(0.5, 0.3, 0.1);
  for (const Lag& h : oracle::box({7, 7})) {
    double want = 0.0;
    for (const Lag& u : oracle::box({3, 3})) {
      const Lag v{u[0] + h[0], u[1] + h[1]};
      if (v.max_abs() <= 3) want += s.coefficient(u) * s.coefficient(v);
    }
    EXPECT_NEAR(s.autocov(h), want, 1e-13);
  }
  EXPECT_NEAR(s.sum() * s.sum(), 148.84, 1e-10);
}

TEST(Models, M5CentreCoefficientIncludesBareInnovation) {
  const Stencil s = Stencil::m5(0.3, 2);
  EXPECT_DOUBLE_EQ(s.coefficient(Lag{0, 0}), 2.0);
  EXPECT_NEAR(s.coefficient(Lag{1, 1}), std::pow(0.3, std::sqrt(2.0)), 1e-15);
}

TEST(Models, VectorMixVarianceIsLoadingSandwich) {
  const std::vector<double> L{1.0, 0.5, -0.25, 2.0};
  const ModelSpec spec = make_vector_mix(2, L, {make_m1(), make_m1()});
  const CovMatrix s = analytic_sigma2(spec);
  const double v = 11.56;
  EXPECT_NEAR(s(0, 0), v * (1.0 + 0.25), 1e-12);
  EXPECT_NEAR(s(0, 1), v * (-0.25 + 1.0), 1e-12);
  EXPECT_NEAR(s(1, 1), v * (0.0625 + 4.0), 1e-12);
  EXPECT_EQ(model_p(spec), 2u);
}

TEST(Models, SimulationIsDeterministic) {
  for (const ModelSpec& spec : {make_m1(), make_m2(), make_m4(0.2), make_m5(0.3, 40)}) {
    const Shape shape = model_dimension(spec) == 3 ? Shape{5, 6, 7} : Shape{20, 30};
    const Field a = simulate(spec, shape, {99, 4});
    const Field b = simulate(spec, shape, {99, 4});
    const Field c = simulate(spec, shape, {99, 5});
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    EXPECT_FALSE(std::equal(a.data().begin(), a.data().end(), c.data().begin()));
    Simulator sim(spec, shape);
    const Field d = sim.simulate({99, 4});
    EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), d.data().begin()));
  }
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Models, MonteCarloAutocovMatchesAnalytic) {
  const std::size_t reps = 2000;
  const std::vector<Lag> lags{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 1}, {2, 2}, {3, 0}};
  for (const ModelSpec& spec : {make_m1(), make_m2()}) {
    Simulator sim(spec, {20, 20});
    std::vector<double> sum(lags.size(), 0.0), sq(lags.size(), 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
      const Field f = sim.simulate({2024, r});
      for (std::size_t k = 0; k < lags.size(); ++k) {
        const double g = sample_autocov(f, lags[k]).scalar_value();
        sum[k] += g;
        sq[k] += g * g;
      }
    }
    for (std::size_t k = 0; k < lags.size(); ++k) {
      const double mean = sum[k] / reps;
      const double se = std::sqrt((sq[k] / reps - mean * mean) / reps);
      EXPECT_LT(std::abs(mean - analytic_autocov(spec, lags[k])), 3.0 * se) << model_name(spec) << " lag " << k;
    }
  }
}

TEST(Models, M4VarianceByMonteCarloOfPartialSums) {
  // sigma^2 = lim Var(|n|^{-1/2} S_n); a long time axis keeps the bias small.
  const ModelSpec spec = make_m4(0.2);
  Simulator sim(spec, {200, 12, 12});
  double sq = 0.0;
  const std::size_t reps = 400;
  for (std::size_t r = 0; r < reps; ++r) {
    const Field f = sim.simulate({5, r});
    double s = 0.0;
    for (double v : f.data()) s += v;
    sq += s * s / static_cast<double>(f.sites());
  }
  EXPECT_NEAR(sq / reps, 13.1225, 13.1225 * 0.2);
}

TEST(Models, Validation) {
  EXPECT_THROW(validate(make_m4(1.0)), PreconditionError);
  EXPECT_THROW(simulate(make_m1(), {0, 3}, {1, 0}), PreconditionError);
  EXPECT_THROW(simulate(make_m1(), {3, 3, 3}, {1, 0}), PreconditionError);
}

TEST(Normal, QuantileMatchesQuadratureOracle) {
  EXPECT_NEAR(inv_normal_cdf(0.975), 1.959963984540054, 1e-12);
  for (double p : {1e-6, 0.001, 0.025, 0.05, 0.2, 0.5, 0.6, 0.9, 0.95, 0.999}) {
    EXPECT_NEAR(inv_normal_cdf(p), oracle::normal_quantile(p), 1e-9) << p;
    EXPECT_NEAR(normal_cdf(inv_normal_cdf(p)), p, 1e-12 + 1e-9 * p);
  }
  EXPECT_THROW(inv_normal_cdf(0.0), PreconditionError);
  EXPECT_THROW(inv_normal_cdf(1.0), PreconditionError);
}

TEST(Normal, StreamMoments) {
  NormalStream s(7);
  double m1 = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = s.next();
    m1 += x;
    m2 += x * x;
  }
  EXPECT_NEAR(m1 / n, 0.0, 0.01);
  EXPECT_NEAR(m2 / n, 1.0, 0.01);
}
