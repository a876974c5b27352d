#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rfvar/field.hpp"

namespace rfvar {

/// Linear filter X_i = sum_{u in [-r, r]^k} c(u) eta_{i+u} over i.i.d. N(0, 1)
/// innovations. Coefficients are stored lexicographically over the box.
class Stencil {
 public:
  Stencil(std::size_t dim, Index radius, std::vector<double> coefficients);

  /// (M1): a_1..a_9 multiply eta at offsets (-1,-1), (-1,0), ..., (1,1).
  static Stencil m1(const std::array<double, 9>& a);
  /// (M2): weights 1, a1, a2, a3 on the centre and max-norm rings 1..3.
  static Stencil m2(double a1, double a2, double a3);
  /// theta on [-d, d]^2 (lexicographic, (2d+1)^2 values), optionally plus a
  /// bare innovation eta_i added to the centre coefficient.
  static Stencil sma2d(Index d, const std::vector<double>& theta, bool bare_innovation);
  /// (M5): theta = rho^{||j||_2} on [-d, d]^2 plus a bare innovation.
  static Stencil m5(double rho, Index d);
  /// White noise in `dim` dimensions.
  static Stencil white(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  Index radius() const noexcept { return radius_; }
  const std::vector<double>& coefficients() const noexcept { return coef_; }
  double coefficient(const Lag& u) const;
  double sum() const noexcept;
  /// gamma(h) = sum_u c(u) c(u + h).
  double autocov(const Lag& lag) const;

 private:
  std::size_t dim_;
  Index radius_;
  std::vector<double> coef_;
};

inline constexpr std::array<double, 9> kM1DefaultWeights = {0.3, 0.3, 0.3, 0.3, 1.0, 0.3, 0.3, 0.3, 0.3};

struct ModelSpec;

/// Moving-average field (M1, M2, SMA, M5 are all stencils).
struct MovingAverage {
  std::string name = "sma";
  Stencil stencil = Stencil::white(2);
};

/// (M4): AR(1) in time per site plus an independent spatial stencil field per
/// time slice. Axis 0 is time.
struct ArMixture {
  double rho = 0.2;
  Stencil spatial = Stencil::m1(kM1DefaultWeights);
};

/// xi_(t, s) = eps^T_t eps^S_s with eps^T a stationary AR(1) and eps^S a
/// stencil field on the remaining axes.
struct Multiplicative {
  double rho_t = 0.5;
  Stencil spatial = Stencil::m1(kM1DefaultWeights);
};

/// p-variate field L * (Z_1, ..., Z_k)' of independent univariate fields.
struct VectorMix {
  std::size_t p = 2;
  std::vector<double> loading;  // p x k, row-major
  std::vector<ModelSpec> base;
};

struct ModelSpec {
  std::variant<MovingAverage, ArMixture, Multiplicative, VectorMix> variant;
};

ModelSpec make_m1(const std::array<double, 9>& a = kM1DefaultWeights);
ModelSpec make_m2(double a1 = 0.5, double a2 = 0.3, double a3 = 0.1);
ModelSpec make_m4(double rho = 0.2, const std::array<double, 9>& a = kM1DefaultWeights);
ModelSpec make_m5(double rho, Index d = 40);
ModelSpec make_white(std::size_t dim = 2);
ModelSpec make_multiplicative(double rho_t, Stencil spatial);
ModelSpec make_vector_mix(std::size_t p, std::vector<double> loading, std::vector<ModelSpec> base);

/// Grid dimension q the model lives on.
std::size_t model_dimension(const ModelSpec& spec);
/// Value dimension p.
std::size_t model_p(const ModelSpec& spec);
std::string model_name(const ModelSpec& spec);
void validate(const ModelSpec& spec);

/// Asymptotic variance sum_j gamma(j); p x p for VectorMix, 1 x 1 otherwise.
CovMatrix analytic_sigma2(const ModelSpec& spec);
/// Autocovariance gamma(j) of a univariate model.
double analytic_autocov(const ModelSpec& spec, const Lag& lag);
/// Autocovariance matrix gamma(j) of any model.
CovMatrix analytic_autocov_matrix(const ModelSpec& spec, const Lag& lag);
/// Largest |j_i| with gamma(j) != 0 per axis, or -1 when the support is
/// unbounded along that axis (AR components).
Shape analytic_support(const ModelSpec& spec);

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t replication_index = 0;
};

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
/// Child stream seed for (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

/// N(0, 1) variates from std::mt19937_64 through the inverse normal CDF,
/// u = (top 53 bits + 1/2) / 2^53.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  ~NormalStream();
  NormalStream(NormalStream&&) noexcept;
  NormalStream& operator=(NormalStream&&) noexcept;
  double next();
  void fill(std::span<double> out);

 private:
  struct Engine;
  std::unique_ptr<Engine> engine_;
};

/// Reusable simulator for one (model, shape) pair. Large stencils are applied
/// by FFT; the filter transform is computed once. Not thread-safe: use one
/// instance per thread.
class Simulator {
 public:
  Simulator(ModelSpec spec, Shape shape);
  ~Simulator();
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(Simulator&&) noexcept;

  const ModelSpec& spec() const noexcept { return spec_; }
  const Shape& shape() const noexcept { return shape_; }
  Field simulate(const SeedSpec& seed);

  struct Impl;

 private:
  ModelSpec spec_;
  Shape shape_;
  std::unique_ptr<Impl> impl_;
};

Field simulate(const ModelSpec& spec, const Shape& shape, const SeedSpec& seed);

}  // namespace rfvar
