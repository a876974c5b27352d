#include "rfvar/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fft.hpp"
#include "rfvar/errors.hpp"
#include "rfvar/normal.hpp"

namespace rfvar {

// ---------------------------------------------------------------- Stencil

Stencil::Stencil(std::size_t dim, Index radius, std::vector<double> coefficients)
    : dim_(dim), radius_(radius), coef_(std::move(coefficients)) {
  if (dim_ < 1) throw PreconditionError("stencil dimension must be >= 1");
  if (radius_ < 0) throw PreconditionError("stencil radius must be >= 0");
  std::size_t expected = 1;
  for (std::size_t a = 0; a < dim_; ++a) expected *= static_cast<std::size_t>(2 * radius_ + 1);
  if (coef_.size() != expected) {
    throw PreconditionError("stencil of radius " + std::to_string(radius_) + " in " + std::to_string(dim_) +
                            " dimensions needs " + std::to_string(expected) + " coefficients, got " +
                            std::to_string(coef_.size()));
  }
  for (double c : coef_) {
    if (!std::isfinite(c)) throw PreconditionError("stencil coefficients must be finite");
  }
}

Stencil Stencil::m1(const std::array<double, 9>& a) { return Stencil(2, 1, std::vector<double>(a.begin(), a.end())); }

Stencil Stencil::m2(double a1, double a2, double a3) {
  const double ring[4] = {1.0, a1, a2, a3};
  std::vector<double> coef;
  for (const Lag& u : lag_box(Shape{3, 3})) coef.push_back(ring[u.max_abs()]);
  return Stencil(2, 3, std::move(coef));
}

Stencil Stencil::sma2d(Index d, const std::vector<double>& theta, bool bare_innovation) {
  Stencil s(2, d, theta);
  if (bare_innovation) s.coef_[s.coef_.size() / 2] += 1.0;
  return s;
}

Stencil Stencil::m5(double rho, Index d) {
  if (!(std::abs(rho) < 1.0)) throw PreconditionError("M5 requires |rho| < 1");
  std::vector<double> theta;
  for (const Lag& u : lag_box(Shape{d, d})) theta.push_back(std::pow(rho, u.l2_norm()));
  return sma2d(d, theta, true);
}

Stencil Stencil::white(std::size_t dim) { return Stencil(dim, 0, {1.0}); }

double Stencil::coefficient(const Lag& u) const {
  if (u.q() != dim_) throw PreconditionError("stencil offset rank mismatch");
  std::size_t idx = 0;
  for (std::size_t a = 0; a < dim_; ++a) {
    if (std::abs(u[a]) > radius_) return 0.0;
    idx = idx * static_cast<std::size_t>(2 * radius_ + 1) + static_cast<std::size_t>(u[a] + radius_);
  }
  return coef_[idx];
}

double Stencil::sum() const noexcept {
  double s = 0.0;
  for (double c : coef_) s += c;
  return s;
}

double Stencil::autocov(const Lag& lag) const {
  if (lag.q() != dim_) throw PreconditionError("autocovariance lag rank does not match the stencil");
  for (std::size_t a = 0; a < dim_; ++a) {
    if (std::abs(lag[a]) > 2 * radius_) return 0.0;
  }
  const Shape box(dim_, radius_);
  double s = 0.0;
  std::vector<Index> shifted(dim_);
  for (const Lag& u : lag_box(box)) {
    bool inside = true;
    for (std::size_t a = 0; a < dim_; ++a) {
      shifted[a] = u[a] + lag[a];
      inside = inside && std::abs(shifted[a]) <= radius_;
    }
    if (inside) s += coefficient(u) * coefficient(Lag(shifted));
  }
  return s;
}

// ---------------------------------------------------------------- specs

ModelSpec make_m1(const std::array<double, 9>& a) { return {MovingAverage{"m1", Stencil::m1(a)}}; }
ModelSpec make_m2(double a1, double a2, double a3) { return {MovingAverage{"m2", Stencil::m2(a1, a2, a3)}}; }
ModelSpec make_m4(double rho, const std::array<double, 9>& a) { return {ArMixture{rho, Stencil::m1(a)}}; }
ModelSpec make_m5(double rho, Index d) { return {MovingAverage{"m5", Stencil::m5(rho, d)}}; }
ModelSpec make_white(std::size_t dim) { return {MovingAverage{"white", Stencil::white(dim)}}; }
ModelSpec make_multiplicative(double rho_t, Stencil spatial) { return {Multiplicative{rho_t, std::move(spatial)}}; }
ModelSpec make_vector_mix(std::size_t p, std::vector<double> loading, std::vector<ModelSpec> base) {
  ModelSpec spec{VectorMix{p, std::move(loading), std::move(base)}};
  validate(spec);
  return spec;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_rho(double rho, const char* name) {
  if (!(std::abs(rho) < 1.0)) throw PreconditionError(std::string(name) + " must satisfy |rho| < 1");
}

double ar1_autocov(double rho, Index h) { return std::pow(rho, static_cast<double>(std::abs(h))) / (1.0 - rho * rho); }

double ar1_sigma2(double rho) { return 1.0 / ((1.0 - rho) * (1.0 - rho)); }

Lag spatial_part(const Lag& lag) {
  const auto off = lag.offsets();
  return Lag(std::vector<Index>(off.begin() + 1, off.end()));
}

}  // namespace

std::size_t model_dimension(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MovingAverage& m) { return m.stencil.dim(); },
                        [](const ArMixture& m) { return m.spatial.dim() + 1; },
                        [](const Multiplicative& m) { return m.spatial.dim() + 1; },
                        [](const VectorMix& m) { return m.base.empty() ? std::size_t{0} : model_dimension(m.base[0]); },
                    },
                    spec.variant);
}

std::size_t model_p(const ModelSpec& spec) {
  if (const auto* mix = std::get_if<VectorMix>(&spec.variant)) return mix->p;
  return 1;
}

std::string model_name(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MovingAverage& m) { return m.name; },
                        [](const ArMixture&) { return std::string("m4"); },
                        [](const Multiplicative&) { return std::string("multiplicative"); },
                        [](const VectorMix&) { return std::string("vector_mix"); },
                    },
                    spec.variant);
}

void validate(const ModelSpec& spec) {
  std::visit(overloaded{
                 [](const MovingAverage&) {},
                 [](const ArMixture& m) { check_rho(m.rho, "M4 rho"); },
                 [](const Multiplicative& m) { check_rho(m.rho_t, "temporal rho"); },
                 [](const VectorMix& m) {
                   if (m.p < 1) throw PreconditionError("vector mix needs p >= 1");
                   if (m.base.empty()) throw PreconditionError("vector mix needs at least one base field");
                   if (m.loading.size() != m.p * m.base.size()) {
                     throw PreconditionError("vector mix loading must be p x k = " + std::to_string(m.p) + " x " +
                                             std::to_string(m.base.size()));
                   }
                   for (double v : m.loading) {
                     if (!std::isfinite(v)) throw PreconditionError("vector mix loading must be finite");
                   }
                   const std::size_t q = model_dimension(m.base[0]);
                   for (const ModelSpec& b : m.base) {
                     validate(b);
                     if (model_p(b) != 1) throw PreconditionError("vector mix base fields must be univariate");
                     if (model_dimension(b) != q) throw PreconditionError("vector mix base fields must share q");
                   }
                 },
             },
             spec.variant);
}

CovMatrix analytic_autocov_matrix(const ModelSpec& spec, const Lag& lag) {
  if (lag.q() != model_dimension(spec)) throw PreconditionError("lag rank does not match the model dimension");
  return std::visit(overloaded{
                        [&](const MovingAverage& m) { return CovMatrix::scalar(m.stencil.autocov(lag)); },
                        [&](const ArMixture& m) {
                          const Lag s = spatial_part(lag);
                          double v = s.is_zero() ? ar1_autocov(m.rho, lag[0]) : 0.0;
                          if (lag[0] == 0) v += m.spatial.autocov(s);
                          return CovMatrix::scalar(v);
                        },
                        [&](const Multiplicative& m) {
                          return CovMatrix::scalar(ar1_autocov(m.rho_t, lag[0]) * m.spatial.autocov(spatial_part(lag)));
                        },
                        [&](const VectorMix& m) {
                          const std::size_t k = m.base.size();
                          CovMatrix out(m.p);
                          for (std::size_t b = 0; b < k; ++b) {
                            const double g = analytic_autocov(m.base[b], lag);
                            for (std::size_t r = 0; r < m.p; ++r) {
                              for (std::size_t c = 0; c < m.p; ++c) out(r, c) += m.loading[r * k + b] * g * m.loading[c * k + b];
                            }
                          }
                          return out;
                        },
                    },
                    spec.variant);
}

double analytic_autocov(const ModelSpec& spec, const Lag& lag) {
  if (model_p(spec) != 1) throw PreconditionError("analytic_autocov: model is multivariate, use the matrix form");
  return analytic_autocov_matrix(spec, lag).scalar_value();
}

CovMatrix analytic_sigma2(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MovingAverage& m) {
                          const double s = m.stencil.sum();
                          return CovMatrix::scalar(s * s);
                        },
                        [](const ArMixture& m) {
                          const double s = m.spatial.sum();
                          return CovMatrix::scalar(ar1_sigma2(m.rho) + s * s);
                        },
                        [](const Multiplicative& m) {
                          const double s = m.spatial.sum();
                          return CovMatrix::scalar(ar1_sigma2(m.rho_t) * s * s);
                        },
                        [](const VectorMix& m) {
                          const std::size_t k = m.base.size();
                          CovMatrix out(m.p);
                          for (std::size_t b = 0; b < k; ++b) {
                            const double s2 = analytic_sigma2(m.base[b]).scalar_value();
                            for (std::size_t r = 0; r < m.p; ++r) {
                              for (std::size_t c = 0; c < m.p; ++c) out(r, c) += m.loading[r * k + b] * s2 * m.loading[c * k + b];
                            }
                          }
                          return out;
                        },
                    },
                    spec.variant);
}

Shape analytic_support(const ModelSpec& spec) {
  return std::visit(overloaded{
                        [](const MovingAverage& m) { return Shape(m.stencil.dim(), 2 * m.stencil.radius()); },
                        [](const ArMixture& m) {
                          Shape s(m.spatial.dim() + 1, 2 * m.spatial.radius());
                          s[0] = -1;
                          return s;
                        },
                        [](const Multiplicative& m) {
                          Shape s(m.spatial.dim() + 1, 2 * m.spatial.radius());
                          s[0] = -1;
                          return s;
                        },
                        [](const VectorMix& m) {
                          Shape s = analytic_support(m.base[0]);
                          for (const ModelSpec& b : m.base) {
                            const Shape t = analytic_support(b);
                            for (std::size_t a = 0; a < s.size(); ++a) {
                              s[a] = (s[a] < 0 || t[a] < 0) ? -1 : std::max(s[a], t[a]);
                            }
                          }
                          return s;
                        },
                    },
                    spec.variant);
}

// ---------------------------------------------------------------- RNG

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) + 0x9E3779B97F4A7C15ULL * (index + 1));
}

struct NormalStream::Engine {
  std::mt19937_64 gen;
};

NormalStream::NormalStream(std::uint64_t seed) : engine_(std::make_unique<Engine>(Engine{std::mt19937_64(seed)})) {}
NormalStream::~NormalStream() = default;
NormalStream::NormalStream(NormalStream&&) noexcept = default;
NormalStream& NormalStream::operator=(NormalStream&&) noexcept = default;

double NormalStream::next() {
  const std::uint64_t bits = engine_->gen() >> 11;
  const double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  return inv_normal_cdf(u);
}

void NormalStream::fill(std::span<double> out) {
  for (double& v : out) v = next();
}

// ---------------------------------------------------------------- simulation

namespace {

constexpr std::size_t kFftTapThreshold = 121;

/// Applies a stencil to fresh innovations on the grid enlarged by the radius.
class StencilApplier {
 public:
  StencilApplier(const Stencil& stencil, const Shape& out_shape) : out_shape_(out_shape) {
    const std::size_t k = stencil.dim();
    if (out_shape.size() != k) throw PreconditionError("stencil dimension does not match the output shape");
    const Index r = stencil.radius();
    ext_shape_.resize(k);
    for (std::size_t a = 0; a < k; ++a) ext_shape_[a] = out_shape[a] + 2 * r;
    ext_stride_.assign(k, 1);
    for (std::size_t a = k - 1; a-- > 0;) ext_stride_[a] = ext_stride_[a + 1] * static_cast<std::size_t>(ext_shape_[a + 1]);
    ext_size_ = checked_site_count(ext_shape_);
    out_size_ = checked_site_count(out_shape_);

    if (stencil.coefficients().size() > kFftTapThreshold) {
      fft_ = std::make_unique<detail::RealFft>(ext_shape_);
      // Filter at offsets w = u + r in [0, 2r]^k, zero elsewhere.
      std::fill(fft_->real(), fft_->real() + ext_size_, 0.0);
      const Shape box(k, r);
      for (const Lag& u : lag_box(box)) {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < k; ++a) idx += static_cast<std::size_t>(u[a] + r) * ext_stride_[a];
        fft_->real()[idx] = stencil.coefficient(u);
      }
      fft_->forward();
      const double norm = 1.0 / static_cast<double>(ext_size_);
      filter_hat_.assign(fft_->spectrum(), fft_->spectrum() + fft_->spectrum_size());
      for (auto& z : filter_hat_) z = std::conj(z) * norm;
    } else {
      const Shape box(k, r);
      for (const Lag& u : lag_box(box)) {
        const double c = stencil.coefficient(u);
        if (c == 0.0) continue;
        std::size_t off = 0;
        for (std::size_t a = 0; a < k; ++a) off += static_cast<std::size_t>(u[a] + r) * ext_stride_[a];
        taps_.emplace_back(off, c);
      }
      innovations_.resize(ext_size_);
    }
  }

  std::size_t out_size() const noexcept { return out_size_; }

  void apply(NormalStream& rng, double* out) {
    if (fft_) {
      rng.fill(std::span<double>(fft_->real(), ext_size_));
      fft_->forward();
      auto* spec = fft_->spectrum();
      for (std::size_t i = 0; i < filter_hat_.size(); ++i) spec[i] *= filter_hat_[i];
      fft_->backward();
      gather(fft_->real(), out);
      return;
    }
    rng.fill(innovations_);
    const std::size_t k = out_shape_.size();
    const auto run = static_cast<std::size_t>(out_shape_[k - 1]);
    Shape pos(k, 0);
    std::size_t out_base = 0;
    while (true) {
      std::size_t base = 0;
      for (std::size_t a = 0; a < k; ++a) base += static_cast<std::size_t>(pos[a]) * ext_stride_[a];
      double* dst = out + out_base;
      std::fill(dst, dst + run, 0.0);
      for (const auto& [off, c] : taps_) {
        const double* src = innovations_.data() + base + off;
        for (std::size_t t = 0; t < run; ++t) dst[t] += c * src[t];
      }
      out_base += run;
      std::size_t a = k - 1;
      while (a-- > 0) {
        if (++pos[a] < out_shape_[a]) break;
        pos[a] = 0;
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
  }

 private:
  void gather(const double* ext, double* out) const {
    const std::size_t k = out_shape_.size();
    const auto run = static_cast<std::size_t>(out_shape_[k - 1]);
    Shape pos(k, 0);
    std::size_t out_base = 0;
    while (true) {
      std::size_t base = 0;
      for (std::size_t a = 0; a < k; ++a) base += static_cast<std::size_t>(pos[a]) * ext_stride_[a];
      std::copy(ext + base, ext + base + run, out + out_base);
      out_base += run;
      std::size_t a = k - 1;
      while (a-- > 0) {
        if (++pos[a] < out_shape_[a]) break;
        pos[a] = 0;
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
  }

  Shape out_shape_;
  Shape ext_shape_;
  std::vector<std::size_t> ext_stride_;
  std::size_t ext_size_ = 0;
  std::size_t out_size_ = 0;
  std::vector<std::pair<std::size_t, double>> taps_;
  std::vector<double> innovations_;
  std::unique_ptr<detail::RealFft> fft_;
  std::vector<std::complex<double>> filter_hat_;
};

Shape tail_shape(const Shape& shape) { return Shape(shape.begin() + 1, shape.end()); }

}  // namespace

struct Simulator::Impl {
  virtual ~Impl() = default;
  /// Writes sites * p values in canonical order.
  virtual void run(std::uint64_t stream_seed, std::vector<double>& out) = 0;
};

namespace {

struct MovingAverageImpl final : Simulator::Impl {
  MovingAverageImpl(const Stencil& s, const Shape& shape) : applier(s, shape) {}
  void run(std::uint64_t stream_seed, std::vector<double>& out) override {
    NormalStream rng(stream_seed);
    out.resize(applier.out_size());
    applier.apply(rng, out.data());
  }
  StencilApplier applier;
};

struct ArMixtureImpl final : Simulator::Impl {
  ArMixtureImpl(double rho_, const Stencil& s, const Shape& shape)
      : rho(rho_), steps(static_cast<std::size_t>(shape[0])), applier(s, tail_shape(shape)) {}
  void run(std::uint64_t stream_seed, std::vector<double>& out) override {
    NormalStream rng(stream_seed);
    const std::size_t slice = applier.out_size();
    out.resize(steps * slice);
    // AR(1) part per site, started from its stationary law.
    const double scale0 = 1.0 / std::sqrt(1.0 - rho * rho);
    for (std::size_t s = 0; s < slice; ++s) out[s] = scale0 * rng.next();
    for (std::size_t t = 1; t < steps; ++t) {
      for (std::size_t s = 0; s < slice; ++s) out[t * slice + s] = rho * out[(t - 1) * slice + s] + rng.next();
    }
    std::vector<double> v(slice);
    for (std::size_t t = 0; t < steps; ++t) {
      applier.apply(rng, v.data());
      for (std::size_t s = 0; s < slice; ++s) out[t * slice + s] += v[s];
    }
  }
  double rho;
  std::size_t steps;
  StencilApplier applier;
};

struct MultiplicativeImpl final : Simulator::Impl {
  MultiplicativeImpl(double rho_, const Stencil& s, const Shape& shape)
      : rho(rho_), steps(static_cast<std::size_t>(shape[0])), applier(s, tail_shape(shape)) {}
  void run(std::uint64_t stream_seed, std::vector<double>& out) override {
    NormalStream rng(stream_seed);
    std::vector<double> temporal(steps);
    temporal[0] = rng.next() / std::sqrt(1.0 - rho * rho);
    for (std::size_t t = 1; t < steps; ++t) temporal[t] = rho * temporal[t - 1] + rng.next();
    const std::size_t slice = applier.out_size();
    std::vector<double> spatial(slice);
    applier.apply(rng, spatial.data());
    out.resize(steps * slice);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t s = 0; s < slice; ++s) out[t * slice + s] = temporal[t] * spatial[s];
    }
  }
  double rho;
  std::size_t steps;
  StencilApplier applier;
};

std::unique_ptr<Simulator::Impl> make_impl(const ModelSpec& spec, const Shape& shape);

struct VectorMixImpl final : Simulator::Impl {
  VectorMixImpl(const VectorMix& m, const Shape& shape) : p(m.p), loading(m.loading) {
    for (const ModelSpec& b : m.base) parts.push_back(make_impl(b, shape));
  }
  void run(std::uint64_t stream_seed, std::vector<double>& out) override {
    const std::size_t k = parts.size();
    buffers.resize(k);
    for (std::size_t b = 0; b < k; ++b) parts[b]->run(derive_seed(stream_seed, b), buffers[b]);
    const std::size_t sites = buffers[0].size();
    out.assign(sites * p, 0.0);
    for (std::size_t s = 0; s < sites; ++s) {
      for (std::size_t r = 0; r < p; ++r) {
        double v = 0.0;
        for (std::size_t b = 0; b < k; ++b) v += loading[r * k + b] * buffers[b][s];
        out[s * p + r] = v;
      }
    }
  }
  std::size_t p;
  std::vector<double> loading;
  std::vector<std::unique_ptr<Simulator::Impl>> parts;
  std::vector<std::vector<double>> buffers;
};

std::unique_ptr<Simulator::Impl> make_impl(const ModelSpec& spec, const Shape& shape) {
  return std::visit(overloaded{
                        [&](const MovingAverage& m) -> std::unique_ptr<Simulator::Impl> {
                          return std::make_unique<MovingAverageImpl>(m.stencil, shape);
                        },
                        [&](const ArMixture& m) -> std::unique_ptr<Simulator::Impl> {
                          return std::make_unique<ArMixtureImpl>(m.rho, m.spatial, shape);
                        },
                        [&](const Multiplicative& m) -> std::unique_ptr<Simulator::Impl> {
                          return std::make_unique<MultiplicativeImpl>(m.rho_t, m.spatial, shape);
                        },
                        [&](const VectorMix& m) -> std::unique_ptr<Simulator::Impl> {
                          return std::make_unique<VectorMixImpl>(m, shape);
                        },
                    },
                    spec.variant);
}

}  // namespace

Simulator::Simulator(ModelSpec spec, Shape shape) : spec_(std::move(spec)), shape_(std::move(shape)) {
  validate(spec_);
  const std::size_t q = model_dimension(spec_);
  if (shape_.size() != q) {
    throw PreconditionError("model " + model_name(spec_) + " lives on q = " + std::to_string(q) +
                            " dimensions but the shape " + join_indices(shape_, 'x') + " has " +
                            std::to_string(shape_.size()));
  }
  checked_site_count(shape_);
  impl_ = make_impl(spec_, shape_);
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

Field Simulator::simulate(const SeedSpec& seed) {
  std::vector<double> data;
  impl_->run(derive_seed(seed.master_seed, seed.replication_index), data);
  return Field(shape_, model_p(spec_), std::move(data));
}

Field simulate(const ModelSpec& spec, const Shape& shape, const SeedSpec& seed) {
  Simulator sim(spec, shape);
  return sim.simulate(seed);
}

}  // namespace rfvar
