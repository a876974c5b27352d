#include "rfvar/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "rfvar/errors.hpp"

namespace rfvar {

double quadratic_spectral(double x) noexcept {
  if (std::abs(x) < kQsZeroThreshold) return 1.0;
  const double z = 6.0 * std::numbers::pi * x / 5.0;
  // Taylor series where sin(z)/z - cos(z) cancels.
  if (std::abs(z) < 1e-2) {
    const double z2 = z * z;
    return 1.0 - z2 / 10.0 + z2 * z2 / 280.0;
  }
  return 25.0 / (12.0 * std::numbers::pi * std::numbers::pi * x * x) * (std::sin(z) / z - std::cos(z));
}

double weight_1d(const KernelSpec& spec, Index j, Index m) {
  if (m < 1) throw PreconditionError("weight_1d: m must be >= 1, got " + std::to_string(m));
  const double aj = static_cast<double>(std::abs(j));
  const double dm = static_cast<double>(m);
  switch (spec.kind) {
    case KernelKind::constant:
      return 1.0;
    case KernelKind::bartlett:
      return std::max(0.0, 1.0 - aj / dm);
    case KernelKind::tukey_hanning:
      if (aj > dm) return 0.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * aj / dm));
    case KernelKind::quadratic_spectral:
      return quadratic_spectral(aj / (dm + spec.qs_bandwidth));
  }
  return 1.0;
}

double weight(const KernelSpec& spec, const Lag& lag, std::span<const Index> m) {
  if (lag.q() != m.size()) throw PreconditionError("weight: lag rank does not match m");
  double w = 1.0;
  for (std::size_t axis = 0; axis < m.size(); ++axis) {
    if (std::abs(lag[axis]) > m[axis]) {
      throw PreconditionError("weight: lag lies outside the box |j| <= m");
    }
    // m_i = 0 only admits j_i = 0, where every kernel equals one.
    if (m[axis] == 0) continue;
    w *= weight_1d(spec, lag[axis], m[axis]);
  }
  return w;
}

double weight_bound(KernelKind kind) noexcept {
  // QS is a positive-definite function, so |QS(x)| <= QS(0) = 1.
  switch (kind) {
    case KernelKind::constant:
    case KernelKind::bartlett:
    case KernelKind::tukey_hanning:
    case KernelKind::quadratic_spectral:
      return 1.0;
  }
  return 1.0;
}

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "constant" || name == "cw") return KernelKind::constant;
  if (name == "bartlett") return KernelKind::bartlett;
  if (name == "tukey" || name == "tukey_hanning" || name == "tukey-hanning") return KernelKind::tukey_hanning;
  if (name == "qs" || name == "quadratic_spectral" || name == "quadratic-spectral") {
    return KernelKind::quadratic_spectral;
  }
  throw PreconditionError("unknown kernel '" + std::string(name) + "' (expected constant|bartlett|tukey|qs)");
}

std::string kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::constant: return "constant";
    case KernelKind::bartlett: return "bartlett";
    case KernelKind::tukey_hanning: return "tukey";
    case KernelKind::quadratic_spectral: return "qs";
  }
  return "unknown";
}

void validate(const KernelSpec& spec) {
  if (!(spec.qs_bandwidth >= 0.0) || !std::isfinite(spec.qs_bandwidth)) {
    throw PreconditionError("qs_bandwidth must be a finite value >= 0");
  }
}

}  // namespace rfvar
