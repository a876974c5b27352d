#pragma once

#include <span>
#include <string>
#include <string_view>

#include "rfvar/field.hpp"

namespace rfvar {

enum class KernelKind { constant, bartlett, tukey_hanning, quadratic_spectral };

/// Lag-window weight sequence w_m(j). `qs_bandwidth` (b_w >= 0) only affects
/// the quadratic spectral kernel, whose argument is j / (m + b_w).
///
/// Every kernel here is even in j, tends to one pointwise as m grows and is
/// bounded by `weight_bound(kind)`.
struct KernelSpec {
  KernelKind kind = KernelKind::constant;
  double qs_bandwidth = 0.0;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Below this |x| the quadratic spectral weight returns its limit 1.
inline constexpr double kQsZeroThreshold = 1e-8;

double weight_1d(const KernelSpec& spec, Index j, Index m);

/// Product weight prod_i w_{m_i}(j_i) for |j_i| <= m_i (m_i = 0 gives w = 1 at j_i = 0).
double weight(const KernelSpec& spec, const Lag& lag, std::span<const Index> m);

/// Documented uniform bound C_w on |w|.
double weight_bound(KernelKind kind) noexcept;

/// Quadratic spectral function evaluated at a real argument x.
double quadratic_spectral(double x) noexcept;

/// Accepts the CLI names constant|bartlett|tukey|qs (plus long spellings).
KernelKind parse_kernel_kind(std::string_view name);
std::string kernel_name(KernelKind kind);

void validate(const KernelSpec& spec);

}  // namespace rfvar
