#pragma once

#include <limits>
#include <span>
#include <string>
#include <string_view>

#include "rfvar/autocov.hpp"
#include "rfvar/field.hpp"
#include "rfvar/kernels.hpp"

namespace rfvar {

enum class CutKind { none, power_l2, power_max, constant };

/// Lag-dependent hard threshold c_n(j):
///
///   power_l2   ||j||_2^alpha / (n_1 ... n_q) - delta
///   power_max  (max_i |j_i|)^alpha / (n_1 ... n_q) - delta
///   constant   constant_c
///   none       -infinity (nothing is ever cut)
struct CutRule {
  CutKind kind = CutKind::none;
  double alpha = 0.0;
  double delta = 1e-4;
  double constant_c = 0.0;

  static CutRule none() { return {}; }
  static CutRule power_l2(double alpha, double delta = 1e-4) { return {CutKind::power_l2, alpha, delta, 0.0}; }
  static CutRule power_max(double alpha, double delta = 1e-4) { return {CutKind::power_max, alpha, delta, 0.0}; }
  static CutRule constant(double c) { return {CutKind::constant, 0.0, 1e-4, c}; }

  friend bool operator==(const CutRule&, const CutRule&) = default;
};

CutKind parse_cut_kind(std::string_view name);
std::string cut_name(CutKind kind);
void validate(const CutRule& rule);

/// Threshold c(j) for a grid of the given extents (n for the full field,
/// b for a subsampling block).
double cut_threshold(const CutRule& rule, const Lag& lag, std::span<const Index> shape);

enum class Centering {
  none,         ///< use the observations as they are (zero-mean model)
  global_mean,  ///< subtract the per-channel grand mean first
};

struct VarianceEstimate {
  CovMatrix sigma2;
  Shape m;
  KernelSpec kernel;
  CutRule cut;
  /// Lags whose autocovariance kept at least one entry after thresholding.
  std::size_t kept_lags = 0;
  /// Set when (max m)^3 >= min n, i.e. the lag box is large for the grid.
  bool rate_warning = false;
};

/// Adds w * (gamma o 1{|gamma| > c}) to `acc` (Hadamard thresholding with one
/// scalar threshold for all entries). Returns true if any entry survived.
bool accumulate_thresholded(CovMatrix& acc, const CovMatrix& gamma, double w, double c);

/// True when (max_i m_i)^3 >= min_i n_i.
bool rate_condition_violated(std::span<const Index> m, std::span<const Index> shape) noexcept;

/// Checks that m has one component per axis with 0 <= m_i < n_i.
void validate_lag_bound(std::span<const Index> m, std::span<const Index> shape);

/// sigma^2_n = sum_{|j| <= m} w_m(j) gamma_n(j).
VarianceEstimate lrv_estimate(const Field& field, std::span<const Index> m, const KernelSpec& kernel,
                              Centering centering = Centering::none);

/// Cut-off estimator sum_{|j| <= m} w_m(j) gamma_n(j) o 1{|gamma_n(j)| > c_n(j)}.
/// With CutRule::none() the result is bit-identical to `lrv_estimate`.
VarianceEstimate threshold_lrv(const Field& field, std::span<const Index> m, const KernelSpec& kernel,
                               const CutRule& cut, Centering centering = Centering::none);

/// Evaluates the cut-off estimator for a sub-box m <= table.max_lag() from
/// precomputed autocovariances. Thresholds use `cut_shape` (defaults to the
/// field extents the table was built from).
VarianceEstimate estimate_from_table(const AutocovTable& table, std::span<const Index> m,
                                     const KernelSpec& kernel, const CutRule& cut);
VarianceEstimate estimate_from_table(const AutocovTable& table, std::span<const Index> m,
                                     const KernelSpec& kernel, const CutRule& cut,
                                     std::span<const Index> cut_shape);

/// Sums every lag of `table` with weights w_m(j) of a box m that contains the
/// tabulated box. Lags of the m-box outside the table contribute nothing, which
/// is exact when the cut rule removes them anyway (see `effective_lag_box`).
VarianceEstimate estimate_over_table(const AutocovTable& table, std::span<const Index> m, const KernelSpec& kernel,
                                     const CutRule& cut);

/// Smallest box |j| <= M outside of which every lag is cut for certain:
/// there c_n(j) >= min(max|xi|^2, max_c sum_i xi_{i,c}^2 / |G(j)|), a bound on
/// every entry of gamma_n(j). Returns n - 1 for rules that never cut.
Shape effective_lag_box(const Field& field, const CutRule& cut);

/// Cut-off estimator over the full box m = n - 1, evaluated only on
/// `effective_lag_box` (same value up to rounding of the autocovariances).
VarianceEstimate threshold_lrv_full(const Field& field, const KernelSpec& kernel, const CutRule& cut);

/// Temporally centered estimator for multiplicative models, axis 0 = time:
///
///   gamma_check(j) = |G(j)|^{-1} sum_{(i1, s) in G(j)} (xi_i - xbar_s)(xi_{i+j} - xbar_s)',
///
/// where xbar_s is the time average at spatial site s of the base point i.
/// Requires q >= 2 and n_1 >= 2.
VarianceEstimate lrv_estimate_centered(const Field& field, std::span<const Index> m, const KernelSpec& kernel);

/// Copy of the field with the per-channel grand mean removed.
Field subtract_global_mean(const Field& field);

}  // namespace rfvar
