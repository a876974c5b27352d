#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfvar/estimators.hpp"
#include "rfvar/field.hpp"
#include "rfvar/kernels.hpp"

namespace rfvar {

/// Block geometry: blocks of shape b placed on a lattice with stride h.
struct SubsampleGrid {
  Shape b;
  Shape h;

  /// Validates b_k >= 1 and h_k >= 1 (h defaults to all ones).
  static SubsampleGrid make(Shape b, Shape h = {});
  /// b_k = floor(n_k^gamma), h = 1.
  static SubsampleGrid from_gamma(const Shape& n, double gamma);

  /// N_k = floor((n_k - b_k) / h_k) + 1; throws unless 1 <= b_k <= n_k.
  Shape counts(const Shape& n) const;
  std::size_t block_count(const Shape& n) const;
  /// sqrt(b_1 ... b_q).
  double tau_b() const;
};

/// Block origins (0-based) in lexicographic order.
std::vector<Shape> enumerate_blocks(const Shape& shape, const SubsampleGrid& grid);

/// Copy of the sub-field with the given origin and extents.
Field extract_block(const Field& field, const Shape& origin, const Shape& extent);

using BlockStatistic = std::function<double(const Field&)>;

/// statistic(Y_i) for every block, in block order. Errors thrown by the
/// statistic are rethrown as BlockError carrying the block index.
std::vector<double> subsample_values(const Field& field, const SubsampleGrid& grid, const BlockStatistic& statistic);

/// Empirical law L(x) = N^{-1} #{i : tau_b (theta_i - center) <= x}.
class SamplingDistribution {
 public:
  SamplingDistribution(std::vector<double> scaled_sorted, double center, double tau_b);

  const std::vector<double>& values() const noexcept { return values_; }
  double center() const noexcept { return center_; }
  double tau_b() const noexcept { return tau_b_; }
  std::size_t size() const noexcept { return values_.size(); }
  double cdf(double x) const;

 private:
  std::vector<double> values_;
  double center_;
  double tau_b_;
};

SamplingDistribution empirical_distribution(std::span<const double> values, double center, double tau_b);

/// inf{x : L(x) >= gamma}, i.e. the ceil(gamma N)-th order statistic.
double subsample_quantile(const SamplingDistribution& dist, double gamma);

/// Autocovariances of every block for all lags |j| <= max_lag.
///
/// Each lag uses one summed-area table of the products xi_i xi_{i+j}' over
/// the whole field, so a block costs 2^q lookups instead of a full pass.
class BlockAutocovTable {
 public:
  BlockAutocovTable(const Field& field, const SubsampleGrid& grid, Shape max_lag);

  std::size_t block_count() const noexcept { return origins_.size(); }
  const std::vector<Shape>& origins() const noexcept { return origins_; }
  const Shape& block_shape() const noexcept { return block_shape_; }
  const Shape& max_lag() const noexcept { return max_lag_; }
  std::size_t p() const noexcept { return p_; }
  const std::vector<Lag>& lags() const noexcept { return lags_; }

  std::size_t lag_index(const Lag& lag) const;
  const CovMatrix& at(std::size_t block, std::size_t lag_index) const;

  /// Cut-off estimator on one block; thresholds use the block shape b.
  CovMatrix estimate(std::size_t block, std::span<const Index> m, const KernelSpec& kernel, const CutRule& cut) const;
  /// Ring statistic of one block (p = 1).
  double ring_sum(std::size_t block, Index k) const;

 private:
  Shape block_shape_;
  Shape max_lag_;
  std::size_t p_;
  std::vector<Shape> origins_;
  std::vector<Lag> lags_;
  std::vector<CovMatrix> values_;  // block-major
};

/// sqrt(N^{-1} sum_i (s_{b,i} - center)^2) where s_{b,i} is the constant-weight
/// cut-off estimator with box m on block i (thresholds c_b) and center is the
/// uncut constant-weight estimator with box m_center on the whole field.
/// Requires p = 1.
double subsample_rmse(const Field& field, const SubsampleGrid& grid, std::span<const Index> m,
                      std::span<const Index> m_center, const CutRule& cut);
/// Same with m_center = m.
double subsample_rmse(const Field& field, const SubsampleGrid& grid, std::span<const Index> m, const CutRule& cut);

/// RMSE_Sub for every (alpha, m) pair from one block table: entry
/// [a * m_list.size() + k] is the root mean squared deviation of the
/// constant-weight cut-off estimator (box m_list[k], rule `cut_kind` with
/// alphas[a], thresholds c_b) from `center` (p = 1).
std::vector<double> subsample_rmse_surface(const BlockAutocovTable& blocks, std::span<const Shape> m_list,
                                           std::span<const double> alphas, CutKind cut_kind, double delta,
                                           double center);

/// Average over blocks of the constant-weight estimator with box m (p = 1).
double subsample_mean(const Field& field, const SubsampleGrid& grid, std::span<const Index> m);

/// Sum of gamma_n(j) over the max-norm shell max_i |j_i| = k (p = 1).
double ring_statistic(const Field& field, Index k);

enum class StopRule {
  /// Stop at the first shell whose confidence interval contains 0.
  first_acceptance,
  /// Stop at the first shell whose confidence interval excludes 0.
  first_rejection,
};

StopRule parse_stop_rule(std::string_view name);
std::string stop_rule_name(StopRule rule);

struct RingTest {
  Index k = 0;
  double statistic = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool rejects = false;
};

struct SelectionResult {
  Shape m_opt;
  std::vector<RingTest> tests;
  StopRule rule = StopRule::first_acceptance;
  /// No test triggered the stop rule up to m_max; m_opt = m_max * 1.
  bool exhausted = false;
};

/// Confidence interval for r(k 1) from the subsampling law of R(k 1):
/// [R_n - q(1/2 + c/2) / tau_n, R_n - q(1/2 - c/2) / tau_n], tau_n = sqrt(|n|).
RingTest ring_test(const BlockAutocovTable& blocks, const AutocovTable& full, Index k, double confidence);

/// Sequential choice of m_opt = (k' - 1) 1 over k = 1, ..., m_max (p = 1).
SelectionResult select_m(const Field& field, const SubsampleGrid& grid, double confidence, Index m_max,
                         StopRule rule = StopRule::first_acceptance);

struct AlphaTuning {
  double alpha = 0.0;
  Shape m;
  std::vector<double> alpha_grid;
  std::vector<double> rmse;
};

/// Largest grid value a with rmse(a) <= (1 + tolerance) rmse(alpha_grid[0]).
double pick_alpha(std::span<const double> alpha_grid, std::span<const double> rmse, double tolerance);

/// RMSE_Sub over the alpha grid at a fixed m (centered at the estimator with the
/// same m) and the tolerance pick. `cut_kind` is power_l2 or power_max.
AlphaTuning tune_alpha(const Field& field, const SubsampleGrid& grid, std::span<const double> alpha_grid,
                       double tolerance, std::span<const Index> m, CutKind cut_kind = CutKind::power_l2,
                       double delta = 1e-4);

struct TuneOptions {
  double confidence = 0.90;
  Index m_max = 4;
  StopRule stop_rule = StopRule::first_acceptance;
  CutKind cut_kind = CutKind::power_l2;
  double delta = 1e-4;
};

/// Runs select_m first and tunes alpha at its m_opt.
AlphaTuning tune_alpha(const Field& field, const SubsampleGrid& grid, std::span<const double> alpha_grid,
                       double tolerance, const TuneOptions& options = {});

/// 0, step, 2 step, ..., up to max (inclusive within rounding).
std::vector<double> make_alpha_grid(double max, double step);

}  // namespace rfvar
