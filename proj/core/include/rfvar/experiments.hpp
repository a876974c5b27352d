#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfvar/estimators.hpp"
#include "rfvar/models.hpp"
#include "rfvar/subsampling.hpp"

namespace rfvar {

/// Runs body(index, worker) for index in [0, count) on up to `threads`
/// workers. The first exception (lowest index) is rethrown after all workers
/// stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (cascade) sum in a fixed association order.
double pairwise_sum(std::span<const double> values) noexcept;

struct EstimatorConfig {
  std::string label;
  /// Lag box; empty means the full box n - 1 (cut rules prune it exactly).
  Shape m;
  KernelSpec kernel;
  CutRule cut;
  bool temporally_centered = false;
};

struct ExperimentRow {
  EstimatorConfig config;
  double mean = 0.0;       ///< Monte Carlo mean of entry (0, 0)
  double bias = 0.0;       ///< mean - sigma^2(0, 0)
  double variance = 0.0;   ///< Monte Carlo variance of entry (0, 0)
  double rmse = 0.0;       ///< sqrt(mean squared error) of entry (0, 0)
  double mean_max_error = 0.0;  ///< mean of ||estimate - sigma^2||_inf
  std::size_t negative_estimates = 0;
};

struct ExperimentReport {
  std::string model;
  Shape shape;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  CovMatrix sigma2;
  std::vector<ExperimentRow> rows;
};

/// Monte Carlo study of several estimators on the same simulated fields.
ExperimentReport estimator_study(const ModelSpec& spec, const Shape& shape, const std::vector<EstimatorConfig>& configs,
                                 std::size_t reps, std::uint64_t seed, std::size_t threads = 1);

/// One row per m for a single kernel and cut rule.
ExperimentReport mc_experiment(const ModelSpec& spec, const Shape& shape, const std::vector<Shape>& m_list,
                               const KernelSpec& kernel, const CutRule& cut, std::size_t reps, std::uint64_t seed,
                               std::size_t threads = 1);

struct Type1Options {
  /// Lag box of the estimator; empty selects the full box n - 1.
  std::optional<Shape> m;
  KernelSpec kernel{KernelKind::constant, 0.0};
  CutKind cut_kind = CutKind::power_l2;
  double delta = 1e-4;
  std::size_t threads = 1;
};

struct Type1Report {
  std::string model;
  Shape shape;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double level = 0.05;
  std::optional<Shape> m;
  std::vector<double> alphas;
  std::vector<std::size_t> rejections;
  std::vector<std::size_t> negative_estimates;
  std::vector<double> rates;
};

/// Rejection frequencies of the image test under H0 (reference 0) for every
/// alpha on the same replications. Negative variance estimates count as
/// non-rejections and are reported separately.
Type1Report type1_error_study(const ModelSpec& spec, const Shape& shape, std::size_t reps,
                              const std::vector<double>& alphas, double level, std::uint64_t seed,
                              const Type1Options& options = {});

double type1_error_experiment(const ModelSpec& spec, const Shape& shape, std::size_t reps, double cut_alpha,
                              double level, std::uint64_t seed, const Type1Options& options = {});

struct AlphaStudyOptions {
  TuneOptions tune;
  std::vector<double> tolerances{0.01};
  /// Estimator box and centering box; default is select_m on each field.
  std::optional<Shape> fixed_m;
  /// When nonempty the RMSE_Sub surface is averaged over fields and the curve
  /// is its minimum over this set for every alpha. Otherwise the curve uses
  /// the single box of each field (fixed_m or m_opt).
  std::vector<Shape> m_set;
  std::size_t threads = 1;
};

struct AlphaStudy {
  std::vector<double> alpha_grid;
  std::vector<double> mean_rmse;        ///< curve averaged over replications
  std::vector<Shape> curve_m;           ///< minimizing box per alpha (m_set mode)
  std::vector<double> tolerances;
  std::vector<double> alpha_from_mean;  ///< pick on the averaged curve, per tolerance
  std::vector<double> median_alpha;     ///< median of per-field picks, per tolerance
  std::vector<std::vector<double>> per_rep_alpha;  ///< [tolerance][rep]
  std::map<Shape, std::size_t> m_opt_counts;
  std::size_t reps = 0;
};

/// Subsampled RMSE of the constant-weight cut-off estimator over an alpha
/// grid, centred at the uncut estimator with select_m's m_opt.
AlphaStudy alpha_tuning_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid,
                              const std::vector<double>& alpha_grid, std::size_t reps, std::uint64_t seed,
                              const AlphaStudyOptions& options = {});

/// {k 1 : k = 0..max_k} plus (k, k + 1) for k = 1..max_k - 1 (q = 2).
std::vector<Shape> default_alpha_m_set(Index max_k);

struct SubsampleRow {
  Shape m;
  double mc_mean = 0.0;
  double mc_rmse = 0.0;
  double sub_mean = 0.0;  ///< average over fields of Mean_Sub
  double sub_rmse = 0.0;  ///< average over fields of RMSE_Sub
};

struct SubsampleStudy {
  SubsampleGrid grid;
  std::vector<SubsampleRow> rows;
  std::map<Shape, std::size_t> m_opt_counts;
  std::size_t reps = 0;
};

/// Mean_Sub and RMSE_Sub (centred at the estimator with select_m's m_opt)
/// against the true Monte Carlo mean and RMSE, constant weights, no cut.
SubsampleStudy subsampling_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid,
                                 const std::vector<Shape>& m_list, std::size_t reps, std::uint64_t seed,
                                 const TuneOptions& options, std::size_t threads = 1);

struct SelectionStudy {
  std::map<Shape, std::size_t> counts;
  Shape mode;
  std::size_t exhausted = 0;
  std::size_t reps = 0;
};

SelectionStudy select_m_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid, double confidence,
                              Index m_max, StopRule rule, std::size_t reps, std::uint64_t seed,
                              std::size_t threads = 1);

struct CoverageStudy {
  double truth = 0.0;
  std::size_t covered = 0;
  std::size_t reps = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
};

/// Coverage of the subsampling confidence interval for r(k 1).
CoverageStudy ring_coverage_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid, Index k,
                                  double confidence, std::size_t reps, std::uint64_t seed, std::size_t threads = 1);

/// A rendered table: header plus rows of already formatted cells.
struct TableReport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;
};

struct ReproduceOptions {
  std::size_t reps = 2000;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  /// Estimator box for table 10; empty selects the full box.
  std::optional<Shape> type1_m;
};

/// Table ids with built-in presets.
std::vector<int> reproducible_tables();
TableReport reproduce_table(int table, const ReproduceOptions& options);

}  // namespace rfvar
