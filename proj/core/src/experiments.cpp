#include "rfvar/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "rfvar/errors.hpp"
#include "rfvar/field_io.hpp"
#include "rfvar/inference.hpp"

namespace rfvar {

namespace {

std::size_t worker_count(std::size_t count, std::size_t threads) {
  return std::max<std::size_t>(1, std::min(threads == 0 ? std::size_t{1} : threads, count));
}

std::vector<Simulator> make_simulators(const ModelSpec& spec, const Shape& shape, std::size_t workers) {
  std::vector<Simulator> sims;
  sims.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) sims.emplace_back(spec, shape);
  return sims;
}

double mean_of(std::span<const double> values) {
  return pairwise_sum(values) / static_cast<double>(values.size());
}

Shape full_box(const Shape& shape) {
  Shape box(shape.size());
  for (std::size_t a = 0; a < shape.size(); ++a) box[a] = shape[a] - 1;
  return box;
}

void widen(Shape& box, std::span<const Index> other) {
  for (std::size_t a = 0; a < box.size(); ++a) box[a] = std::max(box[a], other[a]);
}

void require_reps(std::size_t reps, std::size_t minimum) {
  if (reps < minimum) throw PreconditionError("reps must be >= " + std::to_string(minimum));
}

std::string m_label(std::span<const Index> m) { return "(" + join_indices(m, ',') + ")"; }

}  // namespace

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = worker_count(count, threads);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::vector<std::size_t> failed_at(workers, std::numeric_limits<std::size_t>::max());
  std::vector<std::exception_ptr> failure(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      while (!stop.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          body(i, w);
        } catch (...) {
          failed_at[w] = i;
          failure[w] = std::current_exception();
          stop.store(true);
          break;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  std::size_t first = workers;
  for (std::size_t w = 0; w < workers; ++w) {
    if (failure[w] && (first == workers || failed_at[w] < failed_at[first])) first = w;
  }
  if (first != workers) std::rethrow_exception(failure[first]);
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= 8) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

ExperimentReport estimator_study(const ModelSpec& spec, const Shape& shape, const std::vector<EstimatorConfig>& configs,
                                 std::size_t reps, std::uint64_t seed, std::size_t threads) {
  require_reps(reps, 2);
  validate(spec);
  if (configs.empty()) throw PreconditionError("estimator study needs at least one configuration");
  for (const auto& config : configs) {
    validate(config.kernel);
    validate(config.cut);
    if (!config.m.empty()) validate_lag_bound(config.m, shape);
    if (config.temporally_centered && (config.m.empty() || config.cut.kind != CutKind::none)) {
      throw PreconditionError("temporally centred configurations need an explicit m and no cut rule");
    }
  }

  ExperimentReport report;
  report.model = model_name(spec);
  report.shape = shape;
  report.reps = reps;
  report.seed = seed;
  report.sigma2 = analytic_sigma2(spec);

  const std::size_t nc = configs.size();
  std::vector<double> value(nc * reps), max_error(nc * reps);
  std::vector<char> negative(nc * reps, 0);
  const std::size_t workers = worker_count(reps, threads);
  auto sims = make_simulators(spec, shape, workers);
  const Shape full = full_box(shape);

  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    const Field field = sims[w].simulate({seed, rep});
    Shape box(shape.size(), 0);
    std::vector<Shape> pruned(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      if (configs[c].temporally_centered) continue;
      if (configs[c].m.empty()) {
        pruned[c] = effective_lag_box(field, configs[c].cut);
        widen(box, pruned[c]);
      } else {
        widen(box, configs[c].m);
      }
    }
    const AutocovTable table(field, box);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto& config = configs[c];
      CovMatrix estimate = config.temporally_centered
                               ? lrv_estimate_centered(field, config.m, config.kernel).sigma2
                           : config.m.empty() ? estimate_over_table(table, full, config.kernel, config.cut).sigma2
                                              : estimate_from_table(table, config.m, config.kernel, config.cut).sigma2;
      value[c * reps + rep] = estimate.scalar_value();
      max_error[c * reps + rep] = max_norm(estimate - report.sigma2);
      negative[c * reps + rep] = estimate.scalar_value() < 0.0 ? 1 : 0;
    }
  });

  const double truth = report.sigma2.scalar_value();
  std::vector<double> scratch(reps);
  for (std::size_t c = 0; c < nc; ++c) {
    const std::span<const double> v(value.data() + c * reps, reps);
    ExperimentRow row;
    row.config = configs[c];
    row.mean = mean_of(v);
    row.bias = row.mean - truth;
    for (std::size_t r = 0; r < reps; ++r) scratch[r] = (v[r] - truth) * (v[r] - truth);
    row.rmse = std::sqrt(mean_of(scratch));
    for (std::size_t r = 0; r < reps; ++r) scratch[r] = (v[r] - row.mean) * (v[r] - row.mean);
    row.variance = mean_of(scratch);
    row.mean_max_error = mean_of(std::span<const double>(max_error.data() + c * reps, reps));
    row.negative_estimates = static_cast<std::size_t>(
        std::count(negative.begin() + static_cast<std::ptrdiff_t>(c * reps),
                   negative.begin() + static_cast<std::ptrdiff_t>((c + 1) * reps), 1));
    report.rows.push_back(std::move(row));
  }
  return report;
}

ExperimentReport mc_experiment(const ModelSpec& spec, const Shape& shape, const std::vector<Shape>& m_list,
                               const KernelSpec& kernel, const CutRule& cut, std::size_t reps, std::uint64_t seed,
                               std::size_t threads) {
  if (m_list.empty()) throw PreconditionError("m list must not be empty");
  std::vector<EstimatorConfig> configs;
  for (const Shape& m : m_list) {
    if (m.empty()) throw PreconditionError("every m in the list needs one component per axis");
    configs.push_back({m_label(m), m, kernel, cut, false});
  }
  return estimator_study(spec, shape, configs, reps, seed, threads);
}

Type1Report type1_error_study(const ModelSpec& spec, const Shape& shape, std::size_t reps,
                              const std::vector<double>& alphas, double level, std::uint64_t seed,
                              const Type1Options& options) {
  require_reps(reps, 1);
  validate(spec);
  validate(options.kernel);
  if (model_p(spec) != 1) throw PreconditionError("the image test needs a univariate model");
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("level must lie in (0, 1)");
  if (alphas.empty()) throw PreconditionError("at least one cut exponent alpha is required");
  std::vector<CutRule> cuts;
  for (double alpha : alphas) {
    CutRule cut{options.cut_kind, alpha, options.delta, 0.0};
    validate(cut);
    cuts.push_back(cut);
  }
  if (options.m) validate_lag_bound(*options.m, shape);

  Type1Report report;
  report.model = model_name(spec);
  report.shape = shape;
  report.reps = reps;
  report.seed = seed;
  report.level = level;
  report.m = options.m;
  report.alphas = alphas;

  const std::size_t na = alphas.size();
  std::vector<char> outcome(na * reps, 0);  // 0 accept, 1 reject, 2 negative estimate
  const std::size_t workers = worker_count(reps, options.threads);
  auto sims = make_simulators(spec, shape, workers);
  const Shape full = full_box(shape);

  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    const Field field = sims[w].simulate({seed, rep});
    const double statistic = std::abs(partial_sum(field, 0.0)) / std::sqrt(static_cast<double>(field.sites()));
    Shape box(shape.size(), 0);
    if (options.m) {
      box = *options.m;
    } else {
      for (const CutRule& cut : cuts) widen(box, effective_lag_box(field, cut));
    }
    const AutocovTable table(field, box);
    for (std::size_t k = 0; k < na; ++k) {
      const double sigma2 = options.m ? estimate_from_table(table, *options.m, options.kernel, cuts[k]).sigma2.scalar_value()
                                      : estimate_over_table(table, full, options.kernel, cuts[k]).sigma2.scalar_value();
      char& out = outcome[k * reps + rep];
      if (sigma2 < 0.0) {
        out = 2;
      } else {
        out = decide(statistic, sigma2, level).reject ? 1 : 0;
      }
    }
  });

  for (std::size_t k = 0; k < na; ++k) {
    const auto begin = outcome.begin() + static_cast<std::ptrdiff_t>(k * reps);
    const auto end = begin + static_cast<std::ptrdiff_t>(reps);
    report.rejections.push_back(static_cast<std::size_t>(std::count(begin, end, 1)));
    report.negative_estimates.push_back(static_cast<std::size_t>(std::count(begin, end, 2)));
    report.rates.push_back(static_cast<double>(report.rejections.back()) / static_cast<double>(reps));
  }
  return report;
}

double type1_error_experiment(const ModelSpec& spec, const Shape& shape, std::size_t reps, double cut_alpha,
                              double level, std::uint64_t seed, const Type1Options& options) {
  return type1_error_study(spec, shape, reps, {cut_alpha}, level, seed, options).rates.front();
}

AlphaStudy alpha_tuning_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid,
                              const std::vector<double>& alpha_grid, std::size_t reps, std::uint64_t seed,
                              const AlphaStudyOptions& options) {
  require_reps(reps, 1);
  validate(spec);
  if (options.tolerances.empty()) throw PreconditionError("at least one tolerance is required");
  if (alpha_grid.empty() || alpha_grid.front() != 0.0 || !std::is_sorted(alpha_grid.begin(), alpha_grid.end())) {
    throw PreconditionError("alpha grid must be nonempty, ascending and start at 0");
  }
  grid.counts(shape);
  const bool surface_mode = !options.m_set.empty();
  Shape box(shape.size(), 0);
  for (const Shape& m : options.m_set) widen(box, m);
  if (options.fixed_m) widen(box, *options.fixed_m);

  const std::size_t ng = alpha_grid.size();
  const std::size_t nm = surface_mode ? options.m_set.size() : 1;
  std::vector<double> surfaces(reps * ng * nm);
  std::vector<Shape> chosen(reps);
  const std::size_t workers = worker_count(reps, options.threads);
  auto sims = make_simulators(spec, shape, workers);
  const KernelSpec constant{KernelKind::constant, 0.0};
  const TuneOptions& tune = options.tune;

  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    const Field field = sims[w].simulate({seed, rep});
    chosen[rep] = options.fixed_m ? *options.fixed_m
                                  : select_m(field, grid, tune.confidence, tune.m_max, tune.stop_rule).m_opt;
    const double center = lrv_estimate(field, chosen[rep], constant).sigma2.scalar_value();
    Shape table_box = box;
    widen(table_box, chosen[rep]);
    const BlockAutocovTable blocks(field, grid, table_box);
    const std::vector<Shape> single{chosen[rep]};
    const auto surface = subsample_rmse_surface(blocks, surface_mode ? options.m_set : single, alpha_grid,
                                                tune.cut_kind, tune.delta, center);
    std::copy(surface.begin(), surface.end(), surfaces.begin() + static_cast<std::ptrdiff_t>(rep * ng * nm));
  });

  AlphaStudy study;
  study.alpha_grid = alpha_grid;
  study.tolerances = options.tolerances;
  study.reps = reps;
  for (const Shape& m : chosen) ++study.m_opt_counts[m];

  std::vector<double> column(reps);
  for (std::size_t g = 0; g < ng; ++g) {
    double best = std::numeric_limits<double>::infinity();
    Shape best_m;
    for (std::size_t k = 0; k < nm; ++k) {
      for (std::size_t r = 0; r < reps; ++r) column[r] = surfaces[(r * ng + g) * nm + k];
      const double mean = mean_of(column);
      if (mean < best) {
        best = mean;
        best_m = surface_mode ? options.m_set[k] : Shape{};
      }
    }
    study.mean_rmse.push_back(best);
    if (surface_mode) study.curve_m.push_back(best_m);
  }

  // Per-field curves: minimum over the boxes of that field's own surface.
  std::vector<double> curve(ng);
  for (double tol : options.tolerances) {
    study.alpha_from_mean.push_back(pick_alpha(alpha_grid, study.mean_rmse, tol));
    std::vector<double> picks(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      for (std::size_t g = 0; g < ng; ++g) {
        const auto first = surfaces.begin() + static_cast<std::ptrdiff_t>((r * ng + g) * nm);
        curve[g] = *std::min_element(first, first + static_cast<std::ptrdiff_t>(nm));
      }
      picks[r] = pick_alpha(alpha_grid, curve, tol);
    }
    std::vector<double> sorted = picks;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    study.median_alpha.push_back(sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]));
    study.per_rep_alpha.push_back(std::move(picks));
  }
  return study;
}

std::vector<Shape> default_alpha_m_set(Index max_k) {
  if (max_k < 0) throw PreconditionError("max_k must be >= 0");
  std::vector<Shape> set;
  for (Index k = 0; k <= max_k; ++k) set.push_back({k, k});
  for (Index k = 1; k < max_k; ++k) set.push_back({k, k + 1});
  return set;
}

SubsampleStudy subsampling_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid,
                                 const std::vector<Shape>& m_list, std::size_t reps, std::uint64_t seed,
                                 const TuneOptions& options, std::size_t threads) {
  require_reps(reps, 1);
  validate(spec);
  if (m_list.empty()) throw PreconditionError("m list must not be empty");
  grid.counts(shape);
  Shape box(shape.size(), 0);
  for (const Shape& m : m_list) {
    validate_lag_bound(m, shape);
    widen(box, m);
  }

  const std::size_t nm = m_list.size();
  const double truth = analytic_sigma2(spec).scalar_value();
  std::vector<double> full_value(nm * reps), sub_mean(nm * reps), sub_rmse(nm * reps);
  std::vector<Shape> chosen(reps);
  const KernelSpec constant{KernelKind::constant, 0.0};
  const std::size_t workers = worker_count(reps, threads);
  auto sims = make_simulators(spec, shape, workers);

  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    const Field field = sims[w].simulate({seed, rep});
    const AutocovTable table(field, box);
    for (std::size_t k = 0; k < nm; ++k) {
      full_value[k * reps + rep] = estimate_from_table(table, m_list[k], constant, CutRule::none()).sigma2.scalar_value();
    }
    chosen[rep] = select_m(field, grid, options.confidence, options.m_max, options.stop_rule).m_opt;
    const double center = lrv_estimate(field, chosen[rep], constant).sigma2.scalar_value();
    const BlockAutocovTable blocks(field, grid, box);
    const auto nb = static_cast<double>(blocks.block_count());
    for (std::size_t k = 0; k < nm; ++k) {
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t b = 0; b < blocks.block_count(); ++b) {
        const double v = blocks.estimate(b, m_list[k], constant, CutRule::none()).scalar_value();
        sum += v;
        sum_sq += (v - center) * (v - center);
      }
      sub_mean[k * reps + rep] = sum / nb;
      sub_rmse[k * reps + rep] = std::sqrt(sum_sq / nb);
    }
  });

  SubsampleStudy study;
  study.grid = grid;
  study.reps = reps;
  for (const Shape& m : chosen) ++study.m_opt_counts[m];
  std::vector<double> scratch(reps);
  for (std::size_t k = 0; k < nm; ++k) {
    SubsampleRow row;
    row.m = m_list[k];
    const std::span<const double> v(full_value.data() + k * reps, reps);
    row.mc_mean = mean_of(v);
    for (std::size_t r = 0; r < reps; ++r) scratch[r] = (v[r] - truth) * (v[r] - truth);
    row.mc_rmse = std::sqrt(mean_of(scratch));
    row.sub_mean = mean_of(std::span<const double>(sub_mean.data() + k * reps, reps));
    row.sub_rmse = mean_of(std::span<const double>(sub_rmse.data() + k * reps, reps));
    study.rows.push_back(std::move(row));
  }
  return study;
}

SelectionStudy select_m_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid, double confidence,
                              Index m_max, StopRule rule, std::size_t reps, std::uint64_t seed, std::size_t threads) {
  require_reps(reps, 1);
  validate(spec);
  std::vector<SelectionResult> results(reps);
  const std::size_t workers = worker_count(reps, threads);
  auto sims = make_simulators(spec, shape, workers);
  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    results[rep] = select_m(sims[w].simulate({seed, rep}), grid, confidence, m_max, rule);
  });
  SelectionStudy study;
  study.reps = reps;
  for (const auto& r : results) {
    ++study.counts[r.m_opt];
    if (r.exhausted) ++study.exhausted;
  }
  std::size_t best = 0;
  for (const auto& [m, count] : study.counts) {
    if (count > best) {
      best = count;
      study.mode = m;
    }
  }
  return study;
}

CoverageStudy ring_coverage_study(const ModelSpec& spec, const Shape& shape, const SubsampleGrid& grid, Index k,
                                  double confidence, std::size_t reps, std::uint64_t seed, std::size_t threads) {
  require_reps(reps, 1);
  validate(spec);
  if (k < 0) throw PreconditionError("ring index k must be >= 0");
  const Shape box(shape.size(), k);
  validate_lag_bound(box, shape);

  CoverageStudy study;
  study.reps = reps;
  for (const Lag& lag : ring_lags(k, shape.size())) study.truth += analytic_autocov(spec, lag);

  std::vector<char> covered(reps, 0);
  std::vector<double> width(reps);
  const std::size_t workers = worker_count(reps, threads);
  auto sims = make_simulators(spec, shape, workers);
  parallel_for(reps, workers, [&](std::size_t rep, std::size_t w) {
    const Field field = sims[w].simulate({seed, rep});
    const BlockAutocovTable blocks(field, grid, box);
    const AutocovTable full(field, box);
    const RingTest test = ring_test(blocks, full, k, confidence);
    covered[rep] = (test.lower <= study.truth && study.truth <= test.upper) ? 1 : 0;
    width[rep] = test.upper - test.lower;
  });
  study.covered = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), 1));
  study.coverage = static_cast<double>(study.covered) / static_cast<double>(reps);
  study.mean_width = mean_of(width);
  return study;
}

// ---------------------------------------------------------------------------
// Table presets

namespace {

const KernelSpec kConstant{KernelKind::constant, 0.0};
const KernelSpec kQs64{KernelKind::quadratic_spectral, 6.4};

std::vector<Shape> diagonal_list(std::size_t q, std::initializer_list<Index> ks) {
  std::vector<Shape> out;
  for (Index k : ks) out.emplace_back(q, k);
  return out;
}

std::vector<Shape> m2_set() {
  std::vector<Shape> set;
  for (Index k = 0; k <= 29; ++k) set.push_back({k, k});
  for (const Shape& extra : std::vector<Shape>{{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {10, 13}, {15, 20}}) {
    set.push_back(extra);
  }
  return set;
}

void add_common_metadata(TableReport& table, const ReproduceOptions& options) {
  table.metadata.emplace_back("reps", std::to_string(options.reps));
  table.metadata.emplace_back("seed", std::to_string(options.seed));
}

// Paper layout: one column per m, rows Mean / RMSE / bias.
TableReport estimator_table(std::string name, const ExperimentReport& report, const std::string& suffix) {
  TableReport table;
  table.name = std::move(name);
  table.columns.push_back("m");
  for (const auto& row : report.rows) table.columns.push_back(m_label(row.config.m));
  std::vector<std::string> mean{"Mean" + suffix}, rmse{"RMSE" + suffix}, bias{"bias" + suffix};
  for (const auto& row : report.rows) {
    mean.push_back(format_real(row.mean));
    rmse.push_back(format_real(row.rmse));
    bias.push_back(format_real(row.bias));
  }
  table.rows = {mean, rmse, bias};
  table.metadata.emplace_back("model", report.model);
  table.metadata.emplace_back("shape", join_indices(report.shape, 'x'));
  table.metadata.emplace_back("sigma2", format_real(report.sigma2.scalar_value()));
  return table;
}

TableReport table_m1(int id, const KernelSpec& kernel, const CutRule& cut, std::initializer_list<Index> ks,
                     const ReproduceOptions& options) {
  const auto report =
      mc_experiment(make_m1(), {30, 40}, diagonal_list(2, ks), kernel, cut, options.reps, options.seed, options.threads);
  TableReport table = estimator_table("table" + std::to_string(id), report, "");
  table.metadata.emplace_back("kernel", kernel_name(kernel.kind));
  if (kernel.kind == KernelKind::quadratic_spectral) table.metadata.emplace_back("qs_bandwidth", format_real(kernel.qs_bandwidth));
  table.metadata.emplace_back("cut", cut_name(cut.kind));
  if (cut.kind != CutKind::none) table.metadata.emplace_back("alpha", format_real(cut.alpha));
  add_common_metadata(table, options);
  return table;
}

TableReport table5(const ReproduceOptions& options) {
  const std::vector<double> weights{0.01, 0.1, 0.3, 0.5, 0.7, 0.9};
  struct Variant {
    std::string label;
    KernelSpec kernel;
    CutRule cut;
  };
  const std::vector<Variant> variants{{"CW", kConstant, CutRule::none()},
                                      {"CW, cut", kConstant, CutRule::power_l2(5.8)},
                                      {"QS", kQs64, CutRule::none()},
                                      {"QS, cut", kQs64, CutRule::power_l2(5.8)}};
  const auto set = m2_set();
  const Shape m29{29, 29};

  TableReport table;
  table.name = "table5";
  table.columns.push_back("weights a");
  for (double a : weights) table.columns.push_back(format_real(a));
  std::vector<std::vector<std::string>> rows(1 + 4 * variants.size());
  rows[0].push_back("sigma2");
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows[1 + 4 * v].push_back("RMSE_opt (" + variants[v].label + ")");
    rows[2 + 4 * v].push_back("bias (" + variants[v].label + ")");
    rows[3 + 4 * v].push_back("m (" + variants[v].label + ")");
    rows[4 + 4 * v].push_back("RMSE29/RMSE_opt (" + variants[v].label + ")");
  }
  for (double a : weights) {
    std::array<double, 9> coef;
    coef.fill(a);
    coef[4] = 1.0;
    std::vector<EstimatorConfig> configs;
    for (const auto& variant : variants) {
      for (const Shape& m : set) configs.push_back({variant.label, m, variant.kernel, variant.cut, false});
    }
    const auto report = estimator_study(make_m1(coef), {30, 40}, configs, options.reps, options.seed, options.threads);
    rows[0].push_back(format_real(report.sigma2.scalar_value()));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const ExperimentRow* best = nullptr;
      const ExperimentRow* at29 = nullptr;
      for (std::size_t k = 0; k < set.size(); ++k) {
        const ExperimentRow& row = report.rows[v * set.size() + k];
        if (!best || row.rmse < best->rmse) best = &row;
        if (row.config.m == m29) at29 = &row;
      }
      rows[1 + 4 * v].push_back(format_real(best->rmse));
      rows[2 + 4 * v].push_back(format_real(best->bias));
      rows[3 + 4 * v].push_back(m_label(best->config.m));
      rows[4 + 4 * v].push_back(format_real(at29->rmse / best->rmse));
    }
  }
  table.rows = std::move(rows);
  table.metadata.emplace_back("model", "m1");
  table.metadata.emplace_back("shape", "30x40");
  table.metadata.emplace_back("alpha", "5.8");
  table.metadata.emplace_back("qs_bandwidth", "6.4");
  table.metadata.emplace_back("m_set", "M2");
  add_common_metadata(table, options);
  return table;
}

TableReport table6(const ReproduceOptions& options) {
  const std::vector<Shape> plain{{0, 0, 0}, {1, 1, 1}, {1, 2, 2},    {2, 2, 2},    {3, 3, 3},   {4, 4, 4},
                                 {5, 5, 5}, {8, 8, 8}, {10, 10, 10}, {12, 12, 12}, {15, 15, 15}};
  const std::vector<Shape> cut_list{{0, 0, 0}, {1, 1, 1}, {1, 2, 2}, {2, 2, 2}, {3, 3, 3}};
  std::vector<EstimatorConfig> configs;
  for (const Shape& m : plain) configs.push_back({"constant", m, kConstant, CutRule::none(), false});
  for (const Shape& m : cut_list) configs.push_back({"constant, cut", m, kConstant, CutRule::power_l2(9.4), false});
  const auto report = estimator_study(make_m4(0.2), {20, 30, 40}, configs, options.reps, options.seed, options.threads);

  TableReport table;
  table.name = "table6";
  table.columns.push_back("m");
  for (const Shape& m : plain) table.columns.push_back(m_label(m));
  std::vector<std::string> mean{"Mean"}, rmse{"RMSE"}, bias{"bias"};
  std::vector<std::string> cmean{"Mean (alpha=9.4)"}, crmse{"RMSE (alpha=9.4)"}, cbias{"bias (alpha=9.4)"};
  for (std::size_t k = 0; k < plain.size(); ++k) {
    const auto& row = report.rows[k];
    mean.push_back(format_real(row.mean));
    rmse.push_back(format_real(row.rmse));
    bias.push_back(format_real(row.bias));
    const auto it = std::find(cut_list.begin(), cut_list.end(), plain[k]);
    if (it == cut_list.end()) {
      cmean.emplace_back();
      crmse.emplace_back();
      cbias.emplace_back();
    } else {
      const auto& crow = report.rows[plain.size() + static_cast<std::size_t>(it - cut_list.begin())];
      cmean.push_back(format_real(crow.mean));
      crmse.push_back(format_real(crow.rmse));
      cbias.push_back(format_real(crow.bias));
    }
  }
  table.rows = {mean, rmse, bias, cmean, crmse, cbias};
  table.metadata.emplace_back("model", report.model);
  table.metadata.emplace_back("rho", "0.2");
  table.metadata.emplace_back("shape", "20x30x40");
  table.metadata.emplace_back("sigma2", format_real(report.sigma2.scalar_value()));
  table.metadata.emplace_back("kernel", "constant");
  add_common_metadata(table, options);
  return table;
}

TableReport table8(const ReproduceOptions& options) {
  const Shape shape{30, 40};
  const auto m_list = diagonal_list(2, {0, 1, 3, 4, 6, 7});
  TableReport table;
  table.name = "table8";
  table.columns.push_back("m");
  for (const Shape& m : m_list) table.columns.push_back(m_label(m));
  bool first = true;
  for (double gamma : {0.7, 0.8, 0.9}) {
    const auto grid = SubsampleGrid::from_gamma(shape, gamma);
    const auto study = subsampling_study(make_m1(), shape, grid, m_list, options.reps, options.seed, TuneOptions{},
                                         options.threads);
    if (first) {
      std::vector<std::string> mean{"Mean"}, rmse{"RMSE"};
      for (const auto& row : study.rows) {
        mean.push_back(format_real(row.mc_mean));
        rmse.push_back(format_real(row.mc_rmse));
      }
      table.rows.push_back(mean);
      table.rows.push_back(rmse);
      first = false;
    }
    const std::string tag = ", gamma=" + format_real(gamma);
    std::vector<std::string> mean{"Mean_Sub" + tag}, rmse{"RMSE_Sub" + tag};
    for (const auto& row : study.rows) {
      mean.push_back(format_real(row.sub_mean));
      rmse.push_back(format_real(row.sub_rmse));
    }
    table.rows.push_back(mean);
    table.rows.push_back(rmse);
    table.metadata.emplace_back("b" + tag, join_indices(grid.b, ','));
  }
  table.metadata.emplace_back("model", "m1");
  table.metadata.emplace_back("shape", "30x40");
  table.metadata.emplace_back("h", "1,1");
  table.metadata.emplace_back("center", "select_m");
  add_common_metadata(table, options);
  return table;
}

TableReport table10(const ReproduceOptions& options) {
  std::vector<double> alphas;
  for (int k = 0; k < 10; ++k) alphas.push_back(3.0 + 0.1 * k);
  TableReport table;
  table.name = "table10";
  table.columns = {"model", "n", "rho"};
  for (double a : alphas) table.columns.push_back(format_real(a));
  Type1Options type1;
  type1.m = options.type1_m;
  type1.threads = options.threads;
  auto add = [&](const ModelSpec& spec, const std::string& model, Index n, const std::string& rho) {
    const auto report = type1_error_study(spec, {n, n}, options.reps, alphas, 0.05, options.seed, type1);
    std::vector<std::string> row{model, std::to_string(n), rho};
    for (double r : report.rates) row.push_back(format_real(r));
    table.rows.push_back(std::move(row));
  };
  for (Index n : {50, 100, 250}) add(make_m2(), "m2", n, "");
  for (Index n : {50, 100, 250}) {
    for (double rho : {0.1, 0.3, 0.5}) add(make_m5(rho), "m5", n, format_real(rho));
  }
  table.metadata.emplace_back("level", "0.05");
  table.metadata.emplace_back("kernel", "constant");
  table.metadata.emplace_back("cut", "power_l2");
  table.metadata.emplace_back("m", options.type1_m ? join_indices(*options.type1_m, ',') : "full");
  add_common_metadata(table, options);
  return table;
}

}  // namespace

std::vector<int> reproducible_tables() { return {1, 2, 3, 5, 6, 8, 10}; }

TableReport reproduce_table(int table, const ReproduceOptions& options) {
  require_reps(options.reps, 2);
  switch (table) {
    case 1:
      return table_m1(1, kConstant, CutRule::none(), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, options);
    case 2:
      return table_m1(2, kQs64, CutRule::none(), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, options);
    case 3:
      return table_m1(3, kConstant, CutRule::power_l2(5.8), {0, 1, 2, 3, 4}, options);
    case 5:
      return table5(options);
    case 6:
      return table6(options);
    case 8:
      return table8(options);
    case 10:
      return table10(options);
    default:
      throw PreconditionError("no preset for table " + std::to_string(table) + " (available: 1, 2, 3, 5, 6, 8, 10)");
  }
}

}  // namespace rfvar
