#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "report.hpp"
#include "rfvar/errors.hpp"
#include "rfvar/estimators.hpp"
#include "rfvar/experiments.hpp"
#include "rfvar/field_io.hpp"
#include "rfvar/inference.hpp"
#include "rfvar/models.hpp"
#include "rfvar/subsampling.hpp"

namespace rfvar::cli {

namespace {

/// Bad flag value, unknown config key or missing required parameter.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("UsageError", what) {}
};

struct OptionDef {
  std::string name;
  std::string help;
  std::string fallback;  // empty: no default
};

struct CommandDef {
  std::string name;
  std::string help;
  std::vector<OptionDef> options;
};

const std::vector<OptionDef>& global_options() {
  static const std::vector<OptionDef> defs{
      {"config", "key = value configuration file", ""},
      {"format", "output format: csv|json", "csv"},
      {"threads", "worker threads for Monte Carlo commands", ""},
      {"out", "write the result to this file instead of standard output", ""},
  };
  return defs;
}

std::vector<OptionDef> model_options() {
  return {{"model", "m1|m2|m4|m5|white", "m1"},
          {"shape", "grid extents, e.g. 30,40", ""},
          {"rho", "AR parameter (m4, default 0.2) or decay (m5, default 0.3)", ""},
          {"weights", "m1/m4: a or a_1..a_9; m2: a1,a2,a3", ""},
          {"d", "m5 stencil radius [default: 40]", ""},
          {"seed", "master seed (generated and recorded when absent)", ""},
          {"replication", "replication index of the child stream", "0"}};
}

std::vector<OptionDef> grid_options() {
  return {{"gamma", "block exponent: b = floor(n^gamma)", "0.9"},
          {"b", "block shape (overrides gamma)", ""},
          {"h", "block stride", ""}};
}

std::vector<OptionDef> cut_options(const std::string& cut_default, const std::string& alpha_default = "") {
  return {{"cut", "none|l2|max|constant", cut_default},
          {"alpha", "exponent of the power cut rules", alpha_default},
          {"delta", "offset of the power cut rules", "1e-4"},
          {"c", "threshold of the constant cut rule", ""}};
}

std::vector<OptionDef> concat(std::vector<std::vector<OptionDef>> parts) {
  std::vector<OptionDef> out;
  for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

const std::vector<CommandDef>& commands() {
  static const std::vector<CommandDef> defs{
      {"simulate", "simulate a random field", model_options()},
      {"estimate", "kernel estimator of the asymptotic variance",
       {{"input", "field file", ""},
        {"m", "lag truncation, e.g. 2,2", ""},
        {"kernel", "constant|bartlett|tukey|qs", "constant"},
        {"bandwidth", "QS bandwidth b_w", "0"},
        {"center", "none|global|temporal", "none"}}},
      {"threshold-estimate", "cut-off estimator of the asymptotic variance",
       concat({{{"input", "field file", ""},
                {"m", "lag truncation (default: full box n - 1)", ""},
                {"kernel", "constant|bartlett|tukey|qs", "constant"},
                {"bandwidth", "QS bandwidth b_w", "0"},
                {"center", "none|global", "none"}},
               cut_options("l2")})},
      {"subsample", "subsampling distribution of a block statistic",
       concat({{{"input", "field file", ""},
                {"stat", "lrv|ring", "lrv"},
                {"m", "lag truncation of the lrv statistic", "2,2"},
                {"k", "shell index of the ring statistic", "1"},
                {"kernel", "kernel of the lrv statistic", "constant"},
                {"bandwidth", "QS bandwidth b_w", "0"},
                {"quantiles", "levels of the reported quantiles", "0.05,0.5,0.95"}},
               grid_options(), cut_options("none")})},
      {"tune", "choose the cut exponent alpha by subsampling",
       concat({{{"input", "field file", ""},
                {"alpha-max", "largest alpha of the grid", "10"},
                {"alpha-step", "alpha grid step", "0.1"},
                {"tolerance", "relative RMSE tolerance", "0.01"},
                {"m", "lag truncation (default: select-m)", ""},
                {"confidence", "confidence of the ring tests", "0.9"},
                {"m-max", "largest shell tested by select-m", "4"},
                {"stop-rule", "first_acceptance|first_rejection", "first_acceptance"},
                {"cut", "l2|max", "l2"},
                {"delta", "offset of the cut rule", "1e-4"}},
               grid_options()})},
      {"select-m", "sequential ring tests for the lag truncation",
       concat({{{"input", "field file", ""},
                {"confidence", "confidence of the ring tests", "0.9"},
                {"m-max", "largest shell tested", "4"},
                {"stop-rule", "first_acceptance|first_rejection", "first_acceptance"}},
               grid_options()})},
      {"image-test", "partial-sum test of an image against a reference",
       concat({{{"input", "field file", ""},
                {"reference", "reference value or field file", "0"},
                {"level", "significance level", "0.05"},
                {"m", "lag truncation (default: full box n - 1)", ""},
                {"kernel", "constant|bartlett|tukey|qs", "constant"},
                {"bandwidth", "QS bandwidth b_w", "0"},
                {"sigma2", "known variance instead of the estimate", ""}},
               cut_options("l2", "3.6")})},
      {"reproduce", "built-in simulation tables",
       {{"table", "1|2|3|5|6|8|10", ""},
        {"reps", "Monte Carlo replications", "2000"},
        {"seed", "master seed (generated and recorded when absent)", ""},
        {"m", "estimator box of table 10 (default: full box)", ""}}},
  };
  return defs;
}

std::string env_name(const std::string& option) {
  std::string out = "RFVAR_";
  for (char c : option) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

/// Resolved parameters of one run: flag or environment, then config file,
/// then built-in default.
class Params {
 public:
  void set(const std::string& name, std::string value, std::string source) {
    values_[name] = {std::move(value), std::move(source)};
  }
  bool has(const std::string& name) const { return values_.count(name) > 0; }

  const std::string& str(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw UsageError("missing required option --" + name);
    return it->second.first;
  }
  double real(const std::string& name) const { return convert(name, [](const std::string& s) { return parse_real(s); }); }
  Index integer(const std::string& name) const {
    return convert(name, [](const std::string& s) { return parse_index(s); });
  }
  Shape shape(const std::string& name) const {
    return convert(name, [](const std::string& s) { return parse_index_list(s); });
  }
  std::vector<double> reals(const std::string& name) const {
    return convert(name, [](const std::string& s) {
      std::vector<double> out;
      std::size_t start = 0;
      while (start <= s.size()) {
        const std::size_t comma = std::min(s.find(',', start), s.size());
        out.push_back(parse_real(std::string_view(s).substr(start, comma - start)));
        start = comma + 1;
      }
      return out;
    });
  }
  std::optional<Shape> optional_shape(const std::string& name) const {
    if (!has(name)) return std::nullopt;
    return shape(name);
  }

  void echo(Report& report) const {
    for (const auto& [name, entry] : values_) {
      report.meta("param." + name, entry.first);
      report.meta("source." + name, entry.second);
    }
  }

 private:
  template <class Fn>
  auto convert(const std::string& name, Fn fn) const -> decltype(fn(std::string{})) {
    const std::string& text = str(name);
    try {
      return fn(text);
    } catch (const Error& e) {
      throw UsageError("invalid value for --" + name + " '" + text + "': " + e.what());
    }
  }

  std::map<std::string, std::pair<std::string, std::string>> values_;
};

std::string format_shape(const Shape& s) { return join_indices(s, ','); }

// ---------------------------------------------------------------------------
// Parameter interpretation

KernelSpec kernel_from(const Params& p) {
  KernelSpec kernel{parse_kernel_kind(p.str("kernel")), p.has("bandwidth") ? p.real("bandwidth") : 0.0};
  validate(kernel);
  return kernel;
}

CutRule cut_from(const Params& p) {
  const CutKind kind = parse_cut_kind(p.str("cut"));
  CutRule rule;
  rule.kind = kind;
  if (kind == CutKind::power_l2 || kind == CutKind::power_max) {
    rule.alpha = p.real("alpha");
    rule.delta = p.real("delta");
  } else if (kind == CutKind::constant) {
    rule.constant_c = p.real("c");
  }
  validate(rule);
  return rule;
}

std::uint64_t seed_from(const Params& p, Report& report) {
  std::uint64_t seed = 0;
  if (p.has("seed")) {
    const Index value = p.integer("seed");
    if (value < 0) throw UsageError("--seed must be >= 0");
    seed = static_cast<std::uint64_t>(value);
    report.meta("seed", std::to_string(seed));
  } else {
    std::random_device device;
    seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
    report.meta("seed", std::to_string(seed));
    report.meta("seed_source", "generated");
  }
  return seed;
}

ModelSpec model_from(const Params& p) {
  const std::string& name = p.str("model");
  const std::vector<double> w = p.has("weights") ? p.reals("weights") : std::vector<double>{};
  auto m1_weights = [&] {
    std::array<double, 9> a = kM1DefaultWeights;
    if (w.size() == 1) {
      a.fill(w[0]);
      a[4] = 1.0;
    } else if (w.size() == 9) {
      std::copy(w.begin(), w.end(), a.begin());
    } else if (!w.empty()) {
      throw UsageError("--weights for " + name + " takes 1 or 9 values");
    }
    return a;
  };
  if (name == "m1") return make_m1(m1_weights());
  if (name == "m4") return make_m4(p.has("rho") ? p.real("rho") : 0.2, m1_weights());
  if (name == "m2") {
    if (w.empty()) return make_m2();
    if (w.size() != 3) throw UsageError("--weights for m2 takes 3 values a1,a2,a3");
    return make_m2(w[0], w[1], w[2]);
  }
  if (name == "m5") return make_m5(p.has("rho") ? p.real("rho") : 0.3, p.has("d") ? p.integer("d") : 40);
  if (name == "white") return make_white(p.has("shape") ? p.shape("shape").size() : 2);
  throw UsageError("unknown --model '" + name + "' (expected m1|m2|m4|m5|white)");
}

SubsampleGrid grid_from(const Params& p, const Shape& shape) {
  SubsampleGrid grid = p.has("b") ? SubsampleGrid::make(p.shape("b")) : SubsampleGrid::from_gamma(shape, p.real("gamma"));
  if (p.has("h")) grid = SubsampleGrid::make(grid.b, p.shape("h"));
  grid.counts(shape);
  return grid;
}

Field input_from(const Params& p) {
  const std::string& path = p.str("input");
  if (!std::filesystem::exists(path)) throw UsageError("--input file '" + path + "' does not exist");
  return load_field(path);
}

void field_metadata(Report& report, const Field& field) {
  report.meta("shape", join_indices(field.shape(), 'x'));
  report.meta("p", std::to_string(field.p()));
}

Table matrix_table(const CovMatrix& s) {
  Table table{"sigma2", {}, {}};
  for (std::size_t c = 0; c < s.p(); ++c) table.columns.push_back("c" + std::to_string(c + 1));
  for (std::size_t r = 0; r < s.p(); ++r) {
    std::vector<Cell> row;
    for (std::size_t c = 0; c < s.p(); ++c) row.emplace_back(s(r, c));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void estimate_metadata(Report& report, const VarianceEstimate& est) {
  report.meta("m", format_shape(est.m));
  report.meta("kernel", kernel_name(est.kernel.kind));
  if (est.kernel.kind == KernelKind::quadratic_spectral) report.meta("bandwidth", format_real(est.kernel.qs_bandwidth));
  report.meta("kept_lags", std::to_string(est.kept_lags));
  if (est.rate_warning) report.meta("warning", "(max m)^3 >= min n: the lag box is large for this grid");
}

// ---------------------------------------------------------------------------
// Commands. Each one validates its parameters before computing.

struct Context {
  const Params& params;
  std::size_t threads;
  std::optional<std::string> out_path;
  std::ostream& out;
  std::ostream& err;
  Format format;
};

Report run_simulate(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"simulate", {}, {}};
  const ModelSpec spec = model_from(p);
  const Shape shape = p.shape("shape");
  validate(spec);
  if (shape.size() != model_dimension(spec)) {
    throw PreconditionError("--shape has " + std::to_string(shape.size()) + " components but model " + p.str("model") +
                            " lives on a " + std::to_string(model_dimension(spec)) + "-dimensional grid");
  }
  checked_site_count(shape);
  const std::uint64_t seed = seed_from(p, report);
  const Index rep = p.integer("replication");
  if (rep < 0) throw UsageError("--replication must be >= 0");
  const Field field = simulate(spec, shape, {seed, static_cast<std::uint64_t>(rep)});
  report.meta("model", model_name(spec));
  report.meta("replication", std::to_string(rep));
  field_metadata(report, field);
  report.meta("sigma2", format_real(analytic_sigma2(spec).scalar_value()));
  if (ctx.out_path) {
    save_field(*ctx.out_path, field);
    report.meta("output", *ctx.out_path);
    ctx.out_path.reset();  // metadata goes to standard output
  } else {
    write_field_csv(ctx.out, field);
    std::ostringstream meta;
    write_csv(meta, report);
    ctx.err << meta.str();
    report.tables.clear();
    report.command.clear();
  }
  return report;
}

Report run_estimate(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"estimate", {}, {}};
  const KernelSpec kernel = kernel_from(p);
  const std::string center = p.str("center");
  if (center != "none" && center != "global" && center != "temporal") {
    throw UsageError("--center must be none|global|temporal, got '" + center + "'");
  }
  const Field field = input_from(p);
  const Shape m = p.shape("m");
  validate_lag_bound(m, field.shape());
  field_metadata(report, field);
  const VarianceEstimate est = center == "temporal" ? lrv_estimate_centered(field, m, kernel)
                                                    : lrv_estimate(field, m, kernel,
                                                                   center == "global" ? Centering::global_mean
                                                                                      : Centering::none);
  estimate_metadata(report, est);
  report.meta("center", center);
  report.tables.push_back(matrix_table(est.sigma2));
  return report;
}

Report run_threshold_estimate(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"threshold-estimate", {}, {}};
  const KernelSpec kernel = kernel_from(p);
  const CutRule cut = cut_from(p);
  const std::string center = p.str("center");
  if (center != "none" && center != "global") throw UsageError("--center must be none|global, got '" + center + "'");
  Field field = input_from(p);
  const auto m = p.optional_shape("m");
  if (m) validate_lag_bound(*m, field.shape());
  if (center == "global") field = subtract_global_mean(field);
  field_metadata(report, field);
  const VarianceEstimate est = m ? threshold_lrv(field, *m, kernel, cut) : threshold_lrv_full(field, kernel, cut);
  estimate_metadata(report, est);
  report.meta("m_mode", m ? "explicit" : "full");
  if (!m) report.meta("evaluated_box", format_shape(effective_lag_box(field, cut)));
  report.meta("cut", cut_name(cut.kind));
  if (cut.kind == CutKind::power_l2 || cut.kind == CutKind::power_max) {
    report.meta("alpha", format_real(cut.alpha));
    report.meta("delta", format_real(cut.delta));
  } else if (cut.kind == CutKind::constant) {
    report.meta("c", format_real(cut.constant_c));
  }
  report.meta("center", center);
  report.tables.push_back(matrix_table(est.sigma2));
  return report;
}

Report run_subsample(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"subsample", {}, {}};
  const std::string stat = p.str("stat");
  if (stat != "lrv" && stat != "ring") throw UsageError("--stat must be lrv|ring, got '" + stat + "'");
  const std::vector<double> levels = p.reals("quantiles");
  for (double level : levels) {
    if (!(level > 0.0 && level < 1.0)) throw UsageError("--quantiles levels must lie in (0, 1)");
  }
  const Field field = input_from(p);
  if (field.p() != 1) throw PreconditionError("subsample is defined for univariate fields (p = 1)");
  const SubsampleGrid grid = grid_from(p, field.shape());

  BlockStatistic statistic;
  if (stat == "lrv") {
    const Shape m = p.shape("m");
    const KernelSpec kernel = kernel_from(p);
    const CutRule cut = cut_from(p);
    validate_lag_bound(m, grid.b);
    statistic = [m, kernel, cut](const Field& block) {
      return threshold_lrv(block, m, kernel, cut).sigma2.scalar_value();
    };
    report.meta("m", format_shape(m));
    report.meta("kernel", kernel_name(kernel.kind));
    report.meta("cut", cut_name(cut.kind));
  } else {
    const Index k = p.integer("k");
    for (Index b : grid.b) {
      if (k < 0 || k >= b) throw PreconditionError("--k must satisfy 0 <= k < min(b)");
    }
    statistic = [k](const Field& block) { return ring_statistic(block, k); };
    report.meta("k", std::to_string(k));
  }
  field_metadata(report, field);
  report.meta("stat", stat);
  report.meta("b", format_shape(grid.b));
  report.meta("h", format_shape(grid.h));
  report.meta("blocks", std::to_string(grid.block_count(field.shape())));
  report.meta("tau_b", format_real(grid.tau_b()));

  const double full = statistic(field);
  const std::vector<double> values = subsample_values(field, grid, statistic);
  const auto dist = empirical_distribution(values, full, grid.tau_b());
  report.meta("full_value", format_real(full));

  Table quantiles{"quantiles", {"level", "quantile"}, {}};
  for (double level : levels) quantiles.rows.push_back({level, subsample_quantile(dist, level)});
  Table blocks{"values", {"block", "origin", "value"}, {}};
  const auto origins = enumerate_blocks(field.shape(), grid);
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.rows.push_back({std::to_string(i), format_shape(origins[i]), values[i]});
  }
  report.tables.push_back(std::move(quantiles));
  report.tables.push_back(std::move(blocks));
  return report;
}

void selection_table(Report& report, const SelectionResult& sel) {
  Table tests{"ring_tests", {"k", "statistic", "lower", "upper", "rejects"}, {}};
  for (const RingTest& t : sel.tests) {
    tests.rows.push_back({std::to_string(t.k), t.statistic, t.lower, t.upper, t.rejects ? "true" : "false"});
  }
  report.meta("m_opt", format_shape(sel.m_opt));
  report.meta("stop_rule", stop_rule_name(sel.rule));
  report.meta("exhausted", sel.exhausted ? "true" : "false");
  report.tables.push_back(std::move(tests));
}

Report run_select_m(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"select-m", {}, {}};
  const double confidence = p.real("confidence");
  const Index m_max = p.integer("m-max");
  const StopRule rule = parse_stop_rule(p.str("stop-rule"));
  const Field field = input_from(p);
  const SubsampleGrid grid = grid_from(p, field.shape());
  field_metadata(report, field);
  report.meta("b", format_shape(grid.b));
  const SelectionResult sel = select_m(field, grid, confidence, m_max, rule);
  selection_table(report, sel);
  return report;
}

Report run_tune(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"tune", {}, {}};
  const auto alpha_grid = make_alpha_grid(p.real("alpha-max"), p.real("alpha-step"));
  const double tolerance = p.real("tolerance");
  if (!(tolerance >= 0.0)) throw UsageError("--tolerance must be >= 0");
  TuneOptions options;
  options.confidence = p.real("confidence");
  options.m_max = p.integer("m-max");
  options.stop_rule = parse_stop_rule(p.str("stop-rule"));
  options.cut_kind = parse_cut_kind(p.str("cut"));
  options.delta = p.real("delta");
  if (options.cut_kind != CutKind::power_l2 && options.cut_kind != CutKind::power_max) {
    throw UsageError("--cut for tune must be l2 or max");
  }
  const Field field = input_from(p);
  const SubsampleGrid grid = grid_from(p, field.shape());
  field_metadata(report, field);
  report.meta("b", format_shape(grid.b));

  AlphaTuning tuning;
  if (const auto m = p.optional_shape("m")) {
    validate_lag_bound(*m, grid.b);
    tuning = tune_alpha(field, grid, alpha_grid, tolerance, *m, options.cut_kind, options.delta);
    report.meta("m_source", "explicit");
  } else {
    const SelectionResult sel = select_m(field, grid, options.confidence, options.m_max, options.stop_rule);
    tuning = tune_alpha(field, grid, alpha_grid, tolerance, sel.m_opt, options.cut_kind, options.delta);
    report.meta("m_source", "select-m");
    selection_table(report, sel);
  }
  report.meta("m", format_shape(tuning.m));
  report.meta("alpha", format_real(tuning.alpha));
  report.meta("tolerance", format_real(tolerance));
  Table curve{"rmse_curve", {"alpha", "rmse_sub"}, {}};
  for (std::size_t i = 0; i < tuning.alpha_grid.size(); ++i) curve.rows.push_back({tuning.alpha_grid[i], tuning.rmse[i]});
  report.tables.push_back(std::move(curve));
  return report;
}

Report run_image_test(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"image-test", {}, {}};
  const double level = p.real("level");
  if (!(level > 0.0 && level < 1.0)) throw UsageError("--level must lie in (0, 1)");
  const Field field = input_from(p);
  if (field.p() != 1) throw PreconditionError("image-test is defined for univariate fields (p = 1)");

  Reference reference = 0.0;
  const std::string& ref_text = p.str("reference");
  try {
    reference = parse_real(ref_text);
  } catch (const ParseError&) {
    if (!std::filesystem::exists(ref_text)) {
      throw UsageError("--reference '" + ref_text + "' is neither a number nor an existing file");
    }
    reference = load_field(ref_text);
  }
  field_metadata(report, field);

  TestResult result;
  if (p.has("sigma2")) {
    result = image_test_known_variance(field, reference, level, p.real("sigma2"));
    report.meta("variance", "known");
  } else {
    const KernelSpec kernel = kernel_from(p);
    const CutRule cut = cut_from(p);
    const auto m = p.optional_shape("m");
    if (m) validate_lag_bound(*m, field.shape());
    result = image_test(field, reference, level, m, kernel, cut);
    report.meta("variance", "estimated");
    report.meta("m_mode", m ? "explicit" : "full");
    report.meta("cut", cut_name(cut.kind));
    if (cut.kind == CutKind::power_l2 || cut.kind == CutKind::power_max) report.meta("alpha", format_real(cut.alpha));
  }
  report.meta("reference", std::holds_alternative<double>(reference) ? "constant" : "field");
  Table table{"test", {"statistic", "sigma_hat", "critical", "level", "sigma2", "kept_lags", "reject"}, {}};
  table.rows.push_back({result.statistic, result.sigma_hat, result.critical, result.level, result.sigma2,
                        std::to_string(result.kept_lags), result.reject ? "true" : "false"});
  report.tables.push_back(std::move(table));
  return report;
}

Report run_reproduce(Context& ctx) {
  const Params& p = ctx.params;
  Report report{"reproduce", {}, {}};
  const Index id = p.integer("table");
  const auto available = reproducible_tables();
  if (std::find(available.begin(), available.end(), id) == available.end()) {
    throw UsageError("--table must be one of 1, 2, 3, 5, 6, 8, 10; got " + std::to_string(id));
  }
  const Index reps = p.integer("reps");
  if (reps < 2) throw UsageError("--reps must be >= 2");
  ReproduceOptions options;
  options.reps = static_cast<std::size_t>(reps);
  options.threads = ctx.threads;
  options.type1_m = p.optional_shape("m");
  if (options.type1_m && options.type1_m->size() != 2) throw UsageError("--m for table 10 needs two components");
  options.seed = seed_from(p, report);
  const TableReport table = reproduce_table(static_cast<int>(id), options);
  for (const auto& [key, value] : table.metadata) {
    if (key != "seed") report.meta(key, value);
  }
  Table out{table.name, table.columns, {}};
  for (const auto& row : table.rows) {
    std::vector<Cell> cells;
    for (const auto& cell : row) cells.emplace_back(cell);
    out.rows.push_back(std::move(cells));
  }
  report.tables.push_back(std::move(out));
  return report;
}

using Runner = Report (*)(Context&);

Runner runner_for(const std::string& name) {
  static const std::map<std::string, Runner> table{
      {"simulate", run_simulate},         {"estimate", run_estimate}, {"threshold-estimate", run_threshold_estimate},
      {"subsample", run_subsample},       {"tune", run_tune},         {"select-m", run_select_m},
      {"image-test", run_image_test},     {"reproduce", run_reproduce}};
  return table.at(name);
}

bool is_known(const std::vector<OptionDef>& defs, const std::string& key) {
  return std::any_of(defs.begin(), defs.end(), [&](const OptionDef& d) { return d.name == key; });
}

const CommandDef* find_command(const std::string& name) {
  for (const auto& cmd : commands()) {
    if (cmd.name == name) return &cmd;
  }
  return nullptr;
}

/// Rejects unknown sections and keys anywhere in the file.
void check_config_keys(const ConfigFile& config, const CommandDef& active) {
  for (const auto& [raw, value] : config.global) {
    const std::string key = normalize_key(raw);
    if (find_command(key) && value.empty()) continue;  // empty section
    if (!is_known(global_options(), key) && !is_known(active.options, key)) {
      throw UsageError("unknown key '" + raw + "' in config file (not an option of '" + active.name + "')");
    }
    if (key == "config") throw UsageError("config files cannot include other config files");
  }
  for (const auto& [section, keys] : config.sections) {
    const CommandDef* cmd = find_command(section);
    if (!cmd) throw UsageError("unknown section [" + section + "] in config file");
    for (const auto& [raw, value] : keys) {
      const std::string key = normalize_key(raw);
      if (!is_known(cmd->options, key) && !is_known(global_options(), key)) {
        throw UsageError("unknown key '" + raw + "' in section [" + section + "] of config file");
      }
    }
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymptotic variance estimation for random fields on grids", "rfvar"};
  app.fallthrough();
  app.require_subcommand(1);

  std::map<std::string, std::string> global_values;
  std::map<std::string, CLI::Option*> global_opts;
  for (const auto& def : global_options()) {
    global_opts[def.name] = app.add_option("--" + def.name, global_values[def.name], def.help)->envname(env_name(def.name));
  }

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands()) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    sub->set_help_flag("--help", "print this help message and exit");
    for (const auto& def : cmd.options) {
      std::string help = def.help;
      if (!def.fallback.empty()) help += " [default: " + def.fallback + "]";
      opts[cmd.name][def.name] =
          sub->add_option("--" + def.name, values[cmd.name][def.name], help)->envname(env_name(def.name));
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "rfvar: usage error: " << e.what() << '\n';
    return 2;
  }

  const CommandDef* active = nullptr;
  for (const auto& cmd : commands()) {
    if (subs[cmd.name]->parsed()) active = &cmd;
  }
  if (!active) {
    err << "rfvar: usage error: a command is required\n";
    return 2;
  }

  Params params;
  Context* ctx_ptr = nullptr;
  std::unique_ptr<Context> ctx;
  std::optional<std::ofstream> file_out;
  try {
    ConfigFile config;
    if (global_opts["config"]->count() > 0) {
      try {
        config = load_config(global_values["config"]);
      } catch (const Error& e) {
        throw UsageError(std::string("--config: ") + e.what());
      }
      params.set("config", global_values["config"], "flag");
    }
    check_config_keys(config, *active);
    auto from_config = [&](const std::string& name) -> std::optional<std::string> {
      if (const auto sec = config.sections.find(active->name); sec != config.sections.end()) {
        for (const auto& [raw, value] : sec->second) {
          if (normalize_key(raw) == name) return value;
        }
      }
      for (const auto& [raw, value] : config.global) {
        if (normalize_key(raw) == name) return value;
      }
      return std::nullopt;
    };
    auto resolve = [&](const OptionDef& def, CLI::Option* opt, const std::string& given) {
      if (opt->count() > 0) {
        params.set(def.name, given, std::getenv(env_name(def.name).c_str()) ? "flag/env" : "flag");
      } else if (auto v = from_config(def.name)) {
        params.set(def.name, *v, "config");
      } else if (!def.fallback.empty()) {
        params.set(def.name, def.fallback, "default");
      }
    };
    for (const auto& def : global_options()) {
      if (def.name != "config") resolve(def, global_opts[def.name], global_values[def.name]);
    }
    for (const auto& def : active->options) resolve(def, opts[active->name][def.name], values[active->name][def.name]);

    const Format format = parse_format(params.str("format"));
    std::size_t threads = std::max(1U, std::thread::hardware_concurrency());
    if (params.has("threads")) {
      const Index t = params.integer("threads");
      if (t < 1) throw UsageError("--threads must be >= 1");
      threads = static_cast<std::size_t>(t);
    }
    std::optional<std::string> out_path;
    if (params.has("out")) out_path = params.str("out");
    ctx = std::make_unique<Context>(Context{params, threads, out_path, out, err, format});
    ctx_ptr = ctx.get();

    Report report = runner_for(active->name)(*ctx_ptr);
    if (report.command.empty()) return 0;  // payload already written
    params.echo(report);
    report.meta("threads", std::to_string(threads));
    if (ctx_ptr->out_path) {
      file_out.emplace(*ctx_ptr->out_path);
      if (!*file_out) throw UsageError("cannot open --out file '" + *ctx_ptr->out_path + "'");
      write_report(*file_out, report, format);
    } else {
      write_report(out, report, format);
    }
    return 0;
  } catch (const UsageError& e) {
    err << "rfvar: usage error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    err << "rfvar: usage error: " << e.what() << '\n';
    return 2;
  } catch (const BlockError& e) {
    err << "rfvar: error [" << e.kind() << "] in " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "rfvar: error [" << e.kind() << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "rfvar: error [InternalError]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rfvar::cli
