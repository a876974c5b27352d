#include "rfvar/subsampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfvar/errors.hpp"

namespace rfvar {

SubsampleGrid SubsampleGrid::make(Shape b, Shape h) {
  if (b.empty()) throw PreconditionError("block shape b must have at least one component");
  if (h.empty()) h.assign(b.size(), 1);
  if (h.size() != b.size()) throw PreconditionError("stride h must have as many components as b");
  for (std::size_t a = 0; a < b.size(); ++a) {
    if (b[a] < 1) throw PreconditionError("block shape components must be >= 1, got b = " + join_indices(b, ','));
    if (h[a] < 1) throw PreconditionError("stride components must be >= 1, got h = " + join_indices(h, ','));
  }
  return SubsampleGrid{std::move(b), std::move(h)};
}

SubsampleGrid SubsampleGrid::from_gamma(const Shape& n, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionError("block exponent gamma must lie in (0, 1]");
  Shape b(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    if (n[a] < 1) throw PreconditionError("field extents must be >= 1");
    b[a] = std::max<Index>(1, static_cast<Index>(std::floor(std::pow(static_cast<double>(n[a]), gamma) + 1e-9)));
  }
  return make(std::move(b));
}

Shape SubsampleGrid::counts(const Shape& n) const {
  if (n.size() != b.size()) {
    throw PreconditionError("block shape has " + std::to_string(b.size()) + " components but the field has q = " +
                            std::to_string(n.size()));
  }
  Shape counts(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    if (b[a] > n[a]) {
      throw PreconditionError("block shape b = " + join_indices(b, ',') + " exceeds the field shape " +
                              join_indices(n, 'x'));
    }
    counts[a] = (n[a] - b[a]) / h[a] + 1;
  }
  return counts;
}

std::size_t SubsampleGrid::block_count(const Shape& n) const {
  std::size_t total = 1;
  for (Index c : counts(n)) total *= static_cast<std::size_t>(c);
  return total;
}

double SubsampleGrid::tau_b() const {
  double volume = 1.0;
  for (Index v : b) volume *= static_cast<double>(v);
  return std::sqrt(volume);
}

std::vector<Shape> enumerate_blocks(const Shape& shape, const SubsampleGrid& grid) {
  const Shape counts = grid.counts(shape);
  std::vector<Shape> origins;
  origins.reserve(grid.block_count(shape));
  Shape pos(shape.size(), 0);
  while (true) {
    Shape origin(shape.size());
    for (std::size_t a = 0; a < shape.size(); ++a) origin[a] = pos[a] * grid.h[a];
    origins.push_back(std::move(origin));
    std::size_t a = shape.size();
    while (a-- > 0) {
      if (++pos[a] < counts[a]) break;
      pos[a] = 0;
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return origins;
}

Field extract_block(const Field& field, const Shape& origin, const Shape& extent) {
  if (origin.size() != field.q() || extent.size() != field.q()) {
    throw PreconditionError("block origin and extent must have one component per axis");
  }
  for (std::size_t a = 0; a < field.q(); ++a) {
    if (origin[a] < 0 || extent[a] < 1 || origin[a] + extent[a] > field.extent(a)) {
      throw PreconditionError("block does not lie inside the field");
    }
  }
  const std::size_t p = field.p();
  const std::size_t q = field.q();
  const std::size_t sites = checked_site_count(extent);
  std::vector<double> data;
  data.reserve(sites * p);
  const auto run = static_cast<std::size_t>(extent[q - 1]);
  Shape pos(q, 0);
  while (true) {
    std::size_t base = 0;
    for (std::size_t a = 0; a < q; ++a) base += static_cast<std::size_t>(origin[a] + pos[a]) * field.strides()[a];
    const auto src = field.data().subspan(base * p, run * p);
    data.insert(data.end(), src.begin(), src.end());
    std::size_t a = q - 1;
    while (a-- > 0) {
      if (++pos[a] < extent[a]) break;
      pos[a] = 0;
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return Field(extent, p, std::move(data));
}

std::vector<double> subsample_values(const Field& field, const SubsampleGrid& grid, const BlockStatistic& statistic) {
  const auto origins = enumerate_blocks(field.shape(), grid);
  std::vector<double> values;
  values.reserve(origins.size());
  for (std::size_t i = 0; i < origins.size(); ++i) {
    try {
      values.push_back(statistic(extract_block(field, origins[i], grid.b)));
    } catch (const BlockError&) {
      throw;
    } catch (const Error& e) {
      throw BlockError(i, e.kind(), e.what());
    } catch (const std::exception& e) {
      throw BlockError(i, "StatisticError", e.what());
    }
  }
  return values;
}

SamplingDistribution::SamplingDistribution(std::vector<double> scaled_sorted, double center, double tau_b)
    : values_(std::move(scaled_sorted)), center_(center), tau_b_(tau_b) {
  if (values_.empty()) throw PreconditionError("sampling distribution needs at least one subsample value");
  if (!std::is_sorted(values_.begin(), values_.end())) {
    throw PreconditionError("sampling distribution values must be sorted");
  }
}

double SamplingDistribution::cdf(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

SamplingDistribution empirical_distribution(std::span<const double> values, double center, double tau_b) {
  if (values.empty()) throw PreconditionError("empirical_distribution: no subsample values");
  if (!(tau_b > 0.0) || !std::isfinite(tau_b)) throw PreconditionError("empirical_distribution: tau_b must be > 0");
  std::vector<double> scaled(values.size());
  std::transform(values.begin(), values.end(), scaled.begin(), [&](double v) { return tau_b * (v - center); });
  std::sort(scaled.begin(), scaled.end());
  return SamplingDistribution(std::move(scaled), center, tau_b);
}

double subsample_quantile(const SamplingDistribution& dist, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("quantile level gamma must lie in (0, 1)");
  const double n = static_cast<double>(dist.size());
  auto rank = static_cast<std::size_t>(std::ceil(gamma * n));
  // Guard against gamma * n landing a hair above an integer.
  if (rank > 1 && static_cast<double>(rank - 1) >= gamma * n * (1.0 - 1e-12)) --rank;
  rank = std::clamp<std::size_t>(rank, 1, dist.size());
  return dist.values()[rank - 1];
}

namespace {

// Summed-area table over a q-dimensional box, padded with a leading zero slab
// on every axis.
class SummedArea {
 public:
  SummedArea(Shape extent) : extent_(std::move(extent)), stride_(extent_.size()) {
    std::size_t total = 1;
    for (std::size_t a = extent_.size(); a-- > 0;) {
      stride_[a] = total;
      total *= static_cast<std::size_t>(extent_[a] + 1);
    }
    table_.assign(total, 0.0);
  }

  double& cell(std::span<const Index> padded) {
    std::size_t idx = 0;
    for (std::size_t a = 0; a < padded.size(); ++a) idx += static_cast<std::size_t>(padded[a]) * stride_[a];
    return table_[idx];
  }

  void integrate() {
    const std::size_t q = extent_.size();
    for (std::size_t axis = 0; axis < q; ++axis) {
      const std::size_t step = stride_[axis];
      const auto len = static_cast<std::size_t>(extent_[axis] + 1);
      for (std::size_t idx = 0; idx < table_.size(); ++idx) {
        const std::size_t coord = (idx / step) % len;
        if (coord > 0) table_[idx] += table_[idx - step];
      }
    }
  }

  /// Sum over the half-open box [lo, hi) in unpadded coordinates.
  double box_sum(std::span<const Index> lo, std::span<const Index> hi) const {
    const std::size_t q = extent_.size();
    double sum = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << q); ++corner) {
      std::size_t idx = 0;
      int lows = 0;
      for (std::size_t a = 0; a < q; ++a) {
        const bool use_lo = (corner >> a) & 1U;
        lows += use_lo ? 1 : 0;
        idx += static_cast<std::size_t>(use_lo ? lo[a] : hi[a]) * stride_[a];
      }
      sum += (lows % 2 == 0) ? table_[idx] : -table_[idx];
    }
    return sum;
  }

 private:
  Shape extent_;
  std::vector<std::size_t> stride_;
  std::vector<double> table_;
};

}  // namespace

BlockAutocovTable::BlockAutocovTable(const Field& field, const SubsampleGrid& grid, Shape max_lag)
    : block_shape_(grid.b), max_lag_(std::move(max_lag)), p_(field.p()) {
  const std::size_t q = field.q();
  if (max_lag_.size() != q) throw PreconditionError("lag bound rank does not match the field");
  origins_ = enumerate_blocks(field.shape(), grid);
  for (std::size_t a = 0; a < q; ++a) {
    if (max_lag_[a] < 0) throw PreconditionError("lag bound components must be >= 0");
    if (max_lag_[a] >= block_shape_[a]) {
      throw PreconditionError("m = " + join_indices(max_lag_, ',') + " must be smaller than the block shape b = " +
                              join_indices(block_shape_, ',') + " in every component");
    }
  }
  lags_ = lag_box(max_lag_);
  const std::size_t nlags = lags_.size();
  const std::size_t nblocks = origins_.size();
  values_.assign(nblocks * nlags, CovMatrix(p_));

  const Shape& n = field.shape();
  const double* x = field.data().data();
  Shape lo(q), hi(q), region(q), pos(q), padded(q), blo(q), bhi(q);
  for (std::size_t k = 0; k < (nlags + 1) / 2; ++k) {
    const std::size_t li = nlags - 1 - k;
    const Lag& lag = lags_[li];
    const std::size_t mirror = k;
    std::ptrdiff_t shift = 0;
    for (std::size_t a = 0; a < q; ++a) {
      lo[a] = lag[a] < 0 ? -lag[a] : 0;
      hi[a] = n[a] - (lag[a] > 0 ? lag[a] : 0);
      region[a] = hi[a] - lo[a];
      shift += static_cast<std::ptrdiff_t>(lag[a]) * static_cast<std::ptrdiff_t>(field.strides()[a]);
    }
    double inv = 1.0;
    for (std::size_t a = 0; a < q; ++a) inv /= static_cast<double>(block_shape_[a] - std::abs(lag[a]));

    for (std::size_t r = 0; r < p_; ++r) {
      for (std::size_t c = 0; c < p_; ++c) {
        SummedArea sat(region);
        std::fill(pos.begin(), pos.end(), 0);
        while (true) {
          std::size_t site = 0;
          for (std::size_t a = 0; a < q; ++a) {
            site += static_cast<std::size_t>(lo[a] + pos[a]) * field.strides()[a];
            padded[a] = pos[a] + 1;
          }
          const auto partner = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(site) + shift);
          sat.cell(padded) = x[site * p_ + r] * x[partner * p_ + c];
          std::size_t a = q;
          while (a-- > 0) {
            if (++pos[a] < region[a]) break;
            pos[a] = 0;
          }
          if (a == static_cast<std::size_t>(-1)) break;
        }
        sat.integrate();
        for (std::size_t blk = 0; blk < nblocks; ++blk) {
          const Shape& o = origins_[blk];
          for (std::size_t a = 0; a < q; ++a) {
            // Block sites i with i and i + j inside the block, in region coordinates.
            blo[a] = o[a] + (lag[a] < 0 ? -lag[a] : 0) - lo[a];
            bhi[a] = o[a] + block_shape_[a] - (lag[a] > 0 ? lag[a] : 0) - lo[a];
          }
          const double value = sat.box_sum(blo, bhi) * inv;
          values_[blk * nlags + li](r, c) = value;
          if (mirror != li) values_[blk * nlags + mirror](c, r) = value;
        }
      }
    }
  }
}

std::size_t BlockAutocovTable::lag_index(const Lag& lag) const {
  if (lag.q() != max_lag_.size()) throw PreconditionError("BlockAutocovTable: lag rank mismatch");
  std::size_t index = 0;
  for (std::size_t a = 0; a < max_lag_.size(); ++a) {
    if (std::abs(lag[a]) > max_lag_[a]) throw PreconditionError("BlockAutocovTable: lag outside the tabulated box");
    index = index * static_cast<std::size_t>(2 * max_lag_[a] + 1) + static_cast<std::size_t>(lag[a] + max_lag_[a]);
  }
  return index;
}

const CovMatrix& BlockAutocovTable::at(std::size_t block, std::size_t lag_index) const {
  return values_.at(block * lags_.size() + lag_index);
}

CovMatrix BlockAutocovTable::estimate(std::size_t block, std::span<const Index> m, const KernelSpec& kernel,
                                      const CutRule& cut) const {
  CovMatrix acc(p_);
  for (const Lag& lag : lag_box(m)) {
    accumulate_thresholded(acc, at(block, lag_index(lag)), weight(kernel, lag, m),
                           cut_threshold(cut, lag, block_shape_));
  }
  return acc;
}

double BlockAutocovTable::ring_sum(std::size_t block, Index k) const {
  if (p_ != 1) throw PreconditionError("ring statistic is defined for p = 1 only");
  double sum = 0.0;
  for (const Lag& lag : ring_lags(k, max_lag_.size())) sum += at(block, lag_index(lag)).scalar_value();
  return sum;
}

namespace {

void require_univariate(const Field& field, const char* what) {
  if (field.p() != 1) {
    throw PreconditionError(std::string(what) + " is defined for univariate fields (p = 1), got p = " +
                            std::to_string(field.p()));
  }
}

double rmse_from_blocks(const BlockAutocovTable& blocks, std::span<const Index> m, double center, const CutRule& cut) {
  const KernelSpec constant{KernelKind::constant, 0.0};
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < blocks.block_count(); ++i) {
    const double d = blocks.estimate(i, m, constant, cut).scalar_value() - center;
    sum_sq += d * d;
  }
  return std::sqrt(sum_sq / static_cast<double>(blocks.block_count()));
}

Shape uniform_shape(std::size_t q, Index k) { return Shape(q, k); }

}  // namespace

std::vector<double> subsample_rmse_surface(const BlockAutocovTable& blocks, std::span<const Shape> m_list,
                                           std::span<const double> alphas, CutKind cut_kind, double delta,
                                           double center) {
  if (blocks.p() != 1) throw PreconditionError("subsampled RMSE is defined for p = 1 only");
  if (m_list.empty() || alphas.empty()) throw PreconditionError("m list and alpha list must not be empty");
  const std::size_t nm = m_list.size();
  const std::size_t na = alphas.size();
  const std::size_t nlags = blocks.lags().size();

  // Lag indices of every m box, in lag_box order.
  std::vector<std::vector<std::size_t>> members(nm);
  for (std::size_t k = 0; k < nm; ++k) {
    for (const Lag& lag : lag_box(m_list[k])) members[k].push_back(blocks.lag_index(lag));
  }
  std::vector<double> threshold(na * nlags);
  for (std::size_t a = 0; a < na; ++a) {
    const CutRule cut{cut_kind, alphas[a], delta, 0.0};
    validate(cut);
    for (std::size_t li = 0; li < nlags; ++li) {
      threshold[a * nlags + li] = cut_threshold(cut, blocks.lags()[li], blocks.block_shape());
    }
  }

  std::vector<double> sum_sq(na * nm, 0.0);
  std::vector<double> kept(nlags);
  for (std::size_t b = 0; b < blocks.block_count(); ++b) {
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t li = 0; li < nlags; ++li) {
        const double v = blocks.at(b, li).scalar_value();
        kept[li] = std::abs(v) > threshold[a * nlags + li] ? v : 0.0;
      }
      for (std::size_t k = 0; k < nm; ++k) {
        double s = 0.0;
        for (std::size_t li : members[k]) s += kept[li];
        const double d = s - center;
        sum_sq[a * nm + k] += d * d;
      }
    }
  }
  const auto nb = static_cast<double>(blocks.block_count());
  for (double& v : sum_sq) v = std::sqrt(v / nb);
  return sum_sq;
}

double subsample_rmse(const Field& field, const SubsampleGrid& grid, std::span<const Index> m,
                      std::span<const Index> m_center, const CutRule& cut) {
  require_univariate(field, "subsample_rmse");
  validate(cut);
  const KernelSpec constant{KernelKind::constant, 0.0};
  const double center = lrv_estimate(field, m_center, constant).sigma2.scalar_value();
  const BlockAutocovTable blocks(field, grid, Shape(m.begin(), m.end()));
  return rmse_from_blocks(blocks, m, center, cut);
}

double subsample_rmse(const Field& field, const SubsampleGrid& grid, std::span<const Index> m, const CutRule& cut) {
  return subsample_rmse(field, grid, m, m, cut);
}

double subsample_mean(const Field& field, const SubsampleGrid& grid, std::span<const Index> m) {
  require_univariate(field, "subsample_mean");
  const KernelSpec constant{KernelKind::constant, 0.0};
  const BlockAutocovTable blocks(field, grid, Shape(m.begin(), m.end()));
  double sum = 0.0;
  for (std::size_t i = 0; i < blocks.block_count(); ++i) {
    sum += blocks.estimate(i, m, constant, CutRule::none()).scalar_value();
  }
  return sum / static_cast<double>(blocks.block_count());
}

double ring_statistic(const Field& field, Index k) {
  require_univariate(field, "ring_statistic");
  if (k < 0) throw PreconditionError("ring index k must be >= 0");
  for (Index n : field.shape()) {
    if (k >= n) throw PreconditionError("ring index k must be smaller than every field extent");
  }
  const AutocovTable table(field, uniform_shape(field.q(), k));
  double sum = 0.0;
  for (const Lag& lag : ring_lags(k, field.q())) sum += table.at(lag).scalar_value();
  return sum;
}

StopRule parse_stop_rule(std::string_view name) {
  if (name == "first_acceptance" || name == "first-acceptance" || name == "accept") return StopRule::first_acceptance;
  if (name == "first_rejection" || name == "first-rejection" || name == "reject") return StopRule::first_rejection;
  throw PreconditionError("unknown stop rule '" + std::string(name) + "' (expected first_acceptance|first_rejection)");
}

std::string stop_rule_name(StopRule rule) {
  return rule == StopRule::first_acceptance ? "first_acceptance" : "first_rejection";
}

RingTest ring_test(const BlockAutocovTable& blocks, const AutocovTable& full, Index k, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw PreconditionError("confidence must lie in (0, 1)");
  RingTest test;
  test.k = k;
  for (const Lag& lag : ring_lags(k, full.max_lag().size())) test.statistic += full.at(lag).scalar_value();

  std::vector<double> values(blocks.block_count());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = blocks.ring_sum(i, k);
  double volume_b = 1.0;
  for (Index v : blocks.block_shape()) volume_b *= static_cast<double>(v);
  double volume_n = 1.0;
  for (Index v : full.field_shape()) volume_n *= static_cast<double>(v);

  const auto dist = empirical_distribution(values, test.statistic, std::sqrt(volume_b));
  const double tail = 0.5 * (1.0 - confidence);
  const double tau_n = std::sqrt(volume_n);
  test.lower = test.statistic - subsample_quantile(dist, 1.0 - tail) / tau_n;
  test.upper = test.statistic - subsample_quantile(dist, tail) / tau_n;
  test.rejects = !(test.lower <= 0.0 && 0.0 <= test.upper);
  return test;
}

SelectionResult select_m(const Field& field, const SubsampleGrid& grid, double confidence, Index m_max,
                         StopRule rule) {
  require_univariate(field, "select_m");
  if (m_max < 1) throw PreconditionError("m_max must be >= 1");
  const Index min_b = *std::min_element(grid.b.begin(), grid.b.end());
  if (m_max >= min_b) {
    throw PreconditionError("m_max = " + std::to_string(m_max) + " must be smaller than every block extent (min b = " +
                            std::to_string(min_b) + ")");
  }
  const Shape box = uniform_shape(field.q(), m_max);
  const BlockAutocovTable blocks(field, grid, box);
  const AutocovTable full(field, box);

  SelectionResult result;
  result.rule = rule;
  for (Index k = 1; k <= m_max; ++k) {
    result.tests.push_back(ring_test(blocks, full, k, confidence));
    const bool stop = rule == StopRule::first_acceptance ? !result.tests.back().rejects : result.tests.back().rejects;
    if (stop) {
      result.m_opt = uniform_shape(field.q(), k - 1);
      return result;
    }
  }
  result.m_opt = box;
  result.exhausted = true;
  return result;
}

double pick_alpha(std::span<const double> alpha_grid, std::span<const double> rmse, double tolerance) {
  if (alpha_grid.empty() || alpha_grid.size() != rmse.size()) {
    throw PreconditionError("alpha grid and RMSE curve must be nonempty and of equal length");
  }
  if (!(tolerance >= 0.0)) throw PreconditionError("tolerance must be >= 0");
  const double limit = (1.0 + tolerance) * rmse[0];
  double chosen = alpha_grid[0];
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    if (rmse[k] <= limit) chosen = alpha_grid[k];
  }
  return chosen;
}

namespace {

void validate_alpha_grid(std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw PreconditionError("alpha grid must not be empty");
  if (alpha_grid.front() != 0.0) throw PreconditionError("alpha grid must start at 0");
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end())) throw PreconditionError("alpha grid must be ascending");
}

}  // namespace

AlphaTuning tune_alpha(const Field& field, const SubsampleGrid& grid, std::span<const double> alpha_grid,
                       double tolerance, std::span<const Index> m, CutKind cut_kind, double delta) {
  require_univariate(field, "tune_alpha");
  validate_alpha_grid(alpha_grid);
  if (cut_kind != CutKind::power_l2 && cut_kind != CutKind::power_max) {
    throw PreconditionError("alpha tuning needs a power_l2 or power_max cut rule");
  }
  const KernelSpec constant{KernelKind::constant, 0.0};
  const double center = lrv_estimate(field, m, constant).sigma2.scalar_value();
  const BlockAutocovTable blocks(field, grid, Shape(m.begin(), m.end()));

  AlphaTuning result;
  result.m.assign(m.begin(), m.end());
  result.alpha_grid.assign(alpha_grid.begin(), alpha_grid.end());
  const Shape box(m.begin(), m.end());
  result.rmse = subsample_rmse_surface(blocks, std::span<const Shape>(&box, 1), alpha_grid, cut_kind, delta, center);
  result.alpha = pick_alpha(result.alpha_grid, result.rmse, tolerance);
  return result;
}

AlphaTuning tune_alpha(const Field& field, const SubsampleGrid& grid, std::span<const double> alpha_grid,
                       double tolerance, const TuneOptions& options) {
  const SelectionResult selection = select_m(field, grid, options.confidence, options.m_max, options.stop_rule);
  return tune_alpha(field, grid, alpha_grid, tolerance, selection.m_opt, options.cut_kind, options.delta);
}

std::vector<double> make_alpha_grid(double max, double step) {
  if (!(step > 0.0) || !(max >= 0.0)) throw PreconditionError("alpha grid needs step > 0 and max >= 0");
  const auto count = static_cast<std::size_t>(std::floor(max / step + 1e-9));
  std::vector<double> grid(count + 1);
  for (std::size_t k = 0; k <= count; ++k) grid[k] = static_cast<double>(k) * step;
  return grid;
}

}  // namespace rfvar
