#include "rfvar/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "rfvar/errors.hpp"

namespace rfvar {

CutKind parse_cut_kind(std::string_view name) {
  if (name == "none") return CutKind::none;
  if (name == "power_l2" || name == "l2") return CutKind::power_l2;
  if (name == "power_max" || name == "max") return CutKind::power_max;
  if (name == "constant") return CutKind::constant;
  throw PreconditionError("unknown cut rule '" + std::string(name) + "' (expected none|power_l2|power_max|constant)");
}

std::string cut_name(CutKind kind) {
  switch (kind) {
    case CutKind::none: return "none";
    case CutKind::power_l2: return "power_l2";
    case CutKind::power_max: return "power_max";
    case CutKind::constant: return "constant";
  }
  return "unknown";
}

void validate(const CutRule& rule) {
  if (!(rule.alpha >= 0.0) || !std::isfinite(rule.alpha)) throw PreconditionError("cut alpha must be finite and >= 0");
  if (!(rule.delta > 0.0) || !std::isfinite(rule.delta)) throw PreconditionError("cut delta must be finite and > 0");
  if (std::isnan(rule.constant_c)) throw PreconditionError("cut constant must not be NaN");
}

double cut_threshold(const CutRule& rule, const Lag& lag, std::span<const Index> shape) {
  double volume = 1.0;
  for (Index n : shape) volume *= static_cast<double>(n);
  switch (rule.kind) {
    case CutKind::none:
      return -std::numeric_limits<double>::infinity();
    case CutKind::power_l2:
      return std::pow(lag.l2_norm(), rule.alpha) / volume - rule.delta;
    case CutKind::power_max:
      return std::pow(static_cast<double>(lag.max_abs()), rule.alpha) / volume - rule.delta;
    case CutKind::constant:
      return rule.constant_c;
  }
  return -std::numeric_limits<double>::infinity();
}

bool accumulate_thresholded(CovMatrix& acc, const CovMatrix& gamma, double w, double c) {
  auto out = acc.entries();
  const auto in = gamma.entries();
  bool kept = false;
  for (std::size_t k = 0; k < in.size(); ++k) {
    if (std::abs(in[k]) > c) {
      out[k] += w * in[k];
      kept = true;
    }
  }
  return kept;
}

bool rate_condition_violated(std::span<const Index> m, std::span<const Index> shape) noexcept {
  if (m.empty() || shape.empty()) return false;
  const double m_star = static_cast<double>(*std::max_element(m.begin(), m.end()));
  const double n_star = static_cast<double>(*std::min_element(shape.begin(), shape.end()));
  return m_star * m_star * m_star >= n_star;
}

void validate_lag_bound(std::span<const Index> m, std::span<const Index> shape) {
  if (m.size() != shape.size()) {
    throw PreconditionError("m has " + std::to_string(m.size()) + " components but the field has q = " +
                            std::to_string(shape.size()));
  }
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] < 0) throw PreconditionError("m components must be >= 0, got m = " + join_indices(m, ','));
    if (m[a] >= shape[a]) {
      throw PreconditionError("m = " + join_indices(m, ',') + " must be smaller than the field shape " +
                              join_indices(shape, 'x') + " in every component");
    }
  }
}

VarianceEstimate estimate_from_table(const AutocovTable& table, std::span<const Index> m, const KernelSpec& kernel,
                                     const CutRule& cut, std::span<const Index> cut_shape) {
  validate(kernel);
  validate(cut);
  const Shape& box = table.max_lag();
  if (m.size() != box.size()) throw PreconditionError("m rank does not match the autocovariance table");
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] < 0 || m[a] > box[a]) throw PreconditionError("m exceeds the tabulated lag box");
  }

  VarianceEstimate est{CovMatrix(table.p()), Shape(m.begin(), m.end()), kernel, cut, 0,
                       rate_condition_violated(m, table.field_shape())};
  for (const Lag& lag : lag_box(m)) {
    const double w = weight(kernel, lag, m);
    const double c = cut_threshold(cut, lag, cut_shape);
    if (accumulate_thresholded(est.sigma2, table.at(lag), w, c)) ++est.kept_lags;
  }
  return est;
}

VarianceEstimate estimate_from_table(const AutocovTable& table, std::span<const Index> m, const KernelSpec& kernel,
                                     const CutRule& cut) {
  return estimate_from_table(table, m, kernel, cut, table.field_shape());
}

VarianceEstimate estimate_over_table(const AutocovTable& table, std::span<const Index> m, const KernelSpec& kernel,
                                     const CutRule& cut) {
  validate(kernel);
  validate(cut);
  const Shape& box = table.max_lag();
  if (m.size() != box.size()) throw PreconditionError("m rank does not match the autocovariance table");
  for (std::size_t a = 0; a < m.size(); ++a) {
    if (m[a] < box[a]) throw PreconditionError("weight box m must contain the tabulated lag box");
  }
  VarianceEstimate est{CovMatrix(table.p()), Shape(m.begin(), m.end()), kernel, cut, 0,
                       rate_condition_violated(m, table.field_shape())};
  for (std::size_t k = 0; k < table.lags().size(); ++k) {
    const Lag& lag = table.lags()[k];
    const double w = weight(kernel, lag, m);
    const double c = cut_threshold(cut, lag, table.field_shape());
    if (accumulate_thresholded(est.sigma2, table[k], w, c)) ++est.kept_lags;
  }
  return est;
}

Shape effective_lag_box(const Field& field, const CutRule& cut) {
  const Shape& n = field.shape();
  const std::size_t q = n.size();
  Shape full(q);
  for (std::size_t a = 0; a < q; ++a) full[a] = n[a] - 1;
  if (cut.kind == CutKind::none) return full;

  double max_abs = 0.0;
  std::vector<double> channel_sq(field.p(), 0.0);
  for (std::size_t k = 0; k < field.data().size(); ++k) {
    const double v = field.data()[k];
    max_abs = std::max(max_abs, std::abs(v));
    channel_sq[k % field.p()] += v * v;
  }
  const double sum_sq = *std::max_element(channel_sq.begin(), channel_sq.end());
  const double slack = 1.0 + 1e-12;

  // c_n(j) and |G(j)| depend on |j_i| only, so one orthant suffices.
  Shape box(q, 0);
  std::vector<Index> pos(q, 0);
  while (true) {
    bool inside = true;
    for (std::size_t a = 0; a < q; ++a) inside = inside && pos[a] <= box[a];
    if (!inside) {
      const Lag lag(pos);
      const double bound = std::min(max_abs * max_abs, sum_sq / static_cast<double>(overlap_count(n, lag))) * slack;
      if (cut_threshold(cut, lag, n) < bound) {
        for (std::size_t a = 0; a < q; ++a) box[a] = std::max(box[a], pos[a]);
      }
    }
    std::size_t a = q;
    while (a-- > 0) {
      if (++pos[a] <= full[a]) break;
      pos[a] = 0;
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return box;
}

VarianceEstimate threshold_lrv_full(const Field& field, const KernelSpec& kernel, const CutRule& cut) {
  Shape full(field.q());
  for (std::size_t a = 0; a < field.q(); ++a) full[a] = field.extent(a) - 1;
  return estimate_over_table(AutocovTable(field, effective_lag_box(field, cut)), full, kernel, cut);
}

Field subtract_global_mean(const Field& field) {
  const std::size_t p = field.p();
  std::vector<double> mean(p, 0.0);
  for (std::size_t site = 0; site < field.sites(); ++site) {
    for (std::size_t c = 0; c < p; ++c) mean[c] += field.value(site, c);
  }
  for (double& v : mean) v /= static_cast<double>(field.sites());
  std::vector<double> out(field.data().begin(), field.data().end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= mean[k % p];
  return Field(field.shape(), p, std::move(out));
}

VarianceEstimate threshold_lrv(const Field& field, std::span<const Index> m, const KernelSpec& kernel,
                               const CutRule& cut, Centering centering) {
  validate_lag_bound(m, field.shape());
  if (centering == Centering::global_mean) {
    const Field centered = subtract_global_mean(field);
    return estimate_from_table(AutocovTable(centered, Shape(m.begin(), m.end())), m, kernel, cut);
  }
  return estimate_from_table(AutocovTable(field, Shape(m.begin(), m.end())), m, kernel, cut);
}

VarianceEstimate lrv_estimate(const Field& field, std::span<const Index> m, const KernelSpec& kernel,
                              Centering centering) {
  return threshold_lrv(field, m, kernel, CutRule::none(), centering);
}

VarianceEstimate lrv_estimate_centered(const Field& field, std::span<const Index> m, const KernelSpec& kernel) {
  if (field.q() < 2) throw PreconditionError("temporally centered estimator needs q >= 2 (axis 0 is time)");
  if (field.extent(0) < 2) throw PreconditionError("temporally centered estimator needs n_1 >= 2");
  validate_lag_bound(m, field.shape());
  validate(kernel);

  const std::size_t p = field.p();
  const std::size_t spatial_sites = field.strides()[0];
  const auto n1 = static_cast<std::size_t>(field.extent(0));

  // Time average at each spatial site.
  std::vector<double> site_mean(spatial_sites * p, 0.0);
  for (std::size_t t = 0; t < n1; ++t) {
    for (std::size_t s = 0; s < spatial_sites; ++s) {
      for (std::size_t c = 0; c < p; ++c) site_mean[s * p + c] += field.value(t * spatial_sites + s, c);
    }
  }
  for (double& v : site_mean) v /= static_cast<double>(n1);

  const double* x = field.data().data();
  VarianceEstimate est{CovMatrix(p), Shape(m.begin(), m.end()), kernel, CutRule::none(), 0,
                       rate_condition_violated(m, field.shape())};
  for (const Lag& lag : lag_box(m)) {
    const std::uint64_t count = overlap_count(field.shape(), lag);
    std::vector<double> sum(p * p, 0.0);
    detail::for_each_overlap_run(field.shape(), field.strides(), lag,
                                 [&](std::size_t base, std::size_t partner, std::size_t run) {
                                   for (std::size_t t = 0; t < run; ++t) {
                                     const std::size_t i = base + t;
                                     const double* mu = site_mean.data() + (i % spatial_sites) * p;
                                     const double* a = x + i * p;
                                     const double* b = x + (partner + t) * p;
                                     for (std::size_t r = 0; r < p; ++r) {
                                       for (std::size_t c = 0; c < p; ++c) {
                                         sum[r * p + c] += (a[r] - mu[r]) * (b[c] - mu[c]);
                                       }
                                     }
                                   }
                                 });
    for (double& v : sum) v /= static_cast<double>(count);
    accumulate_thresholded(est.sigma2, CovMatrix(p, std::move(sum)), weight(kernel, lag, m),
                           -std::numeric_limits<double>::infinity());
    ++est.kept_lags;
  }
  return est;
}

}  // namespace rfvar
