#include "rfvar/inference.hpp"

#include <cmath>

#include "rfvar/errors.hpp"
#include "rfvar/normal.hpp"

namespace rfvar {
namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw PreconditionError("test level must lie in (0, 1)");
}

}  // namespace

Field center_at_reference(const Field& field, const Reference& reference) {
  if (field.p() != 1) throw PreconditionError("image tests are defined for p = 1");
  std::vector<double> out(field.data().begin(), field.data().end());
  if (const auto* c = std::get_if<double>(&reference)) {
    if (!std::isfinite(*c)) throw PreconditionError("reference value must be finite");
    for (double& v : out) v -= *c;
    return Field(field.shape(), 1, std::move(out));
  }
  const Field& ref = std::get<Field>(reference);
  if (ref.p() != 1) throw PreconditionError("reference image must have p = 1");
  if (ref.shape() == field.shape()) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= ref.data()[k];
    return Field(field.shape(), 1, std::move(out));
  }
  const Shape tail(field.shape().begin() + (field.q() > 1 ? 1 : 0), field.shape().end());
  if (field.q() > 1 && ref.shape() == tail) {
    const std::size_t slice = ref.sites();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= ref.data()[k % slice];
    return Field(field.shape(), 1, std::move(out));
  }
  throw PreconditionError("reference shape " + join_indices(ref.shape(), 'x') + " matches neither the field shape " +
                          join_indices(field.shape(), 'x') + " nor its per-site slice");
}

double partial_sum(const Field& field, const Reference& reference) {
  const Field centered = center_at_reference(field, reference);
  double sum = 0.0;
  for (double v : centered.data()) sum += v;
  return sum;
}

TestResult decide(double statistic, double sigma2, double level) {
  check_level(level);
  if (std::isnan(sigma2)) throw PreconditionError("variance estimate is NaN");
  if (sigma2 < 0.0) {
    throw NegativeVarianceError("variance estimate " + std::to_string(sigma2) +
                                " is negative; its square root is undefined (try a kernel with nonnegative estimates)");
  }
  TestResult r;
  r.statistic = statistic;
  r.sigma2 = sigma2;
  r.sigma_hat = std::sqrt(sigma2);
  r.level = level;
  r.critical = inv_normal_cdf(1.0 - level / 2.0);
  r.reject = r.statistic > r.sigma_hat * r.critical;
  return r;
}

TestResult image_test(const Field& field, const Reference& reference, double level, const std::optional<Shape>& m,
                      const KernelSpec& kernel, const CutRule& cut) {
  check_level(level);
  const Field centered = center_at_reference(field, reference);
  double sum = 0.0;
  for (double v : centered.data()) sum += v;
  const double statistic = std::abs(sum) / std::sqrt(static_cast<double>(centered.sites()));
  const VarianceEstimate est =
      m ? threshold_lrv(centered, *m, kernel, cut) : threshold_lrv_full(centered, kernel, cut);
  TestResult r = decide(statistic, est.sigma2.scalar_value(), level);
  r.m_used = est.m;
  r.kept_lags = est.kept_lags;
  return r;
}

TestResult image_test_known_variance(const Field& field, const Reference& reference, double level, double sigma2) {
  const double s = partial_sum(field, reference);
  return decide(std::abs(s) / std::sqrt(static_cast<double>(field.sites())), sigma2, level);
}

}  // namespace rfvar
