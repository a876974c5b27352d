#pragma once

#include <optional>
#include <variant>

#include "rfvar/estimators.hpp"
#include "rfvar/field.hpp"
#include "rfvar/kernels.hpp"

namespace rfvar {

/// Null reference m0 for an image: a constant, a full-size field, or a
/// per-site image (shape n_2 x ... x n_q) repeated along axis 0.
using Reference = std::variant<double, Field>;

/// Field minus the reference; p = 1.
Field center_at_reference(const Field& field, const Reference& reference);

/// S_n = sum_i (Y_i - m0_i).
double partial_sum(const Field& field, const Reference& reference);

struct TestResult {
  double statistic = 0.0;  ///< |n|^{-1/2} |S_n|
  double sigma_hat = 0.0;
  double critical = 0.0;   ///< Phi^{-1}(1 - level / 2)
  bool reject = false;     ///< statistic > sigma_hat * critical
  double level = 0.05;
  double sigma2 = 0.0;
  Shape m_used;
  std::size_t kept_lags = 0;
};

/// Standardized partial-sum test. sigma_hat^2 is the cut-off estimator on the
/// centred field with box m, or over the full box n - 1 when m is empty.
/// Throws NegativeVarianceError when the estimate is negative.
TestResult image_test(const Field& field, const Reference& reference, double level, const std::optional<Shape>& m,
                      const KernelSpec& kernel, const CutRule& cut);

/// Same decision rule with a known sigma^2 in place of the estimate.
TestResult image_test_known_variance(const Field& field, const Reference& reference, double level, double sigma2);

/// Decision for a given statistic and variance estimate.
TestResult decide(double statistic, double sigma2, double level);

}  // namespace rfvar
