#pragma once

namespace rfvar {

/// Standard normal quantile Phi^{-1}(pr) by Wichura's algorithm AS 241
/// (PPND16), relative accuracy about 1e-16. Throws unless 0 < pr < 1.
double inv_normal_cdf(double pr);

/// Standard normal distribution function Phi(x).
double normal_cdf(double x) noexcept;

}  // namespace rfvar
