#pragma once

// Reference implementations written without the library's traversal or
// summation code. Slow by design; only for small inputs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "rfvar/field.hpp"
#include "rfvar/kernels.hpp"

namespace oracle {

using rfvar::CovMatrix;
using rfvar::Field;
using rfvar::Index;
using rfvar::Lag;
using rfvar::Shape;

inline std::vector<Index> coords_of(std::size_t site, const Shape& shape) {
  std::vector<Index> c(shape.size());
  for (std::size_t a = shape.size(); a-- > 0;) {
    c[a] = static_cast<Index>(site % static_cast<std::size_t>(shape[a]));
    site /= static_cast<std::size_t>(shape[a]);
  }
  return c;
}

inline std::size_t site_of(const std::vector<Index>& c, const Shape& shape) {
  std::size_t s = 0;
  for (std::size_t a = 0; a < shape.size(); ++a) s = s * static_cast<std::size_t>(shape[a]) + static_cast<std::size_t>(c[a]);
  return s;
}

inline std::size_t site_count(const Shape& shape) {
  std::size_t n = 1;
  for (Index e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

/// Gaussian test field from the standard library generator.
inline Field random_field(const Shape& shape, std::size_t p, unsigned seed, double mean = 0.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(mean, 1.0);
  std::vector<double> data(site_count(shape) * p);
  for (double& v : data) v = nd(gen);
  return Field(shape, p, std::move(data));
}

/// gamma_n(j) by visiting every site i and checking whether i + j is inside.
inline CovMatrix autocov(const Field& f, const Lag& lag) {
  const Shape& n = f.shape();
  const std::size_t p = f.p();
  std::vector<double> acc(p * p, 0.0);
  std::size_t count = 0;
  for (std::size_t s = 0; s < f.sites(); ++s) {
    auto c = coords_of(s, n);
    bool inside = true;
    for (std::size_t a = 0; a < n.size(); ++a) {
      c[a] += lag[a];
      inside = inside && c[a] >= 0 && c[a] < n[a];
    }
    if (!inside) continue;
    const std::size_t t = site_of(c, n);
    ++count;
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t k = 0; k < p; ++k) acc[r * p + k] += f.value(s, r) * f.value(t, k);
    }
  }
  for (double& v : acc) v /= static_cast<double>(count);
  return CovMatrix(p, acc);
}

/// Every lag with |j_a| <= m_a, via an odometer.
inline std::vector<Lag> box(const Shape& m) {
  std::vector<Lag> out;
  std::vector<Index> j(m.size());
  for (std::size_t a = 0; a < m.size(); ++a) j[a] = -m[a];
  while (true) {
    out.emplace_back(j);
    std::size_t a = m.size();
    while (a-- > 0) {
      if (++j[a] <= m[a]) break;
      j[a] = -m[a];
    }
    if (a == static_cast<std::size_t>(-1)) return out;
  }
}

/// Kernel estimator with optional hard threshold c(j), entry by entry.
inline CovMatrix lrv(const Field& f, const Shape& m, const rfvar::KernelSpec& kernel,
                     const std::function<double(const Lag&)>& threshold = {}) {
  CovMatrix out(f.p());
  for (const Lag& j : box(m)) {
    const CovMatrix g = autocov(f, j);
    const double w = rfvar::weight(kernel, j, m);
    const double c = threshold ? threshold(j) : -INFINITY;
    for (std::size_t r = 0; r < f.p(); ++r) {
      for (std::size_t k = 0; k < f.p(); ++k) {
        if (std::abs(g(r, k)) > c) out(r, k) += w * g(r, k);
      }
    }
  }
  return out;
}

/// Phi(x) by composite Simpson integration of the density from 0.
inline double normal_cdf(double x) {
  const int steps = 20000;
  const double h = x / steps;
  auto pdf = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); };
  double s = pdf(0.0) + pdf(x);
  for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return 0.5 + s * h / 3.0;
}

/// Phi^{-1}(p) by bisection on the quadrature cdf.
inline double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Smallest sorted value v with #{x <= v} / N >= gamma.
inline double order_statistic(std::vector<double> values, double gamma) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (static_cast<double>(i + 1) / n >= gamma) return values[i];
  }
  return values.back();
}

/// Sub-field with the given origin and extent, copied site by site.
inline Field block(const Field& f, const Shape& origin, const Shape& extent) {
  std::vector<double> data;
  for (std::size_t s = 0; s < site_count(extent); ++s) {
    auto c = coords_of(s, extent);
    for (std::size_t a = 0; a < c.size(); ++a) c[a] += origin[a];
    const std::size_t t = site_of(c, f.shape());
    for (std::size_t r = 0; r < f.p(); ++r) data.push_back(f.value(t, r));
  }
  return Field(extent, f.p(), std::move(data));
}

}  // namespace oracle
