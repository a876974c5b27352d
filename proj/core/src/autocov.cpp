#include "rfvar/autocov.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "rfvar/errors.hpp"

namespace rfvar {
namespace {

struct NeumaierSum {
  double sum = 0.0;
  double compensation = 0.0;

  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + compensation; }
};

double dot_run(const double* x, const double* y, std::size_t n) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    s0 += x[t] * y[t];
    s1 += x[t + 1] * y[t + 1];
    s2 += x[t + 2] * y[t + 2];
    s3 += x[t + 3] * y[t + 3];
  }
  for (; t < n; ++t) s0 += x[t] * y[t];
  return (s0 + s1) + (s2 + s3);
}

void check_lag(const Field& field, const Lag& lag) {
  if (lag.q() != field.q()) {
    throw PreconditionError("lag has " + std::to_string(lag.q()) + " components but the field has q = " +
                            std::to_string(field.q()));
  }
}

CovMatrix compute_autocov(const Field& field, const Lag& lag) {
  const std::uint64_t count = overlap_count(field.shape(), lag);
  if (count == 0) {
    throw ZeroOverlapError("no grid point pairs at lag (" + join_indices(lag.offsets(), ',') + ") for shape " +
                           join_indices(field.shape(), 'x'));
  }
  const std::size_t p = field.p();
  const double* x = field.data().data();
  const bool compensated = count > kCompensatedSumThreshold;
  const double inv = 1.0 / static_cast<double>(count);

  if (p == 1) {
    double plain = 0.0;
    NeumaierSum comp;
    detail::for_each_overlap_run(field.shape(), field.strides(), lag,
                                 [&](std::size_t base, std::size_t partner, std::size_t run) {
                                   const double d = dot_run(x + base, x + partner, run);
                                   if (compensated) {
                                     comp.add(d);
                                   } else {
                                     plain += d;
                                   }
                                 });
    return CovMatrix::scalar((compensated ? comp.value() : plain) * inv);
  }

  std::vector<NeumaierSum> acc(p * p);
  std::vector<double> plain(p * p, 0.0);
  detail::for_each_overlap_run(field.shape(), field.strides(), lag,
                               [&](std::size_t base, std::size_t partner, std::size_t run) {
                                 for (std::size_t t = 0; t < run; ++t) {
                                   const double* a = x + (base + t) * p;
                                   const double* b = x + (partner + t) * p;
                                   for (std::size_t r = 0; r < p; ++r) {
                                     for (std::size_t c = 0; c < p; ++c) {
                                       if (compensated) {
                                         acc[r * p + c].add(a[r] * b[c]);
                                       } else {
                                         plain[r * p + c] += a[r] * b[c];
                                       }
                                     }
                                   }
                                 }
                               });
  std::vector<double> entries(p * p);
  for (std::size_t k = 0; k < p * p; ++k) entries[k] = (compensated ? acc[k].value() : plain[k]) * inv;
  return CovMatrix(p, std::move(entries));
}

}  // namespace

CovMatrix sample_autocov(const Field& field, const Lag& lag) {
  check_lag(field, lag);
  return compute_autocov(field, lag);
}

namespace {

// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
Index fft_friendly(Index n) {
  for (Index k = std::max<Index>(n, 1);; ++k) {
    Index r = k;
    for (Index f : {2, 3, 5, 7}) {
      while (r % f == 0) r /= f;
    }
    if (r == 1) return k;
  }
}

}  // namespace

AutocovMethod resolve_autocov_method(const Shape& shape, std::size_t p, const Shape& max_lag) {
  double lags = 1.0, sites = 1.0, padded = 1.0;
  for (std::size_t a = 0; a < shape.size(); ++a) {
    lags *= static_cast<double>(2 * max_lag[a] + 1);
    sites *= static_cast<double>(shape[a]);
    padded *= static_cast<double>(shape[a] + max_lag[a]);
  }
  const double pp = static_cast<double>(p);
  const double direct = 0.5 * lags * sites * pp * pp;
  const double fft = 8.0 * padded * std::log2(padded + 2.0) * (pp + pp * pp);
  return direct > 4.0 * fft ? AutocovMethod::fft : AutocovMethod::direct;
}

AutocovTable::AutocovTable(const Field& field, Shape max_lag, AutocovMethod method)
    : max_lag_(std::move(max_lag)), field_shape_(field.shape()), p_(field.p()) {
  if (max_lag_.size() != field.q()) {
    throw PreconditionError("lag bound has " + std::to_string(max_lag_.size()) +
                            " components but the field has q = " + std::to_string(field.q()));
  }
  for (std::size_t a = 0; a < max_lag_.size(); ++a) {
    if (max_lag_[a] < 0) throw PreconditionError("lag bound components must be >= 0");
    if (max_lag_[a] >= field_shape_[a]) {
      throw ZeroOverlapError("lag bound " + join_indices(max_lag_, ',') + " reaches the field extent " +
                             join_indices(field_shape_, 'x'));
    }
  }
  lags_ = lag_box(max_lag_);
  values_.assign(lags_.size(), CovMatrix(p_));
  if (method == AutocovMethod::automatic) method = resolve_autocov_method(field_shape_, p_, max_lag_);
  if (method == AutocovMethod::fft) {
    fill_fft(field);
  } else {
    fill_direct(field);
  }
}

void AutocovTable::fill_direct(const Field& field) {
  // The box is symmetric, so lag k and lag size-1-k are negatives of each other.
  const std::size_t total = lags_.size();
  for (std::size_t k = 0; k < (total + 1) / 2; ++k) {
    const std::size_t mirror = total - 1 - k;
    values_[mirror] = compute_autocov(field, lags_[mirror]);
    if (mirror != k) values_[k] = values_[mirror].transposed();
  }
}

void AutocovTable::fill_fft(const Field& field) {
  used_fft_ = true;
  const std::size_t q = field_shape_.size();
  Shape padded(q);
  for (std::size_t a = 0; a < q; ++a) padded[a] = fft_friendly(field_shape_[a] + max_lag_[a]);
  std::vector<std::size_t> pstride(q, 1);
  for (std::size_t a = q - 1; a-- > 0;) pstride[a] = pstride[a + 1] * static_cast<std::size_t>(padded[a + 1]);

  detail::RealFft fft(padded);
  const std::size_t real_size = fft.real_size();
  const std::size_t spec_size = fft.spectrum_size();
  std::vector<std::vector<std::complex<double>>> channel_hat(p_);
  const double* x = field.data().data();
  for (std::size_t c = 0; c < p_; ++c) {
    std::fill(fft.real(), fft.real() + real_size, 0.0);
    for (std::size_t site = 0; site < field.sites(); ++site) {
      std::size_t rem = site, idx = 0;
      for (std::size_t a = 0; a < q; ++a) {
        const std::size_t coord = rem / field.strides()[a];
        rem -= coord * field.strides()[a];
        idx += coord * pstride[a];
      }
      fft.real()[idx] = x[site * p_ + c];
    }
    fft.forward();
    channel_hat[c].assign(fft.spectrum(), fft.spectrum() + spec_size);
  }

  const double norm = 1.0 / static_cast<double>(real_size);
  for (std::size_t r = 0; r < p_; ++r) {
    for (std::size_t c = 0; c < p_; ++c) {
      // sum_i x_r(i) x_c(i + j) is the inverse transform of conj(X_r) X_c.
      auto* spec = fft.spectrum();
      for (std::size_t k = 0; k < spec_size; ++k) spec[k] = std::conj(channel_hat[r][k]) * channel_hat[c][k];
      fft.backward();
      for (std::size_t li = 0; li < lags_.size(); ++li) {
        const Lag& lag = lags_[li];
        std::size_t idx = 0;
        for (std::size_t a = 0; a < q; ++a) {
          const Index wrapped = lag[a] < 0 ? padded[a] + lag[a] : lag[a];
          idx += static_cast<std::size_t>(wrapped) * pstride[a];
        }
        values_[li](r, c) = fft.real()[idx] * norm / static_cast<double>(overlap_count(field_shape_, lag));
      }
    }
  }
}

std::size_t AutocovTable::index_of(const Lag& lag) const {
  if (lag.q() != max_lag_.size()) throw PreconditionError("AutocovTable: lag rank mismatch");
  std::size_t index = 0;
  for (std::size_t a = 0; a < max_lag_.size(); ++a) {
    if (std::abs(lag[a]) > max_lag_[a]) throw PreconditionError("AutocovTable: lag outside the tabulated box");
    index = index * static_cast<std::size_t>(2 * max_lag_[a] + 1) + static_cast<std::size_t>(lag[a] + max_lag_[a]);
  }
  return index;
}

const CovMatrix& AutocovTable::at(const Lag& lag) const { return values_[index_of(lag)]; }

}  // namespace rfvar
