#include "rfvar/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "rfvar/errors.hpp"

namespace rfvar {

Lag Lag::operator-() const {
  std::vector<Index> negated(offsets_.size());
  std::transform(offsets_.begin(), offsets_.end(), negated.begin(), [](Index v) { return -v; });
  return Lag(std::move(negated));
}

Index Lag::max_abs() const noexcept {
  Index best = 0;
  for (Index v : offsets_) best = std::max(best, std::abs(v));
  return best;
}

double Lag::l2_norm() const noexcept {
  double sum = 0.0;
  for (Index v : offsets_) sum += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(sum);
}

bool Lag::is_zero() const noexcept {
  return std::all_of(offsets_.begin(), offsets_.end(), [](Index v) { return v == 0; });
}

CovMatrix::CovMatrix(std::size_t p) : p_(p), entries_(p * p, 0.0) {
  if (p == 0) throw PreconditionError("CovMatrix: p must be positive");
}

CovMatrix::CovMatrix(std::size_t p, std::vector<double> entries)
    : p_(p), entries_(std::move(entries)) {
  if (p == 0) throw PreconditionError("CovMatrix: p must be positive");
  if (entries_.size() != p * p) {
    throw PreconditionError("CovMatrix: expected " + std::to_string(p * p) + " entries, got " +
                            std::to_string(entries_.size()));
  }
  if (!all_finite()) throw PreconditionError("CovMatrix: entries must be finite");
}

CovMatrix CovMatrix::identity(std::size_t p) {
  CovMatrix out(p);
  for (std::size_t i = 0; i < p; ++i) out(i, i) = 1.0;
  return out;
}

CovMatrix CovMatrix::transposed() const {
  CovMatrix out(p_);
  for (std::size_t r = 0; r < p_; ++r)
    for (std::size_t c = 0; c < p_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

bool CovMatrix::all_finite() const noexcept {
  return std::all_of(entries_.begin(), entries_.end(), [](double v) { return std::isfinite(v); });
}

CovMatrix& CovMatrix::operator+=(const CovMatrix& other) {
  if (other.p_ != p_) throw PreconditionError("CovMatrix: dimension mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
  return *this;
}

CovMatrix& CovMatrix::operator-=(const CovMatrix& other) {
  if (other.p_ != p_) throw PreconditionError("CovMatrix: dimension mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= other.entries_[i];
  return *this;
}

CovMatrix& CovMatrix::operator*=(double factor) noexcept {
  for (double& v : entries_) v *= factor;
  return *this;
}

std::size_t checked_site_count(std::span<const Index> shape) {
  if (shape.empty()) throw PreconditionError("shape must have at least one axis");
  std::size_t count = 1;
  for (Index n : shape) {
    if (n < 1) throw PreconditionError("shape extents must be >= 1, got " + join_indices(shape, ','));
    count *= static_cast<std::size_t>(n);
  }
  return count;
}

Field::Field(Shape shape, std::size_t p, std::vector<double> data)
    : shape_(std::move(shape)), p_(p), sites_(checked_site_count(shape_)), data_(std::move(data)) {
  if (p_ == 0) throw PreconditionError("Field: p must be positive");
  if (data_.size() != sites_ * p_) {
    throw PreconditionError("Field: data length " + std::to_string(data_.size()) +
                            " does not match p * |n| = " + std::to_string(sites_ * p_));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw PreconditionError("Field: entries must be finite");
  }
  strides_.assign(shape_.size(), 1);
  for (std::size_t axis = shape_.size(); axis-- > 1;) {
    strides_[axis - 1] = strides_[axis] * static_cast<std::size_t>(shape_[axis]);
  }
}

Field Field::zeros(Shape shape, std::size_t p) {
  const std::size_t sites = checked_site_count(shape);
  return Field(std::move(shape), p, std::vector<double>(sites * p, 0.0));
}

std::size_t Field::site_index(std::span<const Index> coords) const {
  if (coords.size() != shape_.size()) throw PreconditionError("Field: coordinate rank mismatch");
  std::size_t site = 0;
  for (std::size_t axis = 0; axis < coords.size(); ++axis) {
    if (coords[axis] < 0 || coords[axis] >= shape_[axis]) {
      throw PreconditionError("Field: coordinate out of range");
    }
    site += static_cast<std::size_t>(coords[axis]) * strides_[axis];
  }
  return site;
}

Field Field::scaled(double factor) const {
  std::vector<double> out(data_);
  for (double& v : out) v *= factor;
  return Field(shape_, p_, std::move(out));
}

std::uint64_t overlap_count(std::span<const Index> shape, const Lag& lag) {
  if (lag.q() != shape.size()) throw PreconditionError("overlap_count: lag rank does not match shape");
  std::uint64_t count = 1;
  for (std::size_t axis = 0; axis < shape.size(); ++axis) {
    const Index remaining = shape[axis] - std::abs(lag[axis]);
    if (remaining <= 0) return 0;
    count *= static_cast<std::uint64_t>(remaining);
  }
  return count;
}

std::vector<Lag> lag_box(std::span<const Index> m) {
  for (Index bound : m) {
    if (bound < 0) throw PreconditionError("lag_box: bounds must be >= 0");
  }
  std::size_t total = 1;
  for (Index bound : m) total *= static_cast<std::size_t>(2 * bound + 1);

  std::vector<Lag> lags;
  lags.reserve(total);
  std::vector<Index> current(m.size());
  for (std::size_t axis = 0; axis < m.size(); ++axis) current[axis] = -m[axis];
  for (std::size_t n = 0; n < total; ++n) {
    lags.emplace_back(current);
    for (std::size_t axis = m.size(); axis-- > 0;) {
      if (current[axis] < m[axis]) {
        ++current[axis];
        break;
      }
      current[axis] = -m[axis];
    }
  }
  return lags;
}

std::vector<Lag> ring_lags(Index k, std::size_t q) {
  if (k < 0) throw PreconditionError("ring_lags: k must be >= 0");
  if (q == 0) throw PreconditionError("ring_lags: q must be positive");
  std::vector<Lag> ring;
  for (Lag& lag : lag_box(std::vector<Index>(q, k))) {
    if (lag.max_abs() == k) ring.push_back(std::move(lag));
  }
  return ring;
}

double max_norm(const CovMatrix& a) noexcept {
  double best = 0.0;
  for (double v : a.entries()) best = std::max(best, std::abs(v));
  return best;
}

double frobenius_norm(const CovMatrix& a) noexcept {
  double sum = 0.0;
  for (double v : a.entries()) sum += v * v;
  return std::sqrt(sum);
}

std::string join_indices(std::span<const Index> values, char separator) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += separator;
    out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace rfvar
