#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rfvar {

using Index = std::int64_t;

/// Extents (n_1, ..., n_q) of a rectangular grid, or any per-axis integer
/// vector such as a lag bound m or a block size b.
using Shape = std::vector<Index>;

/// Integer offset j in Z^q between two grid points.
class Lag {
 public:
  Lag() = default;
  explicit Lag(std::vector<Index> offsets) : offsets_(std::move(offsets)) {}
  Lag(std::initializer_list<Index> offsets) : offsets_(offsets) {}

  std::size_t q() const noexcept { return offsets_.size(); }
  Index operator[](std::size_t axis) const { return offsets_[axis]; }
  std::span<const Index> offsets() const noexcept { return offsets_; }

  Lag operator-() const;
  /// max_i |j_i|; zero for the empty lag.
  Index max_abs() const noexcept;
  double l2_norm() const noexcept;
  bool is_zero() const noexcept;

  friend auto operator<=>(const Lag&, const Lag&) = default;
  friend bool operator==(const Lag&, const Lag&) = default;

 private:
  std::vector<Index> offsets_;
};

/// Dense p x p real matrix, row-major. Holds autocovariances and variance
/// estimates; for p = 1 it is a scalar.
class CovMatrix {
 public:
  explicit CovMatrix(std::size_t p = 1);
  CovMatrix(std::size_t p, std::vector<double> entries);

  static CovMatrix identity(std::size_t p);
  static CovMatrix scalar(double value) { return CovMatrix(1, {value}); }

  std::size_t p() const noexcept { return p_; }
  double operator()(std::size_t row, std::size_t col) const { return entries_[row * p_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return entries_[row * p_ + col]; }
  std::span<const double> entries() const noexcept { return entries_; }
  std::span<double> entries() noexcept { return entries_; }
  /// Entry (0, 0); the value itself when p = 1.
  double scalar_value() const { return entries_.front(); }

  CovMatrix transposed() const;
  bool all_finite() const noexcept;

  CovMatrix& operator+=(const CovMatrix& other);
  CovMatrix& operator-=(const CovMatrix& other);
  CovMatrix& operator*=(double factor) noexcept;

  friend CovMatrix operator+(CovMatrix lhs, const CovMatrix& rhs) { return lhs += rhs; }
  friend CovMatrix operator-(CovMatrix lhs, const CovMatrix& rhs) { return lhs -= rhs; }
  friend CovMatrix operator*(CovMatrix lhs, double factor) { return lhs *= factor; }
  friend CovMatrix operator*(double factor, CovMatrix rhs) { return rhs *= factor; }
  friend bool operator==(const CovMatrix&, const CovMatrix&) = default;

 private:
  std::size_t p_;
  std::vector<double> entries_;
};

/// p-variate observations on the grid {0..n_1-1} x ... x {0..n_q-1}.
///
/// Values are stored lexicographically by coordinate (last axis fastest) with
/// the p channels of a site stored contiguously. A Field is immutable once
/// built; every entry is finite.
class Field {
 public:
  Field(Shape shape, std::size_t p, std::vector<double> data);

  static Field zeros(Shape shape, std::size_t p = 1);

  std::size_t q() const noexcept { return shape_.size(); }
  const Shape& shape() const noexcept { return shape_; }
  Index extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t p() const noexcept { return p_; }
  /// Number of grid points |n| = n_1 * ... * n_q.
  std::size_t sites() const noexcept { return sites_; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> site_values(std::size_t site) const {
    return std::span<const double>(data_).subspan(site * p_, p_);
  }
  double value(std::size_t site, std::size_t channel = 0) const { return data_[site * p_ + channel]; }

  /// Site strides per axis (in sites, not doubles).
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  std::size_t site_index(std::span<const Index> coords) const;

  Field scaled(double factor) const;

 private:
  Shape shape_;
  std::size_t p_;
  std::size_t sites_;
  std::vector<std::size_t> strides_;
  std::vector<double> data_;
};

/// Validates that every extent is >= 1 and returns their product.
std::size_t checked_site_count(std::span<const Index> shape);

/// |{i in grid : i + j in grid}| = prod_i max(n_i - |j_i|, 0).
std::uint64_t overlap_count(std::span<const Index> shape, const Lag& lag);

/// All lags with |j_i| <= m_i, lexicographic order.
std::vector<Lag> lag_box(std::span<const Index> m);

/// All lags of dimension q with max_i |j_i| == k, lexicographic order.
std::vector<Lag> ring_lags(Index k, std::size_t q);

double max_norm(const CovMatrix& a) noexcept;
double frobenius_norm(const CovMatrix& a) noexcept;

/// "30x40"-style rendering of an integer vector.
std::string join_indices(std::span<const Index> values, char separator);

}  // namespace rfvar
