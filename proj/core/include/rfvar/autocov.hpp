#pragma once

#include <cstdint>
#include <vector>

#include "rfvar/field.hpp"

namespace rfvar {

/// Above this many summands per lag the autocovariance sums switch to
/// compensated (Neumaier) accumulation.
inline constexpr std::uint64_t kCompensatedSumThreshold = 1'000'000;

/// Sample autocovariance
///
///   gamma_n(j) = |G(j)|^{-1} sum_{i in G(j)} xi_i xi_{i+j}',
///   G(j) = {i in grid : i + j in grid}.
///
/// The field is taken as centered; no mean is subtracted. Throws
/// ZeroOverlapError when G(j) is empty.
CovMatrix sample_autocov(const Field& field, const Lag& lag);

enum class AutocovMethod {
  automatic,  ///< direct sums for small boxes, FFT when that is much cheaper
  direct,
  fft,
};

/// Every sample autocovariance in the box |j| <= max_lag, computed once.
///
/// Direct mode sums one lag of each pair {j, -j} and stores the exact
/// transpose for its partner, so lookups agree bit for bit with
/// `sample_autocov`. FFT mode computes all cross-correlations from zero-padded
/// transforms and agrees with the direct sums to rounding error.
class AutocovTable {
 public:
  AutocovTable(const Field& field, Shape max_lag, AutocovMethod method = AutocovMethod::automatic);

  const Shape& max_lag() const noexcept { return max_lag_; }
  const Shape& field_shape() const noexcept { return field_shape_; }
  std::size_t p() const noexcept { return p_; }

  /// Lags of the full box in lexicographic order.
  const std::vector<Lag>& lags() const noexcept { return lags_; }
  const CovMatrix& operator[](std::size_t lag_index) const { return values_[lag_index]; }
  const CovMatrix& at(const Lag& lag) const;
  std::size_t index_of(const Lag& lag) const;
  bool used_fft() const noexcept { return used_fft_; }

 private:
  void fill_direct(const Field& field);
  void fill_fft(const Field& field);

  bool used_fft_ = false;
  Shape max_lag_;
  Shape field_shape_;
  std::size_t p_;
  std::vector<Lag> lags_;
  std::vector<CovMatrix> values_;
};

/// The method `automatic` resolves to for this field size and lag box.
AutocovMethod resolve_autocov_method(const Shape& shape, std::size_t p, const Shape& max_lag);

namespace detail {

/// Calls fn(base_site, partner_site, length) for every run of consecutive
/// base sites along the last axis such that base and base + lag both lie in
/// the grid. Runs are visited in lexicographic order.
template <typename Fn>
void for_each_overlap_run(const Shape& shape, const std::vector<std::size_t>& strides, const Lag& lag, Fn&& fn) {
  const std::size_t q = shape.size();
  std::vector<Index> lo(q), hi(q);
  std::ptrdiff_t shift = 0;
  for (std::size_t a = 0; a < q; ++a) {
    lo[a] = lag[a] < 0 ? -lag[a] : 0;
    hi[a] = shape[a] - (lag[a] > 0 ? lag[a] : 0);
    if (hi[a] <= lo[a]) return;
    shift += static_cast<std::ptrdiff_t>(lag[a]) * static_cast<std::ptrdiff_t>(strides[a]);
  }
  const std::size_t run = static_cast<std::size_t>(hi[q - 1] - lo[q - 1]);
  std::vector<Index> pos(lo.begin(), lo.end());
  while (true) {
    std::size_t base = 0;
    for (std::size_t a = 0; a < q; ++a) base += static_cast<std::size_t>(pos[a]) * strides[a];
    fn(base, static_cast<std::size_t>(static_cast<std::ptrdiff_t>(base) + shift), run);
    // Advance the odometer over every axis except the last.
    std::size_t a = q - 1;
    while (a-- > 0) {
      if (++pos[a] < hi[a]) break;
      pos[a] = lo[a];
    }
    if (a == static_cast<std::size_t>(-1)) return;
  }
}

}  // namespace detail
}  // namespace rfvar
