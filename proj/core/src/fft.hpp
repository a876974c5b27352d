#pragma once

#include <complex>
#include <cstddef>
#include <mutex>

#include "rfvar/field.hpp"

namespace rfvar::detail {

/// FFTW planning is not thread-safe; every plan creation and destruction
/// takes this lock.
std::mutex& fftw_planner_mutex();

/// Multi-dimensional real-to-complex transform pair with owned buffers.
/// Transforms are unnormalized.
class RealFft {
 public:
  explicit RealFft(const Shape& extents);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  const Shape& extents() const noexcept { return extents_; }
  std::size_t real_size() const noexcept { return real_size_; }
  std::size_t spectrum_size() const noexcept { return spectrum_size_; }
  double* real() noexcept { return real_; }
  std::complex<double>* spectrum() noexcept { return spectrum_; }

  void forward();   // real() -> spectrum()
  void backward();  // spectrum() -> real(); overwrites spectrum()

 private:
  Shape extents_;
  std::size_t real_size_;
  std::size_t spectrum_size_;
  double* real_;
  std::complex<double>* spectrum_;
  void* forward_plan_;
  void* backward_plan_;
};

}  // namespace rfvar::detail
