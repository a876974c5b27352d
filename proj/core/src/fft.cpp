#include "fft.hpp"

#include <fftw3.h>

#include <new>
#include <vector>

namespace rfvar::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

RealFft::RealFft(const Shape& extents) : extents_(extents) {
  std::vector<int> dims(extents.begin(), extents.end());
  real_size_ = 1;
  for (int d : dims) real_size_ *= static_cast<std::size_t>(d);
  spectrum_size_ = real_size_ / static_cast<std::size_t>(dims.back()) * static_cast<std::size_t>(dims.back() / 2 + 1);

  std::lock_guard lock(fftw_planner_mutex());
  real_ = fftw_alloc_real(real_size_);
  auto* spec = fftw_alloc_complex(spectrum_size_);
  if (real_ == nullptr || spec == nullptr) {
    fftw_free(real_);
    fftw_free(spec);
    throw std::bad_alloc();
  }
  spectrum_ = reinterpret_cast<std::complex<double>*>(spec);
  const int rank = static_cast<int>(dims.size());
  forward_plan_ = fftw_plan_dft_r2c(rank, dims.data(), real_, spec, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft_c2r(rank, dims.data(), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }

void RealFft::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

}  // namespace rfvar::detail
