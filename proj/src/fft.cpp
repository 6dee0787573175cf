#include "rfsn/detail/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace rfsn::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <typename T>
T* aligned_alloc(std::size_t count) {
  void* p = fftw_malloc(sizeof(T) * (count == 0 ? 1 : count));
  if (p == nullptr) throw std::bad_alloc();
  return static_cast<T*>(p);
}

}  // namespace

RealFft::RealFft(std::size_t n)
    : n_(n), in_(aligned_alloc<double>(n)), out_(aligned_alloc<std::complex<double>>(n / 2 + 1)) {
  std::scoped_lock lock(planner_mutex());
  plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), in_, reinterpret_cast<fftw_complex*>(out_),
                               FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  {
    std::scoped_lock lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(in_);
  fftw_free(out_);
}

std::span<const std::complex<double>> RealFft::execute() {
  fftw_execute(static_cast<fftw_plan>(plan_));
  return {out_, n_ / 2 + 1};
}

ComplexFft::ComplexFft(std::size_t n, Direction dir)
    : n_(n), buf_(aligned_alloc<std::complex<double>>(n)) {
  std::scoped_lock lock(planner_mutex());
  auto* b = reinterpret_cast<fftw_complex*>(buf_);
  plan_ = fftw_plan_dft_1d(static_cast<int>(n_), b, b,
                           dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD,
                           FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft() {
  {
    std::scoped_lock lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
  fftw_free(buf_);
}

void ComplexFft::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

}  // namespace rfsn::detail
