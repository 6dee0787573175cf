#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace rfsn::detail {

// Thin RAII wrappers over FFTW plans with owned, aligned buffers. Planning is
// serialized internally; an instance itself must stay on one thread.

class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<double> input() noexcept { return {in_, n_}; }
  /// Forward transform of input(); returns the n/2+1 non-negative frequency bins (unnormalized).
  std::span<const std::complex<double>> execute();

 private:
  std::size_t n_;
  double* in_;
  std::complex<double>* out_;
  void* plan_;
};

class ComplexFft {
 public:
  enum class Direction { forward, backward };

  ComplexFft(std::size_t n, Direction dir);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<std::complex<double>> data() noexcept { return {buf_, n_}; }
  /// In-place unnormalized transform of data().
  void execute();

 private:
  std::size_t n_;
  std::complex<double>* buf_;
  void* plan_;
};

}  // namespace rfsn::detail
