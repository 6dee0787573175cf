#pragma once

#include <complex>
#include <span>
#include <vector>

#include "rfsn/chirpmod.hpp"
#include "rfsn/detail/fft.hpp"

namespace rfsn::detail {

// Per-symbol dechirp front end shared by the demodulator and the detection
// power measurement:
//   mean removal -> keep the [0, bw) band of the real window (brick-wall, via
//   FFT) -> 2^sf complex samples at the chip instants -> multiply by the
//   conjugate base up-chirp -> 2^sf-point DFT.
// Band selection happens before the multiply so the two segments of a
// wrapped chirp land coherently in one bin.
//
// Scaling: a real component A*cos(phase of symbol k) yields |bin k| = 2^sf * A / 2.
class DechirpKernel {
 public:
  explicit DechirpKernel(const chirp::ChirpParams& p);

  /// `window` holds exactly samples_per_symbol() samples.
  std::span<const std::complex<double>> process(std::span<const double> window);

  /// Mean-square of the mean-removed window seen by the last process() call.
  double last_power() const noexcept { return last_power_; }
  std::size_t chips() const noexcept { return chips_; }

 private:
  std::size_t chips_;
  std::size_t window_;
  RealFft band_;
  ComplexFft to_chips_;
  ComplexFft to_bins_;
  std::vector<std::complex<double>> reference_;
  double last_power_ = 0;
};

}  // namespace rfsn::detail
