#include "rfsn/detail/dechirp_kernel.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "rfsn/error.hpp"

namespace rfsn::detail {

DechirpKernel::DechirpKernel(const chirp::ChirpParams& p)
    : chips_(p.chips()),
      window_(p.samples_per_symbol()),
      band_(p.samples_per_symbol()),
      to_chips_(p.chips(), ComplexFft::Direction::backward),
      to_bins_(p.chips(), ComplexFft::Direction::forward),
      reference_(p.chips()) {
  if (window_ / 2 + 1 < chips_) throw ConfigError("sample rate too low to resolve the chirp band");
  // Base up-chirp from 0 to bw sampled at t = c/bw has phase pi*c^2/2^sf.
  const double n = static_cast<double>(chips_);
  for (std::size_t c = 0; c < chips_; ++c) {
    const double cc = static_cast<double>(c);
    // c^2 mod 2N keeps the argument small for large sf.
    const double reduced = std::fmod(cc * cc, 2.0 * n);
    reference_[c] = std::polar(1.0, -std::numbers::pi * reduced / n);
  }
}

std::span<const std::complex<double>> DechirpKernel::process(std::span<const double> window) {
  if (window.size() != window_) throw DomainError("dechirp window has the wrong length");

  const double mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window_);
  auto in = band_.input();
  double power = 0;
  for (std::size_t i = 0; i < window_; ++i) {
    const double x = window[i] - mean;
    in[i] = x;
    power += x * x;
  }
  last_power_ = power / static_cast<double>(window_);

  const auto spec = band_.execute();
  auto chips = to_chips_.data();
  const double scale = 1.0 / static_cast<double>(window_);
  for (std::size_t k = 0; k < chips_; ++k) chips[k] = spec[k] * scale;
  to_chips_.execute();

  auto bins = to_bins_.data();
  for (std::size_t c = 0; c < chips_; ++c) bins[c] = chips[c] * reference_[c];
  to_bins_.execute();
  return bins;
}

}  // namespace rfsn::detail
