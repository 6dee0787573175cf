#pragma once

// Dechirp demodulation and the closed-form error-rate theory it is checked
// against.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rfsn/chirpmod.hpp"

namespace rfsn::detail {
class DechirpKernel;
}

namespace rfsn::rx {

/// Peak-to-mean ratio at or below which a detection is flagged as no-signal.
inline constexpr double kNoSignalPeakToMean = 2.0;

/// Upper tail of the standard normal, P(Z > x).
double qfunc(double x);

/// Bit error probability of linear-chirp CSS at per-sample SNR `snr_linear`:
/// Q(sqrt(snr * 2^(sf+1)) - sqrt(1.386 sf + 1.154)) / 2.
double ber_theory(double snr_linear, int sf);

/// Smallest SNR at which ber_theory falls to `pb` (pb in (0, 0.5)).
double snr_for_ber(double pb, int sf);

/// detection_fraction * ps / (bw * n0).
double effective_snr(double ps_w, double bw_hz, double n0_w_per_hz,
                     double detection_fraction = chirp::kDefaultDetectionFraction);

struct DechirpOutput {
  std::vector<double> bin_magnitudes;
  chirp::Symbol detected;
  double peak_to_mean = 0;
  bool no_signal = false;
};

/// Reusable per-thread demodulator. Not thread-safe; make one per worker.
class Demodulator {
 public:
  explicit Demodulator(const chirp::ChirpParams& p);
  ~Demodulator();
  Demodulator(Demodulator&&) noexcept;
  Demodulator& operator=(Demodulator&&) noexcept;

  /// `window` holds one symbol's samples.
  DechirpOutput analyze(std::span<const double> window);
  chirp::Symbol detect(std::span<const double> window);

  const chirp::ChirpParams& params() const noexcept { return params_; }

 private:
  chirp::ChirpParams params_;
  std::unique_ptr<detail::DechirpKernel> kernel_;
};

/// Dechirps symbol `symbol_index` of a perfectly aligned signal.
DechirpOutput dechirp(const chirp::Waveform& signal, const chirp::ChirpParams& p, std::size_t symbol_index);

/// Detects n_symbols consecutive symbols. Work is split across `threads`
/// workers (0 = hardware concurrency); the result does not depend on it.
std::vector<chirp::Symbol> demodulate_stream(const chirp::Waveform& signal, const chirp::ChirpParams& p,
                                             std::size_t n_symbols, unsigned threads = 0);

struct WilsonInterval {
  double low = 0;
  double high = 1;
  double halfwidth = 0.5;
};

/// 95% Wilson score interval for k successes in n trials.
WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

struct BerResult {
  int sf = 0;
  std::uint64_t n_bits = 0;
  std::uint64_t n_bit_errors = 0;
  std::uint64_t n_symbols = 0;
  std::uint64_t n_symbol_errors = 0;

  double ber() const noexcept;
  double ser() const noexcept;
  WilsonInterval ber_interval() const { return wilson_interval(n_bit_errors, n_bits); }
  double wilson_95_halfwidth() const { return ber_interval().halfwidth; }

  /// Adds the counts of another result with the same sf.
  BerResult& operator+=(const BerResult& other);
};

BerResult score(std::span<const chirp::Symbol> tx, std::span<const chirp::Symbol> rx, int sf);

inline constexpr const char* kBerCsvHeader = "sf,bw_hz,snr_db,n_symbols,ser,ber,wilson95";
std::string ber_csv_row(const BerResult& r, double bw_hz, double snr_db);

}  // namespace rfsn::rx
