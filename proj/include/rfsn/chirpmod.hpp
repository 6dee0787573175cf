#pragma once

// Square-chirp symbol synthesis for a GPIO-toggling backscatter tag.
//
// A symbol s in [0, 2^sf) starts at frequency s*bw/2^sf and sweeps upward by
// bw over one symbol, wrapping modulo bw. The tag can only short or open its
// antenna, so the envelope is the sign of the chirp's phase: 1 during the
// first half of every cycle, 0 during the second. Phase runs continuously
// across symbols; each symbol spans exactly 2^(sf-1) cycles, so symbol
// boundaries always fall on whole cycles.
//
// All signals here are post-envelope-detector baseband; the RF carrier is
// never sampled.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rfsn::chirp {

inline constexpr int kMinSf = 5;
inline constexpr int kMaxSf = 12;
/// Clock cycles per PIC10 instruction; one GPIO write takes one instruction.
inline constexpr double kClocksPerToggle = 4.0;
/// Shortest square-wave period the MCU can emit, in clock cycles.
inline constexpr double kClocksPerPeriod = 2.0 * kClocksPerToggle;
/// Default simulation sample rate as a multiple of the bandwidth.
inline constexpr double kDefaultOversampling = 16.0;
/// Share of power usable by a linear down-chirp detector on a square chirp,
/// as used by the closed-form SNR (two times the 35.6% main-lobe share).
inline constexpr double kDefaultDetectionFraction = 0.712;

struct Symbol {
  std::uint32_t value = 0;
  auto operator<=>(const Symbol&) const = default;
};

class ChirpParams {
 public:
  /// Validates every invariant; throws ConfigError otherwise.
  static ChirpParams make(int sf, double bw_hz, double fosc_hz, double fs_hz);

  int sf() const noexcept { return sf_; }
  double bw_hz() const noexcept { return bw_hz_; }
  double fosc_hz() const noexcept { return fosc_hz_; }
  double fs_hz() const noexcept { return fs_hz_; }
  /// 2^sf / bw.
  double symbol_duration_s() const noexcept { return ds_s_; }
  /// bw * sf / 2^sf.
  double data_rate_bps() const noexcept { return rd_bps_; }
  std::uint32_t chips() const noexcept { return 1u << sf_; }
  std::size_t samples_per_symbol() const noexcept { return samples_per_symbol_; }

  bool operator==(const ChirpParams&) const = default;

 private:
  ChirpParams() = default;

  int sf_ = 0;
  double bw_hz_ = 0;
  double fosc_hz_ = 0;
  double fs_hz_ = 0;
  double ds_s_ = 0;
  double rd_bps_ = 0;
  std::size_t samples_per_symbol_ = 0;
};

/// Parameters at the widest bandwidth the clock allows, bw = fosc/8.
/// Requires fs_hz >= fosc_hz so the toggle grid is representable.
ChirpParams derive_params(int sf, double fosc_hz, double fs_hz);
/// Same with the default sample rate, 16*bw (= 2*fosc).
ChirpParams derive_params(int sf, double fosc_hz);
/// Parameters for an arbitrary bandwidth with the MCU clock at the cap (fosc = 8*bw).
ChirpParams params_for_bandwidth(int sf, double bw_hz, double oversampling = kDefaultOversampling);

enum class WaveformKind : std::uint8_t { binary_envelope = 0, analog = 1 };

struct Waveform {
  std::vector<double> samples;
  double fs_hz = 0;
  WaveformKind kind = WaveformKind::analog;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const noexcept { return fs_hz > 0 ? static_cast<double>(samples.size()) / fs_hz : 0.0; }
  bool operator==(const Waveform&) const = default;
};

struct PowerSpectrum {
  std::vector<double> freqs_hz;
  std::vector<double> psd;  ///< power per bin, one-sided
  double total_power = 0;
};

/// Throws DomainError if the symbol does not fit in sf bits.
void check_symbol(Symbol s, const ChirpParams& p);

/// Frequency of the square chirp for `symbol` at time t within its window.
double instantaneous_frequency(Symbol symbol, double t_s, const ChirpParams& p);

/// Unquantized binary-envelope square chirps (toggles at exact phase instants).
Waveform modulate_ideal(std::span<const Symbol> symbols, const ChirpParams& p);

/// Continuous-amplitude reference chirp cos(phase) with the same phase law.
Waveform modulate_linear(std::span<const Symbol> symbols, const ChirpParams& p);

struct QuantizeOptions {
  /// Adds a uniform {-1, 0, +1} instruction-cycle offset to every toggle.
  bool jitter = false;
  std::uint64_t jitter_seed = 0;
};

/// Snap every transition of a binary envelope to the next multiple of
/// 4/fosc at or after it. `max_frequency_hz` is the highest chirp frequency
/// present (the bandwidth); InfeasibleError if its half-period is shorter
/// than one instruction cycle, ConfigError if fs is not a whole multiple of
/// the toggle grid.
Waveform quantize_toggles(const Waveform& w, double fosc_hz, double max_frequency_hz,
                          const QuantizeOptions& opts = {});
Waveform quantize_toggles(const Waveform& w, const ChirpParams& p, const QuantizeOptions& opts = {});

/// modulate_ideal followed by quantize_toggles at the params' clock.
Waveform modulate_quantized(std::span<const Symbol> symbols, const ChirpParams& p,
                            const QuantizeOptions& opts = {});

Waveform remove_mean(const Waveform& w);

/// One-sided periodogram with sum(psd) equal to the mean-square of the samples.
PowerSpectrum spectrum(const Waveform& w);

struct Spectrogram {
  std::vector<double> times_s;  ///< frame centers
  std::vector<double> freqs_hz;
  std::vector<std::vector<double>> frames;  ///< power per bin, per frame

  /// Frequency of the strongest bin in each frame.
  std::vector<double> ridge_hz() const;
};

/// Hann-windowed short-time spectra of the mean-removed waveform.
Spectrogram short_time_spectrum(const Waveform& w, std::size_t window, std::size_t hop);

struct DetectionFraction {
  /// Detected-bin power over the whole mean-removed signal power. This is
  /// the factor that scales Ps/(Bw*N0) into the detector's effective SNR.
  double of_total = 0;
  /// Detected-bin power over the power in all 2^sf dechirped bins.
  double in_band = 0;
};

/// Measures how much of the signal a linear down-chirp detector collects.
/// `expected` gives the symbol carried by each window (all zeros if empty).
DetectionFraction detection_power_fraction(const Waveform& w, const ChirpParams& p,
                                           std::span<const Symbol> expected = {});

}  // namespace rfsn::chirp
