#include "rfsn/chirpmod.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>

#include "rfsn/detail/dechirp_kernel.hpp"
#include "rfsn/detail/fft.hpp"
#include "rfsn/error.hpp"
#include "rfsn/rng.hpp"

namespace rfsn::chirp {

namespace {

bool is_whole(double x, double rel_tol = 1e-9) {
  return std::abs(x - std::round(x)) <= rel_tol * std::max(1.0, std::abs(x));
}

// Cycles elapsed since the start of the symbol window at sample n of m.
// Derivative w.r.t. time is the wrapped instantaneous frequency; the value at
// n == m is exactly 2^(sf-1).
double symbol_cycles(double s, double chips, double n, double m) {
  const double x = n / m;
  const double wrap_at = 1.0 - s / chips;
  return s * x + 0.5 * chips * x * x - chips * std::max(0.0, x - wrap_at);
}

template <typename Shape>
Waveform synthesize(std::span<const Symbol> symbols, const ChirpParams& p, WaveformKind kind, Shape shape) {
  if (symbols.empty()) throw DomainError("cannot modulate an empty symbol sequence");
  for (const auto s : symbols) check_symbol(s, p);

  const std::size_t m = p.samples_per_symbol();
  const double chips = static_cast<double>(p.chips());
  Waveform w;
  w.fs_hz = p.fs_hz();
  w.kind = kind;
  w.samples.resize(m * symbols.size());
  // Every symbol spans a whole number of cycles, so the running phase at each
  // boundary is an integer and continuity needs no carried state.
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const double s = symbols[k].value;
    double* out = w.samples.data() + k * m;
    for (std::size_t n = 0; n < m; ++n) {
      const double c = symbol_cycles(s, chips, static_cast<double>(n), static_cast<double>(m));
      out[n] = shape(c - std::floor(c));
    }
  }
  return w;
}

}  // namespace

ChirpParams ChirpParams::make(int sf, double bw_hz, double fosc_hz, double fs_hz) {
  std::vector<std::string> problems;
  if (sf < kMinSf || sf > kMaxSf) {
    problems.push_back("spreading factor " + std::to_string(sf) + " outside [5, 12]");
  }
  if (!(bw_hz > 0) || !std::isfinite(bw_hz)) problems.emplace_back("bandwidth must be positive");
  if (!(fosc_hz > 0) || !std::isfinite(fosc_hz)) problems.emplace_back("clock frequency must be positive");
  if (!(fs_hz > 0) || !std::isfinite(fs_hz)) problems.emplace_back("sample rate must be positive");
  if (problems.empty()) {
    if (bw_hz > fosc_hz / kClocksPerPeriod * (1 + 1e-12)) {
      problems.emplace_back("bandwidth exceeds fosc/8, the MCU toggling cap");
    }
    if (fs_hz < kClocksPerPeriod * bw_hz * (1 - 1e-12)) {
      problems.emplace_back("sample rate below 8x bandwidth");
    }
  }
  ChirpParams p;
  if (problems.empty()) {
    p.sf_ = sf;
    p.bw_hz_ = bw_hz;
    p.fosc_hz_ = fosc_hz;
    p.fs_hz_ = fs_hz;
    const double chips = std::ldexp(1.0, sf);
    p.ds_s_ = chips / bw_hz;
    p.rd_bps_ = bw_hz * sf / chips;
    const double per_symbol = chips * fs_hz / bw_hz;
    if (!is_whole(per_symbol)) {
      problems.emplace_back("symbol duration is not a whole number of samples");
    } else {
      p.samples_per_symbol_ = static_cast<std::size_t>(std::llround(per_symbol));
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return p;
}

ChirpParams derive_params(int sf, double fosc_hz, double fs_hz) {
  if (!(fs_hz >= fosc_hz)) throw ConfigError("sample rate must be at least the MCU clock to represent the toggle grid");
  return ChirpParams::make(sf, fosc_hz / kClocksPerPeriod, fosc_hz, fs_hz);
}

ChirpParams derive_params(int sf, double fosc_hz) {
  const double bw = fosc_hz / kClocksPerPeriod;
  return derive_params(sf, fosc_hz, kDefaultOversampling * bw);
}

ChirpParams params_for_bandwidth(int sf, double bw_hz, double oversampling) {
  return ChirpParams::make(sf, bw_hz, kClocksPerPeriod * bw_hz, oversampling * bw_hz);
}

void check_symbol(Symbol s, const ChirpParams& p) {
  if (s.value >= p.chips()) {
    throw DomainError("symbol " + std::to_string(s.value) + " does not fit in sf=" + std::to_string(p.sf()));
  }
}

double instantaneous_frequency(Symbol symbol, double t_s, const ChirpParams& p) {
  check_symbol(symbol, p);
  if (!(t_s >= 0) || t_s >= p.symbol_duration_s()) throw DomainError("time outside the symbol window");
  const double start = symbol.value * p.bw_hz() / p.chips();
  return std::fmod(start + p.bw_hz() * t_s / p.symbol_duration_s(), p.bw_hz());
}

Waveform modulate_ideal(std::span<const Symbol> symbols, const ChirpParams& p) {
  return synthesize(symbols, p, WaveformKind::binary_envelope,
                    [](double frac) { return frac < 0.5 ? 1.0 : 0.0; });
}

Waveform modulate_linear(std::span<const Symbol> symbols, const ChirpParams& p) {
  return synthesize(symbols, p, WaveformKind::analog,
                    [](double frac) { return std::cos(2.0 * std::numbers::pi * frac); });
}

Waveform quantize_toggles(const Waveform& w, double fosc_hz, double max_frequency_hz, const QuantizeOptions& opts) {
  if (w.kind != WaveformKind::binary_envelope) throw DomainError("toggle quantization needs a binary envelope");
  if (!(fosc_hz > 0)) throw ConfigError("clock frequency must be positive");
  const double toggle_s = kClocksPerToggle / fosc_hz;
  const double shortest_half_period_s = 1.0 / (2.0 * max_frequency_hz);
  if (toggle_s > shortest_half_period_s * (1 + 1e-12)) {
    throw InfeasibleError("bandwidth infeasible: " + std::to_string(max_frequency_hz) +
                          " Hz needs toggles faster than one instruction cycle at " + std::to_string(fosc_hz) + " Hz");
  }
  const double grid_samples = w.fs_hz * toggle_s;
  if (!is_whole(grid_samples) || std::llround(grid_samples) < 1) {
    throw ConfigError("sample rate is not a whole multiple of the 4/fosc toggle grid");
  }
  const auto grid = static_cast<std::size_t>(std::llround(grid_samples));

  Waveform out;
  out.fs_hz = w.fs_hz;
  out.kind = WaveformKind::binary_envelope;
  if (w.samples.empty()) return out;
  for (double v : w.samples) {
    if (v != 0.0 && v != 1.0) throw DomainError("binary envelope contains a value other than 0 or 1");
  }

  Engine jitter_rng = make_engine(opts.jitter_seed, stream::jitter);
  std::uniform_int_distribution<int> step(-1, 1);

  const std::size_t n = w.samples.size();
  out.samples.resize(n);
  double level = w.samples[0];
  std::size_t filled = 0;
  bool have_prev = false;
  std::size_t prev = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (w.samples[i] == w.samples[i - 1]) continue;
    std::size_t at = (i + grid - 1) / grid * grid;
    if (opts.jitter) {
      const int d = step(jitter_rng);
      if (d < 0 && at >= grid) at -= grid;
      if (d > 0) at += grid;
    }
    if (have_prev) at = std::max(at, prev + grid);
    if (at >= n) break;
    std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(filled),
              out.samples.begin() + static_cast<std::ptrdiff_t>(at), level);
    filled = at;
    level = 1.0 - level;
    prev = at;
    have_prev = true;
  }
  std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(filled), out.samples.end(), level);
  return out;
}

Waveform quantize_toggles(const Waveform& w, const ChirpParams& p, const QuantizeOptions& opts) {
  return quantize_toggles(w, p.fosc_hz(), p.bw_hz(), opts);
}

Waveform modulate_quantized(std::span<const Symbol> symbols, const ChirpParams& p, const QuantizeOptions& opts) {
  return quantize_toggles(modulate_ideal(symbols, p), p, opts);
}

Waveform remove_mean(const Waveform& w) {
  Waveform out = w;
  out.kind = WaveformKind::analog;
  if (out.samples.empty()) return out;
  const double mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(out.size());
  for (auto& v : out.samples) v -= mean;
  return out;
}

PowerSpectrum spectrum(const Waveform& w) {
  if (w.samples.empty()) throw DomainError("spectrum of an empty waveform");
  const std::size_t n = w.size();
  detail::RealFft fft(n);
  std::copy(w.samples.begin(), w.samples.end(), fft.input().begin());
  const auto bins = fft.execute();

  PowerSpectrum ps;
  ps.freqs_hz.resize(bins.size());
  ps.psd.resize(bins.size());
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  for (std::size_t k = 0; k < bins.size(); ++k) {
    ps.freqs_hz[k] = static_cast<double>(k) * w.fs_hz / static_cast<double>(n);
    // Fold negative frequencies onto their positive twins; DC and Nyquist have none.
    const bool has_twin = k != 0 && !(n % 2 == 0 && k == n / 2);
    ps.psd[k] = std::norm(bins[k]) * norm * (has_twin ? 2.0 : 1.0);
  }
  ps.total_power = std::accumulate(ps.psd.begin(), ps.psd.end(), 0.0);
  return ps;
}

std::vector<double> Spectrogram::ridge_hz() const {
  std::vector<double> ridge;
  ridge.reserve(frames.size());
  for (const auto& f : frames) {
    const auto it = std::max_element(f.begin(), f.end());
    ridge.push_back(freqs_hz[static_cast<std::size_t>(it - f.begin())]);
  }
  return ridge;
}

Spectrogram short_time_spectrum(const Waveform& w, std::size_t window, std::size_t hop) {
  if (window < 2 || hop == 0) throw DomainError("short-time spectrum needs window >= 2 and hop >= 1");
  if (w.size() < window) throw DomainError("waveform shorter than the analysis window");
  const Waveform x = remove_mean(w);

  std::vector<double> hann(window);
  for (std::size_t i = 0; i < window; ++i) {
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(window));
  }

  Spectrogram sg;
  detail::RealFft fft(window);
  const std::size_t nbins = window / 2 + 1;
  sg.freqs_hz.resize(nbins);
  for (std::size_t k = 0; k < nbins; ++k) {
    sg.freqs_hz[k] = static_cast<double>(k) * w.fs_hz / static_cast<double>(window);
  }
  for (std::size_t start = 0; start + window <= x.size(); start += hop) {
    auto in = fft.input();
    for (std::size_t i = 0; i < window; ++i) in[i] = x.samples[start + i] * hann[i];
    const auto bins = fft.execute();
    std::vector<double> frame(nbins);
    for (std::size_t k = 0; k < nbins; ++k) frame[k] = std::norm(bins[k]);
    sg.frames.push_back(std::move(frame));
    sg.times_s.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(window)) / w.fs_hz);
  }
  return sg;
}

DetectionFraction detection_power_fraction(const Waveform& w, const ChirpParams& p, std::span<const Symbol> expected) {
  const std::size_t m = p.samples_per_symbol();
  const std::size_t windows = w.size() / m;
  if (windows == 0) throw DomainError("waveform shorter than one symbol");
  if (!expected.empty() && expected.size() != windows) {
    throw DomainError("expected-symbol count does not match the number of symbol windows");
  }

  detail::DechirpKernel kernel(p);
  const double chips = static_cast<double>(p.chips());
  double captured = 0;
  double total = 0;
  double bin_power = 0;
  double all_bins = 0;
  for (std::size_t i = 0; i < windows; ++i) {
    const auto bins = kernel.process(std::span<const double>(w.samples).subspan(i * m, m));
    const std::uint32_t k = expected.empty() ? 0u : expected[i].value;
    check_symbol(Symbol{k}, p);
    const double pk = std::norm(bins[k]);
    captured += 2.0 * pk / (chips * chips);
    total += kernel.last_power();
    bin_power += pk;
    for (const auto& b : bins) all_bins += std::norm(b);
  }
  DetectionFraction f;
  f.of_total = total > 0 ? captured / total : 0.0;
  f.in_band = all_bins > 0 ? bin_power / all_bins : 0.0;
  return f;
}

}  // namespace rfsn::chirp
