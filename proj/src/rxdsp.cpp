#include "rfsn/rxdsp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <thread>

#include "rfsn/detail/dechirp_kernel.hpp"
#include "rfsn/error.hpp"
#include "rfsn/waveform_io.hpp"

namespace rfsn::rx {

double qfunc(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double ber_theory(double snr_linear, int sf) {
  if (!(snr_linear >= 0)) throw DomainError("SNR must be non-negative");
  if (sf < chirp::kMinSf || sf > chirp::kMaxSf) throw DomainError("spreading factor outside [5, 12]");
  const double arg = std::sqrt(snr_linear * std::ldexp(2.0, sf)) - std::sqrt(1.386 * sf + 1.154);
  return 0.5 * qfunc(arg);
}

double snr_for_ber(double pb, int sf) {
  if (!(pb > 0 && pb < 0.5)) throw DomainError("target bit error rate must lie in (0, 0.5)");
  double lo = 0;
  double hi = 1;
  while (ber_theory(hi, sf) > pb) hi *= 2;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ber_theory(mid, sf) > pb ? lo : hi) = mid;
  }
  return hi;
}

double effective_snr(double ps_w, double bw_hz, double n0_w_per_hz, double detection_fraction) {
  if (!(bw_hz > 0)) throw DomainError("bandwidth must be positive");
  if (!(n0_w_per_hz > 0)) throw DomainError("noise density must be positive");
  if (!(ps_w >= 0)) throw DomainError("signal power must be non-negative");
  if (!(detection_fraction > 0 && detection_fraction <= 1)) throw DomainError("detection fraction outside (0, 1]");
  return detection_fraction * ps_w / (bw_hz * n0_w_per_hz);
}

// ---------------------------------------------------------------- demodulator

Demodulator::Demodulator(const chirp::ChirpParams& p)
    : params_(p), kernel_(std::make_unique<detail::DechirpKernel>(p)) {}
Demodulator::~Demodulator() = default;
Demodulator::Demodulator(Demodulator&&) noexcept = default;
Demodulator& Demodulator::operator=(Demodulator&&) noexcept = default;

DechirpOutput Demodulator::analyze(std::span<const double> window) {
  const auto bins = kernel_->process(window);
  DechirpOutput out;
  out.bin_magnitudes.resize(bins.size());
  double sum = 0;
  std::size_t best = 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double m = std::abs(bins[k]);
    out.bin_magnitudes[k] = m;
    sum += m;
    if (m > out.bin_magnitudes[best]) best = k;
  }
  out.detected = chirp::Symbol{static_cast<std::uint32_t>(best)};
  const double mean = sum / static_cast<double>(bins.size());
  out.peak_to_mean = mean > 0 ? out.bin_magnitudes[best] / mean : 1.0;
  out.no_signal = out.peak_to_mean <= kNoSignalPeakToMean;
  return out;
}

chirp::Symbol Demodulator::detect(std::span<const double> window) {
  const auto bins = kernel_->process(window);
  std::size_t best = 0;
  double best_power = std::norm(bins[0]);
  for (std::size_t k = 1; k < bins.size(); ++k) {
    const double p = std::norm(bins[k]);
    if (p > best_power) {
      best_power = p;
      best = k;
    }
  }
  return chirp::Symbol{static_cast<std::uint32_t>(best)};
}

namespace {

void check_rate(const chirp::Waveform& signal, const chirp::ChirpParams& p) {
  if (std::abs(signal.fs_hz - p.fs_hz()) > 1e-9 * p.fs_hz()) {
    throw DomainError("signal sample rate does not match the chirp parameters");
  }
}

}  // namespace

DechirpOutput dechirp(const chirp::Waveform& signal, const chirp::ChirpParams& p, std::size_t symbol_index) {
  check_rate(signal, p);
  const std::size_t m = p.samples_per_symbol();
  if ((symbol_index + 1) * m > signal.size()) throw DomainError("symbol window extends past the end of the signal");
  Demodulator demod(p);
  return demod.analyze(std::span<const double>(signal.samples).subspan(symbol_index * m, m));
}

std::vector<chirp::Symbol> demodulate_stream(const chirp::Waveform& signal, const chirp::ChirpParams& p,
                                             std::size_t n_symbols, unsigned threads) {
  check_rate(signal, p);
  const std::size_t m = p.samples_per_symbol();
  if (n_symbols * m > signal.size()) throw DomainError("signal too short for the requested number of symbols");
  std::vector<chirp::Symbol> out(n_symbols);
  if (n_symbols == 0) return out;

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_symbols));
  const std::span<const double> samples(signal.samples);
  // Each worker owns a contiguous block and writes only its own slots.
  auto work = [&](std::size_t begin, std::size_t end) {
    Demodulator demod(p);
    for (std::size_t i = begin; i < end; ++i) out[i] = demod.detect(samples.subspan(i * m, m));
  };
  if (threads == 1) {
    work(0, n_symbols);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n_symbols + threads - 1) / threads;
  for (std::size_t b = 0; b < n_symbols; b += chunk) pool.emplace_back(work, b, std::min(n_symbols, b + chunk));
  for (auto& t : pool) t.join();
  return out;
}

// ---------------------------------------------------------------- scoring

WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double center = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half), half};
}

double BerResult::ber() const noexcept {
  return n_bits ? static_cast<double>(n_bit_errors) / static_cast<double>(n_bits) : 0.0;
}

double BerResult::ser() const noexcept {
  return n_symbols ? static_cast<double>(n_symbol_errors) / static_cast<double>(n_symbols) : 0.0;
}

BerResult& BerResult::operator+=(const BerResult& other) {
  if (n_symbols == 0 && sf == 0) sf = other.sf;
  if (other.n_symbols != 0 && other.sf != sf) throw DomainError("cannot merge results with different spreading factors");
  n_bits += other.n_bits;
  n_bit_errors += other.n_bit_errors;
  n_symbols += other.n_symbols;
  n_symbol_errors += other.n_symbol_errors;
  return *this;
}

BerResult score(std::span<const chirp::Symbol> tx, std::span<const chirp::Symbol> rx, int sf) {
  if (tx.size() != rx.size()) throw DomainError("transmitted and received sequences differ in length");
  if (sf < chirp::kMinSf || sf > chirp::kMaxSf) throw DomainError("spreading factor outside [5, 12]");
  BerResult r;
  r.sf = sf;
  r.n_symbols = tx.size();
  r.n_bits = tx.size() * static_cast<std::uint64_t>(sf);
  const std::uint32_t mask = (1u << sf) - 1u;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    const std::uint32_t diff = (tx[i].value ^ rx[i].value) & mask;
    if (tx[i].value != rx[i].value) ++r.n_symbol_errors;
    r.n_bit_errors += static_cast<std::uint64_t>(std::popcount(diff));
  }
  return r;
}

std::string ber_csv_row(const BerResult& r, double bw_hz, double snr_db) {
  using io::format_double;
  return std::to_string(r.sf) + ',' + format_double(bw_hz) + ',' + format_double(snr_db) + ',' +
         std::to_string(r.n_symbols) + ',' + format_double(r.ser()) + ',' + format_double(r.ber()) + ',' +
         format_double(r.wilson_95_halfwidth());
}

}  // namespace rfsn::rx
