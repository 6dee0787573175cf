#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rfsn/channel.hpp"
#include "rfsn/chirpmod.hpp"
#include "rfsn/error.hpp"
#include "rfsn/rng.hpp"
#include "rfsn/rxdsp.hpp"

using namespace rfsn;
using namespace rfsn::rx;
using chirp::Symbol;

TEST_CASE("Q function") {
  CHECK(qfunc(0) == doctest::Approx(0.5));
  for (double x : {0.1, 0.7, 1.364, 2.5, 4.0}) {
    CHECK(std::abs(qfunc(x) + qfunc(-x) - 1.0) < 1e-12);
    CHECK(qfunc(x) == doctest::Approx(oracle::q(x)).epsilon(1e-9));
  }
  CHECK(std::abs(qfunc(1.364) - 0.0863) < 1e-4);
  CHECK(std::abs(oracle::q(1.364) - 0.0863) < 1e-4);
}

TEST_CASE("bit error probability") {
  CHECK(ber_theory(10.856 / 256, 7) == doctest::Approx(0.25));
  CHECK(std::abs(ber_theory(0.0848, 7) - 0.0432) < 2e-4);
  CHECK(ber_theory(0.0848, 7) == doctest::Approx(oracle::pb(0.0848, 7)).epsilon(1e-9));
  double prev = 1;
  for (double snr = 0.045; snr < 2; snr *= 2) {
    const double pb = ber_theory(snr, 7);
    CHECK(pb < prev);
    prev = pb;
  }
  // Same snr * 2^(sf+1): only the sf penalty term differs, and it grows with sf.
  for (int sf = 6; sf <= 12; ++sf) {
    const double es = 40.0;
    CHECK(ber_theory(es / std::ldexp(2.0, sf), sf) > ber_theory(es / std::ldexp(2.0, sf - 1), sf - 1));
  }
  CHECK_THROWS_AS(ber_theory(-1, 7), DomainError);
  CHECK_THROWS_AS(ber_theory(1, 4), DomainError);
  for (double pb : {0.2, 0.05, 0.01, 1e-3}) CHECK(ber_theory(snr_for_ber(pb, 7), 7) == doctest::Approx(pb).epsilon(1e-6));
}

TEST_CASE("effective SNR") {
  CHECK(effective_snr(4096 * 1e-20, 4096, 1e-20, 1.0) == doctest::Approx(1.0));
  CHECK(effective_snr(4096 * 1e-20, 4096, 1e-20) == doctest::Approx(0.712));
  CHECK_THROWS_AS(effective_snr(1, 0, 1), DomainError);
  CHECK_THROWS_AS(effective_snr(1, 1, 0), DomainError);
}

TEST_CASE("exhaustive clean detection at sf 7") {
  const auto p = chirp::derive_params(7, 32768);
  std::vector<Symbol> all;
  for (std::uint32_t s = 0; s < 128; ++s) all.push_back(Symbol{s});
  const auto ideal = chirp::modulate_ideal(all, p);
  const auto quant = chirp::modulate_quantized(all, p);
  Demodulator d(p);
  for (std::uint32_t s = 0; s < 128; ++s) {
    CHECK(dechirp(ideal, p, s).detected.value == s);
    const auto out = dechirp(quant, p, s);
    CHECK(out.detected.value == s);
    CHECK(!out.no_signal);
    CHECK(out.bin_magnitudes.size() == 128);
  }
  CHECK_THROWS_AS(dechirp(ideal, p, 128), DomainError);
}

TEST_CASE("all-zero input is flagged") {
  const auto p = chirp::derive_params(7, 32768);
  chirp::Waveform z;
  z.fs_hz = p.fs_hz();
  z.samples.assign(p.samples_per_symbol(), 0.0);
  const auto out = dechirp(z, p, 0);
  CHECK(out.peak_to_mean <= kNoSignalPeakToMean);
  CHECK(out.no_signal);
}

TEST_CASE("stream demodulation") {
  const auto p = chirp::derive_params(7, 32768);
  Engine rng = make_engine(4);
  std::uniform_int_distribution<std::uint32_t> pick(0, 127);
  std::vector<Symbol> tx(1000);
  for (auto& s : tx) s.value = pick(rng);
  const auto w = chirp::modulate_quantized(tx, p);
  CHECK(demodulate_stream(w, p, tx.size()) == tx);
  CHECK(demodulate_stream(w, p, tx.size(), 3) == demodulate_stream(w, p, tx.size(), 1));
  chirp::Waveform cut = w;
  cut.samples.resize(w.size() - 1);
  CHECK_THROWS_AS(demodulate_stream(cut, p, tx.size()), DomainError);
}

TEST_CASE("symbol errors near Pb = 0.01 stay inside the envelope") {
  const int sf = 7;
  const auto p = chirp::params_for_bandwidth(sf, 4096, 8);
  const double pb = 0.01;
  const double snr = snr_for_ber(pb, sf);
  const double ps = 0.25;  // 0/1 envelope after mean removal
  const double n0 = chirp::kDefaultDetectionFraction * ps / (p.bw_hz() * snr);
  const double sigma = std::sqrt(channel::noise_variance(n0, p.fs_hz()));

  BerResult total;
  const std::size_t chunk = 2000;
  for (std::uint64_t j = 0; j < 50; ++j) {
    Engine sym_rng = make_engine(77, stream::symbols, j);
    Engine noise_rng = make_engine(77, stream::noise, j);
    std::uniform_int_distribution<std::uint32_t> pick(0, p.chips() - 1);
    std::vector<Symbol> tx(chunk);
    for (auto& s : tx) s.value = pick(sym_rng);
    auto w = chirp::modulate_quantized(tx, p);
    channel::add_awgn_inplace(w.samples, sigma, noise_rng);
    total += score(tx, demodulate_stream(w, p, chunk), sf);
  }
  REQUIRE(total.n_symbols == 100000);
  CHECK(total.ser() >= pb * sf * 0.3);
  CHECK(total.ser() <= pb * sf * 3);
}

TEST_CASE("scoring") {
  const std::vector<Symbol> a{{1}, {2}, {3}, {4}};
  CHECK(score(a, a, 7).ber() == 0.0);
  CHECK(score(a, a, 7).ser() == 0.0);

  const std::vector<Symbol> x{{0}};
  const std::vector<Symbol> y{{127}};
  CHECK(score(x, y, 7).ber() == 1.0);

  std::vector<Symbol> b = a;
  b[2].value += 1;
  const auto r = score(a, b, 7);
  CHECK(r.ser() == doctest::Approx(0.25));
  CHECK(r.n_bit_errors == 3);  // 3 -> 4 flips three bits
  CHECK(r.n_bits == 28);

  const std::vector<Symbol> short_rx{{1}};
  CHECK_THROWS_AS(score(a, short_rx, 7), DomainError);
}

TEST_CASE("Wilson interval") {
  const auto w = wilson_interval(10, 100);
  // Closed form for k=10, n=100, z=1.96.
  const double z = 1.959963984540054;
  const double phat = 0.1;
  const double denom = 1 + z * z / 100;
  const double centre = (phat + z * z / 200) / denom;
  const double half = z * std::sqrt(phat * 0.9 / 100 + z * z / 40000) / denom;
  CHECK(w.low == doctest::Approx(centre - half));
  CHECK(w.high == doctest::Approx(centre + half));
  CHECK(w.halfwidth == doctest::Approx(half));
  const auto zero = wilson_interval(0, 1000);
  CHECK(std::abs(zero.low) < 1e-15);
  CHECK(zero.high > 0.0);
}
