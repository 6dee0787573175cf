#include "rfsn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rfsn/detail/csv.hpp"
#include "rfsn/error.hpp"
#include "rfsn/rng.hpp"

namespace rfsn::channel {

namespace {

constexpr double kGridTol = 1e-9;

bool same(double a, double b) { return std::abs(a - b) <= kGridTol * std::max(1.0, std::abs(b)); }

std::size_t index_of(const std::vector<double>& axis, double v) {
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (same(axis[i], v)) return i;
  }
  return axis.size();
}

// Lower bracket index and weight of `v` on a sorted axis; OutOfRangeError outside.
std::pair<std::size_t, double> bracket(const std::vector<double>& axis, double v, const char* what) {
  if (!std::isfinite(v) || v < axis.front() - kGridTol || v > axis.back() + kGridTol) {
    throw OutOfRangeError(std::string(what) + " " + std::to_string(v) + " outside the tabulated range [" +
                          std::to_string(axis.front()) + ", " + std::to_string(axis.back()) + "]");
  }
  if (axis.size() == 1) return {0, 0.0};
  std::size_t i = 0;
  while (i + 2 < axis.size() && v > axis[i + 1]) ++i;
  const double w = std::clamp((v - axis[i]) / (axis[i + 1] - axis[i]), 0.0, 1.0);
  return {i, w};
}

}  // namespace

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double w) {
  if (w < 0) throw DomainError("negative power");
  return 10.0 * std::log10(w) + 30.0;
}

double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }

// ---------------------------------------------------------------- incident power

IncidentPowerTable IncidentPowerTable::measured() {
  const double eirps[] = {9.7, 13.9, 17.8, 23.6, 30.7, 36.0};
  const double depths[] = {3.5, 6.0, 10.0, 13.5};
  const double pr[4][6] = {
      {-17.0, -13.4, -8.1, -1.5, 5.9, 11.4},
      {-20.2, -16.5, -11.2, -4.7, 2.5, 8.2},
      {-24.5, -20.9, -16.0, -9.6, -2.3, 3.2},
      {-23.0, -19.5, -14.2, -7.3, 0.25, 6.0},
  };
  std::vector<IncidentPowerRow> rows;
  for (std::size_t d = 0; d < 4; ++d) {
    for (std::size_t e = 0; e < 6; ++e) rows.push_back({eirps[e], depths[d], pr[d][e]});
  }
  return from_rows(std::move(rows));
}

IncidentPowerTable IncidentPowerTable::from_rows(std::vector<IncidentPowerRow> rows) {
  std::vector<std::string> problems;
  IncidentPowerTable t;
  for (const auto& r : rows) {
    if (!std::isfinite(r.eirp_dbm) || !std::isfinite(r.depth_cm) || !std::isfinite(r.pr_dbm)) {
      problems.emplace_back("incident-power table contains a non-finite value");
      continue;
    }
    if (index_of(t.eirps_, r.eirp_dbm) == t.eirps_.size()) t.eirps_.push_back(r.eirp_dbm);
    if (index_of(t.depths_, r.depth_cm) == t.depths_.size()) t.depths_.push_back(r.depth_cm);
  }
  std::sort(t.eirps_.begin(), t.eirps_.end());
  std::sort(t.depths_.begin(), t.depths_.end());
  if (t.eirps_.empty()) problems.emplace_back("incident-power table is empty");

  const std::size_t cells = t.eirps_.size() * t.depths_.size();
  t.pr_.assign(cells, std::nan(""));
  for (const auto& r : rows) {
    const auto e = index_of(t.eirps_, r.eirp_dbm);
    const auto d = index_of(t.depths_, r.depth_cm);
    if (e == t.eirps_.size() || d == t.depths_.size()) continue;
    double& slot = t.pr_[d * t.eirps_.size() + e];
    if (!std::isnan(slot)) {
      problems.push_back("duplicate cell at EIRP " + std::to_string(r.eirp_dbm) + " dBm, depth " +
                         std::to_string(r.depth_cm) + " cm");
    }
    slot = r.pr_dbm;
  }
  for (std::size_t d = 0; d < t.depths_.size(); ++d) {
    for (std::size_t e = 0; e < t.eirps_.size(); ++e) {
      if (std::isnan(t.at(d, e))) {
        problems.push_back("missing cell at EIRP " + std::to_string(t.eirps_[e]) + " dBm, depth " +
                           std::to_string(t.depths_[d]) + " cm");
      } else if (e > 0 && !std::isnan(t.at(d, e - 1)) && !(t.at(d, e) > t.at(d, e - 1))) {
        problems.push_back("incident power does not rise with EIRP at depth " + std::to_string(t.depths_[d]) + " cm");
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return t;
}

IncidentPowerTable IncidentPowerTable::load_csv(const std::filesystem::path& path) {
  const auto raw = detail::read_numeric_csv(path, {"eirp_dbm", "depth_cm", "pr_dbm"});
  std::vector<IncidentPowerRow> rows;
  rows.reserve(raw.size());
  for (const auto& r : raw) rows.push_back({r[0], r[1], r[2]});
  return from_rows(std::move(rows));
}

std::vector<IncidentPowerRow> IncidentPowerTable::rows() const {
  std::vector<IncidentPowerRow> out;
  for (std::size_t d = 0; d < depths_.size(); ++d) {
    for (std::size_t e = 0; e < eirps_.size(); ++e) out.push_back({eirps_[e], depths_[d], at(d, e)});
  }
  return out;
}

double IncidentPowerTable::cell(double eirp_dbm, double depth_cm) const {
  const auto e = index_of(eirps_, eirp_dbm);
  const auto d = index_of(depths_, depth_cm);
  if (e == eirps_.size() || d == depths_.size()) throw OutOfRangeError("not a grid point of the incident-power table");
  return at(d, e);
}

double incident_power(double eirp_dbm, double depth_cm, const IncidentPowerTable& table) {
  const auto [e, we] = bracket(table.eirps_, eirp_dbm, "EIRP");
  const auto [d, wd] = bracket(table.depths_, depth_cm, "depth");
  const std::size_t e1 = std::min(e + 1, table.eirps_.size() - 1);
  const std::size_t d1 = std::min(d + 1, table.depths_.size() - 1);
  const double lo = (1 - we) * table.at(d, e) + we * table.at(d, e1);
  const double hi = (1 - we) * table.at(d1, e) + we * table.at(d1, e1);
  return (1 - wd) * lo + wd * hi;
}

// ---------------------------------------------------------------- attenuation

void AttenuationModel::validate() const {
  std::vector<std::string> problems;
  if (!(alpha_dry_db_per_cm > 0)) problems.emplace_back("dry attenuation must be positive");
  if (!(alpha_wet_db_per_cm > 0)) problems.emplace_back("wet attenuation must be positive");
  if (!(interface_loss_db >= 0)) problems.emplace_back("interface loss must be non-negative");
  if (!std::isfinite(tx_gain_dbi) || !std::isfinite(rx_gain_dbi)) problems.emplace_back("antenna gains must be finite");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

double propagation_loss(double depth_cm, Moisture moisture, const AttenuationModel& m) {
  m.validate();
  if (!(depth_cm >= 0)) throw DomainError("depth must be non-negative");
  const double alpha = moisture == Moisture::dry ? m.alpha_dry_db_per_cm : m.alpha_wet_db_per_cm;
  return m.interface_loss_db + alpha * depth_cm;
}

double analytic_incident_power(double eirp_dbm, double depth_cm, Moisture moisture, const AttenuationModel& m) {
  return eirp_dbm + m.rx_gain_dbi - propagation_loss(depth_cm, moisture, m);
}

double permittivity_from_shift(double f_air_hz, double f_embedded_hz) {
  if (!(f_air_hz > 0) || !(f_embedded_hz > 0)) throw DomainError("frequencies must be positive");
  if (f_embedded_hz > f_air_hz) throw DomainError("embedded resonance above the in-air resonance");
  const double r = f_air_hz / f_embedded_hz;
  return r * r;
}

double resonant_shift(double f_air_hz, double er) {
  if (!(f_air_hz > 0)) throw DomainError("frequency must be positive");
  if (!(er >= 1)) throw DomainError("relative permittivity below 1");
  return f_air_hz / std::sqrt(er);
}

// ---------------------------------------------------------------- signal path

chirp::Waveform apply_gain(const chirp::Waveform& w, double gain_db) {
  if (!std::isfinite(gain_db)) throw DomainError("gain must be finite");
  chirp::Waveform out = w;
  out.kind = chirp::WaveformKind::analog;
  const double a = std::pow(10.0, gain_db / 20.0);
  for (auto& v : out.samples) v *= a;
  return out;
}

double noise_variance(double n0_w_per_hz, double fs_hz) { return n0_w_per_hz * fs_hz / 2.0; }

chirp::Waveform add_awgn(const chirp::Waveform& w, const NoiseModel& n) {
  if (!(n.n0_w_per_hz >= 0)) throw DomainError("noise density must be non-negative");
  if (!(w.fs_hz > 0)) throw DomainError("waveform has no sample rate");
  chirp::Waveform out = w;
  out.kind = chirp::WaveformKind::analog;
  Engine rng = make_engine(n.seed, stream::noise);
  add_awgn_inplace(out.samples, std::sqrt(noise_variance(n.n0_w_per_hz, w.fs_hz)), rng);
  return out;
}

// ---------------------------------------------------------------- W bursts

void WBurstModel::validate() const {
  std::vector<std::string> problems;
  if (!(mean_interval_s > 0)) problems.emplace_back("burst mean interval must be positive");
  if (!(duration_s > 0)) problems.emplace_back("burst duration must be positive");
  if (duration_s > 0 && mean_interval_s > 0 && !(duration_s < mean_interval_s)) {
    problems.emplace_back("burst duration must be shorter than the mean interval");
  }
  if (!(amplitude_scale >= 0) || !std::isfinite(amplitude_scale)) {
    problems.emplace_back("burst amplitude scale must be finite and non-negative");
  }
  if (envelope.size() < 2) problems.emplace_back("burst envelope needs at least two points");
  if (!std::all_of(envelope.begin(), envelope.end(), [](double v) { return std::isfinite(v); })) {
    problems.emplace_back("burst envelope contains a non-finite value");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::vector<Burst> generate_burst_log(double span_s, const WBurstModel& m) {
  m.validate();
  if (!(span_s > 0)) throw DomainError("burst span must be positive");
  Engine rng = make_engine(m.seed, stream::bursts);
  std::exponential_distribution<double> gap(1.0 / m.mean_interval_s);
  std::vector<Burst> log;
  // Start the process one burst length early so bursts already in progress at
  // t = 0 are represented.
  double t = -m.duration_s;
  while (true) {
    t += gap(rng);
    if (t >= span_s) break;
    log.push_back({t, m.duration_s});
  }
  return log;
}

double burst_envelope(double u, std::span<const double> envelope) {
  if (envelope.size() < 2) throw DomainError("burst envelope needs at least two points");
  const double pos = std::clamp(u, 0.0, 1.0) * static_cast<double>(envelope.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), envelope.size() - 2);
  const double f = pos - static_cast<double>(i);
  return envelope[i] + f * (envelope[i + 1] - envelope[i]);
}

void apply_bursts(std::span<double> samples, double fs_hz, double t0_s, std::span<const Burst> log,
                  std::span<const double> envelope, double peak_amplitude) {
  if (peak_amplitude == 0 || samples.empty()) return;
  const auto n = static_cast<double>(samples.size());
  for (const auto& b : log) {
    const double lo = std::clamp(std::ceil((b.start_s - t0_s) * fs_hz), 0.0, n);
    const double hi = std::clamp(std::ceil((b.start_s + b.duration_s - t0_s) * fs_hz), 0.0, n);
    for (auto i = static_cast<std::size_t>(lo); i < static_cast<std::size_t>(hi); ++i) {
      const double t = t0_s + static_cast<double>(i) / fs_hz;
      samples[i] += peak_amplitude * burst_envelope((t - b.start_s) / b.duration_s, envelope);
    }
  }
}

double ac_rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double acc = 0;
  for (double v : samples) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / n);
}

BurstInjection inject_w_bursts(const chirp::Waveform& w, const WBurstModel& m) {
  if (w.samples.empty() || !(w.fs_hz > 0)) throw DomainError("burst injection needs a non-empty waveform");
  BurstInjection out;
  out.log = generate_burst_log(w.duration_s(), m);
  out.waveform = w;
  out.waveform.kind = chirp::WaveformKind::analog;
  apply_bursts(out.waveform.samples, w.fs_hz, 0.0, out.log, m.envelope, m.amplitude_scale * ac_rms(w.samples));
  return out;
}

double interference_symbol_error_rate(double ds_s, const WBurstModel& m) {
  if (!(ds_s > 0)) throw DomainError("symbol duration must be positive");
  if (!(m.duration_s > 0) || !(m.mean_interval_s > 0)) throw DomainError("burst durations must be positive");
  // The shrink keeps an exact multiple (Dw = k*Ds) from rounding up to k+1.
  const double spoiled = std::ceil(m.duration_s / ds_s * (1 - 1e-12));
  return std::min(1.0, spoiled * ds_s / m.mean_interval_s);
}

}  // namespace rfsn::channel
