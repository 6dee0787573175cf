#pragma once

// Transport between the mobile transmitter and the embedded node: the
// measured incident-power grid, an analytic dB/cm attenuation model, the
// resonant-frequency/permittivity relation, additive noise and W-shaped
// receiver interference bursts.

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "rfsn/chirpmod.hpp"

namespace rfsn::channel {

double dbm_to_watts(double dbm);
double watts_to_dbm(double w);
double db_to_ratio(double db);

// ---------------------------------------------------------------- incident power

struct IncidentPowerRow {
  double eirp_dbm = 0;
  double depth_cm = 0;
  double pr_dbm = 0;
};

/// Full rectangular grid of measured incident power, indexed by EIRP and depth.
/// Power must rise strictly with EIRP at every depth; depth order is not checked
/// because the measured 13.5 cm row sits above the 10 cm row.
class IncidentPowerTable {
 public:
  /// The 24 measured cells (6 EIRP levels x 4 depths).
  static IncidentPowerTable measured();
  /// Throws ConfigError if the rows do not form a complete grid or are not
  /// monotone in EIRP.
  static IncidentPowerTable from_rows(std::vector<IncidentPowerRow> rows);
  /// CSV with header `eirp_dbm,depth_cm,pr_dbm`.
  static IncidentPowerTable load_csv(const std::filesystem::path& path);

  const std::vector<double>& eirps_dbm() const noexcept { return eirps_; }
  const std::vector<double>& depths_cm() const noexcept { return depths_; }
  std::vector<IncidentPowerRow> rows() const;
  /// Exact grid value; OutOfRangeError if (eirp, depth) is not a grid point.
  double cell(double eirp_dbm, double depth_cm) const;

 private:
  std::vector<double> eirps_;
  std::vector<double> depths_;
  std::vector<double> pr_;  // row-major [depth][eirp]

  double at(std::size_t depth_idx, std::size_t eirp_idx) const { return pr_[depth_idx * eirps_.size() + eirp_idx]; }
  friend double incident_power(double, double, const IncidentPowerTable&);
};

/// Bilinear in (dBm, cm) between grid points; OutOfRangeError outside the grid.
double incident_power(double eirp_dbm, double depth_cm, const IncidentPowerTable& table);

// ---------------------------------------------------------------- attenuation

enum class Moisture { dry, wet };

struct AttenuationModel {
  double alpha_dry_db_per_cm = 2.2;
  double alpha_wet_db_per_cm = 3.0;
  /// Fixed loss at the air/concrete boundary.
  double interface_loss_db = 11.0;
  double tx_gain_dbi = 0.0;
  double rx_gain_dbi = 0.0;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
};

double propagation_loss(double depth_cm, Moisture moisture, const AttenuationModel& m = {});
/// EIRP + rx antenna gain - propagation loss.
double analytic_incident_power(double eirp_dbm, double depth_cm, Moisture moisture, const AttenuationModel& m = {});

/// Relative permittivity from the downward shift of an antenna resonance
/// when embedded (non-magnetic medium): (f_air / f_embedded)^2.
double permittivity_from_shift(double f_air_hz, double f_embedded_hz);
/// Resonance in a medium of relative permittivity er: f_air / sqrt(er).
double resonant_shift(double f_air_hz, double er);

// ---------------------------------------------------------------- signal path

/// Scales amplitudes by 10^(gain_db/20); result is analog.
chirp::Waveform apply_gain(const chirp::Waveform& w, double gain_db);

struct NoiseModel {
  /// One-sided noise density N0 (W/Hz). Real baseband samples at rate fs get
  /// variance N0*fs/2, i.e. N0 over the [0, fs/2) band.
  double n0_w_per_hz = 0;
  std::uint64_t seed = 0;
};

double noise_variance(double n0_w_per_hz, double fs_hz);
chirp::Waveform add_awgn(const chirp::Waveform& w, const NoiseModel& n);
/// In-place variant for callers that manage their own generator.
template <typename Engine>
void add_awgn_inplace(std::span<double> samples, double sigma, Engine& rng);

// ---------------------------------------------------------------- W bursts

struct WBurstModel {
  double mean_interval_s = 0.5;
  double duration_s = 0.003;
  /// Peak burst amplitude relative to the AC RMS of the clean signal.
  double amplitude_scale = 30.0;
  std::uint64_t seed = 0;
  /// Burst envelope sampled at equally spaced points over duration_s and
  /// linearly interpolated between them.
  std::vector<double> envelope{1.0, -1.0, 1.0, -1.0, 1.0};

  void validate() const;
};

struct Burst {
  double start_s = 0;
  double duration_s = 0;
};

/// Poisson arrivals (rate 1/mean_interval_s) of every burst that overlaps
/// [0, span_s), in start order. Deterministic in the model's seed.
std::vector<Burst> generate_burst_log(double span_s, const WBurstModel& m);

/// Envelope value at fraction u in [0, 1] of a burst.
double burst_envelope(double u, std::span<const double> envelope);

/// Adds every burst in `log` to samples that start at time t0_s, with the
/// envelope scaled to `peak_amplitude`.
void apply_bursts(std::span<double> samples, double fs_hz, double t0_s, std::span<const Burst> log,
                  std::span<const double> envelope, double peak_amplitude);

/// RMS of the samples after removing their mean.
double ac_rms(std::span<const double> samples);

struct BurstInjection {
  chirp::Waveform waveform;
  std::vector<Burst> log;
};

/// Draws bursts over the waveform's span and adds them, scaled by
/// amplitude_scale times the waveform's AC RMS.
BurstInjection inject_w_bursts(const chirp::Waveform& w, const WBurstModel& m);

/// Closed-form symbol error rate from bursts alone: every burst spoils
/// ceil(Dw/Ds) symbols and bursts come every Tw on average, so
/// Es = ceil(Dw/Ds) * Ds / Tw, capped at 1.
double interference_symbol_error_rate(double ds_s, const WBurstModel& m);

// ---------------------------------------------------------------- template impl

template <typename Engine>
void add_awgn_inplace(std::span<double> samples, double sigma, Engine& rng) {
  if (sigma <= 0) return;
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& v : samples) v += gauss(rng);
}

}  // namespace rfsn::channel
