#pragma once

// Experiment configuration: a flat `key = value` file with dotted section
// names. Lines starting with '#' are comments. Every key has a default, so an
// empty file is a valid configuration for the non-sweep commands.
//
//   scenario = ber_vs_eirp
//   seed = 1
//   chirp.sf = 7
//   chirp.bw_hz = 4096
//   sweep.axis = eirp_dbm
//   sweep.values = 22.1, 22.5, 23, 24
//
// serialize() writes every key, so parse(serialize(c)) == c.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rfsn/channel.hpp"
#include "rfsn/chirpmod.hpp"
#include "rfsn/powersim.hpp"

namespace rfsn::harness {

enum class WaveformChoice { quantized, ideal, linear };
enum class SweepAxis { eirp_dbm, depth_cm, bw_hz, pr_dbm, snr_db };

std::string to_string(WaveformChoice w);
std::string to_string(SweepAxis a);

struct ChirpSection {
  int sf = 7;
  double bw_hz = 4096;
  /// 0 means 8 * bw (the widest bandwidth the clock allows).
  double fosc_hz = 0;
  double oversampling = chirp::kDefaultOversampling;
  WaveformChoice waveform = WaveformChoice::quantized;
  bool jitter = false;
};

struct ChannelSection {
  /// Incident-power table CSV; empty selects the built-in measured table.
  std::string table_path;
  double eirp_dbm = 23.6;
  double depth_cm = 13.5;
  /// Lumped gain from the incident-power budget to received signal power.
  double composite_gain_db = 0;
  /// When true, received power follows the backscatter round trip:
  /// Ps = 2*pr - eirp + gain (dBm). Otherwise Ps = pr + gain.
  bool round_trip = true;
  double n0_dbm_per_hz = -174;
  /// Share of square-chirp power the detector collects, for the SNR column.
  double detection_fraction = chirp::kDefaultDetectionFraction;
};

struct BurstSection {
  bool enabled = false;
  channel::WBurstModel model{.seed = 1};
};

struct PowerSection {
  /// Any of: passive, active_with_startup, active_without_startup.
  std::vector<std::string> variants{"passive", "active_with_startup", "active_without_startup"};
  double target_v = 1.8;
  double dt_s = 1e-3;
  double max_time_s = 3600;
  double passive_efficiency_scale = power::kPassiveEfficiencyScale;
  /// Optional curve overrides (x,y CSV); empty keeps the built-in curves.
  std::string efficiency_path;
  std::string leakage_with_path;
  std::string leakage_without_path;
  /// Active-node duty-cycle trace (charge-sweep --trace).
  double fsm_pr_dbm = 2.0;
  double fsm_duration_s = 30;
  bool harvest_during_tx = true;
};

struct MonteCarloSection {
  std::uint64_t trials = 1;
  std::uint64_t symbols_per_trial = 2500;
  /// When positive, each trial instead lasts this long (whole symbols), so
  /// rows with different symbol durations see the same stretch of time.
  double trial_duration_s = 0;
  unsigned threads = 0;
};

struct SweepSection {
  SweepAxis axis = SweepAxis::eirp_dbm;
  std::vector<double> values;
};

struct CalibrationSection {
  std::optional<double> anchor_eirp_dbm;
  std::optional<double> anchor_ber;
  double gain_lo_db = -160;
  double gain_hi_db = 0;
  std::uint64_t symbols = 20000;
};

struct ExperimentConfig {
  std::string scenario = "default";
  std::uint64_t seed = 1;
  ChirpSection chirp;
  ChannelSection channel;
  BurstSection bursts;
  PowerSection power;
  MonteCarloSection mc;
  SweepSection sweep;
  CalibrationSection calibration;

  /// Directory relative paths are resolved against; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& p) const;
  /// Compares serialized forms.
  bool operator==(const ExperimentConfig& other) const;
};

/// Throws ConfigError listing every malformed line and unknown key.
ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize(const ExperimentConfig& c);

/// Every problem with the configuration (empty if valid). Sweep commands
/// additionally need a non-empty sweep axis.
std::vector<std::string> validation_problems(const ExperimentConfig& c, bool need_sweep);
void validate(const ExperimentConfig& c, bool need_sweep);

}  // namespace rfsn::harness
