#pragma once

// Experiment runner: wires modulator -> channel -> demodulator and the power
// simulator into sweeps whose rows carry both simulated and closed-form
// columns.
//
// Link model for BER sweeps. Incident power pr comes from the measured table
// (or the sweep axis). The received, mean-removed signal power is
//   Ps = 2*pr - eirp + composite_gain      (round trip, default)
//   Ps = pr + composite_gain               (channel.round_trip = false)
// in dBm. The composite gain lumps every unmodeled receive-chain term and is
// fitted once per scenario with calibrate_composite_gain. Noise is white with
// one-sided density N0. The closed-form SNR is detection_fraction*Ps/(bw*N0).
//
// Seeding. Row i of a sweep uses seed (base_seed + i); trial j of that row
// draws symbols, noise and toggle jitter from independent streams keyed by
// (row seed, j). Bursts come from bursts.seed and are laid over the row's
// whole time span, so every row sees the same burst arrivals.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rfsn/config.hpp"
#include "rfsn/rxdsp.hpp"

namespace rfsn::harness {

/// Chirp parameters for bandwidth `bw_hz` under the config's clock and
/// oversampling (clock defaults to 8 * bw).
chirp::ChirpParams chirp_params(const ExperimentConfig& c, double bw_hz);
chirp::ChirpParams chirp_params(const ExperimentConfig& c);

/// AC power of a unit-amplitude waveform of the configured kind.
double unit_signal_power(WaveformChoice w);
/// Detection fraction used for the closed-form SNR of the configured chain.
double detection_fraction(const ExperimentConfig& c);

struct Link {
  double eirp_dbm = 0;
  double depth_cm = 0;
  double pr_dbm = 0;
  double ps_dbm = 0;
  double n0_w_per_hz = 0;
  double snr_linear = 0;
};

/// Link for one sweep point. Fields that the axis bypasses are NaN.
Link link_for(const ExperimentConfig& c, SweepAxis axis, double value, const chirp::ChirpParams& p);

struct TrialPlan {
  std::uint64_t trials = 1;
  std::uint64_t symbols_per_trial = 1;
};

TrialPlan trial_plan(const ExperimentConfig& c, const chirp::ChirpParams& p);

/// Monte-Carlo BER of the configured chain at received power ps_w.
rx::BerResult simulate_ber(const ExperimentConfig& c, const chirp::ChirpParams& p, double ps_w, double n0_w_per_hz,
                           std::uint64_t row_seed, const TrialPlan& plan);

struct SweepRow {
  double axis_value = 0;
  Link link;
  double bw_hz = 0;
  double snr_db = 0;
  rx::BerResult result;
  double theory_pb = 0;
  double interference_es = 0;
  double runtime_s = 0;
};

/// Rows in ascending axis order.
std::vector<SweepRow> run_ber_sweep(const ExperimentConfig& c);

/// runtime_s is written only when `timing` is set, so default output is
/// byte-identical across runs.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, SweepAxis axis, bool timing = false);
std::string sweep_json(const std::vector<SweepRow>& rows, SweepAxis axis, bool timing = false);

struct ChargeRow {
  double pr_dbm = 0;
  std::string variant;
  std::optional<double> t_s;  ///< nullopt: never reaches the target
};

std::vector<ChargeRow> run_charge_sweep(const ExperimentConfig& c);
void write_charge_csv(std::ostream& os, const std::vector<ChargeRow>& rows);
std::string charge_json(const std::vector<ChargeRow>& rows);

/// Active-node duty-cycle trace at power.fsm_pr_dbm.
power::SimTrace run_fsm_trace(const ExperimentConfig& c);

struct ClockRow {
  double fosc_hz = 0;
  double bw_hz = 0;
  double ds_s = 0;
  double rd_bps = 0;
  std::string bw_display;
  std::string ds_display;
  std::string rd_display;
  double es = 0;
};

struct SnrRow {
  double snr_db = 0;
  double pb = 0;
  double es = 0;
  double rd_bps = 0;
};

struct TheoryReport {
  std::vector<ClockRow> clocks;
  std::vector<SnrRow> snr;
};

/// Clock rows for 32.768 kHz, 1, 2 and 4 MHz at the configured sf; SNR rows
/// for sweep.values when the axis is snr_db, else -30..0 dB in 1 dB steps.
TheoryReport run_theory_report(const ExperimentConfig& c);
void write_clock_csv(std::ostream& os, const std::vector<ClockRow>& rows);
void write_snr_csv(std::ostream& os, const std::vector<SnrRow>& rows);
std::string theory_json(const TheoryReport& r);

/// Display precision of the published clock table: kHz with one decimal below
/// 10 kHz, whole kHz above.
std::string display_bandwidth(double bw_hz);
/// Whole bps below 1 kbps, else kbps with one decimal.
std::string display_rate(double rd_bps);
/// Whole ms from 10 ms up, else two decimals.
std::string display_duration(double ds_s);
/// Symbol duration as tabulated: sf over the displayed (rounded) data rate.
double tabulated_duration(int sf, double rd_bps);

struct CalibrationResult {
  double gain_db = 0;
  rx::BerResult at_gain;
  int iterations = 0;
};

/// Bisects the composite gain until the simulated BER at anchor_eirp_dbm is
/// within its Wilson interval of anchor_ber (or the bracket shrinks below
/// 0.01 dB). Noise and symbols are fixed across iterations.
CalibrationResult calibrate_composite_gain(const ExperimentConfig& c, double anchor_eirp_dbm, double anchor_ber);

}  // namespace rfsn::harness
