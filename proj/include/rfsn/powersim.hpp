#pragma once

// Energy life of an embedded node: RF harvesting into a storage capacitor,
// voltage-dependent leakage, the active node's startup/wake/sleep cycle and
// the passive node's steady-state budget.
//
// Energies are drawn straight from the capacitor; regulator losses are not
// modeled. Integration is explicit Euler with a fixed step, except that a
// step which would cross a threshold is shortened to land on it exactly.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rfsn::power {

// ---------------------------------------------------------------- capacitor

class Capacitor {
 public:
  /// Throws ConfigError unless capacitance > 0 and v >= 0.
  Capacitor(double capacitance_f, double v = 0.0);

  double capacitance_f() const noexcept { return c_; }
  double v() const noexcept { return v_; }
  /// 1/2 C v^2.
  double energy_j() const noexcept { return 0.5 * c_ * v_ * v_; }
  double energy_at(double v) const noexcept { return 0.5 * c_ * v * v; }

  void set_energy(double e_j);

 private:
  double c_;
  double v_;
};

inline constexpr double kActiveCapacitanceF = 1e-3;
inline constexpr double kPassiveCapacitanceF = 22e-6;
/// Supply voltage at which the MCU can run; the charge-time target.
inline constexpr double kMcuMinVoltage = 1.8;

/// Net energy (p_in - p_out) * dt added to the capacitor, floored at empty.
Capacitor step_capacitor(Capacitor c, double p_in_w, double p_out_w, double dt_s);

// ---------------------------------------------------------------- curves

/// Piecewise-linear y(x) through points with strictly increasing x; clamps
/// to the end values outside the domain.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> points);

  double operator()(double x) const;
  const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }
  double min_x() const { return points_.front().first; }
  double max_x() const { return points_.back().first; }

 private:
  std::vector<std::pair<double, double>> points_;
};

struct HarvesterModel {
  /// Below this incident power nothing is harvested.
  double sensitivity_dbm = -2.5;
  /// Conversion efficiency vs incident power (dBm).
  PiecewiseLinear efficiency;
  /// Multiplier applied to the curve (fitted per harvester).
  double efficiency_scale = 1.0;

  double eta(double pr_dbm) const;
  /// Throws ConfigError if the curve is empty, not monotone non-decreasing,
  /// or leaves [0, 1] after scaling.
  void validate() const;
};

/// Default efficiency points: 25% at -10 dBm, 50% at 0, 60% at 5, 62% at 10.
PiecewiseLinear default_efficiency_curve();
/// Harvester of the active node: sensitivity -2.5 dBm, unscaled default curve.
HarvesterModel active_harvester();
/// Harvester of the passive node: sensitivity -8.5 dBm, default curve scaled
/// by kPassiveEfficiencyScale.
HarvesterModel passive_harvester(double efficiency_scale);
HarvesterModel passive_harvester();

/// Scale that makes the passive node charge 22 uF to 1.8 V in 0.9 s at
/// -2.3 dBm (see fit_passive_efficiency_scale).
inline constexpr double kPassiveEfficiencyScale = 0.16966;

/// W harvested at incident power pr_dbm.
double harvested_power(double pr_dbm, const HarvesterModel& h);

enum class LeakageVariant { with_startup_circuit, without_startup_circuit, passive_node };

std::string to_string(LeakageVariant v);

/// Leakage power vs capacitor voltage. Log-linear between points, linear to
/// zero below the first point, flat above the last.
class LeakageCurve {
 public:
  LeakageCurve(std::vector<std::pair<double, double>> points, LeakageVariant variant);

  double operator()(double v) const;
  /// Largest leakage over [0, v_max].
  double max_up_to(double v_max) const;
  LeakageVariant variant() const noexcept { return variant_; }
  const std::vector<std::pair<double, double>>& points() const noexcept { return points_; }

 private:
  std::vector<std::pair<double, double>> points_;
  LeakageVariant variant_;
};

/// (0.6 V, 3.1 uW), (1.8 V, 61 uW), flat to 3.3 V.
LeakageCurve leakage_with_startup();
/// (0.6 V, 3.1 uW), (1.8 V, 2.1 mW).
LeakageCurve leakage_without_startup();
/// Constant-current quiescent draw of the passive node, sized so leakage at
/// 1.8 V equals what the harvester delivers at its sensitivity.
LeakageCurve leakage_passive(const HarvesterModel& h);

/// `x,y` CSV; the variant is taken from the file name (`with_startup`,
/// `without_startup` or `passive` must appear in it).
LeakageCurve load_leakage_csv(const std::filesystem::path& path);
/// `x,y` CSV of incident dBm vs efficiency.
PiecewiseLinear load_efficiency_csv(const std::filesystem::path& path);
void write_curve_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points);

// ---------------------------------------------------------------- charging

struct ChargeOptions {
  double dt_s = 1e-3;
  /// Give up (return nullopt) past this simulated time.
  double max_time_s = 3600.0;
};

/// Seconds to charge from c.v() to target_v, or nullopt if leakage stalls
/// the capacitor first (net power <= 0 at some voltage below target).
std::optional<double> time_to_voltage(const Capacitor& c, double target_v, double pr_dbm, const HarvesterModel& h,
                                      const LeakageCurve& leak, const ChargeOptions& opts = {});

/// Smallest incident power (>= sensitivity) whose harvest exceeds the largest
/// leakage below 1.8 V; nullopt if no power up to `search_max_dbm` suffices.
std::optional<double> min_startup_incident_power(const LeakageCurve& leak, const HarvesterModel& h,
                                                 double search_max_dbm = 40.0);

/// Bisects the passive efficiency scale so the passive node charges 22 uF to
/// 1.8 V in `target_s` at `pr_dbm`.
double fit_passive_efficiency_scale(double pr_dbm = -2.3, double target_s = 0.9, double dt_s = 1e-4);

// ---------------------------------------------------------------- active node

enum class NodeState { cold, booting, transmitting, sleeping, dead };

struct ActiveNodeFSM {
  double v_start = 3.2;
  double v_wake = 2.6;
  double v_sleep = 2.3;
  double v_min = 1.8;
  double e_boot_j = 1.68e-3;
  double e_packet_j = 177e-6;
  std::uint32_t msdu_bytes = 105;
  /// Radio data rate, used only for packet airtime.
  double tx_rate_bps = 1e6;
  /// MCU time per boot and per sleep decision, so every event has its own timestamp.
  double mcu_overhead_s = 1e-4;
  /// Whether the harvester keeps charging while a packet is on the air.
  bool harvest_during_tx = true;

  void validate() const;
  double packet_airtime_s() const { return msdu_bytes * 8.0 / tx_rate_bps; }
};

enum class EventKind { start, boot, packet, sleep, wake, dead, end };

std::string to_string(EventKind e);

struct TraceEvent {
  double t_s = 0;
  EventKind kind = EventKind::start;
  double v = 0;
  std::uint64_t packets_cum = 0;
  std::uint64_t bytes_cum = 0;
};

struct SimTrace {
  std::vector<TraceEvent> events;
  std::uint64_t packets_sent = 0;
  std::uint64_t bytes_sent = 0;
  double initial_energy_j = 0;
  double harvested_j = 0;
  double consumed_j = 0;  ///< leakage + boot + packets
  double final_energy_j = 0;

  /// initial + harvested - consumed - final.
  double energy_imbalance_j() const { return initial_energy_j + harvested_j - consumed_j - final_energy_j; }
  std::optional<double> first_packet_time_s() const;
};

SimTrace run_active_fsm(const ActiveNodeFSM& fsm, Capacitor c, double pr_dbm, const HarvesterModel& h,
                        const LeakageCurve& leak, double duration_s, double dt_s = 1e-3);

inline constexpr const char* kTraceCsvHeader = "t_s,event,v,packets_cum,bytes_cum";
void write_trace_csv(std::ostream& os, const SimTrace& trace);

// ---------------------------------------------------------------- passive node

/// Nominal operating power of the passive node; the per-clock table is the default.
inline constexpr double kNominalPassiveOperatingPowerW = 8.1e-6;

struct PassiveNodeModel {
  /// (fosc_hz, vdd_v) -> operating power (W).
  std::map<std::pair<double, double>, double> p_op;
  double p_sleep_w = 36e-9;

  /// Throws ConfigError for an unknown (clock, voltage) key.
  double operating_power(double fosc_hz, double vdd_v) const;
};

/// Table values for 32.768 kHz, 1, 2 and 4 MHz at 1.8 V and 3.0 V.
PassiveNodeModel default_passive_node();

struct SteadyState {
  bool sustainable = false;
  double margin_w = 0;  ///< harvested - required
  double harvested_w = 0;
  double required_w = 0;
};

SteadyState passive_steady_state(const PassiveNodeModel& pm, double fosc_hz, double vdd_v, double pr_dbm,
                                 const HarvesterModel& h);

}  // namespace rfsn::power
