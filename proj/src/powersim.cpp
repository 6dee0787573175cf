#include "rfsn/powersim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rfsn/channel.hpp"
#include "rfsn/detail/csv.hpp"
#include "rfsn/error.hpp"
#include "rfsn/waveform_io.hpp"

namespace rfsn::power {

// ---------------------------------------------------------------- capacitor

Capacitor::Capacitor(double capacitance_f, double v) : c_(capacitance_f), v_(v) {
  if (!(capacitance_f > 0) || !std::isfinite(capacitance_f)) throw ConfigError("capacitance must be positive");
  if (!(v >= 0) || !std::isfinite(v)) throw ConfigError("capacitor voltage must be non-negative");
}

void Capacitor::set_energy(double e_j) {
  if (!(e_j >= 0)) throw DomainError("capacitor energy must be non-negative");
  v_ = std::sqrt(2.0 * e_j / c_);
}

Capacitor step_capacitor(Capacitor c, double p_in_w, double p_out_w, double dt_s) {
  if (!(dt_s > 0)) throw DomainError("time step must be positive");
  c.set_energy(std::max(0.0, c.energy_j() + (p_in_w - p_out_w) * dt_s));
  return c;
}

// ---------------------------------------------------------------- curves

PiecewiseLinear::PiecewiseLinear(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
  if (points_.empty()) throw ConfigError("curve has no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].first) || !std::isfinite(points_[i].second)) {
      throw ConfigError("curve contains a non-finite point");
    }
    if (i > 0 && !(points_[i].first > points_[i - 1].first)) throw ConfigError("curve x values must strictly increase");
  }
}

double PiecewiseLinear::operator()(double x) const {
  if (points_.empty()) throw DomainError("evaluating an empty curve");
  if (x <= points_.front().first) return points_.front().second;
  if (x >= points_.back().first) return points_.back().second;
  const auto hi = std::upper_bound(points_.begin(), points_.end(), x,
                                   [](double v, const auto& p) { return v < p.first; });
  const auto lo = hi - 1;
  const double f = (x - lo->first) / (hi->first - lo->first);
  return lo->second + f * (hi->second - lo->second);
}

double HarvesterModel::eta(double pr_dbm) const { return std::clamp(efficiency_scale * efficiency(pr_dbm), 0.0, 1.0); }

void HarvesterModel::validate() const {
  std::vector<std::string> problems;
  if (efficiency.points().empty()) {
    problems.emplace_back("harvester efficiency curve is empty");
  } else {
    const auto& pts = efficiency.points();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double e = efficiency_scale * pts[i].second;
      if (e < 0 || e > 1) problems.emplace_back("harvester efficiency leaves [0, 1]");
      if (i > 0 && pts[i].second < pts[i - 1].second) problems.emplace_back("harvester efficiency must not fall with power");
    }
  }
  if (!std::isfinite(sensitivity_dbm)) problems.emplace_back("harvester sensitivity must be finite");
  if (!(efficiency_scale >= 0)) problems.emplace_back("efficiency scale must be non-negative");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

PiecewiseLinear default_efficiency_curve() { return PiecewiseLinear({{-10.0, 0.25}, {0.0, 0.50}, {5.0, 0.60}, {10.0, 0.62}}); }

HarvesterModel active_harvester() { return HarvesterModel{-2.5, default_efficiency_curve(), 1.0}; }

HarvesterModel passive_harvester(double efficiency_scale) {
  return HarvesterModel{-8.5, default_efficiency_curve(), efficiency_scale};
}

HarvesterModel passive_harvester() { return passive_harvester(kPassiveEfficiencyScale); }

double harvested_power(double pr_dbm, const HarvesterModel& h) {
  if (std::isnan(pr_dbm)) throw DomainError("incident power is NaN");
  if (pr_dbm < h.sensitivity_dbm) return 0.0;
  return h.eta(pr_dbm) * channel::dbm_to_watts(pr_dbm);
}

std::string to_string(LeakageVariant v) {
  switch (v) {
    case LeakageVariant::with_startup_circuit: return "with_startup";
    case LeakageVariant::without_startup_circuit: return "without_startup";
    case LeakageVariant::passive_node: return "passive";
  }
  return "unknown";
}

LeakageCurve::LeakageCurve(std::vector<std::pair<double, double>> points, LeakageVariant variant)
    : points_(std::move(points)), variant_(variant) {
  if (points_.empty()) throw ConfigError("leakage curve has no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i].first > 0) || !(points_[i].second >= 0)) {
      throw ConfigError("leakage points need positive voltage and non-negative power");
    }
    if (i > 0 && !(points_[i].first > points_[i - 1].first)) throw ConfigError("leakage voltages must strictly increase");
  }
}

double LeakageCurve::operator()(double v) const {
  if (v <= 0) return 0.0;
  const auto& first = points_.front();
  if (v < first.first) return first.second * v / first.first;
  if (v >= points_.back().first) return points_.back().second;
  const auto hi = std::upper_bound(points_.begin(), points_.end(), v,
                                   [](double x, const auto& p) { return x < p.first; });
  const auto lo = hi - 1;
  const double f = (v - lo->first) / (hi->first - lo->first);
  if (lo->second <= 0 || hi->second <= 0) return lo->second + f * (hi->second - lo->second);
  return lo->second * std::pow(hi->second / lo->second, f);
}

double LeakageCurve::max_up_to(double v_max) const {
  // Each segment is monotone, so the maximum sits at a point or at v_max.
  double m = (*this)(v_max);
  for (const auto& [v, p] : points_) {
    if (v <= v_max) m = std::max(m, p);
  }
  return m;
}

LeakageCurve leakage_with_startup() {
  return LeakageCurve({{0.6, 3.1e-6}, {1.8, 61e-6}, {3.3, 61e-6}}, LeakageVariant::with_startup_circuit);
}

LeakageCurve leakage_without_startup() {
  return LeakageCurve({{0.6, 3.1e-6}, {1.8, 2.1e-3}}, LeakageVariant::without_startup_circuit);
}

LeakageCurve leakage_passive(const HarvesterModel& h) {
  const double iq = harvested_power(h.sensitivity_dbm, h) / kMcuMinVoltage;
  std::vector<std::pair<double, double>> pts;
  for (double v : {0.2, 0.6, 1.0, 1.4, 1.8, 3.3}) pts.emplace_back(v, v * iq);
  return LeakageCurve(std::move(pts), LeakageVariant::passive_node);
}

LeakageCurve load_leakage_csv(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  LeakageVariant variant;
  if (name.find("without_startup") != std::string::npos) {
    variant = LeakageVariant::without_startup_circuit;
  } else if (name.find("with_startup") != std::string::npos) {
    variant = LeakageVariant::with_startup_circuit;
  } else if (name.find("passive") != std::string::npos) {
    variant = LeakageVariant::passive_node;
  } else {
    throw ConfigError("cannot tell the leakage variant from file name " + name);
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : detail::read_numeric_csv(path, {"x", "y"})) pts.emplace_back(r[0], r[1]);
  return LeakageCurve(std::move(pts), variant);
}

PiecewiseLinear load_efficiency_csv(const std::filesystem::path& path) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : detail::read_numeric_csv(path, {"x", "y"})) pts.emplace_back(r[0], r[1]);
  return PiecewiseLinear(std::move(pts));
}

void write_curve_csv(std::ostream& os, const std::vector<std::pair<double, double>>& points) {
  os << "x,y\n";
  for (const auto& [x, y] : points) os << io::format_double(x) << ',' << io::format_double(y) << '\n';
}

// ---------------------------------------------------------------- charging

std::optional<double> time_to_voltage(const Capacitor& c, double target_v, double pr_dbm, const HarvesterModel& h,
                                      const LeakageCurve& leak, const ChargeOptions& opts) {
  if (!(target_v > c.v())) throw DomainError("target voltage must exceed the current voltage");
  if (!(opts.dt_s > 0) || opts.dt_s > 1e-3 * (1 + 1e-12)) throw DomainError("time step must lie in (0, 1 ms]");
  const double p_in = harvested_power(pr_dbm, h);
  if (p_in <= 0) return std::nullopt;

  const double target_e = c.energy_at(target_v);
  double e = c.energy_j();
  double t = 0;
  while (t < opts.max_time_s) {
    const double net = p_in - leak(std::sqrt(2.0 * e / c.capacitance_f()));
    // Leakage only grows with voltage here, so a non-positive net is a stall.
    if (net <= 0) return std::nullopt;
    if (e + net * opts.dt_s >= target_e) return t + (target_e - e) / net;
    e += net * opts.dt_s;
    t += opts.dt_s;
  }
  return std::nullopt;
}

std::optional<double> min_startup_incident_power(const LeakageCurve& leak, const HarvesterModel& h,
                                                 double search_max_dbm) {
  const double need = leak.max_up_to(kMcuMinVoltage);
  auto ok = [&](double pr) { return harvested_power(pr, h) > need; };
  double lo = h.sensitivity_dbm;
  if (ok(lo)) return lo;
  double hi = search_max_dbm;
  if (!ok(hi)) return std::nullopt;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double fit_passive_efficiency_scale(double pr_dbm, double target_s, double dt_s) {
  auto charge_time = [&](double k) {
    const auto h = passive_harvester(k);
    const auto t = time_to_voltage(Capacitor(kPassiveCapacitanceF), kMcuMinVoltage, pr_dbm, h, leakage_passive(h),
                                   ChargeOptions{dt_s, 1e4});
    return t.value_or(std::numeric_limits<double>::infinity());
  };
  double lo = 1e-3;
  double hi = 1.0 / default_efficiency_curve()(100.0);
  if (charge_time(hi) > target_s || charge_time(lo) < target_s) {
    throw CalibrationError("charge-time target cannot be met by any efficiency scale");
  }
  // Harvest and leakage both scale with k, so charge time falls as 1/k.
  while (hi - lo > 1e-7) {
    const double mid = 0.5 * (lo + hi);
    (charge_time(mid) > target_s ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------- active node

void ActiveNodeFSM::validate() const {
  std::vector<std::string> problems;
  if (!(v_min > 0 && v_min < v_sleep && v_sleep < v_wake && v_wake < v_start)) {
    problems.emplace_back("thresholds must satisfy 0 < v_min < v_sleep < v_wake < v_start");
  }
  if (!(e_packet_j > 0) || !(e_boot_j > e_packet_j)) problems.emplace_back("need e_boot > e_packet > 0");
  if (msdu_bytes == 0) problems.emplace_back("MSDU must be at least one byte");
  if (!(tx_rate_bps > 0)) problems.emplace_back("transmit rate must be positive");
  if (!(mcu_overhead_s > 0)) problems.emplace_back("MCU overhead must be positive");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string to_string(EventKind e) {
  switch (e) {
    case EventKind::start: return "start";
    case EventKind::boot: return "boot";
    case EventKind::packet: return "packet";
    case EventKind::sleep: return "sleep";
    case EventKind::wake: return "wake";
    case EventKind::dead: return "dead";
    case EventKind::end: return "end";
  }
  return "unknown";
}

std::optional<double> SimTrace::first_packet_time_s() const {
  for (const auto& e : events) {
    if (e.kind == EventKind::packet) return e.t_s;
  }
  return std::nullopt;
}

namespace {

class FsmRun {
 public:
  FsmRun(const ActiveNodeFSM& fsm, Capacitor c, double p_in, const LeakageCurve& leak, double dt)
      : fsm_(fsm), c_(c), p_in_(p_in), leak_(leak), dt_(dt) {
    trace_.initial_energy_j = c_.energy_j();
  }

  SimTrace run(double duration_s) {
    record(EventKind::start);
    NodeState state = NodeState::cold;
    while (t_ < duration_s) {
      switch (state) {
        case NodeState::cold:
          if (!charge_until(fsm_.v_start, duration_s)) break;
          state = NodeState::booting;
          break;
        case NodeState::booting:
          record(EventKind::boot);
          spend(fsm_.e_boot_j, fsm_.mcu_overhead_s, true);
          state = c_.v() < fsm_.v_min ? NodeState::dead : NodeState::transmitting;
          break;
        case NodeState::transmitting:
          if (c_.energy_j() - fsm_.e_packet_j >= c_.energy_at(fsm_.v_sleep)) {
            spend(fsm_.e_packet_j, fsm_.packet_airtime_s(), fsm_.harvest_during_tx);
            ++trace_.packets_sent;
            trace_.bytes_sent += fsm_.msdu_bytes;
            record(EventKind::packet);
          } else {
            spend(0.0, fsm_.mcu_overhead_s, true);
            record(EventKind::sleep);
            state = NodeState::sleeping;
          }
          break;
        case NodeState::sleeping: {
          const auto reached = charge_until(fsm_.v_wake, duration_s);
          if (c_.v() < fsm_.v_min) {
            state = NodeState::dead;
          } else if (reached) {
            record(EventKind::wake);
            state = NodeState::transmitting;
          }
          break;
        }
        case NodeState::dead:
          record(EventKind::dead);
          state = NodeState::cold;
          break;
      }
    }
    trace_.final_energy_j = c_.energy_j();
    record(EventKind::end);
    return std::move(trace_);
  }

 private:
  const ActiveNodeFSM& fsm_;
  Capacitor c_;
  double p_in_;
  const LeakageCurve& leak_;
  double dt_;
  double t_ = 0;
  SimTrace trace_;

  void record(EventKind kind) {
    if (!trace_.events.empty() && !(t_ > trace_.events.back().t_s)) {
      // Zero-duration transitions (e.g. dead -> cold) still need distinct stamps.
      t_ = std::nextafter(trace_.events.back().t_s, std::numeric_limits<double>::infinity());
    }
    trace_.events.push_back({t_, kind, c_.v(), trace_.packets_sent, trace_.bytes_sent});
  }

  // Applies harvest and loss for `dt` seconds, keeping the energy books exact.
  void advance(double dt, double harvest_w, double leak_w, double lump_j = 0.0) {
    const double in = harvest_w * dt;
    const double before = c_.energy_j();
    const double after = std::max(0.0, before + in - leak_w * dt - lump_j);
    c_.set_energy(after);
    trace_.harvested_j += in;
    trace_.consumed_j += before + in - after;
    t_ += dt;
  }

  void spend(double energy_j, double duration_s, bool harvest) {
    advance(duration_s, harvest ? p_in_ : 0.0, 0.0, energy_j);
  }

  // Charges (with leakage) until v reaches `target` or time runs out; also
  // stops early if v sinks below v_min. Returns true when the target is hit.
  bool charge_until(double target, double duration_s) {
    const double target_e = c_.energy_at(target);
    const double floor_e = c_.energy_at(fsm_.v_min);
    const bool watch_floor = c_.energy_j() >= floor_e;
    while (t_ < duration_s) {
      const double leak = leak_(c_.v());
      const double net = p_in_ - leak;
      const double e = c_.energy_j();
      if (net > 0 && e + net * dt_ >= target_e) {
        advance((target_e - e) / net, p_in_, leak);
        c_.set_energy(target_e);
        return true;
      }
      advance(dt_, p_in_, leak);
      if (watch_floor && c_.energy_j() < floor_e) return false;
    }
    return false;
  }
};

}  // namespace

SimTrace run_active_fsm(const ActiveNodeFSM& fsm, Capacitor c, double pr_dbm, const HarvesterModel& h,
                        const LeakageCurve& leak, double duration_s, double dt_s) {
  fsm.validate();
  if (!(dt_s > 0) || dt_s > 1e-3 * (1 + 1e-12)) throw DomainError("time step must lie in (0, 1 ms]");
  if (!(duration_s > 0)) throw DomainError("duration must be positive");
  return FsmRun(fsm, c, harvested_power(pr_dbm, h), leak, dt_s).run(duration_s);
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << kTraceCsvHeader << '\n';
  for (const auto& e : trace.events) {
    os << io::format_double(e.t_s) << ',' << to_string(e.kind) << ',' << io::format_double(e.v) << ','
       << e.packets_cum << ',' << e.bytes_cum << '\n';
  }
}

// ---------------------------------------------------------------- passive node

double PassiveNodeModel::operating_power(double fosc_hz, double vdd_v) const {
  for (const auto& [key, p] : p_op) {
    if (std::abs(key.first - fosc_hz) <= 1e-9 * key.first && std::abs(key.second - vdd_v) <= 1e-9) return p;
  }
  throw ConfigError("no operating power for clock " + std::to_string(fosc_hz) + " Hz at " + std::to_string(vdd_v) + " V");
}

PassiveNodeModel default_passive_node() {
  PassiveNodeModel pm;
  const double clocks[] = {32768.0, 1e6, 2e6, 4e6};
  const double at_1v8[] = {9.3e-6, 392e-6, 418e-6, 470e-6};
  const double at_3v0[] = {26.3e-6, 850e-6, 934e-6, 1098e-6};
  for (std::size_t i = 0; i < 4; ++i) {
    pm.p_op[{clocks[i], 1.8}] = at_1v8[i];
    pm.p_op[{clocks[i], 3.0}] = at_3v0[i];
  }
  return pm;
}

SteadyState passive_steady_state(const PassiveNodeModel& pm, double fosc_hz, double vdd_v, double pr_dbm,
                                 const HarvesterModel& h) {
  SteadyState s;
  s.required_w = pm.operating_power(fosc_hz, vdd_v);
  s.harvested_w = harvested_power(pr_dbm, h);
  s.margin_w = s.harvested_w - s.required_w;
  s.sustainable = s.margin_w >= 0;
  return s;
}

}  // namespace rfsn::power
