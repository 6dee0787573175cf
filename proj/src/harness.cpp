#include "rfsn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "json.hpp"
#include "rfsn/channel.hpp"
#include "rfsn/error.hpp"
#include "rfsn/powersim.hpp"
#include "rfsn/rng.hpp"
#include "rfsn/waveform_io.hpp"

namespace rfsn::harness {

using io::format_double;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Empty cell for quantities the axis bypasses.
std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

json json_number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

channel::IncidentPowerTable table_for(const ExperimentConfig& c) {
  return c.channel.table_path.empty() ? channel::IncidentPowerTable::measured()
                                      : channel::IncidentPowerTable::load_csv(c.resolve(c.channel.table_path));
}

double received_power_dbm(const ExperimentConfig& c, double pr_dbm, double eirp_dbm) {
  const double base = c.channel.round_trip ? 2.0 * pr_dbm - eirp_dbm : pr_dbm;
  return base + c.channel.composite_gain_db;
}

chirp::Waveform synthesize(const ExperimentConfig& c, std::span<const chirp::Symbol> symbols,
                           const chirp::ChirpParams& p, std::uint64_t jitter_seed) {
  switch (c.chirp.waveform) {
    case WaveformChoice::linear: return chirp::modulate_linear(symbols, p);
    case WaveformChoice::ideal: return chirp::modulate_ideal(symbols, p);
    case WaveformChoice::quantized: break;
  }
  return chirp::modulate_quantized(symbols, p, {c.chirp.jitter, jitter_seed});
}

unsigned worker_count(unsigned configured, std::uint64_t jobs) {
  unsigned n = configured ? configured : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(n, std::max<std::uint64_t>(jobs, 1)));
}

}  // namespace

chirp::ChirpParams chirp_params(const ExperimentConfig& c, double bw_hz) {
  const double fosc = c.chirp.fosc_hz > 0 ? c.chirp.fosc_hz : chirp::kClocksPerPeriod * bw_hz;
  return chirp::ChirpParams::make(c.chirp.sf, bw_hz, fosc, c.chirp.oversampling * bw_hz);
}

chirp::ChirpParams chirp_params(const ExperimentConfig& c) { return chirp_params(c, c.chirp.bw_hz); }

double unit_signal_power(WaveformChoice w) {
  // A 0/1 envelope at 50% duty has AC power 1/4; a unit cosine has 1/2.
  return w == WaveformChoice::linear ? 0.5 : 0.25;
}

double detection_fraction(const ExperimentConfig& c) {
  return c.chirp.waveform == WaveformChoice::linear ? 1.0 : c.channel.detection_fraction;
}

Link link_for(const ExperimentConfig& c, SweepAxis axis, double value, const chirp::ChirpParams& p) {
  Link l;
  l.n0_w_per_hz = channel::dbm_to_watts(c.channel.n0_dbm_per_hz);
  l.eirp_dbm = c.channel.eirp_dbm;
  l.depth_cm = c.channel.depth_cm;
  const double frac = detection_fraction(c);
  switch (axis) {
    case SweepAxis::snr_db:
      l.eirp_dbm = l.depth_cm = l.pr_dbm = kNaN;
      l.snr_linear = std::pow(10.0, value / 10.0);
      l.ps_dbm = channel::watts_to_dbm(l.snr_linear * p.bw_hz() * l.n0_w_per_hz / frac);
      return l;
    case SweepAxis::pr_dbm:
      l.depth_cm = kNaN;
      l.pr_dbm = value;
      break;
    case SweepAxis::eirp_dbm:
      l.eirp_dbm = value;
      l.pr_dbm = channel::incident_power(l.eirp_dbm, l.depth_cm, table_for(c));
      break;
    case SweepAxis::depth_cm:
      l.depth_cm = value;
      l.pr_dbm = channel::incident_power(l.eirp_dbm, l.depth_cm, table_for(c));
      break;
    case SweepAxis::bw_hz:
      l.pr_dbm = channel::incident_power(l.eirp_dbm, l.depth_cm, table_for(c));
      break;
  }
  l.ps_dbm = received_power_dbm(c, l.pr_dbm, l.eirp_dbm);
  l.snr_linear = rx::effective_snr(channel::dbm_to_watts(l.ps_dbm), p.bw_hz(), l.n0_w_per_hz, frac);
  return l;
}

TrialPlan trial_plan(const ExperimentConfig& c, const chirp::ChirpParams& p) {
  TrialPlan plan;
  plan.trials = c.mc.trials;
  if (c.mc.trial_duration_s > 0) {
    plan.symbols_per_trial =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(c.mc.trial_duration_s / p.symbol_duration_s() + 1e-9)));
  } else {
    plan.symbols_per_trial = c.mc.symbols_per_trial;
  }
  return plan;
}

rx::BerResult simulate_ber(const ExperimentConfig& c, const chirp::ChirpParams& p, double ps_w, double n0_w_per_hz,
                           std::uint64_t row_seed, const TrialPlan& plan) {
  if (plan.trials == 0 || plan.symbols_per_trial == 0) throw ConfigError("empty trial plan");
  const double amplitude = std::sqrt(ps_w / unit_signal_power(c.chirp.waveform));
  const double sigma = std::sqrt(channel::noise_variance(n0_w_per_hz, p.fs_hz()));
  const double trial_span_s = static_cast<double>(plan.symbols_per_trial) * p.symbol_duration_s();

  std::vector<channel::Burst> bursts;
  if (c.bursts.enabled) {
    bursts = channel::generate_burst_log(trial_span_s * static_cast<double>(plan.trials), c.bursts.model);
  }
  const double burst_peak = c.bursts.model.amplitude_scale * std::sqrt(ps_w);

  std::vector<rx::BerResult> per_trial(plan.trials);
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    try {
      rx::Demodulator demod(p);
      const std::size_t m = p.samples_per_symbol();
      std::vector<chirp::Symbol> tx(plan.symbols_per_trial);
      std::vector<chirp::Symbol> detected(plan.symbols_per_trial);
      for (std::uint64_t j = next++; j < plan.trials; j = next++) {
        Engine sym_rng = make_engine(row_seed, stream::symbols, j);
        std::uniform_int_distribution<std::uint32_t> pick(0, p.chips() - 1);
        for (auto& s : tx) s.value = pick(sym_rng);

        chirp::Waveform w = synthesize(c, tx, p, mix_seed(mix_seed(row_seed ^ stream::jitter) ^ j));
        for (auto& v : w.samples) v *= amplitude;
        if (!bursts.empty()) {
          channel::apply_bursts(w.samples, p.fs_hz(), static_cast<double>(j) * trial_span_s, bursts,
                                c.bursts.model.envelope, burst_peak);
        }
        Engine noise_rng = make_engine(row_seed, stream::noise, j);
        channel::add_awgn_inplace(w.samples, sigma, noise_rng);

        const std::span<const double> samples(w.samples);
        for (std::size_t i = 0; i < tx.size(); ++i) detected[i] = demod.detect(samples.subspan(i * m, m));
        per_trial[j] = rx::score(tx, detected, p.sf());
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  const unsigned n_workers = worker_count(c.mc.threads, plan.trials);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  rx::BerResult total;
  total.sf = p.sf();
  for (const auto& r : per_trial) total += r;
  return total;
}

std::vector<SweepRow> run_ber_sweep(const ExperimentConfig& c) {
  validate(c, true);
  std::vector<double> values = c.sweep.values;
  std::sort(values.begin(), values.end());

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    SweepRow row;
    row.axis_value = values[i];
    const auto p = c.sweep.axis == SweepAxis::bw_hz ? chirp_params(c, values[i]) : chirp_params(c);
    row.link = link_for(c, c.sweep.axis, values[i], p);
    row.bw_hz = p.bw_hz();
    row.snr_db = 10.0 * std::log10(row.link.snr_linear);
    row.result = simulate_ber(c, p, channel::dbm_to_watts(row.link.ps_dbm), row.link.n0_w_per_hz, c.seed + i,
                              trial_plan(c, p));
    row.theory_pb = rx::ber_theory(row.link.snr_linear, p.sf());
    row.interference_es = channel::interference_symbol_error_rate(p.symbol_duration_s(), c.bursts.model);
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, SweepAxis axis, bool timing) {
  os << to_string(axis)
     << ",eirp_dbm,depth_cm,pr_dbm,ps_dbm,bw_hz,snr_db,sf,n_symbols,n_bits,n_bit_errors,ser,ber,wilson95,ber_low,"
        "ber_high,theory_pb,interference_es";
  if (timing) os << ",runtime_s";
  os << '\n';
  for (const auto& r : rows) {
    const auto ci = r.result.ber_interval();
    os << format_double(r.axis_value) << ',' << cell(r.link.eirp_dbm) << ',' << cell(r.link.depth_cm) << ','
       << cell(r.link.pr_dbm) << ',' << cell(r.link.ps_dbm) << ',' << format_double(r.bw_hz) << ','
       << format_double(r.snr_db) << ',' << r.result.sf << ',' << r.result.n_symbols << ',' << r.result.n_bits << ','
       << r.result.n_bit_errors << ',' << format_double(r.result.ser()) << ',' << format_double(r.result.ber()) << ','
       << format_double(ci.halfwidth) << ',' << format_double(ci.low) << ',' << format_double(ci.high) << ','
       << format_double(r.theory_pb) << ',' << format_double(r.interference_es);
    if (timing) os << ',' << format_double(r.runtime_s);
    os << '\n';
  }
}

std::string sweep_json(const std::vector<SweepRow>& rows, SweepAxis axis, bool timing) {
  json out = json::array();
  for (const auto& r : rows) {
    const auto ci = r.result.ber_interval();
    json j = {{"axis", to_string(axis)},
              {"value", r.axis_value},
              {"eirp_dbm", json_number(r.link.eirp_dbm)},
              {"depth_cm", json_number(r.link.depth_cm)},
              {"pr_dbm", json_number(r.link.pr_dbm)},
              {"ps_dbm", json_number(r.link.ps_dbm)},
              {"bw_hz", r.bw_hz},
              {"snr_db", r.snr_db},
              {"sf", r.result.sf},
              {"n_symbols", r.result.n_symbols},
              {"n_bits", r.result.n_bits},
              {"n_bit_errors", r.result.n_bit_errors},
              {"ser", r.result.ser()},
              {"ber", r.result.ber()},
              {"wilson95", ci.halfwidth},
              {"ber_low", ci.low},
              {"ber_high", ci.high},
              {"theory_pb", r.theory_pb},
              {"interference_es", r.interference_es}};
    if (timing) j["runtime_s"] = r.runtime_s;
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

// ---------------------------------------------------------------- charging

namespace {

struct PowerVariant {
  power::Capacitor capacitor;
  power::HarvesterModel harvester;
  power::LeakageCurve leakage;
};

PowerVariant power_variant(const ExperimentConfig& c, const std::string& name) {
  const auto curve = c.power.efficiency_path.empty() ? power::default_efficiency_curve()
                                                     : power::load_efficiency_csv(c.resolve(c.power.efficiency_path));
  if (name == "passive") {
    auto h = power::passive_harvester(c.power.passive_efficiency_scale);
    h.efficiency = curve;
    h.validate();
    return {power::Capacitor(power::kPassiveCapacitanceF), h, power::leakage_passive(h)};
  }
  auto h = power::active_harvester();
  h.efficiency = curve;
  h.validate();
  if (name == "active_with_startup") {
    auto leak = c.power.leakage_with_path.empty() ? power::leakage_with_startup()
                                                  : power::load_leakage_csv(c.resolve(c.power.leakage_with_path));
    return {power::Capacitor(power::kActiveCapacitanceF), h, leak};
  }
  if (name == "active_without_startup") {
    auto leak = c.power.leakage_without_path.empty()
                    ? power::leakage_without_startup()
                    : power::load_leakage_csv(c.resolve(c.power.leakage_without_path));
    return {power::Capacitor(power::kActiveCapacitanceF), h, leak};
  }
  throw ConfigError("unknown power variant '" + name + "'");
}

double incident_for_axis(const ExperimentConfig& c, double value) {
  switch (c.sweep.axis) {
    case SweepAxis::pr_dbm: return value;
    case SweepAxis::eirp_dbm: return channel::incident_power(value, c.channel.depth_cm, table_for(c));
    case SweepAxis::depth_cm: return channel::incident_power(c.channel.eirp_dbm, value, table_for(c));
    default: break;
  }
  throw ConfigError("charge-sweep needs sweep.axis = pr_dbm, eirp_dbm or depth_cm");
}

}  // namespace

std::vector<ChargeRow> run_charge_sweep(const ExperimentConfig& c) {
  validate(c, true);
  if (c.power.variants.empty()) throw ConfigError("power.variants must not be empty");
  std::vector<double> prs;
  for (double v : c.sweep.values) prs.push_back(incident_for_axis(c, v));
  std::sort(prs.begin(), prs.end());

  std::vector<ChargeRow> rows;
  for (const auto& name : c.power.variants) {
    const auto pv = power_variant(c, name);
    for (double pr : prs) {
      ChargeRow row{pr, name, std::nullopt};
      if (c.power.target_v > pv.capacitor.v()) {
        row.t_s = power::time_to_voltage(pv.capacitor, c.power.target_v, pr, pv.harvester, pv.leakage,
                                         {c.power.dt_s, c.power.max_time_s});
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_charge_csv(std::ostream& os, const std::vector<ChargeRow>& rows) {
  os << "pr_dbm,variant,t_to_target_s\n";
  for (const auto& r : rows) {
    os << format_double(r.pr_dbm) << ',' << r.variant << ',' << (r.t_s ? format_double(*r.t_s) : "never") << '\n';
  }
}

std::string charge_json(const std::vector<ChargeRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"pr_dbm", r.pr_dbm},
                   {"variant", r.variant},
                   {"t_to_target_s", r.t_s ? json(*r.t_s) : json("never")}});
  }
  return out.dump(2) + "\n";
}

power::SimTrace run_fsm_trace(const ExperimentConfig& c) {
  validate(c, false);
  const auto pv = power_variant(c, "active_with_startup");
  power::ActiveNodeFSM fsm;
  fsm.harvest_during_tx = c.power.harvest_during_tx;
  return power::run_active_fsm(fsm, pv.capacitor, c.power.fsm_pr_dbm, pv.harvester, pv.leakage,
                               c.power.fsm_duration_s, c.power.dt_s);
}

// ---------------------------------------------------------------- theory

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string display_bandwidth(double bw_hz) {
  const double khz = bw_hz / 1e3;
  return khz < 10 ? fixed(khz, 1) + " kHz" : fixed(khz, 0) + " kHz";
}

std::string display_rate(double rd_bps) {
  return rd_bps < 1e3 ? fixed(rd_bps, 0) + " bps" : fixed(rd_bps / 1e3, 1) + " kbps";
}

std::string display_duration(double ds_s) {
  const double ms = ds_s * 1e3;
  return ms >= 10 ? fixed(ms, 0) + " ms" : fixed(ms, 2) + " ms";
}

double tabulated_duration(int sf, double rd_bps) {
  const double shown = rd_bps < 1e3 ? std::round(rd_bps) : std::round(rd_bps / 100.0) * 100.0;
  return sf / shown;
}

TheoryReport run_theory_report(const ExperimentConfig& c) {
  validate(c, false);
  TheoryReport r;
  for (double fosc : {32768.0, 1e6, 2e6, 4e6}) {
    const auto p = chirp::derive_params(c.chirp.sf, fosc);
    ClockRow row;
    row.fosc_hz = fosc;
    row.bw_hz = p.bw_hz();
    row.ds_s = p.symbol_duration_s();
    row.rd_bps = p.data_rate_bps();
    row.bw_display = display_bandwidth(row.bw_hz);
    row.rd_display = display_rate(row.rd_bps);
    row.ds_display = display_duration(tabulated_duration(p.sf(), row.rd_bps));
    row.es = channel::interference_symbol_error_rate(row.ds_s, c.bursts.model);
    r.clocks.push_back(std::move(row));
  }

  const auto p = chirp_params(c);
  std::vector<double> snrs;
  if (c.sweep.axis == SweepAxis::snr_db && !c.sweep.values.empty()) {
    snrs = c.sweep.values;
    std::sort(snrs.begin(), snrs.end());
  } else {
    for (int s = -30; s <= 0; ++s) snrs.push_back(s);
  }
  const double es = channel::interference_symbol_error_rate(p.symbol_duration_s(), c.bursts.model);
  for (double s : snrs) r.snr.push_back({s, rx::ber_theory(std::pow(10.0, s / 10.0), p.sf()), es, p.data_rate_bps()});
  return r;
}

void write_clock_csv(std::ostream& os, const std::vector<ClockRow>& rows) {
  os << "fosc_hz,bw_hz,ds_s,rd_bps,bw_display,ds_display,rd_display,es_eq5\n";
  for (const auto& r : rows) {
    os << format_double(r.fosc_hz) << ',' << format_double(r.bw_hz) << ',' << format_double(r.ds_s) << ','
       << format_double(r.rd_bps) << ',' << r.bw_display << ',' << r.ds_display << ',' << r.rd_display << ','
       << format_double(r.es) << '\n';
  }
}

void write_snr_csv(std::ostream& os, const std::vector<SnrRow>& rows) {
  os << "snr_db,pb_eq3,es_eq5,rd_eq2\n";
  for (const auto& r : rows) {
    os << format_double(r.snr_db) << ',' << format_double(r.pb) << ',' << format_double(r.es) << ','
       << format_double(r.rd_bps) << '\n';
  }
}

std::string theory_json(const TheoryReport& r) {
  json clocks = json::array();
  for (const auto& c : r.clocks) {
    clocks.push_back({{"fosc_hz", c.fosc_hz},
                      {"bw_hz", c.bw_hz},
                      {"ds_s", c.ds_s},
                      {"rd_bps", c.rd_bps},
                      {"bw_display", c.bw_display},
                      {"ds_display", c.ds_display},
                      {"rd_display", c.rd_display},
                      {"es_eq5", c.es}});
  }
  json snr = json::array();
  for (const auto& s : r.snr) snr.push_back({{"snr_db", s.snr_db}, {"pb_eq3", s.pb}, {"es_eq5", s.es}, {"rd_eq2", s.rd_bps}});
  return json{{"clocks", clocks}, {"snr", snr}}.dump(2) + "\n";
}

// ---------------------------------------------------------------- calibration

CalibrationResult calibrate_composite_gain(const ExperimentConfig& c, double anchor_eirp_dbm, double anchor_ber) {
  validate(c, false);
  if (!(anchor_ber > 1e-4 && anchor_ber < 0.4)) {
    throw ConfigError("calibration anchor BER must lie in (1e-4, 0.4), got " + format_double(anchor_ber));
  }
  ExperimentConfig work = c;
  const auto p = chirp_params(work);
  TrialPlan plan;
  plan.symbols_per_trial = std::min<std::uint64_t>(std::max<std::uint64_t>(c.mc.symbols_per_trial, 1), c.calibration.symbols);
  plan.trials = (c.calibration.symbols + plan.symbols_per_trial - 1) / plan.symbols_per_trial;

  auto evaluate = [&](double gain_db) {
    work.channel.composite_gain_db = gain_db;
    const Link l = link_for(work, SweepAxis::eirp_dbm, anchor_eirp_dbm, p);
    return simulate_ber(work, p, channel::dbm_to_watts(l.ps_dbm), l.n0_w_per_hz, c.seed, plan);
  };

  double lo = c.calibration.gain_lo_db;
  double hi = c.calibration.gain_hi_db;
  const auto at_lo = evaluate(lo);
  const auto at_hi = evaluate(hi);
  if (!(at_lo.ber() > anchor_ber && at_hi.ber() < anchor_ber)) {
    throw CalibrationError("anchor BER " + format_double(anchor_ber) + " not bracketed: BER is " +
                           format_double(at_lo.ber()) + " at " + format_double(lo) + " dB and " +
                           format_double(at_hi.ber()) + " at " + format_double(hi) + " dB");
  }

  CalibrationResult result;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    const auto r = evaluate(mid);
    ++result.iterations;
    result.gain_db = mid;
    result.at_gain = r;
    if (std::abs(r.ber() - anchor_ber) <= r.wilson_95_halfwidth() || hi - lo < 0.01) break;
    (r.ber() > anchor_ber ? lo : hi) = mid;
  }
  return result;
}

}  // namespace rfsn::harness
