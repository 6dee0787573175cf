// rfsn: command-line front end for the square-chirp backscatter simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rfsn/channel.hpp"
#include "rfsn/chirpmod.hpp"
#include "rfsn/config.hpp"
#include "rfsn/error.hpp"
#include "rfsn/harness.hpp"
#include "rfsn/powersim.hpp"
#include "rfsn/rng.hpp"
#include "rfsn/rxdsp.hpp"
#include "rfsn/waveform_io.hpp"

namespace {

using namespace rfsn;
using json = nlohmann::json;
using io::format_double;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string format = "csv";
};

harness::ExperimentConfig load(const Common& o) {
  auto c = o.config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  return c;
}

void emit(const Common& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(o.out_path, std::ios::binary);
  if (!os) throw Error("cannot open " + o.out_path + " for writing");
  os << text;
  if (!os) throw Error("failed writing " + o.out_path);
}

bool json_out(const Common& o) { return o.format == "json"; }

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<chirp::Symbol> parse_symbols(const std::string& text) {
  std::vector<chirp::Symbol> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (v < 0 || item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      out.push_back(chirp::Symbol{static_cast<std::uint32_t>(v)});
    } catch (const std::logic_error&) {
      throw ConfigError("not a symbol value: '" + item + "'");
    }
  }
  return out;
}

chirp::Waveform read_waveform(const std::string& path, const chirp::ChirpParams& p) {
  if (ends_with(path, ".sqch")) return io::load_sqch(path);
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  return io::read_waveform_csv(is, p.fs_hz(), chirp::WaveformKind::analog);
}

// ---------------------------------------------------------------- commands

void cmd_params(const Common& o) {
  const auto c = load(o);
  harness::validate(c, false);
  const auto p = harness::chirp_params(c);
  const std::vector<std::pair<std::string, std::string>> kv = {
      {"sf", std::to_string(p.sf())},
      {"bw_hz", format_double(p.bw_hz())},
      {"fosc_hz", format_double(p.fosc_hz())},
      {"fs_hz", format_double(p.fs_hz())},
      {"ds_s", format_double(p.symbol_duration_s())},
      {"rd_bps", format_double(p.data_rate_bps())},
      {"chips", std::to_string(p.chips())},
      {"samples_per_symbol", std::to_string(p.samples_per_symbol())},
  };
  if (json_out(o)) {
    json j = json::object();
    for (const auto& [k, v] : kv) j[k] = json::parse(v);
    emit(o, j.dump(2) + "\n");
  } else {
    std::string text = "key,value\n";
    for (const auto& [k, v] : kv) text += k + "," + v + "\n";
    emit(o, text);
  }
}

void cmd_modulate(const Common& o, const std::string& symbols_text, std::uint64_t random_count) {
  const auto c = load(o);
  harness::validate(c, false);
  const auto p = harness::chirp_params(c);
  std::vector<chirp::Symbol> symbols;
  if (!symbols_text.empty()) {
    symbols = parse_symbols(symbols_text);
  } else {
    Engine rng = make_engine(c.seed, stream::symbols);
    std::uniform_int_distribution<std::uint32_t> pick(0, p.chips() - 1);
    for (std::uint64_t i = 0; i < random_count; ++i) symbols.push_back({pick(rng)});
  }
  if (symbols.empty()) throw ConfigError("no symbols to modulate (use --symbols or --random)");

  chirp::Waveform w;
  switch (c.chirp.waveform) {
    case harness::WaveformChoice::quantized:
      w = chirp::modulate_quantized(symbols, p, {c.chirp.jitter, mix_seed(c.seed ^ stream::jitter)});
      break;
    case harness::WaveformChoice::ideal: w = chirp::modulate_ideal(symbols, p); break;
    case harness::WaveformChoice::linear: w = chirp::modulate_linear(symbols, p); break;
  }

  if (ends_with(o.out_path, ".sqch")) {
    io::save_sqch(o.out_path, w);
  } else if (json_out(o)) {
    emit(o, json{{"fs_hz", w.fs_hz}, {"kind", static_cast<int>(w.kind)}, {"samples", w.samples}}.dump() + "\n");
  } else {
    std::ostringstream os;
    io::write_waveform_csv(os, w);
    emit(o, os.str());
  }
}

void cmd_demodulate(const Common& o, const std::string& in_path, std::optional<std::uint64_t> count) {
  const auto c = load(o);
  harness::validate(c, false);
  const auto p = harness::chirp_params(c);
  const auto w = read_waveform(in_path, p);
  const std::size_t n = count ? *count : w.size() / p.samples_per_symbol();

  rx::Demodulator demod(p);
  if (std::abs(w.fs_hz - p.fs_hz()) > 1e-9 * p.fs_hz()) throw ConfigError("waveform sample rate does not match the config");
  if (n * p.samples_per_symbol() > w.size()) throw ConfigError("waveform holds fewer symbols than requested");
  json rows = json::array();
  std::string text = "index,symbol,peak_to_mean,no_signal\n";
  const std::span<const double> samples(w.samples);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = demod.analyze(samples.subspan(i * p.samples_per_symbol(), p.samples_per_symbol()));
    text += std::to_string(i) + "," + std::to_string(d.detected.value) + "," + format_double(d.peak_to_mean) + "," +
            (d.no_signal ? "true" : "false") + "\n";
    rows.push_back({{"index", i}, {"symbol", d.detected.value}, {"peak_to_mean", d.peak_to_mean}, {"no_signal", d.no_signal}});
  }
  emit(o, json_out(o) ? rows.dump(2) + "\n" : text);
}

void cmd_spectrum(const Common& o, const std::string& in_path, bool keep_dc) {
  const auto c = load(o);
  harness::validate(c, false);
  auto w = read_waveform(in_path, harness::chirp_params(c));
  if (!keep_dc) w = chirp::remove_mean(w);
  const auto s = chirp::spectrum(w);
  if (json_out(o)) {
    emit(o, json{{"freqs_hz", s.freqs_hz}, {"psd", s.psd}, {"total_power", s.total_power}}.dump() + "\n");
    return;
  }
  std::string text = "freq_hz,psd\n";
  for (std::size_t k = 0; k < s.psd.size(); ++k) text += format_double(s.freqs_hz[k]) + "," + format_double(s.psd[k]) + "\n";
  emit(o, text);
}

void cmd_ber_sweep(const Common& o, bool timing) {
  const auto c = load(o);
  const auto rows = harness::run_ber_sweep(c);
  if (json_out(o)) {
    emit(o, harness::sweep_json(rows, c.sweep.axis, timing));
  } else {
    std::ostringstream os;
    harness::write_sweep_csv(os, rows, c.sweep.axis, timing);
    emit(o, os.str());
  }
}

void cmd_charge_sweep(const Common& o, bool trace) {
  const auto c = load(o);
  std::ostringstream os;
  if (trace) {
    const auto t = harness::run_fsm_trace(c);
    if (json_out(o)) {
      json events = json::array();
      for (const auto& e : t.events) {
        events.push_back({{"t_s", e.t_s}, {"event", power::to_string(e.kind)}, {"v", e.v},
                          {"packets_cum", e.packets_cum}, {"bytes_cum", e.bytes_cum}});
      }
      emit(o, json{{"events", events}, {"packets_sent", t.packets_sent}, {"bytes_sent", t.bytes_sent},
                   {"energy_imbalance_j", t.energy_imbalance_j()}}.dump(2) + "\n");
      return;
    }
    power::write_trace_csv(os, t);
  } else {
    const auto rows = harness::run_charge_sweep(c);
    if (json_out(o)) {
      emit(o, harness::charge_json(rows));
      return;
    }
    harness::write_charge_csv(os, rows);
  }
  emit(o, os.str());
}

void cmd_theory(const Common& o, const std::string& table) {
  const auto c = load(o);
  const auto r = harness::run_theory_report(c);
  if (json_out(o)) {
    emit(o, harness::theory_json(r));
    return;
  }
  std::ostringstream os;
  if (table == "snr") {
    harness::write_snr_csv(os, r.snr);
  } else {
    harness::write_clock_csv(os, r.clocks);
  }
  emit(o, os.str());
}

void cmd_calibrate(const Common& o, std::optional<double> eirp, std::optional<double> ber) {
  auto c = load(o);
  if (eirp) c.calibration.anchor_eirp_dbm = eirp;
  if (ber) c.calibration.anchor_ber = ber;
  std::vector<std::string> missing;
  if (!c.calibration.anchor_eirp_dbm) missing.emplace_back("calibration needs an anchor EIRP (--anchor-eirp or calibrate.anchor_eirp_dbm)");
  if (!c.calibration.anchor_ber) missing.emplace_back("calibration needs an anchor BER (--anchor-ber or calibrate.anchor_ber)");
  if (!missing.empty()) throw ConfigError(std::move(missing));

  const auto r = harness::calibrate_composite_gain(c, *c.calibration.anchor_eirp_dbm, *c.calibration.anchor_ber);
  c.channel.composite_gain_db = r.gain_db;
  std::cerr << "composite gain " << format_double(r.gain_db) << " dB: BER " << format_double(r.at_gain.ber())
            << " +/- " << format_double(r.at_gain.wilson_95_halfwidth()) << " after " << r.iterations << " steps\n";
  if (json_out(o)) {
    emit(o, json{{"gain_db", r.gain_db},
                 {"ber", r.at_gain.ber()},
                 {"wilson95", r.at_gain.wilson_95_halfwidth()},
                 {"n_symbols", r.at_gain.n_symbols},
                 {"iterations", r.iterations}}.dump(2) + "\n");
  } else {
    emit(o, harness::serialize(c));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Square-chirp backscatter and RF energy-harvesting simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Common o;
  app.add_option("--config", o.config_path, "key = value experiment config");
  app.add_option("--seed", o.seed, "base seed (overrides the config)");
  app.add_option("--out", o.out_path, "output file (default stdout)");
  app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));

  auto* params = app.add_subcommand("params", "derived chirp parameters");

  auto* modulate = app.add_subcommand("modulate", "synthesize a waveform (.sqch output is binary)");
  std::string symbols_text;
  std::uint64_t random_count = 0;
  modulate->add_option("--symbols", symbols_text, "comma-separated symbol values");
  modulate->add_option("--random", random_count, "number of random symbols");

  auto* demodulate = app.add_subcommand("demodulate", "dechirp a waveform symbol by symbol");
  std::string in_path;
  std::optional<std::uint64_t> count;
  demodulate->add_option("--in", in_path, "waveform (.sqch or sample_index,value CSV)")->required();
  demodulate->add_option("--count", count, "symbols to detect (default: all whole symbols)");

  auto* spectrum = app.add_subcommand("spectrum", "one-sided power spectrum of a waveform");
  bool keep_dc = false;
  spectrum->add_option("--in", in_path, "waveform (.sqch or CSV)")->required();
  spectrum->add_flag("--keep-dc", keep_dc, "do not remove the mean first");

  auto* ber_sweep = app.add_subcommand("ber-sweep", "Monte-Carlo BER along sweep.axis");
  bool timing = false;
  ber_sweep->add_flag("--timing", timing, "add a runtime_s column (output no longer reproducible)");

  auto* charge_sweep = app.add_subcommand("charge-sweep", "time to charge to power.target_v per variant");
  bool trace = false;
  charge_sweep->add_flag("--trace", trace, "instead emit the active-node duty-cycle trace");

  auto* theory = app.add_subcommand("theory", "closed-form tables");
  std::string table = "clocks";
  theory->add_option("--table", table, "clocks: per-clock parameters; snr: Pb vs SNR")
      ->check(CLI::IsMember({"clocks", "snr"}));

  auto* calibrate = app.add_subcommand("calibrate", "fit the composite gain to one BER anchor");
  std::optional<double> anchor_eirp;
  std::optional<double> anchor_ber;
  calibrate->add_option("--anchor-eirp", anchor_eirp, "anchor EIRP (dBm)");
  calibrate->add_option("--anchor-ber", anchor_ber, "anchor BER");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*params) cmd_params(o);
    if (*modulate) cmd_modulate(o, symbols_text, random_count);
    if (*demodulate) cmd_demodulate(o, in_path, count);
    if (*spectrum) cmd_spectrum(o, in_path, keep_dc);
    if (*ber_sweep) cmd_ber_sweep(o, timing);
    if (*charge_sweep) cmd_charge_sweep(o, trace);
    if (*theory) cmd_theory(o, table);
    if (*calibrate) cmd_calibrate(o, anchor_eirp, anchor_ber);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
