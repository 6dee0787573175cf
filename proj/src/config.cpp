#include "rfsn/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "rfsn/error.hpp"
#include "rfsn/waveform_io.hpp"

namespace rfsn::harness {

std::string to_string(WaveformChoice w) {
  switch (w) {
    case WaveformChoice::quantized: return "quantized";
    case WaveformChoice::ideal: return "ideal";
    case WaveformChoice::linear: return "linear";
  }
  return "unknown";
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::eirp_dbm: return "eirp_dbm";
    case SweepAxis::depth_cm: return "depth_cm";
    case SweepAxis::bw_hz: return "bw_hz";
    case SweepAxis::pr_dbm: return "pr_dbm";
    case SweepAxis::snr_db: return "snr_db";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Parsers return an error message, or an empty string on success.
using Parser = std::function<std::string(const std::string&)>;
using Printer = std::function<std::string()>;

struct Field {
  std::string key;
  Parser parse;
  Printer print;
};

std::string parse_number(const std::string& text, double& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) return "not a number: '" + text + "'";
  return {};
}

template <typename Int>
std::string parse_integer(const std::string& text, Int& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) return "not a non-negative integer: '" + text + "'";
  return {};
}

std::string parse_bool(const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes") {
    out = true;
  } else if (text == "false" || text == "0" || text == "no") {
    out = false;
  } else {
    return "not a boolean: '" + text + "'";
  }
  return {};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

Field number(const std::string& key, double& ref) {
  return {key, [&ref](const std::string& t) { return parse_number(t, ref); },
          [&ref] { return io::format_double(ref); }};
}

Field optional_number(const std::string& key, std::optional<double>& ref) {
  return {key,
          [&ref](const std::string& t) {
            if (t.empty()) {
              ref.reset();
              return std::string();
            }
            double v = 0;
            auto err = parse_number(t, v);
            if (err.empty()) ref = v;
            return err;
          },
          [&ref] { return ref ? io::format_double(*ref) : std::string(); }};
}

template <typename Int>
Field integer(const std::string& key, Int& ref) {
  return {key, [&ref](const std::string& t) { return parse_integer(t, ref); },
          [&ref] { return std::to_string(ref); }};
}

Field boolean(const std::string& key, bool& ref) {
  return {key, [&ref](const std::string& t) { return parse_bool(t, ref); },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Field text(const std::string& key, std::string& ref) {
  return {key,
          [&ref](const std::string& t) {
            ref = t;
            return std::string();
          },
          [&ref] { return ref; }};
}

Field number_list(const std::string& key, std::vector<double>& ref) {
  return {key,
          [&ref](const std::string& t) {
            std::vector<double> values;
            for (const auto& item : split_list(t)) {
              double v = 0;
              if (auto err = parse_number(item, v); !err.empty()) return err;
              values.push_back(v);
            }
            ref = std::move(values);
            return std::string();
          },
          [&ref] {
            std::vector<std::string> items;
            for (double v : ref) items.push_back(io::format_double(v));
            return join(items);
          }};
}

Field text_list(const std::string& key, std::vector<std::string>& ref) {
  return {key,
          [&ref](const std::string& t) {
            ref = split_list(t);
            return std::string();
          },
          [&ref] { return join(ref); }};
}

template <typename Enum, std::size_t K>
Field choice(const std::string& key, Enum& ref, const Enum (&options)[K]) {
  return {key,
          [&ref, &options](const std::string& t) {
            for (const auto o : options) {
              if (to_string(o) == t) {
                ref = o;
                return std::string();
              }
            }
            std::vector<std::string> names;
            for (const auto o : options) names.push_back(to_string(o));
            return "expected one of " + join(names) + ", got '" + t + "'";
          },
          [&ref] { return to_string(ref); }};
}

constexpr WaveformChoice kWaveforms[] = {WaveformChoice::quantized, WaveformChoice::ideal, WaveformChoice::linear};
constexpr SweepAxis kAxes[] = {SweepAxis::eirp_dbm, SweepAxis::depth_cm, SweepAxis::bw_hz, SweepAxis::pr_dbm,
                               SweepAxis::snr_db};

// The schema, in serialization order. Fields bind to members of `c`.
std::vector<Field> schema(ExperimentConfig& c) {
  auto& b = c.bursts.model;
  return {
      text("scenario", c.scenario),
      integer("seed", c.seed),
      integer("chirp.sf", c.chirp.sf),
      number("chirp.bw_hz", c.chirp.bw_hz),
      number("chirp.fosc_hz", c.chirp.fosc_hz),
      number("chirp.oversampling", c.chirp.oversampling),
      choice("chirp.waveform", c.chirp.waveform, kWaveforms),
      boolean("chirp.jitter", c.chirp.jitter),
      text("channel.table", c.channel.table_path),
      number("channel.eirp_dbm", c.channel.eirp_dbm),
      number("channel.depth_cm", c.channel.depth_cm),
      number("channel.composite_gain_db", c.channel.composite_gain_db),
      boolean("channel.round_trip", c.channel.round_trip),
      number("channel.n0_dbm_per_hz", c.channel.n0_dbm_per_hz),
      number("channel.detection_fraction", c.channel.detection_fraction),
      boolean("bursts.enabled", c.bursts.enabled),
      number("bursts.mean_interval_s", b.mean_interval_s),
      number("bursts.duration_s", b.duration_s),
      number("bursts.amplitude_scale", b.amplitude_scale),
      integer("bursts.seed", b.seed),
      number_list("bursts.envelope", b.envelope),
      text_list("power.variants", c.power.variants),
      number("power.target_v", c.power.target_v),
      number("power.dt_s", c.power.dt_s),
      number("power.max_time_s", c.power.max_time_s),
      number("power.passive_efficiency_scale", c.power.passive_efficiency_scale),
      text("power.efficiency_file", c.power.efficiency_path),
      text("power.leakage_with_file", c.power.leakage_with_path),
      text("power.leakage_without_file", c.power.leakage_without_path),
      number("power.fsm_pr_dbm", c.power.fsm_pr_dbm),
      number("power.fsm_duration_s", c.power.fsm_duration_s),
      boolean("power.harvest_during_tx", c.power.harvest_during_tx),
      integer("mc.trials", c.mc.trials),
      integer("mc.symbols_per_trial", c.mc.symbols_per_trial),
      number("mc.trial_duration_s", c.mc.trial_duration_s),
      integer("mc.threads", c.mc.threads),
      choice("sweep.axis", c.sweep.axis, kAxes),
      number_list("sweep.values", c.sweep.values),
      optional_number("calibrate.anchor_eirp_dbm", c.calibration.anchor_eirp_dbm),
      optional_number("calibrate.anchor_ber", c.calibration.anchor_ber),
      number("calibrate.gain_lo_db", c.calibration.gain_lo_db),
      number("calibrate.gain_hi_db", c.calibration.gain_hi_db),
      integer("calibrate.symbols", c.calibration.symbols),
  };
}

bool file_exists(const ExperimentConfig& c, const std::string& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(c.resolve(p), ec);
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

bool ExperimentConfig::operator==(const ExperimentConfig& other) const { return serialize(*this) == serialize(other); }

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  ExperimentConfig c;
  auto fields = schema(c);
  std::vector<std::string> problems;
  std::vector<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) {
      problems.push_back(where + "unknown key '" + key + "'");
      continue;
    }
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      problems.push_back(where + "duplicate key '" + key + "'");
      continue;
    }
    seen.push_back(key);
    if (auto err = it->parse(value); !err.empty()) problems.push_back(where + key + ": " + err);
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  auto c = parse_config(is, path.string());
  c.base_dir = path.parent_path();
  return c;
}

std::string serialize(const ExperimentConfig& c) {
  ExperimentConfig copy = c;
  std::string out;
  for (const auto& f : schema(copy)) out += f.key + " = " + f.print() + "\n";
  return out;
}

std::vector<std::string> validation_problems(const ExperimentConfig& c, bool need_sweep) {
  std::vector<std::string> problems;
  auto add = [&](std::string p) { problems.push_back(std::move(p)); };

  const double fosc = c.chirp.fosc_hz > 0 ? c.chirp.fosc_hz : chirp::kClocksPerPeriod * c.chirp.bw_hz;
  try {
    chirp::ChirpParams::make(c.chirp.sf, c.chirp.bw_hz, fosc, c.chirp.oversampling * c.chirp.bw_hz);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) add("chirp: " + p);
    if (e.problems().empty()) add(std::string("chirp: ") + e.what());
  }
  if (c.chirp.waveform == WaveformChoice::quantized && c.chirp.oversampling * c.chirp.bw_hz < fosc * (1 - 1e-12)) {
    add("chirp: quantized waveforms need a sample rate of at least fosc");
  }

  if (!c.channel.table_path.empty() && !file_exists(c, c.channel.table_path)) {
    add("channel.table: file not found: " + c.resolve(c.channel.table_path).string());
  }
  if (!std::isfinite(c.channel.composite_gain_db)) add("channel.composite_gain_db must be finite");
  if (!std::isfinite(c.channel.n0_dbm_per_hz)) add("channel.n0_dbm_per_hz must be finite");
  if (!(c.channel.detection_fraction > 0 && c.channel.detection_fraction <= 1)) {
    add("channel.detection_fraction must lie in (0, 1]");
  }
  if (!(c.channel.depth_cm >= 0)) add("channel.depth_cm must be non-negative");

  try {
    c.bursts.model.validate();
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) add("bursts: " + p);
  }

  for (const auto& v : c.power.variants) {
    if (v != "passive" && v != "active_with_startup" && v != "active_without_startup") {
      add("power.variants: unknown variant '" + v + "'");
    }
  }
  if (!(c.power.target_v > 0)) add("power.target_v must be positive");
  if (!(c.power.dt_s > 0 && c.power.dt_s <= 1e-3)) add("power.dt_s must lie in (0, 0.001]");
  if (!(c.power.max_time_s > 0)) add("power.max_time_s must be positive");
  if (!(c.power.passive_efficiency_scale > 0)) add("power.passive_efficiency_scale must be positive");
  if (!(c.power.fsm_duration_s > 0)) add("power.fsm_duration_s must be positive");
  for (const auto* p : {&c.power.efficiency_path, &c.power.leakage_with_path, &c.power.leakage_without_path}) {
    if (!p->empty() && !file_exists(c, *p)) add("power: file not found: " + c.resolve(*p).string());
  }

  if (c.mc.trials < 1) add("mc.trials must be at least 1");
  if (c.mc.symbols_per_trial < 1 && !(c.mc.trial_duration_s > 0)) add("mc.symbols_per_trial must be at least 1");
  if (c.mc.trial_duration_s < 0) add("mc.trial_duration_s must be non-negative");

  if (need_sweep && c.sweep.values.empty()) add("sweep.values must not be empty");
  for (double v : c.sweep.values) {
    if (!std::isfinite(v)) add("sweep.values must be finite");
    if (c.sweep.axis == SweepAxis::bw_hz && !(v > 0)) add("sweep.values: bandwidths must be positive");
  }

  if (c.calibration.anchor_ber && !(*c.calibration.anchor_ber > 1e-4 && *c.calibration.anchor_ber < 0.4)) {
    add("calibrate.anchor_ber must lie in (1e-4, 0.4)");
  }
  if (!(c.calibration.gain_lo_db < c.calibration.gain_hi_db)) add("calibrate.gain_lo_db must be below gain_hi_db");
  if (c.calibration.symbols < 1) add("calibrate.symbols must be at least 1");
  return problems;
}

void validate(const ExperimentConfig& c, bool need_sweep) {
  auto problems = validation_problems(c, need_sweep);
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

}  // namespace rfsn::harness
