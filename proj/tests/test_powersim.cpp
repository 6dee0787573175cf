#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>

#include "oracles.hpp"
#include "rfsn/error.hpp"
#include "rfsn/powersim.hpp"

using namespace rfsn;
using namespace rfsn::power;

namespace {

HarvesterModel flat_harvester(double eta) {
  HarvesterModel h;
  h.sensitivity_dbm = -60;
  h.efficiency = PiecewiseLinear({{-60.0, eta}, {40.0, eta}});
  return h;
}

double dbm_w(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace

TEST_CASE("harvested power") {
  CHECK(harvested_power(5, active_harvester()) == doctest::Approx(0.6 * dbm_w(5)));
  CHECK(harvested_power(5, active_harvester()) == doctest::Approx(1.897e-3).epsilon(1e-3));
  CHECK(harvested_power(-60, active_harvester()) == 0.0);
  CHECK(harvested_power(-std::numeric_limits<double>::infinity(), active_harvester()) == 0.0);
  CHECK(harvested_power(-2.6, active_harvester()) == 0.0);
  CHECK(harvested_power(-2.4, active_harvester()) > 0.0);
}

TEST_CASE("efficiency curve") {
  const auto eta = default_efficiency_curve();
  CHECK(eta(5) == doctest::Approx(0.6));
  CHECK(eta(-10) == doctest::Approx(0.25));
  CHECK(eta(-20) == doctest::Approx(0.25));
  CHECK(eta(20) == doctest::Approx(0.62));
  CHECK(eta(2.5) == doctest::Approx(0.55));
  CHECK_THROWS_AS(PiecewiseLinear({{1.0, 0.5}, {1.0, 0.6}}), ConfigError);
  HarvesterModel bad = active_harvester();
  bad.efficiency = PiecewiseLinear({{1.0, 1.5}});
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  const auto file = load_efficiency_csv(std::filesystem::path(RFSN_DATA_DIR) / "efficiency_default.csv");
  CHECK(file.points() == eta.points());
}

TEST_CASE("capacitor bookkeeping") {
  CHECK_THROWS_AS(Capacitor(0.0), ConfigError);
  CHECK_THROWS_AS(Capacitor(-1e-3), ConfigError);
  const Capacitor c(1e-3, 2.4);
  CHECK(step_capacitor(c, 1e-3, 1e-3, 0.5).v() == doctest::Approx(2.4));
  CHECK(c.energy_at(2.6) - c.energy_at(2.3) == doctest::Approx(oracle::window_energy(1e-3, 2.6, 2.3)));
  CHECK(oracle::window_energy(1e-3, 2.6, 2.3) == doctest::Approx(0.735e-3));
  const auto up = step_capacitor(c, 2e-3, 0.0, 0.1);
  CHECK(up.energy_j() - c.energy_j() == doctest::Approx(2e-4));
  const auto drained = step_capacitor(Capacitor(1e-3, 0.1), 0.0, 1.0, 1.0);
  CHECK(drained.v() == 0.0);
}

TEST_CASE("leakage curves") {
  const auto with = leakage_with_startup();
  const auto without = leakage_without_startup();
  CHECK(with(1.8) == doctest::Approx(61e-6));
  CHECK(with(3.0) == doctest::Approx(61e-6));
  CHECK(without(1.8) == doctest::Approx(2.1e-3));
  CHECK(without(0.6) == doctest::Approx(3.1e-6));
  CHECK(with(0.3) == doctest::Approx(1.55e-6));
  CHECK(without(1.2) > without(0.6));
  CHECK(without(1.2) < without(1.8));
  CHECK(with.max_up_to(1.8) == doctest::Approx(61e-6));

  const std::filesystem::path data(RFSN_DATA_DIR);
  CHECK(load_leakage_csv(data / "leakage_with_startup.csv").points() == with.points());
  CHECK(load_leakage_csv(data / "leakage_with_startup.csv").variant() == LeakageVariant::with_startup_circuit);
  CHECK(load_leakage_csv(data / "leakage_without_startup.csv").points() == without.points());
  CHECK(load_leakage_csv(data / "leakage_without_startup.csv").variant() == LeakageVariant::without_startup_circuit);

  std::ostringstream os;
  write_curve_csv(os, with.points());
  CHECK(os.str().rfind("x,y\n", 0) == 0);
}

TEST_CASE("time to voltage") {
  const auto h = active_harvester();
  CHECK(!time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, 3.2, h, leakage_without_startup()).has_value());
  CHECK(!time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, -std::numeric_limits<double>::infinity(), h,
                         leakage_with_startup())
             .has_value());
  const auto t = time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, -1.5, h, leakage_with_startup());
  REQUIRE(t.has_value());
  CHECK(*t > 4.0);
  CHECK(*t < 10.0);
  CHECK_THROWS_AS(time_to_voltage(Capacitor(kActiveCapacitanceF, 2.0), 1.8, -1.5, h, leakage_with_startup()), DomainError);
}

TEST_CASE("charge time converges as the step halves") {
  const auto h = active_harvester();
  const auto leak = leakage_with_startup();
  for (double pr : {-2.0, 0.0, 3.2}) {
    const auto a = time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, pr, h, leak, {1e-3, 3600});
    const auto b = time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, pr, h, leak, {5e-4, 3600});
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(std::abs(*a - *b) / *b < 1e-3);
  }
  const auto hp = passive_harvester();
  const auto lp = leakage_passive(hp);
  const auto a = time_to_voltage(Capacitor(kPassiveCapacitanceF), 1.8, -8.1, hp, lp, {1e-3, 3600});
  const auto b = time_to_voltage(Capacitor(kPassiveCapacitanceF), 1.8, -8.1, hp, lp, {5e-4, 3600});
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(std::abs(*a - *b) / *b < 5e-3);
}

TEST_CASE("charge time falls with incident power") {
  const auto ha = active_harvester();
  const auto hp = passive_harvester();
  std::optional<double> prev_a;
  std::optional<double> prev_p;
  for (double pr = -2.0; pr <= 12.0; pr += 0.5) {
    const auto a = time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, pr, ha, leakage_with_startup());
    const auto p = time_to_voltage(Capacitor(kPassiveCapacitanceF), 1.8, pr, hp, leakage_passive(hp));
    REQUIRE(a.has_value());
    REQUIRE(p.has_value());
    CHECK(*p < *a);
    if (prev_a) CHECK(*a < *prev_a);
    if (prev_p) CHECK(*p < *prev_p);
    prev_a = a;
    prev_p = p;
  }
}

TEST_CASE("passive anchor fit") {
  const double k = fit_passive_efficiency_scale();
  CHECK(k == doctest::Approx(kPassiveEfficiencyScale).epsilon(1e-3));
  const auto h = passive_harvester(k);
  const auto t = time_to_voltage(Capacitor(kPassiveCapacitanceF), 1.8, -2.3, h, leakage_passive(h), {1e-4, 3600});
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(0.9).epsilon(0.01));
  const auto slow = time_to_voltage(Capacitor(kPassiveCapacitanceF), 1.8, -8.1, h, leakage_passive(h));
  REQUIRE(slow.has_value());
  CHECK(*slow / *t >= 10.0);
}

TEST_CASE("minimum startup power") {
  const auto without = min_startup_incident_power(leakage_without_startup(), active_harvester());
  REQUIRE(without.has_value());
  CHECK(std::abs(*without - 5.4) <= 0.2);

  const auto flat = flat_harvester(0.6);
  const auto with = min_startup_incident_power(leakage_with_startup(), flat);
  REQUIRE(with.has_value());
  CHECK(*with <= -9.9);
  CHECK(*with == doctest::Approx(10.0 * std::log10(61e-6 / 0.6 / 1e-3)).epsilon(1e-6));

  const LeakageCurve none({{0.6, 0.0}, {1.8, 0.0}}, LeakageVariant::with_startup_circuit);
  CHECK(min_startup_incident_power(none, active_harvester()) == active_harvester().sensitivity_dbm);

  const LeakageCurve huge({{1.0, 100.0}}, LeakageVariant::without_startup_circuit);
  CHECK(!min_startup_incident_power(huge, active_harvester()).has_value());
}

TEST_CASE("startup circuit widens the reachable range") {
  const auto h = active_harvester();
  for (double pr : {-2.3, -1.5, 0.0, 2.0, 3.2, 5.0, 5.3}) {
    CAPTURE(pr);
    CHECK(time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, pr, h, leakage_with_startup()).has_value());
    CHECK(!time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, pr, h, leakage_without_startup()).has_value());
  }
  CHECK(time_to_voltage(Capacitor(kActiveCapacitanceF), 1.8, 5.6, h, leakage_without_startup()).has_value());
}

TEST_CASE("duty-cycle state machine") {
  const auto h = active_harvester();
  const auto leak = leakage_with_startup();

  SUBCASE("packets per window without in-transmit harvest") {
    ActiveNodeFSM fsm;
    fsm.harvest_during_tx = false;
    const auto tr = run_active_fsm(fsm, Capacitor(kActiveCapacitanceF), 2.0, h, leak, 30);
    const auto per_window = static_cast<std::uint64_t>(
        std::floor(oracle::window_energy(kActiveCapacitanceF, fsm.v_wake, fsm.v_sleep) / fsm.e_packet_j));
    CHECK(per_window == 4);
    std::uint64_t since_wake = 0;
    int windows = 0;
    bool after_wake = false;
    for (const auto& e : tr.events) {
      if (e.kind == EventKind::wake) {
        since_wake = 0;
        after_wake = true;
      } else if (e.kind == EventKind::packet) {
        ++since_wake;
      } else if (e.kind == EventKind::sleep && after_wake) {
        CHECK(since_wake == per_window);
        ++windows;
      }
    }
    CHECK(windows > 5);
    CHECK(std::abs(tr.energy_imbalance_j()) <= 1e-6 * (tr.initial_energy_j + tr.harvested_j));
  }

  SUBCASE("energy balances and time moves forward") {
    const ActiveNodeFSM fsm;
    for (double pr : {-2.0, 0.0, 2.0, 5.0}) {
      const auto tr = run_active_fsm(fsm, Capacitor(kActiveCapacitanceF), pr, h, leak, 20);
      CHECK(std::abs(tr.energy_imbalance_j()) <= 1e-6 * (tr.initial_energy_j + tr.harvested_j));
      for (std::size_t i = 1; i < tr.events.size(); ++i) CHECK(tr.events[i].t_s > tr.events[i - 1].t_s);
      CHECK(tr.bytes_sent == tr.packets_sent * fsm.msdu_bytes);
    }
  }

  SUBCASE("threshold discipline") {
    const ActiveNodeFSM fsm;
    for (double pr : {-1.0, 2.0, 8.0}) {
      const auto tr = run_active_fsm(fsm, Capacitor(kActiveCapacitanceF), pr, h, leak, 40);
      bool booted = false;
      for (const auto& e : tr.events) {
        if (e.kind == EventKind::packet) {
          CHECK(e.v >= fsm.v_sleep);
          CHECK(e.v <= fsm.v_start);
        }
        if (e.kind == EventKind::boot) {
          CHECK(!booted);
          booted = true;
        }
        if (e.kind == EventKind::dead) booted = false;
      }
    }
  }

  SUBCASE("below startup power nothing is sent") {
    const auto tr = run_active_fsm(ActiveNodeFSM{}, Capacitor(kActiveCapacitanceF), -3.0, h, leak, 60);
    CHECK(tr.packets_sent == 0);
    CHECK(!tr.first_packet_time_s().has_value());
  }

  SUBCASE("first kilobyte within ten seconds at 2 dBm") {
    const auto tr = run_active_fsm(ActiveNodeFSM{}, Capacitor(kActiveCapacitanceF), 2.0, h, leak, 10);
    REQUIRE(tr.first_packet_time_s().has_value());
    CHECK(*tr.first_packet_time_s() < 10.0);
    CHECK(tr.bytes_sent >= 1000);
  }

  SUBCASE("trace csv") {
    const auto tr = run_active_fsm(ActiveNodeFSM{}, Capacitor(kActiveCapacitanceF), 2.0, h, leak, 8);
    std::ostringstream os;
    write_trace_csv(os, tr);
    CHECK(os.str().rfind(std::string(kTraceCsvHeader) + "\n", 0) == 0);
  }
}

TEST_CASE("passive steady state") {
  const auto pm = default_passive_node();
  const auto h = flat_harvester(0.6);
  const auto ok = passive_steady_state(pm, 32768, 1.8, -7.3, h);
  CHECK(ok.sustainable);
  CHECK(ok.required_w == doctest::Approx(9.3e-6));
  CHECK(ok.harvested_w == doctest::Approx(0.6 * dbm_w(-7.3)));
  CHECK(!passive_steady_state(pm, 4e6, 1.8, -7.3, h).sustainable);
  CHECK(passive_steady_state(pm, 4e6, 3.0, -7.3, h).required_w == doctest::Approx(1098e-6));
  CHECK_THROWS_AS(passive_steady_state(pm, 3e6, 1.8, -7.3, h), ConfigError);

  const auto hp = passive_harvester();
  const auto a = passive_steady_state(pm, 32768, 1.8, hp.sensitivity_dbm, hp);
  const auto b = passive_steady_state(pm, 32768, 1.8, hp.sensitivity_dbm, hp);
  CHECK(a.sustainable == b.sustainable);
  CHECK(a.sustainable == (a.margin_w >= 0));
}
