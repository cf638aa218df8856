// Copyright 2026 The cmosq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "cmosq/config.hpp"
#include "cmosq/error.hpp"
#include "cmosq/experiments.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cmosq;
using namespace cmosq::experiments;

namespace {

constexpr double kPi = std::numbers::pi;

Setup ideal_setup() {
  Setup s;
  s.spin.spam = {1.0, 1.0, 1.0};
  return s;
}

ExperimentSpec make_spec(Kind k, int shots, std::vector<Axis> axes = {}) {
  ExperimentSpec e;
  e.kind = k;
  e.shots = shots;
  e.axes = std::move(axes);
  return e;
}

double f2_idle(const Setup& s, const Protocol& p = {}) {
  return nominal_frequency(s.spin, 2, j_levels(s.controller, p.v_idle).low);
}

void check_shape(const ExperimentResult& r) {
  std::size_t n = 1;
  for (const auto& a : r.axes) n *= a.values.size();
  CHECK(r.size() == n);
  CHECK(r.p_model.size() == n);
  CHECK(r.blocked.size() == n);
  CHECK(r.shots.size() == n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(r.p_blocked[i] >= 0.0);
    CHECK(r.p_blocked[i] <= 1.0);
    CHECK(r.p_blocked[i] == double(r.blocked[i]) / r.shots[i]);
  }
}

}  // namespace

TEST_CASE("kind names round-trip") {
  for (Kind k : {Kind::kRabiChevron, Kind::kRamsey, Kind::kHahn, Kind::kCpmgPsd, Kind::kRb1q, Kind::kCzFid,
                 Kind::kDcz, Kind::kGlobalRabi, Kind::kStarkCal}) {
    CHECK(kind_from_string(to_string(k)) == k);
    CHECK_FALSE(headline_metric(k).empty());
  }
  CHECK_FALSE(kind_from_string("FOO").has_value());
}

TEST_CASE("axes: defaults, overrides and unknown names") {
  const Setup s = ideal_setup();
  const auto d = default_axes(Kind::kRabiChevron, s, Protocol{});
  REQUIRE(d.size() == 2);
  CHECK(d[0].name == "f_mw");
  CHECK(d[1].name == "t_mw");
  ExperimentSpec e = make_spec(Kind::kRamsey, 1, {Axis{"nonsense", {1.0}}});
  CHECK_THROWS_AS(run(s, e), Error);
  const auto lin = Axis::linspace("x", 0.0, 1.0, 5);
  CHECK(lin.values == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("chevron follows the Rabi formula") {
  const Setup s = ideal_setup();
  const double f0 = f2_idle(s);
  const double omega = s.spin.rabi_per_volt;
  const std::vector<double> det{-2e6, -1e6, -0.3e6, 0.0, 0.3e6, 1e6, 2e6};
  Axis f{"f_mw", {}};
  for (double d : det) f.values.push_back(f0 + d);
  const auto r = run(s, make_spec(Kind::kRabiChevron, 1, {f, Axis::linspace("t_mw", 0.0, 2e-6, 11)}));
  check_shape(r);
  for (std::size_t i = 0; i < det.size(); ++i) {
    for (std::size_t j = 0; j < 11; ++j) {
      const double t = r.axes[1].values[j];
      const double w = std::hypot(omega, det[i]);
      const double want = omega * omega / (w * w) * std::pow(std::sin(kPi * w * t), 2);
      // the far-detuned drive on qubit 1 enters at the (omega / 100 MHz)^2 level
      CHECK(std::abs(r.p_model[i * 11 + j] - want) < 1e-3);
    }
  }
  for (std::size_t j = 0; j < 11; ++j) {
    CHECK(std::abs(r.p_model[0 * 11 + j] - r.p_model[6 * 11 + j]) < 1e-3);
    CHECK(r.p_model[5 * 11 + j] <= 0.5 + 1e-3);  // detuning = Omega caps the flip at 1/2
  }
  const auto pi = run(s, make_spec(Kind::kRabiChevron, 1, {Axis{"f_mw", {f0}}, Axis{"t_mw", {0.5 / omega}}}));
  CHECK(pi.p_model[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("Ramsey without noise reports a lower bound") {
  const Setup s = ideal_setup();
  const auto r = run(s, make_spec(Kind::kRamsey, 50, {Axis::linspace("t_wait", 0.0, 5e-6, 51)}));
  check_shape(r);
  CHECK(r.fit_value("lower_bound") == 1.0);
  CHECK(r.fit_value("t2_star_s") == doctest::Approx(5e-6));
}

TEST_CASE("Ramsey T2* scales inversely with the quasi-static spread") {
  Setup s = ideal_setup();
  s.noise.sigma_f2 = 100e3;
  ExperimentSpec e = make_spec(Kind::kRamsey, 4000, {Axis::linspace("t_wait", 0.0, 6e-6, 81)});
  e.protocol.ramsey_detuning = 2e6;
  const double t1 = run(s, e).fit_value("t2_star_s");
  s.noise.sigma_f2 = 200e3;
  e.axes = {Axis::linspace("t_wait", 0.0, 3e-6, 81)};
  e.protocol.ramsey_detuning = 4e6;
  const double t2 = run(s, e).fit_value("t2_star_s");
  CHECK(t1 == doctest::Approx(std::sqrt(2.0) / (2 * kPi * 100e3)).epsilon(0.05));
  CHECK(t1 / t2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("echo refocuses quasi-static noise") {
  Setup s = ideal_setup();
  s.noise.sigma_f2 = 100e3;
  const auto hahn = run(s, make_spec(Kind::kHahn, 200, {Axis::linspace("t_total", 0.0, 40e-6, 21)}));
  CHECK(hahn.fit_value("lower_bound") == 1.0);
  CHECK(hahn.fit_value("t2_hahn_s") == doctest::Approx(40e-6));
}

TEST_CASE("CPMG without decay is InsufficientDecay") {
  const Setup s = ideal_setup();
  const ExperimentSpec e =
      make_spec(Kind::kCpmgPsd, 20, {Axis{"n_pulses", {1, 2}}, Axis::linspace("t_total", 0, 1e-4, 11)});
  try {
    run(s, e);
    FAIL("expected InsufficientDecay");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kInsufficientDecay);
  }
}

TEST_CASE("CPMG recovers a white PSD") {
  Setup s = ideal_setup();
  s.noise.s_white_0 = 2000.0;  // t_decay = 2 / ((2 pi)^2 S) ~ 25 us
  const ExperimentSpec e = make_spec(Kind::kCpmgPsd, 1000,
                                     {Axis{"n_pulses", {1, 4, 16}}, Axis::linspace("t_total", 0, 100e-6, 26)});
  const auto r = run(s, e);
  const auto& psd = r.series.at("psd_hz2_per_hz");
  const auto& f = r.series.at("f_hz");
  REQUIRE(psd.size() == 3);
  for (std::size_t i = 0; i < psd.size(); ++i) {
    CHECK(psd[i] == doctest::Approx(2000.0).epsilon(0.2));
    if (i > 0) CHECK(f[i] > f[i - 1]);
  }
}

TEST_CASE("Clifford table") {
  const auto& table = clifford_table();
  REQUIRE(table.size() == 24);
  CHECK(clifford_generators().size() == 6);
  std::set<int> seen;
  for (const auto& a : table) {
    for (const auto& b : table) {
      const int k = clifford_index(a.unitary * b.unitary);
      CHECK(k >= 0);
      seen.insert(k);
    }
  }
  CHECK(seen.size() == 24);
  // compiled generator strings reproduce the element
  for (std::size_t i = 0; i < table.size(); ++i) {
    physics::Mat2 u = physics::Mat2::Identity();
    for (int g : table[i].generators) u = clifford_generators()[std::size_t(g)] * u;
    CHECK(clifford_index(u) == int(i));
  }
  CHECK(clifford_index(physics::rotation(kPi / 3, 0.0)) == -1);
}

TEST_CASE("RB identity and depolarizing decay") {
  Setup s = ideal_setup();
  ExperimentSpec e = make_spec(Kind::kRb1q, 200, {Axis{"m", {1, 20, 50, 100, 200}}});
  e.protocol.rb_randomizations = 5;
  const auto clean = run(s, e);
  CHECK(clean.fit_value("fidelity") >= 0.9999);

  e.protocol.rb_depolarizing = 0.02;
  e.shots = 4000;
  e.axes = {Axis{"m", {1, 10, 25, 50, 100}}};
  const auto dep = run(s, e);
  CHECK(std::abs(dep.fit_value("rb.r") - 0.98) < 0.02 * 0.02);
}

TEST_CASE("exchange oscillation frequency tracks J") {
  Setup s = ideal_setup();
  s.controller.tau_leak = std::numeric_limits<double>::infinity();
  s.spin.j0 = 1e6;
  const double hold = s.spin.vj_on - 0.1;  // HIGH = hold + 100 mV = onset
  ExperimentSpec e = make_spec(Kind::kDcz, 2000, {Axis{"v_hold", {hold}}, Axis::linspace("t_ex", 0.0, 4e-6, 81)});
  const auto r = run(s, e);
  const double j = r.fit_value("row0.j_nominal_hz");
  CHECK(1.0 / r.fit_value("period_s") == doctest::Approx(j).epsilon(0.01));
  s.spin.j0 = 2e6;
  const auto r2 = run(s, e);
  CHECK(r2.fit_value("f") / r.fit_value("f") == doctest::Approx(2.0).epsilon(0.01));
  // without the echo the beat picks up the second-order Zeeman-exchange mixing
  e.kind = Kind::kCzFid;
  const auto fid = run(s, e);
  const double v_high = j_levels(s.controller, hold).high;
  const double dez = s.spin.qubit_frequency(1, v_high) - s.spin.qubit_frequency(2, v_high);
  const double j2 = s.spin.exchange(v_high);
  CHECK(fid.fit_value("f") == doctest::Approx(j2 + std::hypot(dez, j2) - dez).epsilon(0.01));
}

TEST_CASE("below the exchange onset there is no oscillation") {
  const Setup s = ideal_setup();
  const auto r = run(s, make_spec(Kind::kDcz, 1, {Axis{"v_hold", {1.0}}, Axis::linspace("t_ex", 0.0, 4e-6, 21)}));
  const auto [lo, hi] = std::minmax_element(r.p_model.begin(), r.p_model.end());
  CHECK(*hi - *lo < 1e-6);
  CHECK(r.fit.find("period_s") == r.fit.end());
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("RT and CRYO_CMOS paths agree bit for bit without leakage") {
  Setup s;
  s.controller.tau_leak = std::numeric_limits<double>::infinity();
  s.noise.sigma_f1 = s.noise.sigma_f2 = 50e3;
  s.noise.sigma_j_frac = 0.05;
  s.noise.s_white_0 = 300;
  for (Kind k : {Kind::kCzFid, Kind::kRamsey, Kind::kGlobalRabi}) {
    ExperimentSpec e = make_spec(k, 300);
    if (k == Kind::kCzFid) e.axes = {Axis{"v_hold", {1.30}}, Axis::linspace("t_ex", 0.0, 2e-6, 11)};
    if (k == Kind::kRamsey) e.axes = {Axis::linspace("t_wait", 0.0, 5e-6, 11)};
    if (k == Kind::kGlobalRabi) e.axes = {Axis{"f_mw", {s.spin.f2_0 + 0.1e6}}, Axis::linspace("t_pulse", 0.0, 3e-6, 11)};
    e.control_path = ControlPath::kRt;
    const auto rt = run(s, e);
    e.control_path = ControlPath::kCryoCmos;
    const auto cmos = run(s, e);
    CHECK(rt.p_blocked == cmos.p_blocked);
    CHECK(rt.p_model == cmos.p_model);
  }
}

TEST_CASE("CRYO_CMOS realization has exactly two J levels") {
  const Setup s;
  std::vector<LevelStep> steps;
  for (int i = 0; i < 6; ++i) {
    LevelSegment seg;
    seg.duration = 0.3e-6 * (i + 1);
    seg.high = i % 2 == 1;
    seg.stage = i == 5 ? physics::DetuningStage::kReadPsb : physics::DetuningStage::kSep13;
    steps.emplace_back(seg);
  }
  const auto sched = realize(steps, ControlPath::kCryoCmos, s.controller, 1.30);
  // the locked charge leaks by ~1e-13 V over the sequence, so group at 1 uV
  std::vector<double> levels;
  for (const auto& st : sched.steps) {
    const auto* seg = std::get_if<physics::Segment>(&st);
    if (seg == nullptr) continue;
    if (std::none_of(levels.begin(), levels.end(), [&](double v) { return std::abs(v - seg->v_j) < 1e-6; })) {
      levels.push_back(seg->v_j);
    }
  }
  std::sort(levels.begin(), levels.end());
  CHECK(levels.size() == 2);
  const auto lv = j_levels(s.controller, 1.30);
  CHECK(lv.high - lv.low == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(*levels.begin() == doctest::Approx(lv.low).epsilon(1e-9));

  const auto ctl = program_controller(steps, s.controller, 1.30, 0.0);
  int triggers = 0;
  for (const auto& ev : ctl.event_log) triggers += ev.event == "TRIGGER" ? 1 : 0;
  CHECK(triggers == 5);  // one edge per LOW/HIGH boundary
}

TEST_CASE("results are reproducible from (config, seed)") {
  Setup s;
  s.noise.sigma_f2 = 80e3;
  s.noise.s_white_0 = 200;
  ExperimentSpec e = make_spec(Kind::kRamsey, 200, {Axis::linspace("t_wait", 0.0, 5e-6, 21)});
  e.seed = 7;
  const auto a = run(s, e);
  const auto b = run(s, e);
  CHECK(result_json(a) == result_json(b));
  CHECK(result_csv(a) == result_csv(b));
  Setup serial = s;
  serial.parallel = false;
  CHECK(result_csv(run(serial, e)) == result_csv(a));
  e.seed = 8;
  CHECK(run(s, e).p_blocked != a.p_blocked);
}

TEST_CASE("serialization") {
  Setup s;
  s.config_hash = "00000000deadbeef";
  ExperimentSpec e = make_spec(Kind::kRabiChevron, 10, {Axis{"f_mw", {1.385e10, 1.3851e10}}, Axis{"t_mw", {0, 1e-7, 2e-7}}});
  e.seed = 42;
  const auto r = run(s, e);
  const std::string csv = result_csv(r);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "# cmosq 0.1.0 config_hash=00000000deadbeef seed=42");
  std::getline(in, line);
  CHECK(line == "f_mw,t_mw,p_blocked,p_model,blocked,shots");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
  const auto j = nlohmann::json::parse(result_json(r));
  CHECK(j["metadata"]["config_hash"] == "00000000deadbeef");
  CHECK(j["metadata"]["seed"] == 42);
  CHECK(j["kind"] == "RABI_CHEVRON");
}

TEST_CASE("global Rabi: off-resonant tone leaves the qubit alone") {
  const Setup s = ideal_setup();
  ExperimentSpec e = make_spec(Kind::kGlobalRabi, 1, {Axis{"f_mw", {s.spin.f2_0 + 20e6}}, Axis::linspace("t_pulse", 0, 5e-6, 11)});
  const auto r = run(s, e);
  for (double p : r.p_model) CHECK(p > 1.0 - 1e-3);  // T- stays blocked
}

TEST_CASE("Stark calibration on a coarse grid") {
  const Setup s = ideal_setup();
  ExperimentSpec e = make_spec(Kind::kStarkCal, 1000,
                               {Axis{"v_j", {1.17, 1.20, 1.23}}, Axis::linspace("f_mw", s.spin.f2_0 - 4e6, s.spin.f2_0 + 4e6, 161)});
  const auto r = run(s, e);
  CHECK(r.fit_value("stark_slope_hz_per_v") == doctest::Approx(s.spin.alpha2).epsilon(0.01));
}

TEST_CASE("scenario power") {
  const controller::ControllerConfig cfg;
  auto scen = default_scenarios();
  REQUIRE(scen.size() == 4);
  CHECK(scenario_power(cfg, scen[0]) == 0.0);
  CHECK(scenario_power(cfg, scen[1]) == cfg.power.p_digital_base);
  CHECK(scenario_power(cfg, scen[2]) == doctest::Approx(cfg.power.p_digital_base + 1e-12 * 1e6 + 2 * 20e-9));
  CHECK(scenario_power(cfg, oscillator_max()) == doctest::Approx(20e-6 + 60e-6));
  CHECK(scenario_power(cfg, oscillator_off()) == doctest::Approx(20e-6));
  Scenario sc = oscillator_max();
  double prev = 0.0;
  for (int d = 255; d >= 1; d /= 2) {
    sc.divider = d;
    const double p = scenario_power(cfg, sc);
    CHECK(p > prev);
    prev = p;
  }
  Scenario bad;
  bad.locked_cells = 1;
  bad.pulsing_cells = 2;
  CHECK_THROWS_AS(scenario_power(cfg, bad), Error);
}

TEST_CASE("thermal feedback chains power to the noise model") {
  Setup s;
  s.noise.s_white_0 = 300;
  s.electron.direct_coupling = 5000;
  ExperimentSpec e = make_spec(Kind::kRamsey, 100, {Axis::linspace("t_wait", 0.0, 20e-6, 41)});
  const auto rows = run_with_thermal_feedback(s, e, {oscillator_off(), oscillator_max()});
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].thermal.power > rows[0].thermal.power);
  CHECK(rows[1].thermal.t_e > rows[0].thermal.t_e);
  CHECK(rows[0].result.metadata.t_e_k == rows[0].thermal.t_e);
  CHECK(rows[1].osc_frequency == doctest::Approx(60e6));
  CHECK(rows[0].metric == "t2_star_s");
  const std::string csv = thermal_csv(rows, rows[0].result.metadata);
  CHECK(csv.find("osc_max,") != std::string::npos);
}

// Adjacent divider settings change T2* by far less than the fit uncertainty,
// so each step is checked against two combined standard errors and the full
// span must show a strict decrease.
TEST_CASE("shipped config: T2* never increases with oscillator frequency") {
  const auto cfg = config::load_config("configs/default.json");
  ExperimentSpec e = cfg.spec(Kind::kRamsey, 5);
  e.shots = 500;
  e.axes = {Axis::linspace("t_wait", 0.0, 20e-6, 81)};
  std::vector<Scenario> sweep{oscillator_off()};
  for (int d : {255, 64, 16, 4, 2, 1}) {
    Scenario sc = oscillator_max();
    sc.name = "div" + std::to_string(d);
    sc.divider = d;
    sweep.push_back(sc);
  }
  const auto rows = run_with_thermal_feedback(cfg.setup, e, sweep);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].osc_frequency > rows[i - 1].osc_frequency);
    const double se = std::hypot(rows[i].value.stderr_, rows[i - 1].value.stderr_);
    CHECK_MESSAGE(rows[i].value.value <= rows[i - 1].value.value + 2 * se, rows[i].scenario.name);
  }
  CHECK(rows.back().value.value < rows.front().value.value);
  CHECK(rows.back().thermal.t_e > rows.front().thermal.t_e);
}
