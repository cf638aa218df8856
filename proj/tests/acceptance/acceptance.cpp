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

// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed
// here and printed with each measurement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cmosq/config.hpp"
#include "cmosq/controller.hpp"
#include "cmosq/experiments.hpp"
#include "cmosq/physics.hpp"
#include "cmosq/thermal.hpp"
#include "oracles/expm.hpp"

using namespace cmosq;
using namespace cmosq::experiments;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kConfigPath = "configs/default.json";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

// Fit value, or an exception carrying the result's notes.
double need(const ExperimentResult& r, const std::string& key) {
  if (r.fit.count(key) != 0) return r.fit.at(key).value;
  std::string msg = "no " + key;
  for (const auto& n : r.notes) msg += "; " + n;
  throw std::runtime_error(msg);
}

Setup clean_setup() {
  Setup s;
  s.spin.spam = {1.0, 1.0, 1.0};
  return s;
}

// 1. capacitive divider
Outcome divider() {
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    controller::ClfgCell c;
    c.c_pulse = 1e-15 + 500e-15 * u(rng);
    c.c_parasitic = 1e-15 + 5e-12 * u(rng);
    c.v_low = -1.0 + 2.0 * u(rng);
    c.v_high = c.v_low + 0.01 + 3.0 * u(rng);
    c.v_hold = c.v_locked = 2.0 * u(rng);
    c.tau_leak = std::numeric_limits<double>::infinity();
    c.locked = c.armed = true;
    c.t_locked_at = 1e-6 * u(rng);
    const double want = c.c_pulse / (c.c_parasitic + c.c_pulse) * (c.v_high - c.v_low);
    c.pulse_level = controller::PulseLevel::kLow;
    const double lo = controller::cell_output(c, c.t_locked_at);
    c.pulse_level = controller::PulseLevel::kHigh;
    const double hi = controller::cell_output(c, c.t_locked_at);
    worst = std::max(worst, std::abs((hi - lo) - want) / want);
    worst = std::max(worst, std::abs(controller::pulse_amplitude(c) - want) / want);
  }
  const auto cfg = config::load_config(kConfigPath);
  const auto state = controller::make_controller(cfg.setup.controller);
  const double shipped = controller::pulse_amplitude(state.cells[0]);
  const bool pass = worst <= kTol && within_rel(shipped, 0.100, kTol);
  return {pass, fmt("max rel err %.2e over 1000 cells (tol %.0e); shipped step %.15f V", worst, kTol, shipped)};
}

// 2. quasi-static Ramsey
Outcome ramsey_law() {
  constexpr double kTol = 0.05;
  Setup s = clean_setup();
  s.noise.sigma_f2 = 100e3;
  ExperimentSpec e;
  e.kind = Kind::kRamsey;
  e.shots = 20000;
  e.seed = 2;
  e.protocol.ramsey_detuning = 2e6;
  e.axes = {Axis::linspace("t_wait", 0.0, 6e-6, 121)};
  const auto t0 = std::chrono::steady_clock::now();
  const double t2 = need(run(s, e), "t2_star_s");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double want = std::sqrt(2.0) / (2 * kPi * 100e3);
  return {within_rel(t2, want, kTol) && secs < 30.0,
          fmt("T2* = %.4f us, oracle %.4f us (tol %.0f%%), %.1f s", t2 * 1e6, want * 1e6, kTol * 100, secs)};
}

// 3. propagator against the brute-force exponential
Outcome propagator() {
  constexpr double kTol = 1e-9;
  const physics::SpinSystemParams p;
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    physics::Segment seg;
    seg.duration = 2e-6 * u(rng) + 1e-9;
    seg.v_j = i % 2 ? 1.1 + 0.1 * u(rng) : 1.3 + 0.12 * u(rng);
    seg.mw = {u(rng) < 0.7, p.f2_0 + 10e6 * (u(rng) - 0.5), u(rng), 2 * kPi * u(rng)};
    const physics::ShotNoise shot{5e4 * (u(rng) - 0.5), 5e4 * (u(rng) - 0.5), 0.05 * (u(rng) - 0.5)};
    const double f = seg.mw.f_mw;
    const auto h = oracle::hamiltonian(p.qubit_frequency(1, seg.v_j) + shot.df1 - f,
                                       p.qubit_frequency(2, seg.v_j) + shot.df2 - f,
                                       seg.mw.on ? p.rabi_per_volt * seg.mw.amp : 0.0, seg.mw.phase,
                                       p.exchange(seg.v_j) * (1 + shot.dj_frac));
    const auto ref = oracle::propagator(h, seg.duration);
    worst = std::max(worst, (physics::segment_propagator(p, seg, shot) - ref).cwiseAbs().maxCoeff());
  }
  return {worst <= kTol, fmt("max-norm err %.2e over 1000 segments (tol %.0e)", worst, kTol)};
}

// 4. randomized benchmarking
Outcome rb() {
  constexpr double kFloor = 0.9999, kTol = 0.002;
  Setup s = clean_setup();
  ExperimentSpec e;
  e.kind = Kind::kRb1q;
  e.shots = 200;
  e.seed = 4;
  e.protocol.rb_randomizations = 10;
  const double f_clean = need(run(s, e), "fidelity");
  e.protocol.rb_depolarizing = 0.01;
  e.protocol.rb_randomizations = 20;
  e.shots = 2000;
  e.axes = {Axis{"m", {1, 10, 25, 50, 100, 200}}};
  const double r = need(run(s, e), "rb.r");
  return {f_clean >= kFloor && std::abs(r - 0.990) <= kTol,
          fmt("noiseless F = %.6f (>= %.4f); p=0.01 gives r = %.5f (0.990 +- %.3f)", f_clean, kFloor, r, kTol)};
}

// 5. DCZ oscillation frequency
Outcome dcz() {
  constexpr double kTol = 0.01;
  Setup s = clean_setup();
  s.controller.tau_leak = std::numeric_limits<double>::infinity();
  s.spin.j0 = 1e6;
  ExperimentSpec e;
  e.kind = Kind::kDcz;
  e.shots = 4000;
  e.seed = 5;
  // HIGH = hold + 100 mV lands on the exchange onset, where J = j0
  e.axes = {Axis{"v_hold", {s.spin.vj_on - 0.1}}, Axis::linspace("t_ex", 0.0, 4e-6, 81)};
  const auto r1 = run(s, e);
  const double period = need(r1, "period_s");
  const double j_high = need(r1, "row0.j_nominal_hz");
  s.spin.j0 = 2e6;
  const double f2 = need(run(s, e), "f");
  const double ratio = f2 * period;
  return {within_rel(period, 1e-6, kTol) && within_rel(ratio, 2.0, kTol),
          fmt("J(HIGH) = %.6f MHz, period %.5f us (1 us +- 1%%); 2J/J frequency ratio %.5f (2 +- 1%%)", j_high * 1e-6,
              period * 1e6, ratio)};
}

// 6. echo filtering of quasi-static noise
Outcome echo() {
  Setup s = clean_setup();
  // Quasi-static Zeeman noise only. An exchange spread is not refocused by
  // the DCZ echo since the exchange phase is the signal.
  s.noise.sigma_f1 = s.noise.sigma_f2 = 100e3;
  s.controller.tau_leak = std::numeric_limits<double>::infinity();
  ExperimentSpec e;
  e.shots = 2000;
  e.seed = 6;
  e.kind = Kind::kRamsey;
  e.protocol.ramsey_detuning = 2e6;
  e.axes = {Axis::linspace("t_wait", 0.0, 6e-6, 81)};
  const double t2 = need(run(s, e), "t2_star_s");
  e.kind = Kind::kHahn;
  e.axes = {Axis::linspace("t_total", 0.0, 60e-6, 31)};
  const auto hahn = run(s, e);
  const double th = need(hahn, "t2_hahn_s");
  const bool bound = need(hahn, "lower_bound") == 1.0;

  e.kind = Kind::kCzFid;
  e.axes = {Axis{"v_hold", {1.30}}, Axis::linspace("t_ex", 0.0, 6e-6, 121)};
  const auto fid = run(s, e);
  const double t_cz = need(fid, "t2_star_cz_s");
  e.kind = Kind::kDcz;
  e.axes = {Axis{"v_hold", {1.30}}, Axis::linspace("t_ex", 0.0, 60e-6, 121)};
  const auto dcz_r = run(s, e);
  const double t_dcz = need(dcz_r, "t2_exchange_s");
  const bool dcz_bound = need(dcz_r, "lower_bound") == 1.0;
  const double q1 = th / t2, q2 = t_dcz / t_cz;
  return {q1 >= 10.0 && q2 >= 5.0,
          fmt("T2hahn/T2* = %s%.1f (>= 10); DCZ/CZ-FID envelope = %s%.1f (>= 5)", bound ? ">=" : "", q1,
              dcz_bound ? ">=" : "", q2)};
}

// 7. Stark calibration and global pi/2 time
Outcome stark() {
  constexpr double kTol = 0.01;
  Setup s = clean_setup();
  ExperimentSpec e;
  e.kind = Kind::kStarkCal;
  e.shots = 1000;
  e.seed = 7;
  const double slope = need(run(s, e), "stark_slope_hz_per_v");
  e.kind = Kind::kGlobalRabi;
  e.shots = 2000;
  const auto g = run(s, e);
  const double tp = need(g, "t_pi_half_s");
  const double omega = s.spin.rabi_per_volt * e.protocol.global_amp;
  return {within_rel(slope, 100e6, kTol) && within_rel(tp, 1.034e-6, kTol),
          fmt("slope %.4f MHz/V (100 +- 1%%); Omega %.1f kHz, t_pi/2 = %.4f us (1.034 +- 1%%)", slope * 1e-6,
              omega * 1e-3, tp * 1e6)};
}

// 8. thermal anchors
Outcome thermal_anchors() {
  const auto cfg = config::load_config(kConfigPath);
  thermal::FridgeModel fridge = cfg.setup.fridge;
  fridge.p_parasitic = 0.0;
  const double t0 = thermal::mixing_chamber_temp(fridge, 0.0);
  const double pc = thermal::cooling_power(cfg.setup.fridge, 0.1);
  const double te = thermal::electron_temp(cfg.setup.electron, 7e-3);
  return {t0 == 7e-3 && within_rel(pc, 1e-3, 0.005) && within_rel(te, 0.85, 0.01),
          fmt("T_mxc(0) = %.9g K (7 mK exact); P_cool(100 mK) = %.6f mW (1 +- 0.5%%); T_e(7 mK) = %.5f K (0.85 +- 1%%)",
              t0, pc * 1e3, te)};
}

// 9. calibration reproduction with the shipped config
Outcome degradation() {
  const auto cfg = config::load_config(kConfigPath);
  const std::vector<Scenario> pair{oscillator_off(), oscillator_max()};
  const auto cz = run_with_thermal_feedback(cfg.setup, cfg.spec(Kind::kCzFid, 9), pair);
  const double ratio = cz[1].value.value / cz[0].value.value;
  const ExperimentSpec rb = cfg.spec(Kind::kRb1q, 9);
  const auto f = run_with_thermal_feedback(cfg.setup, rb, pair);
  const double delta = f[0].value.value - f[1].value.value;
  return {std::abs(ratio - 0.80) <= 0.10 && delta >= 0.0 && delta <= 0.002,
          fmt("[calibration reproduction] T_e %.3f -> %.3f K; T2*,CZ %.3f -> %.3f us, ratio %.3f (0.80 +- 0.10); "
              "RB F %.5f -> %.5f, delta %.3f%% (0..0.2%%)",
              cz[0].thermal.t_e, cz[1].thermal.t_e, cz[0].value.value * 1e6, cz[1].value.value * 1e6, ratio,
              f[0].value.value, f[1].value.value, delta * 100)};
}

// 10. CPMG noise spectroscopy
Outcome cpmg() {
  Setup s = clean_setup();
  s.noise.s_white_0 = 2000.0;
  ExperimentSpec e;
  e.kind = Kind::kCpmgPsd;
  e.shots = 1000;
  e.seed = 10;
  e.axes = {Axis{"n_pulses", {1, 2, 4, 8, 16}}, Axis::linspace("t_total", 0.0, 100e-6, 26)};
  const auto r = run(s, e);
  const auto& f = r.series.at("f_hz");
  const auto& psd = r.series.at("psd_hz2_per_hz");
  const auto [pmin, pmax] = std::minmax_element(psd.begin(), psd.end());
  const auto [fmin, fmax] = std::minmax_element(f.begin(), f.end());
  const double span = *fmax / *fmin, spread = *pmax / *pmin;
  return {span >= 10.0 && spread <= 2.0,
          fmt("filter band %.3g..%.3g Hz (x%.1f, >= 10); PSD %.4g..%.4g Hz^2/Hz, max/min %.3f (<= 2), injected 2000",
              *fmin, *fmax, span, *pmin, *pmax, spread)};
}

// 11. controller determinism and charge-lock isolation
Outcome controller_checks() {
  const auto cfg = config::load_config(kConfigPath);
  std::ifstream script("scripts/lock_pulse.txt");
  const auto inputs = controller::parse_script(script);
  auto replay_log = [&] {
    auto st = controller::make_controller(cfg.setup.controller);
    controller::replay(st, inputs);
    std::string log;
    for (const auto& ev : st.event_log) log += controller::event_to_json(ev) + "\n";
    return log;
  };
  const std::string log = replay_log();
  std::ifstream golden_in("tests/golden/lock_pulse_events.jsonl");
  std::stringstream golden;
  golden << golden_in.rdbuf();
  const bool golden_ok = golden_in.good() || golden_in.eof();
  const bool same = golden_ok && log == golden.str() && log == replay_log();

  auto st = controller::make_controller(cfg.setup.controller);
  controller::apply(st, controller::make_set_hold(0, 1.2), 0.0);
  controller::apply(st, controller::make_lock(0), 1e-6);
  const double v0 = controller::cell_output(st.cells[0], 1e-6);
  controller::apply(st, controller::make_set_hold(0, 0.4), 2e-6);
  const double hour = 3600.0;
  const double v1 = controller::cell_output(st.cells[0], 1e-6 + hour);
  const double bound = std::abs(v0) * (1.0 - std::exp(-hour / cfg.setup.controller.tau_leak));
  const double drift = std::abs(v1 - v0);
  const bool iso = drift <= bound * (1 + 1e-9) + 1e-15 && drift < 1e-3;
  return {same && iso, fmt("golden log %s (%zu bytes); SET_HOLD after LOCK: drift over 1 h %.4f mV "
                           "(leakage bound %.4f mV, < 1 mV)",
                           same ? "matches" : "DIFFERS", log.size(), drift * 1e3, bound * 1e3)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"pulse divider exactness", divider},
      {"quasi-static Ramsey law", ramsey_law},
      {"propagator oracle equivalence", propagator},
      {"RB identity and depolarizing decay", rb},
      {"DCZ frequency", dcz},
      {"echo filtering", echo},
      {"Stark calibration", stark},
      {"thermal anchors", thermal_anchors},
      {"calibrated degradation reproduction", degradation},
      {"CPMG PSD recovery", cpmg},
      {"controller determinism and isolation", controller_checks},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
