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

#include "cmosq/error.hpp"
#include "cmosq/version.hpp"
#include "common.hpp"

namespace cmosq::experiments {

namespace {

constexpr const char* kKindNames[] = {"RABI_CHEVRON", "RAMSEY", "HAHN",        "CPMG_PSD",   "RB_1Q",
                                      "CZ_FID",       "DCZ",    "GLOBAL_RABI", "STARK_CAL"};

int j_cell(const controller::ControllerConfig& cfg) {
  const auto it = cfg.connections.find("J");
  if (it == cfg.connections.end()) throw Error(ErrorCode::kInvalidArgument, "controller has no J gate connection");
  return it->second;
}

}  // namespace

std::string to_string(Kind k) { return kKindNames[static_cast<int>(k)]; }

std::optional<Kind> kind_from_string(const std::string& s) {
  for (int i = 0; i < 9; ++i) {
    if (s == kKindNames[i]) return static_cast<Kind>(i);
  }
  return std::nullopt;
}

std::string to_string(ControlPath p) { return p == ControlPath::kRt ? "RT" : "CRYO_CMOS"; }

Axis Axis::linspace(std::string name, double lo, double hi, int n) {
  Axis a{std::move(name), {}};
  if (n == 1) {
    a.values.push_back(lo);
    return a;
  }
  for (int i = 0; i < n; ++i) a.values.push_back(lo + (hi - lo) * double(i) / double(n - 1));
  return a;
}

double ExperimentResult::fit_value(const std::string& name) const {
  const auto it = fit.find(name);
  if (it == fit.end()) throw Error(ErrorCode::kInvalidArgument, "result has no fit value " + name);
  return it->second.value;
}

double nominal_frequency(const physics::SpinSystemParams& spin, int qubit, double v_j) {
  return spin.qubit_frequency(qubit, v_j);
}

JLevels j_levels(const controller::ControllerConfig& cfg, double v_hold) {
  controller::ClfgCell cell;
  cell.c_pulse = cfg.c_pulse;
  cell.c_parasitic = cfg.c_parasitic;
  cell.v_high = controller::level_code(cfg.v_high) * controller::kLevelVoltsPerCode;
  cell.v_low = controller::level_code(cfg.v_low) * controller::kLevelVoltsPerCode;
  JLevels l;
  l.low = controller::hold_code(v_hold) * controller::kHoldVoltsPerCode;
  l.high = l.low + controller::pulse_amplitude(cell);
  return l;
}

std::vector<Axis> default_axes(Kind kind, const Setup& setup, const Protocol& p) {
  const auto& spin = setup.spin;
  switch (kind) {
    case Kind::kRabiChevron: {
      const double f0 = nominal_frequency(spin, p.qubit, j_levels(setup.controller, p.v_idle).low);
      return {Axis::linspace("f_mw", f0 - 3e6, f0 + 3e6, 41), Axis::linspace("t_mw", 0.0, 2e-6, 41)};
    }
    case Kind::kRamsey: return {Axis::linspace("t_wait", 0.0, 20e-6, 161)};
    case Kind::kHahn: return {Axis::linspace("t_total", 0.0, 100e-6, 41)};
    case Kind::kCpmgPsd: {
      Axis n{"n_pulses", {}};
      for (int k : p.cpmg_n) n.values.push_back(k);
      return {n, Axis::linspace("t_total", 0.0, 400e-6, 41)};
    }
    case Kind::kRb1q: {
      Axis m{"m", {}};
      for (int k : p.rb_lengths) m.values.push_back(k);
      return {m};
    }
    case Kind::kCzFid:
    case Kind::kDcz: return {Axis{"v_hold", {p.v_exchange_low}}, Axis::linspace("t_ex", 0.0, 5e-6, 101)};
    case Kind::kGlobalRabi: {
      const auto lv = j_levels(setup.controller, p.v_global_low);
      const double f0 = p.global_f_mw.value_or(nominal_frequency(spin, 2, lv.high));
      return {Axis::linspace("f_mw", f0 - 1e6, f0 + 1e6, 21), Axis::linspace("t_pulse", 0.0, 5e-6, 51)};
    }
    case Kind::kStarkCal:
      return {Axis::linspace("v_j", 1.16, 1.24, 5), Axis::linspace("f_mw", spin.f2_0 - 6e6, spin.f2_0 + 6e6, 481)};
  }
  return {};
}

controller::ControllerState program_controller(const std::vector<LevelStep>& steps,
                                               const controller::ControllerConfig& cfg, double v_hold,
                                               double t_start) {
  using namespace controller;
  const int cell = j_cell(cfg);
  ControllerState st = make_controller(cfg);
  auto must = [&](const ControllerInput& in, double t) {
    const auto out = apply(st, in, t);
    if (!out.accepted) throw Error(ErrorCode::kIllegalTransition, "controller rejected setup input: " + out.reason);
  };
  must(make_set_hold(cell, v_hold), 0.0);
  must(make_set_levels(cell, cfg.v_high, cfg.v_low), 0.0);
  must(make_lock(cell), 0.5 * t_start);
  must(make_arm(cell), 0.5 * t_start);
  bool high = false;
  double t = t_start;
  for (const auto& step : steps) {
    const auto* seg = std::get_if<LevelSegment>(&step);
    if (!seg) continue;
    if (seg->high != high) {
      must(TriggerEdge{}, t);
      high = seg->high;
    }
    t += seg->duration;
  }
  return st;
}

physics::PulseSchedule realize(const std::vector<LevelStep>& steps, ControlPath path,
                               const controller::ControllerConfig& cfg, double v_hold) {
  physics::PulseSchedule out;
  out.steps.reserve(steps.size());
  auto push_other = [&](const LevelStep& s) {
    if (const auto* g = std::get_if<physics::InstantGate>(&s)) {
      out.steps.emplace_back(*g);
    } else if (const auto* d = std::get_if<physics::Depolarize>(&s)) {
      out.steps.emplace_back(*d);
    }
  };

  if (path == ControlPath::kRt) {
    const auto lv = j_levels(cfg, v_hold);
    for (const auto& s : steps) {
      if (const auto* seg = std::get_if<LevelSegment>(&s)) {
        if (!(seg->duration > 0.0)) continue;
        out.steps.emplace_back(physics::Segment{seg->duration, seg->high ? lv.high : lv.low, seg->mw, seg->stage});
      } else {
        push_other(s);
      }
    }
    return out;
  }

  // Lock well before the sequence so the setup commands precede it.
  constexpr double kStart = 10e-6;
  const auto st = program_controller(steps, cfg, v_hold, kStart);
  const int cell = j_cell(cfg);
  const auto trace = controller::cell_segments(st, cell, kStart, kStart + 1.0 + 2.0 * kStart);
  std::size_t k = 0;
  double t = kStart;
  for (const auto& s : steps) {
    const auto* seg = std::get_if<LevelSegment>(&s);
    if (!seg) {
      push_other(s);
      continue;
    }
    if (!(seg->duration > 0.0)) continue;
    while (k + 1 < trace.size() && trace[k + 1].t_start <= t) ++k;
    const double v = controller::cell_output(trace[k].cell, t);
    out.steps.emplace_back(physics::Segment{seg->duration, v, seg->mw, seg->stage});
    t += seg->duration;
  }
  return out;
}

ExperimentResult run(const Setup& setup, const ExperimentSpec& spec) {
  switch (spec.kind) {
    case Kind::kRabiChevron: return run_rabi_chevron(setup, spec);
    case Kind::kRamsey: return run_ramsey(setup, spec);
    case Kind::kHahn: return run_hahn(setup, spec);
    case Kind::kCpmgPsd: return run_cpmg_psd(setup, spec);
    case Kind::kRb1q: return run_rb_1q(setup, spec);
    case Kind::kCzFid: return run_cz_fid(setup, spec);
    case Kind::kDcz: return run_dcz(setup, spec);
    case Kind::kGlobalRabi: return run_global_rabi(setup, spec);
    case Kind::kStarkCal: return run_stark_cal(setup, spec);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown experiment kind");
}

std::string headline_metric(Kind kind) {
  switch (kind) {
    case Kind::kRabiChevron: return "rabi_hz";
    case Kind::kRamsey: return "t2_star_s";
    case Kind::kHahn: return "t2_hahn_s";
    case Kind::kCpmgPsd: return "psd_mean_hz2_per_hz";
    case Kind::kRb1q: return "fidelity";
    case Kind::kCzFid: return "t2_star_cz_s";
    case Kind::kDcz: return "t2_exchange_s";
    case Kind::kGlobalRabi: return "t_pi_half_s";
    case Kind::kStarkCal: return "stark_slope_hz_per_v";
  }
  return "";
}

namespace detail {

const Axis& find_axis(const std::vector<Axis>& axes, const std::string& name) {
  for (const auto& a : axes) {
    if (a.name == name) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "experiment needs an axis named " + name);
}

std::vector<Axis> resolve_axes(const Setup& setup, const ExperimentSpec& spec) {
  auto defaults = default_axes(spec.kind, setup, spec.protocol);
  if (spec.axes.empty()) return defaults;
  // Explicit axes replace defaults by name; unknown names are an error.
  for (const auto& a : spec.axes) {
    auto it = std::find_if(defaults.begin(), defaults.end(), [&](const Axis& d) { return d.name == a.name; });
    if (it == defaults.end()) {
      throw Error(ErrorCode::kInvalidArgument, "axis " + a.name + " is not used by " + to_string(spec.kind));
    }
    if (a.values.empty()) throw Error(ErrorCode::kInvalidArgument, "axis " + a.name + " is empty");
    *it = a;
  }
  return defaults;
}

ExperimentResult start_result(const Setup& setup, const ExperimentSpec& spec, std::vector<Axis> axes) {
  if (spec.shots < 1) throw Error(ErrorCode::kInvalidArgument, "shots must be >= 1");
  ExperimentResult r;
  r.kind = spec.kind;
  r.control_path = spec.control_path;
  r.axes = std::move(axes);
  r.metadata.config_hash = setup.config_hash;
  r.metadata.seed = spec.seed;
  r.metadata.version = kVersion;
  r.metadata.t_e_k = setup.noise.t_e;
  return r;
}

std::vector<shots::PointStats> run_jobs(const Setup& setup, const std::vector<shots::PointJob>& jobs) {
  return setup.parallel ? shots::run_points_parallel(jobs, setup.spin, setup.threads)
                        : shots::run_points_serial(jobs, setup.spin);
}

void run_and_fill(const Setup& setup, const std::vector<shots::PointJob>& jobs, ExperimentResult& r) {
  for (const auto& s : run_jobs(setup, jobs)) {
    r.p_blocked.push_back(s.p_blocked());
    r.p_model.push_back(s.p_model);
    r.blocked.push_back(s.blocked);
    r.shots.push_back(s.shots);
  }
}

shots::PointJob make_job(const Setup& setup, const ExperimentSpec& spec, physics::TwoSpinState init,
                         physics::PulseSchedule schedule, std::uint64_t stream) {
  shots::PointJob j;
  j.init = std::move(init);
  j.schedule = std::move(schedule);
  j.noise = setup.noise;
  j.noise.rng_seed = spec.seed;
  j.stream = stream;
  j.shots = spec.shots;
  return j;
}

physics::InstantGate gate_on(int qubit, const physics::Mat2& u) {
  physics::InstantGate g;
  (qubit == 1 ? g.q1 : g.q2) = u;
  return g;
}

LevelSegment idle(double duration, bool high, double f_frame, physics::DetuningStage stage) {
  LevelSegment s;
  s.duration = duration;
  s.high = high;
  s.mw.f_mw = f_frame;
  s.stage = stage;
  return s;
}

LevelSegment drive(double duration, bool high, double f_mw, double amp, double phase) {
  LevelSegment s = idle(duration, high, f_mw);
  s.mw.on = true;
  s.mw.amp = amp;
  s.mw.phase = phase;
  return s;
}

std::vector<LevelStep> singlet_wrap(const Protocol& p, double f_frame, const std::vector<LevelStep>& body) {
  std::vector<LevelStep> steps;
  steps.reserve(body.size() + 2);
  steps.emplace_back(idle(p.t_init, false, f_frame, physics::DetuningStage::kInit04));
  steps.insert(steps.end(), body.begin(), body.end());
  steps.emplace_back(idle(p.t_read, false, f_frame, physics::DetuningStage::kReadPsb));
  return steps;
}

void append_rotation(std::vector<LevelStep>& steps, const Setup& setup, const Protocol& p, int qubit, double theta,
                     double phi, double f_frame, bool high, bool ideal, double amp) {
  (void)p;
  if (ideal) {
    steps.emplace_back(gate_on(qubit, physics::rotation(theta, phi)));
    return;
  }
  const double omega = setup.spin.rabi_per_volt * amp;
  if (!(omega > 0.0)) throw Error(ErrorCode::kInvalidArgument, "finite pulses need a positive Rabi frequency");
  steps.emplace_back(drive(theta / (kTwoPi * omega), high, f_frame, amp, phi));
}

void add_fit(ExperimentResult& r, const std::string& prefix, const fitting::FitResult& f) {
  for (std::size_t i = 0; i < f.names.size(); ++i) r.fit[prefix + f.names[i]] = {f.params[i], f.stderrs[i]};
  r.fit[prefix + "residual_norm"] = {f.residual_norm, 0.0};
}

double readout_midpoint(const physics::SpamParams& spam) {
  // Dephased |du>/|dd> mixture is half blocked; the depolarized part is 3/4.
  const double pb = 0.5 * spam.f_prep + 0.75 * (1.0 - spam.f_prep);
  return spam.f_read_t * pb + (1.0 - spam.f_read_s) * (1.0 - pb);
}

}  // namespace detail

}  // namespace cmosq::experiments
