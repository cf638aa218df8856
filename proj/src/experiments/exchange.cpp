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
#include "common.hpp"

namespace cmosq::experiments {

namespace {

constexpr double kPi = 3.141592653589793;
constexpr int kTarget = 1;
constexpr int kControl = 2;

// T- -> X on control -> X/2 on target -> [HIGH t_ex, LOW gap] x 2 -> X/2 on
// target. The echoed variant puts a pi on both qubits in the middle of each
// gap, which cancels the Stark and quasi-static phases of the target while
// keeping the conditional exchange phase.
std::vector<LevelStep> exchange_sequence(const Setup& setup, const Protocol& pr, double f_frame, double t_ex,
                                         bool echo, const JLevels& lv) {
  std::vector<LevelStep> s;
  // Finite pulses are driven at the addressed qubit's LOW-level frequency.
  auto pulse = [&](int q, double theta, double phi) {
    if (pr.ideal_pulses) {
      s.emplace_back(detail::gate_on(q, physics::rotation(theta, phi)));
    } else {
      detail::append_rotation(s, setup, pr, q, theta, phi, nominal_frequency(setup.spin, q, lv.low), false, false,
                              pr.pulse_amp);
    }
  };
  s.emplace_back(detail::idle(pr.t_settle, false, f_frame));
  pulse(kControl, kPi, 0.0);
  pulse(kTarget, kPi / 2, 0.0);
  for (int w = 0; w < 2; ++w) {
    if (t_ex > 0.0) s.emplace_back(detail::idle(t_ex, true, f_frame));
    s.emplace_back(detail::idle(0.5 * pr.t_gap, false, f_frame));
    if (echo && pr.ideal_pulses) {
      physics::InstantGate both;
      both.q1 = physics::rotation(kPi, 0.0);
      both.q2 = physics::rotation(kPi, 0.0);
      s.emplace_back(both);
    } else if (echo) {
      pulse(kTarget, kPi, 0.0);
      pulse(kControl, kPi, 0.0);
    }
    s.emplace_back(detail::idle(0.5 * pr.t_gap, false, f_frame));
  }
  // Target precesses at the Stark offset while HIGH; undo the nominal part.
  double phase = 0.0;
  if (!echo && pr.stark_correction) {
    const double stark = nominal_frequency(setup.spin, kTarget, lv.high) - nominal_frequency(setup.spin, kTarget, lv.low);
    phase = detail::kTwoPi * stark * 2.0 * t_ex;
  }
  pulse(kTarget, kPi / 2, phase);
  s.emplace_back(detail::idle(pr.t_read, false, f_frame, physics::DetuningStage::kReadPsb));
  return s;
}

ExperimentResult run_exchange(const Setup& setup, const ExperimentSpec& spec, bool echo) {
  const auto& pr = spec.protocol;
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& vax = detail::find_axis(r.axes, "v_hold");
  const auto& tax = detail::find_axis(r.axes, "t_ex");
  const auto init = physics::prepare(physics::PrepKind::kTMinus, setup.spin.spam);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double v : vax.values) {
    const auto lv = j_levels(setup.controller, v);
    const double f_frame = nominal_frequency(setup.spin, kTarget, lv.low);
    for (double t : tax.values) {
      const auto steps = exchange_sequence(setup, pr, f_frame, t, echo, lv);
      jobs.push_back(detail::make_job(setup, spec, init, realize(steps, spec.control_path, setup.controller, v),
                                      stream++));
    }
  }
  detail::run_and_fill(setup, jobs, r);

  const std::string metric = echo ? "t2_exchange_s" : "t2_star_cz_s";
  const std::size_t nt = tax.values.size();
  const double t_max = *std::max_element(tax.values.begin(), tax.values.end());
  for (std::size_t i = 0; i < vax.values.size(); ++i) {
    const std::vector<double> y(r.p_blocked.begin() + long(i * nt), r.p_blocked.begin() + long((i + 1) * nt));
    const std::string prefix = "row" + std::to_string(i) + ".";
    const auto lv = j_levels(setup.controller, vax.values[i]);
    r.fit[prefix + "j_nominal_hz"] = {setup.spin.exchange(lv.high), 0.0};
    try {
      const auto f = fitting::fit(fitting::Model::kCz, tax.values, y);
      detail::add_fit(r, prefix, f);
      const double g = f.value("gamma");
      const bool bound = !(g > 0.0) || 1.0 / g > t_max;
      r.fit[prefix + metric] = {bound ? t_max : 1.0 / g, bound ? 0.0 : f.error("gamma") / (g * g)};
      r.fit[prefix + "lower_bound"] = {bound ? 1.0 : 0.0, 0.0};
      r.fit[prefix + "period_s"] = {1.0 / f.value("f"), f.error("f") / (f.value("f") * f.value("f"))};
    } catch (const Error& e) {
      r.notes.push_back(prefix + "fit: " + e.what());
    }
  }
  // Row 0 is the headline.
  for (const char* name : {"f", "period_s", "lower_bound", "p"}) {
    const auto it = r.fit.find(std::string("row0.") + name);
    if (it != r.fit.end()) r.fit[name] = it->second;
  }
  const auto it = r.fit.find("row0." + metric);
  if (it != r.fit.end()) r.fit[metric] = it->second;
  return r;
}

}  // namespace

ExperimentResult run_cz_fid(const Setup& setup, const ExperimentSpec& spec) { return run_exchange(setup, spec, false); }

ExperimentResult run_dcz(const Setup& setup, const ExperimentSpec& spec) { return run_exchange(setup, spec, true); }

ExperimentResult run_global_rabi(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& fax = detail::find_axis(r.axes, "f_mw");
  const auto& tax = detail::find_axis(r.axes, "t_pulse");
  const auto init = physics::prepare(physics::PrepKind::kTMinus, setup.spin.spam);
  const auto lv = j_levels(setup.controller, pr.v_global_low);

  // A continuous tone; the J pulse Stark-shifts qubit 2 into resonance.
  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double f : fax.values) {
    for (double t : tax.values) {
      std::vector<LevelStep> s;
      s.emplace_back(detail::drive(pr.t_settle, false, f, pr.global_amp, 0.0));
      if (t > 0.0) s.emplace_back(detail::drive(t, true, f, pr.global_amp, 0.0));
      s.emplace_back(detail::drive(pr.t_settle, false, f, pr.global_amp, 0.0));
      s.emplace_back(detail::idle(pr.t_read, false, f, physics::DetuningStage::kReadPsb));
      jobs.push_back(detail::make_job(setup, spec, init,
                                      realize(s, spec.control_path, setup.controller, pr.v_global_low), stream++));
    }
  }
  detail::run_and_fill(setup, jobs, r);

  const double f0 = pr.global_f_mw.value_or(nominal_frequency(setup.spin, 2, lv.high));
  std::size_t row = 0;
  for (std::size_t i = 0; i < fax.values.size(); ++i) {
    if (std::abs(fax.values[i] - f0) < std::abs(fax.values[row] - f0)) row = i;
  }
  const std::size_t nt = tax.values.size();
  std::vector<double> flip;
  for (std::size_t j = 0; j < nt; ++j) flip.push_back(1.0 - r.p_blocked[row * nt + j]);
  r.series["flip_resonant_row"] = flip;
  try {
    const auto f = fitting::fit(fitting::Model::kRabi, tax.values, flip);
    detail::add_fit(r, "rabi.", f);
    const double fr = f.value("f");
    r.fit["rabi_hz"] = {fr, f.error("f")};
    r.fit["t_pi_half_s"] = {1.0 / (4.0 * fr), f.error("f") / (4.0 * fr * fr)};
  } catch (const Error& e) {
    r.notes.push_back(std::string("rabi fit: ") + e.what());
  }
  return r;
}

ExperimentResult run_stark_cal(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& vax = detail::find_axis(r.axes, "v_j");
  const auto& fax = detail::find_axis(r.axes, "f_mw");
  const auto init = physics::prepare(physics::PrepKind::kTMinus, setup.spin.spam);
  const double omega = setup.spin.rabi_per_volt * pr.stark_amp;
  if (!(omega > 0.0)) throw Error(ErrorCode::kInvalidArgument, "spectroscopy needs a positive Rabi frequency");
  const double t_pi = 1.0 / (2.0 * omega);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double v : vax.values) {
    for (double f : fax.values) {
      std::vector<LevelStep> s;
      s.emplace_back(detail::idle(pr.t_settle, false, f));
      s.emplace_back(detail::drive(t_pi, false, f, pr.stark_amp, 0.0));
      s.emplace_back(detail::idle(pr.t_read, false, f, physics::DetuningStage::kReadPsb));
      jobs.push_back(detail::make_job(setup, spec, init, realize(s, spec.control_path, setup.controller, v),
                                      stream++));
    }
  }
  detail::run_and_fill(setup, jobs, r);

  const std::size_t nf = fax.values.size();
  std::vector<double> vs, centers;
  for (std::size_t i = 0; i < vax.values.size(); ++i) {
    std::vector<double> flip(nf);
    for (std::size_t j = 0; j < nf; ++j) flip[j] = 1.0 - r.p_blocked[i * nf + j];
    const std::size_t peak = std::max_element(flip.begin(), flip.end()) - flip.begin();
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < nf; ++j) {
      if (std::abs(fax.values[j] - fax.values[peak]) <= pr.stark_fit_halfwidth) {
        xs.push_back(fax.values[j]);
        ys.push_back(flip[j]);
      }
    }
    const std::string prefix = "v" + std::to_string(i) + ".";
    try {
      const auto f = fitting::fit(fitting::Model::kResonance, xs, ys);
      detail::add_fit(r, prefix, f);
      vs.push_back(j_levels(setup.controller, vax.values[i]).low);
      centers.push_back(f.value("x0"));
    } catch (const Error& e) {
      r.notes.push_back(prefix + "resonance fit: " + e.what());
    }
  }
  r.series["v_applied"] = vs;
  r.series["f_center_hz"] = centers;
  if (vs.size() < 2) throw Error(ErrorCode::kFitDiverged, "fewer than two resonance centers for the Stark slope");

  // Ordinary least squares of center on applied voltage.
  const double n = double(vs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    mx += vs[i] / n;
    my += centers[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    sxx += (vs[i] - mx) * (vs[i] - mx);
    sxy += (vs[i] - mx) * (centers[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kRankDeficient, "Stark calibration needs distinct voltages");
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) ssr += std::pow(centers[i] - my - slope * (vs[i] - mx), 2);
  const double se = vs.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  r.fit["stark_slope_hz_per_v"] = {slope, se};
  r.fit["stark_intercept_hz"] = {my - slope * mx, 0.0};
  return r;
}

}  // namespace cmosq::experiments
