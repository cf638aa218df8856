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

using detail::kTwoPi;
using physics::DetuningStage;

constexpr double kPi = 3.141592653589793;

// Coherence normalized between the readout midpoint and the first point.
double normalized_coherence(const std::vector<double>& p, std::size_t first, std::size_t last, double mid) {
  const double c0 = p[first] - mid;
  return c0 == 0.0 ? 0.0 : (p[last] - mid) / c0;
}

struct EchoOutcome {
  double t_decay = 0.0;
  double t_err = 0.0;
  bool lower_bound = false;
  std::optional<fitting::FitResult> fit;
};

// Fits A exp(-(g t)^p) + mid to one echo curve, or reports t_max as a lower
// bound when the coherence never falls below 1/e.
EchoOutcome fit_echo(const std::vector<double>& t, const std::vector<double>& p, double mid) {
  EchoOutcome out;
  const std::size_t last = std::max_element(t.begin(), t.end()) - t.begin();
  const std::size_t first = std::min_element(t.begin(), t.end()) - t.begin();
  if (normalized_coherence(p, first, last, mid) > std::exp(-1.0)) {
    out.t_decay = t[last];
    out.lower_bound = true;
    return out;
  }
  fitting::FitInit init;
  init.fixed = {{3, mid}};
  out.fit = fitting::fit(fitting::Model::kDecay, t, p, init);
  const double g = out.fit->value("gamma");
  out.t_decay = 1.0 / g;
  out.t_err = out.fit->error("gamma") / (g * g);
  return out;
}

std::vector<LevelStep> echo_body(const Setup& setup, const Protocol& pr, double f_frame, double t_total, int n_pi) {
  std::vector<LevelStep> body;
  const int q = pr.qubit;
  body.emplace_back(detail::idle(pr.t_settle, false, f_frame));
  detail::append_rotation(body, setup, pr, q, kPi / 2, 0.0, f_frame, false, pr.ideal_pulses, pr.pulse_amp);
  // CPMG timing: tau/2N, then tau/N between pulses, then tau/2N.
  const double tau = t_total / double(n_pi);
  for (int k = 0; k < n_pi; ++k) {
    body.emplace_back(detail::idle(k == 0 ? 0.5 * tau : tau, false, f_frame));
    detail::append_rotation(body, setup, pr, q, kPi, kPi / 2, f_frame, false, pr.ideal_pulses, pr.pulse_amp);
  }
  body.emplace_back(detail::idle(0.5 * tau, false, f_frame));
  detail::append_rotation(body, setup, pr, q, kPi / 2, 0.0, f_frame, false, pr.ideal_pulses, pr.pulse_amp);
  return body;
}

void check_qubit(int q) {
  if (q != 1 && q != 2) throw Error(ErrorCode::kInvalidArgument, "qubit must be 1 or 2");
}

}  // namespace

ExperimentResult run_rabi_chevron(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  check_qubit(pr.qubit);
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& fax = detail::find_axis(r.axes, "f_mw");
  const auto& tax = detail::find_axis(r.axes, "t_mw");
  const auto init = physics::prepare(physics::PrepKind::kSinglet, setup.spin.spam);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double f : fax.values) {
    for (double t : tax.values) {
      std::vector<LevelStep> body{detail::idle(pr.t_settle, false, f)};
      if (t > 0.0) body.emplace_back(detail::drive(t, false, f, pr.mw_amp, 0.0));
      const auto steps = detail::singlet_wrap(pr, f, body);
      jobs.push_back(detail::make_job(setup, spec, init, realize(steps, spec.control_path, setup.controller, pr.v_idle),
                                      stream++));
    }
  }
  detail::run_and_fill(setup, jobs, r);

  // Rabi frequency from the row closest to the nominal resonance.
  const double f0 = nominal_frequency(setup.spin, pr.qubit, j_levels(setup.controller, pr.v_idle).low);
  std::size_t row = 0;
  for (std::size_t i = 0; i < fax.values.size(); ++i) {
    if (std::abs(fax.values[i] - f0) < std::abs(fax.values[row] - f0)) row = i;
  }
  const std::size_t nt = tax.values.size();
  std::vector<double> y(r.p_blocked.begin() + long(row * nt), r.p_blocked.begin() + long((row + 1) * nt));
  r.series["resonant_row"] = y;
  try {
    const auto f = fitting::fit(fitting::Model::kRabi, tax.values, y);
    detail::add_fit(r, "rabi.", f);
    r.fit["rabi_hz"] = {f.value("f"), f.error("f")};
  } catch (const Error& e) {
    r.notes.push_back(std::string("rabi fit: ") + e.what());
  }
  return r;
}

ExperimentResult run_ramsey(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  check_qubit(pr.qubit);
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& tax = detail::find_axis(r.axes, "t_wait");
  const auto init = physics::prepare(physics::PrepKind::kSinglet, setup.spin.spam);
  const double f_frame = nominal_frequency(setup.spin, pr.qubit, j_levels(setup.controller, pr.v_idle).low);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double t : tax.values) {
    std::vector<LevelStep> body{detail::idle(pr.t_settle, false, f_frame)};
    detail::append_rotation(body, setup, pr, pr.qubit, kPi / 2, 0.0, f_frame, false, pr.ideal_pulses, pr.pulse_amp);
    if (t > 0.0) body.emplace_back(detail::idle(t, false, f_frame));
    detail::append_rotation(body, setup, pr, pr.qubit, kPi / 2, kTwoPi * pr.ramsey_detuning * t, f_frame, false,
                            pr.ideal_pulses, pr.pulse_amp);
    const auto steps = detail::singlet_wrap(pr, f_frame, body);
    jobs.push_back(detail::make_job(setup, spec, init, realize(steps, spec.control_path, setup.controller, pr.v_idle),
                                    stream++));
  }
  detail::run_and_fill(setup, jobs, r);

  try {
    const auto f = fitting::fit(fitting::Model::kRamsey, tax.values, r.p_blocked);
    detail::add_fit(r, "ramsey.", f);
    const double g = f.value("gamma");
    const double t_max = *std::max_element(tax.values.begin(), tax.values.end());
    if (!(g > 0.0) || 1.0 / g > t_max) {
      r.fit["t2_star_s"] = {t_max, 0.0};
      r.fit["lower_bound"] = {1.0, 0.0};
    } else {
      r.fit["t2_star_s"] = {1.0 / g, f.error("gamma") / (g * g)};
      r.fit["lower_bound"] = {0.0, 0.0};
    }
    r.fit["p"] = {f.value("p"), f.error("p")};
  } catch (const Error& e) {
    r.notes.push_back(std::string("ramsey fit: ") + e.what());
  }
  return r;
}

ExperimentResult run_hahn(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  check_qubit(pr.qubit);
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& tax = detail::find_axis(r.axes, "t_total");
  const auto init = physics::prepare(physics::PrepKind::kSinglet, setup.spin.spam);
  const double f_frame = nominal_frequency(setup.spin, pr.qubit, j_levels(setup.controller, pr.v_idle).low);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double t : tax.values) {
    const auto steps = detail::singlet_wrap(pr, f_frame, echo_body(setup, pr, f_frame, t, 1));
    jobs.push_back(detail::make_job(setup, spec, init, realize(steps, spec.control_path, setup.controller, pr.v_idle),
                                    stream++));
  }
  detail::run_and_fill(setup, jobs, r);

  const auto out = fit_echo(tax.values, r.p_blocked, detail::readout_midpoint(setup.spin.spam));
  if (out.fit) detail::add_fit(r, "hahn.", *out.fit);
  r.fit["t2_hahn_s"] = {out.t_decay, out.t_err};
  r.fit["lower_bound"] = {out.lower_bound ? 1.0 : 0.0, 0.0};
  return r;
}

ExperimentResult run_cpmg_psd(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  check_qubit(pr.qubit);
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& nax = detail::find_axis(r.axes, "n_pulses");
  const auto& tax = detail::find_axis(r.axes, "t_total");
  const auto init = physics::prepare(physics::PrepKind::kSinglet, setup.spin.spam);
  const double f_frame = nominal_frequency(setup.spin, pr.qubit, j_levels(setup.controller, pr.v_idle).low);

  std::vector<shots::PointJob> jobs;
  std::uint64_t stream = 0;
  for (double nd : nax.values) {
    const int n = static_cast<int>(std::lround(nd));
    if (n < 1) throw Error(ErrorCode::kInvalidArgument, "CPMG pulse count must be >= 1");
    for (double t : tax.values) {
      const auto steps = detail::singlet_wrap(pr, f_frame, echo_body(setup, pr, f_frame, t, n));
      jobs.push_back(detail::make_job(setup, spec, init,
                                      realize(steps, spec.control_path, setup.controller, pr.v_idle), stream++));
    }
  }
  detail::run_and_fill(setup, jobs, r);

  const std::size_t nt = tax.values.size();
  const double mid = detail::readout_midpoint(setup.spin.spam);
  struct Row {
    double f, s, t, n;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < nax.values.size(); ++i) {
    std::vector<double> y(r.p_blocked.begin() + long(i * nt), r.p_blocked.begin() + long((i + 1) * nt));
    const auto out = fit_echo(tax.values, y, mid);
    const int n = static_cast<int>(std::lround(nax.values[i]));
    if (out.lower_bound) {
      throw Error(ErrorCode::kInsufficientDecay, "CPMG N=" + std::to_string(n) +
                                                     " coherence stays above 1/e up to t_total max");
    }
    const std::string prefix = "N" + std::to_string(n) + ".";
    detail::add_fit(r, prefix, *out.fit);
    // Narrow-band filter: chi(T_N) = 1 = (2 pi)^2 S(f_N) T_N / 2.
    const double s = 2.0 / (kTwoPi * kTwoPi * out.t_decay);
    rows.push_back({n / (2.0 * out.t_decay), s, out.t_decay, double(n)});
    r.fit[prefix + "t_decay_s"] = {out.t_decay, out.t_err};
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.f < b.f; });
  double mean_s = 0.0;
  for (const auto& row : rows) {
    r.series["f_hz"].push_back(row.f);
    r.series["psd_hz2_per_hz"].push_back(row.s);
    r.series["t_decay_s"].push_back(row.t);
    r.series["n_pulses"].push_back(row.n);
    mean_s += row.s / double(rows.size());
  }
  r.fit["psd_mean_hz2_per_hz"] = {mean_s, 0.0};
  return r;
}

}  // namespace cmosq::experiments
