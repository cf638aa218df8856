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

#include <cmath>
#include <deque>

#include "cmosq/error.hpp"
#include "common.hpp"

namespace cmosq::experiments {

namespace {

constexpr double kPi = 3.141592653589793;

struct Generator {
  double theta;
  double phi;
};

// +X/2, -X/2, +Y/2, -Y/2, X, Y. Negative angles are driven with a pi phase.
constexpr Generator kGenerators[] = {{kPi / 2, 0.0}, {kPi / 2, kPi}, {kPi / 2, kPi / 2},
                                     {kPi / 2, -kPi / 2}, {kPi, 0.0}, {kPi, kPi / 2}};

bool same_up_to_phase(const physics::Mat2& a, const physics::Mat2& b) {
  return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-9;
}

}  // namespace

const std::vector<physics::Mat2>& clifford_generators() {
  static const std::vector<physics::Mat2> g = [] {
    std::vector<physics::Mat2> out;
    for (const auto& gen : kGenerators) out.push_back(physics::rotation(gen.theta, gen.phi));
    return out;
  }();
  return g;
}

const std::vector<Clifford>& clifford_table() {
  // Breadth-first closure from the identity gives each element its shortest
  // generator word.
  static const std::vector<Clifford> table = [] {
    std::vector<Clifford> out{{physics::Mat2::Identity(), {}}};
    std::deque<std::size_t> queue{0};
    const auto& gens = clifford_generators();
    while (!queue.empty()) {
      const Clifford cur = out[queue.front()];
      queue.pop_front();
      for (int g = 0; g < int(gens.size()); ++g) {
        const physics::Mat2 u = gens[std::size_t(g)] * cur.unitary;
        bool known = false;
        for (const auto& c : out) known = known || same_up_to_phase(c.unitary, u);
        if (known) continue;
        Clifford next{u, cur.generators};
        next.generators.push_back(g);
        out.push_back(next);
        queue.push_back(out.size() - 1);
      }
    }
    return out;
  }();
  return table;
}

int clifford_index(const physics::Mat2& u) {
  const auto& t = clifford_table();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (same_up_to_phase(t[i].unitary, u)) return int(i);
  }
  return -1;
}

ExperimentResult run_rb_1q(const Setup& setup, const ExperimentSpec& spec) {
  const auto& pr = spec.protocol;
  if (pr.qubit != 1 && pr.qubit != 2) throw Error(ErrorCode::kInvalidArgument, "qubit must be 1 or 2");
  if (pr.rb_randomizations < 1) throw Error(ErrorCode::kInvalidArgument, "rb randomizations must be >= 1");
  if (!(pr.rb_depolarizing >= 0.0 && pr.rb_depolarizing <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rb depolarizing probability must lie in [0, 1]");
  }
  auto r = detail::start_result(setup, spec, detail::resolve_axes(setup, spec));
  const auto& max = detail::find_axis(r.axes, "m");
  const auto& table = clifford_table();
  const auto init = physics::prepare(physics::PrepKind::kSinglet, setup.spin.spam);
  const double f_frame = nominal_frequency(setup.spin, pr.qubit, j_levels(setup.controller, pr.v_idle).low);
  const double omega = setup.spin.rabi_per_volt * pr.rb_amp;
  if (!(omega > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RB pulses need a positive Rabi frequency");

  auto append_clifford = [&](std::vector<LevelStep>& body, const Clifford& c) {
    for (int g : c.generators) {
      const auto& gen = kGenerators[g];
      body.emplace_back(detail::drive(gen.theta / (detail::kTwoPi * omega), false, f_frame, pr.rb_amp, gen.phi));
    }
    if (pr.rb_depolarizing > 0.0) body.emplace_back(physics::Depolarize{pr.qubit, pr.rb_depolarizing});
  };

  std::vector<shots::PointJob> jobs;
  for (std::size_t mi = 0; mi < max.values.size(); ++mi) {
    const long m = std::lround(max.values[mi]);
    if (m < 0) throw Error(ErrorCode::kInvalidArgument, "RB length must be >= 0");
    for (int k = 0; k < pr.rb_randomizations; ++k) {
      ShotRng rng(derive_seed(spec.seed, 0x52B, mi, std::uint64_t(k)));
      std::vector<LevelStep> body{detail::idle(pr.t_settle, false, f_frame)};
      physics::Mat2 total = physics::Mat2::Identity();
      for (long i = 0; i < m; ++i) {
        const auto& c = table[std::size_t(rng() % table.size())];
        append_clifford(body, c);
        total = c.unitary * total;
      }
      const int rec = clifford_index(total.adjoint());
      append_clifford(body, table[std::size_t(rec)]);
      body.emplace_back(detail::idle(pr.t_settle, false, f_frame));
      const auto steps = detail::singlet_wrap(pr, f_frame, body);
      jobs.push_back(detail::make_job(setup, spec, init,
                                      realize(steps, spec.control_path, setup.controller, pr.v_idle),
                                      mi * std::uint64_t(pr.rb_randomizations) + std::uint64_t(k)));
    }
  }
  const auto stats = detail::run_jobs(setup, jobs);

  std::vector<double> survival;
  for (std::size_t mi = 0; mi < max.values.size(); ++mi) {
    int blocked = 0, shots = 0;
    double pm = 0.0;
    for (int k = 0; k < pr.rb_randomizations; ++k) {
      const auto& s = stats[mi * std::size_t(pr.rb_randomizations) + std::size_t(k)];
      blocked += s.blocked;
      shots += s.shots;
      pm += s.p_model / pr.rb_randomizations;
    }
    r.blocked.push_back(blocked);
    r.shots.push_back(shots);
    r.p_blocked.push_back(double(blocked) / double(shots));
    r.p_model.push_back(pm);
    survival.push_back(1.0 - r.p_blocked.back());
  }
  r.series["survival"] = survival;

  try {
    const auto f = fitting::fit(fitting::Model::kRb, max.values, survival);
    detail::add_fit(r, "rb.", f);
    r.fit["fidelity"] = {(1.0 + f.value("r")) / 2.0, f.error("r") / 2.0};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRankDeficient) throw;
    // Survival independent of length: no decay is resolvable.
    r.fit["rb.r"] = {1.0, 0.0};
    r.fit["fidelity"] = {1.0, 0.0};
    r.notes.push_back("survival flat in m; reporting r = 1");
  }
  return r;
}

}  // namespace cmosq::experiments
