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

// Helpers shared by the protocol implementations.

#pragma once

#include <string>
#include <vector>

#include "cmosq/experiments.hpp"

namespace cmosq::experiments::detail {

inline constexpr double kTwoPi = 6.283185307179586;

const Axis& find_axis(const std::vector<Axis>& axes, const std::string& name);
std::vector<Axis> resolve_axes(const Setup& setup, const ExperimentSpec& spec);

ExperimentResult start_result(const Setup& setup, const ExperimentSpec& spec, std::vector<Axis> axes);

/// Runs the jobs with the setup's kernel choice and appends the statistics.
void run_and_fill(const Setup& setup, const std::vector<shots::PointJob>& jobs, ExperimentResult& r);
std::vector<shots::PointStats> run_jobs(const Setup& setup, const std::vector<shots::PointJob>& jobs);

shots::PointJob make_job(const Setup& setup, const ExperimentSpec& spec, physics::TwoSpinState init,
                         physics::PulseSchedule schedule, std::uint64_t stream);

physics::InstantGate gate_on(int qubit, const physics::Mat2& u);

LevelSegment idle(double duration, bool high, double f_frame,
                  physics::DetuningStage stage = physics::DetuningStage::kSep13);
LevelSegment drive(double duration, bool high, double f_mw, double amp, double phase);

/// SINGLET load, adiabatic separation into |du>, then `body`, then readout.
std::vector<LevelStep> singlet_wrap(const Protocol& p, double f_frame, const std::vector<LevelStep>& body);

/// Rotation of a qubit by theta about an equatorial axis at phase phi, either
/// as an ideal instant gate or as a resonant driven segment.
void append_rotation(std::vector<LevelStep>& steps, const Setup& setup, const Protocol& p, int qubit, double theta,
                     double phi, double f_frame, bool high, bool ideal, double amp);

void add_fit(ExperimentResult& r, const std::string& prefix, const fitting::FitResult& f);

/// Blocked probability of a fully dephased single-qubit superposition
/// prepared from SINGLET, after SPAM.
double readout_midpoint(const physics::SpamParams& spam);

}  // namespace cmosq::experiments::detail
