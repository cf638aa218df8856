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

// Two-spin dynamics in a 4-dimensional Hilbert space.
//
// Basis ordering is {|uu>, |ud>, |du>, |dd>} with qubit 1 the left tensor
// factor; sigma_z|u> = +|u>, so |u> is the excited Zeeman level and
// T- = |dd> is the ground state. All Hamiltonians are in hertz and
// propagators are U = exp(-i 2 pi H t).

#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "cmosq/rng.hpp"

namespace cmosq::physics {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using cplx = std::complex<double>;

struct SpamParams {
  double f_prep = 1.0;
  double f_read_s = 1.0;
  double f_read_t = 1.0;
};

struct SpinSystemParams {
  double b0 = 0.5;        // tesla, metadata only
  double f1_0 = 13.95e9;  // Hz at v_ref
  double f2_0 = 13.85e9;
  double v_ref = 1.2;     // V
  double alpha1 = 30e6;   // Hz/V
  double alpha2 = 100e6;  // Hz/V
  double j0 = 0.5e6;      // Hz at vj_on
  double vj_on = 1.37;    // V
  double vj_scale = 0.02; // V
  double rabi_per_volt = 1e6;  // Hz per unit drive amplitude
  double t1 = std::numeric_limits<double>::infinity();
  SpamParams spam;

  /// j0 * exp((v - vj_on)/vj_scale), tapered by exp(-((vj_on - v)/vj_scale)^2)
  /// below onset. Continuous with continuous slope at vj_on, monotone.
  double exchange(double v_j) const;
  double qubit_frequency(int qubit, double v_j) const;
  void validate() const;
};

struct NoiseModel {
  double sigma_f1 = 0.0;      // Hz, quasi-static spread per shot
  double sigma_f2 = 0.0;
  double sigma_j_frac = 0.0;  // fractional exchange spread at t_ref
  double s_white_0 = 0.0;     // Hz^2/Hz at t_ref
  double temp_exponent = 1.0;    // white PSD ~ (t_e/t_ref)^temp_exponent
  double j_temp_exponent = 1.0;  // exchange spread ~ (t_e/t_ref)^j_temp_exponent
  double t_ref = 0.85;        // K
  double t_e = 0.85;          // K, current electron temperature
  std::uint64_t rng_seed = 0;

  double temperature_ratio() const { return t_e / t_ref; }
  /// White frequency-noise PSD at the current electron temperature.
  double s_white() const;
  /// Exchange spread at the current electron temperature.
  double sigma_j() const;
  /// True when no stochastic channel is active, so every shot is identical.
  bool deterministic() const;
};

struct ShotNoise {
  double df1 = 0.0;
  double df2 = 0.0;
  double dj_frac = 0.0;
};

ShotNoise sample_shot_noise(const NoiseModel& noise, ShotRng& rng);

enum class DetuningStage : std::uint8_t { kInit04, kSep13, kReadPsb };

struct MicrowaveDrive {
  bool on = false;
  double f_mw = 0.0;  // also the rotating-frame frequency of the segment
  double amp = 0.0;
  double phase = 0.0;
};

struct Segment {
  double duration = 0.0;
  double v_j = 0.0;
  MicrowaveDrive mw;
  DetuningStage stage = DetuningStage::kSep13;
};

/// Zero-duration single-qubit rotations applied in the current frame.
struct InstantGate {
  Mat2 q1 = Mat2::Identity();
  Mat2 q2 = Mat2::Identity();
};

struct Depolarize {
  int qubit = 2;
  double p = 0.0;
};

using Step = std::variant<Segment, InstantGate, Depolarize>;

struct PulseSchedule {
  std::vector<Step> steps;

  double total_duration() const;
  /// Positive durations, finite total, stages in INIT -> SEP -> READ order.
  void validate() const;
};

struct TwoSpinState {
  Mat4 rho = Mat4::Zero();

  /// Throws NonPhysicalState if trace, Hermiticity or positivity are off by
  /// more than tol.
  void check(double tol = 1e-10) const;
  double min_eigenvalue() const;
};

enum class PrepKind : std::uint8_t { kSinglet, kTMinus, kUpDown };

Mat2 rotation(double theta, double phi);
Mat2 rz(double theta);
Mat4 kron(const Mat2& a, const Mat2& b);

/// Rotating-frame Hamiltonian at mw.f_mw under the RWA, in Hz.
Mat4 hamiltonian(const SpinSystemParams& params, double v_j, const MicrowaveDrive& mw);
Mat4 hamiltonian(const SpinSystemParams& params, double v_j, const MicrowaveDrive& mw, const ShotNoise& shot);

/// exp(-i 2 pi H t) through the Hermitian eigendecomposition.
Mat4 propagator(const Mat4& h, double duration);

/// Segment propagator including the shot's quasi-static offsets. Uses the
/// closed-form product of 2x2 rotations when the exchange phase is below
/// 1e-12 rad, otherwise propagator(hamiltonian(...)).
Mat4 segment_propagator(const SpinSystemParams& params, const Segment& seg, const ShotNoise& shot);

/// Maps S -> |du> and T0 -> |ud| on entering the separated stage; its adjoint
/// maps back on entering readout.
const Mat4& separation_map();

TwoSpinState prepare(PrepKind kind, const SpamParams& spam);

/// Evolution of one shot with explicit quasi-static offsets. White-noise
/// phase kicks draw from kick_rng when s_white > 0.
TwoSpinState evolve_shot(const TwoSpinState& state, const PulseSchedule& schedule, const SpinSystemParams& params,
                         const ShotNoise& shot, double s_white, ShotRng& kick_rng);

/// Samples the shot's noise from (noise.rng_seed, shot_index) and evolves.
TwoSpinState evolve(const TwoSpinState& state, const PulseSchedule& schedule, const SpinSystemParams& params,
                    const NoiseModel& noise, std::uint64_t shot_index);

/// Probability of the blocked (non-singlet) readout outcome after SPAM.
double measure_psb(const TwoSpinState& state, const SpamParams& spam);

int sample_shot(double p, ShotRng& rng);

}  // namespace cmosq::physics
