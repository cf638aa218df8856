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

#include "cmosq/physics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cmosq/error.hpp"
#include "cmosq/format.hpp"

namespace cmosq::physics {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

const Mat2& pauli_x() {
  static const Mat2 m = (Mat2() << 0, 1, 1, 0).finished();
  return m;
}
const Mat2& pauli_y() {
  static const Mat2 m = (Mat2() << 0, -kI, kI, 0).finished();
  return m;
}
const Mat2& pauli_z() {
  static const Mat2 m = (Mat2() << 1, 0, 0, -1).finished();
  return m;
}

// exp(-i 2 pi t (d/2 sz + w/2 (cos p sx + sin p sy)))
Mat2 qubit_propagator(double detuning, double rabi, double phase, double t) {
  const double w = std::hypot(detuning, rabi);
  Mat2 u;
  if (w == 0.0) return Mat2::Identity();
  const double a = std::numbers::pi * w * t;
  const double c = std::cos(a), s = std::sin(a);
  const double nz = detuning / w, nr = rabi / w;
  const cplx off = -kI * s * nr * std::exp(-kI * phase);
  u(0, 0) = cplx(c, -s * nz);
  u(1, 1) = cplx(c, s * nz);
  u(0, 1) = off;
  u(1, 0) = -std::conj(off);
  return u;
}

void apply_unitary(Mat4& rho, const Mat4& u) { rho = (u * rho * u.adjoint()).eval(); }

void apply_diag_phases(Mat4& rho, const std::array<cplx, 4>& d) {
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) rho(r, c) *= d[r] * std::conj(d[c]);
  }
}

// Collective z phase for a frame change: diag(e^{i th}, 1, 1, e^{-i th}).
void apply_frame_change(Mat4& rho, double df, double t) {
  const double th = kTwoPi * df * t;
  apply_diag_phases(rho, {std::polar(1.0, th), cplx(1.0), cplx(1.0), std::polar(1.0, -th)});
}

void apply_z_kicks(Mat4& rho, double phi1, double phi2) {
  const cplx a = std::polar(1.0, -phi1 / 2), b = std::polar(1.0, -phi2 / 2);
  apply_diag_phases(rho, {a * b, a * std::conj(b), std::conj(a) * b, std::conj(a) * std::conj(b)});
}

void apply_amplitude_damping(Mat4& rho, double gamma) {
  const double keep = std::sqrt(1.0 - gamma), jump = std::sqrt(gamma);
  Mat2 k0 = Mat2::Zero(), k1 = Mat2::Zero();
  k0(0, 0) = keep;
  k0(1, 1) = 1.0;
  k1(1, 0) = jump;
  for (int q = 1; q <= 2; ++q) {
    const Mat2 id = Mat2::Identity();
    const Mat4 a0 = q == 1 ? kron(k0, id) : kron(id, k0);
    const Mat4 a1 = q == 1 ? kron(k1, id) : kron(id, k1);
    rho = (a0 * rho * a0.adjoint() + a1 * rho * a1.adjoint()).eval();
  }
}

void apply_depolarize(Mat4& rho, int qubit, double p) {
  const Mat2 id = Mat2::Identity();
  Mat4 acc = (1.0 - 0.75 * p) * rho;
  for (const Mat2* s : {&pauli_x(), &pauli_y(), &pauli_z()}) {
    const Mat4 op = qubit == 1 ? kron(*s, id) : kron(id, *s);
    acc += 0.25 * p * op * rho * op.adjoint();
  }
  rho = acc;
}

const char* stage_name(DetuningStage s) {
  switch (s) {
    case DetuningStage::kInit04: return "INIT_04";
    case DetuningStage::kSep13: return "SEP_13";
    case DetuningStage::kReadPsb: return "READ_PSB";
  }
  return "?";
}

}  // namespace

double SpinSystemParams::exchange(double v_j) const {
  const double x = (v_j - vj_on) / vj_scale;
  const double taper = x < 0.0 ? std::exp(-x * x) : 1.0;
  return j0 * std::exp(x) * taper;
}

double SpinSystemParams::qubit_frequency(int qubit, double v_j) const {
  return qubit == 1 ? f1_0 + alpha1 * (v_j - v_ref) : f2_0 + alpha2 * (v_j - v_ref);
}

void SpinSystemParams::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(f1_0 >= 0.0 && f2_0 >= 0.0 && j0 >= 0.0 && rabi_per_volt >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "frequencies must be non-negative");
  }
  if (!(vj_scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "vj_scale must be positive");
  if (!(t1 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "t1 must be positive");
  if (!prob(spam.f_prep) || !prob(spam.f_read_s) || !prob(spam.f_read_t)) {
    throw Error(ErrorCode::kInvalidArgument, "SPAM fidelities must lie in [0, 1]");
  }
}

double NoiseModel::s_white() const { return s_white_0 * std::pow(temperature_ratio(), temp_exponent); }

double NoiseModel::sigma_j() const { return sigma_j_frac * std::pow(temperature_ratio(), j_temp_exponent); }

bool NoiseModel::deterministic() const {
  return sigma_f1 == 0.0 && sigma_f2 == 0.0 && sigma_j() == 0.0 && s_white() == 0.0;
}

ShotNoise sample_shot_noise(const NoiseModel& noise, ShotRng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  ShotNoise s;
  s.df1 = noise.sigma_f1 * n01(rng);
  s.df2 = noise.sigma_f2 * n01(rng);
  s.dj_frac = noise.sigma_j() * n01(rng);
  return s;
}

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& st : steps) {
    if (const auto* seg = std::get_if<Segment>(&st)) t += seg->duration;
  }
  return t;
}

void PulseSchedule::validate() const {
  auto stage = DetuningStage::kInit04;
  bool first = true;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto* seg = std::get_if<Segment>(&steps[i]);
    if (!seg) continue;
    if (!(seg->duration > 0.0) || !std::isfinite(seg->duration)) {
      throw Error(ErrorCode::kInvalidSchedule, "segment " + std::to_string(i) + " has non-positive duration");
    }
    if (!first && seg->stage < stage) {
      throw Error(ErrorCode::kInvalidSchedule, std::string("stage ") + stage_name(seg->stage) + " after " +
                                                   stage_name(stage) + " at segment " + std::to_string(i));
    }
    stage = seg->stage;
    first = false;
  }
  if (!std::isfinite(total_duration())) throw Error(ErrorCode::kInvalidSchedule, "infinite total duration");
}

double TwoSpinState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Mat4> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void TwoSpinState::check(double tol) const {
  const double tr_err = std::abs(rho.trace() - cplx(1.0));
  if (tr_err > tol) throw Error(ErrorCode::kNonPhysicalState, "trace off by " + fmt_double(tr_err));
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw Error(ErrorCode::kNonPhysicalState, "non-Hermitian by " + fmt_double(herm));
  const double lmin = min_eigenvalue();
  if (lmin < -tol) throw Error(ErrorCode::kNonPhysicalState, "negative eigenvalue " + fmt_double(lmin));
}

Mat2 rotation(double theta, double phi) {
  return std::cos(theta / 2) * Mat2::Identity() -
         kI * std::sin(theta / 2) * (std::cos(phi) * pauli_x() + std::sin(phi) * pauli_y());
}

Mat2 rz(double theta) {
  Mat2 u = Mat2::Zero();
  u(0, 0) = std::polar(1.0, -theta / 2);
  u(1, 1) = std::polar(1.0, theta / 2);
  return u;
}

Mat4 kron(const Mat2& a, const Mat2& b) {
  Mat4 out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  }
  return out;
}

Mat4 hamiltonian(const SpinSystemParams& params, double v_j, const MicrowaveDrive& mw, const ShotNoise& shot) {
  const Mat2 id = Mat2::Identity();
  const double d1 = params.qubit_frequency(1, v_j) + shot.df1 - mw.f_mw;
  const double d2 = params.qubit_frequency(2, v_j) + shot.df2 - mw.f_mw;
  const double j = params.exchange(v_j) * (1.0 + shot.dj_frac);
  Mat4 h = 0.5 * d1 * kron(pauli_z(), id) + 0.5 * d2 * kron(id, pauli_z());
  if (mw.on) {
    const double omega = params.rabi_per_volt * mw.amp;
    const Mat2 drive = 0.5 * omega * (std::cos(mw.phase) * pauli_x() + std::sin(mw.phase) * pauli_y());
    h += kron(drive, id) + kron(id, drive);
  }
  if (j != 0.0) {
    h += 0.25 * j *
         (kron(pauli_x(), pauli_x()) + kron(pauli_y(), pauli_y()) + kron(pauli_z(), pauli_z()) - Mat4::Identity());
  }
  return h;
}

Mat4 hamiltonian(const SpinSystemParams& params, double v_j, const MicrowaveDrive& mw) {
  return hamiltonian(params, v_j, mw, ShotNoise{});
}

Mat4 propagator(const Mat4& h, double duration) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(h);
  const auto& v = es.eigenvectors();
  Eigen::Vector4cd phases;
  for (int k = 0; k < 4; ++k) phases(k) = std::polar(1.0, -kTwoPi * es.eigenvalues()(k) * duration);
  return v * phases.asDiagonal() * v.adjoint();
}

Mat4 segment_propagator(const SpinSystemParams& params, const Segment& seg, const ShotNoise& shot) {
  const double j = params.exchange(seg.v_j) * (1.0 + shot.dj_frac);
  if (std::abs(kTwoPi * j * seg.duration) < 1e-12) {
    const double d1 = params.qubit_frequency(1, seg.v_j) + shot.df1 - seg.mw.f_mw;
    const double d2 = params.qubit_frequency(2, seg.v_j) + shot.df2 - seg.mw.f_mw;
    const double omega = seg.mw.on ? params.rabi_per_volt * seg.mw.amp : 0.0;
    return kron(qubit_propagator(d1, omega, seg.mw.phase, seg.duration),
                qubit_propagator(d2, omega, seg.mw.phase, seg.duration));
  }
  return propagator(hamiltonian(params, seg.v_j, seg.mw, shot), seg.duration);
}

const Mat4& separation_map() {
  static const Mat4 m = [] {
    const double r = std::numbers::sqrt2 / 2.0;
    Mat4 u = Mat4::Zero();
    u(0, 0) = 1.0;
    u(3, 3) = 1.0;
    // columns are images of |ud>, |du>: S=(|ud>-|du>)/sqrt2 -> |du>, T0 -> |ud>
    u(1, 1) = r;
    u(1, 2) = r;
    u(2, 1) = r;
    u(2, 2) = -r;
    return u;
  }();
  return m;
}

TwoSpinState prepare(PrepKind kind, const SpamParams& spam) {
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  const double r = std::numbers::sqrt2 / 2.0;
  switch (kind) {
    case PrepKind::kSinglet:
      psi(1) = r;
      psi(2) = -r;
      break;
    case PrepKind::kTMinus:
      psi(3) = 1.0;
      break;
    case PrepKind::kUpDown:
      psi(1) = 1.0;
      break;
  }
  TwoSpinState s;
  s.rho = spam.f_prep * psi * psi.adjoint() + (1.0 - spam.f_prep) * 0.25 * Mat4::Identity();
  return s;
}

TwoSpinState evolve_shot(const TwoSpinState& state, const PulseSchedule& schedule, const SpinSystemParams& params,
                         const ShotNoise& shot, double s_white, ShotRng& kick_rng) {
  Mat4 rho = state.rho;
  double t = 0.0;
  bool have_frame = false;
  double frame = 0.0;
  bool have_stage = false;
  auto stage = DetuningStage::kInit04;
  std::normal_distribution<double> n01(0.0, 1.0);

  for (const auto& step : schedule.steps) {
    if (const auto* gate = std::get_if<InstantGate>(&step)) {
      apply_unitary(rho, kron(gate->q1, gate->q2));
      continue;
    }
    if (const auto* dep = std::get_if<Depolarize>(&step)) {
      apply_depolarize(rho, dep->qubit, dep->p);
      continue;
    }
    const auto& seg = std::get<Segment>(step);
    if (!(seg.duration > 0.0)) throw Error(ErrorCode::kInvalidSchedule, "non-positive segment duration");
    if (have_stage && seg.stage != stage) {
      if (seg.stage < stage) throw Error(ErrorCode::kInvalidSchedule, "detuning stages out of order");
      if (stage == DetuningStage::kInit04 && seg.stage != DetuningStage::kInit04) {
        apply_unitary(rho, separation_map());
      }
      if (seg.stage == DetuningStage::kReadPsb) apply_unitary(rho, separation_map().adjoint());
    }
    have_stage = true;
    stage = seg.stage;

    if (!have_frame) {
      frame = seg.mw.f_mw;
      have_frame = true;
    } else if (seg.mw.f_mw != frame) {
      apply_frame_change(rho, seg.mw.f_mw - frame, t);
      frame = seg.mw.f_mw;
    }

    // Charge configurations (0,4) at load and readout freeze the spin dynamics.
    if (stage == DetuningStage::kSep13) {
      apply_unitary(rho, segment_propagator(params, seg, shot));
      if (s_white > 0.0) {
        const double sd = kTwoPi * std::sqrt(s_white * seg.duration);
        const double k1 = sd * n01(kick_rng);
        const double k2 = sd * n01(kick_rng);
        apply_z_kicks(rho, k1, k2);
      }
      if (std::isfinite(params.t1)) apply_amplitude_damping(rho, -std::expm1(-seg.duration / params.t1));
    }
    t += seg.duration;
  }

  TwoSpinState out{rho};
  const double tr_err = std::abs(rho.trace() - cplx(1.0));
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (tr_err > 1e-10 || herm > 1e-10 || rho.diagonal().real().minCoeff() < -1e-10) {
    throw Error(ErrorCode::kNonPhysicalState,
                "after evolution: trace error " + fmt_double(tr_err) + ", hermiticity error " + fmt_double(herm));
  }
  return out;
}

TwoSpinState evolve(const TwoSpinState& state, const PulseSchedule& schedule, const SpinSystemParams& params,
                    const NoiseModel& noise, std::uint64_t shot_index) {
  ShotRng rng(derive_seed(noise.rng_seed, shot_index));
  const ShotNoise shot = sample_shot_noise(noise, rng);
  return evolve_shot(state, schedule, params, shot, noise.s_white(), rng);
}

double measure_psb(const TwoSpinState& state, const SpamParams& spam) {
  const auto& r = state.rho;
  const double singlet = 0.5 * (r(1, 1) + r(2, 2) - r(1, 2) - r(2, 1)).real();
  const double blocked = std::clamp(1.0 - singlet, 0.0, 1.0);
  return std::clamp(spam.f_read_t * blocked + (1.0 - spam.f_read_s) * (1.0 - blocked), 0.0, 1.0);
}

int sample_shot(double p, ShotRng& rng) { return rng.uniform() < p ? 1 : 0; }

}  // namespace cmosq::physics
