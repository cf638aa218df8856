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

// Reference matrix exponential for small dense complex matrices: Taylor
// series with scaling and squaring. Slow and simple on purpose; used only
// as an independent check of the eigendecomposition propagators.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace oracle {

template <class M>
M expm_taylor(const M& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const M scaled = a / std::ldexp(1.0, squarings);
  M term = M::Identity();
  M sum = M::Identity();
  for (int k = 1; k <= 30; ++k) {
    term = (term * scaled / double(k)).eval();
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-300) break;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

/// exp(-i 2 pi H t) for a Hamiltonian in hertz.
inline Eigen::Matrix4cd propagator(const Eigen::Matrix4cd& h, double t) {
  const std::complex<double> k(0.0, -2.0 * std::numbers::pi * t);
  return expm_taylor<Eigen::Matrix4cd>(k * h);
}

/// Two-spin Hamiltonian written out independently from the library:
/// basis {uu, ud, du, dd}, rotating frame at f_mw, drive on both spins.
inline Eigen::Matrix4cd hamiltonian(double d1, double d2, double omega, double phase, double j) {
  using C = std::complex<double>;
  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
  h(0, 0) = 0.5 * (d1 + d2);
  h(1, 1) = 0.5 * (d1 - d2) - 0.5 * j;
  h(2, 2) = 0.5 * (-d1 + d2) - 0.5 * j;
  h(3, 3) = -0.5 * (d1 + d2);
  h(1, 2) = h(2, 1) = 0.5 * j;
  // (omega/2)(cos p X + sin p Y) on each spin: <u|.|d> = (omega/2) e^{-ip}
  const C up = 0.5 * omega * std::polar(1.0, -phase);
  auto couple = [&](int a, int b) {  // a has the up spin, b the down spin
    h(a, b) += up;
    h(b, a) += std::conj(up);
  };
  couple(0, 2);  // qubit 1 flips: uu <-> du
  couple(1, 3);  // ud <-> dd
  couple(0, 1);  // qubit 2 flips: uu <-> ud
  couple(2, 3);  // du <-> dd
  return h;
}

}  // namespace oracle
