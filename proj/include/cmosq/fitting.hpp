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

// Damped least-squares fits for the decay, oscillation, benchmarking and
// line-shape models used to reduce simulated measurements.

#pragma once

#include <optional>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmosq::fitting {

// Models. Stretched decays use a rate g and exponent p, exp(-(g t)^p):
//   RAMSEY, CZ : A exp(-(g t)^p) cos(2 pi f t + phi) + B   [A, g, p, f, phi, B]
//   RABI       : A exp(-g t) cos(2 pi f t + phi) + B        [A, g, f, phi, B]
//   DECAY      : A exp(-(g t)^p) + B                        [A, g, p, B]
//   RB         : A r^m + B                                  [A, r, B]
//   FERMI      : A / (1 + exp((x - x0)/w)) + B              [x0, w, A, B]
//   RESONANCE  : A / (1 + ((x - x0)/w)^2) + B               [A, x0, w, B]
enum class Model { kRamsey, kRabi, kCz, kDecay, kRb, kFermi, kResonance };

std::string_view to_string(Model m);
std::optional<Model> model_from_string(std::string_view name);

std::vector<std::string> param_names(Model m);
std::size_t param_count(Model m);
bool is_oscillation(Model m);

/// Bounds enforced by projection after every step.
void param_bounds(Model m, std::vector<double>& lower, std::vector<double>& upper);

double model_value(Model m, double x, std::span<const double> p);
/// Analytic gradient with respect to the parameters at x.
void model_gradient(Model m, double x, std::span<const double> p, std::span<double> grad);

struct LmOptions {
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  int max_iterations = 200;
  double gtol = 1e-10;  // cosine between residual and Jacobian columns
  double xtol = 1.49012e-8;  // relative scaled step, sqrt(machine epsilon)
  double ftol = 1.49012e-8;  // relative cost reduction
};

struct FitResult {
  Model model = Model::kDecay;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> stderrs;  // +inf for parameters the data cannot resolve
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;

  double value(std::string_view name) const;
  double error(std::string_view name) const;
};

/// One damped Gauss-Newton run from p0 with Marquardt diagonal scaling.
/// Parameters listed in `fixed` are held at their p0 values. Does not throw
/// on the iteration cap; converged is false instead.
FitResult levenberg_marquardt(Model m, std::span<const double> x, std::span<const double> y,
                              std::vector<double> p0, const LmOptions& opts = {},
                              std::span<const int> fixed = {});

struct FitInit {
  std::optional<std::vector<double>> p0;  // skip the automatic guesses
  std::vector<std::pair<int, double>> fixed;  // parameter index and held value
};

/// Fit with automatic initial guesses and multi-start over decay rates and
/// exponents. Deterministic and independent of data ordering. Throws
/// kRankDeficient on flat data and kFitDiverged if no start converges.
FitResult fit(Model m, std::span<const double> x, std::span<const double> y, const FitInit& init = {},
              const LmOptions& opts = {});

/// Frequency and phase of the largest non-DC peak in a direct zero-padded DFT
/// of (y - mean) on possibly non-uniform samples.
struct DftPeak {
  double frequency = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
};
DftPeak dft_peak(std::span<const double> x, std::span<const double> y, int padding = 8);

/// Wald-Wolfowitz runs test on residual signs; returns the two-sided p-value.
double runs_test_pvalue(std::span<const double> residuals);

}  // namespace cmosq::fitting
