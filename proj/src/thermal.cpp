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

#include "cmosq/thermal.hpp"

#include <algorithm>
#include <cmath>

#include "cmosq/error.hpp"

namespace cmosq::thermal {

void FridgeModel::validate() const {
  if (!(t_base > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fridge.t_base must be positive");
  if (!(kappa > 0.0)) throw Error(ErrorCode::kInvalidArgument, "fridge.kappa must be positive");
  if (!(p_parasitic >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "fridge.p_parasitic must be >= 0");
}

void ElectronThermalModel::validate() const {
  if (!(t_e_base > 0.0)) throw Error(ErrorCode::kInvalidArgument, "electron.t_e_base must be positive");
  if (!(blend_exponent >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "electron.blend_exponent must be >= 1");
  if (!(direct_coupling >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "electron.direct_coupling must be >= 0");
}

double mixing_chamber_temp(const FridgeModel& fridge, double p_applied) {
  if (!(p_applied >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "applied power must be >= 0");
  return std::sqrt((p_applied + fridge.p_parasitic) / fridge.kappa + fridge.t_base * fridge.t_base);
}

double cooling_power(const FridgeModel& fridge, double t) {
  return fridge.kappa * (t * t - fridge.t_base * fridge.t_base);
}

double electron_temp(const ElectronThermalModel& model, double t_mxc, double p_chip) {
  if (!(t_mxc > 0.0)) throw Error(ErrorCode::kInvalidArgument, "t_mxc must be positive");
  const double n = model.blend_exponent;
  // Normalize by the larger temperature so large exponents cannot overflow.
  const double scale = std::max(model.t_e_base, t_mxc);
  const double sum = std::pow(model.t_e_base / scale, n) + std::pow(t_mxc / scale, n);
  return scale * std::pow(sum, 1.0 / n) + model.direct_coupling * std::max(p_chip, 0.0);
}

physics::NoiseModel scale_noise(const physics::NoiseModel& noise, double t_e, double t_ref) {
  if (!(t_e > 0.0) || !(t_ref > 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperatures must be positive");
  physics::NoiseModel out = noise;
  out.t_e = t_e;
  out.t_ref = t_ref;
  return out;
}

double fermi_occupation(double detuning, double lever_arm, double t_e) {
  if (!(lever_arm > 0.0) || !(t_e > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "lever arm and temperature must be positive");
  }
  const double x = lever_arm * detuning / (kBoltzmannEv * t_e);
  // Symmetric form keeps f(-x) + f(x) = 1 to rounding.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

ThermalPoint thermal_point(const FridgeModel& fridge, const ElectronThermalModel& electron, double power) {
  ThermalPoint p;
  p.power = power;
  p.t_mxc = mixing_chamber_temp(fridge, power);
  p.t_e = electron_temp(electron, p.t_mxc, power);
  return p;
}

}  // namespace cmosq::thermal
