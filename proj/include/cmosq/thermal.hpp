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

// Steady-state heat balance: controller dissipation warms the mixing
// chamber, the mixing chamber and the chip load set the device electron
// temperature, and the electron temperature scales the electrical noise.

#pragma once

#include "cmosq/physics.hpp"

namespace cmosq::thermal {

inline constexpr double kBoltzmannEv = 8.617333262e-5;  // eV/K

struct FridgeModel {
  double t_base = 7e-3;  // K
  // W/K^2. Default puts the cooling power at 100 mK at exactly 1 mW.
  double kappa = 1e-3 / (0.1 * 0.1 - 7e-3 * 7e-3);
  double p_parasitic = 0.0;  // W

  void validate() const;
};

struct ElectronThermalModel {
  double t_e_base = 0.85;       // K
  double blend_exponent = 9.0;  // n
  // K/W. Thermal resistance from the chip package to the device electrons,
  // for heat that bypasses the mixing chamber plate.
  double direct_coupling = 0.0;

  void validate() const;
};

/// Positive root of p_applied + p_parasitic = kappa (T^2 - t_base^2).
double mixing_chamber_temp(const FridgeModel& fridge, double p_applied);

/// Power the fridge removes at temperature t.
double cooling_power(const FridgeModel& fridge, double t);

/// (t_e_base^n + t_mxc^n)^(1/n) + direct_coupling * p_chip.
double electron_temp(const ElectronThermalModel& model, double t_mxc, double p_chip = 0.0);

/// Copy of noise evaluated at electron temperature t_e against reference t_ref.
physics::NoiseModel scale_noise(const physics::NoiseModel& noise, double t_e, double t_ref);

/// Occupation of a dot level at detuning (V) for lever arm (eV/V).
double fermi_occupation(double detuning, double lever_arm, double t_e);

struct ThermalPoint {
  double power = 0.0;
  double t_mxc = 0.0;
  double t_e = 0.0;
};

ThermalPoint thermal_point(const FridgeModel& fridge, const ElectronThermalModel& electron, double power);

}  // namespace cmosq::thermal
