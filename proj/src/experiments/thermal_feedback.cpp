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
#include <limits>

#include "cmosq/error.hpp"
#include "common.hpp"

namespace cmosq::experiments {

std::vector<Scenario> default_scenarios() {
  Scenario off{"cmos_off", false};
  Scenario idle{"locked_idle"};
  idle.locked_cells = 2;
  Scenario pulsing{"pulsing"};
  pulsing.osc_enabled = true;
  pulsing.divider = 30;
  pulsing.locked_cells = 2;
  pulsing.pulsing_cells = 2;
  pulsing.pulse_rate = 1e6;
  return {off, idle, pulsing, oscillator_max()};
}

Scenario oscillator_off() {
  Scenario s{"osc_off"};
  s.locked_cells = 2;
  return s;
}

Scenario oscillator_max() {
  Scenario s{"osc_max"};
  s.osc_enabled = true;
  s.tap = 0;
  s.trim = 0;
  s.divider = 1;
  s.locked_cells = 2;
  return s;
}

double scenario_power(const controller::ControllerConfig& cfg, const Scenario& sc) {
  using namespace controller;
  if (!sc.powered) return 0.0;
  if (sc.locked_cells < 0 || sc.locked_cells > kNumCells || sc.pulsing_cells < 0 ||
      sc.pulsing_cells > sc.locked_cells) {
    throw Error(ErrorCode::kInvalidArgument, "scenario " + sc.name + ": pulsing cells must be a subset of locked cells");
  }
  ControllerState st = make_controller(cfg);
  double t = 0.0;
  auto must = [&](const ControllerInput& in) {
    const auto out = apply(st, in, t);
    if (!out.accepted) throw Error(ErrorCode::kIllegalTransition, "scenario " + sc.name + ": " + out.reason);
    t += 1e-6;
  };
  must(make_osc_config({sc.osc_enabled, sc.tap, sc.trim, sc.divider}));
  for (int c = 0; c < sc.locked_cells; ++c) {
    must(make_set_hold(c, 1.0));
    must(make_lock(c));
  }
  for (int c = 0; c < sc.pulsing_cells; ++c) must(make_arm(c));
  return controller_power(st, sc.pulse_rate);
}

std::vector<ThermalRow> run_with_thermal_feedback(const Setup& setup, const ExperimentSpec& inner,
                                                  const std::vector<Scenario>& scenarios) {
  setup.fridge.validate();
  setup.electron.validate();
  std::vector<ThermalRow> rows;
  const std::string metric = headline_metric(inner.kind);
  for (const auto& sc : scenarios) {
    ThermalRow row;
    row.scenario = sc;
    row.osc_frequency = 0.0;
    if (sc.powered && sc.osc_enabled) {
      controller::OscillatorConfig osc = setup.controller.osc;
      osc.tap_select = sc.tap;
      osc.trim_bits = sc.trim;
      osc.divider = sc.divider;
      osc.enabled = true;
      row.osc_frequency = controller::oscillator_frequency(osc);
    }
    row.thermal = thermal::thermal_point(setup.fridge, setup.electron, scenario_power(setup.controller, sc));
    Setup local = setup;
    local.noise = thermal::scale_noise(setup.noise, row.thermal.t_e, setup.noise.t_ref);
    row.result = run(local, inner);
    row.result.metadata.power_w = row.thermal.power;
    row.result.metadata.t_mxc_k = row.thermal.t_mxc;
    row.result.metadata.t_e_k = row.thermal.t_e;
    row.metric = metric;
    const auto it = row.result.fit.find(metric);
    row.value = it != row.result.fit.end()
                    ? it->second
                    : FitValue{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cmosq::experiments
