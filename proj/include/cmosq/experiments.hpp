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

// Measurement protocols built from pulse schedules, the controller emulator
// and the thermal chain. Each run_* returns an ExperimentResult whose
// probability grid is laid out row-major over its axes (last axis fastest).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmosq/controller.hpp"
#include "cmosq/fitting.hpp"
#include "cmosq/physics.hpp"
#include "cmosq/shots.hpp"
#include "cmosq/thermal.hpp"

namespace cmosq::experiments {

enum class Kind { kRabiChevron, kRamsey, kHahn, kCpmgPsd, kRb1q, kCzFid, kDcz, kGlobalRabi, kStarkCal };
enum class ControlPath { kRt, kCryoCmos };

std::string to_string(Kind k);
std::optional<Kind> kind_from_string(const std::string& s);
std::string to_string(ControlPath p);

struct Axis {
  std::string name;
  std::vector<double> values;

  static Axis linspace(std::string name, double lo, double hi, int n);
};

/// Everything a run needs that does not vary with the protocol.
struct Setup {
  physics::SpinSystemParams spin;
  physics::NoiseModel noise;
  thermal::FridgeModel fridge;
  thermal::ElectronThermalModel electron;
  controller::ControllerConfig controller;
  std::string config_hash = "0000000000000000";
  int threads = 0;
  bool parallel = true;
};

/// Protocol knobs with shipped defaults. Levels are gate voltages on the
/// exchange (J) gate; HIGH is always LOW + the controller pulse step so both
/// control paths see the same two levels.
struct Protocol {
  int qubit = 2;               // addressed qubit for single-qubit protocols
  double v_idle = 1.20;        // J-gate LOW level for single-qubit protocols
  double v_exchange_low = 1.30;
  double v_global_low = 1.10;
  double t_init = 1e-6;        // duration of the frozen load stage
  double t_read = 1e-6;        // duration of the frozen readout stage
  double t_settle = 100e-9;    // LOW-level idle before and after pulses
  double mw_amp = 1.0;         // chevron drive amplitude
  bool ideal_pulses = true;    // Ramsey, echo and DCZ single-qubit pulses
  double pulse_amp = 1.0;      // finite pulses when ideal_pulses is false
  double ramsey_detuning = 1e6;  // virtual phase ramp, Hz
  std::vector<int> cpmg_n{1, 2, 4, 8, 16};
  std::vector<int> rb_lengths{1, 25, 50, 100, 200, 400};
  int rb_randomizations = 20;
  double rb_amp = 1.0;
  double rb_depolarizing = 0.0;  // injected after every Clifford
  double t_gap = 100e-9;         // LOW gap after each exchange window
  bool stark_correction = true;  // virtual Z undoing the nominal Stark phase
  std::optional<double> global_f_mw;  // defaults to f2 at the HIGH level
  double global_amp = 0.2418;
  double stark_amp = 0.2;
  double stark_fit_halfwidth = 1e6;  // Hz around the brightest point
};

struct ExperimentSpec {
  Kind kind = Kind::kRamsey;
  std::vector<Axis> axes;  // empty means the kind's default axes
  int shots = 1000;
  ControlPath control_path = ControlPath::kRt;
  std::uint64_t seed = 1;
  Protocol protocol;
};

struct FitValue {
  double value = 0.0;
  double stderr_ = 0.0;
};

struct Metadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  double power_w = 0.0;
  double t_mxc_k = 0.0;
  double t_e_k = 0.0;
};

struct ExperimentResult {
  Kind kind = Kind::kRamsey;
  ControlPath control_path = ControlPath::kRt;
  std::vector<Axis> axes;
  std::vector<double> p_blocked;  // sampled shot average
  std::vector<double> p_model;    // mean model probability over the shots
  std::vector<int> blocked;
  std::vector<int> shots;
  std::map<std::string, FitValue> fit;
  std::map<std::string, std::vector<double>> series;  // derived curves
  std::vector<std::string> notes;
  Metadata metadata;

  std::size_t size() const { return p_blocked.size(); }
  double fit_value(const std::string& name) const;
};

std::vector<Axis> default_axes(Kind kind, const Setup& setup, const Protocol& protocol);

/// Nominal (noise-free) frequencies used to aim drives.
double nominal_frequency(const physics::SpinSystemParams& spin, int qubit, double v_j);

/// Levels produced on the J gate for a programmed hold voltage: the hold is
/// quantized to the wire code and HIGH adds the divider step.
struct JLevels {
  double low = 0.0;
  double high = 0.0;
};
JLevels j_levels(const controller::ControllerConfig& cfg, double v_hold);

/// Abstract two-level segment and its realization on either control path.
struct LevelSegment {
  double duration = 0.0;
  bool high = false;
  physics::MicrowaveDrive mw;
  physics::DetuningStage stage = physics::DetuningStage::kSep13;
};
using LevelStep = std::variant<LevelSegment, physics::InstantGate, physics::Depolarize>;

/// RT: the two levels are applied directly. CRYO_CMOS: a controller is
/// programmed with the hold, locked and armed, and triggered at every
/// LOW/HIGH boundary; each segment takes the cell output at its start.
physics::PulseSchedule realize(const std::vector<LevelStep>& steps, ControlPath path,
                               const controller::ControllerConfig& cfg, double v_hold);

/// Controller trace for the CRYO_CMOS realization of a level sequence.
controller::ControllerState program_controller(const std::vector<LevelStep>& steps,
                                               const controller::ControllerConfig& cfg, double v_hold,
                                               double t_start);

ExperimentResult run_rabi_chevron(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_ramsey(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_hahn(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_cpmg_psd(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_rb_1q(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_cz_fid(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_dcz(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_global_rabi(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run_stark_cal(const Setup& setup, const ExperimentSpec& spec);
ExperimentResult run(const Setup& setup, const ExperimentSpec& spec);

// Single-qubit Clifford group generated by {+-X/2, +-Y/2, X, Y}.
struct Clifford {
  physics::Mat2 unitary;
  std::vector<int> generators;  // indices into clifford_generators()
};
const std::vector<physics::Mat2>& clifford_generators();
const std::vector<Clifford>& clifford_table();
/// Index of the table element equal to u up to global phase, or -1.
int clifford_index(const physics::Mat2& u);

/// Controller configuration of one thermal-sweep point.
struct Scenario {
  std::string name;
  bool powered = true;
  bool osc_enabled = false;
  int tap = 0;
  int trim = 8;
  int divider = 1;
  int locked_cells = 0;
  int pulsing_cells = 0;
  double pulse_rate = 0.0;  // Hz per pulsing cell
};

/// Default sweep: CMOS off, locked idle, pulsing, oscillator max.
std::vector<Scenario> default_scenarios();
Scenario oscillator_off();
Scenario oscillator_max();

/// Dissipated power of a scenario, from an emulated controller.
double scenario_power(const controller::ControllerConfig& cfg, const Scenario& s);

struct ThermalRow {
  Scenario scenario;
  double osc_frequency = 0.0;
  thermal::ThermalPoint thermal;
  std::string metric;
  FitValue value;
  ExperimentResult result;
};

/// For each scenario: power -> mixing chamber -> electrons -> scaled noise ->
/// inner experiment. Shares the seed so points use common random numbers.
std::vector<ThermalRow> run_with_thermal_feedback(const Setup& setup, const ExperimentSpec& inner,
                                                  const std::vector<Scenario>& scenarios);

/// Headline metric name of an experiment kind (e.g. t2_star_s for RAMSEY).
std::string headline_metric(Kind kind);

// Serialization. CSV starts with a "# cmosq" provenance comment.
std::string result_csv(const ExperimentResult& r);
std::string result_json(const ExperimentResult& r);
std::string thermal_csv(const std::vector<ThermalRow>& rows, const Metadata& meta);
std::string thermal_json(const std::vector<ThermalRow>& rows, const Metadata& meta);
std::string provenance_line(const Metadata& meta);

}  // namespace cmosq::experiments
