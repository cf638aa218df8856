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

// Emulation of the cryogenic controller chip: 4-byte command frames, the
// sequencing state machine, the 32 charge-lock fast-gate (CLFG) cells, the
// ring oscillator and the gate waveforms the cells produce.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cmosq::controller {

inline constexpr int kNumCells = 32;

// Wire encodings. Hold voltages use 2^-14 V per LSB so codes 0..49152 span
// 0..3 V exactly; pulse levels are 8-bit codes at 1/64 V; artificial power is
// 10 nW per LSB.
inline constexpr std::uint16_t kHoldCodeMax = 49152;
inline constexpr double kHoldVoltsPerCode = 1.0 / 16384.0;
inline constexpr double kLevelVoltsPerCode = 1.0 / 64.0;
inline constexpr double kArtificialWattsPerCode = 10e-9;

enum class Opcode : std::uint8_t {
  kSetHold = 0x01,
  kSetLevels = 0x02,
  kLock = 0x03,
  kUnlock = 0x04,
  kArm = 0x05,
  kOscConfig = 0x06,
  kArtificialPower = 0x07,
  kQuery = 0x08,
};

/// Opcodes that address a single cell and therefore range-check cell_addr.
bool is_per_cell(Opcode op);
std::string_view to_string(Opcode op);
std::optional<Opcode> opcode_from_string(std::string_view name);

enum class PulseLevel : std::uint8_t { kLow, kHigh };
enum class FsmState : std::uint8_t { kIdle, kProgramming, kLocked, kArmed, kPulsing };
enum class TriggerSource : std::uint8_t { kExternal, kInternal };

std::string_view to_string(FsmState s);

struct Volts {
  double value = 0.0;
  bool operator==(const Volts&) const = default;
};

struct Watts {
  double value = 0.0;
  bool operator==(const Watts&) const = default;
};

struct LevelPair {
  double v_high = 0.0;
  double v_low = 0.0;
  bool operator==(const LevelPair&) const = default;
};

/// Register contents of an OSC_CONFIG frame:
/// bit 15 enable, bits 14..12 tap, bits 11..8 trim, bits 7..0 divider.
struct OscillatorSettings {
  bool enabled = false;
  int tap_select = 0;
  int trim_bits = 8;
  int divider = 1;
  bool operator==(const OscillatorSettings&) const = default;
};

struct OscillatorConfig {
  int tap_select = 0;    // 3 bits
  int trim_bits = 8;     // 4 bits, 8 is neutral
  int divider = 1;       // 1..255
  double t_inverter = 1.0 / (2.0 * 11.0 * 30e6);
  bool enabled = false;
};

using Payload = std::variant<std::monostate, Volts, LevelPair, OscillatorSettings, Watts>;

struct Command {
  Opcode opcode = Opcode::kQuery;
  std::uint8_t cell_addr = 0;
  std::uint16_t raw = 0;
  Payload value;  // decoded physical value, consistent with raw

  bool operator==(const Command&) const = default;
};

using Frame = std::array<std::uint8_t, 4>;

/// Decodes [opcode:8][cell:8][payload:16], big-endian. Throws Error with
/// kUnknownOpcode, kAddressOutOfRange or kPayloadOutOfRange.
Command parse_frame(std::span<const std::uint8_t> bytes);
Frame encode_frame(const Command& cmd);

// Builders that quantize physical values to wire codes.
std::uint16_t hold_code(double volts);
std::uint8_t level_code(double volts);
Command make_set_hold(int cell, double volts);
Command make_set_levels(int cell, double v_high, double v_low);
Command make_lock(int cell);
Command make_unlock(int cell);
Command make_arm(int cell);
Command make_query(int cell);
Command make_osc_config(const OscillatorSettings& s);
Command make_artificial_power(double watts);

struct TriggerEdge {};
struct ClockTick {};
using ControllerInput = std::variant<Command, TriggerEdge, ClockTick>;

/// One charge-lock fast-gate cell. While unlocked the output follows v_hold;
/// once locked the stored v_locked decays with tau_leak and the capacitive
/// divider adds the pulse step when pulse_level is HIGH.
struct ClfgCell {
  double v_hold = 0.0;
  double v_locked = 0.0;  // output captured at LOCK
  bool locked = false;
  bool armed = false;
  double c_pulse = 100e-15;
  double c_parasitic = 900e-15;
  double v_high = 1.0;
  double v_low = 0.0;
  PulseLevel pulse_level = PulseLevel::kLow;
  double tau_leak = 1e7;
  double t_locked_at = 0.0;

  bool operator==(const ClfgCell&) const = default;
};

/// Capacitive-divider step C_pulse / (C_p + C_pulse) * (V_high - V_low).
double pulse_amplitude(const ClfgCell& cell);
double cell_output(const ClfgCell& cell, double now);

struct PowerModel {
  double p_digital_base = 20e-6;     // W, chip powered with oscillator off
  double osc_power_per_hz = 1e-12;   // W/Hz of oscillator output frequency
  double cell_power_per_hz = 2e-14;  // W/Hz per pulsing cell (20 nW/MHz)
};

struct CellChange {
  int cell = 0;
  ClfgCell after;
};

struct Event {
  double time = 0.0;
  std::string event;
  int cell = -1;
  FsmState from = FsmState::kIdle;
  FsmState to = FsmState::kIdle;
  bool accepted = true;
  std::string detail;
  std::vector<CellChange> changes;
};

struct ControllerState {
  FsmState fsm_state = FsmState::kIdle;
  std::array<ClfgCell, kNumCells> cells{};
  std::array<ClfgCell, kNumCells> initial_cells{};
  OscillatorConfig osc;
  TriggerSource trigger_source = TriggerSource::kExternal;
  PowerModel power;
  double p_artificial = 0.0;
  std::map<std::string, int> connections;  // gate name -> cell index
  std::vector<Event> event_log;
};

struct ControllerConfig {
  double c_pulse = 100e-15;
  double c_parasitic = 900e-15;
  double tau_leak = 1e7;
  double v_high = 1.0;
  double v_low = 0.0;
  PowerModel power;
  OscillatorConfig osc;
  TriggerSource trigger_source = TriggerSource::kExternal;
  std::map<std::string, int> connections{{"J", 0}, {"B", 1}};
};

ControllerState make_controller(const ControllerConfig& cfg);

struct StepOutcome {
  bool accepted = true;
  std::string reason;
};

/// Applies one input at time `now`. Illegal inputs are logged with
/// accepted=false and leave the FSM state and cells untouched. Throws
/// kInvalidArgument if `now` precedes the last logged event.
StepOutcome apply(ControllerState& state, const ControllerInput& input, double now);

/// Value-semantics form of apply().
ControllerState fsm_step(const ControllerState& state, const ControllerInput& input, double now);

int n_stages(int tap_select);
double oscillator_frequency(const OscillatorConfig& osc);

/// Digital base (affine in oscillator frequency) + armed cells pulsing at
/// pulse_rate + programmed artificial load.
double controller_power(const ControllerState& state, double pulse_rate);

struct WaveSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double volts = 0.0;  // output at t_start
  ClfgCell cell;
};

struct Waveform {
  std::vector<std::string> gates;
  std::vector<std::vector<WaveSegment>> segments;  // parallel to gates
  double horizon = 0.0;
  double dt = 0.0;

  struct Sample {
    double time;
    std::size_t gate;
    double volts;
  };
  /// Samples at k*dt plus every segment boundary, ordered by (time, gate).
  std::vector<Sample> samples() const;
};

/// Replays the event log into piecewise-constant per-gate traces on
/// [0, horizon]. Segment boundaries sit at the logged event times.
Waveform emit_waveform(const ControllerState& state, double horizon, double dt);

/// Segments of a single cell's output over [t0, t1].
std::vector<WaveSegment> cell_segments(const ControllerState& state, int cell, double t0, double t1);

struct TimedInput {
  double time = 0.0;
  ControllerInput input;
};

/// Text script: `<time_s> <OPCODE> <cell> <payload_hex>` per line, plus the
/// pseudo-ops `TRIGGER` and `TICK` (cell and payload optional). '#' starts a
/// comment.
std::vector<TimedInput> parse_script(std::istream& in);

/// Binary stream of 4-byte frames, one every frame_period seconds.
std::vector<TimedInput> parse_binary_stream(std::span<const std::uint8_t> bytes, double frame_period);

void replay(ControllerState& state, std::span<const TimedInput> inputs);

std::string event_to_json(const Event& e);

}  // namespace cmosq::controller
