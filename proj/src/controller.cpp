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

#include "cmosq/controller.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "json.hpp"

#include "cmosq/error.hpp"
#include "cmosq/format.hpp"

namespace cmosq::controller {

namespace {

constexpr std::array<std::pair<Opcode, std::string_view>, 8> kOpcodeNames{{
    {Opcode::kSetHold, "SET_HOLD"},
    {Opcode::kSetLevels, "SET_LEVELS"},
    {Opcode::kLock, "LOCK"},
    {Opcode::kUnlock, "UNLOCK"},
    {Opcode::kArm, "ARM"},
    {Opcode::kOscConfig, "OSC_CONFIG"},
    {Opcode::kArtificialPower, "ARTIFICIAL_POWER"},
    {Opcode::kQuery, "QUERY"},
}};

bool valid_opcode(std::uint8_t b) { return b >= 0x01 && b <= 0x08; }

Payload decode_payload(Opcode op, std::uint16_t raw) {
  switch (op) {
    case Opcode::kSetHold:
      if (raw > kHoldCodeMax) {
        throw Error(ErrorCode::kPayloadOutOfRange,
                    "hold code " + std::to_string(raw) + " exceeds " + std::to_string(kHoldCodeMax));
      }
      return Volts{raw * kHoldVoltsPerCode};
    case Opcode::kSetLevels:
      return LevelPair{(raw >> 8) * kLevelVoltsPerCode, (raw & 0xFF) * kLevelVoltsPerCode};
    case Opcode::kOscConfig: {
      OscillatorSettings s;
      s.enabled = (raw >> 15) & 1;
      s.tap_select = (raw >> 12) & 0x7;
      s.trim_bits = (raw >> 8) & 0xF;
      s.divider = raw & 0xFF;
      if (s.divider == 0) throw Error(ErrorCode::kPayloadOutOfRange, "oscillator divider 0");
      return s;
    }
    case Opcode::kArtificialPower:
      return Watts{raw * kArtificialWattsPerCode};
    default:
      return std::monostate{};
  }
}

Command make(Opcode op, int cell, std::uint16_t raw) {
  if (cell < 0 || cell > 255) throw Error(ErrorCode::kAddressOutOfRange, std::to_string(cell));
  Frame f{static_cast<std::uint8_t>(op), static_cast<std::uint8_t>(cell),
          static_cast<std::uint8_t>(raw >> 8), static_cast<std::uint8_t>(raw & 0xFF)};
  return parse_frame(f);
}

FsmState after_programming(FsmState s) {
  return s == FsmState::kIdle ? FsmState::kProgramming : s;
}

}  // namespace

std::string_view to_string(Opcode op) {
  for (const auto& [o, name] : kOpcodeNames) {
    if (o == op) return name;
  }
  return "UNKNOWN";
}

std::optional<Opcode> opcode_from_string(std::string_view name) {
  for (const auto& [o, n] : kOpcodeNames) {
    if (n == name) return o;
  }
  return std::nullopt;
}

std::string_view to_string(FsmState s) {
  switch (s) {
    case FsmState::kIdle: return "IDLE";
    case FsmState::kProgramming: return "PROGRAMMING";
    case FsmState::kLocked: return "LOCKED";
    case FsmState::kArmed: return "ARMED";
    case FsmState::kPulsing: return "PULSING";
  }
  return "?";
}

bool is_per_cell(Opcode op) {
  switch (op) {
    case Opcode::kOscConfig:
    case Opcode::kArtificialPower:
      return false;
    default:
      return true;
  }
}

Command parse_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 4) {
    throw Error(ErrorCode::kInvalidArgument, "frame must be 4 bytes, got " + std::to_string(bytes.size()));
  }
  if (!valid_opcode(bytes[0])) {
    throw Error(ErrorCode::kUnknownOpcode, "0x" + fmt_hex64(bytes[0]).substr(14));
  }
  Command cmd;
  cmd.opcode = static_cast<Opcode>(bytes[0]);
  cmd.cell_addr = bytes[1];
  cmd.raw = static_cast<std::uint16_t>((bytes[2] << 8) | bytes[3]);
  if (is_per_cell(cmd.opcode) && cmd.cell_addr >= kNumCells) {
    throw Error(ErrorCode::kAddressOutOfRange, "cell " + std::to_string(cmd.cell_addr));
  }
  cmd.value = decode_payload(cmd.opcode, cmd.raw);
  return cmd;
}

Frame encode_frame(const Command& cmd) {
  return {static_cast<std::uint8_t>(cmd.opcode), cmd.cell_addr, static_cast<std::uint8_t>(cmd.raw >> 8),
          static_cast<std::uint8_t>(cmd.raw & 0xFF)};
}

std::uint16_t hold_code(double volts) {
  const double code = std::round(volts / kHoldVoltsPerCode);
  if (!(code >= 0.0 && code <= kHoldCodeMax)) {
    throw Error(ErrorCode::kPayloadOutOfRange, "hold voltage " + fmt_double(volts) + " V outside 0..3 V");
  }
  return static_cast<std::uint16_t>(code);
}

std::uint8_t level_code(double volts) {
  const double code = std::round(volts / kLevelVoltsPerCode);
  if (!(code >= 0.0 && code <= 255.0)) {
    throw Error(ErrorCode::kPayloadOutOfRange, "pulse level " + fmt_double(volts) + " V not encodable");
  }
  return static_cast<std::uint8_t>(code);
}

Command make_set_hold(int cell, double volts) { return make(Opcode::kSetHold, cell, hold_code(volts)); }

Command make_set_levels(int cell, double v_high, double v_low) {
  return make(Opcode::kSetLevels, cell,
              static_cast<std::uint16_t>((level_code(v_high) << 8) | level_code(v_low)));
}

Command make_lock(int cell) { return make(Opcode::kLock, cell, 0); }
Command make_unlock(int cell) { return make(Opcode::kUnlock, cell, 0); }
Command make_arm(int cell) { return make(Opcode::kArm, cell, 0); }
Command make_query(int cell) { return make(Opcode::kQuery, cell, 0); }

Command make_osc_config(const OscillatorSettings& s) {
  if (s.tap_select < 0 || s.tap_select > 7 || s.trim_bits < 0 || s.trim_bits > 15 || s.divider < 1 ||
      s.divider > 255) {
    throw Error(ErrorCode::kPayloadOutOfRange, "oscillator settings out of range");
  }
  const auto raw = static_cast<std::uint16_t>((s.enabled ? 0x8000 : 0) | (s.tap_select << 12) |
                                              (s.trim_bits << 8) | s.divider);
  return make(Opcode::kOscConfig, 0, raw);
}

Command make_artificial_power(double watts) {
  const double code = std::round(watts / kArtificialWattsPerCode);
  if (!(code >= 0.0 && code <= 65535.0)) {
    throw Error(ErrorCode::kPayloadOutOfRange, "artificial power " + fmt_double(watts) + " W");
  }
  return make(Opcode::kArtificialPower, 0, static_cast<std::uint16_t>(code));
}

double pulse_amplitude(const ClfgCell& cell) {
  return cell.c_pulse / (cell.c_parasitic + cell.c_pulse) * (cell.v_high - cell.v_low);
}

double cell_output(const ClfgCell& cell, double now) {
  if (!cell.locked) return cell.v_hold;
  const double held = cell.v_locked * std::exp(-(now - cell.t_locked_at) / cell.tau_leak);
  return held + (cell.pulse_level == PulseLevel::kHigh ? pulse_amplitude(cell) : 0.0);
}

ControllerState make_controller(const ControllerConfig& cfg) {
  if (!(cfg.c_pulse > 0.0) || !(cfg.c_parasitic >= 0.0) || !(cfg.tau_leak > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cell capacitances/leakage out of range");
  }
  ControllerState s;
  for (auto& c : s.cells) {
    c.c_pulse = cfg.c_pulse;
    c.c_parasitic = cfg.c_parasitic;
    c.tau_leak = cfg.tau_leak;
    c.v_high = cfg.v_high;
    c.v_low = cfg.v_low;
  }
  s.initial_cells = s.cells;
  s.osc = cfg.osc;
  s.power = cfg.power;
  s.trigger_source = cfg.trigger_source;
  s.connections = cfg.connections;
  for (const auto& [gate, cell] : s.connections) {
    if (cell < 0 || cell >= kNumCells) throw Error(ErrorCode::kAddressOutOfRange, "gate " + gate);
  }
  return s;
}

namespace {

struct Transition {
  FsmState to;
  std::vector<int> touched;
  std::string detail;
};

// Returns the reason for rejection, or empty on success with `t` filled in.
std::string plan_command(const ControllerState& s, const Command& cmd, double now,
                         std::array<ClfgCell, kNumCells>& cells, OscillatorConfig& osc, double& p_art,
                         Transition& t) {
  const int idx = cmd.cell_addr;
  t.to = s.fsm_state;
  switch (cmd.opcode) {
    case Opcode::kSetHold: {
      cells[idx].v_hold = std::get<Volts>(cmd.value).value;
      t.to = after_programming(s.fsm_state);
      t.touched = {idx};
      return {};
    }
    case Opcode::kSetLevels: {
      if (cells[idx].armed) return "SET_LEVELS on armed cell " + std::to_string(idx);
      const auto lv = std::get<LevelPair>(cmd.value);
      cells[idx].v_high = lv.v_high;
      cells[idx].v_low = lv.v_low;
      t.to = after_programming(s.fsm_state);
      t.touched = {idx};
      return {};
    }
    case Opcode::kLock: {
      ClfgCell& c = cells[idx];
      if (c.locked) return "cell " + std::to_string(idx) + " already locked";
      c.v_locked = c.v_hold;
      c.locked = true;
      c.t_locked_at = now;
      c.pulse_level = PulseLevel::kLow;
      if (s.fsm_state == FsmState::kIdle || s.fsm_state == FsmState::kProgramming) t.to = FsmState::kLocked;
      t.touched = {idx};
      return {};
    }
    case Opcode::kUnlock: {
      ClfgCell& c = cells[idx];
      if (!c.locked) return "cell " + std::to_string(idx) + " not locked";
      c.locked = false;
      c.armed = false;
      c.pulse_level = PulseLevel::kLow;
      const bool armed = std::any_of(cells.begin(), cells.end(), [](const ClfgCell& x) { return x.armed; });
      const bool locked = std::any_of(cells.begin(), cells.end(), [](const ClfgCell& x) { return x.locked; });
      if (!armed) t.to = locked ? FsmState::kLocked : FsmState::kProgramming;
      t.touched = {idx};
      return {};
    }
    case Opcode::kArm: {
      ClfgCell& c = cells[idx];
      if (!c.locked) return "ARM on unlocked cell " + std::to_string(idx);
      if (c.armed) return "cell " + std::to_string(idx) + " already armed";
      c.armed = true;
      if (s.fsm_state == FsmState::kLocked) t.to = FsmState::kArmed;
      t.touched = {idx};
      return {};
    }
    case Opcode::kOscConfig: {
      const auto st = std::get<OscillatorSettings>(cmd.value);
      osc.enabled = st.enabled;
      osc.tap_select = st.tap_select;
      osc.trim_bits = st.trim_bits;
      osc.divider = st.divider;
      t.to = after_programming(s.fsm_state);
      return {};
    }
    case Opcode::kArtificialPower:
      p_art = std::get<Watts>(cmd.value).value;
      t.to = after_programming(s.fsm_state);
      return {};
    case Opcode::kQuery:
      t.detail = fmt_double(cell_output(cells[idx], now));
      return {};
  }
  return "unhandled opcode";
}

std::string plan_toggle(const ControllerState& s, std::array<ClfgCell, kNumCells>& cells, Transition& t) {
  if (s.fsm_state != FsmState::kArmed && s.fsm_state != FsmState::kPulsing) {
    return std::string("trigger edge in ") + std::string(to_string(s.fsm_state));
  }
  for (int i = 0; i < kNumCells; ++i) {
    if (!cells[i].armed) continue;
    cells[i].pulse_level = cells[i].pulse_level == PulseLevel::kLow ? PulseLevel::kHigh : PulseLevel::kLow;
    t.touched.push_back(i);
  }
  t.to = FsmState::kPulsing;
  return {};
}

}  // namespace

StepOutcome apply(ControllerState& s, const ControllerInput& input, double now) {
  if (!s.event_log.empty() && now < s.event_log.back().time) {
    throw Error(ErrorCode::kInvalidArgument,
                "input at t=" + fmt_double(now) + " precedes last event at t=" + fmt_double(s.event_log.back().time));
  }

  auto cells = s.cells;
  auto osc = s.osc;
  double p_art = s.p_artificial;
  Transition t{s.fsm_state, {}, {}};
  std::string reason;
  Event ev;
  ev.time = now;
  ev.from = s.fsm_state;

  if (const auto* cmd = std::get_if<Command>(&input)) {
    ev.event = std::string(to_string(cmd->opcode));
    if (is_per_cell(cmd->opcode)) ev.cell = cmd->cell_addr;
    reason = plan_command(s, *cmd, now, cells, osc, p_art, t);
  } else if (std::holds_alternative<TriggerEdge>(input)) {
    ev.event = "TRIGGER";
    reason = s.trigger_source == TriggerSource::kInternal ? "external trigger while internal source selected"
                                                          : plan_toggle(s, cells, t);
  } else {
    // Clock ticks only matter when the oscillator drives the trigger.
    if (s.trigger_source != TriggerSource::kInternal ||
        (s.fsm_state != FsmState::kArmed && s.fsm_state != FsmState::kPulsing)) {
      return {};
    }
    ev.event = "TICK";
    reason = plan_toggle(s, cells, t);
  }

  if (!reason.empty()) {
    ev.to = s.fsm_state;
    ev.accepted = false;
    ev.detail = reason;
    s.event_log.push_back(std::move(ev));
    return {false, reason};
  }

  ev.to = t.to;
  ev.detail = t.detail;
  for (int i : t.touched) ev.changes.push_back({i, cells[i]});
  s.cells = cells;
  s.osc = osc;
  s.p_artificial = p_art;
  s.fsm_state = t.to;
  s.event_log.push_back(std::move(ev));
  return {};
}

ControllerState fsm_step(const ControllerState& state, const ControllerInput& input, double now) {
  ControllerState next = state;
  apply(next, input, now);
  return next;
}

int n_stages(int tap_select) {
  if (tap_select < 0 || tap_select > 7) throw Error(ErrorCode::kInvalidArgument, "tap_select must be 0..7");
  return 11 + 10 * tap_select;
}

double oscillator_frequency(const OscillatorConfig& osc) {
  if (!osc.enabled) throw Error(ErrorCode::kOscillatorDisabled, "oscillator is disabled");
  if (osc.divider < 1 || osc.divider > 255) throw Error(ErrorCode::kInvalidArgument, "divider must be 1..255");
  if (osc.trim_bits < 0 || osc.trim_bits > 15) throw Error(ErrorCode::kInvalidArgument, "trim must be 0..15");
  // Trim scales the per-stage delay from 0.5x (code 0) to 1.4375x (code 15).
  const double t_stage = osc.t_inverter * (0.5 + osc.trim_bits / 16.0);
  const double f_tap = 1.0 / (2.0 * n_stages(osc.tap_select) * t_stage);
  return f_tap / osc.divider;
}

double controller_power(const ControllerState& state, double pulse_rate) {
  double p = state.power.p_digital_base;
  if (state.osc.enabled) p += state.power.osc_power_per_hz * oscillator_frequency(state.osc);
  for (const auto& c : state.cells) {
    if (c.armed) p += state.power.cell_power_per_hz * pulse_rate;
  }
  return p + state.p_artificial;
}

std::vector<WaveSegment> cell_segments(const ControllerState& state, int cell, double t0, double t1) {
  if (cell < 0 || cell >= kNumCells) throw Error(ErrorCode::kAddressOutOfRange, std::to_string(cell));
  std::vector<WaveSegment> out;
  ClfgCell current = state.initial_cells[cell];
  double seg_start = t0;
  for (const auto& ev : state.event_log) {
    const auto it = std::find_if(ev.changes.begin(), ev.changes.end(),
                                 [&](const CellChange& c) { return c.cell == cell; });
    if (it == ev.changes.end()) continue;
    if (ev.time <= t0) {
      current = it->after;
      continue;
    }
    if (ev.time >= t1) break;
    out.push_back({seg_start, ev.time, cell_output(current, seg_start), current});
    current = it->after;
    seg_start = ev.time;
  }
  out.push_back({seg_start, t1, cell_output(current, seg_start), current});
  return out;
}

Waveform emit_waveform(const ControllerState& state, double horizon, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  if (!(horizon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "horizon must be non-negative");
  Waveform w;
  w.horizon = horizon;
  w.dt = dt;
  for (const auto& [gate, cell] : state.connections) {
    w.gates.push_back(gate);
    w.segments.push_back(cell_segments(state, cell, 0.0, horizon));
  }
  return w;
}

std::vector<Waveform::Sample> Waveform::samples() const {
  std::vector<Sample> out;
  const auto n = static_cast<long long>(std::floor(horizon / dt + 1e-9));
  for (std::size_t g = 0; g < gates.size(); ++g) {
    std::vector<double> times;
    for (long long k = 0; k <= n; ++k) times.push_back(static_cast<double>(k) * dt);
    for (const auto& seg : segments[g]) times.push_back(seg.t_start);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::size_t si = 0;
    for (double t : times) {
      while (si + 1 < segments[g].size() && segments[g][si + 1].t_start <= t) ++si;
      out.push_back({t, g, cell_output(segments[g][si].cell, t)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Sample& a, const Sample& b) {
    return a.time < b.time || (a.time == b.time && a.gate < b.gate);
  });
  return out;
}

std::vector<TimedInput> parse_script(std::istream& in) {
  std::vector<TimedInput> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    ls.imbue(std::locale::classic());
    std::string time_s, op;
    if (!(ls >> time_s)) continue;
    const auto where = "script line " + std::to_string(lineno);
    if (!(ls >> op)) throw Error(ErrorCode::kInvalidArgument, where + ": missing opcode");
    double t = 0.0;
    {
      std::istringstream ts(time_s);
      ts.imbue(std::locale::classic());
      if (!(ts >> t)) throw Error(ErrorCode::kInvalidArgument, where + ": bad time '" + time_s + "'");
    }
    if (op == "TRIGGER") {
      out.push_back({t, TriggerEdge{}});
      continue;
    }
    if (op == "TICK") {
      out.push_back({t, ClockTick{}});
      continue;
    }
    const auto opcode = opcode_from_string(op);
    if (!opcode) throw Error(ErrorCode::kUnknownOpcode, where + ": " + op);
    std::string cell_s = "0", payload_s = "0";
    ls >> cell_s >> payload_s;
    unsigned long cell = 0, payload = 0;
    try {
      cell = std::stoul(cell_s, nullptr, 0);
      payload = std::stoul(payload_s, nullptr, 16);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, where + ": bad cell or payload");
    }
    if (cell > 255 || payload > 0xFFFF) throw Error(ErrorCode::kInvalidArgument, where + ": field overflow");
    const Frame f{static_cast<std::uint8_t>(*opcode), static_cast<std::uint8_t>(cell),
                  static_cast<std::uint8_t>(payload >> 8), static_cast<std::uint8_t>(payload & 0xFF)};
    out.push_back({t, parse_frame(f)});
  }
  return out;
}

std::vector<TimedInput> parse_binary_stream(std::span<const std::uint8_t> bytes, double frame_period) {
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::kInvalidArgument, "binary stream length not a multiple of 4");
  std::vector<TimedInput> out;
  for (std::size_t i = 0; i < bytes.size(); i += 4) {
    out.push_back({static_cast<double>(i / 4) * frame_period, parse_frame(bytes.subspan(i, 4))});
  }
  return out;
}

void replay(ControllerState& state, std::span<const TimedInput> inputs) {
  for (const auto& in : inputs) apply(state, in.input, in.time);
}

std::string event_to_json(const Event& e) {
  nlohmann::ordered_json j;
  j["t"] = e.time;
  j["event"] = e.event;
  if (e.cell >= 0) j["cell"] = e.cell;
  j["from"] = std::string(to_string(e.from));
  j["to"] = std::string(to_string(e.to));
  j["accepted"] = e.accepted;
  if (!e.detail.empty()) j["detail"] = e.detail;
  if (!e.changes.empty()) {
    auto& arr = j["cells"];
    arr = nlohmann::ordered_json::array();
    for (const auto& c : e.changes) {
      arr.push_back({{"cell", c.cell},
                     {"locked", c.after.locked},
                     {"armed", c.after.armed},
                     {"level", c.after.pulse_level == PulseLevel::kHigh ? "HIGH" : "LOW"},
                     {"v_out", cell_output(c.after, e.time)}});
    }
  }
  return j.dump();
}

}  // namespace cmosq::controller
