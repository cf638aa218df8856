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

#include "cmosq/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cmosq/error.hpp"
#include "cmosq/format.hpp"

namespace cmosq::config {

namespace {

using nlohmann::json;
using experiments::Axis;
using experiments::Kind;
using experiments::Scenario;

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::kConfig, key + ": " + msg);
}

// Strict view of one JSON object. Keys that are never read are reported as
// unknown by finish().
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }

  const json& at(const std::string& k) {
    if (!j_.contains(k)) fail(key(k), "missing required key");
    seen_.insert(k);
    return j_.at(k);
  }

  double number(const std::string& k) {
    const json& v = at(k);
    if (!v.is_number()) fail(key(k), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key(k), "must be finite");
    return d;
  }

  // null stands for infinity
  double number_or_inf(const std::string& k) {
    if (at(k).is_null()) return std::numeric_limits<double>::infinity();
    return number(k);
  }

  int integer(const std::string& k) {
    const json& v = at(k);
    if (!v.is_number_integer()) fail(key(k), "expected an integer");
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) fail(key(k), "out of range");
    return static_cast<int>(i);
  }

  bool boolean(const std::string& k) {
    const json& v = at(k);
    if (!v.is_boolean()) fail(key(k), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& k) {
    const json& v = at(k);
    if (!v.is_string()) fail(key(k), "expected a string");
    return v.get<std::string>();
  }

  Section section(const std::string& k) { return Section(at(k), key(k)); }

  template <class T, class F>
  void optional(const std::string& k, T& out, F&& read) {
    if (has(k)) out = (this->*read)(k);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(key(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) fail(key, msg);
}

physics::SpinSystemParams read_spin(Section s) {
  physics::SpinSystemParams p;
  p.b0 = s.number("b0");
  p.f1_0 = s.number("f1_0");
  p.f2_0 = s.number("f2_0");
  p.v_ref = s.number("v_ref");
  p.alpha1 = s.number("alpha1");
  p.alpha2 = s.number("alpha2");
  p.j0 = s.number("j0");
  p.vj_on = s.number("vj_on");
  p.vj_scale = s.number("vj_scale");
  p.rabi_per_volt = s.number("rabi_per_volt");
  p.t1 = s.number_or_inf("t1");
  Section spam = s.section("spam");
  p.spam.f_prep = spam.number("f_prep");
  p.spam.f_read_s = spam.number("f_read_s");
  p.spam.f_read_t = spam.number("f_read_t");
  spam.finish();
  s.finish();
  require(p.vj_scale > 0.0, s.key("vj_scale"), "must be positive");
  require(p.t1 > 0.0, s.key("t1"), "must be positive or null");
  for (auto [k, v] : {std::pair{"f1_0", p.f1_0}, {"f2_0", p.f2_0}, {"j0", p.j0}, {"rabi_per_volt", p.rabi_per_volt}}) {
    require(v >= 0.0, s.key(k), "must be non-negative");
  }
  for (auto [k, v] : {std::pair{"f_prep", p.spam.f_prep}, {"f_read_s", p.spam.f_read_s}, {"f_read_t", p.spam.f_read_t}}) {
    require(v >= 0.0 && v <= 1.0, s.key("spam") + "." + k, "must lie in [0, 1]");
  }
  return p;
}

physics::NoiseModel read_noise(Section s) {
  physics::NoiseModel n;
  n.sigma_f1 = s.number("sigma_f1");
  n.sigma_f2 = s.number("sigma_f2");
  n.sigma_j_frac = s.number("sigma_j_frac");
  n.s_white_0 = s.number("s_white_0");
  n.temp_exponent = s.number("temp_exponent");
  n.j_temp_exponent = s.number("j_temp_exponent");
  n.t_ref = s.number("t_ref");
  n.t_e = n.t_ref;
  s.finish();
  for (auto [k, v] : {std::pair{"sigma_f1", n.sigma_f1}, {"sigma_f2", n.sigma_f2}, {"sigma_j_frac", n.sigma_j_frac},
                      {"s_white_0", n.s_white_0}}) {
    require(v >= 0.0, s.key(k), "must be non-negative");
  }
  require(n.t_ref > 0.0, s.key("t_ref"), "must be positive");
  return n;
}

thermal::FridgeModel read_fridge(Section s) {
  thermal::FridgeModel f;
  f.t_base = s.number("t_base");
  f.kappa = s.number("kappa");
  f.p_parasitic = s.number("p_parasitic");
  s.finish();
  require(f.t_base > 0.0, s.key("t_base"), "must be positive");
  require(f.kappa > 0.0, s.key("kappa"), "must be positive");
  require(f.p_parasitic >= 0.0, s.key("p_parasitic"), "must be non-negative");
  return f;
}

thermal::ElectronThermalModel read_electron(Section s) {
  thermal::ElectronThermalModel e;
  e.t_e_base = s.number("t_e_base");
  e.blend_exponent = s.number("blend_exponent");
  e.direct_coupling = s.number("direct_coupling");
  s.finish();
  require(e.t_e_base > 0.0, s.key("t_e_base"), "must be positive");
  require(e.blend_exponent >= 1.0, s.key("blend_exponent"), "must be >= 1");
  require(e.direct_coupling >= 0.0, s.key("direct_coupling"), "must be non-negative");
  return e;
}

controller::ControllerConfig read_controller(Section s) {
  controller::ControllerConfig c;
  c.c_pulse = s.number("c_pulse");
  c.c_parasitic = s.number("c_parasitic");
  c.tau_leak = s.number_or_inf("tau_leak");
  c.v_high = s.number("v_high");
  c.v_low = s.number("v_low");
  const std::string trig = s.string("trigger_source");
  if (trig == "external") {
    c.trigger_source = controller::TriggerSource::kExternal;
  } else if (trig == "internal") {
    c.trigger_source = controller::TriggerSource::kInternal;
  } else {
    fail(s.key("trigger_source"), "expected \"external\" or \"internal\"");
  }
  Section pw = s.section("power");
  c.power.p_digital_base = pw.number("p_digital_base");
  c.power.osc_power_per_hz = pw.number("osc_power_per_hz");
  c.power.cell_power_per_hz = pw.number("cell_power_per_hz");
  pw.finish();
  for (auto [k, v] : {std::pair{"p_digital_base", c.power.p_digital_base},
                      {"osc_power_per_hz", c.power.osc_power_per_hz},
                      {"cell_power_per_hz", c.power.cell_power_per_hz}}) {
    require(v >= 0.0, pw.key(k), "must be non-negative");
  }
  Section osc = s.section("oscillator");
  c.osc.tap_select = osc.integer("tap_select");
  c.osc.trim_bits = osc.integer("trim_bits");
  c.osc.divider = osc.integer("divider");
  c.osc.t_inverter = osc.number("t_inverter");
  c.osc.enabled = osc.boolean("enabled");
  osc.finish();
  require(c.osc.tap_select >= 0 && c.osc.tap_select <= 7, osc.key("tap_select"), "must lie in 0..7");
  require(c.osc.trim_bits >= 0 && c.osc.trim_bits <= 15, osc.key("trim_bits"), "must lie in 0..15");
  require(c.osc.divider >= 1 && c.osc.divider <= 255, osc.key("divider"), "must lie in 1..255");
  require(c.osc.t_inverter > 0.0, osc.key("t_inverter"), "must be positive");
  const json& conn = s.at("connections");
  if (!conn.is_object()) fail(s.key("connections"), "expected an object");
  c.connections.clear();
  for (auto it = conn.begin(); it != conn.end(); ++it) {
    const std::string k = s.key("connections") + "." + it.key();
    if (!it.value().is_number_integer()) fail(k, "expected an integer cell index");
    const auto cell = it.value().get<std::int64_t>();
    require(cell >= 0 && cell < controller::kNumCells, k, "cell index must lie in 0..31");
    c.connections[it.key()] = static_cast<int>(cell);
  }
  require(c.connections.count("J") == 1, s.key("connections") + ".J", "missing required key");
  s.finish();
  require(c.c_pulse > 0.0, s.key("c_pulse"), "must be positive");
  require(c.c_parasitic >= 0.0, s.key("c_parasitic"), "must be non-negative");
  require(c.tau_leak > 0.0, s.key("tau_leak"), "must be positive or null");
  return c;
}

Grid read_grid(Section s) {
  Grid g;
  g.start = s.number("start");
  g.stop = s.number("stop");
  g.points = s.integer("points");
  s.finish();
  require(g.points >= 1, s.key("points"), "must be >= 1");
  return g;
}

Axis read_axis(const json& j, const std::string& path) {
  Section s(j, path);
  Axis a;
  a.name = s.string("name");
  if (s.has("values")) {
    const json& v = s.at("values");
    if (!v.is_array() || v.empty()) fail(s.key("values"), "expected a non-empty array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) fail(s.key("values"), "expected a non-empty array of numbers");
      a.values.push_back(x.get<double>());
    }
  } else {
    Grid g;
    g.start = s.number("start");
    g.stop = s.number("stop");
    g.points = s.integer("points");
    require(g.points >= 1, s.key("points"), "must be >= 1");
    a.values = g.values();
  }
  s.finish();
  return a;
}

std::vector<int> read_int_list(Section& s, const std::string& k) {
  const json& v = s.at(k);
  std::vector<int> out;
  if (!v.is_array() || v.empty()) fail(s.key(k), "expected a non-empty array of integers");
  for (const auto& x : v) {
    if (!x.is_number_integer() || x.get<std::int64_t>() < 1 || x.get<std::int64_t>() > 100000) {
      fail(s.key(k), "expected positive integers");
    }
    out.push_back(static_cast<int>(x.get<std::int64_t>()));
  }
  return out;
}

experiments::Protocol read_protocol(Section s) {
  experiments::Protocol p;
  s.optional("qubit", p.qubit, &Section::integer);
  s.optional("v_idle", p.v_idle, &Section::number);
  s.optional("v_exchange_low", p.v_exchange_low, &Section::number);
  s.optional("v_global_low", p.v_global_low, &Section::number);
  s.optional("t_init", p.t_init, &Section::number);
  s.optional("t_read", p.t_read, &Section::number);
  s.optional("t_settle", p.t_settle, &Section::number);
  s.optional("mw_amp", p.mw_amp, &Section::number);
  s.optional("ideal_pulses", p.ideal_pulses, &Section::boolean);
  s.optional("pulse_amp", p.pulse_amp, &Section::number);
  s.optional("ramsey_detuning", p.ramsey_detuning, &Section::number);
  if (s.has("cpmg_n")) p.cpmg_n = read_int_list(s, "cpmg_n");
  if (s.has("rb_lengths")) p.rb_lengths = read_int_list(s, "rb_lengths");
  s.optional("rb_randomizations", p.rb_randomizations, &Section::integer);
  s.optional("rb_amp", p.rb_amp, &Section::number);
  s.optional("rb_depolarizing", p.rb_depolarizing, &Section::number);
  s.optional("t_gap", p.t_gap, &Section::number);
  s.optional("stark_correction", p.stark_correction, &Section::boolean);
  if (s.has("global_f_mw") && !s.at("global_f_mw").is_null()) p.global_f_mw = s.number("global_f_mw");
  s.optional("global_amp", p.global_amp, &Section::number);
  s.optional("stark_amp", p.stark_amp, &Section::number);
  s.optional("stark_fit_halfwidth", p.stark_fit_halfwidth, &Section::number);
  s.finish();
  require(p.qubit == 1 || p.qubit == 2, s.key("qubit"), "must be 1 or 2");
  for (auto [k, v] : {std::pair{"t_init", p.t_init}, {"t_read", p.t_read}, {"t_settle", p.t_settle}}) {
    require(v > 0.0, s.key(k), "must be positive");
  }
  require(p.t_gap >= 0.0, s.key("t_gap"), "must be non-negative");
  require(p.rb_randomizations >= 1, s.key("rb_randomizations"), "must be >= 1");
  require(p.rb_depolarizing >= 0.0 && p.rb_depolarizing <= 1.0, s.key("rb_depolarizing"), "must lie in [0, 1]");
  require(p.stark_fit_halfwidth > 0.0, s.key("stark_fit_halfwidth"), "must be positive");
  return p;
}

Scenario read_scenario(const json& j, const std::string& path) {
  Section s(j, path);
  Scenario sc;
  sc.name = s.string("name");
  s.optional("powered", sc.powered, &Section::boolean);
  s.optional("osc_enabled", sc.osc_enabled, &Section::boolean);
  s.optional("tap", sc.tap, &Section::integer);
  s.optional("trim", sc.trim, &Section::integer);
  s.optional("divider", sc.divider, &Section::integer);
  s.optional("locked_cells", sc.locked_cells, &Section::integer);
  s.optional("pulsing_cells", sc.pulsing_cells, &Section::integer);
  s.optional("pulse_rate", sc.pulse_rate, &Section::number);
  s.finish();
  require(sc.tap >= 0 && sc.tap <= 7, s.key("tap"), "must lie in 0..7");
  require(sc.trim >= 0 && sc.trim <= 15, s.key("trim"), "must lie in 0..15");
  require(sc.divider >= 1 && sc.divider <= 255, s.key("divider"), "must lie in 1..255");
  require(sc.locked_cells >= 0 && sc.locked_cells <= controller::kNumCells, s.key("locked_cells"),
          "must lie in 0..32");
  require(sc.pulsing_cells >= 0 && sc.pulsing_cells <= sc.locked_cells, s.key("pulsing_cells"),
          "must lie in 0..locked_cells");
  require(sc.pulse_rate >= 0.0, s.key("pulse_rate"), "must be non-negative");
  return sc;
}

ExperimentDefaults read_experiments(Section s) {
  ExperimentDefaults d;
  s.optional("shots", d.shots, &Section::integer);
  require(d.shots >= 1, s.key("shots"), "must be >= 1");
  if (s.has("control_path")) {
    const std::string p = s.string("control_path");
    if (p == "RT") {
      d.control_path = experiments::ControlPath::kRt;
    } else if (p == "CRYO_CMOS") {
      d.control_path = experiments::ControlPath::kCryoCmos;
    } else {
      fail(s.key("control_path"), "expected \"RT\" or \"CRYO_CMOS\"");
    }
  }
  if (s.has("protocol")) d.protocol = read_protocol(s.section("protocol"));
  if (s.has("axes")) {
    const json& axes = s.at("axes");
    const std::string base = s.key("axes");
    if (!axes.is_object()) fail(base, "expected an object keyed by experiment kind");
    for (auto it = axes.begin(); it != axes.end(); ++it) {
      const std::string k = base + "." + it.key();
      const auto kind = experiments::kind_from_string(it.key());
      if (!kind) fail(k, "unknown experiment kind");
      if (!it.value().is_array()) fail(k, "expected an array of axes");
      std::vector<Axis> list;
      for (std::size_t i = 0; i < it.value().size(); ++i) {
        list.push_back(read_axis(it.value()[i], k + "[" + std::to_string(i) + "]"));
      }
      d.axes[*kind] = std::move(list);
    }
  }
  if (s.has("thermal_sweep")) d.thermal_sweep = read_grid(s.section("thermal_sweep"));
  require(d.thermal_sweep.start >= 0.0 && d.thermal_sweep.stop >= d.thermal_sweep.start, s.key("thermal_sweep"),
          "powers must satisfy 0 <= start <= stop");
  if (s.has("scenarios")) {
    const json& sc = s.at("scenarios");
    if (!sc.is_array() || sc.empty()) fail(s.key("scenarios"), "expected a non-empty array");
    d.scenarios.clear();
    for (std::size_t i = 0; i < sc.size(); ++i) {
      d.scenarios.push_back(read_scenario(sc[i], s.key("scenarios") + "[" + std::to_string(i) + "]"));
    }
  }
  s.finish();
  return d;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("<document>: ") + e.what());
  }
}

}  // namespace

std::vector<double> Grid::values() const {
  if (points == 1) return {start};
  return Axis::linspace("", start, stop, points).values;
}

experiments::ExperimentSpec Config::spec(experiments::Kind kind, std::uint64_t seed) const {
  experiments::ExperimentSpec e;
  e.kind = kind;
  e.shots = experiments.shots;
  e.control_path = experiments.control_path;
  e.seed = seed;
  e.protocol = experiments.protocol;
  if (const auto it = experiments.axes.find(kind); it != experiments.axes.end()) e.axes = it->second;
  return e;
}

std::string config_hash(std::string_view text) { return fmt_hex64(fnv1a64(parse_json(text).dump())); }

Config parse_config(std::string_view text) {
  const json doc = parse_json(text);
  Section root(doc, "");
  Config c;
  c.setup.spin = read_spin(root.section("spin"));
  c.setup.noise = read_noise(root.section("noise"));
  c.setup.fridge = read_fridge(root.section("fridge"));
  c.setup.electron = read_electron(root.section("electron"));
  c.setup.controller = read_controller(root.section("controller"));
  if (root.has("experiments")) c.experiments = read_experiments(root.section("experiments"));
  root.finish();
  c.hash = fmt_hex64(fnv1a64(doc.dump()));
  c.setup.config_hash = c.hash;
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cmosq::config
