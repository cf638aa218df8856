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

// cmosq command-line front end.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmosq/config.hpp"
#include "cmosq/controller.hpp"
#include "cmosq/error.hpp"
#include "cmosq/experiments.hpp"
#include "cmosq/format.hpp"
#include "cmosq/thermal.hpp"
#include "cmosq/version.hpp"

namespace fs = std::filesystem;
using namespace cmosq;

namespace {

struct Common {
  std::string config = "configs/default.json";
  std::uint64_t seed = 1;
  std::string out = ".";
  int threads = 0;
  std::optional<int> shots;
  std::optional<std::string> control_path;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON config file")->capture_default_str();
  sub->add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker thread cap (0 = all cores)")->capture_default_str();
  sub->add_option("--shots-override", c.shots, "Shots per grid point, overriding the config")
      ->check(CLI::PositiveNumber);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

config::Config load(const Common& c) {
  config::Config cfg = config::load_config(c.config);
  cfg.setup.threads = c.threads;
  if (c.shots) cfg.experiments.shots = *c.shots;
  if (c.control_path) {
    if (*c.control_path == "RT") {
      cfg.experiments.control_path = experiments::ControlPath::kRt;
    } else if (*c.control_path == "CRYO_CMOS") {
      cfg.experiments.control_path = experiments::ControlPath::kCryoCmos;
    } else {
      throw Error(ErrorCode::kConfig, "--control-path: expected RT or CRYO_CMOS");
    }
  }
  return cfg;
}

experiments::Metadata metadata(const config::Config& cfg, std::uint64_t seed) {
  experiments::Metadata m;
  m.config_hash = cfg.hash;
  m.seed = seed;
  m.version = kVersion;
  return m;
}

void print_fit(const std::map<std::string, experiments::FitValue>& fit) {
  for (const auto& [name, v] : fit) {
    std::cout << "  " << name << " = " << fmt_double(v.value) << " +- " << fmt_double(v.stderr_) << '\n';
  }
}

int run_experiment(const Common& c, experiments::Kind kind, const std::string& stem) {
  const config::Config cfg = load(c);
  const fs::path dir = out_dir(c);
  const auto result = experiments::run(cfg.setup, cfg.spec(kind, c.seed));
  write_file(dir / (stem + ".csv"), experiments::result_csv(result));
  write_file(dir / (stem + ".json"), experiments::result_json(result));
  std::cout << experiments::to_string(kind) << " config_hash=" << cfg.hash << " seed=" << c.seed << '\n';
  print_fit(result.fit);
  for (const auto& n : result.notes) std::cout << "  note: " << n << '\n';
  return 0;
}

int thermal_sweep(const Common& c) {
  const config::Config cfg = load(c);
  const fs::path dir = out_dir(c);
  std::ostringstream csv;
  csv << experiments::provenance_line(metadata(cfg, c.seed));
  csv << "power_w,t_mxc_k,t_e_k\n";
  for (double p : cfg.experiments.thermal_sweep.values()) {
    const auto pt = thermal::thermal_point(cfg.setup.fridge, cfg.setup.electron, p);
    csv << fmt_double(pt.power) << ',' << fmt_double(pt.t_mxc) << ',' << fmt_double(pt.t_e) << '\n';
  }
  write_file(dir / "thermal_sweep.csv", csv.str());
  std::cout << "thermal-sweep " << cfg.experiments.thermal_sweep.points << " points\n";
  return 0;
}

int cmos_sweep(const Common& c, const std::string& kind_name) {
  const auto kind = experiments::kind_from_string(kind_name);
  if (!kind) throw Error(ErrorCode::kConfig, "--kind: unknown experiment kind " + kind_name);
  const config::Config cfg = load(c);
  const fs::path dir = out_dir(c);
  const auto rows = experiments::run_with_thermal_feedback(cfg.setup, cfg.spec(*kind, c.seed), cfg.experiments.scenarios);
  const auto meta = metadata(cfg, c.seed);
  write_file(dir / "cmos_sweep.csv", experiments::thermal_csv(rows, meta));
  write_file(dir / "cmos_sweep.json", experiments::thermal_json(rows, meta));
  for (const auto& r : rows) {
    std::cout << r.scenario.name << " P=" << fmt_double(r.thermal.power) << " W T_e=" << fmt_double(r.thermal.t_e)
              << " K " << r.metric << '=' << fmt_double(r.value.value) << '\n';
  }
  return 0;
}

int controller_trace(const Common& c, const std::string& script, const std::string& binary, double frame_period,
                     std::optional<double> horizon, double dt) {
  const config::Config cfg = load(c);
  std::vector<controller::TimedInput> inputs;
  if (!script.empty()) {
    std::ifstream in(script);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + script);
    inputs = controller::parse_script(in);
  } else {
    std::ifstream in(binary, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + binary);
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    inputs = controller::parse_binary_stream(bytes, frame_period);
  }
  auto state = controller::make_controller(cfg.setup.controller);
  controller::replay(state, inputs);
  const double last = inputs.empty() ? 0.0 : inputs.back().time;
  const double h = horizon.value_or(last + 5e-6);
  const auto wave = controller::emit_waveform(state, h, dt);

  const fs::path dir = out_dir(c);
  std::ostringstream csv;
  csv << "# meta cmosq " << kVersion << " config_hash=" << cfg.hash << " seed=" << c.seed
      << " horizon_s=" << fmt_double(h) << " dt_s=" << fmt_double(dt) << '\n';
  csv << "time_s,gate,volts\n";
  for (const auto& s : wave.samples()) {
    csv << fmt_double(s.time) << ',' << wave.gates[s.gate] << ',' << fmt_double(s.volts) << '\n';
  }
  write_file(dir / "waveform.csv", csv.str());
  std::ostringstream events;
  for (const auto& e : state.event_log) events << controller::event_to_json(e) << '\n';
  write_file(dir / "events.jsonl", events.str());
  std::size_t rejected = 0;
  for (const auto& e : state.event_log) rejected += e.accepted ? 0 : 1;
  std::cout << "controller-trace events=" << state.event_log.size() << " rejected=" << rejected
            << " final_state=" << controller::to_string(state.fsm_state) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cmosq: pulse-level simulator for cryo-CMOS controlled spin qubits"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  struct Named {
    const char* cmd;
    experiments::Kind kind;
    const char* help;
  };
  const std::vector<Named> kinds = {
      {"rabi", experiments::Kind::kRabiChevron, "Rabi chevron (frequency x duration)"},
      {"ramsey", experiments::Kind::kRamsey, "Ramsey free-induction decay"},
      {"hahn", experiments::Kind::kHahn, "Hahn echo decay"},
      {"cpmg-psd", experiments::Kind::kCpmgPsd, "CPMG decays and noise PSD estimate"},
      {"rb", experiments::Kind::kRb1q, "Single-qubit randomized benchmarking"},
      {"cz", experiments::Kind::kCzFid, "Exchange free-induction decay"},
      {"dcz", experiments::Kind::kDcz, "Decoupled controlled-phase oscillation"},
      {"global-rabi", experiments::Kind::kGlobalRabi, "Stark-shift global Rabi"},
      {"stark-cal", experiments::Kind::kStarkCal, "Stark-shift calibration"},
  };
  std::vector<std::pair<CLI::App*, const Named*>> kind_cmds;
  for (const auto& k : kinds) {
    auto* sub = app.add_subcommand(k.cmd, k.help);
    add_common(sub, common);
    sub->add_option("--control-path", common.control_path, "RT or CRYO_CMOS, overriding the config");
    kind_cmds.emplace_back(sub, &k);
  }

  auto* ts = app.add_subcommand("thermal-sweep", "Power -> mixing chamber -> electron temperature table");
  add_common(ts, common);

  std::string sweep_kind = "CZ_FID";
  auto* cs = app.add_subcommand("cmos-sweep", "Run one experiment across controller scenarios with heating");
  add_common(cs, common);
  cs->add_option("--kind", sweep_kind, "Experiment kind, e.g. CZ_FID or RB_1Q")->capture_default_str();

  std::string script, binary;
  double frame_period = 1e-6, dt = 100e-9;
  std::optional<double> horizon;
  auto* ct = app.add_subcommand("controller-trace", "Replay a command stream and write waveform and event log");
  add_common(ct, common);
  auto* script_opt = ct->add_option("--script", script, "Text command script");
  auto* binary_opt = ct->add_option("--binary", binary, "Binary stream of 4-byte frames");
  script_opt->excludes(binary_opt);
  ct->add_option("--frame-period", frame_period, "Seconds between binary frames")->capture_default_str();
  ct->add_option("--horizon", horizon, "Trace end time in seconds (default: last input + 5 us)");
  ct->add_option("--dt", dt, "Sample spacing in seconds")->capture_default_str()->check(CLI::PositiveNumber);

  auto* vc = app.add_subcommand("validate-config", "Check a config file against the schema");
  vc->add_option("--config", common.config, "JSON config file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& [sub, k] : kind_cmds) {
      if (sub->parsed()) return run_experiment(common, k->kind, k->cmd);
    }
    if (ts->parsed()) return thermal_sweep(common);
    if (cs->parsed()) return cmos_sweep(common, sweep_kind);
    if (ct->parsed()) {
      if (script.empty() == binary.empty()) throw Error(ErrorCode::kConfig, "controller-trace: give --script or --binary");
      return controller_trace(common, script, binary, frame_period, horizon, dt);
    }
    if (vc->parsed()) {
      const auto cfg = config::load_config(common.config);
      std::cout << "ok config_hash=" << cfg.hash << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
