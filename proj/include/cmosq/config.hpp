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

// JSON configuration: strict schema, defaults for optional experiment knobs
// and a stable content hash.

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cmosq/experiments.hpp"

namespace cmosq::config {

struct Grid {
  double start = 0.0;
  double stop = 0.0;
  int points = 0;

  std::vector<double> values() const;
};

struct ExperimentDefaults {
  int shots = 1000;
  experiments::ControlPath control_path = experiments::ControlPath::kRt;
  experiments::Protocol protocol;
  std::map<experiments::Kind, std::vector<experiments::Axis>> axes;
  Grid thermal_sweep{0.0, 1e-3, 21};  // applied power, W
  std::vector<experiments::Scenario> scenarios = experiments::default_scenarios();
};

struct Config {
  experiments::Setup setup;  // setup.config_hash is filled in
  ExperimentDefaults experiments;
  std::string hash;

  /// Spec for one kind with configured shots, path, protocol and axes.
  experiments::ExperimentSpec spec(experiments::Kind kind, std::uint64_t seed) const;
};

/// Parses and validates a JSON document. Every error is Error(kConfig) and
/// names the offending key, e.g. "spin.vj_scale: missing required key".
Config parse_config(std::string_view text);
Config load_config(const std::string& path);

/// FNV-1a 64 of the key-sorted compact dump, as 16 hex digits.
std::string config_hash(std::string_view text);

}  // namespace cmosq::config
