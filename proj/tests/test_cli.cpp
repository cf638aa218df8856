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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "cmosq/version.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* p = std::getenv("CMOSQ_CLI");
  REQUIRE_MESSAGE(p != nullptr, "CMOSQ_CLI is not set");
  return p;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cmosq_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = cli() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& text, int skip = 0) {
  std::istringstream in(text);
  std::string line;
  for (int i = 0; i <= skip; ++i) std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("ramsey output is byte-identical for a fixed seed") {
  const fs::path a = scratch("ramsey_a"), b = scratch("ramsey_b");
  const std::string common = " --config configs/default.json --seed 7 --shots-override 100";
  REQUIRE(run("ramsey" + common + " --out " + a.string(), a / "log") == 0);
  REQUIRE(run("ramsey" + common + " --threads 1 --out " + b.string(), b / "log") == 0);
  const std::string csv = slurp(a / "ramsey.csv");
  CHECK_FALSE(csv.empty());
  CHECK(csv == slurp(b / "ramsey.csv"));
  CHECK(slurp(a / "ramsey.json") == slurp(b / "ramsey.json"));
  const std::string head = first_line(csv);
  CHECK(head.find("cmosq " + std::string(cmosq::kVersion)) != std::string::npos);
  CHECK(head.find("seed=7") != std::string::npos);
  CHECK(head.find("config_hash=") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(a / "ramsey.json"));
  CHECK(j["metadata"]["seed"] == 7);
}

TEST_CASE("validate-config names a missing key and exits 2") {
  const fs::path dir = scratch("badcfg");
  auto j = nlohmann::json::parse(slurp("configs/default.json"));
  j["spin"].erase("vj_scale");
  std::ofstream(dir / "bad.json") << j.dump(2);
  CHECK(run("validate-config --config " + (dir / "bad.json").string(), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("spin.vj_scale") != std::string::npos);
  CHECK(run("validate-config --config configs/default.json", dir / "ok") == 0);
  CHECK(slurp(dir / "ok").find("ok config_hash=") != std::string::npos);
}

TEST_CASE("controller-trace writes a three-segment waveform") {
  const fs::path dir = scratch("trace");
  REQUIRE(run("controller-trace --script scripts/lock_pulse.txt --horizon 15e-6 --dt 1e-7 --out " + dir.string(),
              dir / "log") == 0);
  const std::string csv = slurp(dir / "waveform.csv");
  CHECK(first_line(csv).rfind("# meta cmosq", 0) == 0);
  CHECK(first_line(csv, 1) == "time_s,gate,volts");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  int levels = 0;
  double prev = -1.0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (line.substr(c1 + 1, c2 - c1 - 1) != "J") continue;
    const double v = std::stod(line.substr(c2 + 1));
    if (prev < 0.0 || std::abs(v - prev) > 1e-3) ++levels;
    prev = v;
  }
  // 0 V before the lock, the held level, then the pulsed level
  CHECK(levels == 3);
  CHECK(slurp(dir / "events.jsonl") == slurp("tests/golden/lock_pulse_events.jsonl"));
}

TEST_CASE("thermal-sweep table") {
  const fs::path dir = scratch("thermal");
  REQUIRE(run("thermal-sweep --seed 3 --out " + dir.string(), dir / "log") == 0);
  const std::string csv = slurp(dir / "thermal_sweep.csv");
  CHECK(first_line(csv).find("seed=3") != std::string::npos);
  CHECK(first_line(csv, 1) == "power_w,t_mxc_k,t_e_k");
  int rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 + 21);
}

TEST_CASE("runtime failures exit 3, usage errors are non-zero") {
  const fs::path dir = scratch("errors");
  std::ofstream(dir / "blocker") << "x";
  CHECK(run("ramsey --shots-override 10 --out " + (dir / "blocker" / "sub").string(), dir / "log") == 3);
  CHECK(run("ramsey --control-path SIDEWAYS", dir / "log2") == 2);
  CHECK(run("no-such-command", dir / "log3") != 0);
}
