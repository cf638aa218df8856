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
#include <sstream>

#include "cmosq/format.hpp"
#include "common.hpp"
#include "json.hpp"

namespace cmosq::experiments {

namespace {

using json = nlohmann::ordered_json;

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json metadata_json(const Metadata& m) {
  return json{{"version", m.version}, {"config_hash", m.config_hash}, {"seed", m.seed},
              {"power_w", num(m.power_w)}, {"t_mxc_k", num(m.t_mxc_k)}, {"t_e_k", num(m.t_e_k)}};
}

}  // namespace

std::string provenance_line(const Metadata& meta) {
  return "# cmosq " + meta.version + " config_hash=" + meta.config_hash + " seed=" + std::to_string(meta.seed) + "\n";
}

std::string result_csv(const ExperimentResult& r) {
  std::ostringstream out;
  out << provenance_line(r.metadata);
  for (const auto& a : r.axes) out << a.name << ',';
  out << "p_blocked,p_model,blocked,shots\n";
  std::vector<std::size_t> idx(r.axes.size(), 0);
  for (std::size_t k = 0; k < r.p_blocked.size(); ++k) {
    for (std::size_t d = 0; d < r.axes.size(); ++d) out << fmt_double(r.axes[d].values[idx[d]]) << ',';
    out << fmt_double(r.p_blocked[k]) << ',' << fmt_double(r.p_model[k]) << ',' << r.blocked[k] << ','
        << r.shots[k] << '\n';
    for (std::size_t d = r.axes.size(); d-- > 0;) {
      if (++idx[d] < r.axes[d].values.size()) break;
      idx[d] = 0;
    }
  }
  return out.str();
}

std::string result_json(const ExperimentResult& r) {
  json j;
  j["kind"] = to_string(r.kind);
  j["control_path"] = to_string(r.control_path);
  j["metadata"] = metadata_json(r.metadata);
  json axes = json::object();
  for (const auto& a : r.axes) axes[a.name] = a.values;
  j["axes"] = axes;
  json fit = json::object();
  for (const auto& [k, v] : r.fit) fit[k] = json{{"value", num(v.value)}, {"stderr", num(v.stderr_)}};
  j["fit"] = fit;
  json series = json::object();
  for (const auto& [k, v] : r.series) {
    json arr = json::array();
    for (double x : v) arr.push_back(num(x));
    series[k] = arr;
  }
  j["series"] = series;
  j["notes"] = r.notes;
  return j.dump(2) + "\n";
}

std::string thermal_csv(const std::vector<ThermalRow>& rows, const Metadata& meta) {
  std::ostringstream out;
  out << provenance_line(meta);
  out << "scenario,osc_frequency_hz,power_w,t_mxc_k,t_e_k,metric,value,stderr\n";
  for (const auto& r : rows) {
    out << r.scenario.name << ',' << fmt_double(r.osc_frequency) << ',' << fmt_double(r.thermal.power) << ','
        << fmt_double(r.thermal.t_mxc) << ',' << fmt_double(r.thermal.t_e) << ',' << r.metric << ','
        << fmt_double(r.value.value) << ',' << fmt_double(r.value.stderr_) << '\n';
  }
  return out.str();
}

std::string thermal_json(const std::vector<ThermalRow>& rows, const Metadata& meta) {
  json j;
  j["metadata"] = metadata_json(meta);
  json arr = json::array();
  for (const auto& r : rows) {
    json fit = json::object();
    for (const auto& [k, v] : r.result.fit) fit[k] = json{{"value", num(v.value)}, {"stderr", num(v.stderr_)}};
    arr.push_back(json{{"scenario", r.scenario.name},
                       {"osc_frequency_hz", r.osc_frequency},
                       {"power_w", r.thermal.power},
                       {"t_mxc_k", r.thermal.t_mxc},
                       {"t_e_k", r.thermal.t_e},
                       {"metric", r.metric},
                       {"value", num(r.value.value)},
                       {"stderr", num(r.value.stderr_)},
                       {"fit", fit},
                       {"notes", r.result.notes}});
  }
  j["points"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace cmosq::experiments
