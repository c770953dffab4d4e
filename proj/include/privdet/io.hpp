// Copyright 2026 The privdet Authors
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

// JSON serialization of models, channels, mappings and reports. Infinite
// values are written as the strings "inf" / "-inf".

#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/design.hpp"
#include "privdet/metrics.hpp"
#include "privdet/model.hpp"

namespace privdet {

using Json = nlohmann::ordered_json;

inline Json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double number_from_json(const Json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
    if (s == "-inf" || s == "-Infinity") return -kInf;
  }
  throw ParseError("field '" + field + "': expected a number, got " + j.dump());
}

namespace detail {

inline const Json& require(const Json& j, const std::string& key,
                           const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  return *it;
}

inline std::size_t require_size(const Json& j, const std::string& key,
                                 const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(where + ": field '" + key +
                     "' must be a nonnegative integer");
  }
  return v.get<std::size_t>();
}

inline std::vector<double> require_numbers(const Json& v,
                                           const std::string& field) {
  if (!v.is_array()) throw ParseError("field '" + field + "': expected array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ParseError("field '" + field + "[" + std::to_string(i) +
                       "]': expected a number, got " + v[i].dump());
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

inline Json parse_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset to line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" +
                     std::to_string(col) + ": " + e.what());
  }
}

}  // namespace detail

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return detail::parse_text(ss.str(), path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

inline void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Models.

inline Json to_json(const JointModel& m) {
  Json j;
  j["s"] = m.s();
  j["x_size"] = m.x_size();
  j["q"] = m.q();
  j["form"] = to_string(m.form());
  j["prior"] = m.prior();
  j["conditionals"] = m.conditionals();
  return j;
}

inline JointModel model_from_json(const Json& j) {
  const std::string where = "model";
  const auto s = detail::require_size(j, "s", where);
  const auto x = detail::require_size(j, "x_size", where);
  const auto q = detail::require_size(j, "q", where);
  const auto& form_j = detail::require(j, "form", where);
  if (!form_j.is_string()) throw ParseError("field 'form': expected a string");
  const auto form = form_j.get<std::string>();
  auto prior = detail::require_numbers(detail::require(j, "prior", where),
                                       "prior");
  const auto& cj = detail::require(j, "conditionals", where);
  if (!cj.is_array()) throw ParseError("field 'conditionals': expected array");
  std::vector<std::vector<double>> cond;
  for (std::size_t t = 0; t < cj.size(); ++t) {
    cond.push_back(detail::require_numbers(
        cj[t], "conditionals[" + std::to_string(t) + "]"));
  }
  if (form == "cond_indep") {
    if (cond.size() != s) {
      throw ParseError("field 'conditionals': cond_indep form needs " +
                       std::to_string(s) + " tables, got " +
                       std::to_string(cond.size()));
    }
    return JointModel::cond_indep(q, x, std::move(prior), std::move(cond));
  }
  if (form == "full") {
    if (cond.size() != 1) {
      throw ParseError(
          "field 'conditionals': full form needs exactly one table");
    }
    return JointModel::full(s, x, q, std::move(prior), std::move(cond[0]));
  }
  throw ParseError("field 'form': expected \"cond_indep\" or \"full\", got \"" +
                   form + "\"");
}

inline JointModel load_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

inline void save_model(const std::string& path, const JointModel& m) {
  write_json_file(path, to_json(m));
}

// Channels and mappings.

inline Json to_json(const SensorChannel& c) {
  Json rows = Json::array();
  for (std::size_t x = 0; x < c.x_size(); ++x) {
    rows.push_back(std::vector<double>(c.row(x).begin(), c.row(x).end()));
  }
  Json j;
  j["x_size"] = c.x_size();
  j["z_size"] = c.z_size();
  j["rows"] = std::move(rows);
  return j;
}

inline SensorChannel channel_from_json(const Json& j, const std::string& where) {
  const auto nx = detail::require_size(j, "x_size", where);
  const auto nz = detail::require_size(j, "z_size", where);
  const auto& rj = detail::require(j, "rows", where);
  if (!rj.is_array() || rj.size() != nx) {
    throw ParseError(where + ": field 'rows' must hold " + std::to_string(nx) +
                     " rows");
  }
  std::vector<double> rows;
  for (std::size_t x = 0; x < nx; ++x) {
    auto r = detail::require_numbers(
        rj[x], where + ".rows[" + std::to_string(x) + "]");
    if (r.size() != nz) {
      throw ParseError(where + ".rows[" + std::to_string(x) + "]: expected " +
                       std::to_string(nz) + " entries");
    }
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return SensorChannel(nx, nz, std::move(rows));
}

inline Json to_json(const NetworkMapping& m) {
  Json j = Json::array();
  for (const auto& c : m.channels()) j.push_back(to_json(c));
  return j;
}

inline NetworkMapping mapping_from_json(const Json& j,
                                        const std::string& where = "mapping") {
  if (!j.is_array()) throw ParseError(where + ": expected a list of channels");
  std::vector<SensorChannel> chans;
  for (std::size_t t = 0; t < j.size(); ++t) {
    chans.push_back(
        channel_from_json(j[t], where + "[" + std::to_string(t) + "]"));
  }
  return NetworkMapping(std::move(chans));
}

inline Json to_json(const TwoStageMapping& m) {
  Json j;
  j["arch"] = to_string(m.arch);
  j["stage1"] = to_json(m.stage1);
  j["stage2"] = to_json(m.stage2);
  return j;
}

inline TwoStageMapping two_stage_from_json(const Json& j) {
  const auto& a = detail::require(j, "arch", "two_stage");
  if (!a.is_string()) throw ParseError("field 'arch': expected a string");
  TwoStageMapping m;
  const auto arch = a.get<std::string>();
  if (arch == "ill") {
    m.arch = Architecture::kIll;
  } else if (arch == "lip") {
    m.arch = Architecture::kLip;
  } else {
    throw ParseError("field 'arch': expected \"ill\" or \"lip\"");
  }
  m.stage1 = mapping_from_json(detail::require(j, "stage1", "two_stage"),
                               "stage1");
  m.stage2 = mapping_from_json(detail::require(j, "stage2", "two_stage"),
                               "stage2");
  m.validate();
  return m;
}

// Accepts a bare mapping list, a two-stage object, or a design result
// carrying a "mapping" field.
inline NetworkMapping load_any_mapping(const std::string& path) {
  const Json j = read_json_file(path);
  if (j.is_array()) return mapping_from_json(j);
  if (j.is_object() && j.contains("stage1")) {
    return compose(two_stage_from_json(j));
  }
  if (j.is_object() && j.contains("mapping")) {
    return mapping_from_json(j["mapping"]);
  }
  throw ParseError(path + ": no mapping found");
}

// Reports.

inline Json to_json(const BudgetReport& r) {
  Json j;
  j["eps_info"] = number_to_json(r.eps_info);
  j["eps_inference_dp"] = number_to_json(r.eps_inference_dp);
  j["eps_avg_leakage"] = number_to_json(r.eps_avg_leakage);
  j["eps_ldp"] = number_to_json(r.eps_ldp);
  j["eps_mutual_info"] = number_to_json(r.eps_mutual_info);
  j["eps_identifiability"] = r.eps_identifiability
                                 ? number_to_json(*r.eps_identifiability)
                                 : Json(nullptr);
  j["delta_x"] = r.delta_x ? number_to_json(*r.delta_x) : Json(nullptr);
  return j;
}

inline std::string csv_number(double v) { return format_double(v); }

inline std::string csv_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : "";
}

inline std::string report_csv_header() {
  return "eps_info,eps_inference_dp,eps_avg_leakage,eps_ldp,eps_mutual_info,"
         "eps_identifiability,delta_x,eps_info_bits,eps_avg_leakage_bits,"
         "eps_mutual_info_bits";
}

inline std::string report_csv_row(const BudgetReport& r) {
  const double bits = 1.0 / std::log(2.0);
  std::string s;
  s += csv_number(r.eps_info) + "," + csv_number(r.eps_inference_dp) + "," +
       csv_number(r.eps_avg_leakage) + "," + csv_number(r.eps_ldp) + "," +
       csv_number(r.eps_mutual_info) + "," +
       csv_optional(r.eps_identifiability) + "," + csv_optional(r.delta_x) +
       "," + csv_number(r.eps_info * bits) + "," +
       csv_number(r.eps_avg_leakage * bits) + "," +
       csv_number(r.eps_mutual_info * bits);
  return s;
}

inline Json to_json(const DesignResult& r) {
  Json j;
  j["arch"] = r.arch;
  j["mapping"] = to_json(r.mapping);
  if (r.two_stage) j["two_stage"] = to_json(*r.two_stage);
  j["fusion_rule"] = r.rule.decision;
  Json trace = Json::array();
  for (double v : r.trace) trace.push_back(number_to_json(v));
  j["objective_trace"] = std::move(trace);
  j["converged"] = r.converged;
  j["bayes_error_H"] = r.bayes_error_H;
  j["bayes_error_G"] = r.bayes_error_G;
  j["report"] = to_json(r.report);
  if (r.risk) {
    Json risk;
    risk["min_risk"] = r.risk->min_risk;
    risk["c_G"] = r.risk->c_G;
    risk["theta"] = r.risk->theta;
    j["risk_profile"] = std::move(risk);
  }
  j["repair_weight"] = r.repair_weight;
  j["from_incumbent"] = r.from_incumbent;
  j["notes"] = r.notes;
  return j;
}

}  // namespace privdet
