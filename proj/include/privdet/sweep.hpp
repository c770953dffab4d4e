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

// Configuration-driven experiment grids.
//
// Cells sharing everything but eps_LD form a chain that is solved in
// ascending eps_LD, each design seeded with its predecessor. Chains run
// concurrently; rows are emitted in grid order.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/design.hpp"
#include "privdet/detection.hpp"
#include "privdet/epic.hpp"
#include "privdet/io.hpp"
#include "privdet/metrics.hpp"
#include "privdet/model.hpp"
#include "privdet/relations.hpp"

namespace privdet {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline const std::vector<std::string>& known_architectures() {
  static const std::vector<std::string> a{"ldp", "ill",   "lip",     "inp",
                                          "e-ldp", "epic", "identity"};
  return a;
}

struct GeneratorSpec {
  std::uint64_t seed = 0;
  std::size_t s = 3;
  std::size_t x_size = 4;
  std::size_t q = 1;
  std::vector<std::size_t> g_independent;  // 1-based sensor numbers
};

// Data for the empirical architectures: CSV files, or the synthetic
// four-level generator.
struct EpicDataSpec {
  std::string train;
  std::string test;
  std::size_t q = 1;
  std::size_t bins = 10;
  bool synthetic = true;
  std::size_t train_n = 40;
  std::size_t test_n = 5000;
  std::uint64_t data_seed = 1;
  std::size_t s = 4;
};

struct SweepSpec {
  std::optional<std::string> model_file;
  GeneratorSpec generator;
  std::optional<EpicDataSpec> epic_data;
  std::vector<std::string> archs;
  std::vector<double> eps_I{kInf};
  std::vector<double> eps_LD{kInf};
  std::vector<double> r{0.999};
  std::vector<double> corr{0.2};
  std::vector<std::uint64_t> seeds{0};
  std::size_t z_size = 2;
  std::size_t y_size = 0;
  std::size_t restarts = 5;
  std::size_t max_outer_iters = 100;
  double lambda = 10.0;
  std::size_t epic_restarts = 4;
  bool continuation = true;
  bool timing = true;
  std::string output = "results.csv";
  std::string artifacts;  // directory for per-cell JSON, empty for none

  void validate() const {
    if (archs.empty()) throw InvalidArgument("sweep: no architectures");
    for (const auto& a : archs) {
      if (std::find(known_architectures().begin(), known_architectures().end(),
                    a) == known_architectures().end()) {
        throw InvalidArgument("sweep: unknown architecture '" + a + "'");
      }
      if ((a == "epic" || a == "e-ldp") && !epic_data) {
        throw InvalidArgument("sweep: '" + a + "' needs an epic_data section");
      }
    }
    if (eps_I.empty() || eps_LD.empty() || r.empty() || corr.empty() ||
        seeds.empty()) {
      throw InvalidArgument("sweep: grids must be nonempty");
    }
    for (double v : eps_I) {
      if (!(v >= 0.0)) throw InvalidArgument("sweep: eps_I must be >= 0");
    }
    for (double v : eps_LD) {
      if (!(v >= 0.0)) throw InvalidArgument("sweep: eps_LD must be >= 0");
    }
  }
};

inline SweepSpec sweep_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("sweep spec: expected an object");
  SweepSpec sp;
  auto list = [&](const char* key) {
    const Json& v = j.at(key);
    const Json arr = v.is_array() ? v : Json::array({v});
    std::vector<double> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(number_from_json(arr[i], std::string(key) + "[" +
                                                 std::to_string(i) + "]"));
    }
    return out;
  };
  auto size_field = [&](const Json& o, const char* key, std::size_t& dst) {
    if (o.contains(key)) {
      if (!o[key].is_number_integer() || o[key].get<std::int64_t>() < 0) {
        throw ParseError(std::string("field '") + key +
                         "': expected a nonnegative integer");
      }
      dst = o[key].get<std::size_t>();
    }
  };
  const Json m = j.contains("model") ? j["model"] : Json::object();
  if (m.contains("file")) {
    sp.model_file = m["file"].get<std::string>();
  } else if (m.contains("generator")) {
    const auto& g = m["generator"];
    size_field(g, "seed", sp.generator.seed);
    size_field(g, "s", sp.generator.s);
    size_field(g, "x_size", sp.generator.x_size);
    size_field(g, "q", sp.generator.q);
    if (g.contains("g_independent")) {
      sp.generator.g_independent =
          g["g_independent"].get<std::vector<std::size_t>>();
    }
  } else if (j.contains("model")) {
    throw ParseError("field 'model': expected 'file' or 'generator'");
  }
  if (j.contains("epic_data")) {
    const auto& e = j["epic_data"];
    EpicDataSpec d;
    if (e.contains("train")) {
      d.synthetic = false;
      d.train = e["train"].get<std::string>();
      d.test = detail::require(e, "test", "epic_data").get<std::string>();
      size_field(e, "q", d.q);
      size_field(e, "bins", d.bins);
    } else {
      size_field(e, "train_n", d.train_n);
      size_field(e, "test_n", d.test_n);
      size_field(e, "s", d.s);
      if (e.contains("seed")) d.data_seed = e["seed"].get<std::uint64_t>();
    }
    sp.epic_data = d;
  }
  const auto& archs = detail::require(j, "archs", "sweep spec");
  sp.archs = archs.get<std::vector<std::string>>();
  for (const auto& a : sp.archs) {
    if (a != "epic" && a != "e-ldp" && !j.contains("model")) {
      throw ParseError("sweep spec: missing field 'model' (needed by '" + a +
                       "')");
    }
  }
  if (j.contains("eps_I")) sp.eps_I = list("eps_I");
  if (j.contains("eps_LD")) sp.eps_LD = list("eps_LD");
  if (j.contains("r")) sp.r = list("r");
  if (j.contains("corr")) sp.corr = list("corr");
  if (j.contains("seeds")) {
    sp.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  }
  size_field(j, "z_size", sp.z_size);
  size_field(j, "y_size", sp.y_size);
  size_field(j, "restarts", sp.restarts);
  size_field(j, "max_outer_iters", sp.max_outer_iters);
  size_field(j, "epic_restarts", sp.epic_restarts);
  if (j.contains("lambda")) sp.lambda = number_from_json(j["lambda"], "lambda");
  if (j.contains("continuation")) sp.continuation = j["continuation"].get<bool>();
  if (j.contains("timing")) sp.timing = j["timing"].get<bool>();
  if (j.contains("output")) sp.output = j["output"].get<std::string>();
  if (j.contains("artifacts")) sp.artifacts = j["artifacts"].get<std::string>();
  sp.validate();
  return sp;
}

inline SweepSpec load_sweep_spec(const std::string& path) {
  return sweep_spec_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Cells.

struct SweepCell {
  std::string arch;
  std::uint64_t seed = 0;
  double corr = 0.0;
  double eps_I = kNaN;
  double eps_LD = kNaN;
  double r = kNaN;
};

struct CellResult {
  bool ok = false;
  bool audit_ok = false;
  std::string message;
  double bayes_error_H = kNaN;
  double bayes_error_G = kNaN;
  double mi_HZ = kNaN;
  double mi_GZ = kNaN;
  std::vector<double> mi_XZ;
  std::optional<BudgetReport> report;
  double eps_info_hat = kNaN;
  double eps_ldp_hat = kNaN;
  bool from_incumbent = false;
  double repair_weight = 0.0;
  double wall_time = 0.0;
  std::optional<Json> artifact;
};

// Architectures ignore the axes they do not use; those collapse to NaN.
inline std::vector<SweepCell> expand_grid(const SweepSpec& sp) {
  std::vector<SweepCell> cells;
  const std::vector<double> none{kNaN};
  for (double corr : sp.corr) {
    for (auto seed : sp.seeds) {
      for (const auto& a : sp.archs) {
        const bool uses_i = a == "ill" || a == "lip" || a == "inp";
        const bool uses_ld = a != "inp" && a != "identity";
        const bool uses_r = a == "epic";
        for (double ei : uses_i ? sp.eps_I : none) {
          for (double r : uses_r ? sp.r : none) {
            for (double eld : uses_ld ? sp.eps_LD : none) {
              cells.push_back({a, seed, corr, ei, eld, r});
            }
          }
        }
      }
    }
  }
  return cells;
}

namespace detail {

inline bool same_chain(const SweepCell& a, const SweepCell& b) {
  auto eq = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  return a.arch == b.arch && a.seed == b.seed && eq(a.corr, b.corr) &&
         eq(a.eps_I, b.eps_I) && eq(a.r, b.r);
}

// Chains of cell indices, each sorted by ascending eps_LD.
inline std::vector<std::vector<std::size_t>> chains(
    const std::vector<SweepCell>& cells, bool continuation) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const bool chained = continuation && (cells[i].arch == "ldp" ||
                                          cells[i].arch == "ill" ||
                                          cells[i].arch == "lip");
    bool placed = false;
    if (chained) {
      for (auto& ch : out) {
        if (same_chain(cells[ch.front()], cells[i])) {
          ch.push_back(i);
          placed = true;
          break;
        }
      }
    }
    if (!placed) out.push_back({i});
  }
  for (auto& ch : out) {
    std::stable_sort(ch.begin(), ch.end(), [&](std::size_t a, std::size_t b) {
      return cells[a].eps_LD < cells[b].eps_LD;
    });
  }
  return out;
}

inline void fill_model_metrics(CellResult& res, const JointModel& model,
                               const NetworkMapping& mapping) {
  const auto pushed = push_forward(model, mapping);
  res.mi_HZ = mutual_info_hz(pushed);
  res.mi_GZ = avg_info_leakage(pushed);
  res.mi_XZ.clear();
  for (std::size_t t = 0; t < model.s(); ++t) {
    res.mi_XZ.push_back(sensor_mutual_information(model, mapping, t));
  }
  res.report = full_report(model, mapping);
}

}  // namespace detail

/// Resolved inputs shared by all cells.
class SweepContext {
 public:
  explicit SweepContext(const SweepSpec& sp) : sp_(sp) {
    if (sp.model_file) base_model_ = load_model(*sp.model_file);
    if (sp.epic_data && !sp.epic_data->synthetic) {
      const auto train = read_raw_csv(sp.epic_data->train, sp.epic_data->q);
      const auto test = read_raw_csv(sp.epic_data->test, sp.epic_data->q);
      const auto d = Discretizer::fit(train, sp.epic_data->bins);
      warnings_ = d.warnings;
      csv_train_ = d.apply(train);
      csv_test_ = d.apply(test);
    }
  }

  JointModel model(double corr) const {
    if (base_model_) return *base_model_;
    CorrelatedModelOptions opts;
    for (auto t : sp_.generator.g_independent) {
      if (t == 0 || t > sp_.generator.s) {
        throw InvalidArgument("g_independent sensors are numbered from 1");
      }
      opts.g_independent.push_back(t - 1);
    }
    return generate_correlated_model(sp_.generator.seed, sp_.generator.s,
                                     sp_.generator.x_size, sp_.generator.q,
                                     corr, opts);
  }

  // Train and test sets, plus the generating model when synthetic.
  struct EpicInputs {
    Dataset train;
    Dataset test;
    std::optional<JointModel> truth;
  };

  EpicInputs epic_inputs(double corr) const {
    const auto& d = *sp_.epic_data;
    if (!d.synthetic) return {*csv_train_, *csv_test_, std::nullopt};
    return {level_dataset(generate_level_data(d.train_n, d.data_seed, d.s, corr)),
            level_dataset(generate_level_data(
                d.test_n, derive_seed(d.data_seed, 0x7e57), d.s, corr)),
            level_model(d.s, corr)};
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  const SweepSpec& sp_;
  std::optional<JointModel> base_model_;
  std::optional<Dataset> csv_train_, csv_test_;
  std::vector<std::string> warnings_;
};

inline OptimizerConfig design_config(const SweepSpec& sp, const SweepCell& c) {
  OptimizerConfig cfg;
  cfg.eps_I = std::isnan(c.eps_I) ? kInf : c.eps_I;
  cfg.eps_LD = std::isnan(c.eps_LD) ? kInf : c.eps_LD;
  cfg.seed = c.seed;
  cfg.restarts = sp.restarts;
  cfg.max_outer_iters = sp.max_outer_iters;
  cfg.z_size = sp.z_size;
  cfg.y_size = sp.y_size;
  return cfg;
}

// Previous design in a chain, used to seed the next one.
struct ChainState {
  std::optional<NetworkMapping> mapping;
  std::optional<TwoStageMapping> two_stage;
};

inline CellResult run_cell(const SweepSpec& sp, const SweepContext& ctx,
                           const SweepCell& c, ChainState& chain) {
  CellResult res;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (c.arch == "epic" || c.arch == "e-ldp") {
      const auto in = ctx.epic_inputs(c.corr);
      EpicConfig ec;
      ec.eps_LD = std::isnan(c.eps_LD) ? kInf : c.eps_LD;
      ec.r = std::isnan(c.r) ? 0.999 : c.r;
      ec.lambda = sp.lambda;
      ec.z_size = sp.z_size;
      ec.seed = c.seed;
      ec.restarts = sp.epic_restarts;
      ec.privacy = c.arch == "epic";
      const auto sol = epic_solve(in.train, ec);
      const auto ev = evaluate(sol, in.test, derive_seed(c.seed, 0xe7a1));
      res.bayes_error_H = ev.error_H;
      res.bayes_error_G = ev.error_G;
      res.eps_info_hat = ev.budgets.eps_info;
      res.eps_ldp_hat = ev.budgets.eps_ldp;
      if (in.truth) detail::fill_model_metrics(res, *in.truth, sol.mapping);
      res.audit_ok = ldp_budget(sol.mapping) <= ec.eps_LD + 1e-9 &&
                     (!ec.privacy || sol.worst_risk() >= sol.theta - 1e-4);
      Json a;
      a["arch"] = c.arch;
      a["mapping"] = to_json(sol.mapping);
      a["theta"] = sol.theta;
      a["theta_star"] = sol.theta_star;
      res.artifact = std::move(a);
    } else {
      const JointModel model = ctx.model(c.corr);
      OptimizerConfig cfg = design_config(sp, c);
      DesignResult d;
      if (c.arch == "ldp") {
        if (chain.mapping) cfg.warm_starts.push_back(*chain.mapping);
        d = design_ldp(model, cfg);
      } else if (c.arch == "ill" || c.arch == "lip") {
        cfg.incumbent = chain.two_stage;
        d = c.arch == "ill" ? design_ill(model, cfg) : design_lip(model, cfg);
      } else if (c.arch == "inp") {
        d = design_inp(model, cfg);
      } else {
        d = design_identity(model);
      }
      chain.mapping = d.mapping;
      chain.two_stage = d.two_stage;
      res.bayes_error_H = d.bayes_error_H;
      res.bayes_error_G = d.bayes_error_G;
      res.from_incumbent = d.from_incumbent;
      res.repair_weight = d.repair_weight;
      detail::fill_model_metrics(res, model, d.mapping);
      const auto& rep = *res.report;
      res.audit_ok = rep.eps_ldp <= cfg.eps_LD + 1e-9 &&
                     rep.eps_info <= cfg.eps_I + 1e-9;
      if (c.arch == "identity") res.audit_ok = true;
      res.artifact = to_json(d);
    }
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.message = e.what();
  }
  res.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return res;
}

struct SweepOutcome {
  std::vector<SweepCell> cells;
  std::vector<CellResult> results;

  bool all_ok() const {
    for (const auto& r : results) {
      if (!r.ok || !r.audit_ok) return false;
    }
    return true;
  }
};

inline SweepOutcome run_sweep(const SweepSpec& sp, std::size_t jobs = 1) {
  sp.validate();
  const SweepContext ctx(sp);
  SweepOutcome out;
  out.cells = expand_grid(sp);
  out.results.resize(out.cells.size());
  const auto groups = detail::chains(out.cells, sp.continuation);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      ChainState chain;
      for (auto i : groups[g]) {
        out.results[i] = run_cell(sp, ctx, out.cells[i], chain);
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, groups.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

// ---------------------------------------------------------------------------
// Output.

inline std::string csv_cell(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::string sweep_csv(const SweepOutcome& o, bool timing = true) {
  std::size_t s_max = 0;
  for (const auto& r : o.results) s_max = std::max(s_max, r.mi_XZ.size());
  std::string out =
      "arch,seed,corr,eps_I,eps_LD,r,status,audit_ok,bayes_error_H,"
      "bayes_error_G,I_HZ,I_GZ";
  for (std::size_t t = 0; t < s_max; ++t) {
    out += ",I_X" + std::to_string(t + 1) + "Z" + std::to_string(t + 1);
  }
  out += "," + report_csv_header() +
         ",eps_info_hat,eps_ldp_hat,from_incumbent,repair_weight";
  if (timing) out += ",wall_time_s";
  out += ",message\n";
  const std::size_t report_cols = 10;
  for (std::size_t i = 0; i < o.cells.size(); ++i) {
    const auto& c = o.cells[i];
    const auto& r = o.results[i];
    out += c.arch + "," + std::to_string(c.seed) + "," + csv_cell(c.corr) +
           "," + csv_cell(c.eps_I) + "," + csv_cell(c.eps_LD) + "," +
           csv_cell(c.r) + "," + (r.ok ? "ok" : "error") + "," +
           (r.audit_ok ? "1" : "0") + "," + csv_cell(r.bayes_error_H) + "," +
           csv_cell(r.bayes_error_G) + "," + csv_cell(r.mi_HZ) + "," +
           csv_cell(r.mi_GZ);
    for (std::size_t t = 0; t < s_max; ++t) {
      out += "," + (t < r.mi_XZ.size() ? csv_cell(r.mi_XZ[t]) : std::string());
    }
    out += "," + (r.report ? report_csv_row(*r.report)
                           : std::string(report_cols - 1, ','));
    out += "," + csv_cell(r.eps_info_hat) + "," + csv_cell(r.eps_ldp_hat) +
           "," + (r.from_incumbent ? "1" : "0") + "," +
           csv_cell(r.repair_weight);
    if (timing) out += "," + csv_cell(r.wall_time);
    out += "," + csv_quote(r.message) + "\n";
  }
  return out;
}

inline void write_artifacts(const SweepOutcome& o, const std::string& dir) {
  for (std::size_t i = 0; i < o.results.size(); ++i) {
    if (!o.results[i].artifact) continue;
    write_json_file(dir + "/cell_" + std::to_string(i) + ".json",
                    *o.results[i].artifact);
  }
}

inline std::string gnuplot_stub(const std::string& csv) {
  return "# Bayes error of H and G against eps_LD, one line per architecture.\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set logscale x\n"
         "set xlabel 'eps_LD'\n"
         "set multiplot layout 1,2\n"
         "set ylabel 'Bayes error of H'\n"
         "plot for [a in 'ldp ill lip inp epic e-ldp'] '" +
         csv +
         "' using (strcol(1) eq a ? $5 : NaN):9 with linespoints title a\n"
         "set ylabel 'Bayes error of G'\n"
         "plot for [a in 'ldp ill lip inp epic e-ldp'] '" +
         csv +
         "' using (strcol(1) eq a ? $5 : NaN):10 with linespoints title a\n"
         "unset multiplot\n";
}

inline std::string relations_csv(std::uint64_t seed, std::size_t trials) {
  std::string out = "from,to,bound_constant,verdict,evidence\n";
  for (const auto& r : relation_table(seed, trials)) {
    out += r.from + "," + r.to + "," + csv_quote(r.bound_constant) +
           "," + csv_quote(r.verdict) + "," + csv_quote(r.evidence) + "\n";
  }
  return out;
}

inline void run_relations(std::uint64_t seed, std::size_t trials,
                          const std::string& out) {
  write_text_file(out, relations_csv(seed, trials));
}

}  // namespace privdet
