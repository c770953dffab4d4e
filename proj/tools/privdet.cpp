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

// privdet command-line front end.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "privdet/sweep.hpp"

namespace {

using privdet::Json;

double parse_budget(const std::string& s) {
  if (s == "inf" || s == "+inf") return privdet::kInf;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size() || !(v >= 0.0)) {
    throw privdet::InvalidArgument("bad budget '" + s + "'");
  }
  return v;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    privdet::write_text_file(out, text);
  }
}

int cmd_report(const std::string& model_path, const std::string& mapping_path,
               const std::string& out, const std::string& csv) {
  const auto model = privdet::load_model(model_path);
  const auto mapping =
      mapping_path.empty()
          ? privdet::NetworkMapping::replicate(
                model.s(), privdet::SensorChannel::identity(model.x_size()))
          : privdet::load_any_mapping(mapping_path);
  const auto pushed = privdet::push_forward(model, mapping);
  Json j;
  const auto rep = privdet::full_report(model, mapping);
  j["budgets"] = privdet::to_json(rep);
  j["bayes_error_H"] = privdet::bayes_error_H(pushed);
  j["bayes_error_G"] = privdet::bayes_error_G(pushed);
  j["I_HZ"] = privdet::mutual_info_hz(pushed);
  j["I_GZ"] = privdet::avg_info_leakage(pushed);
  Json per = Json::array();
  for (std::size_t t = 0; t < model.s(); ++t) {
    per.push_back(privdet::sensor_mutual_information(model, mapping, t));
  }
  j["I_XtZt"] = per;
  emit(out, j.dump(2) + "\n");
  if (!csv.empty()) {
    using privdet::format_double;
    emit(csv, "bayes_error_H,bayes_error_G,I_HZ,I_GZ," +
                  privdet::report_csv_header() + "\n" +
                  format_double(j["bayes_error_H"].get<double>()) + "," +
                  format_double(j["bayes_error_G"].get<double>()) + "," +
                  format_double(j["I_HZ"].get<double>()) + "," +
                  format_double(j["I_GZ"].get<double>()) + "," +
                  privdet::report_csv_row(rep) + "\n");
  }
  return 0;
}

struct DesignArgs {
  std::string arch = "ldp";
  std::string model;
  std::string eps_i = "inf";
  std::string eps_ld = "inf";
  std::uint64_t seed = 0;
  std::size_t z_size = 2;
  std::size_t y_size = 0;
  std::size_t restarts = 5;
  std::string out;
};

int cmd_design(const DesignArgs& a) {
  const auto model = privdet::load_model(a.model);
  privdet::OptimizerConfig cfg;
  cfg.eps_I = parse_budget(a.eps_i);
  cfg.eps_LD = parse_budget(a.eps_ld);
  cfg.seed = a.seed;
  cfg.z_size = a.z_size;
  cfg.y_size = a.y_size;
  cfg.restarts = a.restarts;
  privdet::DesignResult r;
  if (a.arch == "ldp") {
    r = privdet::design_ldp(model, cfg);
  } else if (a.arch == "ill") {
    r = privdet::design_ill(model, cfg);
  } else if (a.arch == "lip") {
    r = privdet::design_lip(model, cfg);
  } else if (a.arch == "inp") {
    r = privdet::design_inp(model, cfg);
  } else if (a.arch == "identity") {
    r = privdet::design_identity(model);
  } else {
    throw privdet::InvalidArgument("design: unknown architecture '" + a.arch +
                                   "' (epic designs use the epic command)");
  }
  emit(a.out, privdet::to_json(r).dump(2) + "\n");
  const bool audit = a.arch == "identity" ||
                     (r.report.eps_ldp <= cfg.eps_LD + 1e-9 &&
                      r.report.eps_info <= cfg.eps_I + 1e-9);
  if (!audit) std::cerr << "design: budget audit failed\n";
  return audit ? 0 : 1;
}

int cmd_sweep(const std::string& spec_path, std::size_t jobs,
              const std::string& out, const std::string& stub) {
  const auto spec = privdet::load_sweep_spec(spec_path);
  const auto res = privdet::run_sweep(spec, jobs);
  const std::string path = out.empty() ? spec.output : out;
  emit(path, privdet::sweep_csv(res, spec.timing));
  if (!spec.artifacts.empty()) privdet::write_artifacts(res, spec.artifacts);
  if (!stub.empty()) privdet::write_text_file(stub, privdet::gnuplot_stub(path));
  std::size_t bad = 0;
  for (std::size_t i = 0; i < res.results.size(); ++i) {
    const auto& r = res.results[i];
    if (!r.ok) {
      ++bad;
      std::cerr << "cell " << i << " (" << res.cells[i].arch
                << ") failed: " << r.message << "\n";
    } else if (!r.audit_ok) {
      ++bad;
      std::cerr << "cell " << i << " (" << res.cells[i].arch
                << ") failed its budget audit\n";
    }
  }
  return bad == 0 ? 0 : 1;
}

struct EpicArgs {
  std::string train;
  std::string test;
  std::size_t q = 1;
  std::size_t bins = 10;
  std::string scheme = "quantile";
  std::string eps_ld = "inf";
  double r = 0.999;
  double lambda = 10.0;
  std::uint64_t seed = 0;
  std::size_t z_size = 2;
  std::size_t restarts = 4;
  bool e_ldp = false;
  std::string out;
  std::string metrics;
};

int cmd_epic(const EpicArgs& a) {
  const auto train_raw = privdet::read_raw_csv(a.train, a.q);
  const auto test_raw = privdet::read_raw_csv(a.test, a.q);
  const auto scheme = a.scheme == "integer" ? privdet::BinScheme::kInteger
                                            : privdet::BinScheme::kQuantile;
  if (a.scheme != "integer" && a.scheme != "quantile") {
    throw privdet::InvalidArgument("epic: --scheme is quantile or integer");
  }
  const auto disc = privdet::Discretizer::fit(train_raw, a.bins, scheme);
  for (const auto& w : disc.warnings) std::cerr << "warning: " << w << "\n";
  const auto train = disc.apply(train_raw);
  const auto test = disc.apply(test_raw);
  privdet::EpicConfig cfg;
  cfg.eps_LD = parse_budget(a.eps_ld);
  cfg.r = a.r;
  cfg.lambda = a.lambda;
  cfg.seed = a.seed;
  cfg.z_size = a.z_size;
  cfg.restarts = a.restarts;
  cfg.privacy = !a.e_ldp;
  const auto sol = privdet::epic_solve(train, cfg);
  const auto ev = privdet::evaluate(sol, test, privdet::derive_seed(a.seed, 1));
  Json j;
  j["arch"] = a.e_ldp ? "e-ldp" : "epic";
  j["mapping"] = privdet::to_json(sol.mapping);
  j["theta"] = privdet::number_to_json(sol.theta);
  j["theta_star"] = privdet::number_to_json(sol.theta_star);
  j["worst_risk"] = privdet::number_to_json(sol.worst_risk());
  j["objective"] = privdet::number_to_json(sol.objective);
  j["eps_LD"] = privdet::number_to_json(sol.eps_LD);
  j["notes"] = sol.notes;
  emit(a.out, j.dump(2) + "\n");
  using privdet::format_double;
  const std::string metrics =
      "arch,error_H,error_G,eps_info_hat,eps_ldp_hat\n" +
      std::string(a.e_ldp ? "e-ldp" : "epic") + "," +
      format_double(ev.error_H) + "," + format_double(ev.error_G) + "," +
      format_double(ev.budgets.eps_info) + "," +
      format_double(ev.budgets.eps_ldp) + "\n";
  if (a.metrics.empty()) {
    std::cerr << metrics;
  } else {
    privdet::write_text_file(a.metrics, metrics);
  }
  const bool audit = privdet::ldp_budget(sol.mapping) <= cfg.eps_LD + 1e-9;
  return audit ? 0 : 1;
}

struct GenArgs {
  std::string kind = "correlated";
  std::uint64_t seed = 0;
  std::size_t s = 3;
  std::size_t x_size = 4;
  std::size_t q = 1;
  double corr = 0.2;
  std::vector<std::size_t> g_independent;
  std::size_t n = 40;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  if (a.kind == "levels-data") {
    emit(a.out, privdet::raw_csv_text(privdet::generate_level_data(
                    a.n, a.seed, a.s, a.corr)));
    return 0;
  }
  privdet::JointModel m = [&] {
    if (a.kind == "random") return privdet::random_model(a.seed, a.s, a.x_size, a.q);
    if (a.kind == "levels") return privdet::level_model(a.s, a.corr);
    if (a.kind != "correlated") {
      throw privdet::InvalidArgument("gen-model: unknown kind '" + a.kind + "'");
    }
    privdet::CorrelatedModelOptions opts;
    for (auto t : a.g_independent) {
      if (t == 0) throw privdet::InvalidArgument("sensors are numbered from 1");
      opts.g_independent.push_back(t - 1);
    }
    return privdet::generate_correlated_model(a.seed, a.s, a.x_size, a.q,
                                              a.corr, opts);
  }();
  emit(a.out, privdet::to_json(m).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-constrained decentralized detection toolkit"};
  app.require_subcommand(1);

  std::string model_path, mapping_path, out, report_csv;
  auto* report = app.add_subcommand("report", "Budgets and errors of a mapping");
  report->add_option("--model", model_path, "model JSON")->required();
  report->add_option("--mapping", mapping_path,
                     "mapping or two-stage JSON (identity if omitted)");
  report->add_option("--out", out, "output path (stdout if omitted)");
  report->add_option("--csv", report_csv, "also write a one-row CSV here");

  DesignArgs da;
  auto* design = app.add_subcommand("design", "Design privacy mappings");
  design->add_option("--arch", da.arch, "ldp, ill, lip, inp or identity");
  design->add_option("--model", da.model, "model JSON")->required();
  design->add_option("--eps-i", da.eps_i, "information privacy budget");
  design->add_option("--eps-ld", da.eps_ld, "LDP budget");
  design->add_option("--seed", da.seed);
  design->add_option("--z-size", da.z_size);
  design->add_option("--y-size", da.y_size, "first-stage alphabet, 0 = |Z|");
  design->add_option("--restarts", da.restarts);
  design->add_option("--out", da.out);

  std::string spec_path, stub;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a grid from a JSON spec");
  sweep->add_option("--spec", spec_path)->required();
  sweep->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "CSV path (overrides the spec)");
  sweep->add_option("--gnuplot-stub", stub, "write a gnuplot script here");

  std::uint64_t rel_seed = 0;
  std::size_t trials = 200;
  auto* rel = app.add_subcommand("relations", "Implication table");
  rel->add_option("--seed", rel_seed);
  rel->add_option("--trials", trials);
  rel->add_option("--out", out);

  EpicArgs ea;
  auto* epic = app.add_subcommand("epic", "Train EPIC on CSV data");
  epic->add_option("--train", ea.train)->required();
  epic->add_option("--test", ea.test)->required();
  epic->add_option("--q", ea.q, "number of private bits");
  epic->add_option("--bins", ea.bins);
  epic->add_option("--scheme", ea.scheme, "quantile or integer");
  epic->add_option("--eps-ld", ea.eps_ld);
  epic->add_option("--r", ea.r);
  epic->add_option("--lambda", ea.lambda);
  epic->add_option("--seed", ea.seed);
  epic->add_option("--z-size", ea.z_size);
  epic->add_option("--restarts", ea.restarts);
  epic->add_flag("--e-ldp", ea.e_ldp, "drop the privacy risk constraint");
  epic->add_option("--out", ea.out);
  epic->add_option("--metrics", ea.metrics, "held-out metrics CSV row");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen-model", "Generate models or data");
  gen->add_option("--kind", ga.kind,
                  "correlated, random, levels or levels-data");
  gen->add_option("--seed", ga.seed);
  gen->add_option("--s", ga.s);
  gen->add_option("--x-size", ga.x_size);
  gen->add_option("--q", ga.q);
  gen->add_option("--corr", ga.corr);
  gen->add_option("--g-independent", ga.g_independent);
  gen->add_option("--n", ga.n, "rows for levels-data");
  gen->add_option("--out", ga.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*report) return cmd_report(model_path, mapping_path, out, report_csv);
    if (*design) return cmd_design(da);
    if (*sweep) return cmd_sweep(spec_path, jobs, out, stub);
    if (*rel) {
      emit(out, privdet::relations_csv(rel_seed, trials));
      return 0;
    }
    if (*epic) return cmd_epic(ea);
    if (*gen) return cmd_gen(ga);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
