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

// Acceptance run: one PASS/FAIL line per criterion. `acceptance N` runs only
// criterion N. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "privdet/sweep.hpp"

namespace {

using namespace privdet;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

std::string fmt(double v) { return format_double(v); }

// Closed-form and LP per-sensor steps on coefficients drawn from real models.
Outcome criterion1() {
  Outcome o;
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(seed, 0xc1));
    const std::size_t s = 1 + rng.below(3);
    const std::size_t nx = 2 + rng.below(5);
    const auto model = random_model(rng.next(), s, nx, 1 + rng.below(2));
    const auto mapping = random_mapping(rng.next(), s, nx, 2);
    const std::size_t t = rng.below(s);
    const double eps = 0.05 + 3.0 * rng.uniform();
    const auto rule = optimal_fusion_rule(model, mapping);
    const auto c = utility_coefficients(partial_push(model, mapping, t), rule, 2);
    const double a = step_objective(c, ldp_closed_form_from_coeffs(c, nx, eps));
    const double b = step_objective(c, ldp_lp_from_coeffs(c, nx, 2, eps));
    worst = std::max(worst, std::abs(a - b));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (worst > 1e-8) fail(o, "objective gap " + fmt(worst));
  if (secs >= 10.0) fail(o, "took " + fmt(secs) + " s");
  o.detail = "max gap " + fmt(worst) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto rep = check_bound_suite(2026, 200);
  std::string slacks;
  for (const auto& b : rep.bounds) {
    if (b.violations > 0 || b.min_slack < -1e-9) {
      fail(o, "bound " + b.id + " violated " + std::to_string(b.violations) +
                  " times");
    }
    slacks += " " + b.id + ":" + fmt(b.min_slack);
  }
  if (o.pass) o.detail = "min slack" + slacks;
  return o;
}

Outcome criterion3() {
  Outcome o;
  for (double a : {0.5, 0.1, 0.01, 1e-4}) {
    const auto pushed = detail::pushed_from_gz(corner_joint(a, 2, 2), 1, 2);
    const double mi = a * std::log(1.0 / a) + (1.0 - a) * std::log(1.0 / (1.0 - a));
    if (std::abs(avg_info_leakage(pushed) - mi) > 1e-12) {
      fail(o, "I(V;U) off at alpha " + fmt(a));
    }
    const auto pgz = pushed.p_gz();
    const double ratio = pgz[0] / (pushed.p_g()[0] * pushed.p_z()[0]);
    if (std::abs(ratio - 1.0 / a) > 1e-12 * std::max(1.0, 1.0 / a)) {
      fail(o, "density ratio off at alpha " + fmt(a));
    }
  }
  if (witness_ai_not_info().verdict != kNonGuarantee) {
    fail(o, "avg leakage witness verdict");
  }
  if (witness_mi_not_info().verdict != kNonGuarantee) {
    fail(o, "mutual info witness verdict");
  }
  const auto w = witness_info_not_ldp();
  if (!(w.points.size() == 1 && w.points[0].eps_a == 0.0 &&
        std::isinf(w.points[0].eps_b))) {
    fail(o, "info-vs-ldp witness: info " + fmt(w.points.at(0).eps_a) +
                " ldp " + fmt(w.points.at(0).eps_b));
  }
  if (o.pass) o.detail = "closed forms and verdicts match";
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto model = generate_correlated_model(4, 3, 4, 1, 0.2);
  std::size_t n = 0;
  double lo = 1.0, hi = 0.0;
  for (double ei : {0.1, 0.5, 1.0}) {
    for (double eld : {0.5, 1.0, 2.0}) {
      for (bool ill : {true, false}) {
        OptimizerConfig cfg;
        cfg.eps_I = ei;
        cfg.eps_LD = eld;
        cfg.seed = 1;
        cfg.restarts = 3;
        const auto d = ill ? design_ill(model, cfg) : design_lip(model, cfg);
        const auto rep = full_report(model, d.mapping);
        ++n;
        lo = std::min(lo, d.bayes_error_H);
        hi = std::max(hi, d.bayes_error_H);
        if (rep.eps_ldp > eld + 1e-9 || rep.eps_info > ei + 1e-9) {
          fail(o, std::string(ill ? "ILL" : "LIP") + " at (" + fmt(ei) + ", " +
                      fmt(eld) + "): ldp " + fmt(rep.eps_ldp) + " info " +
                      fmt(rep.eps_info));
        }
      }
    }
  }
  if (o.pass) {
    o.detail = std::to_string(n) + " designs audited, H error " + fmt(lo) +
               " to " + fmt(hi);
  }
  return o;
}

SweepSpec trend_spec(std::vector<std::string> archs, std::vector<double> eps_I,
                     std::vector<double> eps_LD) {
  SweepSpec sp;
  sp.generator.seed = 11;
  sp.generator.s = 4;
  sp.generator.x_size = 8;
  sp.archs = std::move(archs);
  sp.eps_I = std::move(eps_I);
  sp.eps_LD = std::move(eps_LD);
  sp.corr = {0.2};
  sp.restarts = 3;
  sp.continuation = true;
  return sp;
}

const CellResult* find(const SweepOutcome& o, const std::string& arch,
                       double eps_LD, double eps_I = kNaN) {
  for (std::size_t i = 0; i < o.cells.size(); ++i) {
    const auto& c = o.cells[i];
    const bool ld = (std::isnan(eps_LD) && std::isnan(c.eps_LD)) || c.eps_LD == eps_LD;
    const bool ii = std::isnan(eps_I) || c.eps_I == eps_I;
    if (c.arch == arch && ld && ii) return &o.results[i];
  }
  return nullptr;
}

Outcome criterion5() {
  Outcome o;
  const std::vector<double> grid{0.5, 1.0, 2.0, 5.0, kInf};
  const auto out = run_sweep(trend_spec({"ldp", "ill", "lip"}, {0.05}, grid));
  for (const auto& r : out.results) {
    if (!r.ok) fail(o, "cell error: " + r.message);
  }
  if (!o.pass) return o;
  std::string a_vals;
  for (double eld : {2.0, 5.0, kInf}) {
    const double g_ldp = find(out, "ldp", eld)->bayes_error_G;
    const double g_ill = find(out, "ill", eld)->bayes_error_G;
    a_vals += " " + fmt(eld) + ":" + fmt(g_ldp) + "<" + fmt(g_ill);
    if (!(g_ldp < g_ill)) fail(o, "(a) at eps_LD " + fmt(eld) + a_vals);
  }
  for (const char* arch : {"ill", "lip"}) {
    double prev = 1.0;
    for (double eld : grid) {
      const double e = find(out, arch, eld)->bayes_error_H;
      if (e > prev + 1e-6) {
        fail(o, std::string("(b) ") + arch + " rises at eps_LD " + fmt(eld));
      }
      prev = e;
    }
  }
  // A fifth sensor whose law ignores G given H, listed first.
  auto sp = trend_spec({"ill", "lip", "inp"}, {0.05}, {1.0});
  sp.generator.s = 5;
  sp.generator.g_independent = {1};
  const auto out_c = run_sweep(sp);
  double mi_inp = kNaN;
  for (const auto& r : out_c.results) {
    if (!r.ok) {
      fail(o, "(c) cell error: " + r.message);
      return o;
    }
  }
  mi_inp = find(out_c, "inp", kNaN)->mi_XZ.at(0);
  std::string c_vals = " inp " + fmt(mi_inp);
  for (const char* arch : {"ill", "lip"}) {
    const double mi = find(out_c, arch, 1.0)->mi_XZ.at(0);
    c_vals += std::string(" ") + arch + " " + fmt(mi);
    if (mi > mi_inp + 1e-9) fail(o, std::string("(c) ") + arch + c_vals);
  }
  if (o.pass) o.detail = "(a)" + a_vals + "; (c) I(X1;Z1)" + c_vals;
  return o;
}

EpicEvaluation epic_run(double eps, bool privacy) {
  const auto train = level_dataset(generate_level_data(40, 1));
  const auto test = level_dataset(generate_level_data(5000, 2));
  EpicConfig c;
  c.eps_LD = eps;
  c.r = 0.999;
  c.lambda = 10.0;
  c.seed = 3;
  c.privacy = privacy;
  return evaluate(epic_solve(train, c), test, 99);
}

Outcome criterion6() {
  Outcome o;
  const auto lo = epic_run(0.1, true);
  const auto hi = epic_run(10.0, true);
  const auto ab = epic_run(10.0, false);
  if (lo.error_H < 0.4 || lo.error_G < 0.4) {
    fail(o, "eps 0.1: H " + fmt(lo.error_H) + " G " + fmt(lo.error_G));
  }
  if (hi.error_H > 0.2 || hi.error_G < 0.4) {
    fail(o, "eps 10: H " + fmt(hi.error_H) + " G " + fmt(hi.error_G) +
                " (needs H <= 0.2, G >= 0.4)");
  }
  if (ab.error_G > 0.3) fail(o, "E-LDP eps 10: G " + fmt(ab.error_G));
  const std::string all = "eps 0.1 H/G " + fmt(lo.error_H) + "/" +
                          fmt(lo.error_G) + "; eps 10 H/G " + fmt(hi.error_H) +
                          "/" + fmt(hi.error_G) + "; E-LDP G " + fmt(ab.error_G);
  o.detail = o.pass ? all : o.detail + " | " + all;
  return o;
}

Outcome criterion7() {
  Outcome o;
  Rng rng(77);
  for (int k = 0; k < 20; ++k) {
    const auto mapping = random_mapping(rng.next(), 2, 3, 3);
    std::vector<std::pair<std::size_t, std::size_t>> one{{0, 0}};
    const auto est = empirical_budgets(one, mapping);
    if (est.eps_ldp != ldp_budget(mapping)) fail(o, "LDP estimate differs");
  }
  const auto pushed =
      detail::pushed_from_gz({0.125, 0.375, 0.375, 0.125}, 1, 2);
  const double exact = info_privacy_budget(pushed);
  const auto est = empirical_budgets(sample_gz(pushed, 100000, 7),
                                     NetworkMapping({randomized_response(2, 1)}));
  if (std::abs(exact - std::log(2.0)) > 1e-12) fail(o, "exact budget " + fmt(exact));
  if (std::abs(est.eps_info - std::log(2.0)) > 0.1) {
    fail(o, "eps_I estimate " + fmt(est.eps_info));
  }
  if (o.pass) o.detail = "eps_I estimate " + fmt(est.eps_info);
  return o;
}

// Every output the CLI writes, produced twice from the same seeds.
std::string all_outputs() {
  std::string s;
  const auto model = generate_correlated_model(5, 2, 3, 1, 0.2);
  s += to_json(model).dump() + "\n";
  s += raw_csv_text(generate_level_data(30, 4));
  OptimizerConfig cfg;
  cfg.eps_I = 0.5;
  cfg.eps_LD = 1.0;
  cfg.seed = 9;
  cfg.restarts = 2;
  s += to_json(design_ldp(model, cfg)).dump() + "\n";
  s += to_json(design_ill(model, cfg)).dump() + "\n";
  s += to_json(design_lip(model, cfg)).dump() + "\n";
  s += to_json(design_inp(model, cfg)).dump() + "\n";
  s += to_json(full_report(model, design_identity(model).mapping)).dump() + "\n";
  SweepSpec sp;
  sp.generator.seed = 2;
  sp.generator.s = 2;
  sp.generator.x_size = 3;
  sp.archs = {"identity", "ldp", "ill"};
  sp.eps_I = {0.5};
  sp.eps_LD = {0.5, 2.0};
  sp.restarts = 2;
  s += sweep_csv(run_sweep(sp, 2), false);
  s += relations_csv(1, 20);
  const auto train = level_dataset(generate_level_data(30, 5));
  EpicConfig ec;
  ec.eps_LD = 1.0;
  ec.seed = 4;
  ec.restarts = 2;
  const auto sol = epic_solve(train, ec);
  s += to_json(sol.mapping).dump() + "\n";
  const auto ev = evaluate(sol, level_dataset(generate_level_data(200, 6)), 8);
  s += fmt(ev.error_H) + "," + fmt(ev.error_G) + "," + fmt(ev.budgets.eps_info) +
       "\n";
  return s;
}

Outcome criterion8() {
  Outcome o;
  const auto a = all_outputs();
  const auto b = all_outputs();
  if (a != b) fail(o, "outputs differ between runs");
  if (o.pass) o.detail = std::to_string(a.size()) + " bytes identical";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> all{
      criterion1, criterion2, criterion3, criterion4,
      criterion5, criterion6, criterion7, criterion8};
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  if (only < 0 || only > 8) {
    std::fprintf(stderr, "usage: acceptance [1-8]\n");
    return 64;
  }
  int failed = 0;
  for (int k = 1; k <= 8; ++k) {
    if (only != 0 && k != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[k - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", k,
                secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed;
}
