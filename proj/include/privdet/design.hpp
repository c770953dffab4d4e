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

// Parametric mapping design: block Gauss-Seidel over sensors for the
// LDP-only problem, the information-privacy stage, and their two-stage
// concatenations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/detection.hpp"
#include "privdet/lp.hpp"
#include "privdet/metrics.hpp"
#include "privdet/model.hpp"

namespace privdet {

struct OptimizerConfig {
  double eps_I = kInf;
  double eps_LD = kInf;
  std::size_t max_outer_iters = 100;
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
  std::size_t restarts = 5;
  std::size_t phi_cap = 4096;
  double lp_tol = 1e-9;
  // Output alphabet of the mapping, and the intermediate alphabet of
  // two-stage designs (0 means "same as z_size").
  std::size_t z_size = 2;
  std::size_t y_size = 0;
  // Use the binary closed form for LDP steps when |Z| = 2.
  bool closed_form = true;
  // Extra Gauss-Seidel starting points for LDP designs.
  std::vector<NetworkMapping> warm_starts;
  // A previously designed two-stage mapping that is kept if it audits clean
  // and beats the fresh design.
  std::optional<TwoStageMapping> incumbent;

  std::size_t intermediate_size() const { return y_size == 0 ? z_size : y_size; }

  void validate() const {
    if (!(eps_I >= 0.0)) throw InvalidArgument("eps_I must be >= 0");
    if (!(eps_LD >= 0.0)) throw InvalidArgument("eps_LD must be >= 0");
    if (!(convergence_tol > 0.0)) throw InvalidArgument("tol must be > 0");
    if (max_outer_iters == 0) throw InvalidArgument("max_outer_iters >= 1");
    if (z_size == 0) throw InvalidArgument("z_size must be >= 1");
  }
};

struct DesignResult {
  std::string arch;
  NetworkMapping mapping;
  std::optional<TwoStageMapping> two_stage;
  FusionRule rule;
  std::vector<double> trace;
  BudgetReport report;
  double bayes_error_H = 0.0;
  double bayes_error_G = 0.0;
  bool converged = false;
  std::optional<PrivacyRiskProfile> risk;
  // Weight of the constant channel mixed in by the information audit repair.
  double repair_weight = 0.0;
  bool from_incumbent = false;
  std::vector<std::string> notes;
};

namespace detail {

// Outer product over sensors of [hg][a_t] factor tables of varying width,
// scaled by weight[hg].
inline std::vector<double> outer_rows(
    const std::vector<std::vector<double>>& factors,
    const std::vector<std::size_t>& widths, std::size_t hg_count,
    const std::vector<double>& weight) {
  std::size_t total = 1;
  for (auto w : widths) {
    if (w != 0 && total > kMaxCells / w) {
      throw TooLargeError("table exceeds the cell limit");
    }
    total *= w;
  }
  if (hg_count * total > kMaxCells) {
    throw TooLargeError("table exceeds the cell limit");
  }
  std::vector<double> out(hg_count * total);
  for (std::size_t k = 0; k < hg_count; ++k) {
    std::vector<double> acc{weight[k]};
    for (std::size_t t = 0; t < factors.size(); ++t) {
      const std::size_t w = widths[t];
      std::vector<double> next(acc.size() * w);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        for (std::size_t a = 0; a < w; ++a) {
          next[i * w + a] = acc[i] * factors[t][k * w + a];
        }
      }
      acc = std::move(next);
    }
    std::copy(acc.begin(), acc.end(), out.begin() + k * total);
  }
  return out;
}

}  // namespace detail

/// p(h, g, z_1..x_t..z_s): every sensor pushed through its channel except t,
/// which stays raw.
struct PartialPush {
  std::vector<double> data;
  std::vector<std::size_t> dims;  // dims[0] = |H x G|, then one per sensor
  std::size_t t = 0;
  std::size_t s = 0;
  std::size_t q = 1;
};

inline PartialPush partial_push(const JointModel& model,
                                const NetworkMapping& mapping, std::size_t t) {
  detail::check_mapping_fits(model, mapping);
  PartialPush p;
  p.t = t;
  p.s = model.s();
  p.q = model.q();
  p.dims.push_back(model.hg_count());
  for (std::size_t i = 0; i < model.s(); ++i) {
    p.dims.push_back(i == t ? model.x_size() : mapping.z_size());
  }
  if (model.form() == ModelForm::kCondIndep) {
    std::vector<std::vector<double>> factors;
    std::vector<std::size_t> widths;
    for (std::size_t i = 0; i < model.s(); ++i) {
      factors.push_back(i == t ? model.conditionals()[i]
                               : detail::sensor_push(model, i,
                                                     mapping.channel(i)));
      widths.push_back(p.dims[1 + i]);
    }
    p.data = detail::outer_rows(factors, widths, model.hg_count(),
                                model.prior());
  } else {
    std::vector<std::size_t> dims{model.hg_count()};
    for (std::size_t i = 0; i < model.s(); ++i) dims.push_back(model.x_size());
    auto rows = model.joint();
    for (std::size_t i = 0; i < model.s(); ++i) {
      if (i == t) continue;
      rows = detail::apply_channel_axis(rows, dims, i + 1, mapping.channel(i));
    }
    p.data = std::move(rows);
  }
  return p;
}

/// Finishes a partial push with a channel for sensor t.
inline PushedModel complete(const PartialPush& p, const SensorChannel& ch) {
  auto dims = p.dims;
  auto data = detail::apply_channel_axis(p.data, dims, p.t + 1, ch);
  return PushedModel(p.s, ch.z_size(), p.q, std::move(data));
}

/// C[x][z] with P(rule(Z) != H) = sum_{x,z} p_t(z|x) C[x][z] when only
/// sensor t's channel varies.
inline std::vector<double> utility_coefficients(const PartialPush& p,
                                                const FusionRule& rule,
                                                std::size_t z_size) {
  const std::size_t s = p.s, t = p.t;
  const std::size_t nx = p.dims[1 + t];
  std::vector<std::size_t> zstride(s, 1);
  for (std::size_t i = s; i-- > 1;) zstride[i - 1] = zstride[i] * z_size;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < s; ++i) inner *= p.dims[1 + i];
  const std::size_t g_count = p.dims[0] / 2;
  if (rule.size() != zstride[0] * z_size) {
    throw DimensionError("fusion rule does not cover Z^s");
  }

  std::vector<double> c(nx * z_size, 0.0);
  std::vector<std::size_t> digit(s, 0);
  for (std::size_t k = 0; k < p.dims[0]; ++k) {
    const std::size_t h = k / g_count;
    std::fill(digit.begin(), digit.end(), 0);
    for (std::size_t i = 0; i < inner; ++i) {
      const double v = p.data[k * inner + i];
      if (v != 0.0) {
        std::size_t base = 0;
        for (std::size_t j = 0; j < s; ++j) {
          if (j != t) base += digit[j] * zstride[j];
        }
        const std::size_t x = digit[t];
        for (std::size_t z = 0; z < z_size; ++z) {
          const auto d = rule(base + z * zstride[t]);
          if ((h == 0 && d == 1) || (h == 1 && d == 0)) {
            c[x * z_size + z] += v;
          }
        }
      }
      for (std::size_t j = s; j-- > 0;) {
        if (++digit[j] < p.dims[1 + j]) break;
        digit[j] = 0;
      }
    }
  }
  return c;
}

inline double step_objective(const std::vector<double>& coeffs,
                             const SensorChannel& ch) {
  double v = 0.0;
  for (std::size_t x = 0; x < ch.x_size(); ++x) {
    for (std::size_t z = 0; z < ch.z_size(); ++z) {
      v += coeffs[x * ch.z_size() + z] * ch(x, z);
    }
  }
  return v;
}

/// Binary LDP step from the coefficients. The sign test assigns
/// p(0|x) = a for d(x) < 0 and b otherwise, where d(x) = C[x][0] - C[x][1].
/// The reduced (a, b) program has vertices (e^eps/(1+e^eps), 1/(1+e^eps)),
/// (1, 1) and (0, 0); the best one is returned, the first on ties.
inline SensorChannel ldp_closed_form_from_coeffs(
    const std::vector<double>& coeffs, std::size_t x_size, double eps) {
  if (eps < 0.0) throw InvalidArgument("eps_LD must be >= 0");
  double a = 1.0, b = 0.0;
  if (!std::isinf(eps)) {
    a = 1.0 / (1.0 + std::exp(-eps));
    b = 1.0 / (1.0 + std::exp(eps));
  }
  double d_neg = 0.0, d_pos = 0.0, scale = 0.0;
  std::vector<double> d(x_size);
  for (std::size_t x = 0; x < x_size; ++x) {
    d[x] = coeffs[x * 2] - coeffs[x * 2 + 1];
    (d[x] < 0.0 ? d_neg : d_pos) += d[x];
    scale += std::abs(d[x]);
  }
  const double tie = 1e-14 * std::max(1.0, scale);
  const double v_vertex = a * d_neg + b * d_pos;
  const double v_one = d_neg + d_pos;
  double best = v_vertex;
  if (v_one < best - tie) {
    a = b = 1.0;
    best = v_one;
  }
  if (0.0 < best - tie) a = b = 0.0;
  std::vector<double> rows(x_size * 2);
  for (std::size_t x = 0; x < x_size; ++x) {
    const double p0 = d[x] < 0.0 ? a : b;
    rows[x * 2] = p0;
    rows[x * 2 + 1] = 1.0 - p0;
  }
  return SensorChannel(x_size, 2, std::move(rows));
}

/// General |Z| LDP step: the per-sensor linear program with ratio
/// constraints p(z|x) <= e^eps p(z|x').
inline SensorChannel ldp_lp_from_coeffs(const std::vector<double>& coeffs,
                                        std::size_t x_size, std::size_t z_size,
                                        double eps, double lp_tol = 1e-9) {
  if (eps < 0.0) throw InvalidArgument("eps_LD must be >= 0");
  const std::size_t n = x_size * z_size;
  LinearProgram lp;
  lp.objective = coeffs;
  for (std::size_t x = 0; x < x_size; ++x) {
    std::vector<double> row(n, 0.0);
    for (std::size_t z = 0; z < z_size; ++z) row[x * z_size + z] = 1.0;
    lp.add(std::move(row), Sense::kEq, 1.0);
  }
  if (!std::isinf(eps)) {
    const double e = std::exp(eps);
    for (std::size_t z = 0; z < z_size; ++z) {
      for (std::size_t x = 0; x < x_size; ++x) {
        for (std::size_t x2 = 0; x2 < x_size; ++x2) {
          if (x == x2) continue;
          std::vector<double> row(n, 0.0);
          row[x * z_size + z] = 1.0;
          row[x2 * z_size + z] = -e;
          lp.add(std::move(row), Sense::kLe, 0.0);
        }
      }
    }
  }
  const auto res = solve_lp(lp, lp_tol);
  if (!res.ok()) {
    throw InfeasibleError(std::string("LDP step LP: ") + to_string(res.status));
  }
  return enforce_ldp(SensorChannel::from_solver(x_size, z_size, res.x), eps);
}

inline SensorChannel ldp_closed_form_step(const JointModel& model,
                                          const FusionRule& rule,
                                          const NetworkMapping& mapping,
                                          std::size_t t, double eps) {
  if (mapping.z_size() != 2) {
    throw InvalidArgument("closed-form LDP step needs |Z| = 2");
  }
  const auto c = utility_coefficients(partial_push(model, mapping, t), rule, 2);
  return ldp_closed_form_from_coeffs(c, model.x_size(), eps);
}

inline SensorChannel ldp_lp_step(const JointModel& model,
                                 const FusionRule& rule,
                                 const NetworkMapping& mapping, std::size_t t,
                                 double eps, double lp_tol = 1e-9) {
  const auto c = utility_coefficients(partial_push(model, mapping, t), rule,
                                      mapping.z_size());
  return ldp_lp_from_coeffs(c, model.x_size(), mapping.z_size(), eps, lp_tol);
}

namespace detail {

struct GsRun {
  NetworkMapping mapping;
  FusionRule rule;
  std::vector<double> trace;
  bool converged = false;
  double objective = kInf;
};

inline GsRun ldp_gauss_seidel(const JointModel& model, NetworkMapping mapping,
                              double eps, const OptimizerConfig& cfg) {
  GsRun run{mapping, {}, {}, false, kInf};
  const std::size_t nz = mapping.z_size();
  for (std::size_t it = 0; it < cfg.max_outer_iters; ++it) {
    const NetworkMapping before = run.mapping;
    const FusionRule rule = optimal_fusion_rule(model, run.mapping);
    for (std::size_t t = 0; t < model.s(); ++t) {
      const auto c = utility_coefficients(partial_push(model, run.mapping, t),
                                          rule, nz);
      SensorChannel next =
          (nz == 2 && cfg.closed_form)
              ? ldp_closed_form_from_coeffs(c, model.x_size(), eps)
              : ldp_lp_from_coeffs(c, model.x_size(), nz, eps, cfg.lp_tol);
      // Keep the incumbent unless the step strictly improves it, so feasible
      // points never move sideways.
      const auto& cur = run.mapping.channel(t);
      if (ldp_budget(cur) <= eps + 1e-12 &&
          step_objective(c, cur) <= step_objective(c, next) + cfg.lp_tol) {
        continue;
      }
      run.mapping = run.mapping.with_channel(t, std::move(next));
    }
    const PushedModel pushed = push_forward(model, run.mapping);
    run.rule = optimal_fusion_rule(pushed);
    run.objective = bayes_error_H(pushed, run.rule);
    run.trace.push_back(run.objective);
    if (run.mapping.l1_distance(before) < cfg.convergence_tol) {
      run.converged = true;
      break;
    }
  }
  return run;
}

}  // namespace detail

/// LDP-only design X -> Z at budget eps over `restarts` random starts plus
/// any warm starts; returns the run with the lowest Bayes error.
inline DesignResult design_ldp_at(const JointModel& model,
                                  const OptimizerConfig& cfg, double eps,
                                  std::size_t z_size) {
  cfg.validate();
  std::vector<NetworkMapping> starts;
  for (std::size_t r = 0; r < std::max<std::size_t>(cfg.restarts, 1); ++r) {
    starts.push_back(random_mapping(derive_seed(cfg.seed, r), model.s(),
                                    model.x_size(), z_size));
  }
  if (z_size == model.x_size() && std::isfinite(eps)) {
    starts.push_back(NetworkMapping::replicate(
        model.s(), randomized_response(z_size, eps)));
  }
  for (const auto& w : cfg.warm_starts) {
    if (w.size() == model.s() && w.x_size() == model.x_size() &&
        w.z_size() == z_size && ldp_budget(w) <= eps + 1e-12) {
      starts.push_back(w);
    }
  }
  std::optional<detail::GsRun> best;
  for (auto& st : starts) {
    auto run = detail::ldp_gauss_seidel(model, std::move(st), eps, cfg);
    if (!best || run.objective < best->objective - 1e-15) best = std::move(run);
  }
  DesignResult out{"ldp", best->mapping, std::nullopt, best->rule,
                   best->trace, {}, 0.0, 0.0, best->converged, std::nullopt, 0.0, false, {}};
  return out;
}

inline void finalize(DesignResult& r, const JointModel& model) {
  const PushedModel pushed = push_forward(model, r.mapping);
  r.rule = optimal_fusion_rule(pushed);
  r.bayes_error_H = bayes_error_H(pushed, r.rule);
  r.bayes_error_G = bayes_error_G(pushed);
  r.report = full_report(model, r.mapping);
}

inline DesignResult design_ldp(const JointModel& model,
                               const OptimizerConfig& cfg) {
  auto r = design_ldp_at(model, cfg, cfg.eps_LD, cfg.z_size);
  finalize(r, model);
  return r;
}

// ---------------------------------------------------------------------------
// Information-privacy stage.

namespace detail {

// All deterministic maps X -> Y when they fit under the cap, otherwise the
// constant maps plus a seeded random sample.
inline std::vector<std::vector<std::size_t>> candidate_maps(
    std::size_t nx, std::size_t ny, std::size_t cap, Rng& rng) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t total = 1;
  bool fits = true;
  for (std::size_t i = 0; i < nx; ++i) {
    if (total > cap / ny) {
      fits = false;
      break;
    }
    total *= ny;
  }
  if (fits && total <= cap) {
    for (std::size_t k = 0; k < total; ++k) {
      std::vector<std::size_t> m(nx);
      std::size_t v = k;
      for (std::size_t i = nx; i-- > 0;) {
        m[i] = v % ny;
        v /= ny;
      }
      out.push_back(std::move(m));
    }
    return out;
  }
  for (std::size_t y = 0; y < ny; ++y) {
    out.emplace_back(nx, y);
  }
  while (out.size() < cap) {
    std::vector<std::size_t> m(nx);
    for (auto& v : m) v = rng.below(ny);
    out.push_back(std::move(m));
  }
  return out;
}

inline NetworkMapping mix_toward_constant(const NetworkMapping& m,
                                          double lambda) {
  std::vector<SensorChannel> out;
  for (const auto& ch : m.channels()) {
    const double u = 1.0 / static_cast<double>(ch.z_size());
    std::vector<double> rows(ch.rows());
    for (auto& v : rows) v = (1.0 - lambda) * v + lambda * u;
    out.push_back(SensorChannel::from_solver(ch.x_size(), ch.z_size(), rows));
  }
  return NetworkMapping(std::move(out));
}


struct Repaired {
  NetworkMapping mapping;
  double weight = 0.0;
  double eps_info = 0.0;
};

// Smallest weight of the uniform constant channel (coarse geometric grid,
// then bisection) whose mixture meets the information budget. Weight 1
// always passes.
inline Repaired repair_to_budget(const JointModel& model,
                                 const NetworkMapping& m, double eps_I) {
  auto budget = [&](const NetworkMapping& x) {
    return info_privacy_budget(push_forward(model, x));
  };
  const double e0 = budget(m);
  if (e0 <= eps_I + 1e-9) return {m, 0.0, e0};
  double lo = 0.0, hi = 1.0 / 1024.0;
  while (hi < 1.0 && budget(mix_toward_constant(m, hi)) > eps_I + 1e-9) {
    lo = hi;
    hi = std::min(1.0, hi * 2.0);
  }
  for (int i = 0; i < 30 && hi - lo > 1e-6; ++i) {
    const double mid = 0.5 * (lo + hi);
    (budget(mix_toward_constant(m, mid)) > eps_I + 1e-9 ? lo : hi) = mid;
  }
  auto out = mix_toward_constant(m, hi);
  const double e = budget(out);
  return {std::move(out), hi, e};
}

struct InfoRun {
  NetworkMapping mapping;
  std::vector<double> trace;
  bool converged = false;
  double objective = kInf;
  PrivacyRiskProfile profile;
  std::vector<std::string> notes;
  // Best audited iterate.
  NetworkMapping best;
  double best_error = kInf;
  double best_weight = 0.0;
  double best_eps = 0.0;
};

inline std::vector<double> min_risks(const PushedModel& pushed) {
  const auto pyg = conditional_given_g(pushed);
  std::vector<double> r(pushed.g_count(), 0.5);
  for (std::size_t g = 1; g < pushed.g_count(); ++g) {
    r[g] = min_risk_detector(pyg, pushed.z_count(), g).risk;
  }
  return r;
}

inline InfoRun info_gauss_seidel(const JointModel& model,
                                 NetworkMapping mapping, double eps_I,
                                 const OptimizerConfig& cfg, Rng& rng) {
  InfoRun run{mapping, {}, false, kInf, {}, {}, mapping, kInf, 0.0, 0.0};
  auto track = [&](const NetworkMapping& m) {
    auto rep = repair_to_budget(model, m, eps_I);
    const double err = bayes_error_H(push_forward(model, rep.mapping));
    if (err < run.best_error - 1e-15) {
      run.best = std::move(rep.mapping);
      run.best_error = err;
      run.best_weight = rep.weight;
      run.best_eps = rep.eps_info;
    }
  };
  track(mapping);
  const std::size_t ny = mapping.z_size();
  const std::size_t gc = model.g_count();
  for (std::size_t it = 0; it < cfg.max_outer_iters; ++it) {
    const NetworkMapping before = run.mapping;
    const PushedModel pushed = push_forward(model, run.mapping);
    const FusionRule rule = optimal_fusion_rule(pushed);
    const double th = theta(eps_I, compute_c_G(pushed));
    for (std::size_t t = 0; t < model.s(); ++t) {
      const PartialPush part = partial_push(model, run.mapping, t);
      const auto coeffs = utility_coefficients(part, rule, ny);
      std::vector<SensorChannel> phis;
      for (auto& m : candidate_maps(model.x_size(), ny, cfg.phi_cap, rng)) {
        phis.push_back(SensorChannel::deterministic(m, ny));
      }
      phis.push_back(run.mapping.channel(t));

      LinearProgram lp;
      std::vector<std::vector<double>> risk_rows(gc, std::vector<double>());
      for (const auto& phi : phis) {
        lp.objective.push_back(step_objective(coeffs, phi));
        const auto r = min_risks(complete(part, phi));
        for (std::size_t g = 1; g < gc; ++g) risk_rows[g].push_back(r[g]);
      }
      const std::size_t n = phis.size();
      for (std::size_t g = 1; g < gc; ++g) {
        lp.add(risk_rows[g], Sense::kGe, th);
      }
      lp.add(std::vector<double>(n, 1.0), Sense::kEq, 1.0);
      auto res = solve_lp(lp, cfg.lp_tol);
      if (!res.ok()) {
        // Most private mixture instead: maximize the worst-case risk.
        std::size_t blocking = 1;
        double worst = kInf;
        for (std::size_t g = 1; g < gc; ++g) {
          const double m =
              *std::max_element(risk_rows[g].begin(), risk_rows[g].end());
          if (m < worst) {
            worst = m;
            blocking = g;
          }
        }
        run.notes.push_back("sweep " + std::to_string(it) + " sensor " +
                            std::to_string(t) + ": theta " +
                            format_double(th) + " infeasible, blocking g=" +
                            std::to_string(blocking));
        LinearProgram mm;
        mm.objective.assign(n + 1, 0.0);
        mm.objective[n] = -1.0;
        for (std::size_t g = 1; g < gc; ++g) {
          auto row = risk_rows[g];
          row.push_back(-1.0);
          mm.add(std::move(row), Sense::kGe, 0.0);
        }
        std::vector<double> simplex(n, 1.0);
        simplex.push_back(0.0);
        mm.add(std::move(simplex), Sense::kEq, 1.0);
        std::vector<double> cap(n, 0.0);
        cap.push_back(1.0);
        mm.add(std::move(cap), Sense::kLe, 1.0);
        res = solve_lp(mm, cfg.lp_tol);
        if (!res.ok()) throw InfeasibleError("information stage fallback LP");
        res.x.resize(n);
      }
      std::vector<double> rows(model.x_size() * ny, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        if (res.x[k] <= 0.0) continue;
        const auto& pr = phis[k].rows();
        for (std::size_t i = 0; i < rows.size(); ++i) {
          rows[i] += res.x[k] * pr[i];
        }
      }
      auto next = SensorChannel::from_solver(model.x_size(), ny, rows);
      bool incumbent_ok = true;
      for (std::size_t g = 1; g < gc; ++g) {
        incumbent_ok = incumbent_ok && risk_rows[g][n - 1] >= th - cfg.lp_tol;
      }
      if (incumbent_ok && lp.objective[n - 1] <=
                              step_objective(coeffs, next) + cfg.lp_tol) {
        continue;
      }
      run.mapping = run.mapping.with_channel(t, std::move(next));
    }
    const PushedModel after = push_forward(model, run.mapping);
    run.objective = bayes_error_H(after);
    run.trace.push_back(run.objective);
    track(run.mapping);
    if (run.mapping.l1_distance(before) < cfg.convergence_tol) {
      run.converged = true;
      break;
    }
  }
  run.profile = risk_profile(push_forward(model, run.best), eps_I);
  return run;
}

}  // namespace detail

struct InfoStageResult {
  NetworkMapping mapping;
  PrivacyRiskProfile profile;
  std::vector<double> trace;
  bool converged = false;
  double repair_weight = 0.0;
  double eps_info = 0.0;  // audited on the stage output
  std::vector<std::string> notes;
};

/// Information-privacy stage X -> Y (|Y| = out_size). The risk threshold
/// drives the sweeps; every sweep's iterate is then audited exactly and, if
/// its information budget exceeds eps_I, mixed toward the uniform constant
/// channel until it passes. The best audited iterate is returned.
inline InfoStageResult design_info_stage(const JointModel& model, double eps_I,
                                         const OptimizerConfig& cfg,
                                         std::size_t out_size) {
  cfg.validate();
  if (!(eps_I > 0.0)) throw InvalidArgument("eps_I must be > 0");
  Rng rng(derive_seed(cfg.seed, 0x1F0));
  std::vector<NetworkMapping> starts;
  // Start 0 is the all-constant mapping, which satisfies every risk bound.
  starts.push_back(NetworkMapping::replicate(
      model.s(), SensorChannel::constant(
                     model.x_size(),
                     std::vector<double>(out_size, 1.0 /
                                                       static_cast<double>(
                                                           out_size)))));
  for (std::size_t r = 1; r < std::max<std::size_t>(cfg.restarts, 1); ++r) {
    // Random starts are pulled halfway toward the constant channel so the
    // first risk LPs are rarely infeasible.
    starts.push_back(detail::mix_toward_constant(
        random_mapping(derive_seed(cfg.seed, 100 + r), model.s(),
                       model.x_size(), out_size),
        0.5));
  }

  std::optional<InfoStageResult> best;
  for (auto& st : starts) {
    auto run = detail::info_gauss_seidel(model, std::move(st), eps_I, cfg, rng);
    if (best && run.best_error >=
                    bayes_error_H(push_forward(model, best->mapping)) - 1e-15) {
      continue;
    }
    InfoStageResult r{run.best,        run.profile,    run.trace,
                      run.converged,   run.best_weight, run.best_eps,
                      run.notes};
    if (run.best_weight > 0.0) {
      r.notes.push_back("audit repair weight " +
                        format_double(run.best_weight));
    }
    best = std::move(r);
  }
  return std::move(*best);
}

inline DesignResult design_inp(const JointModel& model,
                               const OptimizerConfig& cfg) {
  auto st = design_info_stage(model, cfg.eps_I, cfg, cfg.z_size);
  DesignResult r{"inp", st.mapping, std::nullopt, {}, st.trace, {}, 0.0, 0.0,
                 st.converged, st.profile, st.repair_weight, false, {}};
  r.notes = st.notes;
  finalize(r, model);
  return r;
}

namespace detail {

inline bool audit_two_stage(const JointModel& model, const TwoStageMapping& ts,
                            const OptimizerConfig& cfg) {
  const auto composed = compose(ts);
  if (ldp_budget(composed) > cfg.eps_LD + 1e-9) return false;
  return info_privacy_budget(push_forward(model, composed)) <= cfg.eps_I + 1e-9;
}

inline void consider_incumbent(DesignResult& r, const JointModel& model,
                               const OptimizerConfig& cfg) {
  if (!cfg.incumbent) return;
  const auto& inc = *cfg.incumbent;
  if (inc.arch != (r.arch == "ill" ? Architecture::kIll : Architecture::kLip)) {
    return;
  }
  try {
    inc.validate();
    if (inc.stage1.size() != model.s() ||
        inc.stage1.x_size() != model.x_size() ||
        inc.stage2.z_size() != r.mapping.z_size()) {
      return;
    }
    if (!audit_two_stage(model, inc, cfg)) return;
    const auto composed = compose(inc);
    const double err = bayes_error_H(push_forward(model, composed));
    if (err < r.bayes_error_H - 1e-12) {
      r.mapping = composed;
      r.two_stage = inc;
      r.from_incumbent = true;
      finalize(r, model);
    }
  } catch (const Error&) {
    // An incompatible incumbent is ignored.
  }
}

}  // namespace detail

/// ILL: information stage X -> Y at eps_I, then LDP stage Y -> Z at eps_LD/2.
inline DesignResult design_ill(const JointModel& model,
                               const OptimizerConfig& cfg) {
  cfg.validate();
  const auto st1 =
      design_info_stage(model, cfg.eps_I, cfg, cfg.intermediate_size());
  const JointModel y_model = push_model(model, st1.mapping);
  OptimizerConfig c2 = cfg;
  c2.warm_starts.clear();
  if (cfg.incumbent && cfg.incumbent->arch == Architecture::kIll &&
      cfg.incumbent->stage1 == st1.mapping) {
    c2.warm_starts.push_back(cfg.incumbent->stage2);
  }
  auto st2 = design_ldp_at(y_model, c2, cfg.eps_LD / 2.0, cfg.z_size);
  TwoStageMapping ts{st1.mapping, st2.mapping, Architecture::kIll};
  DesignResult r{"ill", compose(ts), ts, {}, st2.trace, {}, 0.0, 0.0,
                 st1.converged && st2.converged, st1.profile,
                 st1.repair_weight, false, {}};
  r.notes = st1.notes;
  finalize(r, model);
  detail::consider_incumbent(r, model, cfg);
  return r;
}

/// LIP: LDP stage X -> Y at eps_LD, then information stage Y -> Z at eps_I.
inline DesignResult design_lip(const JointModel& model,
                               const OptimizerConfig& cfg) {
  cfg.validate();
  OptimizerConfig c1 = cfg;
  c1.warm_starts.clear();
  if (cfg.incumbent && cfg.incumbent->arch == Architecture::kLip) {
    c1.warm_starts.push_back(cfg.incumbent->stage1);
  }
  auto st1 = design_ldp_at(model, c1, cfg.eps_LD, cfg.intermediate_size());
  const JointModel y_model = push_model(model, st1.mapping);
  NetworkMapping stage2 = NetworkMapping::replicate(
      model.s(), SensorChannel::identity(cfg.intermediate_size()));
  std::optional<PrivacyRiskProfile> profile;
  double repair = 0.0;
  bool converged = st1.converged;
  std::vector<std::string> notes;
  if (std::isinf(cfg.eps_I) && cfg.intermediate_size() == cfg.z_size) {
    // No information constraint: pass Y through.
  } else {
    auto st2 = design_info_stage(y_model, cfg.eps_I, cfg, cfg.z_size);
    stage2 = st2.mapping;
    profile = st2.profile;
    repair = st2.repair_weight;
    converged = converged && st2.converged;
    notes = st2.notes;
  }
  TwoStageMapping ts{st1.mapping, stage2, Architecture::kLip};
  DesignResult r{"lip", compose(ts), ts, {}, st1.trace, {}, 0.0, 0.0,
                 converged, profile, repair, false, {}};
  r.notes = notes;
  finalize(r, model);
  detail::consider_incumbent(r, model, cfg);
  return r;
}

inline DesignResult design_identity(const JointModel& model) {
  DesignResult r{"identity",
                 NetworkMapping::replicate(
                     model.s(), SensorChannel::identity(model.x_size())),
                 std::nullopt, {}, {}, {}, 0.0, 0.0, true, std::nullopt, 0.0, false, {}};
  finalize(r, model);
  return r;
}

}  // namespace privdet
