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

// Numerical evidence for the implications between privacy metrics:
// counterexample sequences for the non-guarantees and a randomized checker
// for the quantitative bounds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/metrics.hpp"
#include "privdet/model.hpp"

namespace privdet {

inline const std::vector<double>& default_alphas() {
  static const std::vector<double> a{1e-1, 1e-2, 1e-3, 1e-4,
                                     1e-5, 1e-6, 1e-7, 1e-8};
  return a;
}

/// Joint table [u][v]: alpha at (0,0), zero elsewhere in row 0 and column 0,
/// the remaining block uniform.
inline std::vector<double> corner_joint(double alpha, std::size_t nu,
                                          std::size_t nv) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1)");
  }
  if (nu < 2 || nv < 2) throw InvalidArgument("alphabets need >= 2 symbols");
  std::vector<double> p(nu * nv, 0.0);
  p[0] = alpha;
  const double rest =
      (1.0 - alpha) / static_cast<double>((nu - 1) * (nv - 1));
  for (std::size_t u = 1; u < nu; ++u) {
    for (std::size_t v = 1; v < nv; ++v) p[u * nv + v] = rest;
  }
  return p;
}

// The channel of the same table read as p(v|u): 0 -> 0, else uniform on the
// nonzero symbols.
inline SensorChannel corner_channel(std::size_t n) {
  std::vector<double> rows(n * n, 0.0);
  rows[0] = 1.0;
  for (std::size_t u = 1; u < n; ++u) {
    for (std::size_t v = 1; v < n; ++v) {
      rows[u * n + v] = 1.0 / static_cast<double>(n - 1);
    }
  }
  return SensorChannel(n, n, std::move(rows), kArithTol);
}

inline double binary_entropy(double a) {
  double h = 0.0;
  if (a > 0.0) h -= a * std::log(a);
  if (a < 1.0) h -= (1.0 - a) * std::log1p(-a);
  return h;
}

struct WitnessPoint {
  double param = 0.0;
  double eps_a = 0.0;
  double eps_b = 0.0;
};

struct ImplicationWitness {
  std::string metric_a;
  std::string metric_b;
  std::vector<WitnessPoint> points;
  std::string verdict;
  std::string note;
};

inline constexpr const char* kNonGuarantee = "non-guarantee-witnessed";
inline constexpr const char* kBoundHolds = "implies-bound-holds";

// eps_a strictly decreasing and vanishing (last/first < 1e-3, or a single
// point at zero) while eps_b stays above 0.5 throughout.
inline std::string judge(const std::vector<WitnessPoint>& pts) {
  if (pts.empty()) return "empty";
  bool decreasing = true;
  double min_b = kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && !(pts[i].eps_a < pts[i - 1].eps_a)) decreasing = false;
    min_b = std::min(min_b, pts[i].eps_b);
  }
  const bool vanishing = pts.size() == 1
                             ? pts[0].eps_a <= kArithTol
                             : pts.back().eps_a < 1e-3 * pts.front().eps_a;
  if ((decreasing || pts.size() == 1) && vanishing && min_b > 0.5) {
    return kNonGuarantee;
  }
  return "inconclusive";
}

namespace detail {

// A pushed model over (H, G, Z) with H uniform and independent of (G, Z).
inline PushedModel pushed_from_gz(const std::vector<double>& p_gz,
                                  std::size_t q, std::size_t nz) {
  std::vector<double> data;
  data.reserve(2 * p_gz.size());
  for (int h = 0; h < 2; ++h) {
    for (double v : p_gz) data.push_back(0.5 * v);
  }
  return PushedModel(1, nz, q, std::move(data));
}

// A one-sensor model whose single observation ranges over `n` symbols,
// with H uniform and independent of (G, X). rows: p(x|g) laid out [g][x].
inline JointModel model_from_gx(std::size_t q, std::size_t n,
                                const std::vector<double>& p_g,
                                const std::vector<double>& rows) {
  const std::size_t gc = std::size_t{1} << q;
  std::vector<double> prior, cond;
  for (int h = 0; h < 2; ++h) {
    for (std::size_t g = 0; g < gc; ++g) {
      prior.push_back(0.5 * p_g[g]);
      cond.insert(cond.end(), rows.begin() + g * n, rows.begin() + (g + 1) * n);
    }
  }
  return JointModel::cond_indep(q, n, std::move(prior), {std::move(cond)},
                                kArithTol);
}

}  // namespace detail

/// G plays U and Z plays V: I(G;Z) vanishes while the information budget is
/// at least log(1/alpha).
inline ImplicationWitness witness_ai_not_info(
    const std::vector<double>& alphas = default_alphas(), std::size_t nz = 2) {
  ImplicationWitness w{"avg_leakage", "info", {}, "", ""};
  for (double a : alphas) {
    const auto pushed = detail::pushed_from_gz(corner_joint(a, 2, nz), 1, nz);
    w.points.push_back({a, avg_info_leakage(pushed), info_privacy_budget(pushed)});
  }
  w.verdict = judge(w.points);
  return w;
}

/// Same construction against inference differential privacy.
inline ImplicationWitness witness_ai_not_idp(
    const std::vector<double>& alphas = default_alphas(), std::size_t nz = 2) {
  ImplicationWitness w{"avg_leakage", "inference_dp", {}, "", ""};
  for (double a : alphas) {
    const auto pushed = detail::pushed_from_gz(corner_joint(a, 2, nz), 1, nz);
    w.points.push_back({a, avg_info_leakage(pushed), inference_dp_budget(pushed)});
  }
  w.verdict = judge(w.points);
  return w;
}

/// p_{Z|G}(0|g0) / p_Z(0) for the direct construction: p(x=0|g0) = alpha,
/// every other g uniform on the N = |X|^s vectors, G uniform, Example-1
/// channel. Measured on the constructed joint.
inline double mi_not_info_literal_ratio(double alpha, std::size_t n_vectors,
                                        std::size_t g_count) {
  const std::size_t n = n_vectors;
  std::size_t q = 0;
  while ((std::size_t{1} << q) < g_count) ++q;
  if ((std::size_t{1} << q) != g_count || q == 0) {
    throw InvalidArgument("|G| must be a power of two >= 2");
  }
  std::vector<double> rows(g_count * n, 1.0 / static_cast<double>(n));
  rows[0] = alpha;
  for (std::size_t x = 1; x < n; ++x) {
    rows[x] = (1.0 - alpha) / static_cast<double>(n - 1);
  }
  const auto model = detail::model_from_gx(
      q, n, std::vector<double>(g_count, 1.0 / static_cast<double>(g_count)),
      rows);
  const auto pushed =
      push_forward(model, NetworkMapping({corner_channel(n)}));
  const auto pgz = pushed.p_gz();
  const auto pz = pushed.p_z();
  const auto pg = pushed.p_g();
  return (pgz[0] / pg[0]) / pz[0];
}

/// X plays U and Z plays V. The G rows are chosen so that p_X(0) = alpha
/// exactly: p(x=0|g0) = alpha^2 and p(x=0|g) = (|G| alpha - alpha^2)/(|G|-1)
/// otherwise, with G uniform and the remaining mass uniform. Then
/// I(X;Z) = h(alpha) and p_{Z|G}(0|g0)/p_Z(0) = alpha.
inline ImplicationWitness witness_mi_not_info(
    const std::vector<double>& alphas = default_alphas(),
    std::size_t x_size = 2, std::size_t s = 2, std::size_t g_count = 2) {
  const std::size_t n = checked_pow(x_size, s, std::size_t{1} << 16);
  std::size_t q = 0;
  while ((std::size_t{1} << q) < g_count) ++q;
  if ((std::size_t{1} << q) != g_count || q == 0 || n < 2) {
    throw InvalidArgument("need |G| a power of two >= 2 and |X|^s >= 2");
  }
  const double gc = static_cast<double>(g_count);
  ImplicationWitness w{"mutual_info", "info", {}, "", ""};
  for (double a : alphas) {
    std::vector<double> rows(g_count * n);
    for (std::size_t g = 0; g < g_count; ++g) {
      const double p0 = g == 0 ? a * a : (gc * a - a * a) / (gc - 1.0);
      rows[g * n] = p0;
      for (std::size_t x = 1; x < n; ++x) {
        rows[g * n + x] = (1.0 - p0) / static_cast<double>(n - 1);
      }
    }
    const auto model =
        detail::model_from_gx(q, n, std::vector<double>(g_count, 1.0 / gc), rows);
    const NetworkMapping mapping({corner_channel(n)});
    const auto pushed = push_forward(model, mapping);
    w.points.push_back({a, mutual_info_privacy_budget(model, mapping, pushed),
                        info_privacy_budget(pushed)});
  }
  w.verdict = judge(w.points);
  w.note = "direct construction ratio at alpha=0.1: " +
           format_double(mi_not_info_literal_ratio(0.1, n, g_count));
  return w;
}

/// Uniform p_{X|G} with the identity channel: information budget 0, LDP
/// budget +inf, I(X;Z) = s log|X|.
inline ImplicationWitness witness_info_not_ldp(std::size_t s = 2,
                                               std::size_t x_size = 3,
                                               std::size_t q = 1) {
  const HypothesisSpace hs(q);
  std::vector<double> prior(hs.hg_count(), 1.0 / hs.hg_count());
  std::vector<std::vector<double>> cond(
      s, std::vector<double>(hs.hg_count() * x_size,
                             1.0 / static_cast<double>(x_size)));
  const auto model = JointModel::cond_indep(q, x_size, prior, cond, kArithTol);
  const auto mapping =
      NetworkMapping::replicate(s, SensorChannel::identity(x_size));
  const auto pushed = push_forward(model, mapping);
  ImplicationWitness w{"info", "ldp", {}, "", ""};
  w.points.push_back({0.0, info_privacy_budget(pushed), ldp_budget(mapping)});
  w.verdict = judge(w.points);
  w.note = "I(X;Z) = " +
           format_double(mutual_info_privacy_budget(model, mapping, pushed));
  return w;
}

/// The same instance read against mutual information privacy.
inline ImplicationWitness witness_info_not_mi(std::size_t s = 2,
                                              std::size_t x_size = 3,
                                              std::size_t q = 1) {
  const HypothesisSpace hs(q);
  std::vector<double> prior(hs.hg_count(), 1.0 / hs.hg_count());
  std::vector<std::vector<double>> cond(
      s, std::vector<double>(hs.hg_count() * x_size,
                             1.0 / static_cast<double>(x_size)));
  const auto model = JointModel::cond_indep(q, x_size, prior, cond, kArithTol);
  const auto mapping =
      NetworkMapping::replicate(s, SensorChannel::identity(x_size));
  const auto pushed = push_forward(model, mapping);
  ImplicationWitness w{"info", "mutual_info", {}, "", ""};
  w.points.push_back({0.0, info_privacy_budget(pushed),
                      mutual_info_privacy_budget(model, mapping, pushed)});
  w.verdict = judge(w.points);
  return w;
}

/// The corner joint as the sensor law and channel (one sensor): I(X;Z) = h(alpha)
/// vanishes while the LDP budget is +inf.
inline ImplicationWitness witness_mi_not_ldp(
    const std::vector<double>& alphas = default_alphas(),
    std::size_t x_size = 3) {
  ImplicationWitness w{"mutual_info", "ldp", {}, "", ""};
  for (double a : alphas) {
    std::vector<double> px(x_size, (1.0 - a) / static_cast<double>(x_size - 1));
    px[0] = a;
    std::vector<double> rows;
    for (int g = 0; g < 2; ++g) rows.insert(rows.end(), px.begin(), px.end());
    const auto model = detail::model_from_gx(1, x_size, {0.5, 0.5}, rows);
    const NetworkMapping mapping({corner_channel(x_size)});
    w.points.push_back({a, mutual_info_privacy_budget(model, mapping),
                        ldp_budget(mapping)});
  }
  w.verdict = judge(w.points);
  return w;
}

/// Randomized response with budget 10^-i on a sensor with p_X = (0.8, 0.2):
/// the LDP budget vanishes while identifiability tends to delta_X = log 4.
inline ImplicationWitness witness_ldp_not_ident(std::size_t steps = 8) {
  const auto model =
      detail::model_from_gx(1, 2, {0.5, 0.5}, {0.8, 0.2, 0.8, 0.2});
  ImplicationWitness w{"ldp", "identifiability", {}, "", ""};
  for (std::size_t i = 1; i <= steps; ++i) {
    const double eps = std::pow(10.0, -static_cast<double>(i));
    const NetworkMapping mapping({randomized_response(2, eps)});
    w.points.push_back(
        {eps, ldp_budget(mapping), identifiability_budget(model, mapping)});
  }
  w.verdict = judge(w.points);
  w.note = "delta_X = " + format_double(delta_x(model));
  return w;
}

// ---------------------------------------------------------------------------
// Quantitative bounds.

struct BoundCheck {
  std::string id;
  std::string statement;
  double min_slack = kInf;
  std::size_t violations = 0;
};

struct BoundSuiteReport {
  std::size_t trials = 0;
  std::vector<BoundCheck> bounds;

  bool ok() const {
    for (const auto& b : bounds) {
      if (b.violations > 0) return false;
    }
    return true;
  }
};

// rhs - lhs, with +inf when the bound is vacuous.
inline double bound_slack(double lhs, double rhs) {
  if (std::isinf(rhs) && rhs > 0) return kInf;
  if (std::isinf(lhs)) return -kInf;
  return rhs - lhs;
}

/// A random instance for the bound suite: s <= 3, |X| <= 5, |Z| <= 3, q <= 2,
/// either model form, and channels pulled toward uniform by a random weight
/// so that small budgets occur.
struct BoundInstance {
  JointModel model;
  NetworkMapping mapping;
};

inline BoundInstance random_bound_instance(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t s = 1 + rng.below(3);
  const std::size_t nx = 2 + rng.below(4);
  const std::size_t nz = 2 + rng.below(2);
  const std::size_t q = 1 + rng.below(2);
  const auto form = rng.below(2) == 0 ? ModelForm::kCondIndep : ModelForm::kFull;
  auto model = random_model(rng.next(), s, nx, q, form);
  std::vector<SensorChannel> chans;
  const double pull = rng.uniform();
  for (std::size_t t = 0; t < s; ++t) {
    auto c = random_channel(rng, nx, nz);
    std::vector<double> rows(c.rows());
    for (auto& v : rows) {
      v = (1.0 - pull) * v + pull / static_cast<double>(nz);
    }
    chans.push_back(SensorChannel::from_solver(nx, nz, rows));
  }
  return {std::move(model), NetworkMapping(std::move(chans))};
}

inline BoundSuiteReport check_bound_suite(std::uint64_t seed,
                                          std::size_t trials) {
  if (trials == 0) throw InvalidArgument("trials must be >= 1");
  const double ln2 = std::log(2.0);
  BoundSuiteReport rep;
  rep.trials = trials;
  rep.bounds = {
      {"idp-info", "inference_dp <= 2 info"},
      {"leak-info", "avg_leakage <= info / log 2"},
      {"info-idp", "info <= q inference_dp"},
      {"leak-idp", "avg_leakage <= q inference_dp / log 2"},
      {"info-ldp", "info <= 2 s ldp"},
      {"leak-mi", "avg_leakage <= mutual_info"},
      {"mi-ldp", "mutual_info <= s ldp / log 2"},
      {"ident-ldp", "identifiability <= ldp + delta_X"},
      {"ldp-ident", "ldp <= identifiability + delta_X"},
  };
  for (std::size_t i = 0; i < trials; ++i) {
    const auto inst = random_bound_instance(derive_seed(seed, i));
    const auto r = full_report(inst.model, inst.mapping);
    const double q = static_cast<double>(inst.model.q());
    const double s = static_cast<double>(inst.model.s());
    const double ident = r.eps_identifiability.value_or(kInf);
    const double dx = r.delta_x.value_or(kInf);
    const double slack[9] = {
        bound_slack(r.eps_inference_dp, 2.0 * r.eps_info),
        bound_slack(r.eps_avg_leakage, r.eps_info / ln2),
        bound_slack(r.eps_info, q * r.eps_inference_dp),
        bound_slack(r.eps_avg_leakage, q * r.eps_inference_dp / ln2),
        bound_slack(r.eps_info, 2.0 * s * r.eps_ldp),
        bound_slack(r.eps_avg_leakage, r.eps_mutual_info),
        bound_slack(r.eps_mutual_info, s * r.eps_ldp / ln2),
        bound_slack(ident, r.eps_ldp + dx),
        bound_slack(r.eps_ldp, ident + dx),
    };
    for (std::size_t b = 0; b < 9; ++b) {
      rep.bounds[b].min_slack = std::min(rep.bounds[b].min_slack, slack[b]);
      if (slack[b] < -1e-9) ++rep.bounds[b].violations;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The relation table: one row per ordered metric pair.

struct RelationRow {
  std::string from;
  std::string to;
  std::string bound_constant;
  std::string verdict;
  std::string evidence;
};

inline std::string witness_params(const ImplicationWitness& w) {
  std::string s;
  for (const auto& p : w.points) {
    if (!s.empty()) s += ";";
    s += format_double(p.param) + ":" + format_double(p.eps_a) + ":" +
         format_double(p.eps_b);
  }
  if (!w.note.empty()) s += " (" + w.note + ")";
  return s;
}

inline std::vector<RelationRow> relation_table(std::uint64_t seed,
                                               std::size_t trials) {
  const auto suite = check_bound_suite(seed, trials);
  auto bound = [&](const std::string& id) {
    for (const auto& b : suite.bounds) {
      if (b.id == id) {
        return std::make_pair(
            std::string(b.violations == 0 ? kBoundHolds : "bound-violated"),
            "trials=" + std::to_string(suite.trials) +
                " min_slack=" + format_double(b.min_slack));
      }
    }
    return std::make_pair(std::string("unknown"), std::string());
  };
  std::vector<RelationRow> rows;
  auto add_bound = [&](std::string from, std::string to, const std::string& id,
                       std::string constant, std::string extra = "") {
    auto [verdict, ev] = bound(id);
    if (!extra.empty()) verdict += "; " + extra;
    rows.push_back({std::move(from), std::move(to), std::move(constant),
                    verdict, ev});
  };
  auto add_witness = [&](const ImplicationWitness& w) {
    rows.push_back({w.metric_a, w.metric_b, "none", w.verdict,
                    witness_params(w)});
  };

  add_bound("info", "inference_dp", "idp-info", "2");
  add_bound("info", "avg_leakage", "leak-info", "1/log2");
  add_bound("inference_dp", "info", "info-idp", "q",
            "q->inf non-guarantee: external, unverified");
  add_bound("inference_dp", "avg_leakage", "leak-idp", "q/log2",
            "q->inf non-guarantee: external, unverified");
  add_witness(witness_ai_not_info());
  add_witness(witness_ai_not_idp());
  add_bound("ldp", "info", "info-ldp", "2s");
  add_witness(witness_info_not_ldp());
  add_witness(witness_info_not_mi());
  add_witness(witness_mi_not_info());
  add_bound("mutual_info", "avg_leakage", "leak-mi", "1");
  add_bound("ldp", "mutual_info", "mi-ldp", "s/log2");
  add_witness(witness_mi_not_ldp());
  add_bound("ldp", "identifiability", "ident-ldp", "1 (+delta_X)");
  add_witness(witness_ldp_not_ident());
  add_bound("identifiability", "ldp", "ldp-ident", "1 (+delta_X)",
            "non-uniform non-guarantee: not witnessed");
  return rows;
}

}  // namespace privdet
