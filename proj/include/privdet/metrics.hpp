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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/model.hpp"

namespace privdet {

// Largest |X|^s for which identifiability and delta_x are enumerated.
inline constexpr std::size_t kIdentifiabilityCap = std::size_t{1} << 20;

inline double ldp_budget(const SensorChannel& ch) {
  double best = 0.0;
  for (std::size_t z = 0; z < ch.z_size(); ++z) {
    for (std::size_t a = 0; a < ch.x_size(); ++a) {
      for (std::size_t b = 0; b < ch.x_size(); ++b) {
        if (a != b) best = fold_max(best, log_ratio(ch(a, z), ch(b, z)));
      }
    }
  }
  return best;
}

inline double ldp_budget(const NetworkMapping& mapping) {
  double best = 0.0;
  for (const auto& ch : mapping.channels()) best = std::max(best, ldp_budget(ch));
  return best;
}

namespace detail {

inline std::vector<double> mix_uniform(const std::vector<double>& rows,
                                       std::size_t nz, double beta) {
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out[k] = (1.0 - beta) * rows[k] + beta / static_cast<double>(nz);
  }
  return out;
}

inline double rows_ldp(const std::vector<double>& rows, std::size_t nx,
                       std::size_t nz) {
  return ldp_budget(SensorChannel::from_solver(nx, nz, rows));
}

}  // namespace detail

// Smallest mixing weight toward the uniform channel meeting the budget.
inline std::vector<double> enforce_ldp(const std::vector<double>& rows,
                                       std::size_t nx, std::size_t nz,
                                       double eps) {
  if (std::isinf(eps) || detail::rows_ldp(rows, nx, nz) <= eps) return rows;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (detail::rows_ldp(detail::mix_uniform(rows, nz, mid), nx, nz) <= eps ? hi : lo) = mid;
  }
  return detail::mix_uniform(rows, nz, hi);
}

inline SensorChannel enforce_ldp(const SensorChannel& ch, double eps) {
  return SensorChannel::from_solver(
      ch.x_size(), ch.z_size(),
      enforce_ldp(ch.rows(), ch.x_size(), ch.z_size(), eps));
}

/// Mutual information in nats of a joint table laid out [a][b].
inline double mutual_information(const std::vector<double>& joint,
                                 std::size_t na, std::size_t nb) {
  if (joint.size() != na * nb) throw DimensionError("joint table size");
  std::vector<double> pa(na, 0.0), pb(nb, 0.0);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      pa[a] += joint[a * nb + b];
      pb[b] += joint[a * nb + b];
    }
  }
  double mi = 0.0;
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      mi += xlogy_ratio(joint[a * nb + b], pa[a] * pb[b]);
    }
  }
  return std::max(0.0, mi);
}

/// I(A;B) where A and B are disjoint groups of axes of `table`.
inline double mutual_information(const Table& table,
                                 const std::vector<std::size_t>& a_axes,
                                 const std::vector<std::size_t>& b_axes) {
  std::vector<std::size_t> keep = a_axes;
  keep.insert(keep.end(), b_axes.begin(), b_axes.end());
  const Table m = table.marginal(keep);
  std::size_t na = 1;
  for (std::size_t i = 0; i < a_axes.size(); ++i) na *= m.dims()[i];
  return mutual_information(m.data(), na, m.data().size() / na);
}

inline double mutual_information(const PushedModel& pushed,
                                 const std::vector<Variable>& a,
                                 const std::vector<Variable>& b) {
  std::vector<std::size_t> aa, bb;
  for (const auto& v : a) aa.push_back(detail::axis_of(v, pushed.s()));
  for (const auto& v : b) bb.push_back(detail::axis_of(v, pushed.s()));
  return mutual_information(pushed.table(), aa, bb);
}

inline double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

/// max over g and z with p_Z(z) > 0 of |log p(g|z) / p(g)|.
inline double info_privacy_budget(const PushedModel& pushed) {
  const auto pgz = pushed.p_gz();
  const auto pg = pushed.p_g();
  const auto pz = pushed.p_z();
  const std::size_t nz = pushed.z_count();
  double best = 0.0;
  for (std::size_t z = 0; z < nz; ++z) {
    if (pz[z] <= 0.0) continue;
    for (std::size_t g = 0; g < pushed.g_count(); ++g) {
      best = fold_max(best,
                      std::abs(log_ratio(pgz[g * nz + z], pg[g] * pz[z])));
    }
  }
  return best;
}

/// max over neighboring g, g' and z of log p(z|g) / p(z|g').
inline double inference_dp_budget(const PushedModel& pushed) {
  const auto pgz = pushed.p_gz();
  const auto pg = pushed.p_g();
  const std::size_t nz = pushed.z_count();
  double best = 0.0;
  for (std::size_t g = 0; g < pushed.g_count(); ++g) {
    if (pg[g] <= 0.0) continue;
    for (std::size_t j = 0; j < pushed.q(); ++j) {
      const std::size_t g2 = g ^ (std::size_t{1} << j);
      if (pg[g2] <= 0.0) continue;
      for (std::size_t z = 0; z < nz; ++z) {
        best = fold_max(best, log_ratio(pgz[g * nz + z] / pg[g],
                                        pgz[g2 * nz + z] / pg[g2]));
      }
    }
  }
  return best;
}

/// I(G;Z).
inline double avg_info_leakage(const PushedModel& pushed) {
  return mutual_information(pushed.p_gz(), pushed.g_count(), pushed.z_count());
}

inline double mutual_info_hz(const PushedModel& pushed) {
  return mutual_information(pushed.p_hz(), 2, pushed.z_count());
}

/// p_{X_t} of one sensor.
inline std::vector<double> sensor_marginal(const JointModel& model,
                                           std::size_t t) {
  const auto c = model.sensor_conditional(t);
  std::vector<double> out(model.x_size(), 0.0);
  for (std::size_t k = 0; k < model.hg_count(); ++k) {
    for (std::size_t x = 0; x < model.x_size(); ++x) {
      out[x] += model.prior(k) * c[k * model.x_size() + x];
    }
  }
  return out;
}

/// I(X_t; Z_t) for one sensor.
inline double sensor_mutual_information(const JointModel& model,
                                        const NetworkMapping& mapping,
                                        std::size_t t) {
  const auto px = sensor_marginal(model, t);
  const auto& ch = mapping.channel(t);
  std::vector<double> joint(ch.x_size() * ch.z_size());
  for (std::size_t x = 0; x < ch.x_size(); ++x) {
    for (std::size_t z = 0; z < ch.z_size(); ++z) {
      joint[x * ch.z_size() + z] = px[x] * ch(x, z);
    }
  }
  return mutual_information(joint, ch.x_size(), ch.z_size());
}

/// I(X;Z) = H(Z) - sum_t sum_{x_t} p(x_t) H(p_t(.|x_t)). Exact for product
/// channels, and never enumerates X^s.
inline double mutual_info_privacy_budget(const JointModel& model,
                                         const NetworkMapping& mapping,
                                         const PushedModel& pushed) {
  double cond = 0.0;
  for (std::size_t t = 0; t < model.s(); ++t) {
    const auto px = sensor_marginal(model, t);
    const auto& ch = mapping.channel(t);
    for (std::size_t x = 0; x < ch.x_size(); ++x) {
      if (px[x] <= 0.0) continue;
      std::vector<double> row(ch.row(x).begin(), ch.row(x).end());
      cond += px[x] * entropy(row);
    }
  }
  return std::max(0.0, entropy(pushed.p_z()) - cond);
}

inline double mutual_info_privacy_budget(const JointModel& model,
                                         const NetworkMapping& mapping) {
  return mutual_info_privacy_budget(model, mapping,
                                    push_forward(model, mapping));
}

/// max over neighboring x, x' of log p_X(x) / p_X(x'). Needs |X|^s <= cap.
inline double delta_x(const JointModel& model,
                      std::size_t cap = kIdentifiabilityCap) {
  const VectorIndex xi(model.x_size(), model.s(), cap);
  const auto px = model.p_x(cap * model.hg_count());
  double best = 0.0;
  for (std::size_t x = 0; x < xi.count(); ++x) {
    for (std::size_t t = 0; t < model.s(); ++t) {
      for (std::size_t v = 0; v < model.x_size(); ++v) {
        if (v == xi.digit(x, t)) continue;
        best = fold_max(best, log_ratio(px[x], px[xi.with_digit(x, t, v)]));
      }
    }
  }
  return best;
}

/// max over neighboring x, x' and z of log p(x|z) / p(x'|z). For neighbors
/// differing at sensor t the ratio reduces to
/// p_t(z_t|x_t) p(x) / (p_t(z_t|x'_t) p(x')), so only z_t is scanned.
inline double identifiability_budget(const JointModel& model,
                                     const NetworkMapping& mapping,
                                     std::size_t cap = kIdentifiabilityCap) {
  detail::check_mapping_fits(model, mapping);
  const VectorIndex xi(model.x_size(), model.s(), cap);
  const auto px = model.p_x(cap * model.hg_count());
  double best = 0.0;
  for (std::size_t x = 0; x < xi.count(); ++x) {
    for (std::size_t t = 0; t < model.s(); ++t) {
      const auto& ch = mapping.channel(t);
      const std::size_t a = xi.digit(x, t);
      for (std::size_t b = 0; b < model.x_size(); ++b) {
        if (b == a) continue;
        const double pb = px[xi.with_digit(x, t, b)];
        for (std::size_t z = 0; z < ch.z_size(); ++z) {
          best = fold_max(best, log_ratio(ch(a, z) * px[x], ch(b, z) * pb));
        }
      }
    }
  }
  return best;
}

struct BudgetReport {
  double eps_info = 0.0;
  double eps_inference_dp = 0.0;
  double eps_avg_leakage = 0.0;
  double eps_ldp = 0.0;
  double eps_mutual_info = 0.0;
  // Absent when |X|^s exceeds the enumeration cap.
  std::optional<double> eps_identifiability;
  std::optional<double> delta_x;
};

inline BudgetReport full_report(const JointModel& model,
                                const NetworkMapping& mapping,
                                std::size_t cap = kIdentifiabilityCap) {
  const PushedModel pushed = push_forward(model, mapping);
  BudgetReport r;
  r.eps_info = info_privacy_budget(pushed);
  r.eps_inference_dp = inference_dp_budget(pushed);
  r.eps_avg_leakage = avg_info_leakage(pushed);
  r.eps_ldp = ldp_budget(mapping);
  r.eps_mutual_info = mutual_info_privacy_budget(model, mapping, pushed);
  std::size_t n = 1;
  bool small = true;
  for (std::size_t t = 0; t < model.s() && small; ++t) {
    if (n > cap / model.x_size()) small = false;
    n *= model.x_size();
  }
  if (small) {
    r.eps_identifiability = identifiability_budget(model, mapping, cap);
    r.delta_x = delta_x(model, cap);
  }
  return r;
}

struct EmpiricalBudgets {
  double eps_info = 0.0;
  double eps_ldp = 0.0;
};

/// Plug-in estimates from observed (g, z) index pairs. The LDP estimate uses
/// the known channels.
inline EmpiricalBudgets empirical_budgets(
    const std::vector<std::pair<std::size_t, std::size_t>>& samples,
    const NetworkMapping& mapping) {
  if (samples.empty()) throw InvalidArgument("empty sample set");
  std::map<std::pair<std::size_t, std::size_t>, double> n_gz;
  std::map<std::size_t, double> n_g, n_z;
  for (const auto& s : samples) {
    n_gz[s] += 1.0;
    n_g[s.first] += 1.0;
    n_z[s.second] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  EmpiricalBudgets out;
  for (const auto& [gz, c] : n_gz) {
    out.eps_info = std::max(
        out.eps_info,
        std::abs(std::log(c * n / (n_g[gz.first] * n_z[gz.second]))));
  }
  out.eps_ldp = ldp_budget(mapping);
  return out;
}

/// Draws n samples of (g, z) from a pushed model.
inline std::vector<std::pair<std::size_t, std::size_t>> sample_gz(
    const PushedModel& pushed, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const auto& d = pushed.data();
  std::vector<double> cdf(d.size());
  std::partial_sum(d.begin(), d.end(), cdf.begin());
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= d.size()) k = d.size() - 1;
    const std::size_t hg = k / pushed.z_count();
    out.emplace_back(hg % pushed.g_count(), k % pushed.z_count());
  }
  return out;
}

}  // namespace privdet
