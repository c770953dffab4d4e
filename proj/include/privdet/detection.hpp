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
#include <cstdint>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/model.hpp"

namespace privdet {

/// Deterministic decision table over flat z-vector indices.
struct FusionRule {
  std::vector<std::uint8_t> decision;

  std::size_t size() const { return decision.size(); }
  std::uint8_t operator()(std::size_t z) const { return decision[z]; }

  static FusionRule constant(std::size_t n, std::uint8_t h) {
    return {std::vector<std::uint8_t>(n, h)};
  }
};

/// MAP rule for H; ties go to H = 0.
inline FusionRule optimal_fusion_rule(const PushedModel& pushed) {
  const auto phz = pushed.p_hz();
  const std::size_t nz = pushed.z_count();
  FusionRule rule{std::vector<std::uint8_t>(nz, 0)};
  for (std::size_t z = 0; z < nz; ++z) {
    rule.decision[z] = phz[nz + z] > phz[z] ? 1 : 0;
  }
  return rule;
}

inline FusionRule optimal_fusion_rule(const JointModel& model,
                                      const NetworkMapping& mapping) {
  return optimal_fusion_rule(push_forward(model, mapping));
}

inline double bayes_error_H(const PushedModel& pushed, const FusionRule& rule) {
  const std::size_t nz = pushed.z_count();
  if (rule.size() != nz) throw DimensionError("fusion rule size");
  const auto phz = pushed.p_hz();
  double err = 0.0;
  for (std::size_t z = 0; z < nz; ++z) {
    err += rule(z) == 1 ? phz[z] : phz[nz + z];
  }
  return err;
}

inline double bayes_error_H(const PushedModel& pushed) {
  return bayes_error_H(pushed, optimal_fusion_rule(pushed));
}

inline double bayes_error_H(const JointModel& model,
                            const NetworkMapping& mapping,
                            const FusionRule& rule) {
  return bayes_error_H(push_forward(model, mapping), rule);
}

/// MAP rule for G; ties go to the smallest g.
inline std::vector<std::size_t> map_rule_G(const PushedModel& pushed) {
  const auto pgz = pushed.p_gz();
  const std::size_t nz = pushed.z_count();
  std::vector<std::size_t> out(nz, 0);
  for (std::size_t z = 0; z < nz; ++z) {
    for (std::size_t g = 1; g < pushed.g_count(); ++g) {
      if (pgz[g * nz + z] > pgz[out[z] * nz + z]) out[z] = g;
    }
  }
  return out;
}

inline double bayes_error_G(const PushedModel& pushed) {
  const auto pgz = pushed.p_gz();
  const std::size_t nz = pushed.z_count();
  double hit = 0.0;
  for (std::size_t z = 0; z < nz; ++z) {
    double m = 0.0;
    for (std::size_t g = 0; g < pushed.g_count(); ++g) {
      m = std::max(m, pgz[g * nz + z]);
    }
    hit += m;
  }
  return std::max(0.0, 1.0 - hit);
}

inline double bayes_error_G(const JointModel& model,
                            const NetworkMapping& mapping) {
  return bayes_error_G(push_forward(model, mapping));
}

/// p(y | g) laid out [g][y]. Rows of zero-prior g are left at zero.
inline std::vector<double> conditional_given_g(const PushedModel& pushed) {
  auto out = pushed.p_gz();
  const auto pg = pushed.p_g();
  const std::size_t ny = pushed.z_count();
  for (std::size_t g = 0; g < pushed.g_count(); ++g) {
    for (std::size_t y = 0; y < ny; ++y) {
      out[g * ny + y] = pg[g] > 0.0 ? out[g * ny + y] / pg[g] : 0.0;
    }
  }
  return out;
}

struct MinRiskDetector {
  // 1 means "decide g", 0 means "decide 0".
  std::vector<std::uint8_t> decide_g;
  double risk = 0.5;
};

// Likelihood-ratio test l_g(y) >= 1 and its risk, from p(y|g) rows.
inline MinRiskDetector min_risk_detector(const std::vector<double>& p_y_given_g,
                                         std::size_t ny, std::size_t g) {
  if (g == 0) throw InvalidArgument("min_risk_detector needs g != 0");
  const double* p0 = p_y_given_g.data();
  const double* pg = p_y_given_g.data() + g * ny;
  double mass0 = 0.0;
  for (std::size_t y = 0; y < ny; ++y) mass0 += p0[y];
  if (mass0 <= 0.0) throw InvalidArgument("p(y|g=0) is identically zero");
  MinRiskDetector d{std::vector<std::uint8_t>(ny, 0), 0.0};
  double false_g = 0.0, miss = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    // l_g(y) >= 1, with 0/0 read as 1.
    const bool pick = pg[y] >= p0[y];
    d.decide_g[y] = pick ? 1 : 0;
    if (pick) {
      false_g += p0[y];
    } else {
      miss += pg[y];
    }
  }
  d.risk = 0.5 * (false_g + miss);
  return d;
}

inline MinRiskDetector min_risk_detector(const PushedModel& y_model,
                                         std::size_t g) {
  return min_risk_detector(conditional_given_g(y_model), y_model.z_count(), g);
}

inline MinRiskDetector min_risk_detector(const JointModel& model,
                                         const NetworkMapping& stage1,
                                         std::size_t g) {
  return min_risk_detector(push_forward(model, stage1), g);
}

/// Risk of an arbitrary detector, for audits.
inline double detector_risk(const std::vector<double>& p_y_given_g,
                            std::size_t ny, std::size_t g,
                            const std::vector<std::uint8_t>& decide_g) {
  double r = 0.0;
  for (std::size_t y = 0; y < ny; ++y) {
    r += decide_g[y] ? p_y_given_g[y] : p_y_given_g[g * ny + y];
  }
  return 0.5 * r;
}

inline double compute_c_G(const std::vector<double>& p_y_given_g,
                          std::size_t ny, std::size_t g_count) {
  constexpr double kTieTol = 1e-12;
  double c = 1.0;
  const double* p0 = p_y_given_g.data();
  for (std::size_t g = 1; g < g_count; ++g) {
    const double* pg = p_y_given_g.data() + g * ny;
    std::vector<double> ell(ny, kInf);
    double lo = kInf, hi = -kInf;
    bool any = false;
    for (std::size_t y = 0; y < ny; ++y) {
      if (p0[y] <= 0.0 && pg[y] <= 0.0) continue;
      ell[y] = p0[y] > 0.0 ? pg[y] / p0[y] : kInf;
      lo = std::min(lo, ell[y]);
      hi = std::max(hi, ell[y]);
      any = true;
    }
    if (!any) continue;
    auto tied = [&](double a, double b) {
      if (std::isinf(a) || std::isinf(b)) return a == b;
      return std::abs(a - b) <= kTieTol;
    };
    double at_min = 0.0, at_max = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      if (p0[y] <= 0.0 && pg[y] <= 0.0) continue;
      if (tied(ell[y], lo)) at_min += p0[y];
      if (tied(ell[y], hi)) at_max += pg[y];
    }
    c = std::min({c, at_min, at_max});
  }
  return std::clamp(c, 0.0, 1.0);
}

inline double compute_c_G(const PushedModel& y_model) {
  return compute_c_G(conditional_given_g(y_model), y_model.z_count(),
                     y_model.g_count());
}

inline double compute_c_G(const JointModel& model,
                          const NetworkMapping& stage1) {
  return compute_c_G(push_forward(model, stage1));
}

inline double theta(double eps_info, double c_G) {
  if (eps_info < 0.0) throw InvalidArgument("eps_I must be nonnegative");
  if (!(c_G >= 0.0 && c_G <= 1.0)) throw InvalidArgument("c_G outside [0,1]");
  const double decay = std::isinf(eps_info) ? 0.0 : std::exp(-eps_info / 2.0);
  return (1.0 - c_G * (1.0 - decay)) / 2.0;
}

struct PrivacyRiskProfile {
  std::vector<double> min_risk;  // indexed by g; entry 0 unused
  double c_G = 0.0;
  double theta = 0.5;

  double worst() const {
    double w = 0.5;
    for (std::size_t g = 1; g < min_risk.size(); ++g) {
      w = std::min(w, min_risk[g]);
    }
    return w;
  }
};

inline PrivacyRiskProfile risk_profile(const PushedModel& y_model,
                                       double eps_info) {
  const auto pyg = conditional_given_g(y_model);
  PrivacyRiskProfile p;
  p.min_risk.assign(y_model.g_count(), 0.5);
  for (std::size_t g = 1; g < y_model.g_count(); ++g) {
    p.min_risk[g] = min_risk_detector(pyg, y_model.z_count(), g).risk;
  }
  p.c_G = compute_c_G(pyg, y_model.z_count(), y_model.g_count());
  p.theta = theta(eps_info, p.c_G);
  return p;
}

}  // namespace privdet
