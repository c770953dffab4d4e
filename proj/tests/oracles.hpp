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

// Independent brute-force reference computations used by the unit tests.
// Nothing here calls the routine it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/lp.hpp"
#include "privdet/model.hpp"

namespace oracle {

// p(hg, z-vector) by enumerating every x-vector of the full joint.
inline std::vector<double> push(const privdet::JointModel& m,
                                const privdet::NetworkMapping& map) {
  const std::size_t s = m.s(), nx = m.x_size(), nz = map.z_size();
  std::size_t cx = 1, cz = 1;
  for (std::size_t t = 0; t < s; ++t) {
    cx *= nx;
    cz *= nz;
  }
  const auto joint = m.joint();
  std::vector<double> out(m.hg_count() * cz, 0.0);
  for (std::size_t k = 0; k < m.hg_count(); ++k) {
    for (std::size_t x = 0; x < cx; ++x) {
      const double px = joint[k * cx + x];
      if (px == 0.0) continue;
      for (std::size_t z = 0; z < cz; ++z) {
        double p = px;
        std::size_t xr = x, zr = z;
        for (std::size_t t = s; t-- > 0;) {
          p *= map.channel(t)(xr % nx, zr % nz);
          xr /= nx;
          zr /= nz;
        }
        out[k * cz + z] += p;
      }
    }
  }
  return out;
}

// Smallest error of any deterministic rule z -> h, found by trying them all.
inline double best_rule_error(const std::vector<double>& p_hz, std::size_t nz) {
  double best = 1.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << nz); ++mask) {
    double err = 0.0;
    for (std::size_t z = 0; z < nz; ++z) {
      err += (mask >> z & 1) ? p_hz[z] : p_hz[nz + z];
    }
    best = std::min(best, err);
  }
  return best;
}

// min over all detectors y -> {0, g} of 1/2 (P(say g | 0) + P(say 0 | g)).
inline double min_risk(const std::vector<double>& p_y_given_g, std::size_t ny,
                       std::size_t g) {
  double best = 1.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ny); ++mask) {
    double r = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      r += (mask >> y & 1) ? p_y_given_g[y] : p_y_given_g[g * ny + y];
    }
    best = std::min(best, 0.5 * r);
  }
  return best;
}

// Minimum of a small LP with x >= 0 by enumerating vertices: every choice of
// n tight constraints among the rows and the bounds. Returns +inf when no
// feasible vertex exists.
inline double lp_min_by_vertices(const privdet::LinearProgram& lp,
                                 double feas_tol = 1e-9) {
  using privdet::Sense;
  const std::size_t n = lp.num_vars();
  struct Row {
    std::vector<double> a;
    double b;
  };
  std::vector<Row> all;
  for (const auto& c : lp.constraints) all.push_back({c.coeffs, c.rhs});
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    all.push_back({e, 0.0});
  }
  auto feasible = [&](const std::vector<double>& x) {
    for (double v : x) {
      if (v < -feas_tol) return false;
    }
    for (const auto& c : lp.constraints) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += c.coeffs[j] * x[j];
      const double tol = feas_tol * (1.0 + std::abs(c.rhs));
      if (c.sense == Sense::kLe && lhs > c.rhs + tol) return false;
      if (c.sense == Sense::kGe && lhs < c.rhs - tol) return false;
      if (c.sense == Sense::kEq && std::abs(lhs - c.rhs) > tol) return false;
    }
    return true;
  };
  double best = std::numeric_limits<double>::infinity();
  const std::size_t m = all.size();
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    std::vector<double> a(n * n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) a[i * n + j] = all[pick[i]].a[j];
      b[i] = all[pick[i]].b;
    }
    bool singular = false;
    for (std::size_t col = 0; col < n && !singular; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r) {
        if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
      }
      if (std::abs(a[piv * n + col]) < 1e-12) {
        singular = true;
        break;
      }
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      std::swap(b[col], b[piv]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = a[r * n + col] / a[col * n + col];
        for (std::size_t j = 0; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
        b[r] -= f * b[col];
      }
    }
    if (!singular) {
      std::vector<double> x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i * n + i];
      if (feasible(x)) {
        double v = 0.0;
        for (std::size_t j = 0; j < n; ++j) v += lp.objective[j] * x[j];
        best = std::min(best, v);
      }
    }
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == m - n + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

inline double logistic(double a) {
  return a > 0 ? std::log1p(std::exp(-a)) : -a + std::log1p(std::exp(a));
}

}  // namespace oracle
