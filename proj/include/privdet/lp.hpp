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

// Dense two-phase tableau simplex. Variables are nonnegative; the objective
// is minimized. Pivoting follows Bland's rule so results are a deterministic
// function of the input.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "privdet/core.hpp"

namespace privdet {

enum class Sense { kLe, kGe, kEq };

struct LinearConstraint {
  std::vector<double> coeffs;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

struct LinearProgram {
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;

  std::size_t num_vars() const { return objective.size(); }

  void add(std::vector<double> coeffs, Sense sense, double rhs) {
    constraints.push_back({std::move(coeffs), sense, rhs});
  }
};

enum class LpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumerical
};

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration-limit";
    case LpStatus::kNumerical:
      return "numerical-failure";
  }
  return "unknown";
}

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::quiet_NaN();

  bool ok() const { return status == LpStatus::kOptimal; }
};

namespace detail {

// Solves the m x m row-major system in place by Gaussian elimination with
// partial pivoting; the solution replaces `rhs`. False if singular.
inline bool solve_dense(std::vector<double>& a, std::vector<double>& rhs,
                        std::size_t m) {
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < m; ++i) {
      if (std::abs(a[i * m + k]) > std::abs(a[p * m + k])) p = i;
    }
    if (std::abs(a[p * m + k]) < 1e-13) return false;
    if (p != k) {
      for (std::size_t j = 0; j < m; ++j) std::swap(a[p * m + j], a[k * m + j]);
      std::swap(rhs[p], rhs[k]);
    }
    for (std::size_t i = k + 1; i < m; ++i) {
      const double f = a[i * m + k] / a[k * m + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < m; ++j) a[i * m + j] -= f * a[k * m + j];
      rhs[i] -= f * rhs[k];
    }
  }
  for (std::size_t k = m; k-- > 0;) {
    double v = rhs[k];
    for (std::size_t j = k + 1; j < m; ++j) v -= a[k * m + j] * rhs[j];
    rhs[k] = v / a[k * m + k];
  }
  return true;
}

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0),
        basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const {
    return a_[r * (cols_ + 1) + c];
  }
  // Column `cols_` holds the right-hand side; row `rows_` the reduced costs.
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = cols_ + 1;
    double* prow = &a_[pr * w];
    const double inv = 1.0 / prow[pc];
    for (std::size_t c = 0; c < w; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double* row = &a_[r * w];
      const double f = row[pc];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  // Runs Bland's rule on the current cost row over columns < `allowed`.
  // Basic variables at index >= `pinned` are held at their level: any
  // nonzero entry in their row blocks the step.
  LpStatus optimize(std::size_t allowed, double tol, std::size_t max_iter,
                    std::size_t pinned) {
    for (std::size_t it = 0; it < max_iter; ++it) {
      std::size_t pc = allowed;
      for (std::size_t c = 0; c < allowed; ++c) {
        if (cost(c) < -tol) {
          pc = c;
          break;
        }
      }
      if (pc == allowed) return LpStatus::kOptimal;
      // Two-pass ratio test: bound the step with the right-hand sides
      // relaxed by tol, then take the largest pivot within the bound.
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double v = at(r, pc);
        if (basis_[r] >= pinned && std::abs(v) > tol) {
          bound = 0.0;
        } else if (v > tol) {
          bound = std::min(bound, (std::max(rhs(r), 0.0) + tol) / v);
        }
      }
      std::size_t pr = rows_;
      double mag = 0.0;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double v = at(r, pc);
        const bool pin = basis_[r] >= pinned && std::abs(v) > tol;
        if (!pin && !(v > tol && std::max(rhs(r), 0.0) / v <= bound)) continue;
        if (std::abs(v) > mag ||
            (std::abs(v) == mag && pr < rows_ && basis_[r] < basis_[pr])) {
          mag = std::abs(v);
          pr = r;
        }
      }
      if (pr == rows_) return LpStatus::kUnbounded;
      pivot(pr, pc);
    }
    return LpStatus::kIterationLimit;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

// Largest relative constraint violation accepted in a returned point.
inline constexpr double kFeasTol = 1e-6;

inline LpResult solve_lp(const LinearProgram& lp, double tol = 1e-9,
                         std::size_t max_iter = 200000) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.constraints.size();
  for (const auto& c : lp.constraints) {
    if (c.coeffs.size() != n) {
      throw DimensionError("constraint has " + std::to_string(c.coeffs.size()) +
                           " coefficients, program has " + std::to_string(n) +
                           " variables");
    }
  }

  // Equilibrate rows, then normalize to nonnegative right-hand sides.
  std::vector<LinearConstraint> rows = lp.constraints;
  for (auto& r : rows) {
    double big = 0.0;
    for (double v : r.coeffs) big = std::max(big, std::abs(v));
    if (big > 0.0) {
      for (auto& v : r.coeffs) v /= big;
      r.rhs /= big;
    }
    if (r.rhs < 0.0) {
      for (auto& v : r.coeffs) v = -v;
      r.rhs = -r.rhs;
      if (r.sense == Sense::kLe) {
        r.sense = Sense::kGe;
      } else if (r.sense == Sense::kGe) {
        r.sense = Sense::kLe;
      }
    }
  }

  std::size_t n_slack = 0, n_art = 0;
  for (const auto& r : rows) {
    if (r.sense != Sense::kEq) ++n_slack;
    if (r.sense != Sense::kLe) ++n_art;
  }
  const std::size_t art0 = n + n_slack;
  detail::Tableau t(m, art0 + n_art);

  // Row and sign of each slack and artificial column.
  std::vector<std::pair<std::size_t, double>> aux(n_slack + n_art);
  std::size_t slack = n, art = art0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) = rows[i].coeffs[j];
    t.rhs(i) = rows[i].rhs;
    switch (rows[i].sense) {
      case Sense::kLe:
        aux[slack - n] = {i, 1.0};
        t.at(i, slack) = 1.0;
        t.basis()[i] = slack++;
        break;
      case Sense::kGe:
        aux[slack - n] = {i, -1.0};
        t.at(i, slack++) = -1.0;
        aux[art - n] = {i, 1.0};
        t.at(i, art) = 1.0;
        t.basis()[i] = art++;
        break;
      case Sense::kEq:
        aux[art - n] = {i, 1.0};
        t.at(i, art) = 1.0;
        t.basis()[i] = art++;
        break;
    }
  }

  LpResult result;
  if (n_art > 0) {
    // Phase 1: minimize the sum of artificials.
    for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0) continue;
      for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) -= t.at(i, c);
    }
    for (std::size_t c = art0; c < t.cols(); ++c) t.cost(c) = 0.0;
    const auto st = t.optimize(t.cols(), tol, max_iter, t.cols());
    if (st == LpStatus::kIterationLimit) {
      result.status = st;
      return result;
    }
    const double infeas = -t.cost(t.cols());
    double scale = 1.0;
    for (const auto& r : rows) scale = std::max(scale, r.rhs);
    if (infeas > tol * scale * static_cast<double>(m + 1)) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis on the largest pivot.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0 || std::abs(t.rhs(i)) > tol) continue;
      std::size_t best = art0;
      double mag = 1e-7;
      for (std::size_t c = 0; c < art0; ++c) {
        if (std::abs(t.at(i, c)) > mag) {
          mag = std::abs(t.at(i, c));
          best = c;
        }
      }
      if (best < art0) t.pivot(i, best);
    }
  }

  // Phase 2 over original and slack columns only.
  for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) = 0.0;
  for (std::size_t j = 0; j < n; ++j) t.cost(j) = lp.objective[j];
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t b = t.basis()[i];
    if (b >= art0) continue;
    const double cb = t.cost(b);
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= t.cols(); ++c) t.cost(c) -= cb * t.at(i, c);
  }
  const auto st = t.optimize(art0, tol, max_iter, art0);
  if (st != LpStatus::kOptimal) {
    result.status = st;
    return result;
  }

  // The tableau accumulates rounding over many pivots; also recompute the
  // basic solution from the original rows and keep whichever point has the
  // smaller residual.
  auto extract = [&](const std::vector<double>& basic) {
    std::vector<double> x(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t c = t.basis()[i];
      if (c < n) x[c] = std::max(0.0, basic[i]);
    }
    return x;
  };
  auto residual = [&](const std::vector<double>& x) {
    double worst = 0.0;
    for (const auto& r : rows) {
      double a = 0.0;
      for (std::size_t j = 0; j < n; ++j) a += r.coeffs[j] * x[j];
      const double v = r.sense == Sense::kLe   ? a - r.rhs
                       : r.sense == Sense::kGe ? r.rhs - a
                                               : std::abs(a - r.rhs);
      worst = std::max(worst, v / std::max(1.0, std::abs(r.rhs)));
    }
    return worst;
  };
  std::vector<double> basic(m);
  for (std::size_t i = 0; i < m; ++i) basic[i] = t.rhs(i);
  result.x = extract(basic);
  double res = residual(result.x);
  {
    std::vector<double> b(m * m, 0.0), rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = rows[i].rhs;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t c = t.basis()[k];
      if (c < n) {
        for (std::size_t i = 0; i < m; ++i) b[i * m + k] = rows[i].coeffs[c];
      } else {
        b[aux[c - n].first * m + k] = aux[c - n].second;
      }
    }
    if (detail::solve_dense(b, rhs, m)) {
      auto x = extract(rhs);
      const double r2 = residual(x);
      if (r2 < res) {
        result.x = std::move(x);
        res = r2;
      }
    }
  }
  result.status = res <= kFeasTol ? LpStatus::kOptimal : LpStatus::kNumerical;
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    result.objective += lp.objective[j] * result.x[j];
  }
  return result;
}

}  // namespace privdet
