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

// Empirical privacy-constrained design from samples.
//
// The classifier and the adversaries live in the feature space of the count
// kernel: Phi(z) stacks one indicator vector per sensor, so
// <Phi(z), Phi(z')> counts agreeing components and the pushed feature
// Phi_Q(x) stacks the channel rows p_t(.|x_t). Weights are kept explicitly in
// that (s |Z|)-dimensional space; representer coefficients over the training
// expansions are recovered from the stationarity condition.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"
#include "privdet/lp.hpp"
#include "privdet/metrics.hpp"
#include "privdet/model.hpp"

namespace privdet {

// ---------------------------------------------------------------------------
// Data.

struct Dataset {
  std::size_t s = 0;
  std::size_t q = 0;
  std::size_t x_size = 0;
  std::vector<std::uint8_t> h;
  std::vector<std::size_t> g;
  std::vector<std::uint32_t> x;  // n * s, row-major

  std::size_t n() const { return h.size(); }
  std::size_t g_count() const { return std::size_t{1} << q; }
  std::uint32_t at(std::size_t i, std::size_t t) const { return x[i * s + t]; }
  std::span<const std::uint32_t> row(std::size_t i) const {
    return {x.data() + i * s, s};
  }

  void validate() const {
    if (n() == 0) throw InvalidArgument("dataset is empty");
    if (s == 0 || x_size == 0) throw InvalidArgument("dataset has no features");
    if (g.size() != n() || x.size() != n() * s) {
      throw DimensionError("dataset columns have inconsistent lengths");
    }
    for (std::size_t i = 0; i < n(); ++i) {
      if (h[i] > 1) throw InvalidArgument("h must be 0 or 1");
      if (g[i] >= g_count()) throw InvalidArgument("g outside its alphabet");
    }
    for (auto v : x) {
      if (v >= x_size) throw InvalidArgument("symbol outside the alphabet");
    }
  }

  std::vector<std::size_t> class_set(std::size_t gv) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n(); ++i) {
      if (g[i] == gv) out.push_back(i);
    }
    return out;
  }
};

/// Samples with real-valued features, before discretization.
struct RawTable {
  std::size_t q = 0;
  std::vector<std::uint8_t> h;
  std::vector<std::size_t> g;
  std::vector<std::vector<double>> features;

  std::size_t n() const { return h.size(); }
  std::size_t s() const { return features.empty() ? 0 : features[0].size(); }
};

// Columns: h, then q bits of g (first column most significant), then
// features. A first line that does not start with a number is a header.
inline RawTable read_raw_csv(const std::string& path, std::size_t q) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  RawTable tab;
  tab.q = q;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    const std::string where = path + ":" + std::to_string(lineno);
    if (!numeric) {
      if (tab.n() == 0 && lineno == 1) continue;
      throw ParseError(where + ": non-numeric cell '" + cell + "'");
    }
    if (vals.size() < 2 + q) {
      throw ParseError(where + ": expected h, " + std::to_string(q) +
                       " g columns and at least one feature");
    }
    if (vals[0] != 0.0 && vals[0] != 1.0) {
      throw ParseError(where + ": h must be 0 or 1");
    }
    std::size_t gv = 0;
    for (std::size_t j = 0; j < q; ++j) {
      if (vals[1 + j] != 0.0 && vals[1 + j] != 1.0) {
        throw ParseError(where + ": g components must be 0 or 1");
      }
      gv = (gv << 1) | static_cast<std::size_t>(vals[1 + j]);
    }
    std::vector<double> f(vals.begin() + 1 + static_cast<long>(q), vals.end());
    if (tab.n() > 0 && f.size() != tab.s()) {
      throw ParseError(where + ": expected " + std::to_string(tab.s()) +
                       " features, got " + std::to_string(f.size()));
    }
    tab.h.push_back(static_cast<std::uint8_t>(vals[0]));
    tab.g.push_back(gv);
    tab.features.push_back(std::move(f));
  }
  if (tab.n() == 0) throw ParseError(path + ": no samples");
  return tab;
}

inline std::string raw_csv_text(const RawTable& tab) {
  std::string out = "h";
  for (std::size_t j = 0; j < tab.q; ++j) out += ",g" + std::to_string(j + 1);
  for (std::size_t t = 0; t < tab.s(); ++t) out += ",x" + std::to_string(t + 1);
  out += "\n";
  for (std::size_t i = 0; i < tab.n(); ++i) {
    out += std::to_string(tab.h[i]);
    for (std::size_t j = 0; j < tab.q; ++j) {
      out += (tab.g[i] >> (tab.q - 1 - j)) & 1 ? ",1" : ",0";
    }
    for (double v : tab.features[i]) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

enum class BinScheme { kQuantile, kInteger };

/// Per-column binning fitted on a training table.
struct Discretizer {
  BinScheme scheme = BinScheme::kQuantile;
  std::size_t x_size = 0;
  std::vector<std::vector<double>> edges;  // quantile scheme
  double offset = 0.0;                     // integer scheme
  std::vector<std::string> warnings;

  static Discretizer fit(const RawTable& train, std::size_t bins,
                         BinScheme scheme = BinScheme::kQuantile) {
    if (train.n() == 0) throw InvalidArgument("empty training table");
    Discretizer d;
    d.scheme = scheme;
    const std::size_t s = train.s();
    if (scheme == BinScheme::kInteger) {
      double lo = kInf, hi = -kInf;
      for (const auto& r : train.features) {
        for (double v : r) {
          lo = std::min(lo, std::round(v));
          hi = std::max(hi, std::round(v));
        }
      }
      d.offset = lo;
      d.x_size = static_cast<std::size_t>(hi - lo) + 1;
      return d;
    }
    if (bins < 2) throw InvalidArgument("bins must be >= 2");
    d.x_size = bins;
    const std::size_t n = train.n();
    for (std::size_t t = 0; t < s; ++t) {
      std::vector<double> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = train.features[i][t];
      std::sort(col.begin(), col.end());
      std::vector<double> e;
      if (col.front() == col.back()) {
        d.warnings.push_back("feature " + std::to_string(t + 1) +
                             " is constant; mapped to a single symbol");
      } else {
        for (std::size_t k = 1; k < bins; ++k) {
          const double v = col[k * n / bins];
          if (v > col.front() && (e.empty() || v > e.back())) e.push_back(v);
        }
      }
      d.edges.push_back(std::move(e));
    }
    return d;
  }

  std::uint32_t symbol(std::size_t col, double v) const {
    if (scheme == BinScheme::kInteger) {
      const double k = std::clamp(std::round(v) - offset, 0.0,
                                  static_cast<double>(x_size - 1));
      return static_cast<std::uint32_t>(k);
    }
    const auto& e = edges.at(col);
    return static_cast<std::uint32_t>(
        std::upper_bound(e.begin(), e.end(), v) - e.begin());
  }

  Dataset apply(const RawTable& tab) const {
    Dataset ds;
    ds.s = tab.s();
    ds.q = tab.q;
    ds.x_size = x_size;
    ds.h = tab.h;
    ds.g = tab.g;
    if (scheme == BinScheme::kQuantile && ds.s != edges.size()) {
      throw DimensionError("table has " + std::to_string(ds.s) +
                           " features, discretizer was fitted on " +
                           std::to_string(edges.size()));
    }
    ds.x.reserve(tab.n() * ds.s);
    for (const auto& r : tab.features) {
      for (std::size_t t = 0; t < ds.s; ++t) ds.x.push_back(symbol(t, r[t]));
    }
    ds.validate();
    return ds;
  }
};

inline Dataset discretize(const RawTable& tab, std::size_t bins,
                          BinScheme scheme = BinScheme::kQuantile) {
  return Discretizer::fit(tab, bins, scheme).apply(tab);
}

// ---------------------------------------------------------------------------
// Synthetic data: x_t = level(h, g) + n_t with n_t uniform on {-2, ..., 2}
// and levels -3, -1, 1, 3 for (h, g) = 00, 01, 10, 11.

inline constexpr int kLevelMeans[4] = {-3, -1, 1, 3};
inline constexpr std::size_t kLevelAlphabet = 11;  // {-5, ..., 5}

inline JointModel level_model(std::size_t s = 4, double corr = 0.2) {
  const auto prior = correlated_prior(0.5, 0.5, corr);
  std::vector<double> cond(4 * kLevelAlphabet, 0.0);
  for (std::size_t hg = 0; hg < 4; ++hg) {
    for (int n = -2; n <= 2; ++n) {
      cond[hg * kLevelAlphabet +
           static_cast<std::size_t>(kLevelMeans[hg] + n + 5)] = 0.2;
    }
  }
  return JointModel::cond_indep(1, kLevelAlphabet, prior,
                                std::vector<std::vector<double>>(s, cond));
}

inline RawTable generate_level_data(std::size_t n, std::uint64_t seed,
                                std::size_t s = 4, double corr = 0.2) {
  const auto prior = correlated_prior(0.5, 0.5, corr);
  Rng rng(seed);
  RawTable tab;
  tab.q = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t hg = rng.sample(prior);
    tab.h.push_back(static_cast<std::uint8_t>(hg >> 1));
    tab.g.push_back(hg & 1);
    std::vector<double> f(s);
    for (auto& v : f) {
      v = kLevelMeans[hg] + static_cast<int>(rng.below(5)) - 2;
    }
    tab.features.push_back(std::move(f));
  }
  return tab;
}

// Symbols x + 5 over the fixed alphabet {-5, ..., 5}.
inline Dataset level_dataset(const RawTable& tab) {
  Discretizer d;
  d.scheme = BinScheme::kInteger;
  d.offset = -5.0;
  d.x_size = kLevelAlphabet;
  return d.apply(tab);
}

// ---------------------------------------------------------------------------
// Kernels.

inline int count_kernel(std::span<const std::uint32_t> a,
                        std::span<const std::uint32_t> b) {
  if (a.size() != b.size()) throw DimensionError("count kernel: length mismatch");
  int k = 0;
  for (std::size_t t = 0; t < a.size(); ++t) k += a[t] == b[t] ? 1 : 0;
  return k;
}

inline double expected_kernel(std::span<const std::uint32_t> x,
                              std::span<const std::uint32_t> x2,
                              const NetworkMapping& mapping) {
  if (x.size() != mapping.size() || x2.size() != mapping.size()) {
    throw DimensionError("expected kernel: vector length != sensor count");
  }
  double k = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto a = mapping.channel(t).row(x[t]);
    const auto b = mapping.channel(t).row(x2[t]);
    for (std::size_t z = 0; z < a.size(); ++z) k += a[z] * b[z];
  }
  return k;
}

inline Eigen::MatrixXd gram_matrix(const Dataset& ds,
                                   const NetworkMapping& mapping) {
  const std::size_t n = ds.n();
  Eigen::MatrixXd k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      k(i, j) = k(j, i) = expected_kernel(ds.row(i), ds.row(j), mapping);
    }
  }
  return k;
}

// ---------------------------------------------------------------------------
// Logistic risks.

inline double logistic_loss(double a) {
  return a > 0.0 ? std::log1p(std::exp(-a)) : -a + std::log1p(std::exp(a));
}

inline double logistic_d1(double a) {
  return a > 0.0 ? -std::exp(-a) / (1.0 + std::exp(-a))
                 : -1.0 / (1.0 + std::exp(a));
}

inline double logistic_d2(double a) {
  const double p = 1.0 / (1.0 + std::exp(-std::abs(a)));
  return p * (1.0 - p);
}

inline double sign_of(std::uint8_t h) { return h ? 1.0 : -1.0; }

namespace detail {

inline Eigen::MatrixXd feature_matrix(const Dataset& ds,
                                      const NetworkMapping& mapping) {
  const std::size_t nz = mapping.z_size();
  Eigen::MatrixXd a(ds.n(), ds.s * nz);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t t = 0; t < ds.s; ++t) {
      const auto r = mapping.channel(t).row(ds.at(i, t));
      for (std::size_t z = 0; z < nz; ++z) a(i, t * nz + z) = r[z];
    }
  }
  return a;
}

// Samples, labels and weights of one weighted logistic problem.
struct Problem {
  std::vector<std::size_t> idx;
  std::vector<double> y;
  std::vector<double> c;
};

inline Problem h_problem(const Dataset& ds) {
  Problem p;
  const double w = 1.0 / static_cast<double>(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    p.idx.push_back(i);
    p.y.push_back(sign_of(ds.h[i]));
    p.c.push_back(w);
  }
  return p;
}

inline Problem g_problem(const Dataset& ds, std::size_t g) {
  if (g == 0 || g >= ds.g_count()) throw InvalidArgument("g must be in 1..|G|-1");
  const auto s0 = ds.class_set(0);
  const auto sg = ds.class_set(g);
  if (s0.empty() || sg.empty()) {
    throw InvalidArgument("empty class set for g = 0 or g = " +
                          std::to_string(g));
  }
  Problem p;
  for (auto i : s0) {
    p.idx.push_back(i);
    p.y.push_back(-1.0);
    p.c.push_back(0.5 / static_cast<double>(s0.size()));
  }
  for (auto i : sg) {
    p.idx.push_back(i);
    p.y.push_back(1.0);
    p.c.push_back(0.5 / static_cast<double>(sg.size()));
  }
  return p;
}

inline double objective(const Eigen::MatrixXd& a, const Problem& p,
                        const Eigen::VectorXd& u, double lambda) {
  double f = 0.5 * lambda * u.squaredNorm();
  for (std::size_t k = 0; k < p.idx.size(); ++k) {
    f += p.c[k] * logistic_loss(p.y[k] * a.row(p.idx[k]).dot(u));
  }
  return f;
}

// Damped Newton; the objective is smooth and lambda-strongly convex.
inline Eigen::VectorXd minimize(const Eigen::MatrixXd& a, const Problem& p,
                                double lambda, Eigen::VectorXd u,
                                double grad_tol = 1e-10,
                                std::size_t max_iter = 500) {
  const auto d = a.cols();
  if (u.size() != d) u = Eigen::VectorXd::Zero(d);
  double f = objective(a, p, u, lambda);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Eigen::VectorXd grad = lambda * u;
    Eigen::MatrixXd hess = lambda * Eigen::MatrixXd::Identity(d, d);
    for (std::size_t k = 0; k < p.idx.size(); ++k) {
      const auto row = a.row(p.idx[k]);
      const double m = p.y[k] * row.dot(u);
      grad += (p.c[k] * logistic_d1(m) * p.y[k]) * row.transpose();
      hess += (p.c[k] * logistic_d2(m)) * row.transpose() * row;
    }
    if (grad.norm() <= grad_tol) break;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd cand = u + t * step;
      const double fc = objective(a, p, cand, lambda);
      if (fc <= f + 1e-4 * t * grad.dot(step)) {
        u = cand;
        f = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return u;
}

// d objective / d p_t(x, z) at fixed weights u.
inline std::vector<double> channel_gradient(const Dataset& ds,
                                            const Eigen::MatrixXd& a,
                                            const Problem& p,
                                            const Eigen::VectorXd& u,
                                            std::size_t t, std::size_t nz) {
  std::vector<double> grad(ds.x_size * nz, 0.0);
  for (std::size_t k = 0; k < p.idx.size(); ++k) {
    const std::size_t i = p.idx[k];
    const double m = p.y[k] * a.row(i).dot(u);
    const double coef = p.c[k] * logistic_d1(m) * p.y[k];
    const std::size_t x = ds.at(i, t);
    for (std::size_t z = 0; z < nz; ++z) {
      grad[x * nz + z] += coef * u[static_cast<Eigen::Index>(t * nz + z)];
    }
  }
  return grad;
}

}  // namespace detail

/// F at representer coefficients over the training expansions:
/// scores K alpha and squared norm alpha' K alpha.
inline double empirical_risk_H(const std::vector<double>& coeffs,
                               const NetworkMapping& mapping,
                               const Dataset& ds, double lambda) {
  if (coeffs.size() != ds.n()) throw DimensionError("one coefficient per sample");
  const Eigen::MatrixXd k = gram_matrix(ds, mapping);
  const Eigen::Map<const Eigen::VectorXd> al(coeffs.data(),
                                             static_cast<Eigen::Index>(coeffs.size()));
  const Eigen::VectorXd m = k * al;
  double f = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    f += logistic_loss(sign_of(ds.h[i]) * m[static_cast<Eigen::Index>(i)]);
  }
  return f / static_cast<double>(ds.n()) + 0.5 * lambda * al.dot(m);
}

/// The normalized risk of telling G = g from G = 0, with the regularizer on
/// the adversary's own weights.
inline double empirical_privacy_risk(const std::vector<double>& coeffs_v,
                                     const NetworkMapping& mapping,
                                     const Dataset& ds, std::size_t g,
                                     double lambda) {
  if (coeffs_v.size() != ds.n()) {
    throw DimensionError("one coefficient per sample");
  }
  const auto p = detail::g_problem(ds, g);
  const Eigen::MatrixXd k = gram_matrix(ds, mapping);
  const Eigen::Map<const Eigen::VectorXd> al(
      coeffs_v.data(), static_cast<Eigen::Index>(coeffs_v.size()));
  const Eigen::VectorXd m = k * al;
  double f = 0.5 * lambda * al.dot(m);
  for (std::size_t j = 0; j < p.idx.size(); ++j) {
    f += p.c[j] * logistic_loss(p.y[j] * m[static_cast<Eigen::Index>(p.idx[j])]);
  }
  return f;
}

/// min over v of the privacy risk for g, with the minimizing weights.
struct AdversaryFit {
  Eigen::VectorXd v;
  double risk = 0.0;
};

inline AdversaryFit min_privacy_risk(const NetworkMapping& mapping,
                                     const Dataset& ds, std::size_t g,
                                     double lambda) {
  const auto a = detail::feature_matrix(ds, mapping);
  const auto p = detail::g_problem(ds, g);
  AdversaryFit fit;
  fit.v = detail::minimize(a, p, lambda, Eigen::VectorXd());
  fit.risk = detail::objective(a, p, fit.v, lambda);
  return fit;
}

// ---------------------------------------------------------------------------
// Optimizer.

struct EpicConfig {
  double eps_LD = kInf;
  double r = 0.999;
  double lambda = 10.0;
  std::size_t z_size = 2;
  std::uint64_t seed = 0;
  std::size_t max_sweeps = 30;
  std::size_t restarts = 4;
  double tol = 1e-7;
  bool privacy = true;  // false gives the E-LDP ablation
  double lp_tol = 1e-9;

  void validate() const {
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r must lie in (0, 1)");
    if (!(eps_LD >= 0.0)) throw InvalidArgument("eps_LD must be >= 0");
    if (!(lambda > 0.0)) throw InvalidArgument("lambda must be > 0");
    if (z_size < 2) throw InvalidArgument("|Z| must be >= 2");
    if (restarts == 0) throw InvalidArgument("restarts must be >= 1");
  }
};

struct EpicSolution {
  NetworkMapping mapping;
  Eigen::VectorXd w;
  std::vector<double> coeffs;            // representer form of w
  std::vector<Eigen::VectorXd> v;        // indexed by g; entry 0 empty
  std::vector<double> min_risk;          // indexed by g; entry 0 unused
  double theta = 0.0;
  double theta_star = 0.0;
  double r = 0.0;
  double lambda = 0.0;
  double eps_LD = kInf;
  double objective = 0.0;
  bool privacy = true;
  std::vector<double> trace;
  std::vector<std::string> notes;

  double worst_risk() const {
    double m = kInf;
    for (std::size_t g = 1; g < min_risk.size(); ++g) m = std::min(m, min_risk[g]);
    return m;
  }
};

namespace detail {

using Channels = std::vector<std::vector<double>>;

inline NetworkMapping to_mapping(const Channels& p, std::size_t nx,
                                 std::size_t nz) {
  std::vector<SensorChannel> cs;
  for (const auto& rows : p) cs.push_back(SensorChannel::from_solver(nx, nz, rows));
  return NetworkMapping(std::move(cs));
}

class EpicEngine {
 public:
  EpicEngine(const Dataset& ds, const EpicConfig& cfg)
      : ds_(ds), cfg_(cfg), nx_(ds.x_size), nz_(cfg.z_size),
        hp_(h_problem(ds)) {
    for (std::size_t g = 1; g < ds.g_count(); ++g) {
      gp_.push_back(g_problem(ds, g));
    }
  }

  struct State {
    Channels p;
    Eigen::VectorXd w;
    std::vector<Eigen::VectorXd> v;
    std::vector<double> risk;
    double f = kInf;
  };

  double min_risk(const State& st) const {
    double m = kInf;
    for (double r : st.risk) m = std::min(m, r);
    return m;
  }

  Eigen::MatrixXd features(const Channels& p) const {
    return feature_matrix(ds_, to_mapping(p, nx_, nz_));
  }

  void refresh(State& st, bool refit_w) const {
    const auto a = features(st.p);
    if (refit_w) st.w = minimize(a, hp_, cfg_.lambda, st.w);
    st.f = objective(a, hp_, st.w, cfg_.lambda);
    st.v.resize(gp_.size());
    st.risk.resize(gp_.size());
    for (std::size_t k = 0; k < gp_.size(); ++k) {
      st.v[k] = minimize(a, gp_[k], cfg_.lambda, st.v[k]);
      st.risk[k] = objective(a, gp_[k], st.v[k], cfg_.lambda);
    }
  }

  State make_state(Channels p) const {
    State st;
    st.p = std::move(p);
    refresh(st, true);
    return st;
  }

  Channels random_start(std::uint64_t seed) const {
    Rng rng(seed);
    Channels p;
    for (std::size_t t = 0; t < ds_.s; ++t) {
      auto c = random_channel(rng, nx_, nz_);
      p.push_back(enforce_ldp(c.rows(), nx_, nz_, cfg_.eps_LD));
    }
    return p;
  }

  Channels uniform() const {
    return Channels(ds_.s, std::vector<double>(nx_ * nz_, 1.0 / nz_));
  }

  // Mixes every channel toward uniform until the risk threshold holds.
  State repair(State st, double theta) const {
    if (min_risk(st) >= theta - cfg_.tol) return st;
    auto mixed = [&](double beta) {
      Channels p;
      for (const auto& rows : st.p) p.push_back(mix_uniform(rows, nz_, beta));
      return make_state(std::move(p));
    };
    double lo = 0.0, hi = 1.0;
    State best = mixed(1.0);
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      State cand = mixed(mid);
      if (min_risk(cand) >= theta - cfg_.tol) {
        hi = mid;
        best = std::move(cand);
      } else {
        lo = mid;
      }
    }
    return best;
  }

  enum class Mode { kMinObjective, kMaxRisk };

  // One linearized step on sensor t followed by backtracking on the exact
  // quantities. Returns true if the state moved.
  bool sensor_step(State& st, std::size_t t, Mode mode, double theta,
                   bool constrained) const {
    const auto a = features(st.p);
    const std::size_t nv = nx_ * nz_;
    const auto& cur = st.p[t];
    std::vector<std::vector<double>> rg;
    for (std::size_t k = 0; k < gp_.size(); ++k) {
      rg.push_back(channel_gradient(ds_, a, gp_[k], st.v[k], t, nz_));
    }
    auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
      double s = 0.0;
      for (std::size_t i = 0; i < nv; ++i) s += u[i] * v[i];
      return s;
    };
    const bool feasible = !constrained || min_risk(st) >= theta - cfg_.tol;

    auto base_lp = [&](std::size_t extra) {
      LinearProgram lp;
      lp.objective.assign(nv + extra, 0.0);
      for (std::size_t x = 0; x < nx_; ++x) {
        std::vector<double> row(nv + extra, 0.0);
        for (std::size_t z = 0; z < nz_; ++z) row[x * nz_ + z] = 1.0;
        lp.add(std::move(row), Sense::kEq, 1.0);
      }
      if (!std::isinf(cfg_.eps_LD)) {
        const double e = std::exp(cfg_.eps_LD);
        for (std::size_t z = 0; z < nz_; ++z) {
          for (std::size_t x = 0; x < nx_; ++x) {
            for (std::size_t x2 = 0; x2 < nx_; ++x2) {
              if (x == x2) continue;
              std::vector<double> row(nv + extra, 0.0);
              row[x * nz_ + z] = 1.0;
              row[x2 * nz_ + z] = -e;
              lp.add(std::move(row), Sense::kLe, 0.0);
            }
          }
        }
      }
      return lp;
    };
    // Max-min of the linearized risks, shifted to keep the level variable
    // nonnegative.
    auto max_risk_lp = [&]() {
      constexpr double kShift = 10.0;
      LinearProgram lp = base_lp(1);
      lp.objective[nv] = -1.0;
      for (std::size_t k = 0; k < gp_.size(); ++k) {
        std::vector<double> row(rg[k]);
        row.push_back(-1.0);
        lp.add(std::move(row), Sense::kGe,
               -kShift - st.risk[k] + dot(rg[k], cur));
      }
      return solve_lp(lp, cfg_.lp_tol);
    };

    LpResult res;
    bool restoring = false;
    if (mode == Mode::kMaxRisk || !feasible) {
      res = max_risk_lp();
      restoring = mode == Mode::kMinObjective;
    } else {
      LinearProgram lp = base_lp(0);
      lp.objective = channel_gradient(ds_, a, hp_, st.w, t, nz_);
      if (constrained) {
        for (std::size_t k = 0; k < gp_.size(); ++k) {
          lp.add(rg[k], Sense::kGe, theta - st.risk[k] + dot(rg[k], cur));
        }
      }
      res = solve_lp(lp, cfg_.lp_tol);
    }
    if (!res.ok()) return false;
    std::vector<double> target(res.x.begin(), res.x.begin() + static_cast<long>(nv));
    target = enforce_ldp(
        SensorChannel::from_solver(nx_, nz_, target).rows(), nx_, nz_,
        cfg_.eps_LD);

    const double base_risk = min_risk(st);
    double gamma = 1.0;
    for (int ls = 0; ls < 12; ++ls, gamma *= 0.5) {
      State cand = st;
      for (std::size_t i = 0; i < nv; ++i) {
        cand.p[t][i] = (1.0 - gamma) * cur[i] + gamma * target[i];
      }
      refresh(cand, false);
      bool ok;
      if (mode == Mode::kMaxRisk || restoring) {
        ok = min_risk(cand) > base_risk + 1e-12;
      } else {
        ok = cand.f < st.f - 1e-12 &&
             (!constrained || min_risk(cand) >= theta - cfg_.tol);
      }
      if (ok) {
        refresh(cand, true);
        st = std::move(cand);
        return true;
      }
    }
    return false;
  }

  State gauss_seidel(State st, Mode mode, double theta, bool constrained,
                     std::vector<double>& trace) const {
    for (std::size_t sweep = 0; sweep < cfg_.max_sweeps; ++sweep) {
      const double before = mode == Mode::kMaxRisk ? min_risk(st) : st.f;
      bool moved = false;
      for (std::size_t t = 0; t < ds_.s; ++t) {
        moved = sensor_step(st, t, mode, theta, constrained) || moved;
      }
      const double after = mode == Mode::kMaxRisk ? min_risk(st) : st.f;
      trace.push_back(after);
      if (!moved || std::abs(after - before) <= cfg_.tol * std::max(1.0, std::abs(after))) {
        break;
      }
    }
    return st;
  }

  const Dataset& ds_;
  const EpicConfig& cfg_;
  std::size_t nx_, nz_;
  Problem hp_;
  std::vector<Problem> gp_;
};

}  // namespace detail

/// theta* is found by Gauss-Seidel maximization of the worst adversary risk
/// over LDP-feasible mappings; the channels are then designed at
/// theta = r theta*.
inline EpicSolution epic_solve(const Dataset& ds, const EpicConfig& cfg) {
  cfg.validate();
  ds.validate();
  if (ds.g_count() < 2) throw InvalidArgument("need |G| >= 2");
  detail::EpicEngine eng(ds, cfg);
  using State = detail::EpicEngine::State;
  using Mode = detail::EpicEngine::Mode;

  EpicSolution sol;
  sol.r = cfg.r;
  sol.lambda = cfg.lambda;
  sol.eps_LD = cfg.eps_LD;
  sol.privacy = cfg.privacy;

  // Step (i).
  std::vector<double> scratch;
  State top = eng.gauss_seidel(
      eng.make_state(eng.random_start(derive_seed(cfg.seed, 0x7e7a))),
      Mode::kMaxRisk, 0.0, false, scratch);
  const State flat = eng.make_state(eng.uniform());
  sol.theta_star = std::max(eng.min_risk(top), eng.min_risk(flat));
  sol.theta = cfg.privacy ? cfg.r * sol.theta_star : 0.0;

  // Step (ii).
  State best;
  std::vector<double> best_trace;
  for (std::size_t k = 0; k < cfg.restarts; ++k) {
    State st = eng.make_state(eng.random_start(derive_seed(cfg.seed, k)));
    if (cfg.privacy) st = eng.repair(std::move(st), sol.theta);
    std::vector<double> trace{st.f};
    st = eng.gauss_seidel(std::move(st), Mode::kMinObjective, sol.theta,
                          cfg.privacy, trace);
    const bool ok = !cfg.privacy || eng.min_risk(st) >= sol.theta - cfg.tol;
    if (ok && st.f < best.f) {
      best = std::move(st);
      best_trace = std::move(trace);
    }
  }
  if (!std::isfinite(best.f)) {
    best = flat;
    sol.notes.push_back("no restart met the risk threshold; returned constant channels");
  }

  sol.mapping = detail::to_mapping(best.p, ds.x_size, cfg.z_size);
  sol.w = best.w;
  sol.objective = best.f;
  sol.trace = std::move(best_trace);
  sol.v.assign(1, Eigen::VectorXd());
  sol.min_risk.assign(1, 0.0);
  for (std::size_t k = 0; k < best.v.size(); ++k) {
    sol.v.push_back(best.v[k]);
    sol.min_risk.push_back(best.risk[k]);
  }
  const auto a = detail::feature_matrix(ds, sol.mapping);
  const double scale = 1.0 / (static_cast<double>(ds.n()) * cfg.lambda);
  sol.coeffs.resize(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double y = sign_of(ds.h[i]);
    sol.coeffs[i] = -logistic_d1(y * a.row(static_cast<Eigen::Index>(i)).dot(sol.w)) * y * scale;
  }
  if (ldp_budget(sol.mapping) > cfg.eps_LD + 1e-9) {
    throw Error("EPIC produced a mapping outside the LDP budget");
  }
  return sol;
}

inline std::uint8_t score_decision(double score) { return score > 0.0 ? 1 : 0; }

/// Samples z from the mapping and thresholds <w, Phi(z)>.
inline std::uint8_t predict(const EpicSolution& sol,
                            std::span<const std::uint32_t> x,
                            std::uint64_t seed) {
  if (sol.w.size() == 0) return 0;
  Rng rng(seed);
  const std::size_t nz = sol.mapping.z_size();
  double score = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const auto r = sol.mapping.channel(t).row(x[t]);
    const std::size_t z = rng.sample(std::vector<double>(r.begin(), r.end()));
    score += sol.w[static_cast<Eigen::Index>(t * nz + z)];
  }
  return score_decision(score);
}

struct EpicEvaluation {
  double error_H = 0.0;
  double error_G = 0.0;  // plug-in MAP error on the sampled (g, z) pairs
  EmpiricalBudgets budgets;
};

/// Sends every test sample through the mapping once (seeded per sample) and
/// scores the classifier and the best G detector on the outputs.
inline EpicEvaluation evaluate(const EpicSolution& sol, const Dataset& test,
                               std::uint64_t seed) {
  test.validate();
  const std::size_t nz = sol.mapping.z_size();
  std::vector<std::pair<std::size_t, std::size_t>> gz;
  std::size_t wrong = 0;
  std::map<std::size_t, std::vector<double>> counts;
  for (std::size_t i = 0; i < test.n(); ++i) {
    Rng rng(derive_seed(seed, i));
    std::size_t zi = 0;
    double score = 0.0;
    for (std::size_t t = 0; t < test.s; ++t) {
      const auto r = sol.mapping.channel(t).row(test.at(i, t));
      const std::size_t z = rng.sample(std::vector<double>(r.begin(), r.end()));
      zi = zi * nz + z;
      if (sol.w.size() > 0) score += sol.w[static_cast<Eigen::Index>(t * nz + z)];
    }
    if (score_decision(score) != test.h[i]) ++wrong;
    gz.emplace_back(test.g[i], zi);
    auto& c = counts[zi];
    c.resize(test.g_count(), 0.0);
    c[test.g[i]] += 1.0;
  }
  double hit = 0.0;
  for (const auto& [z, c] : counts) hit += *std::max_element(c.begin(), c.end());
  EpicEvaluation ev;
  const double n = static_cast<double>(test.n());
  ev.error_H = static_cast<double>(wrong) / n;
  ev.error_G = 1.0 - hit / n;
  ev.budgets = empirical_budgets(gz, sol.mapping);
  return ev;
}

}  // namespace privdet
