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
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "privdet/channels.hpp"
#include "privdet/core.hpp"

namespace privdet {

struct Alphabet {
  std::string name;
  std::size_t size = 1;
};

/// H is binary; G = (G_1..G_q) is a bit vector packed into an integer with
/// G_1 as the most significant bit.
class HypothesisSpace {
 public:
  explicit HypothesisSpace(std::size_t q) : q_(q) {
    if (q == 0 || q > 20) {
      throw InvalidArgument("q must be in [1, 20], got " + std::to_string(q));
    }
  }

  std::size_t q() const { return q_; }
  std::size_t g_count() const { return std::size_t{1} << q_; }
  std::size_t hg_count() const { return 2 * g_count(); }
  std::size_t hg(std::size_t h, std::size_t g) const {
    return h * g_count() + g;
  }

  std::size_t component(std::size_t g, std::size_t j) const {
    return (g >> (q_ - 1 - j)) & 1u;
  }

  static bool neighbors(std::size_t a, std::size_t b) {
    return std::popcount(a ^ b) == 1;
  }

 private:
  std::size_t q_;
};

/// Dense probability table with named-by-position axes.
class Table {
 public:
  Table() = default;
  Table(std::vector<std::size_t> dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    std::size_t n = 1;
    for (auto d : dims_) n *= d;
    if (n != data_.size()) throw DimensionError("table data/dims mismatch");
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<double>& data() const { return data_; }
  std::size_t rank() const { return dims_.size(); }
  double total() const {
    return std::accumulate(data_.begin(), data_.end(), 0.0);
  }

  double at(const std::vector<std::size_t>& idx) const {
    return data_.at(flat(idx));
  }

  // Sums out every axis not listed in `keep`; kept axes appear in the order
  // given.
  Table marginal(const std::vector<std::size_t>& keep) const {
    for (auto a : keep) {
      if (a >= dims_.size()) throw InvalidArgument("unknown table axis");
    }
    std::vector<std::size_t> out_dims;
    for (auto a : keep) out_dims.push_back(dims_[a]);
    std::vector<std::size_t> out_stride(keep.size(), 1);
    for (std::size_t k = keep.size(); k-- > 1;) {
      out_stride[k - 1] = out_stride[k] * out_dims[k];
    }
    std::size_t out_n = 1;
    for (auto d : out_dims) out_n *= d;
    std::vector<double> out(out_n, 0.0);
    std::vector<std::size_t> idx(dims_.size(), 0);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      std::size_t o = 0;
      for (std::size_t k = 0; k < keep.size(); ++k) {
        o += idx[keep[k]] * out_stride[k];
      }
      out[o] += data_[i];
      for (std::size_t a = dims_.size(); a-- > 0;) {
        if (++idx[a] < dims_[a]) break;
        idx[a] = 0;
      }
    }
    return Table(std::move(out_dims), std::move(out));
  }

 private:
  std::size_t flat(const std::vector<std::size_t>& idx) const {
    if (idx.size() != dims_.size()) throw DimensionError("index rank");
    std::size_t f = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a) {
      if (idx[a] >= dims_[a]) throw DimensionError("index out of range");
      f = f * dims_[a] + idx[a];
    }
    return f;
  }

  std::vector<std::size_t> dims_;
  std::vector<double> data_;
};

enum class VarKind { kH, kG, kComponent };

/// A random variable of a model (H, G, X_t) or pushed model (H, G, Z_t).
struct Variable {
  VarKind kind = VarKind::kH;
  std::size_t index = 0;  // sensor index for kComponent, 0-based

  static Variable h() { return {VarKind::kH, 0}; }
  static Variable g() { return {VarKind::kG, 0}; }
  static Variable component(std::size_t t) { return {VarKind::kComponent, t}; }

  // Accepts "H", "G", "X3"/"Z3" (1-based sensor number).
  static Variable parse(const std::string& name) {
    if (name == "H" || name == "h") return h();
    if (name == "G" || name == "g") return g();
    if (name.size() >= 2 && (name[0] == 'X' || name[0] == 'Z' ||
                             name[0] == 'x' || name[0] == 'z' ||
                             name[0] == 'Y' || name[0] == 'y')) {
      const std::string digits = name.substr(1);
      if (std::all_of(digits.begin(), digits.end(),
                      [](char c) { return c >= '0' && c <= '9'; })) {
        const auto n = std::stoul(digits);
        if (n >= 1) return component(n - 1);
      }
    }
    throw InvalidArgument("unknown variable '" + name + "'");
  }
};

namespace detail {

// Axis position of a variable in the canonical (H, G, C_1..C_s) table.
inline std::size_t axis_of(const Variable& v, std::size_t s) {
  switch (v.kind) {
    case VarKind::kH:
      return 0;
    case VarKind::kG:
      return 1;
    case VarKind::kComponent:
      if (v.index >= s) {
        throw InvalidArgument("unknown variable: sensor " +
                              std::to_string(v.index + 1) + " of " +
                              std::to_string(s));
      }
      return 2 + v.index;
  }
  throw InvalidArgument("unknown variable");
}

inline void check_distribution(const std::vector<double>& p, double tol,
                               const std::string& what) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      throw NormalizationError(what + ": entry " + std::to_string(i) +
                               " is " + format_double(p[i]) +
                               " (must be a nonnegative probability)");
    }
    total += p[i];
  }
  if (std::abs(total - 1.0) > tol) {
    throw NormalizationError(what + ": mass sums to " + format_double(total) +
                             " (deficit " + format_double(1.0 - total) + ")");
  }
}

// Applies a channel along one axis of a row-major tensor. dims[axis] must be
// the channel input size; it becomes the output size.
inline std::vector<double> apply_channel_axis(const std::vector<double>& in,
                                              std::vector<std::size_t>& dims,
                                              std::size_t axis,
                                              const SensorChannel& ch) {
  if (dims[axis] != ch.x_size()) {
    throw DimensionError("channel input alphabet does not match axis");
  }
  std::size_t pre = 1, post = 1;
  for (std::size_t a = 0; a < axis; ++a) pre *= dims[a];
  for (std::size_t a = axis + 1; a < dims.size(); ++a) post *= dims[a];
  const std::size_t nx = ch.x_size(), nz = ch.z_size();
  if (pre * nz * post > kMaxCells) {
    throw TooLargeError("push-forward table exceeds the cell limit");
  }
  std::vector<double> out(pre * nz * post, 0.0);
  for (std::size_t i = 0; i < pre; ++i) {
    for (std::size_t x = 0; x < nx; ++x) {
      const double* src = in.data() + (i * nx + x) * post;
      for (std::size_t z = 0; z < nz; ++z) {
        const double w = ch(x, z);
        if (w == 0.0) continue;
        double* dst = out.data() + (i * nz + z) * post;
        for (std::size_t j = 0; j < post; ++j) dst[j] += w * src[j];
      }
    }
  }
  dims[axis] = nz;
  return out;
}

}  // namespace detail

enum class ModelForm { kFull, kCondIndep };

inline const char* to_string(ModelForm f) {
  return f == ModelForm::kFull ? "full" : "cond_indep";
}

/// Discrete joint law of (H, G, X_1..X_s). The prior p(h,g) is indexed by
/// hg = h * 2^q + g. In kCondIndep form each sensor has its own table
/// p(x_t | h, g) laid out [hg][x]; in kFull form a single table p(x | h, g)
/// over the whole observation vector is laid out [hg][x-vector].
class JointModel {
 public:
  static JointModel cond_indep(std::size_t q, std::size_t x_size,
                               std::vector<double> prior,
                               std::vector<std::vector<double>> conditionals,
                               double tol = kInputTol) {
    JointModel m(ModelForm::kCondIndep, conditionals.size(), x_size, q);
    if (conditionals.empty()) throw InvalidArgument("model has no sensors");
    m.prior_ = std::move(prior);
    m.conditionals_ = std::move(conditionals);
    m.validate(tol);
    return m;
  }

  static JointModel full(std::size_t s, std::size_t x_size, std::size_t q,
                         std::vector<double> prior,
                         std::vector<double> conditional,
                         double tol = kInputTol) {
    JointModel m(ModelForm::kFull, s, x_size, q);
    if (s == 0) throw InvalidArgument("model has no sensors");
    m.prior_ = std::move(prior);
    m.conditionals_.push_back(std::move(conditional));
    m.validate(tol);
    return m;
  }

  // From a joint tensor p(h, g, x-vector) laid out [hg][x]. Rows of
  // zero-mass hypotheses get a uniform conditional.
  static JointModel from_joint(std::size_t s, std::size_t x_size,
                               std::size_t q, const std::vector<double>& joint,
                               double tol = kInputTol) {
    const HypothesisSpace hs(q);
    const std::size_t nx = checked_pow(x_size, s);
    if (joint.size() != hs.hg_count() * nx) {
      throw DimensionError("joint tensor has wrong size");
    }
    detail::check_distribution(joint, tol, "joint tensor");
    std::vector<double> prior(hs.hg_count(), 0.0), cond(joint.size());
    for (std::size_t k = 0; k < hs.hg_count(); ++k) {
      double mass = 0.0;
      for (std::size_t x = 0; x < nx; ++x) mass += joint[k * nx + x];
      prior[k] = mass;
      for (std::size_t x = 0; x < nx; ++x) {
        cond[k * nx + x] = mass > 0.0 ? joint[k * nx + x] / mass
                                      : 1.0 / static_cast<double>(nx);
      }
    }
    return full(s, x_size, q, std::move(prior), std::move(cond),
                std::max(tol, kArithTol));
  }

  ModelForm form() const { return form_; }
  std::size_t s() const { return s_; }
  std::size_t x_size() const { return x_size_; }
  std::size_t q() const { return hyp_.q(); }
  std::size_t g_count() const { return hyp_.g_count(); }
  std::size_t hg_count() const { return hyp_.hg_count(); }
  const HypothesisSpace& hypotheses() const { return hyp_; }

  const std::vector<double>& prior() const { return prior_; }
  double prior(std::size_t hg) const { return prior_[hg]; }
  const std::vector<std::vector<double>>& conditionals() const {
    return conditionals_;
  }

  // p(x_t = x | hg) in kCondIndep form.
  double conditional(std::size_t t, std::size_t hg, std::size_t x) const {
    return conditionals_[t][hg * x_size_ + x];
  }

  std::vector<double> p_h() const {
    std::vector<double> out(2, 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      out[k / g_count()] += prior_[k];
    }
    return out;
  }

  std::vector<double> p_g() const {
    std::vector<double> out(g_count(), 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      out[k % g_count()] += prior_[k];
    }
    return out;
  }

  // p(x_t | hg) laid out [hg][x], for either form.
  std::vector<double> sensor_conditional(std::size_t t) const {
    if (t >= s_) throw InvalidArgument("sensor index out of range");
    if (form_ == ModelForm::kCondIndep) return conditionals_[t];
    const VectorIndex xi(x_size_, s_);
    std::vector<double> out(hg_count() * x_size_, 0.0);
    const auto& c = conditionals_[0];
    for (std::size_t k = 0; k < hg_count(); ++k) {
      for (std::size_t x = 0; x < xi.count(); ++x) {
        out[k * x_size_ + xi.digit(x, t)] += c[k * xi.count() + x];
      }
    }
    return out;
  }

  // p(x-vector | hg) laid out [hg][x-vector], materialized for either form.
  std::vector<double> vector_conditional(std::size_t limit = kMaxCells) const {
    const VectorIndex xi(x_size_, s_, limit);
    if (hg_count() * xi.count() > limit) {
      throw TooLargeError("observation table exceeds the cell limit");
    }
    if (form_ == ModelForm::kFull) return conditionals_[0];
    std::vector<double> out(hg_count() * xi.count());
    for (std::size_t k = 0; k < hg_count(); ++k) {
      // Outer product built sensor by sensor.
      std::vector<double> acc{1.0};
      for (std::size_t t = 0; t < s_; ++t) {
        std::vector<double> next(acc.size() * x_size_);
        for (std::size_t i = 0; i < acc.size(); ++i) {
          for (std::size_t x = 0; x < x_size_; ++x) {
            next[i * x_size_ + x] = acc[i] * conditional(t, k, x);
          }
        }
        acc = std::move(next);
      }
      std::copy(acc.begin(), acc.end(), out.begin() + k * xi.count());
    }
    return out;
  }

  // p(h, g, x-vector) laid out [hg][x-vector].
  std::vector<double> joint(std::size_t limit = kMaxCells) const {
    auto out = vector_conditional(limit);
    const std::size_t nx = out.size() / hg_count();
    for (std::size_t k = 0; k < hg_count(); ++k) {
      for (std::size_t x = 0; x < nx; ++x) out[k * nx + x] *= prior_[k];
    }
    return out;
  }

  // p_X over the observation vectors.
  std::vector<double> p_x(std::size_t limit = kMaxCells) const {
    const auto j = joint(limit);
    const std::size_t nx = j.size() / hg_count();
    std::vector<double> out(nx, 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      for (std::size_t x = 0; x < nx; ++x) out[x] += j[k * nx + x];
    }
    return out;
  }

  JointModel to_full(std::size_t limit = kMaxCells) const {
    if (form_ == ModelForm::kFull) return *this;
    return full(s_, x_size_, q(), prior_, vector_conditional(limit),
                kArithTol);
  }

  // Axes (H, G, X_1..X_s).
  Table table(std::size_t limit = kMaxCells) const {
    std::vector<std::size_t> dims{2, g_count()};
    for (std::size_t t = 0; t < s_; ++t) dims.push_back(x_size_);
    return Table(std::move(dims), joint(limit));
  }

  std::string id() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    const std::size_t dims[4] = {s_, x_size_, q(),
                                 static_cast<std::size_t>(form_)};
    h = detail::fnv1a(h, dims, sizeof(dims));
    h = detail::fnv1a_doubles(h, prior_);
    for (const auto& c : conditionals_) h = detail::fnv1a_doubles(h, c);
    return detail::hex_id(h);
  }

  friend bool operator==(const JointModel& a, const JointModel& b) {
    return a.form_ == b.form_ && a.s_ == b.s_ && a.x_size_ == b.x_size_ &&
           a.q() == b.q() && a.prior_ == b.prior_ &&
           a.conditionals_ == b.conditionals_;
  }

 private:
  JointModel(ModelForm form, std::size_t s, std::size_t x_size, std::size_t q)
      : form_(form), s_(s), x_size_(x_size), hyp_(q) {
    if (x_size == 0) throw InvalidArgument("observation alphabet is empty");
  }

  void validate(double tol) const {
    if (prior_.size() != hg_count()) {
      throw DimensionError("prior must have " + std::to_string(hg_count()) +
                           " entries (2 x 2^q), got " +
                           std::to_string(prior_.size()));
    }
    detail::check_distribution(prior_, tol, "prior p(h,g)");
    const std::size_t row =
        form_ == ModelForm::kFull ? checked_pow(x_size_, s_) : x_size_;
    if (form_ == ModelForm::kFull && conditionals_.size() != 1) {
      throw DimensionError("full form carries exactly one conditional table");
    }
    for (std::size_t t = 0; t < conditionals_.size(); ++t) {
      const auto& c = conditionals_[t];
      if (c.size() != hg_count() * row) {
        throw DimensionError("conditional table " + std::to_string(t) +
                             " has " + std::to_string(c.size()) +
                             " entries, expected " +
                             std::to_string(hg_count() * row));
      }
      for (std::size_t k = 0; k < hg_count(); ++k) {
        std::vector<double> r(c.begin() + k * row, c.begin() + (k + 1) * row);
        detail::check_distribution(r, tol,
                                   "conditional " + std::to_string(t) +
                                       " row (h,g)=" + std::to_string(k));
      }
    }
  }

  ModelForm form_;
  std::size_t s_;
  std::size_t x_size_;
  HypothesisSpace hyp_;
  std::vector<double> prior_;
  std::vector<std::vector<double>> conditionals_;
};

/// Joint law of (H, G, Z) after pushing a model through a mapping. Data is
/// laid out [hg][z-vector].
class PushedModel {
 public:
  PushedModel(std::size_t s, std::size_t z_size, std::size_t q,
              std::vector<double> data, std::string model_id = {},
              std::string mapping_id = {})
      : s_(s),
        z_size_(z_size),
        hyp_(q),
        zi_(z_size, s),
        data_(std::move(data)),
        model_id_(std::move(model_id)),
        mapping_id_(std::move(mapping_id)) {
    if (data_.size() != hyp_.hg_count() * zi_.count()) {
      throw DimensionError("pushed table has wrong size");
    }
    detail::check_distribution(data_, kArithTol, "pushed model");
  }

  std::size_t s() const { return s_; }
  std::size_t z_size() const { return z_size_; }
  std::size_t q() const { return hyp_.q(); }
  std::size_t g_count() const { return hyp_.g_count(); }
  std::size_t hg_count() const { return hyp_.hg_count(); }
  std::size_t z_count() const { return zi_.count(); }
  const VectorIndex& z_index() const { return zi_; }
  const HypothesisSpace& hypotheses() const { return hyp_; }
  const std::string& model_id() const { return model_id_; }
  const std::string& mapping_id() const { return mapping_id_; }

  const std::vector<double>& data() const { return data_; }
  double at(std::size_t hg, std::size_t z) const {
    return data_[hg * zi_.count() + z];
  }

  // [h][z]
  std::vector<double> p_hz() const {
    const std::size_t nz = z_count();
    std::vector<double> out(2 * nz, 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      const std::size_t h = k / g_count();
      for (std::size_t z = 0; z < nz; ++z) out[h * nz + z] += at(k, z);
    }
    return out;
  }

  // [g][z]
  std::vector<double> p_gz() const {
    const std::size_t nz = z_count();
    std::vector<double> out(g_count() * nz, 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      const std::size_t g = k % g_count();
      for (std::size_t z = 0; z < nz; ++z) out[g * nz + z] += at(k, z);
    }
    return out;
  }

  std::vector<double> p_z() const {
    const std::size_t nz = z_count();
    std::vector<double> out(nz, 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      for (std::size_t z = 0; z < nz; ++z) out[z] += at(k, z);
    }
    return out;
  }

  std::vector<double> p_hg() const {
    std::vector<double> out(hg_count(), 0.0);
    for (std::size_t k = 0; k < hg_count(); ++k) {
      for (std::size_t z = 0; z < z_count(); ++z) out[k] += at(k, z);
    }
    return out;
  }

  std::vector<double> p_g() const {
    std::vector<double> out(g_count(), 0.0);
    const auto hg = p_hg();
    for (std::size_t k = 0; k < hg_count(); ++k) out[k % g_count()] += hg[k];
    return out;
  }

  std::vector<double> p_h() const {
    std::vector<double> out(2, 0.0);
    const auto hg = p_hg();
    for (std::size_t k = 0; k < hg_count(); ++k) out[k / g_count()] += hg[k];
    return out;
  }

  // Axes (H, G, Z_1..Z_s).
  Table table() const {
    std::vector<std::size_t> dims{2, g_count()};
    for (std::size_t t = 0; t < s_; ++t) dims.push_back(z_size_);
    return Table(std::move(dims), data_);
  }

 private:
  std::size_t s_;
  std::size_t z_size_;
  HypothesisSpace hyp_;
  VectorIndex zi_;
  std::vector<double> data_;
  std::string model_id_;
  std::string mapping_id_;
};

namespace detail {

inline void check_mapping_fits(const JointModel& model,
                               const NetworkMapping& mapping) {
  if (mapping.size() != model.s()) {
    throw DimensionError("mapping has " + std::to_string(mapping.size()) +
                         " sensors, model has " + std::to_string(model.s()));
  }
  if (mapping.x_size() != model.x_size()) {
    throw DimensionError("mapping input alphabet (" +
                         std::to_string(mapping.x_size()) +
                         ") does not match the model (" +
                         std::to_string(model.x_size()) + ")");
  }
}

// m[hg][z] = sum_x p_t(z|x) p(x_t = x | hg), for a cond-indep model.
inline std::vector<double> sensor_push(const JointModel& model, std::size_t t,
                                       const SensorChannel& ch) {
  const std::size_t nz = ch.z_size(), nx = model.x_size();
  std::vector<double> m(model.hg_count() * nz, 0.0);
  for (std::size_t k = 0; k < model.hg_count(); ++k) {
    for (std::size_t x = 0; x < nx; ++x) {
      const double px = model.conditional(t, k, x);
      if (px == 0.0) continue;
      for (std::size_t z = 0; z < nz; ++z) m[k * nz + z] += px * ch(x, z);
    }
  }
  return m;
}

// Outer product over sensors of per-sensor tables [hg][z_t], scaled by w[hg].
inline std::vector<double> product_over_sensors(
    const std::vector<std::vector<double>>& per_sensor, std::size_t hg_count,
    std::size_t nz, const std::vector<double>& weight) {
  const std::size_t s = per_sensor.size();
  const std::size_t total = checked_pow(nz, s);
  if (hg_count * total > kMaxCells) {
    throw TooLargeError("pushed table exceeds the cell limit");
  }
  std::vector<double> out(hg_count * total);
  for (std::size_t k = 0; k < hg_count; ++k) {
    std::vector<double> acc{weight[k]};
    for (std::size_t t = 0; t < s; ++t) {
      std::vector<double> next(acc.size() * nz);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        for (std::size_t z = 0; z < nz; ++z) {
          next[i * nz + z] = acc[i] * per_sensor[t][k * nz + z];
        }
      }
      acc = std::move(next);
    }
    std::copy(acc.begin(), acc.end(), out.begin() + k * total);
  }
  return out;
}

// Pushes rows [hg][x-vector] of a full-form table through every channel.
inline std::vector<double> push_full_rows(std::vector<double> rows,
                                          std::size_t hg_count,
                                          std::size_t s,
                                          std::size_t x_size,
                                          const NetworkMapping& mapping) {
  std::vector<std::size_t> dims{hg_count};
  for (std::size_t t = 0; t < s; ++t) dims.push_back(x_size);
  for (std::size_t t = 0; t < s; ++t) {
    rows = apply_channel_axis(rows, dims, t + 1, mapping.channel(t));
  }
  return rows;
}

}  // namespace detail

/// p(h, g, z) = sum_x p(z|x) p(h, g, x). Cond-indep models are pushed factor
/// by factor without enumerating the observation space.
inline PushedModel push_forward(const JointModel& model,
                                const NetworkMapping& mapping) {
  detail::check_mapping_fits(model, mapping);
  const std::size_t nz = mapping.z_size();
  std::vector<double> data;
  if (model.form() == ModelForm::kCondIndep) {
    std::vector<std::vector<double>> per;
    for (std::size_t t = 0; t < model.s(); ++t) {
      per.push_back(detail::sensor_push(model, t, mapping.channel(t)));
    }
    data = detail::product_over_sensors(per, model.hg_count(), nz,
                                        model.prior());
  } else {
    data = detail::push_full_rows(model.joint(), model.hg_count(), model.s(),
                                  model.x_size(), mapping);
  }
  return PushedModel(model.s(), nz, model.q(), std::move(data), model.id(),
                     mapping.id());
}

/// The model of (H, G, Y) obtained by passing X through a first-stage
/// mapping. Stays cond-indep when the source is.
inline JointModel push_model(const JointModel& model,
                             const NetworkMapping& mapping) {
  detail::check_mapping_fits(model, mapping);
  if (model.form() == ModelForm::kCondIndep) {
    std::vector<std::vector<double>> cond;
    for (std::size_t t = 0; t < model.s(); ++t) {
      cond.push_back(detail::sensor_push(model, t, mapping.channel(t)));
    }
    return JointModel::cond_indep(model.q(), mapping.z_size(), model.prior(),
                                  std::move(cond), kArithTol);
  }
  auto rows = detail::push_full_rows(model.conditionals()[0],
                                     model.hg_count(), model.s(),
                                     model.x_size(), mapping);
  return JointModel::full(model.s(), mapping.z_size(), model.q(),
                          model.prior(), std::move(rows), kArithTol);
}

/// Marginal table over the requested variables, in the order requested.
inline Table marginal(const PushedModel& pushed,
                      const std::vector<Variable>& vars) {
  std::vector<std::size_t> keep;
  for (const auto& v : vars) keep.push_back(detail::axis_of(v, pushed.s()));
  return pushed.table().marginal(keep);
}

inline Table marginal(const JointModel& model,
                      const std::vector<Variable>& vars) {
  std::vector<std::size_t> keep;
  for (const auto& v : vars) keep.push_back(detail::axis_of(v, model.s()));
  if (model.form() == ModelForm::kFull) return model.table().marginal(keep);

  // Cond-indep: only materialize the requested sensors.
  std::vector<std::size_t> sensors;
  for (const auto& v : vars) {
    if (v.kind == VarKind::kComponent) sensors.push_back(v.index);
  }
  std::sort(sensors.begin(), sensors.end());
  sensors.erase(std::unique(sensors.begin(), sensors.end()), sensors.end());
  std::vector<std::vector<double>> per;
  for (auto t : sensors) per.push_back(model.conditionals()[t]);
  std::vector<double> data =
      per.empty() ? model.prior()
                  : detail::product_over_sensors(per, model.hg_count(),
                                                 model.x_size(), model.prior());
  std::vector<std::size_t> dims{2, model.g_count()};
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    dims.push_back(model.x_size());
  }
  std::vector<std::size_t> sub_keep;
  for (const auto& v : vars) {
    if (v.kind == VarKind::kH) {
      sub_keep.push_back(0);
    } else if (v.kind == VarKind::kG) {
      sub_keep.push_back(1);
    } else {
      const auto pos = std::find(sensors.begin(), sensors.end(), v.index) -
                       sensors.begin();
      sub_keep.push_back(2 + static_cast<std::size_t>(pos));
    }
  }
  return Table(std::move(dims), std::move(data)).marginal(sub_keep);
}

struct CorrelatedModelOptions {
  double p_h1 = 0.5;
  double p_g1 = 0.5;
  // Relative jitter applied to the five noise weights of each sensor.
  double noise_jitter = 0.5;
  // Mass spread uniformly over the alphabet so every symbol has support.
  double floor = 1e-3;
  // Sensors whose observation depends on H only: p(x|h,g) = sum_g' p(g'|h)
  // p(x|h,g').
  std::vector<std::size_t> g_independent;
};

/// 2x2 prior of (H, G) with the given marginals and Pearson correlation.
inline std::vector<double> correlated_prior(double p_h1, double p_g1,
                                            double corr) {
  if (!(corr >= -1.0 && corr <= 1.0)) {
    throw InvalidArgument("correlation must lie in [-1, 1]");
  }
  if (!(p_h1 > 0.0 && p_h1 < 1.0 && p_g1 > 0.0 && p_g1 < 1.0)) {
    throw InvalidArgument("marginals must lie strictly inside (0, 1)");
  }
  const double a = p_h1, b = p_g1;
  const double c = corr * std::sqrt(a * (1 - a) * b * (1 - b));
  // hg order: (0,0), (0,1), (1,0), (1,1)
  std::vector<double> p{(1 - a) * (1 - b) + c, (1 - a) * b - c, a * (1 - b) - c,
                        a * b + c};
  for (auto& v : p) {
    if (v < -1e-15) {
      throw InfeasibleError("correlation " + format_double(corr) +
                            " is infeasible for marginals P(H=1)=" +
                            format_double(a) + ", P(G=1)=" + format_double(b));
    }
    if (v < 0.0) v = 0.0;
  }
  return p;
}

/// Per-(h,g) observation law in the shifted-noise family: level L(h,g) in
/// {-3,-1,1,3} plus noise on {-2..2}, with the [-5,5] range mapped linearly
/// onto x_size symbols.
inline std::vector<double> shifted_noise_conditional(
    std::size_t x_size, const std::vector<double>& noise_weights,
    double floor) {
  static constexpr double kLevels[4] = {-3.0, -1.0, 1.0, 3.0};
  std::vector<double> out(4 * x_size, 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    for (int n = -2; n <= 2; ++n) {
      const double w = noise_weights[static_cast<std::size_t>(n + 2)];
      if (x_size == 1) {
        out[k * x_size] += w;
        continue;
      }
      const double pos = (kLevels[k] + n + 5.0) / 10.0 *
                         static_cast<double>(x_size - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(lo);
      out[k * x_size + std::min(lo, x_size - 1)] += w * (1.0 - frac);
      if (frac > 0.0) out[k * x_size + std::min(lo + 1, x_size - 1)] += w * frac;
    }
    for (std::size_t x = 0; x < x_size; ++x) {
      out[k * x_size + x] = (1.0 - floor) * out[k * x_size + x] +
                            floor / static_cast<double>(x_size);
    }
  }
  return out;
}

/// A cond-indep model with binary G whose (H, G) correlation is `target_corr`
/// and whose sensors follow seeded variants of the shifted-noise family.
inline JointModel generate_correlated_model(
    std::uint64_t seed, std::size_t s, std::size_t x_size, std::size_t q,
    double target_corr, const CorrelatedModelOptions& opts = {}) {
  if (q != 1) throw InvalidArgument("correlated generator supports q = 1");
  if (s == 0 || x_size == 0) throw InvalidArgument("empty model requested");
  auto prior = correlated_prior(opts.p_h1, opts.p_g1, target_corr);
  Rng rng(seed);
  std::vector<std::vector<double>> cond;
  for (std::size_t t = 0; t < s; ++t) {
    std::vector<double> w(5);
    double total = 0.0;
    for (auto& v : w) {
      v = 1.0 + opts.noise_jitter * (2.0 * rng.uniform() - 1.0);
      total += v;
    }
    for (auto& v : w) v /= total;
    auto c = shifted_noise_conditional(x_size, w, opts.floor);
    if (std::find(opts.g_independent.begin(), opts.g_independent.end(), t) !=
        opts.g_independent.end()) {
      std::vector<double> mixed(c.size(), 0.0);
      for (std::size_t h = 0; h < 2; ++h) {
        const double ph = prior[2 * h] + prior[2 * h + 1];
        for (std::size_t g = 0; g < 2; ++g) {
          const double w_g = prior[2 * h + g] / ph;
          for (std::size_t x = 0; x < x_size; ++x) {
            const double v = w_g * c[(2 * h + g) * x_size + x];
            mixed[(2 * h) * x_size + x] += v;
            mixed[(2 * h + 1) * x_size + x] += v;
          }
        }
      }
      c = std::move(mixed);
    }
    cond.push_back(std::move(c));
  }
  return JointModel::cond_indep(1, x_size, std::move(prior), std::move(cond),
                                kArithTol);
}

/// A generic random model for property tests: Dirichlet(1) prior and rows.
inline JointModel random_model(std::uint64_t seed, std::size_t s,
                               std::size_t x_size, std::size_t q,
                               ModelForm form = ModelForm::kCondIndep) {
  Rng rng(seed);
  const HypothesisSpace hs(q);
  auto prior = rng.simplex(hs.hg_count());
  if (form == ModelForm::kCondIndep) {
    std::vector<std::vector<double>> cond;
    for (std::size_t t = 0; t < s; ++t) {
      std::vector<double> c;
      for (std::size_t k = 0; k < hs.hg_count(); ++k) {
        auto r = rng.simplex(x_size);
        c.insert(c.end(), r.begin(), r.end());
      }
      cond.push_back(std::move(c));
    }
    return JointModel::cond_indep(q, x_size, std::move(prior), std::move(cond),
                                  kArithTol);
  }
  const std::size_t nx = checked_pow(x_size, s);
  std::vector<double> c;
  for (std::size_t k = 0; k < hs.hg_count(); ++k) {
    auto r = rng.simplex(nx);
    c.insert(c.end(), r.begin(), r.end());
  }
  return JointModel::full(s, x_size, q, std::move(prior), std::move(c),
                          kArithTol);
}

}  // namespace privdet
