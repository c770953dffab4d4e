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
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privdet/core.hpp"

namespace privdet {

/// A sensor's randomized privacy mapping p(z|x), stored row-major with one
/// row per input symbol. Immutable once constructed.
class SensorChannel {
 public:
  SensorChannel() = default;

  SensorChannel(std::size_t x_size, std::size_t z_size,
                std::vector<double> rows, double tol = kInputTol)
      : x_size_(x_size), z_size_(z_size), rows_(std::move(rows)) {
    if (x_size_ == 0 || z_size_ == 0) {
      throw InvalidArgument("channel alphabets must be nonempty");
    }
    if (rows_.size() != x_size_ * z_size_) {
      throw DimensionError("channel has " + std::to_string(rows_.size()) +
                           " entries, expected " +
                           std::to_string(x_size_ * z_size_));
    }
    for (std::size_t x = 0; x < x_size_; ++x) {
      double total = 0.0;
      for (std::size_t z = 0; z < z_size_; ++z) {
        const double p = rows_[x * z_size_ + z];
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw NormalizationError("channel entry p(" + std::to_string(z) +
                                   "|" + std::to_string(x) +
                                   ") = " + format_double(p) +
                                   " is not a probability");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > tol) {
        throw NormalizationError("channel row " + std::to_string(x) +
                                 " sums to " + format_double(total));
      }
    }
  }

  // Clamps tiny negative entries produced by solvers and renormalizes rows.
  static SensorChannel from_solver(std::size_t x_size, std::size_t z_size,
                                   std::vector<double> rows) {
    for (std::size_t x = 0; x < x_size; ++x) {
      double total = 0.0;
      for (std::size_t z = 0; z < z_size; ++z) {
        double& p = rows[x * z_size + z];
        if (p < 0.0) p = 0.0;
        total += p;
      }
      if (total <= 0.0) {
        throw NormalizationError("solver produced an all-zero channel row");
      }
      for (std::size_t z = 0; z < z_size; ++z) rows[x * z_size + z] /= total;
    }
    return SensorChannel(x_size, z_size, std::move(rows), kArithTol);
  }

  static SensorChannel identity(std::size_t n) {
    std::vector<double> rows(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) rows[i * n + i] = 1.0;
    return SensorChannel(n, n, std::move(rows));
  }

  // Every input maps to the same output distribution.
  static SensorChannel constant(std::size_t x_size,
                                const std::vector<double>& row) {
    std::vector<double> rows;
    rows.reserve(x_size * row.size());
    for (std::size_t x = 0; x < x_size; ++x) {
      rows.insert(rows.end(), row.begin(), row.end());
    }
    return SensorChannel(x_size, row.size(), std::move(rows));
  }

  // Point-mass channel x -> map[x].
  static SensorChannel deterministic(const std::vector<std::size_t>& map,
                                     std::size_t z_size) {
    std::vector<double> rows(map.size() * z_size, 0.0);
    for (std::size_t x = 0; x < map.size(); ++x) {
      if (map[x] >= z_size) {
        throw DimensionError("deterministic map target out of range");
      }
      rows[x * z_size + map[x]] = 1.0;
    }
    return SensorChannel(map.size(), z_size, std::move(rows));
  }

  std::size_t x_size() const { return x_size_; }
  std::size_t z_size() const { return z_size_; }

  double operator()(std::size_t x, std::size_t z) const {
    return rows_[x * z_size_ + z];
  }

  std::span<const double> row(std::size_t x) const {
    return {rows_.data() + x * z_size_, z_size_};
  }

  const std::vector<double>& rows() const { return rows_; }

  bool is_deterministic() const {
    return std::all_of(rows_.begin(), rows_.end(),
                       [](double p) { return p == 0.0 || p == 1.0; });
  }

  double l1_distance(const SensorChannel& other) const {
    if (other.x_size_ != x_size_ || other.z_size_ != z_size_) {
      throw DimensionError("channel shapes differ");
    }
    double d = 0.0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      d += std::abs(rows_[i] - other.rows_[i]);
    }
    return d;
  }

  friend bool operator==(const SensorChannel& a, const SensorChannel& b) {
    return a.x_size_ == b.x_size_ && a.z_size_ == b.z_size_ &&
           a.rows_ == b.rows_;
  }

 private:
  std::size_t x_size_ = 0;
  std::size_t z_size_ = 0;
  std::vector<double> rows_;
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(std::uint64_t h,
                                   const std::vector<double>& v) {
  return fnv1a(h, v.data(), v.size() * sizeof(double));
}

inline std::string hex_id(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// The product-form mapping p(z|x) = prod_t p_t(z_t|x_t) over s sensors. All
/// sensors share input and output alphabets.
class NetworkMapping {
 public:
  NetworkMapping() = default;

  explicit NetworkMapping(std::vector<SensorChannel> channels)
      : channels_(std::move(channels)) {
    if (channels_.empty()) throw InvalidArgument("mapping has no sensors");
    for (const auto& c : channels_) {
      if (c.x_size() != channels_[0].x_size() ||
          c.z_size() != channels_[0].z_size()) {
        throw DimensionError("all sensor channels must share alphabets");
      }
    }
  }

  static NetworkMapping replicate(std::size_t s, const SensorChannel& c) {
    return NetworkMapping(std::vector<SensorChannel>(s, c));
  }

  std::size_t size() const { return channels_.size(); }
  std::size_t x_size() const { return channels_.at(0).x_size(); }
  std::size_t z_size() const { return channels_.at(0).z_size(); }

  const SensorChannel& channel(std::size_t t) const { return channels_.at(t); }
  const std::vector<SensorChannel>& channels() const { return channels_; }

  NetworkMapping with_channel(std::size_t t, SensorChannel c) const {
    auto copy = channels_;
    copy.at(t) = std::move(c);
    return NetworkMapping(std::move(copy));
  }

  // p(z|x) for full vectors.
  double likelihood(const std::vector<std::size_t>& z,
                    const std::vector<std::size_t>& x) const {
    double p = 1.0;
    for (std::size_t t = 0; t < channels_.size(); ++t) {
      p *= channels_[t](x[t], z[t]);
    }
    return p;
  }

  double l1_distance(const NetworkMapping& other) const {
    if (other.size() != size()) throw DimensionError("sensor counts differ");
    double d = 0.0;
    for (std::size_t t = 0; t < size(); ++t) {
      d += channels_[t].l1_distance(other.channels_[t]);
    }
    return d;
  }

  std::string id() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto& c : channels_) {
      const std::size_t dims[2] = {c.x_size(), c.z_size()};
      h = detail::fnv1a(h, dims, sizeof(dims));
      h = detail::fnv1a_doubles(h, c.rows());
    }
    return detail::hex_id(h);
  }

  friend bool operator==(const NetworkMapping& a, const NetworkMapping& b) {
    return a.channels_ == b.channels_;
  }

 private:
  std::vector<SensorChannel> channels_;
};

enum class Architecture { kIll, kLip };

inline const char* to_string(Architecture a) {
  return a == Architecture::kIll ? "ill" : "lip";
}

/// Per-sensor concatenation X -> Y -> Z. ILL puts the information-privacy
/// stage first; LIP puts the local-differential-privacy stage first.
struct TwoStageMapping {
  NetworkMapping stage1;
  NetworkMapping stage2;
  Architecture arch = Architecture::kIll;

  void validate() const {
    if (stage1.size() != stage2.size()) {
      throw DimensionError("stages have different sensor counts");
    }
    if (stage1.z_size() != stage2.x_size()) {
      throw DimensionError("stage-1 output alphabet (" +
                           std::to_string(stage1.z_size()) +
                           ") does not match stage-2 input alphabet (" +
                           std::to_string(stage2.x_size()) + ")");
    }
  }
};

// p(z|x) = sum_y second(z|y) first(y|x).
inline SensorChannel compose(const SensorChannel& first,
                             const SensorChannel& second) {
  if (first.z_size() != second.x_size()) {
    throw DimensionError("cannot chain channels: alphabets do not match");
  }
  const std::size_t nx = first.x_size(), ny = first.z_size(),
                    nz = second.z_size();
  std::vector<double> rows(nx * nz, 0.0);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      const double a = first(x, y);
      if (a == 0.0) continue;
      for (std::size_t z = 0; z < nz; ++z) rows[x * nz + z] += a * second(y, z);
    }
  }
  return SensorChannel(nx, nz, std::move(rows), kArithTol);
}

inline NetworkMapping compose(const TwoStageMapping& two_stage) {
  two_stage.validate();
  std::vector<SensorChannel> out;
  out.reserve(two_stage.stage1.size());
  for (std::size_t t = 0; t < two_stage.stage1.size(); ++t) {
    out.push_back(
        compose(two_stage.stage1.channel(t), two_stage.stage2.channel(t)));
  }
  return NetworkMapping(std::move(out));
}

// k-ary randomized response: keep the symbol with probability
// e^eps / (e^eps + k - 1), otherwise report one of the others uniformly.
inline SensorChannel randomized_response(std::size_t k, double eps) {
  if (!(eps >= 0.0)) {
    throw InvalidArgument("randomized response needs eps >= 0, got " +
                          format_double(eps));
  }
  if (k == 0) throw InvalidArgument("alphabet must be nonempty");
  if (std::isinf(eps)) return SensorChannel::identity(k);
  const double r = std::exp(-eps);
  const double denom = 1.0 + static_cast<double>(k - 1) * r;
  const double keep = 1.0 / denom;
  const double other = r / denom;
  std::vector<double> rows(k * k, other);
  for (std::size_t i = 0; i < k; ++i) rows[i * k + i] = keep;
  return SensorChannel(k, k, std::move(rows), kArithTol);
}

inline SensorChannel random_channel(Rng& rng, std::size_t x_size,
                                    std::size_t z_size) {
  std::vector<double> rows;
  rows.reserve(x_size * z_size);
  for (std::size_t x = 0; x < x_size; ++x) {
    const auto r = rng.simplex(z_size);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return SensorChannel(x_size, z_size, std::move(rows), kArithTol);
}

// Rows drawn independently and uniformly from the probability simplex.
inline SensorChannel random_channel(std::uint64_t seed, std::size_t x_size,
                                    std::size_t z_size) {
  Rng rng(seed);
  return random_channel(rng, x_size, z_size);
}

inline NetworkMapping random_mapping(std::uint64_t seed, std::size_t s,
                                     std::size_t x_size, std::size_t z_size) {
  Rng rng(seed);
  std::vector<SensorChannel> out;
  for (std::size_t t = 0; t < s; ++t) {
    out.push_back(random_channel(rng, x_size, z_size));
  }
  return NetworkMapping(std::move(out));
}

}  // namespace privdet
