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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace privdet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerance for validating probabilities supplied by callers.
inline constexpr double kInputTol = 1e-12;
// Tolerance for probabilities produced by arithmetic inside the library.
inline constexpr double kArithTol = 1e-10;

// Largest number of cells any routine is allowed to materialize.
inline constexpr std::size_t kMaxCells = std::size_t{1} << 26;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sizes of two objects that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A probability table violates nonnegativity or normalization.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A computation would need more than kMaxCells table entries.
class TooLargeError : public Error {
 public:
  using Error::Error;
};

// base^exp, throwing TooLargeError when the result exceeds `limit`.
inline std::size_t checked_pow(std::size_t base, std::size_t exp,
                               std::size_t limit = kMaxCells) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && out > limit / base) {
      throw TooLargeError("table of size " + std::to_string(base) + "^" +
                          std::to_string(exp) + " exceeds the cell limit");
    }
    out *= base;
  }
  return out;
}

// Mixed-radix codec for vectors in {0..radix-1}^len. Component 0 is the most
// significant digit, so flat tables are row-major in sensor order.
class VectorIndex {
 public:
  VectorIndex(std::size_t radix, std::size_t len,
              std::size_t limit = kMaxCells)
      : radix_(radix), len_(len), count_(checked_pow(radix, len, limit)) {
    stride_.assign(len, 1);
    for (std::size_t t = len; t-- > 1;) stride_[t - 1] = stride_[t] * radix;
  }

  std::size_t radix() const { return radix_; }
  std::size_t length() const { return len_; }
  std::size_t count() const { return count_; }
  std::size_t stride(std::size_t t) const { return stride_[t]; }

  std::size_t digit(std::size_t index, std::size_t t) const {
    return (index / stride_[t]) % radix_;
  }

  std::size_t with_digit(std::size_t index, std::size_t t,
                         std::size_t value) const {
    return index - digit(index, t) * stride_[t] + value * stride_[t];
  }

  std::vector<std::size_t> decode(std::size_t index) const {
    std::vector<std::size_t> out(len_);
    for (std::size_t t = 0; t < len_; ++t) out[t] = digit(index, t);
    return out;
  }

  std::size_t encode(const std::vector<std::size_t>& digits) const {
    if (digits.size() != len_) {
      throw DimensionError("vector length " + std::to_string(digits.size()) +
                           " does not match " + std::to_string(len_));
    }
    std::size_t out = 0;
    for (std::size_t t = 0; t < len_; ++t) {
      if (digits[t] >= radix_) {
        throw DimensionError("symbol " + std::to_string(digits[t]) +
                             " outside alphabet of size " +
                             std::to_string(radix_));
      }
      out += digits[t] * stride_[t];
    }
    return out;
  }

 private:
  std::size_t radix_;
  std::size_t len_;
  std::size_t count_;
  std::vector<std::size_t> stride_;
};

// log(a/b) under the support convention used by every budget: 0/0 is
// undefined (NaN, callers skip it), a/0 with a > 0 is +inf.
inline double log_ratio(double a, double b) {
  if (a <= 0.0 && b <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (b <= 0.0) return kInf;
  if (a <= 0.0) return -kInf;
  const double r = a / b;
  // Ratios a few ulps from 1 are roundoff in the marginals.
  if (std::abs(r - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon()) {
    return 0.0;
  }
  return std::log(r);
}

// a*log(a/b) with 0 log 0 = 0.
inline double xlogy_ratio(double a, double b) {
  if (a <= 0.0) return 0.0;
  if (b <= 0.0) return kInf;
  return a * std::log(a / b);
}

// max(acc, v) that ignores NaN.
inline double fold_max(double acc, double v) {
  return std::isnan(v) ? acc : (v > acc ? v : acc);
}

// Deterministic, platform-independent RNG. std::uniform_real_distribution is
// implementation-defined, so doubles are built directly from 53 bits.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }

  double exponential() { return -std::log(uniform_open0()); }

  // Uniform integer on [0, n).
  std::size_t below(std::size_t n) {
    if (n == 0) throw InvalidArgument("Rng::below(0)");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  std::size_t sample(const std::vector<double>& weights) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) return i;
    }
    return 0;
  }

  // A uniform draw from the probability simplex of the given dimension.
  std::vector<double> simplex(std::size_t dim) {
    std::vector<double> out(dim);
    double total = 0.0;
    for (auto& v : out) {
      v = exponential();
      total += v;
    }
    for (auto& v : out) v /= total;
    return out;
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  Rng r(seed ^ (0xD1B54A32D192ED03ULL * (salt + 1)));
  return r.next();
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace privdet
