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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "privdet/lp.hpp"

namespace privdet {
namespace {

TEST(SolveLp, SingleLowerBound) {
  LinearProgram lp;
  lp.objective = {1.0};
  lp.add({1.0}, Sense::kGe, 3.0);
  const auto r = solve_lp(lp);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.x[0], 3.0, 1e-12);
  EXPECT_NEAR(r.objective, 3.0, 1e-12);
}

TEST(SolveLp, SimplexPutsMassOnArgmin) {
  LinearProgram lp;
  lp.objective = {0.4, -0.2, 0.1, 0.3};
  lp.add({1, 1, 1, 1}, Sense::kEq, 1.0);
  const auto r = solve_lp(lp);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.x[1], 1.0, 1e-12);
  EXPECT_NEAR(r.objective, -0.2, 1e-12);
}

TEST(SolveLp, DistinguishesInfeasibleAndUnbounded) {
  LinearProgram inf;
  inf.objective = {1.0, 1.0};
  inf.add({1, 1}, Sense::kLe, 1.0);
  inf.add({1, 1}, Sense::kGe, 2.0);
  EXPECT_EQ(solve_lp(inf).status, LpStatus::kInfeasible);

  LinearProgram unb;
  unb.objective = {-1.0, 0.0};
  unb.add({1, -1}, Sense::kLe, 1.0);
  EXPECT_EQ(solve_lp(unb).status, LpStatus::kUnbounded);
}

TEST(SolveLp, RejectsRaggedConstraints) {
  LinearProgram lp;
  lp.objective = {1.0, 2.0};
  lp.add({1.0}, Sense::kLe, 1.0);
  EXPECT_THROW(solve_lp(lp), DimensionError);
}

TEST(SolveLp, DegenerateTiesTerminate) {
  // Many redundant constraints through the optimum.
  LinearProgram lp;
  lp.objective = {-1, -1};
  for (int k = 1; k <= 20; ++k) lp.add({1.0 * k, 1.0 * k}, Sense::kLe, 1.0 * k);
  lp.add({1, 0}, Sense::kLe, 1);
  lp.add({0, 1}, Sense::kLe, 1);
  const auto r = solve_lp(lp);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.objective, -1.0, 1e-12);
}

TEST(SolveLp, MatchesVertexEnumeration) {
  Rng rng(2024);
  int solved = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(3), m = 1 + rng.below(4);
    LinearProgram lp;
    for (std::size_t j = 0; j < n; ++j) lp.objective.push_back(rng.uniform() * 2 - 1);
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> a(n);
      for (auto& v : a) v = rng.uniform() * 2 - 1;
      const auto sense = static_cast<Sense>(rng.below(3));
      lp.add(a, sense, rng.uniform() * 2 - 0.5);
    }
    // Box keeps every feasible program bounded.
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      lp.add(e, Sense::kLe, 2.0);
    }
    const double want = oracle::lp_min_by_vertices(lp);
    const auto r = solve_lp(lp);
    if (std::isinf(want)) {
      EXPECT_EQ(r.status, LpStatus::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_TRUE(r.ok()) << "trial " << trial << ": " << to_string(r.status);
    EXPECT_NEAR(r.objective, want, 1e-8) << "trial " << trial;
    ++solved;
  }
  EXPECT_GT(solved, 100);
}

TEST(SolveLp, RatioConstraintsWithLargeCoefficients) {
  // The per-sensor LDP program at eps = 10: badly scaled but well posed.
  const double e = std::exp(10.0);
  LinearProgram lp;
  lp.objective = {0.3, -0.1, -0.2, 0.25, 0.1, -0.05};
  for (int x = 0; x < 3; ++x) {
    std::vector<double> row(6, 0.0);
    row[2 * x] = row[2 * x + 1] = 1.0;
    lp.add(row, Sense::kEq, 1.0);
  }
  for (int z = 0; z < 2; ++z) {
    for (int x = 0; x < 3; ++x) {
      for (int x2 = 0; x2 < 3; ++x2) {
        if (x == x2) continue;
        std::vector<double> row(6, 0.0);
        row[2 * x + z] = 1.0;
        row[2 * x2 + z] = -e;
        lp.add(row, Sense::kLe, 0.0);
      }
    }
  }
  const auto r = solve_lp(lp);
  ASSERT_TRUE(r.ok()) << to_string(r.status);
  EXPECT_NEAR(r.objective, oracle::lp_min_by_vertices(lp, 1e-7), 1e-8);
  for (int x = 0; x < 3; ++x) EXPECT_NEAR(r.x[2 * x] + r.x[2 * x + 1], 1.0, 1e-9);
}

TEST(SolveLp, Deterministic) {
  LinearProgram lp;
  lp.objective = {1, 1, 1};
  lp.add({1, 1, 1}, Sense::kEq, 1);
  const auto a = solve_lp(lp), b = solve_lp(lp);
  EXPECT_EQ(a.x, b.x);
}

}  // namespace
}  // namespace privdet
