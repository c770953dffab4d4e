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
#include "privdet/detection.hpp"

namespace privdet {
namespace {

PushedModel from_hz(const std::vector<double>& p_hz, std::size_t nz) {
  // G uniform and independent of (H, Z).
  std::vector<double> d;
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t g = 0; g < 2; ++g) {
      for (std::size_t z = 0; z < nz; ++z) d.push_back(0.5 * p_hz[h * nz + z]);
    }
  }
  return PushedModel(1, nz, 1, d);
}

TEST(FusionRule, IndependentZGivesPriorVote) {
  const auto pushed = from_hz({0.35, 0.35, 0.15, 0.15}, 2);
  const auto rule = optimal_fusion_rule(pushed);
  EXPECT_EQ(rule.decision, (std::vector<std::uint8_t>{0, 0}));
  EXPECT_NEAR(bayes_error_H(pushed), 0.3, 1e-15);
}

TEST(FusionRule, DeterministicZIsIdentityRule) {
  const auto pushed = from_hz({0.6, 0.0, 0.0, 0.4}, 2);
  const auto rule = optimal_fusion_rule(pushed);
  EXPECT_EQ(rule.decision, (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(bayes_error_H(pushed, rule), 0.0);
}

TEST(FusionRule, TiesGoToZero) {
  const auto rule = optimal_fusion_rule(from_hz({0.25, 0.25, 0.25, 0.25}, 2));
  EXPECT_EQ(rule.decision, (std::vector<std::uint8_t>{0, 0}));
}

TEST(FusionRule, HandInstanceMatchesExhaustiveSearch) {
  // The flipped diagonal model: p(h, z) = (0.325, 0.175; 0.175, 0.325).
  const std::vector<double> phz{0.325, 0.175, 0.175, 0.325};
  const auto pushed = from_hz(phz, 2);
  EXPECT_NEAR(bayes_error_H(pushed), oracle::best_rule_error(phz, 2), 1e-15);
  EXPECT_NEAR(bayes_error_H(pushed), 0.35, 1e-15);
}

TEST(FusionRule, OptimalBeatsRandomRules) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto m = random_model(seed, 2, 3, 1);
    const auto pushed = push_forward(m, random_mapping(seed, 2, 3, 3));
    const double best = bayes_error_H(pushed);
    EXPECT_NEAR(best, oracle::best_rule_error(pushed.p_hz(), 9), 1e-12);
    const auto ph = m.p_h();
    EXPECT_LE(best, std::min(ph[0], ph[1]) + 1e-12);
    Rng rng(seed);
    for (int k = 0; k < 50; ++k) {
      FusionRule r{std::vector<std::uint8_t>(9)};
      for (auto& d : r.decision) d = static_cast<std::uint8_t>(rng.below(2));
      EXPECT_LE(best, bayes_error_H(pushed, r) + 1e-15);
    }
  }
}

TEST(BayesErrorH, IndependentUniformIsHalf) {
  const auto pushed = from_hz({0.25, 0.25, 0.25, 0.25}, 2);
  for (std::uint8_t a = 0; a < 2; ++a) {
    for (std::uint8_t b = 0; b < 2; ++b) {
      EXPECT_NEAR(bayes_error_H(pushed, FusionRule{{a, b}}), 0.5, 1e-15);
    }
  }
}

TEST(BayesErrorH, ConstantRuleErrorIsPriorMass) {
  const auto pushed = from_hz({0.1, 0.6, 0.2, 0.1}, 2);
  EXPECT_NEAR(bayes_error_H(pushed, FusionRule::constant(2, 0)), 0.3, 1e-15);
  EXPECT_NEAR(bayes_error_H(pushed, FusionRule::constant(2, 1)), 0.7, 1e-15);
}

TEST(BayesErrorG, Cases) {
  // Independent, uniform, q = 1.
  EXPECT_NEAR(bayes_error_G(PushedModel(1, 2, 1, std::vector<double>(8, 0.125))),
              0.5, 1e-15);
  // Z = G.
  EXPECT_NEAR(bayes_error_G(PushedModel(1, 2, 1, {0.25, 0, 0, 0.25, 0.25, 0, 0, 0.25})),
              0.0, 1e-15);
  // q = 2, independent, uniform.
  EXPECT_NEAR(bayes_error_G(PushedModel(1, 2, 2, std::vector<double>(16, 1.0 / 16))),
              0.75, 1e-15);
}

TEST(MinRisk, IndependentIsHalf) {
  const auto d = min_risk_detector({0.3, 0.7, 0.3, 0.7}, 2, 1);
  EXPECT_NEAR(d.risk, 0.5, 1e-15);
}

TEST(MinRisk, PerfectIndicatorIsZero) {
  const auto d = min_risk_detector({1.0, 0.0, 0.0, 1.0}, 2, 1);
  EXPECT_NEAR(d.risk, 0.0, 1e-15);
}

TEST(MinRisk, RejectsGZeroAndEmptyReference) {
  EXPECT_THROW(min_risk_detector({0.5, 0.5, 0.5, 0.5}, 2, 0), InvalidArgument);
  EXPECT_THROW(min_risk_detector({0.0, 0.0, 0.5, 0.5}, 2, 1), InvalidArgument);
}

TEST(MinRisk, MatchesExhaustiveDetectorSearch) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t q = 1 + seed % 2;
    const auto m = random_model(seed, 1 + seed % 2, 3, q);
    const auto stage1 = random_mapping(seed + 5, m.s(), 3, 2 + seed % 3);
    const auto pushed = push_forward(m, stage1);
    const auto pyg = conditional_given_g(pushed);
    const std::size_t ny = pushed.z_count();
    ASSERT_LE(ny, 16u);
    for (std::size_t g = 1; g < pushed.g_count(); ++g) {
      EXPECT_NEAR(min_risk_detector(pushed, g).risk, oracle::min_risk(pyg, ny, g),
                  1e-12);
    }
  }
}

TEST(MinRisk, InvariantUnderRelabeling) {
  const std::vector<double> p{0.1, 0.5, 0.4, 0.3, 0.3, 0.4};
  const std::vector<double> perm{0.4, 0.1, 0.5, 0.4, 0.3, 0.3};
  EXPECT_NEAR(min_risk_detector(p, 3, 1).risk, min_risk_detector(perm, 3, 1).risk,
              1e-15);
}

TEST(Theta, Cases) {
  for (double c : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(theta(0.0, c), 0.5);
  for (double e : {0.1, 1.0, 10.0}) EXPECT_DOUBLE_EQ(theta(e, 0.0), 0.5);
  EXPECT_NEAR(theta(60.0, 1.0), 0.0, 1e-12);
  EXPECT_EQ(theta(kInf, 1.0), 0.0);
  EXPECT_THROW(theta(-1.0, 0.5), InvalidArgument);
}

TEST(CG, TiedRatiosGrouped) {
  // l(y) = (0.5, 2, 0.5): argmin {0, 2} has P(.|0) = 0.4 + 0.2, argmax {1}
  // has P(.|1) = 0.8.
  const std::vector<double> p{0.4, 0.4, 0.2, 0.2, 0.8, 0.1};
  EXPECT_NEAR(compute_c_G(p, 3, 2), 0.6, 1e-15);
}

TEST(RiskProfile, WithinBounds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = random_model(seed, 2, 3, 2);
    const auto prof = risk_profile(push_forward(m, random_mapping(seed, 2, 3, 2)), 1.0);
    for (std::size_t g = 1; g < 4; ++g) {
      EXPECT_GE(prof.min_risk[g], 0.0);
      EXPECT_LE(prof.min_risk[g], 0.5);
    }
    EXPECT_GE(prof.c_G, 0.0);
    EXPECT_LE(prof.c_G, 1.0);
    EXPECT_GE(prof.theta, 0.0);
    EXPECT_LE(prof.theta, 0.5);
  }
}

}  // namespace
}  // namespace privdet
