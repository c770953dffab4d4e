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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "privdet/epic.hpp"

namespace privdet {
namespace {

const double kLog2 = std::log(2.0);

Dataset small_dataset(std::size_t n, std::uint64_t seed) {
  return level_dataset(generate_level_data(n, seed));
}

NetworkMapping replicate_rows(std::size_t s, std::size_t nx, std::size_t nz,
                              std::vector<double> rows) {
  return NetworkMapping::replicate(s, SensorChannel(nx, nz, std::move(rows)));
}

TEST(Kernel, CountKernel) {
  const std::vector<std::uint32_t> a{1, 2, 3}, b{1, 0, 3}, c{0, 0};
  EXPECT_EQ(count_kernel(a, b), 2);
  EXPECT_EQ(count_kernel(a, a), 3);
  EXPECT_THROW(count_kernel(a, c), DimensionError);
}

TEST(Kernel, ExpectedKernelIdentityIsCount) {
  const auto id = NetworkMapping::replicate(3, SensorChannel::identity(4));
  const std::vector<std::uint32_t> a{1, 2, 3}, b{1, 0, 3};
  EXPECT_DOUBLE_EQ(expected_kernel(a, b, id), 2.0);
}

TEST(Kernel, ExpectedKernelUniformAndHandCase) {
  const std::vector<std::uint32_t> a{0, 1, 2, 0}, b{1, 1, 0, 2};
  const auto uni = replicate_rows(4, 3, 2, std::vector<double>(6, 0.5));
  EXPECT_DOUBLE_EQ(expected_kernel(a, b, uni), 2.0);
  // Rows (0.8, 0.2) and (0.3, 0.7): 0.24 + 0.14.
  const auto m = replicate_rows(1, 2, 2, {0.8, 0.2, 0.3, 0.7});
  const std::vector<std::uint32_t> x{0}, y{1};
  EXPECT_NEAR(expected_kernel(x, y, m), 0.38, 1e-15);
  EXPECT_THROW(expected_kernel(a, b, m), DimensionError);
}

TEST(Kernel, GramIsPsd) {
  const auto ds = small_dataset(30, 4);
  Rng rng(9);
  std::vector<SensorChannel> cs;
  for (std::size_t t = 0; t < ds.s; ++t) cs.push_back(random_channel(rng, ds.x_size, 3));
  const auto k = gram_matrix(ds, NetworkMapping(cs));
  EXPECT_TRUE(k.isApprox(k.transpose()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
}

TEST(Risk, ZeroCoefficientsGiveLogTwo) {
  const auto ds = small_dataset(20, 1);
  const auto map = NetworkMapping::replicate(ds.s, SensorChannel::identity(ds.x_size));
  const std::vector<double> zero(ds.n(), 0.0);
  EXPECT_NEAR(empirical_risk_H(zero, map, ds, 3.0), kLog2, 1e-15);
  EXPECT_NEAR(empirical_privacy_risk(zero, map, ds, 1, 3.0), kLog2, 1e-15);
  EXPECT_THROW(empirical_risk_H({1.0}, map, ds, 3.0), DimensionError);
}

TEST(Risk, SingleSampleHandCase) {
  Dataset ds;
  ds.s = 1;
  ds.q = 1;
  ds.x_size = 2;
  ds.h = {1};
  ds.g = {0};
  ds.x = {0};
  const auto map = NetworkMapping({SensorChannel::identity(2)});
  // K = 1, score 0.5, loss log(1 + e^-0.5), penalty 1/2 * 0.25.
  EXPECT_NEAR(empirical_risk_H({0.5}, map, ds, 1.0),
              std::log1p(std::exp(-0.5)) + 0.125, 1e-14);
}

TEST(Risk, UniformRowsLeaveNothingToLearn) {
  const auto ds = small_dataset(40, 2);
  const auto uni = replicate_rows(ds.s, ds.x_size, 2,
                                  std::vector<double>(ds.x_size * 2, 0.5));
  EXPECT_NEAR(min_privacy_risk(uni, ds, 1, 10.0).risk, kLog2, 1e-12);
}

// One sensor, identity channel and g = x: the objective separates into
// 1/2 v0^2 + 1/2 L(-v0) and 1/2 v1^2 + 1/2 L(v1) at lambda = 1.
TEST(Risk, AdversaryMatchesGridSearch) {
  Dataset ds;
  ds.s = 1;
  ds.q = 1;
  ds.x_size = 2;
  ds.h = {0, 1, 0, 1, 1};
  ds.g = {0, 0, 0, 1, 1};
  ds.x = {0, 0, 0, 1, 1};
  const auto map = NetworkMapping({SensorChannel::identity(2)});
  const auto fit = min_privacy_risk(map, ds, 1, 1.0);
  double best = kInf;
  for (int i = -2000; i <= 2000; ++i) {
    const double v0 = i * 1e-3;
    for (int j = -2000; j <= 2000; j += 1) {
      const double v1 = j * 1e-3;
      const double f = 0.5 * (v0 * v0 + v1 * v1) +
                       0.5 * oracle::logistic(-v0) + 0.5 * oracle::logistic(v1);
      best = std::min(best, f);
    }
  }
  EXPECT_NEAR(fit.risk, best, 1e-6);
  EXPECT_LT(fit.v[0], 0.0);
  EXPECT_GT(fit.v[1], 0.0);
}

TEST(Discretize, QuantileRanks) {
  RawTable tab;
  tab.q = 1;
  for (int v = 100; v >= 1; --v) {
    tab.h.push_back(0);
    tab.g.push_back(0);
    tab.features.push_back({static_cast<double>(v), 7.0});
  }
  const auto d = Discretizer::fit(tab, 10);
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("feature 2"), std::string::npos);
  const auto ds = d.apply(tab);
  EXPECT_EQ(ds.x_size, 10u);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const int rank = 100 - static_cast<int>(i);
    EXPECT_EQ(static_cast<int>(ds.at(i, 0)), (rank + 9) / 10 - 1) << rank;
    EXPECT_EQ(ds.at(i, 1), 0u);
  }
  EXPECT_THROW(Discretizer::fit(tab, 1), InvalidArgument);
}

TEST(Discretize, IntegerScheme) {
  const auto tab = generate_level_data(50, 3);
  const auto ds = level_dataset(tab);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t t = 0; t < ds.s; ++t) {
      EXPECT_EQ(static_cast<double>(ds.at(i, t)), tab.features[i][t] + 5.0);
    }
  }
}

TEST(Data, CsvRoundTrip) {
  auto tab = generate_level_data(25, 8);
  const std::string path = ::testing::TempDir() + "/epic_rt.csv";
  {
    std::ofstream out(path);
    out << raw_csv_text(tab);
  }
  const auto back = read_raw_csv(path, 1);
  EXPECT_EQ(back.h, tab.h);
  EXPECT_EQ(back.g, tab.g);
  EXPECT_EQ(back.features, tab.features);
  {
    std::ofstream out(path);
    out << "h,g1,x1\n1,2,0.5\n";
  }
  EXPECT_THROW(read_raw_csv(path, 1), ParseError);
  std::remove(path.c_str());
}

EpicConfig quick(double eps, std::uint64_t seed = 3) {
  EpicConfig c;
  c.eps_LD = eps;
  c.seed = seed;
  c.restarts = 2;
  c.max_sweeps = 10;
  return c;
}

TEST(Epic, PredictEmptyWeightsAndDeterminism) {
  EpicSolution empty;
  const std::vector<std::uint32_t> x{1, 2};
  EXPECT_EQ(predict(empty, x, 5), 0);
  const auto ds = small_dataset(40, 1);
  const auto sol = epic_solve(ds, quick(2.0));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    EXPECT_EQ(predict(sol, ds.row(i), 77 + i), predict(sol, ds.row(i), 77 + i));
  }
}

TEST(Epic, ZeroBudgetGivesConstantChannels) {
  const auto ds = small_dataset(40, 1);
  const auto sol = epic_solve(ds, quick(0.0));
  EXPECT_NEAR(ldp_budget(sol.mapping), 0.0, 1e-12);
  for (const auto& c : sol.mapping.channels()) {
    for (std::size_t x = 1; x < c.x_size(); ++x) {
      for (std::size_t z = 0; z < c.z_size(); ++z) {
        EXPECT_NEAR(c(x, z), c(0, z), 1e-12);
      }
    }
  }
}

TEST(Epic, AuditsAndImproves) {
  const auto ds = small_dataset(40, 1);
  for (double eps : {0.5, 2.0}) {
    const auto sol = epic_solve(ds, quick(eps));
    EXPECT_LE(ldp_budget(sol.mapping), eps + 1e-9);
    EXPECT_LE(empirical_risk_H(sol.coeffs, sol.mapping, ds, sol.lambda),
              kLog2 + 1e-9);
    EXPECT_GE(sol.worst_risk(), sol.r * sol.theta_star - 1e-4);
    for (std::size_t g = 1; g < sol.min_risk.size(); ++g) {
      EXPECT_NEAR(sol.min_risk[g],
                  min_privacy_risk(sol.mapping, ds, g, sol.lambda).risk, 1e-6);
    }
  }
}

TEST(Epic, SameSeedSameSolution) {
  const auto ds = small_dataset(40, 5);
  const auto a = epic_solve(ds, quick(1.0, 11));
  const auto b = epic_solve(ds, quick(1.0, 11));
  EXPECT_EQ(a.mapping, b.mapping);
  const auto test = small_dataset(200, 6);
  const auto ea = evaluate(a, test, 4);
  const auto eb = evaluate(b, test, 4);
  EXPECT_EQ(ea.error_H, eb.error_H);
  EXPECT_EQ(ea.error_G, eb.error_G);
  EXPECT_GE(ea.error_G, 0.0);
  EXPECT_LE(ea.error_G, 0.5 + 0.1);
}

TEST(Epic, RejectsBadConfig) {
  const auto ds = small_dataset(10, 1);
  EpicConfig c;
  c.r = 1.0;
  EXPECT_THROW(epic_solve(ds, c), InvalidArgument);
  c = EpicConfig{};
  c.lambda = 0.0;
  EXPECT_THROW(epic_solve(ds, c), InvalidArgument);
}

}  // namespace
}  // namespace privdet
