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

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "privdet/channels.hpp"
#include "privdet/io.hpp"
#include "privdet/model.hpp"

namespace privdet {
namespace {

// One sensor, |X| = 2, p(h, x) = 0.4 on the diagonal, G uniform and
// independent of everything else.
JointModel diagonal_model() {
  const std::vector<double> prior{0.25, 0.25, 0.25, 0.25};
  const std::vector<double> cond{0.8, 0.2, 0.8, 0.2, 0.2, 0.8, 0.2, 0.8};
  return JointModel::cond_indep(1, 2, prior, {cond});
}

SensorChannel flip(double p) {
  return SensorChannel(2, 2, {1 - p, p, p, 1 - p});
}

TEST(PushForward, HandEnumeratedFlipChannel) {
  const auto pushed =
      push_forward(diagonal_model(), NetworkMapping({flip(0.25)}));
  // p(h=0, z=0) = 0.4 * 0.75 + 0.1 * 0.25 = 0.325, split evenly over g.
  const std::vector<double> want{0.1625, 0.0875, 0.1625, 0.0875,
                                 0.0875, 0.1625, 0.0875, 0.1625};
  ASSERT_EQ(pushed.data().size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_NEAR(pushed.data()[i], want[i], 1e-15) << i;
  }
  const auto pz = marginal(pushed, {Variable::component(0)});
  EXPECT_NEAR(pz.data()[0], 0.5, 1e-15);
  EXPECT_NEAR(pz.data()[1], 0.5, 1e-15);
}

TEST(PushForward, IdentityChannelIsIdentity) {
  const auto m = random_model(3, 2, 3, 1);
  const auto pushed = push_forward(
      m, NetworkMapping::replicate(2, SensorChannel::identity(3)));
  const auto joint = m.joint();
  ASSERT_EQ(pushed.data().size(), joint.size());
  for (std::size_t i = 0; i < joint.size(); ++i) {
    EXPECT_NEAR(pushed.data()[i], joint[i], 1e-15);
  }
}

TEST(PushForward, ConstantChannelDecouplesZ) {
  const auto m = random_model(4, 2, 3, 1);
  const std::vector<double> u{0.3, 0.7};
  const auto pushed =
      push_forward(m, NetworkMapping::replicate(2, SensorChannel::constant(3, u)));
  for (std::size_t k = 0; k < m.hg_count(); ++k) {
    for (std::size_t z = 0; z < 4; ++z) {
      EXPECT_NEAR(pushed.at(k, z), m.prior(k) * u[z / 2] * u[z % 2], 1e-15);
    }
  }
}

TEST(PushForward, MatchesBruteForceAndPreservesPrior) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t s = 1 + seed % 3, q = 1 + seed % 2;
    const auto m = random_model(seed, s, 2 + seed % 3, q);
    const auto map = random_mapping(seed + 100, s, m.x_size(), 2 + seed % 2);
    const auto pushed = push_forward(m, map);
    const auto want = oracle::push(m, map);
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_NEAR(pushed.data()[i], want[i], 1e-12);
    }
    const auto phg = pushed.p_hg();
    for (std::size_t k = 0; k < m.hg_count(); ++k) {
      EXPECT_NEAR(phg[k], m.prior(k), 1e-10);
    }
  }
}

TEST(PushForward, CondIndepAndFullFormsAgree) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_model(seed, 1 + seed % 3, 2 + seed % 3, 1);
    const auto full = m.to_full();
    ASSERT_EQ(full.form(), ModelForm::kFull);
    const auto map = random_mapping(seed, m.s(), m.x_size(), 2);
    const auto a = push_forward(m, map).data();
    const auto b = push_forward(full, map).data();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  }
}

TEST(PushForward, RejectsDimensionMismatch) {
  const auto m = random_model(1, 2, 3, 1);
  EXPECT_THROW(push_forward(m, random_mapping(1, 3, 3, 2)), DimensionError);
  EXPECT_THROW(push_forward(m, random_mapping(1, 2, 4, 2)), DimensionError);
}

TEST(Marginal, TotalIsOneAndReadsPrior) {
  const std::vector<double> prior{0.1, 0.2, 0.3, 0.4};
  const auto m = JointModel::cond_indep(1, 2, prior, {{0.5, 0.5, 0.5, 0.5,
                                                       0.5, 0.5, 0.5, 0.5}});
  EXPECT_NEAR(marginal(m, {}).data()[0], 1.0, 1e-15);
  const auto ph = marginal(m, {Variable::h()});
  EXPECT_NEAR(ph.data()[0], 0.3, 1e-15);
  EXPECT_NEAR(ph.data()[1], 0.7, 1e-15);
  EXPECT_THROW(Variable::parse("W"), InvalidArgument);
}

TEST(CorrelatedModel, HitsTargetCorrelation) {
  for (double corr : {-0.5, 0.0, 0.2, 0.7}) {
    const auto m = generate_correlated_model(5, 3, 6, 1, corr);
    const auto& p = m.prior();
    const double ph = p[2] + p[3], pg = p[1] + p[3];
    const double cov = p[3] - ph * pg;
    const double r = cov / std::sqrt(ph * (1 - ph) * pg * (1 - pg));
    EXPECT_NEAR(r, corr, 1e-9);
  }
}

TEST(CorrelatedModel, ZeroCorrelationFactorizes) {
  const auto p = correlated_prior(0.3, 0.6, 0.0);
  EXPECT_DOUBLE_EQ(p[0], 0.7 * 0.4);
  EXPECT_DOUBLE_EQ(p[3], 0.3 * 0.6);
}

TEST(CorrelatedModel, PerfectCorrelationIsDiagonal) {
  const auto p = correlated_prior(0.5, 0.5, 1.0);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  EXPECT_NEAR(p[2], 0.0, 1e-15);
  EXPECT_NEAR(p[3], 0.5, 1e-15);
}

TEST(CorrelatedModel, PointTwoWithUniformMarginals) {
  const auto p = correlated_prior(0.5, 0.5, 0.2);
  EXPECT_NEAR(p[0], 0.3, 1e-15);
  EXPECT_NEAR(p[1], 0.2, 1e-15);
  EXPECT_NEAR(p[2], 0.2, 1e-15);
  EXPECT_NEAR(p[3], 0.3, 1e-15);
}

TEST(CorrelatedModel, InfeasibleCorrelationRejected) {
  EXPECT_THROW(correlated_prior(0.1, 0.9, 0.9), InfeasibleError);
  EXPECT_THROW(correlated_prior(0.5, 0.5, 1.5), InvalidArgument);
}

TEST(CorrelatedModel, Deterministic) {
  const auto a = generate_correlated_model(11, 3, 5, 1, 0.2);
  const auto b = generate_correlated_model(11, 3, 5, 1, 0.2);
  EXPECT_EQ(a.conditionals(), b.conditionals());
  EXPECT_EQ(a.prior(), b.prior());
}

TEST(CorrelatedModel, GIndependentSensorIgnoresG) {
  CorrelatedModelOptions opts;
  opts.g_independent = {0};
  const auto m = generate_correlated_model(2, 2, 4, 1, 0.2, opts);
  for (std::size_t h = 0; h < 2; ++h) {
    for (std::size_t x = 0; x < 4; ++x) {
      EXPECT_NEAR(m.conditional(0, 2 * h, x), m.conditional(0, 2 * h + 1, x),
                  1e-15);
    }
  }
}

class ModelFiles : public ::testing::Test {
 protected:
  std::string path(const std::string& name) {
    return (std::filesystem::temp_directory_path() /
            ("privdet_model_" + name + ".json"))
        .string();
  }
};

TEST_F(ModelFiles, RoundTripIsBitwise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto m = random_model(seed, 2, 3, 1 + seed % 2,
                                seed % 2 ? ModelForm::kFull : ModelForm::kCondIndep);
    const auto p = path("rt");
    save_model(p, m);
    const auto back = load_model(p);
    EXPECT_EQ(back.prior(), m.prior());
    EXPECT_EQ(back.conditionals(), m.conditionals());
    EXPECT_EQ(back.form(), m.form());
  }
}

TEST_F(ModelFiles, NegativeEntryRejected) {
  const auto p = path("neg");
  write_text_file(p,
                  R"({"s":1,"x_size":2,"q":1,"form":"cond_indep",)"
                  R"("prior":[0.5,0.5,0,0],)"
                  R"("conditionals":[[1.1,-0.1,0.5,0.5,0.5,0.5,0.5,0.5]]})");
  EXPECT_THROW(load_model(p), NormalizationError);
}

TEST_F(ModelFiles, MassDeficitNamed) {
  const auto p = path("deficit");
  write_text_file(p,
                  R"({"s":1,"x_size":2,"q":1,"form":"cond_indep",)"
                  R"("prior":[0.25,0.25,0.25,0.249],)"
                  R"("conditionals":[[0.5,0.5,0.5,0.5,0.5,0.5,0.5,0.5]]})");
  try {
    load_model(p);
    FAIL() << "expected a normalization error";
  } catch (const NormalizationError& e) {
    EXPECT_NE(std::string(e.what()).find("0.999"), std::string::npos) << e.what();
  }
}

TEST_F(ModelFiles, ParseErrorsNameTheField) {
  const auto p = path("bad");
  write_text_file(p, R"({"s":1,"x_size":2,"q":1,"form":"cond_indep","prior":"x"})");
  try {
    load_model(p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("prior"), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace privdet
