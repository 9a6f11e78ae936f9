// Copyright 2026 The linkdp Authors.
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
//

#include "linkdp/dp_regression.h"

#include <cmath>
#include <vector>

#include "Eigen/LU"
#include "gtest/gtest.h"
#include "linkdp/estimators.h"
#include "linkdp/linkage.h"
#include "linkdp/privacy.h"
#include "linkdp/random.h"
#include "test_util.h"

namespace linkdp {
namespace {

using ::linkdp::testing::RandomMatrix;
using ::linkdp::testing::RelativeFrobenius;
using ::linkdp::testing::UniformMatrix;

struct Instance {
  LinkedDataset data;
  MatchingMatrix q = MatchingMatrix::Identity(1);
};

// Block-ELE instance with X ~ U(-1, 1)^d, beta = 1 and linked z.
Instance MakeInstance(int blocks, int block_size, int d, uint64_t seed) {
  Rng rng(seed);
  std::vector<EleBlock> spec;
  for (int b = 0; b < blocks; ++b) spec.push_back({block_size, rng.Uniform(0.6, 0.9)});
  Instance out{{}, *MatchingMatrix::FromBlocks(spec)};
  const int n = blocks * block_size;
  out.data.x = UniformMatrix(n, d, -1.0, 1.0, seed + 1);
  Vector y = out.data.x * Vector::Ones(d);
  for (int i = 0; i < n; ++i) y(i) += rng.Normal();
  const std::vector<int> src = *SampleLinkage(out.q, LinkageMode::kPermutation, rng);
  out.data.z = ApplyLinkage(y, src);
  out.data.y = y;
  return out;
}

NgdConfig NoiselessNgd(const Matrix& w, int t) {
  const BoundSet bounds = [&] {
    BoundSet b;
    b.l = UnsafeDataDerivedBounds(w, w)->l;
    return b;
  }();
  NgdConfig cfg = *SuggestedNgdConfig(static_cast<int>(w.rows()),
                                      static_cast<int>(w.cols()), bounds);
  cfg.t = t;
  cfg.c = 1e6;
  cfg.omega_override = 0.0;
  cfg.truncate_response = false;
  return cfg;
}

TEST(NgdFitTest, NoiselessIdentityConvergesToOls) {
  LinkedDataset data;
  data.x = RandomMatrix(500, 2, 1);
  data.z = data.x * Vector::Ones(2) + RandomMatrix(500, 1, 2).col(0);
  const MatchingMatrix q = MatchingMatrix::Identity(500);
  ASSERT_OK_AND_ASSIGN(FitResult ols, OlsFit(data.x, data.z));
  ASSERT_OK_AND_ASSIGN(FitResult ngd,
                       NgdFit(data, q, {}, {}, NoiselessNgd(data.x, 200)));
  EXPECT_LT((ngd.beta_hat - ols.beta_hat).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(ngd.iterations, 200);
  EXPECT_EQ(ngd.noise_scale, 0.0);
}

TEST(NgdFitTest, NoiselessGeneralQConvergesToRl) {
  const Instance inst = MakeInstance(20, 25, 2, 3);
  ASSERT_OK_AND_ASSIGN(FitResult rl, RlFit(inst.data.x, inst.data.z, inst.q));
  const Matrix w = inst.q.Apply(inst.data.x);
  ASSERT_OK_AND_ASSIGN(FitResult ngd,
                       NgdFit(inst.data, inst.q, {}, {}, NoiselessNgd(w, 2000)));
  EXPECT_LT((ngd.beta_hat - rl.beta_hat).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(NgdFitTest, SeedDeterminesOutput) {
  const Instance inst = MakeInstance(8, 25, 1, 4);
  NgdConfig cfg;
  cfg.eta = 0.5;
  cfg.t = 50;
  cfg.c = 3.0;
  cfg.r = 3.0;
  cfg.b = 10.0;
  cfg.seed = 77;
  const PrivacyBudget budget{1.0, 1e-5};
  const BoundSet bounds;
  ASSERT_OK_AND_ASSIGN(FitResult a, NgdFit(inst.data, inst.q, budget, bounds, cfg));
  ASSERT_OK_AND_ASSIGN(FitResult b, NgdFit(inst.data, inst.q, budget, bounds, cfg));
  EXPECT_EQ(a.beta_hat, b.beta_hat);
  EXPECT_EQ(a.seed, 77u);
  cfg.seed = 78;
  ASSERT_OK_AND_ASSIGN(FitResult c, NgdFit(inst.data, inst.q, budget, bounds, cfg));
  EXPECT_NE(a.beta_hat, c.beta_hat);
}

TEST(NgdFitTest, TruncationIsNoOpInsideRange) {
  const Instance inst = MakeInstance(4, 25, 1, 5);
  NgdConfig cfg;
  cfg.eta = 0.5;
  cfg.t = 30;
  cfg.c = 3.0;
  cfg.r = inst.data.z.cwiseAbs().maxCoeff() + 1e-9;
  cfg.b = 5.0;
  cfg.seed = 1;
  ASSERT_OK_AND_ASSIGN(FitResult a, NgdFit(inst.data, inst.q, {}, {}, cfg));
  cfg.truncate_response = false;
  ASSERT_OK_AND_ASSIGN(FitResult b, NgdFit(inst.data, inst.q, {}, {}, cfg));
  EXPECT_EQ(a.beta_hat, b.beta_hat);
}

TEST(NgdFitTest, IteratesStayInProjectionBall) {
  const Instance inst = MakeInstance(4, 25, 2, 6);
  NgdConfig cfg;
  cfg.eta = 0.5;
  cfg.t = 10;
  cfg.c = 0.3;
  cfg.r = 2.0;
  cfg.omega_override = 5.0;
  ASSERT_OK_AND_ASSIGN(FitResult a, NgdFit(inst.data, inst.q, {}, {}, cfg));
  EXPECT_LE(a.beta_hat.norm(), 0.3 + 1e-12);
}

TEST(NgdFitTest, RejectsInvalidConfig) {
  const Instance inst = MakeInstance(2, 25, 1, 7);
  NgdConfig cfg;
  cfg.t = 0;
  EXPECT_FALSE(NgdFit(inst.data, inst.q, {}, {}, cfg).ok());
  BoundSet bad;
  bad.l = 0.5;
  EXPECT_FALSE(NgdFit(inst.data, inst.q, {}, bad, std::nullopt).ok());
}

TEST(SspFitTest, NoiselessIdentityMatchesOls) {
  LinkedDataset data;
  data.x = RandomMatrix(300, 3, 8);
  data.z = RandomMatrix(300, 1, 9).col(0);
  SspConfig cfg;
  cfg.omega_override = 0.0;
  cfg.truncate_response = false;
  ASSERT_OK_AND_ASSIGN(FitResult ols, OlsFit(data.x, data.z));
  ASSERT_OK_AND_ASSIGN(FitResult ssp,
                       SspFit(data, MatchingMatrix::Identity(300), {}, {}, cfg));
  EXPECT_LT((ssp.beta_hat - ols.beta_hat).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(ssp.retries, 0);
}

TEST(SspFitTest, NoiselessGeneralQMatchesRl) {
  const Instance inst = MakeInstance(10, 25, 2, 10);
  SspConfig cfg;
  cfg.omega_override = 0.0;
  cfg.truncate_response = false;
  ASSERT_OK_AND_ASSIGN(FitResult rl, RlFit(inst.data.x, inst.data.z, inst.q));
  ASSERT_OK_AND_ASSIGN(FitResult ssp, SspFit(inst.data, inst.q, {}, {}, cfg));
  EXPECT_LT((ssp.beta_hat - rl.beta_hat).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SspFitTest, SeedDeterminesOutput) {
  const Instance inst = MakeInstance(8, 25, 2, 11);
  SspConfig cfg;
  cfg.r = 3.0;
  cfg.b = 10.0;
  cfg.seed = 5;
  ASSERT_OK_AND_ASSIGN(FitResult a, SspFit(inst.data, inst.q, {0.5, 1e-5}, {}, cfg));
  ASSERT_OK_AND_ASSIGN(FitResult b, SspFit(inst.data, inst.q, {0.5, 1e-5}, {}, cfg));
  EXPECT_EQ(a.beta_hat, b.beta_hat);
  EXPECT_TRUE(a.warnings.empty());
}

TEST(SspFitTest, SingularWithoutNoiseFails) {
  LinkedDataset data;
  data.x = Matrix::Ones(50, 2);
  data.z = Vector::Ones(50);
  SspConfig cfg;
  cfg.omega_override = 0.0;
  absl::StatusOr<FitResult> fit =
      SspFit(data, MatchingMatrix::Identity(50), {}, {}, cfg);
  EXPECT_EQ(fit.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(SspFitTest, RetryExhaustionIsReported) {
  LinkedDataset data;
  data.x = Matrix::Ones(50, 2);
  data.z = Vector::Ones(50);
  SspConfig cfg;
  cfg.omega_override = 1e-30;
  cfg.max_retries = 7;
  absl::StatusOr<FitResult> fit =
      SspFit(data, MatchingMatrix::Identity(50), {}, {}, cfg);
  EXPECT_EQ(fit.status().code(), absl::StatusCode::kResourceExhausted);
  EXPECT_NE(fit.status().message().find("1e-12"), std::string::npos);
}

TEST(SspFitTest, MonteCarloMeanCentresOnRl) {
  const Instance inst = MakeInstance(40, 25, 1, 12);
  ASSERT_OK_AND_ASSIGN(FitResult rl, RlFit(inst.data.x, inst.data.z, inst.q));
  SspConfig cfg;
  cfg.omega_override = 3.0;
  cfg.truncate_response = false;
  double sum = 0.0;
  double sum2 = 0.0;
  int retries = 0;
  constexpr int kRuns = 10000;
  for (int r = 0; r < kRuns; ++r) {
    cfg.seed = DeriveSeed(12, r);
    ASSERT_OK_AND_ASSIGN(FitResult fit, SspFit(inst.data, inst.q, {}, {}, cfg));
    sum += fit.beta_hat(0);
    sum2 += fit.beta_hat(0) * fit.beta_hat(0);
    retries += fit.retries;
  }
  const double mean = sum / kRuns;
  const double se = std::sqrt((sum2 / kRuns - mean * mean) / kRuns);
  EXPECT_LT(std::abs(mean - rl.beta_hat(0)), 3.0 * se);
  EXPECT_LT(retries, kRuns / 100);
}

TEST(NgdVarianceTest, SingleStep) {
  const Matrix w = RandomMatrix(40, 2, 13);
  const Matrix a = RandomMatrix(40, 40, 14);
  const Matrix sigma = a * a.transpose() / 40.0;
  ASSERT_OK_AND_ASSIGN(VarianceReport r, NgdVariance(w, sigma, 0.3, 1, 0.2));
  const Matrix bt = 0.3 / 40.0 * w;
  const Matrix oracle = bt.transpose() * sigma * bt + 0.04 * Matrix::Identity(2, 2);
  EXPECT_LT(RelativeFrobenius(r.total, oracle), 1e-12);
}

TEST(NgdVarianceTest, LongRunNoiselessLimitIsRl) {
  const Instance inst = MakeInstance(20, 25, 2, 15);
  const Matrix w = inst.q.Apply(inst.data.x);
  ASSERT_OK_AND_ASSIGN(MomentSet m,
                       ZMoments(inst.data.x, inst.q, {Vector::Ones(2), 1.0}));
  ASSERT_OK_AND_ASSIGN(Matrix sigma_z, m.DenseSigma());
  ASSERT_OK_AND_ASSIGN(Matrix sigma_rl, RlCovariance(w, sigma_z));
  const double eta = 2.0 / UnsafeDataDerivedBounds(w, w)->l;
  ASSERT_OK_AND_ASSIGN(VarianceReport r, NgdVariance(w, sigma_z, eta, 2000, 0.0));
  EXPECT_LT(RelativeFrobenius(r.total, sigma_rl), 1e-6);
  EXPECT_LT(RelativeFrobenius(r.sigma_rl, sigma_rl), 1e-10);
  ASSERT_OK_AND_ASSIGN(VarianceReport fast, NgdVariance(w, m, eta, 2000, 0.0));
  EXPECT_LT(RelativeFrobenius(fast.total, r.total), 1e-10);
  // Monotone approach to the limit.
  double previous = 1e300;
  for (int t : {50, 100, 200, 400, 800}) {
    ASSERT_OK_AND_ASSIGN(VarianceReport rt, NgdVariance(w, m, eta, t, 0.0));
    const double gap = (rt.total - sigma_rl).norm();
    EXPECT_LE(gap, previous);
    previous = gap;
  }
}

TEST(NgdVarianceTest, DivergentStepIsRejected) {
  const Matrix w = RandomMatrix(40, 1, 16);
  absl::StatusOr<VarianceReport> r =
      NgdVariance(w, Matrix::Identity(40, 40), 10.0, 5, 0.1);
  EXPECT_EQ(r.status().code(), absl::StatusCode::kFailedPrecondition);
}

TEST(NgdVarianceTest, MatchesEmpiricalNonProjectedIterate) {
  constexpr int kN = 100;
  Rng rng(17);
  std::vector<EleBlock> blocks;
  for (int b = 0; b < 4; ++b) blocks.push_back({25, rng.Uniform(0.6, 0.9)});
  ASSERT_OK_AND_ASSIGN(MatchingMatrix q, MatchingMatrix::FromBlocks(blocks));
  LinkedDataset data;
  data.x = UniformMatrix(kN, 1, -1.0, 1.0, 18);
  const Matrix w = q.Apply(data.x);
  ASSERT_OK_AND_ASSIGN(
      MomentSet m, ZMoments(data.x, q, {Vector::Ones(1), 1.0},
                            CrossCovarianceForm::kIndependentSources));
  NgdConfig cfg;
  cfg.eta = 1.0;
  cfg.t = 20;
  cfg.omega_override = 0.02;
  cfg.project_iterates = false;
  cfg.truncate_response = false;
  ASSERT_OK_AND_ASSIGN(VarianceReport theory,
                       NgdVariance(w, m, cfg.eta, cfg.t, *cfg.omega_override));
  double sum = 0.0;
  double sum2 = 0.0;
  constexpr int kRuns = 10000;
  for (int r = 0; r < kRuns; ++r) {
    Vector y = data.x.col(0);
    for (int i = 0; i < kN; ++i) y(i) += rng.Normal();
    ASSERT_OK_AND_ASSIGN(std::vector<int> src,
                         SampleLinkage(q, LinkageMode::kIndependent, rng));
    data.z = ApplyLinkage(y, src);
    cfg.seed = DeriveSeed(17, r);
    ASSERT_OK_AND_ASSIGN(FitResult fit, NgdFit(data, q, {}, {}, cfg));
    sum += fit.beta_hat(0);
    sum2 += fit.beta_hat(0) * fit.beta_hat(0);
  }
  const double var = (sum2 - sum * sum / kRuns) / (kRuns - 1);
  EXPECT_NEAR(var / theory.total(0, 0), 1.0, 0.10);
}

TEST(SspVarianceTest, NoNoiseIsRlCovariance) {
  const Matrix w = RandomMatrix(50, 2, 19);
  const Matrix sigma_rl = (Matrix(2, 2) << 0.3, 0.1, 0.1, 0.2).finished();
  ASSERT_OK_AND_ASSIGN(VarianceReport r,
                       SspVariance(w, Vector::Ones(2), sigma_rl, 0.0));
  EXPECT_EQ(r.total, sigma_rl);
}

TEST(SspVarianceTest, ScalarSpecialization) {
  const Matrix w = RandomMatrix(30, 1, 20);
  const double srl = 0.04;
  const double beta = 1.3;
  const double omega = 2.5;
  ASSERT_OK_AND_ASSIGN(
      VarianceReport r,
      SspVariance(w, Vector::Constant(1, beta), Matrix::Constant(1, 1, srl), omega));
  const double ww = w.col(0).squaredNorm();
  const double sp = omega * omega / (ww * ww);
  const double oracle = srl + omega * omega / (ww * ww) * (1.0 + beta * beta + srl + sp);
  EXPECT_NEAR(r.total(0, 0), oracle, 1e-14);
}

TEST(SspVarianceTest, MatrixFormAgainstExplicitTerms) {
  const Matrix w = RandomMatrix(40, 3, 21);
  const Vector beta = (Vector(3) << 0.5, -1.0, 2.0).finished();
  const Matrix a = RandomMatrix(3, 3, 22);
  const Matrix srl = 0.01 * a * a.transpose();
  const double omega = 1.7;
  ASSERT_OK_AND_ASSIGN(VarianceReport r, SspVariance(w, beta, srl, omega));
  const Matrix ginv = Matrix(w.transpose() * w).inverse();
  const Matrix sp = omega * omega * ginv * ginv;
  auto explicit_term = [](const Matrix& outer) {
    Matrix t = outer;
    for (int k = 0; k < t.rows(); ++k) t(k, k) = outer.trace();
    return t;
  };
  const Matrix s0 = explicit_term(beta * beta.transpose());
  const Matrix s1 = explicit_term(srl);
  const Matrix s2 = explicit_term(sp);
  const Matrix oracle =
      srl + omega * omega * ginv * (Matrix::Identity(3, 3) + s0 + s1 + s2) * ginv;
  EXPECT_LT(RelativeFrobenius(r.total, oracle), 1e-12);
}

TEST(SuggestedConfigTest, IterationCount) {
  BoundSet b;
  b.l = 1.5;
  b.c0 = 1.0;
  ASSERT_OK_AND_ASSIGN(NgdConfig full, SuggestedNgdConfig(10000, 1, b));
  EXPECT_EQ(full.t, 21);
  EXPECT_DOUBLE_EQ(full.eta, 1.0 / 1.5);
  EXPECT_EQ(full.c, b.c0);
  EXPECT_EQ(full.beta0, Vector::Zero(1));
  ASSERT_OK_AND_ASSIGN(NgdConfig third, SuggestedNgdConfig(10000, 1, b, std::nullopt,
                                                           1.0 / 3.0));
  EXPECT_EQ(third.t, static_cast<int>(std::ceil(2.25 * std::log(1e4) / 3.0)));
  b.c0 = 2.5;
  ASSERT_OK_AND_ASSIGN(NgdConfig wide, SuggestedNgdConfig(10000, 2, b, 1.0));
  EXPECT_EQ(wide.c, 2.5);
  EXPECT_NEAR(wide.r, std::sqrt(2.0 * std::log(1e4)), 1e-12);
}

TEST(SuggestedConfigTest, SspUsesSensitivityFactor) {
  BoundSet b;
  b.m = 1.0;
  ASSERT_OK_AND_ASSIGN(SspConfig cfg, SuggestedSspConfig(10000, b, 1.0));
  BoundSet resolved = b;
  resolved.r = cfg.r;
  EXPECT_DOUBLE_EQ(cfg.b, SspSensitivityFactor(resolved));
}

TEST(ConfigValidateTest, RejectsBadValues) {
  NgdConfig ngd;
  EXPECT_OK(ngd.Validate());
  ngd.eta = 0.0;
  EXPECT_FALSE(ngd.Validate().ok());
  SspConfig ssp;
  EXPECT_OK(ssp.Validate());
  ssp.max_retries = 0;
  EXPECT_FALSE(ssp.Validate().ok());
}

}  // namespace
}  // namespace linkdp
