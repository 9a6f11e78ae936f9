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

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "boost/multiprecision/cpp_dec_float.hpp"
#include "linkdp/dp_regression.h"
#include "linkdp/estimators.h"
#include "linkdp/io.h"
#include "linkdp/linkage.h"
#include "linkdp/linker.h"
#include "linkdp/privacy.h"
#include "linkdp/random.h"
#include "linkdp/simlab.h"
#include "nlohmann/json.hpp"

namespace linkdp {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome Fail(const absl::Status& s) { return {false, s.ToString()}; }

#define ACCEPT_ASSIGN_OR_FAIL(lhs, rexpr)          \
  auto lhs##_or = (rexpr);                          \
  if (!lhs##_or.ok()) return Fail(lhs##_or.status()); \
  auto lhs = *std::move(lhs##_or)

double MaxRelDiff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Matrix NormalMatrix(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.Normal();
  }
  return m;
}

absl::StatusOr<MatchingMatrix> UniformEle(int n, int block, double lo, double hi,
                                          uint64_t seed) {
  Rng rng(seed);
  std::vector<EleBlock> blocks;
  for (int start = 0; start < n; start += block) {
    const int size = std::min(block, n - start);
    blocks.push_back({size, size == 1 ? 1.0 : rng.Uniform(lo, hi)});
  }
  return MatchingMatrix::FromBlocks(std::move(blocks));
}

// ---------------------------------------------------------------------------

Outcome Degeneration() {
  const int n = 5000;
  const int d = 2;
  const Matrix x = NormalMatrix(n, d, 101);
  Vector beta(d);
  beta << 0.8, -0.5;
  Rng noise(102);
  Vector y = x * beta;
  for (int i = 0; i < n; ++i) y(i) += noise.Normal();

  ACCEPT_ASSIGN_OR_FAIL(ols, OlsFit(x, y));
  ACCEPT_ASSIGN_OR_FAIL(rl_identity, RlFit(x, y, MatchingMatrix::Identity(n)));
  const double d_identity = MaxRelDiff(rl_identity.beta_hat, ols.beta_hat);

  ACCEPT_ASSIGN_OR_FAIL(q, UniformEle(n, 25, 0.6, 0.9, 103));
  Rng link(104);
  ACCEPT_ASSIGN_OR_FAIL(source, SampleLinkage(q, LinkageMode::kPermutation, link));
  LinkedDataset data{x, ApplyLinkage(y, source), y, false};
  ACCEPT_ASSIGN_OR_FAIL(rl, RlFit(x, data.z, q));
  ACCEPT_ASSIGN_OR_FAIL(w, TransformDesign(q, x));
  ACCEPT_ASSIGN_OR_FAIL(derived, UnsafeDataDerivedBounds(x, w));

  BoundSet bounds;
  bounds.c_x = derived.c_x;
  bounds.m = 1.0;
  bounds.c0 = 2.0;
  bounds.l = derived.l;
  const PrivacyBudget budget{1.0, std::pow(n, -1.1)};
  ACCEPT_ASSIGN_OR_FAIL(ngd_cfg, SuggestedNgdConfig(n, d, bounds, 1.0));
  ngd_cfg.omega_override = 0.0;
  ngd_cfg.truncate_response = false;
  ACCEPT_ASSIGN_OR_FAIL(ngd, NgdFit(data, q, budget, bounds, ngd_cfg));
  const double d_ngd = MaxRelDiff(ngd.beta_hat, rl.beta_hat);

  ACCEPT_ASSIGN_OR_FAIL(ssp_cfg, SuggestedSspConfig(n, bounds, 1.0));
  ssp_cfg.omega_override = 0.0;
  ssp_cfg.truncate_response = false;
  ACCEPT_ASSIGN_OR_FAIL(ssp, SspFit(data, q, budget, bounds, ssp_cfg));
  const double d_ssp = MaxRelDiff(ssp.beta_hat, rl.beta_hat);

  const bool pass = d_identity <= 1e-12 && d_ngd <= 1e-6 && d_ssp <= 1e-12;
  return {pass, absl::StrCat("rl(Q=I) vs ols ", d_identity, ", ngd(omega=0, T=",
                             ngd_cfg.t, ") vs rl ", d_ngd,
                             ", ssp(omega=0) vs rl ", d_ssp)};
}

// ---------------------------------------------------------------------------

Outcome MomentOracle() {
  Matrix q(3, 3);
  q << 0.6, 0.3, 0.1,  //
      0.25, 0.45, 0.3,  //
      0.15, 0.25, 0.6;
  Matrix x(3, 1);
  x << -1.2, 0.4, 2.1;
  const double beta = 0.9;
  const double sigma2 = 0.7;
  ACCEPT_ASSIGN_OR_FAIL(mpm, MatchingMatrix::FromDense(q));
  Vector beta_v(1);
  beta_v << beta;
  ACCEPT_ASSIGN_OR_FAIL(
      moments, ZMoments(x, mpm, {beta_v, sigma2},
                        CrossCovarianceForm::kIndependentSources));

  // All 27 source vectors, each record drawing its source from its row of Q.
  Vector mean = Vector::Zero(3);
  Vector second = Vector::Zero(3);
  for (int code = 0; code < 27; ++code) {
    const int s[3] = {code % 3, (code / 3) % 3, code / 9};
    const double p = q(0, s[0]) * q(1, s[1]) * q(2, s[2]);
    for (int i = 0; i < 3; ++i) {
      const double mu = beta * x(s[i], 0);
      mean(i) += p * mu;
      second(i) += p * (mu * mu + sigma2);
    }
  }
  const Vector variance = second - mean.cwiseProduct(mean);
  const double d_mean = (moments.mean_z() - mean).cwiseAbs().maxCoeff();
  const double d_var = (moments.variance() - variance).cwiseAbs().maxCoeff();

  // Four points on y = 2x, then the same responses attached to the wrong rows.
  Matrix toy(4, 2);
  toy << 1, 1, 1, 2, 1, 3, 1, 4;
  Vector y(4);
  y << 2, 4, 6, 8;
  Vector z(4);
  z << 8, 4, 6, 2;
  ACCEPT_ASSIGN_OR_FAIL(true_fit, OlsFit(toy, y));
  ACCEPT_ASSIGN_OR_FAIL(naive_fit, OlsFit(toy, z));
  const double slope_true = true_fit.beta_hat(1);
  const double slope_naive = naive_fit.beta_hat(1);

  const bool pass = d_mean <= 1e-10 && d_var <= 1e-10 &&
                    std::abs(slope_true - 2.0) <= 1e-12 &&
                    std::abs(slope_naive + 1.6) <= 1e-12;
  return {pass, absl::StrCat("mean diff ", d_mean, ", variance diff ", d_var,
                             ", toy slopes ", slope_true, " / ", slope_naive)};
}

// ---------------------------------------------------------------------------

double RhoOracle(double epsilon, double delta) {
  using Big = boost::multiprecision::cpp_dec_float_50;
  const Big eps(epsilon);
  const Big a = -boost::multiprecision::log(Big(delta));
  const Big rho = eps + 2 * a - 2 * boost::multiprecision::sqrt((eps + a) * a);
  return rho.convert_to<double>();
}

Outcome ZcdpArithmetic() {
  const double rho = ZcdpRho({1.0, 1e-5});
  const double diff = std::abs(rho - RhoOracle(1.0, 1e-5));
  int checked = 0;
  int violations = 0;
  for (int i = 0; i < 20; ++i) {
    const double eps = 0.05 * std::pow(400.0, i / 19.0);  // 0.05 .. 20
    for (int j = 0; j < 20; ++j) {
      const double delta = std::pow(10.0, -1.0 - 11.0 * j / 19.0);  // 1e-1 .. 1e-12
      const PrivacyBudget b{eps, delta};
      if (!SimplifiedRegime(b)) continue;
      ++checked;
      const double bound = eps * eps / (8.0 * std::log(1.0 / delta));
      if (!(ZcdpRho(b) >= bound)) ++violations;
    }
  }
  return {diff <= 1e-12 && violations == 0 && checked > 0,
          absl::StrCat("rho(1, 1e-5) = ", FormatDouble(rho), ", oracle diff ",
                       diff, ", lower bound held on ", checked - violations, "/",
                       checked, " grid cells in the simplified regime")};
}

// ---------------------------------------------------------------------------

std::string MeanLine(const MethodSummary& s) {
  return absl::StrCat(std::string(SimMethodName(s.method)), " ", s.mean_estimate(0), " +- ",
                      s.standard_error(0));
}

Outcome Unbiasedness() {
  ScenarioConfig config = Setting1();
  config.sweep = {3000};
  config.reps = 300;
  config.methods = {SimMethod::kRl, SimMethod::kNgdRl, SimMethod::kSspRl};
  ACCEPT_ASSIGN_OR_FAIL(report, RunScenario(config));
  bool pass = report.wall_seconds < 300;
  std::vector<std::string> parts;
  for (const MethodSummary& s : report.rows) {
    const double z = std::abs(s.mean_estimate(0) - 1.0) / s.standard_error(0);
    pass &= z <= 3.0;
    parts.push_back(absl::StrCat(MeanLine(s), " (", z, " SE)"));
  }
  std::ostringstream out;
  for (const auto& p : parts) out << p << "; ";
  out << report.wall_seconds << " s";
  return {pass, out.str()};
}

// ---------------------------------------------------------------------------

Outcome VarianceFormulas() {
  ScenarioConfig config = Setting1();
  config.sweep = {10000};
  config.sigma = 1.0;
  config.reps = 1000;
  config.project_ngd = false;
  config.methods = {SimMethod::kNgdRl, SimMethod::kSspRl};

  ACCEPT_ASSIGN_OR_FAIL(point, PrepareSweepPoint(config, 0));
  ACCEPT_ASSIGN_OR_FAIL(moments, ZMoments(point.x, point.q, point.params));
  ACCEPT_ASSIGN_OR_FAIL(sigma_rl, RlCovariance(point.w, moments));
  ACCEPT_ASSIGN_OR_FAIL(limit,
                        NgdVariance(point.w, moments, point.ngd.eta, 2000, 0.0));
  const double limit_rel = (limit.total - sigma_rl).norm() / sigma_rl.norm();

  ACCEPT_ASSIGN_OR_FAIL(report, RunScenario(config));
  bool pass = limit_rel <= 1e-6 && report.wall_seconds < 900;
  std::string detail = absl::StrCat("T=2000 limit rel diff ", limit_rel);
  for (const MethodSummary& s : report.rows) {
    const double emp = s.emp_cov(0, 0);
    const double thr = s.thr_cov.has_value() ? (*s.thr_cov)(0, 0) : 0.0;
    const double rel = std::abs(emp - thr) / thr;
    pass &= rel <= 0.10;
    absl::StrAppend(&detail, "; ", std::string(SimMethodName(s.method)), " emp ", emp,
                    " thr ", thr, " rel ", rel);
  }
  absl::StrAppend(&detail, "; ", report.wall_seconds, " s");
  return {pass, detail};
}

// ---------------------------------------------------------------------------

double MeanSquaredError(const MethodSummary& s, const Vector& beta) {
  const double k = s.reps;
  return s.emp_cov.trace() * (k - 1.0) / k + (s.mean_estimate - beta).squaredNorm();
}

// Least-squares slope of log(v) on log(u).
double LogLogSlope(const std::vector<double>& u, const std::vector<double>& v) {
  double su = 0, sv = 0, suu = 0, suv = 0;
  const double k = static_cast<double>(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    const double a = std::log(u[i]);
    const double b = std::log(v[i]);
    su += a;
    sv += b;
    suu += a * a;
    suv += a * b;
  }
  return (suv - su * sv / k) / (suu - su * su / k);
}

Outcome Setting2Growth() {
  ScenarioConfig config = Setting2();
  config.methods = {SimMethod::kRl, SimMethod::kNgdRl, SimMethod::kSspRl};
  ACCEPT_ASSIGN_OR_FAIL(report, RunScenario(config));
  std::vector<double> sigmas, ngd, ssp, ngd_rms, ssp_rms;
  auto excess = [](double v) { return std::max(1e-300, v); };
  for (size_t p = 0; p < report.points.size(); ++p) {
    const Vector& beta = report.points[p].params.beta;
    const MethodSummary* rl = report.Find(SimMethod::kRl, p);
    const MethodSummary* n = report.Find(SimMethod::kNgdRl, p);
    const MethodSummary* s = report.Find(SimMethod::kSspRl, p);
    sigmas.push_back(report.points[p].sigma);
    // Mean relative error above the non-private floor at the same sigma.
    ngd.push_back(excess(n->mean_rel_error - rl->mean_rel_error));
    ssp.push_back(excess(s->mean_rel_error - rl->mean_rel_error));
    const double floor = MeanSquaredError(*rl, beta);
    ngd_rms.push_back(std::sqrt(excess(MeanSquaredError(*n, beta) - floor)));
    ssp_rms.push_back(std::sqrt(excess(MeanSquaredError(*s, beta) - floor)));
  }
  const double ngd_slope = LogLogSlope(sigmas, ngd);
  const double ssp_slope = LogLogSlope(sigmas, ssp);
  const bool pass =
      std::abs(ngd_slope - 1.0) <= 0.35 && std::abs(ssp_slope - 2.0) <= 0.35;
  return {pass,
          absl::StrCat("ngd slope ", ngd_slope, " (excess error ", ngd.front(),
                       " -> ", ngd.back(), "), ssp slope ", ssp_slope,
                       " (excess error ", ssp.front(), " -> ", ssp.back(),
                       "); root excess MSE slopes ", LogLogSlope(sigmas, ngd_rms),
                       " / ", LogLogSlope(sigmas, ssp_rms), "; ",
                       report.wall_seconds, " s")};
}

// ---------------------------------------------------------------------------

Outcome Setting3Limit() {
  ACCEPT_ASSIGN_OR_FAIL(report, CompareRlVsNonRl(Setting3()));
  bool pass = true;
  std::string detail;
  const size_t last = report.points.size() - 1;
  const std::pair<SimMethod, SimMethod> pairs[] = {
      {SimMethod::kRl, SimMethod::kOlsNaive},
      {SimMethod::kNgdRl, SimMethod::kNgdNaive},
      {SimMethod::kSspRl, SimMethod::kSspNaive}};
  for (const auto& [post, naive] : pairs) {
    const MethodSummary* a = report.Find(post, last);
    const MethodSummary* b = report.Find(naive, last);
    const double gap = std::abs(a->mean_rel_error - b->mean_rel_error);
    const double se = std::hypot(a->rel_error_se, b->rel_error_se);
    pass &= gap <= 3.0 * se + 1e-12;
    absl::StrAppend(&detail, std::string(SimMethodName(post)), "/", std::string(SimMethodName(naive)),
                    " gap at gamma=1 ", gap, " (se ", se, "); ");
  }
  for (SimMethod m : {SimMethod::kRl, SimMethod::kNgdRl, SimMethod::kSspRl}) {
    absl::StrAppend(&detail, std::string(SimMethodName(m)), " errors");
    for (size_t p = 0; p < report.points.size(); ++p) {
      const MethodSummary* s = report.Find(m, p);
      absl::StrAppend(&detail, " ", s->mean_rel_error);
      if (p == 0) continue;
      const MethodSummary* prev = report.Find(m, p - 1);
      const double se = std::hypot(s->rel_error_se, prev->rel_error_se);
      pass &= s->mean_rel_error <= prev->mean_rel_error + 3.0 * se;
    }
    absl::StrAppend(&detail, "; ");
  }
  absl::StrAppend(&detail, report.wall_seconds, " s");
  return {pass, detail};
}

// ---------------------------------------------------------------------------

struct ArmStats {
  double mean = 0.0;
  double var = 0.0;
  double se = 0.0;
  int reps = 0;
};

ArmStats Stats(const std::vector<double>& v) {
  ArmStats s;
  s.reps = static_cast<int>(v.size());
  for (double e : v) s.mean += e;
  s.mean /= s.reps;
  for (double e : v) s.var += (e - s.mean) * (e - s.mean);
  s.var /= s.reps - 1;
  s.se = std::sqrt(s.var / s.reps);
  return s;
}

void StandardizeColumn(Eigen::Ref<Vector> v, double* mean, double* sd) {
  *mean = v.mean();
  *sd = std::sqrt((v.array() - *mean).square().sum() / (v.size() - 1));
  v = (v.array() - *mean) / *sd;
}

Outcome ApplicationPipeline() {
  const int n = 5000;
  const int reps = 1000;
  const uint64_t seed = 20240611;
  ACCEPT_ASSIGN_OR_FAIL(corpus,
                        GenerateCorpus({.n = n,
                                        .n_blocks = 9,
                                        .corruption_rate = kCalibratedCorruptionRate,
                                        .seed = seed}));
  ACCEPT_ASSIGN_OR_FAIL(linked, LinkRecords(corpus.first, corpus.second,
                                            {.seed = DeriveSeed(seed, 1)}));
  ACCEPT_ASSIGN_OR_FAIL(q, GammaToMpm(linked));
  LinkedDataset data = LinkedPayloads(corpus.first, corpus.second, linked);
  double mean = 0.0, sd = 1.0;
  StandardizeColumn(data.x.col(0), &mean, &sd);
  StandardizeColumn(data.z, &mean, &sd);
  *data.y = (data.y->array() - mean) / sd;

  ACCEPT_ASSIGN_OR_FAIL(rl, RlFit(data.x, data.z, q, {.covariance = false}));
  ACCEPT_ASSIGN_OR_FAIL(ols_true, OlsFit(data.x, *data.y));
  ACCEPT_ASSIGN_OR_FAIL(w, TransformDesign(q, data.x));
  ACCEPT_ASSIGN_OR_FAIL(derived, UnsafeDataDerivedBounds(data.x, w));
  const double reference = rl.beta_hat(0);
  const double sigma = std::sqrt(ResidualVariance(w, data.z, rl.beta_hat));
  const PrivacyBudget budget{1.0, 8.5e-5};

  BoundSet post;
  post.c_x = data.x.cwiseAbs().maxCoeff();
  post.m = 1.0;
  post.c0 = 1.0;
  post.l = derived.l;
  post.c = 1.2;
  BoundSet naive = post;
  naive.m = 0.0;
  const MatchingMatrix identity = MatchingMatrix::Identity(n);

  auto ngd_config = [&](const BoundSet& b, double fraction) -> absl::StatusOr<NgdConfig> {
    absl::StatusOr<NgdConfig> cfg = SuggestedNgdConfig(n, 1, b, sigma, fraction);
    if (!cfg.ok()) return cfg;
    BoundSet with_c = b;
    with_c.r = cfg->r;
    cfg->c = b.c;
    cfg->b = NgdSensitivityFactor(with_c);
    cfg->route = NoiseRoute::kSimplified;
    return cfg;
  };
  ACCEPT_ASSIGN_OR_FAIL(ngd_post, ngd_config(post, 1.0));
  ACCEPT_ASSIGN_OR_FAIL(ngd_post3, ngd_config(post, 1.0 / 3.0));
  ACCEPT_ASSIGN_OR_FAIL(ngd_naive, ngd_config(naive, 1.0));
  ACCEPT_ASSIGN_OR_FAIL(ssp_post, SuggestedSspConfig(n, post, sigma));
  ACCEPT_ASSIGN_OR_FAIL(ssp_naive, SuggestedSspConfig(n, naive, sigma));

  enum Arm { kNgdPost, kNgdPost3, kNgdNaive, kSspPost, kSspNaive, kArms };
  const char* names[kArms] = {"ngd_rl", "ngd_rl_t3", "ngd_naive", "ssp_rl",
                              "ssp_naive"};
  std::vector<std::vector<double>> draws(kArms);
  for (int rep = 0; rep < reps; ++rep) {
    const uint64_t s = DeriveSeed(seed, 2, rep);
    NgdConfig a = ngd_post, b = ngd_post3, c = ngd_naive;
    SspConfig e = ssp_post, f = ssp_naive;
    a.seed = b.seed = c.seed = e.seed = f.seed = s;
    absl::StatusOr<FitResult> fits[kArms] = {
        NgdFit(data, q, budget, post, a), NgdFit(data, q, budget, post, b),
        NgdFit(data, identity, budget, naive, c),
        SspFit(data, q, budget, post, e), SspFit(data, identity, budget, naive, f)};
    for (int k = 0; k < kArms; ++k) {
      if (fits[k].ok()) {
        draws[k].push_back(fits[k]->beta_hat(0));
      } else if (fits[k].status().code() != absl::StatusCode::kResourceExhausted) {
        return Fail(fits[k].status());
      }
    }
  }

  ArmStats stats[kArms];
  for (int k = 0; k < kArms; ++k) stats[k] = Stats(draws[k]);
  auto sigmas_off = [&](int k) {
    return std::abs(stats[k].mean - reference) / stats[k].se;
  };
  const bool calibrated = std::abs(linked.overall_accuracy - 0.925) <= 0.015;
  const bool pass = calibrated && sigmas_off(kNgdNaive) > 5.0 &&
                    sigmas_off(kSspNaive) > 5.0 && sigmas_off(kNgdPost) <= 3.0 &&
                    sigmas_off(kSspPost) <= 3.0 &&
                    stats[kNgdPost3].var < stats[kNgdPost].var;
  std::string detail = absl::StrCat(
      "accuracy ", linked.overall_accuracy, ", rl ", reference, " (ols on true links ",
      ols_true.beta_hat(0), "), T ", ngd_post.t, " vs ", ngd_post3.t);
  for (int k = 0; k < kArms; ++k) {
    absl::StrAppend(&detail, "; ", names[k], " ", stats[k].mean, " sd ",
                    std::sqrt(stats[k].var), " (", sigmas_off(k), " SE, ",
                    stats[k].reps, " reps)");
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

Outcome LinkerOracle() {
  const double jw = JaroWinkler("MARTHA", "MARHTA");
  Rng rng(77);
  int perfect = 0;
  const int corpora = 1000;
  for (int c = 0; c < corpora; ++c) {
    CorpusOptions opt;
    opt.n = 2 + static_cast<int>(rng.UniformInt(150));
    opt.n_blocks = 1 + static_cast<int>(rng.UniformInt(std::min(opt.n, 6)));
    opt.corruption_rate = rng.Uniform01();
    opt.seed = rng.NextU64();
    absl::StatusOr<std::pair<EntityTable, EntityTable>> corpus = GenerateCorpus(opt);
    if (!corpus.ok()) return Fail(corpus.status());
    absl::StatusOr<LinkageResult> result =
        LinkRecords(corpus->first, corpus->second, {.seed = rng.NextU64()});
    if (!result.ok()) return Fail(result.status());
    const auto& a = corpus->first.records;
    const auto& b = corpus->second.records;
    std::vector<int> used_a(a.size(), 0), used_b(b.size(), 0);
    bool ok = result->pairs.size() == a.size();
    for (const LinkPair& p : result->pairs) {
      ok &= a[p.index_a].block_key == b[p.index_b].block_key;
      ++used_a[p.index_a];
      ++used_b[p.index_b];
    }
    for (size_t i = 0; i < a.size(); ++i) ok &= used_a[i] == 1 && used_b[i] == 1;
    perfect += ok;
  }
  return {std::abs(jw - 0.9611) <= 1e-4 && perfect == corpora,
          absl::StrCat("JaroWinkler(MARTHA, MARHTA) = ", jw, ", perfect block matchings ",
                       perfect, "/", corpora)};
}

// ---------------------------------------------------------------------------

struct Shell {
  int code = -1;
  std::string out;
};

#ifdef LINKDP_CLI_PATH
Shell RunCli(const std::filesystem::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" LINKDP_CLI_PATH "' " +
                          args + " 2>>stderr.txt";
  Shell r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

Outcome CliReplay() {
  const auto dir = std::filesystem::temp_directory_path() / "linkdp_acceptance_cli";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"gen-data --n 600 --blocks 3 --seed 4 --out data", "data/manifest.json"},
      {"link --a data/a.csv --b data/b.csv --seed 5 --out link.json --emit-dir linked",
       "link.json.manifest.json"},
      {"fit --method ols --x linked/x.csv --z linked/z.csv --out ols.json",
       "ols.json.manifest.json"},
      {"fit --method rl --x linked/x.csv --z linked/z.csv --q linked/q.json "
       "--out rl.json",
       "rl.json.manifest.json"},
      {"fit --method ngd --x linked/x.csv --z linked/z.csv --q linked/q.json "
       "--standardize --seed 6 --out ngd.json",
       "ngd.json.manifest.json"},
      {"fit --method ssp --x linked/x.csv --z linked/z.csv --q linked/q.json "
       "--standardize --seed 7 --out ssp.json",
       "ssp.json.manifest.json"},
      {"budget --epsilon 0.5 --delta 1e-6 --n 600 --out budget.json",
       "budget.json.manifest.json"},
      {"simulate --setting 1 --reps 10 --seed 8 --out sim", "sim/manifest.json"},
  };
  int identical = 0;
  std::string detail;
  for (const auto& [args, manifest] : runs) {
    const std::string sub = args.substr(0, args.find(' '));
    const Shell first = RunCli(dir, args);
    if (first.code != 0) {
      absl::StrAppend(&detail, sub, " exited ", first.code, "; ");
      continue;
    }
    const Shell replay = RunCli(dir, "replay --manifest " + manifest);
    bool same = false;
    if (replay.code == 0) {
      const nlohmann::json j = nlohmann::json::parse(replay.out, nullptr, false);
      same = !j.is_discarded() && j.value("identical", false);
    }
    identical += same;
    absl::StrAppend(&detail, sub, same ? " identical" : " DIFFERS", "; ");
  }
  absl::StrAppend(&detail, identical, "/", runs.size(), " replays byte-identical");
  return {identical == static_cast<int>(runs.size()), detail};
}
#else
Outcome CliReplay() { return {false, "built without the linkdp tool"}; }
#endif

}  // namespace
}  // namespace linkdp

int main(int argc, char** argv) {
  using linkdp::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"degeneration to OLS and RL", linkdp::Degeneration},
      {"linked-response moments and toy slopes", linkdp::MomentOracle},
      {"zCDP arithmetic", linkdp::ZcdpArithmetic},
      {"unbiasedness at n=3000", linkdp::Unbiasedness},
      {"variance formulas", linkdp::VarianceFormulas},
      {"error growth in sigma", linkdp::Setting2Growth},
      {"perfect-linkage limit", linkdp::Setting3Limit},
      {"linkage-to-release pipeline", linkdp::ApplicationPipeline},
      {"linker oracle", linkdp::LinkerOracle},
      {"manifest replay", linkdp::CliReplay},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    const Outcome o = criteria[k].second();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[k].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
