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

#include <algorithm>
#include <cmath>
#include <utility>

#include "Eigen/Eigenvalues"
#include "Eigen/LU"
#include "absl/strings/str_cat.h"
#include "linkdp/random.h"

namespace linkdp {
namespace {

Matrix Symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

absl::Status CheckInputs(const LinkedDataset& data, const MatchingMatrix& q,
                         const PrivacyBudget& budget, const BoundSet& bounds) {
  if (absl::Status s = ValidateDataset(data); !s.ok()) return s;
  if (q.n() != data.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Q is ", q.n(), "x", q.n(), " but the data has ", data.n(), " rows"));
  }
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  return bounds.Validate();
}

// trace(m) on the diagonal, m_kl elsewhere.
Matrix TraceSpread(const Matrix& m) {
  Matrix out = m;
  out.diagonal().setConstant(m.trace());
  return out;
}

}  // namespace

absl::Status NgdConfig::Validate() const {
  if (!(eta > 0.0)) return absl::InvalidArgumentError("eta must be positive");
  if (t < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("iteration count must be at least 1, got ", t));
  }
  if (!(c > 0.0)) return absl::InvalidArgumentError("C must be positive");
  if (!(r > 0.0)) return absl::InvalidArgumentError("R must be positive");
  if (!(b >= 0.0)) return absl::InvalidArgumentError("B must be non-negative");
  if (omega_override.has_value() && !(*omega_override >= 0.0)) {
    return absl::InvalidArgumentError("omega override must be non-negative");
  }
  return absl::OkStatus();
}

absl::Status SspConfig::Validate() const {
  if (!(r > 0.0)) return absl::InvalidArgumentError("R must be positive");
  if (!(b > 0.0)) return absl::InvalidArgumentError("B must be positive");
  if (max_retries < 1) {
    return absl::InvalidArgumentError("max_retries must be at least 1");
  }
  if (omega_override.has_value() && !(*omega_override >= 0.0)) {
    return absl::InvalidArgumentError("omega override must be non-negative");
  }
  return absl::OkStatus();
}

absl::StatusOr<NgdConfig> SuggestedNgdConfig(int n, int d,
                                             const BoundSet& bounds,
                                             std::optional<double> sigma_estimate,
                                             double t_fraction) {
  if (absl::Status s = bounds.Validate(); !s.ok()) return s;
  if (n < 2 || d < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("need n >= 2 and d >= 1, got n=", n, " d=", d));
  }
  if (!(t_fraction > 0.0)) {
    return absl::InvalidArgumentError("T fraction must be positive");
  }
  NgdConfig config;
  config.eta = d / bounds.l;
  const double steps = t_fraction * bounds.l * bounds.l *
                       std::log(bounds.c0 * bounds.c0 * n);
  config.t = std::max(1, static_cast<int>(std::ceil(steps)));
  config.c = bounds.c0;
  config.r = bounds.r;
  if (sigma_estimate.has_value()) {
    absl::StatusOr<double> r = DefaultTruncation(*sigma_estimate, n);
    if (!r.ok()) return r.status();
    config.r = *r;
  }
  BoundSet resolved = bounds;
  resolved.r = config.r;
  resolved.c = config.c;
  config.b = NgdSensitivityFactor(resolved);
  config.beta0 = Vector::Zero(d);
  return config;
}

absl::StatusOr<SspConfig> SuggestedSspConfig(
    int n, const BoundSet& bounds, std::optional<double> sigma_estimate) {
  if (absl::Status s = bounds.Validate(); !s.ok()) return s;
  SspConfig config;
  config.r = bounds.r;
  if (sigma_estimate.has_value()) {
    absl::StatusOr<double> r = DefaultTruncation(*sigma_estimate, n);
    if (!r.ok()) return r.status();
    config.r = *r;
  }
  BoundSet resolved = bounds;
  resolved.r = config.r;
  config.b = SspSensitivityFactor(resolved);
  return config;
}

absl::StatusOr<FitResult> NgdFit(const LinkedDataset& data,
                                 const MatchingMatrix& q,
                                 const PrivacyBudget& budget,
                                 const BoundSet& bounds,
                                 const std::optional<NgdConfig>& config) {
  if (absl::Status s = CheckInputs(data, q, budget, bounds); !s.ok()) return s;
  const int n = data.n();
  const int d = data.d();
  NgdConfig cfg;
  if (config.has_value()) {
    cfg = *config;
  } else {
    absl::StatusOr<NgdConfig> suggested = SuggestedNgdConfig(n, d, bounds);
    if (!suggested.ok()) return suggested.status();
    cfg = *std::move(suggested);
  }
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (cfg.beta0.size() == 0) cfg.beta0 = Vector::Zero(d);
  if (cfg.beta0.size() != d) {
    return absl::InvalidArgumentError("beta0 length differs from d");
  }

  double omega = 0.0;
  if (cfg.omega_override.has_value()) {
    omega = *cfg.omega_override;
  } else {
    absl::StatusOr<double> scale =
        NgdNoiseScale(cfg.eta, cfg.b, cfg.t, n, budget, cfg.route);
    if (!scale.ok()) return scale.status();
    omega = *scale;
  }

  const Matrix w = q.Apply(data.x);
  const Vector z = cfg.truncate_response ? Truncate(data.z, cfg.r) : data.z;
  const Matrix gram = w.transpose() * w / static_cast<double>(n);
  const Vector target = w.transpose() * z / static_cast<double>(n);

  Rng rng(cfg.seed);
  Vector beta = cfg.beta0;
  for (int step = 0; step < cfg.t; ++step) {
    beta -= cfg.eta * (gram * beta - target);
    for (int k = 0; k < d; ++k) beta(k) += omega * rng.Normal();
    if (cfg.project_iterates) beta = ProjectL2(beta, cfg.c);
  }

  FitResult fit;
  fit.method = Method::kNgd;
  fit.beta_hat = std::move(beta);
  fit.noise_scale = omega;
  fit.iterations = cfg.t;
  fit.seed = cfg.seed;
  return fit;
}

absl::StatusOr<FitResult> SspFit(const LinkedDataset& data,
                                 const MatchingMatrix& q,
                                 const PrivacyBudget& budget,
                                 const BoundSet& bounds,
                                 const std::optional<SspConfig>& config) {
  if (absl::Status s = CheckInputs(data, q, budget, bounds); !s.ok()) return s;
  const int n = data.n();
  const int d = data.d();
  SspConfig cfg;
  if (config.has_value()) {
    cfg = *config;
  } else {
    absl::StatusOr<SspConfig> suggested = SuggestedSspConfig(n, bounds);
    if (!suggested.ok()) return suggested.status();
    cfg = *std::move(suggested);
  }
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;

  FitResult fit;
  fit.method = Method::kSsp;
  fit.seed = cfg.seed;
  double omega = 0.0;
  if (cfg.omega_override.has_value()) {
    omega = *cfg.omega_override;
  } else {
    absl::StatusOr<double> scale = SspNoiseScale(cfg.b, budget, &fit.warnings);
    if (!scale.ok()) return scale.status();
    omega = *scale;
  }
  fit.noise_scale = omega;

  const Matrix w = q.Apply(data.x);
  const Vector z = cfg.truncate_response ? Truncate(data.z, cfg.r) : data.z;
  const Matrix gram = w.transpose() * w;
  const Vector moment = w.transpose() * z;

  Rng rng(cfg.seed);
  double rcond = 0.0;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    Matrix noisy = gram;
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        const double e = omega * rng.Normal();
        noisy(i, j) += e;
        if (j != i) noisy(j, i) += e;
      }
    }
    Vector rhs = moment;
    for (int k = 0; k < d; ++k) rhs(k) += omega * rng.Normal();
    Eigen::PartialPivLU<Matrix> lu(noisy);
    rcond = lu.rcond();
    if (rcond >= kSingularRcond) {
      fit.beta_hat = lu.solve(rhs);
      fit.retries = attempt;
      return fit;
    }
    if (omega == 0.0) break;
  }
  const std::string message = absl::StrCat(
      "W^T W + U stayed computationally singular (reciprocal condition ",
      rcond, " below ", kSingularRcond, ")");
  if (omega == 0.0) return absl::FailedPreconditionError(message);
  return absl::ResourceExhaustedError(
      absl::StrCat(message, " after ", cfg.max_retries, " redraws"));
}

namespace {

absl::StatusOr<VarianceReport> NgdVarianceFromMeat(const Matrix& w,
                                                   const Matrix& meat,
                                                   double eta, int t,
                                                   double omega) {
  if (t < 1) return absl::InvalidArgumentError("T must be at least 1");
  if (!(eta > 0.0)) return absl::InvalidArgumentError("eta must be positive");
  if (!(omega >= 0.0)) {
    return absl::InvalidArgumentError("omega must be non-negative");
  }
  const int d = static_cast<int>(w.cols());
  const double scale = eta / static_cast<double>(w.rows());
  const Matrix gram = w.transpose() * w;
  const Matrix step = Matrix::Identity(d, d) - scale * gram;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(step, Eigen::EigenvaluesOnly);
  const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "gradient recursion diverges: spectral radius of I - (eta/n) W^T W is ",
        radius));
  }
  absl::StatusOr<Matrix> ginv = InverseGram(gram);
  if (!ginv.ok()) return ginv.status();

  Matrix power = Matrix::Identity(d, d);
  Matrix s = Matrix::Zero(d, d);
  Matrix noise = Matrix::Zero(d, d);
  for (int i = 0; i < t; ++i) {
    s += power;
    noise += power * power;
    power = power * step;
  }
  VarianceReport report;
  report.omega = omega;
  report.sigma_rl = Symmetrize(*ginv * meat * *ginv);
  report.nonprivate_component = Symmetrize(scale * scale * s * meat * s);
  report.privacy_component = Symmetrize(omega * omega * noise);
  report.total = report.nonprivate_component + report.privacy_component;
  return report;
}

}  // namespace

absl::StatusOr<VarianceReport> NgdVariance(const Matrix& w,
                                           const Matrix& sigma_z, double eta,
                                           int t, double omega) {
  if (sigma_z.rows() != w.rows() || sigma_z.cols() != w.rows()) {
    return absl::InvalidArgumentError("Sigma_z must be n x n with n = rows(W)");
  }
  return NgdVarianceFromMeat(w, w.transpose() * sigma_z * w, eta, t, omega);
}

absl::StatusOr<VarianceReport> NgdVariance(const Matrix& w,
                                           const MomentSet& moments,
                                           double eta, int t, double omega) {
  if (moments.n() != w.rows()) {
    return absl::InvalidArgumentError("moment set and W differ in n");
  }
  return NgdVarianceFromMeat(w, moments.Sandwich(w), eta, t, omega);
}

absl::StatusOr<VarianceReport> SspVariance(const Matrix& w, const Vector& beta,
                                           const Matrix& sigma_rl,
                                           double omega) {
  const int d = static_cast<int>(w.cols());
  if (beta.size() != d || sigma_rl.rows() != d || sigma_rl.cols() != d) {
    return absl::InvalidArgumentError("beta and Sigma^RL must match cols(W)");
  }
  if (!(omega >= 0.0)) {
    return absl::InvalidArgumentError("omega must be non-negative");
  }
  absl::StatusOr<Matrix> ginv = InverseGram(w.transpose() * w);
  if (!ginv.ok()) return ginv.status();
  const double w2 = omega * omega;
  const Matrix second = w2 * *ginv * *ginv;
  const Matrix inner = Matrix::Identity(d, d) +
                       TraceSpread(beta * beta.transpose()) +
                       TraceSpread(sigma_rl) + TraceSpread(second);
  VarianceReport report;
  report.omega = omega;
  report.sigma_rl = sigma_rl;
  report.nonprivate_component = sigma_rl;
  report.privacy_component = Symmetrize(w2 * *ginv * inner * *ginv);
  report.total = sigma_rl + report.privacy_component;
  return report;
}

}  // namespace linkdp
