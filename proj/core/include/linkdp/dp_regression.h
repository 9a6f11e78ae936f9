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

#ifndef LINKDP_DP_REGRESSION_H_
#define LINKDP_DP_REGRESSION_H_

#include <cstdint>
#include <optional>

#include "absl/status/statusor.h"
#include "linkdp/estimators.h"
#include "linkdp/linkage.h"
#include "linkdp/privacy.h"

namespace linkdp {

struct NgdConfig {
  double eta = 1.0;
  int t = 1;
  double c = 1.0;
  double r = 1.0;
  // Noise scale factor; see NgdSensitivityFactor.
  double b = 1.0;
  // Empty means the zero vector.
  Vector beta0;
  uint64_t seed = 0;
  // Replaces the calibrated omega (0 gives plain projected gradient descent).
  std::optional<double> omega_override;
  bool truncate_response = true;
  bool project_iterates = true;
  NoiseRoute route = NoiseRoute::kExactRho;

  absl::Status Validate() const;
};

struct SspConfig {
  double r = 1.0;
  double b = 1.0;
  int max_retries = 100;
  uint64_t seed = 0;
  std::optional<double> omega_override;
  bool truncate_response = true;

  absl::Status Validate() const;
};

// eta = d / L, T = ceil(fraction * L^2 log(c0^2 n)), C = c0, beta0 = 0, and
// R = sigma sqrt(2 log n) when sigma is given (bounds.r otherwise). B follows
// from the resulting R and C.
absl::StatusOr<NgdConfig> SuggestedNgdConfig(
    int n, int d, const BoundSet& bounds,
    std::optional<double> sigma_estimate = std::nullopt,
    double t_fraction = 1.0);

// R from sigma as above (bounds.r otherwise), B from SspSensitivityFactor.
absl::StatusOr<SspConfig> SuggestedSspConfig(
    int n, const BoundSet& bounds,
    std::optional<double> sigma_estimate = std::nullopt);

// Post-RL noisy gradient descent: exactly T steps of
//   beta <- Pi_C(beta - (eta/n) W^T (W beta - Pi_R(z)) + N(0, omega^2 I)).
// Without a config the schedule comes from SuggestedNgdConfig with
// bounds.r as the truncation level.
absl::StatusOr<FitResult> NgdFit(const LinkedDataset& data,
                                 const MatchingMatrix& q,
                                 const PrivacyBudget& budget,
                                 const BoundSet& bounds,
                                 const std::optional<NgdConfig>& config);

// Post-RL sufficient statistics perturbation:
//   (W^T W + U)^{-1} (W^T Pi_R(z) + u)
// with U symmetric (upper triangle drawn row-major, then mirrored) and u drawn
// after U. A draw is redone while the reciprocal condition number of
// W^T W + U is below kSingularRcond, at most max_retries times.
absl::StatusOr<FitResult> SspFit(const LinkedDataset& data,
                                 const MatchingMatrix& q,
                                 const PrivacyBudget& budget,
                                 const BoundSet& bounds,
                                 const std::optional<SspConfig>& config);

struct VarianceReport {
  Matrix sigma_rl;
  // The linkage/response share of total (S B^T Sigma_z B S for NGD, Sigma^RL
  // for SSP).
  Matrix nonprivate_component;
  Matrix privacy_component;
  Matrix total;
  double omega = 0.0;
};

// Covariance of the T-th unprojected, untruncated NGD iterate started from a
// fixed point. With A = (eta/n) W^T W:
//   S (eta/n)^2 W^T Sigma_z W S + omega^2 sum_{t=1..T} (I - A)^{2t-2},
//   S = sum_{t=1..T} (I - A)^{t-1}.
// Conservative for the projected algorithm. Fails when the spectral radius
// of I - A is not below 1.
absl::StatusOr<VarianceReport> NgdVariance(const Matrix& w,
                                           const Matrix& sigma_z, double eta,
                                           int t, double omega);
absl::StatusOr<VarianceReport> NgdVariance(const Matrix& w,
                                           const MomentSet& moments,
                                           double eta, int t, double omega);

// First-order covariance of the SSP estimator:
//   Sigma^RL + omega^2 G^{-1} (I + S0 + S1 + S2) G^{-1},   G = W^T W,
// where S(M) has trace(M) on the diagonal and M_kl off it, S0 = S(beta
// beta^T), S1 = S(Sigma^RL), S2 = S(omega^2 G^{-2}). A Taylor proxy: it can
// understate the variance when omega is large relative to G.
absl::StatusOr<VarianceReport> SspVariance(const Matrix& w, const Vector& beta,
                                           const Matrix& sigma_rl,
                                           double omega);

}  // namespace linkdp

#endif  // LINKDP_DP_REGRESSION_H_
