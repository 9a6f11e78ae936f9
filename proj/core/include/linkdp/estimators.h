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

#ifndef LINKDP_ESTIMATORS_H_
#define LINKDP_ESTIMATORS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "Eigen/Core"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "linkdp/linkage.h"

namespace linkdp {

// Reciprocal condition number below which a Gram matrix counts as singular.
inline constexpr double kSingularRcond = 1e-12;

// Largest n for which MomentSet::DenseSigma materializes the n x n matrix.
inline constexpr int kDenseSigmaLimit = 5000;

struct ModelParams {
  Vector beta;
  double sigma2 = 1.0;
};

enum class Method { kOls, kRl, kNgd, kSsp };

std::string_view MethodName(Method method);
std::optional<Method> ParseMethod(std::string_view name);

struct FitResult {
  Vector beta_hat;
  Method method = Method::kOls;
  std::optional<Matrix> covariance;
  std::optional<double> noise_scale;
  std::optional<int> iterations;
  std::optional<uint64_t> seed;
  // Singular redraws consumed by SSP.
  int retries = 0;
  std::vector<std::string> warnings;
};

// Solves gram * beta = rhs for symmetric positive semidefinite gram with an
// LDLT factorization. Fails with FailedPrecondition, quoting the reciprocal
// condition estimate, when gram is numerically singular.
absl::StatusOr<Vector> SolveGram(const Matrix& gram, const Vector& rhs);

// Inverse of a well-conditioned symmetric Gram matrix via the same
// factorization.
absl::StatusOr<Matrix> InverseGram(const Matrix& gram);

// Least squares of y on x. Covariance is sigma_hat^2 (X^T X)^{-1} with the
// residual mean square over n - d; omitted when n == d.
absl::StatusOr<FitResult> OlsFit(const Matrix& x, const Vector& y);

// Residual sum of squares over n - d. Requires n > d.
double ResidualVariance(const Matrix& x, const Vector& y, const Vector& beta);

// Which law defines Cov(z_i, z_j) for i != j.
enum class CrossCovarianceForm {
  // A_ij = sum_u sum_{v != u} q_iu q_jv (x_u - w_i)(x_v - w_j)^T. Exact for a
  // one-to-one linkage with P(s_i = u, s_j = v) = q_iu q_jv for u != v, and
  // zero across blocks.
  kTransposed,
  // A_ij = sum_u sum_{v != u} q_iu q_jv (x_i - w_u)(x_j - w_v)^T, the record
  // and source roles swapped. Couples every pair of records, including
  // records in different blocks.
  kAsPrinted,
  // Sources drawn independently per record: Cov(z_i, z_j) = sigma^2 (Q Q^T)_ij.
  kIndependentSources,
};

// First and second moments of the linked response under Q. Entries of
// Sigma_z are evaluated on demand; nothing of size n x n is stored.
class MomentSet {
 public:
  static absl::StatusOr<MomentSet> Compute(
      const Matrix& x, const MatchingMatrix& q, const ModelParams& params,
      CrossCovarianceForm form = CrossCovarianceForm::kTransposed);

  int n() const { return static_cast<int>(mean_.size()); }
  CrossCovarianceForm form() const { return form_; }

  // E z_i = w_i^T beta.
  const Vector& mean_z() const { return mean_; }
  // Var z_i = sigma^2 + beta^T A_i beta.
  const Vector& variance() const { return variance_; }

  double Covariance(int i, int j) const;

  // A_i = sum_j q_ij (x_j - w_i)(x_j - w_i)^T.
  Matrix A(int i) const;
  // The d x d cross matrix of the configured form (zero for independent
  // sources, whose covariance is carried by sigma^2 alone).
  Matrix ACross(int i, int j) const;

  // Fails with ResourceExhausted above kDenseSigmaLimit.
  absl::StatusOr<Matrix> DenseSigma() const;

  // V^T Sigma_z V for an n x k matrix V in O(n k^2).
  Matrix Sandwich(const Matrix& v) const;

 private:
  MomentSet(const Matrix& x, const MatchingMatrix& q) : x_(x), q_(q) {}

  // The cross formula evaluated at i == j; Sandwich sums it over all pairs
  // and replaces the diagonal afterwards.
  double CrossTerm(int i, int j) const;

  Matrix x_;
  MatchingMatrix q_;
  Matrix w_;
  Vector beta_;
  double sigma2_ = 0.0;
  CrossCovarianceForm form_ = CrossCovarianceForm::kTransposed;
  Vector mu_;       // X beta
  Vector mean_;     // W beta
  Vector alpha_;    // X beta - Q W beta
  Vector variance_;
  Vector ones_;
  Vector mu2_;
  Vector m2_;
  std::vector<double> sums_one_;
  std::vector<double> sums_mu_;
  std::vector<double> sums_mu2_;
  std::vector<double> sums_m_;
  std::vector<double> sums_m2_;
};

absl::StatusOr<MomentSet> ZMoments(
    const Matrix& x, const MatchingMatrix& q, const ModelParams& params,
    CrossCovarianceForm form = CrossCovarianceForm::kTransposed);

// Sigma^RL = G^{-1} W^T Sigma_z W G^{-1} with G = W^T W, symmetrized.
absl::StatusOr<Matrix> RlCovariance(const Matrix& w, const Matrix& sigma_z);
absl::StatusOr<Matrix> RlCovariance(const Matrix& w, const MomentSet& moments);

struct RlFitOptions {
  // Attach a plug-in Sigma^RL evaluated at (beta_hat, sigma_hat^2), where
  // sigma_hat^2 removes the linkage share of the residual mean square.
  bool covariance = true;
  CrossCovarianceForm form = CrossCovarianceForm::kTransposed;
};

// beta_RL = (W^T W)^{-1} W^T z with W = QX. With Q the identity this runs the
// same arithmetic as OlsFit and returns identical coefficients.
absl::StatusOr<FitResult> RlFit(const Matrix& x, const Vector& z,
                                const MatchingMatrix& q,
                                const RlFitOptions& options = {});

}  // namespace linkdp

#endif  // LINKDP_ESTIMATORS_H_
