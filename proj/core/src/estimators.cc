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

#include "linkdp/estimators.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "Eigen/Cholesky"
#include "absl/strings/str_cat.h"

namespace linkdp {
namespace {

// Columns u with q_iu possibly non-zero.
std::pair<int, int> Support(const MatchingMatrix& q, int i) {
  if (!q.is_block_ele()) return {0, q.n()};
  const int b = q.BlockOf(i);
  return {q.offsets()[b], q.offsets()[b + 1]};
}

Matrix Symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

absl::StatusOr<Eigen::LDLT<Matrix>> FactorGram(const Matrix& gram) {
  if (gram.rows() == 0 || gram.rows() != gram.cols()) {
    return absl::InvalidArgumentError("Gram matrix must be square and non-empty");
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  double rcond = 0.0;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    // LDLT::rcond skips exactly zero pivots, so bound it by the pivot spread.
    const Vector d = ldlt.vectorD().cwiseAbs();
    rcond = std::min(ldlt.rcond(), d.minCoeff() / d.maxCoeff());
  }
  if (!(rcond >= kSingularRcond)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "Gram matrix is singular: reciprocal condition estimate ", rcond,
        " is below ", kSingularRcond));
  }
  return ldlt;
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kOls:
      return "ols";
    case Method::kRl:
      return "rl";
    case Method::kNgd:
      return "ngd";
    case Method::kSsp:
      return "ssp";
  }
  return "unknown";
}

std::optional<Method> ParseMethod(std::string_view name) {
  for (Method m : {Method::kOls, Method::kRl, Method::kNgd, Method::kSsp}) {
    if (MethodName(m) == name) return m;
  }
  return std::nullopt;
}

absl::StatusOr<Vector> SolveGram(const Matrix& gram, const Vector& rhs) {
  absl::StatusOr<Eigen::LDLT<Matrix>> ldlt = FactorGram(gram);
  if (!ldlt.ok()) return ldlt.status();
  return Vector(ldlt->solve(rhs));
}

absl::StatusOr<Matrix> InverseGram(const Matrix& gram) {
  absl::StatusOr<Eigen::LDLT<Matrix>> ldlt = FactorGram(gram);
  if (!ldlt.ok()) return ldlt.status();
  return Symmetrize(ldlt->solve(Matrix::Identity(gram.rows(), gram.cols())));
}

double ResidualVariance(const Matrix& x, const Vector& y, const Vector& beta) {
  return (y - x * beta).squaredNorm() / static_cast<double>(x.rows() - x.cols());
}

absl::StatusOr<FitResult> OlsFit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size() || x.cols() < 1 || x.rows() < x.cols()) {
    return absl::InvalidArgumentError(
        absl::StrCat("OLS needs n >= d >= 1 and matching lengths, got X ",
                     x.rows(), "x", x.cols(), ", y ", y.size()));
  }
  const Matrix gram = x.transpose() * x;
  absl::StatusOr<Eigen::LDLT<Matrix>> ldlt = FactorGram(gram);
  if (!ldlt.ok()) return ldlt.status();
  FitResult fit;
  fit.method = Method::kOls;
  fit.beta_hat = ldlt->solve(x.transpose() * y);
  if (x.rows() > x.cols()) {
    const double s2 = ResidualVariance(x, y, fit.beta_hat);
    fit.covariance =
        Symmetrize(s2 * ldlt->solve(Matrix::Identity(x.cols(), x.cols())));
  }
  return fit;
}

absl::StatusOr<MomentSet> MomentSet::Compute(const Matrix& x,
                                             const MatchingMatrix& q,
                                             const ModelParams& params,
                                             CrossCovarianceForm form) {
  if (x.rows() != q.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "X has ", x.rows(), " rows but Q is ", q.n(), "x", q.n()));
  }
  if (params.beta.size() != x.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "beta has ", params.beta.size(), " entries but X has ", x.cols(),
        " columns"));
  }
  if (!(params.sigma2 >= 0.0)) {
    return absl::InvalidArgumentError("sigma2 must be non-negative");
  }
  MomentSet ms(x, q);
  ms.form_ = form;
  ms.beta_ = params.beta;
  ms.sigma2_ = params.sigma2;
  ms.w_ = q.Apply(x);
  ms.mu_ = x * params.beta;
  ms.mean_ = ms.w_ * params.beta;
  ms.alpha_ = ms.mu_ - q.Apply(ms.mean_);

  const int n = q.n();
  ms.ones_ = Vector::Ones(n);
  ms.mu2_ = ms.mu_.array().square().matrix();
  ms.m2_ = ms.mean_.array().square().matrix();
  ms.sums_one_ = q.BlockSums(ms.ones_);
  ms.sums_mu_ = q.BlockSums(ms.mu_);
  ms.sums_mu2_ = q.BlockSums(ms.mu2_);
  ms.sums_m_ = q.BlockSums(ms.mean_);
  ms.sums_m2_ = q.BlockSums(ms.m2_);

  // sum_j q_ij (mu_j - m_i)^2, using a centred second moment per block.
  ms.variance_.resize(n);
  if (q.is_block_ele()) {
    for (size_t b = 0; b < q.blocks().size(); ++b) {
      const int start = q.offsets()[b];
      const int size = q.blocks()[b].size;
      const double gamma = q.blocks()[b].gamma;
      const double off = size > 1 ? (1.0 - gamma) / (size - 1) : 0.0;
      const auto mu = ms.mu_.segment(start, size);
      const double centre = mu.mean();
      const double spread = (mu.array() - centre).square().sum();
      for (int k = 0; k < size; ++k) {
        const double mi = ms.mean_(start + k);
        const double own = (mu(k) - mi) * (mu(k) - mi);
        const double all = spread + size * (centre - mi) * (centre - mi);
        ms.variance_(start + k) = gamma * own + off * (all - own);
      }
    }
  } else {
    const Matrix& dense = q.dense();
    for (int i = 0; i < n; ++i) {
      ms.variance_(i) =
          (dense.row(i).transpose().array() *
           (ms.mu_.array() - ms.mean_(i)).square())
              .sum();
    }
  }
  ms.variance_.array() += params.sigma2;
  return ms;
}

double MomentSet::CrossTerm(int i, int j) const {
  auto pw = [&](const Vector& h, const std::vector<double>& sums) {
    return q_.PairWeight(i, j, h, sums);
  };
  switch (form_) {
    case CrossCovarianceForm::kTransposed:
      return -(pw(mu2_, sums_mu2_) -
               (mean_(i) + mean_(j)) * pw(mu_, sums_mu_) +
               mean_(i) * mean_(j) * pw(ones_, sums_one_));
    case CrossCovarianceForm::kIndependentSources:
      return sigma2_ * pw(ones_, sums_one_);
    case CrossCovarianceForm::kAsPrinted:
      return alpha_(i) * alpha_(j) -
             (mu_(i) * mu_(j) * pw(ones_, sums_one_) -
              (mu_(i) + mu_(j)) * pw(mean_, sums_m_) + pw(m2_, sums_m2_));
  }
  return 0.0;
}

double MomentSet::Covariance(int i, int j) const {
  return i == j ? variance_(i) : CrossTerm(i, j);
}

Matrix MomentSet::A(int i) const {
  const int d = static_cast<int>(x_.cols());
  Matrix out = Matrix::Zero(d, d);
  const auto [lo, hi] = Support(q_, i);
  for (int j = lo; j < hi; ++j) {
    const double qij = q_.Entry(i, j);
    if (qij == 0.0) continue;
    const Vector diff = (x_.row(j) - w_.row(i)).transpose();
    out.noalias() += qij * diff * diff.transpose();
  }
  return out;
}

Matrix MomentSet::ACross(int i, int j) const {
  const int d = static_cast<int>(x_.cols());
  Matrix out = Matrix::Zero(d, d);
  if (form_ == CrossCovarianceForm::kIndependentSources) return out;
  const auto [lo, hi] = Support(q_, i);
  if (form_ == CrossCovarianceForm::kAsPrinted) {
    const Matrix qw = q_.Apply(w_);
    out = (x_.row(i) - qw.row(i)).transpose() * (x_.row(j) - qw.row(j));
    for (int u = 0; u < n(); ++u) {
      const double weight = q_.Entry(i, u) * q_.Entry(j, u);
      if (weight == 0.0) continue;
      out.noalias() -= weight * (x_.row(i) - w_.row(u)).transpose() *
                       (x_.row(j) - w_.row(u));
    }
    return out;
  }
  for (int u = lo; u < hi; ++u) {
    const double weight = q_.Entry(i, u) * q_.Entry(j, u);
    if (weight == 0.0) continue;
    out.noalias() -= weight * (x_.row(u) - w_.row(i)).transpose() *
                     (x_.row(u) - w_.row(j));
  }
  return out;
}

absl::StatusOr<Matrix> MomentSet::DenseSigma() const {
  if (n() > kDenseSigmaLimit) {
    return absl::ResourceExhaustedError(absl::StrCat(
        "refusing to materialize a ", n(), "x", n(),
        " covariance; use Sandwich above n = ", kDenseSigmaLimit));
  }
  Matrix out(n(), n());
  const bool local = q_.is_block_ele() &&
                     form_ != CrossCovarianceForm::kAsPrinted;
  for (int i = 0; i < n(); ++i) {
    out(i, i) = variance_(i);
    for (int j = i + 1; j < n(); ++j) {
      const double c =
          local && q_.BlockOf(i) != q_.BlockOf(j) ? 0.0 : CrossTerm(i, j);
      out(i, j) = c;
      out(j, i) = c;
    }
  }
  return out;
}

Matrix MomentSet::Sandwich(const Matrix& v) const {
  Matrix off;
  switch (form_) {
    case CrossCovarianceForm::kTransposed: {
      const Matrix p = mu_.asDiagonal() * q_.ApplyTranspose(v) -
                       q_.ApplyTranspose(mean_.asDiagonal() * v);
      off = -(p.transpose() * p);
      break;
    }
    case CrossCovarianceForm::kIndependentSources: {
      const Matrix p = q_.ApplyTranspose(v);
      off = sigma2_ * (p.transpose() * p);
      break;
    }
    case CrossCovarianceForm::kAsPrinted: {
      const Vector a = v.transpose() * alpha_;
      const Matrix p = q_.ApplyTranspose(mu_.asDiagonal() * v) -
                       mean_.asDiagonal() * q_.ApplyTranspose(v);
      off = a * a.transpose() - p.transpose() * p;
      break;
    }
  }
  Vector correction(n());
  for (int i = 0; i < n(); ++i) correction(i) = variance_(i) - CrossTerm(i, i);
  return Symmetrize(off + v.transpose() * correction.asDiagonal() * v);
}

absl::StatusOr<MomentSet> ZMoments(const Matrix& x, const MatchingMatrix& q,
                                   const ModelParams& params,
                                   CrossCovarianceForm form) {
  return MomentSet::Compute(x, q, params, form);
}

namespace {

absl::StatusOr<Matrix> SandwichToCovariance(const Matrix& w,
                                            const Matrix& meat) {
  absl::StatusOr<Eigen::LDLT<Matrix>> ldlt =
      FactorGram(w.transpose() * w);
  if (!ldlt.ok()) return ldlt.status();
  const Matrix half = ldlt->solve(meat);
  return Symmetrize(ldlt->solve(half.transpose()));
}

}  // namespace

absl::StatusOr<Matrix> RlCovariance(const Matrix& w, const Matrix& sigma_z) {
  if (sigma_z.rows() != w.rows() || sigma_z.cols() != w.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Sigma_z is ", sigma_z.rows(), "x", sigma_z.cols(), " but W has ",
        w.rows(), " rows"));
  }
  return SandwichToCovariance(w, w.transpose() * sigma_z * w);
}

absl::StatusOr<Matrix> RlCovariance(const Matrix& w, const MomentSet& moments) {
  if (moments.n() != w.rows()) {
    return absl::InvalidArgumentError("moment set and W differ in n");
  }
  return SandwichToCovariance(w, moments.Sandwich(w));
}

absl::StatusOr<FitResult> RlFit(const Matrix& x, const Vector& z,
                                const MatchingMatrix& q,
                                const RlFitOptions& options) {
  if (x.rows() != z.size() || x.cols() < 1 || x.rows() < x.cols()) {
    return absl::InvalidArgumentError(
        absl::StrCat("RL needs n >= d >= 1 and matching lengths, got X ",
                     x.rows(), "x", x.cols(), ", z ", z.size()));
  }
  absl::StatusOr<Matrix> w = TransformDesign(q, x);
  if (!w.ok()) return w.status();
  const Matrix gram = w->transpose() * *w;
  absl::StatusOr<Eigen::LDLT<Matrix>> ldlt = FactorGram(gram);
  if (!ldlt.ok()) return ldlt.status();
  FitResult fit;
  fit.method = Method::kRl;
  fit.beta_hat = ldlt->solve(w->transpose() * z);
  if (options.covariance && x.rows() > x.cols()) {
    // E (z_i - w_i^T beta)^2 = sigma^2 + beta^T A_i beta.
    absl::StatusOr<MomentSet> linkage_share =
        MomentSet::Compute(x, q, {fit.beta_hat, 0.0}, options.form);
    if (!linkage_share.ok()) return linkage_share.status();
    const double mse = ResidualVariance(*w, z, fit.beta_hat);
    const double s2 = std::max(0.0, mse - linkage_share->variance().mean());
    absl::StatusOr<MomentSet> moments =
        MomentSet::Compute(x, q, {fit.beta_hat, s2}, options.form);
    if (!moments.ok()) return moments.status();
    absl::StatusOr<Matrix> cov = RlCovariance(*w, *moments);
    if (!cov.ok()) return cov.status();
    fit.covariance = *std::move(cov);
  }
  return fit;
}

}  // namespace linkdp
