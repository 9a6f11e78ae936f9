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

#include "linkdp/privacy.h"

#include <algorithm>
#include <cmath>

#include "Eigen/Eigenvalues"
#include "absl/strings/str_cat.h"

namespace linkdp {

absl::Status PrivacyBudget::Validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive and finite, got ", epsilon));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

absl::Status BoundSet::Validate() const {
  const auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(c_x)) return absl::InvalidArgumentError("c_x must be positive");
  if (!(m >= 0.0) || !std::isfinite(m)) {
    return absl::InvalidArgumentError("M must be non-negative");
  }
  if (!positive(c0)) return absl::InvalidArgumentError("c0 must be positive");
  if (!(l > 1.0) || !std::isfinite(l)) {
    return absl::InvalidArgumentError(
        absl::StrCat("L must exceed 1, got ", l));
  }
  if (!positive(r)) return absl::InvalidArgumentError("R must be positive");
  if (!positive(c)) return absl::InvalidArgumentError("C must be positive");
  return absl::OkStatus();
}

double ZcdpRho(const PrivacyBudget& budget) {
  const double a = -std::log(budget.delta);
  const double root = std::sqrt(budget.epsilon + a) + std::sqrt(a);
  return budget.epsilon * budget.epsilon / (root * root);
}

bool SimplifiedRegime(const PrivacyBudget& budget) {
  const double threshold =
      8.0 * -std::log(budget.delta) / (2.0 + std::sqrt(2.0));
  return budget.epsilon <= threshold * (1.0 + 1e-12);
}

double NgdSensitivityFactor(const BoundSet& bounds) {
  return bounds.r * bounds.c_x * (bounds.m + 4.0) +
         2.0 * bounds.c * bounds.c_x * bounds.c_x * (bounds.m + 2.0);
}

double SspSensitivityFactor(const BoundSet& bounds) {
  return bounds.r * bounds.c_x * (bounds.m + 4.0) +
         std::max(2.0 * bounds.c_x * bounds.c_x * (bounds.m + 2.0),
                  2.0 * bounds.r * bounds.r);
}

std::string_view NoiseRouteName(NoiseRoute route) {
  return route == NoiseRoute::kSimplified ? "simplified" : "exact_rho";
}

absl::StatusOr<double> NgdNoiseScale(double eta, double b, int t, int n,
                                     const PrivacyBudget& budget,
                                     NoiseRoute route) {
  if (t < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("iteration count must be at least 1, got ", t));
  }
  if (n < 1) return absl::InvalidArgumentError("n must be positive");
  if (!(eta > 0.0)) return absl::InvalidArgumentError("eta must be positive");
  if (!(b >= 0.0)) return absl::InvalidArgumentError("B must be non-negative");
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (route == NoiseRoute::kSimplified && SimplifiedRegime(budget)) {
    return 2.0 * eta * b * std::sqrt(t * -std::log(budget.delta)) /
           (n * budget.epsilon);
  }
  return eta * b / n * std::sqrt(t / (2.0 * ZcdpRho(budget)));
}

absl::StatusOr<double> SspNoiseScale(double b, const PrivacyBudget& budget,
                                     std::vector<std::string>* warnings) {
  if (!(b > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("noise scale factor B must be positive, got ", b));
  }
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (budget.epsilon >= 1.0 && warnings != nullptr) {
    warnings->push_back(absl::StrCat(
        "epsilon = ", budget.epsilon,
        " is outside (0, 1) where the Gaussian mechanism calibration is "
        "proven"));
  }
  return b * std::sqrt(2.0 * std::log(1.25 / budget.delta)) / budget.epsilon;
}

Vector ProjectL2(const Vector& v, double radius) {
  const double norm = v.norm();
  if (norm <= radius) return v;
  return v * (radius / norm);
}

Vector Truncate(const Vector& z, double r) {
  return z.cwiseMax(-r).cwiseMin(r);
}

absl::StatusOr<double> DefaultTruncation(double sigma, int n) {
  if (n < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("truncation needs n >= 2, got ", n));
  }
  if (!(sigma > 0.0)) return absl::InvalidArgumentError("sigma must be positive");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

absl::StatusOr<DataDerivedBounds> UnsafeDataDerivedBounds(const Matrix& x,
                                                          const Matrix& w) {
  if (x.rows() == 0 || x.rows() != w.rows() || x.cols() != w.cols()) {
    return absl::InvalidArgumentError("X and W must be non-empty and the same shape");
  }
  const double n = static_cast<double>(x.rows());
  const double d = static_cast<double>(x.cols());
  DataDerivedBounds out;
  out.c_x = x.rowwise().norm().maxCoeff();
  double l = 1.0;
  for (const Matrix* m : {&x, &w}) {
    const Matrix gram = m->transpose() * *m / n;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
      return absl::FailedPreconditionError("Gram matrix is not positive definite");
    }
    l = std::max({l, d * hi, 1.0 / (d * lo)});
  }
  out.l = 1.01 * l;
  return out;
}

}  // namespace linkdp
