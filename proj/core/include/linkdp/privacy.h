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

#ifndef LINKDP_PRIVACY_H_
#define LINKDP_PRIVACY_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "linkdp/linkage.h"

namespace linkdp {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 1e-5;

  absl::Status Validate() const;
};

// Public bounds. c_x bounds row norms of X, m the entry-wise 1-norm
// perturbation of Q, c0 the coefficient norm and l the eigenvalue range of
// X^T X / n and W^T W / n. r truncates the response and c is the iterate
// projection radius.
struct BoundSet {
  double c_x = 1.0;
  double m = 0.0;
  double c0 = 1.0;
  double l = 2.0;
  double r = 1.0;
  double c = 1.0;

  absl::Status Validate() const;
};

// rho = eps + 2 log(1/delta) - 2 sqrt((eps + log(1/delta)) log(1/delta)),
// evaluated as eps^2 / (sqrt(eps + a) + sqrt(a))^2 to avoid cancellation.
double ZcdpRho(const PrivacyBudget& budget);

// eps <= 8 log(1/delta) / (2 + sqrt(2)), with a relative slack of 1e-12 so
// the equality case survives rounding.
bool SimplifiedRegime(const PrivacyBudget& budget);

// B = R c_x (M + 4) + 2 C c_x^2 (M + 2).
double NgdSensitivityFactor(const BoundSet& bounds);

// B = R c_x (M + 4) + max{2 c_x^2 (M + 2), 2 R^2}.
double SspSensitivityFactor(const BoundSet& bounds);

enum class NoiseRoute {
  // omega = 2 eta B sqrt(T log(1/delta)) / (n eps). Only valid inside the
  // simplified regime; outside it NgdNoiseScale uses the exact route.
  kSimplified,
  // omega = (eta B / n) sqrt(T / (2 rho)). Valid for every budget.
  kExactRho,
};

std::string_view NoiseRouteName(NoiseRoute route);

absl::StatusOr<double> NgdNoiseScale(double eta, double b, int t, int n,
                                     const PrivacyBudget& budget,
                                     NoiseRoute route = NoiseRoute::kExactRho);

// omega = B sqrt(2 log(1.25/delta)) / eps. The Gaussian mechanism guarantee
// assumes eps < 1; larger eps appends a warning instead of failing.
absl::StatusOr<double> SspNoiseScale(double b, const PrivacyBudget& budget,
                                     std::vector<std::string>* warnings = nullptr);

// v if ||v|| <= radius, else v radius / ||v||.
Vector ProjectL2(const Vector& v, double radius);

// Coordinate-wise clamp to [-r, r]: the scalar projection applied to z.
Vector Truncate(const Vector& z, double r);

// sigma sqrt(2 log n).
absl::StatusOr<double> DefaultTruncation(double sigma, int n);

struct DataDerivedBounds {
  double c_x = 0.0;
  double l = 0.0;
};

// NOT PRIVATE. Reads c_x and L off the data itself (largest row norm; L with
// 1% slack over max(d lambda_max, 1 / (d lambda_min)) across X^T X / n and
// W^T W / n). For simulations and demos only: using it on real data leaks.
absl::StatusOr<DataDerivedBounds> UnsafeDataDerivedBounds(const Matrix& x,
                                                          const Matrix& w);

}  // namespace linkdp

#endif  // LINKDP_PRIVACY_H_
