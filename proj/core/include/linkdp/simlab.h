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

#ifndef LINKDP_SIMLAB_H_
#define LINKDP_SIMLAB_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "linkdp/dp_regression.h"
#include "linkdp/estimators.h"
#include "linkdp/linkage.h"
#include "linkdp/privacy.h"
#include "nlohmann/json.hpp"

namespace linkdp {

enum class SimMethod {
  kOls,        // OLS on (X, y)
  kRl,         // RL estimator on (X, z)
  kNgdRl,      // post-RL NGD on (X, z)
  kSspRl,      // post-RL SSP on (X, z)
  kNgd,        // NGD on (X, y), Q = I, M = 0
  kSsp,        // SSP on (X, y), Q = I, M = 0
  kOlsNaive,   // OLS on (X, z), ignoring linkage errors
  kNgdNaive,   // NGD on (X, z) with Q = I, M = 0
  kSspNaive,   // SSP on (X, z) with Q = I, M = 0
};

std::string_view SimMethodName(SimMethod method);
std::optional<SimMethod> ParseSimMethod(std::string_view name);

enum class SweepAxis { kN, kSigma, kGamma };

std::string_view SweepAxisName(SweepAxis axis);

struct GammaLaw {
  enum class Kind { kUniform, kFixed };
  Kind kind = Kind::kUniform;
  double lo = 0.6;  // the fixed value for kFixed
  double hi = 0.9;
};

struct ScenarioConfig {
  std::string name = "custom";
  SweepAxis axis = SweepAxis::kN;
  std::vector<double> sweep = {3000};

  // Values used when the axis does not override them.
  int n = 10000;
  int d = 1;
  // Empty means all ones.
  Vector beta;
  double sigma = 1.0;
  int block_size = 25;
  GammaLaw gamma_law;
  double m = 1.0;
  // On the gamma axis, M = (1 - gamma) / m_scale when set.
  std::optional<double> m_scale;

  double epsilon = 1.0;
  // delta = 1 / n^delta_exponent unless delta is set.
  std::optional<double> delta;
  double delta_exponent = 1.1;

  double c_x = 1.0;
  double c0 = 1.0;
  // Projection radius for the NGD iterates.
  double c = 1.0;
  double t_fraction = 1.0;
  NoiseRoute route = NoiseRoute::kSimplified;
  bool project_ngd = true;
  bool truncate = true;
  LinkageMode linkage_mode = LinkageMode::kPermutation;

  int reps = 300;
  std::vector<SimMethod> methods = {SimMethod::kOls,   SimMethod::kRl,
                                    SimMethod::kNgdRl, SimMethod::kSspRl,
                                    SimMethod::kNgd,   SimMethod::kSsp};
  uint64_t master_seed = 20240611;

  absl::Status Validate() const;
};

// The three reference scenarios at desk scale (300 repetitions).
ScenarioConfig Setting1();  // n in {3000, 6000, 10000}, sigma = 1
ScenarioConfig Setting2();  // n = 10000, sigma in {0.5, 0.6, ..., 1.8}
ScenarioConfig Setting3();  // n = 10000, gamma in {0.6, ..., 1.0}
absl::StatusOr<ScenarioConfig> PresetSetting(int setting);

nlohmann::json ScenarioToJson(const ScenarioConfig& config);
// Missing keys keep the values already in base.
absl::StatusOr<ScenarioConfig> ScenarioFromJson(const nlohmann::json& j,
                                                ScenarioConfig base = {});
// SHA-256 of the canonical JSON form.
std::string ScenarioHash(const ScenarioConfig& config);

// Everything fixed at one sweep point: design, MPM, bounds and schedules.
struct SweepPoint {
  double sweep_value = 0.0;
  int n = 0;
  double sigma = 1.0;
  ModelParams params;
  PrivacyBudget budget;
  MatchingMatrix q = MatchingMatrix::Identity(1);
  Matrix x;
  Matrix w;
  // Bounds for the post-RL arms; the other arms use m = 0.
  BoundSet bounds;
  NgdConfig ngd;
  SspConfig ssp;
  double omega_ngd_rl = 0.0;
  double omega_ngd = 0.0;
  double omega_ssp_rl = 0.0;
  double omega_ssp = 0.0;
  // Set when block_size does not divide n.
  int last_block_size = 0;
  bool truncated_last_block = false;
};

// X depends only on (master_seed, n) and the gammas only on (master_seed, n),
// so points along the sigma axis share both.
absl::StatusOr<SweepPoint> PrepareSweepPoint(const ScenarioConfig& config,
                                             size_t point_index);

struct SimInstance {
  LinkedDataset data;  // x, z and the true y
  std::vector<int> source;
  uint64_t rep_seed = 0;
};

// Fresh errors and linkage for repetition rep. The stream depends on
// (master_seed, rep) only, so every sweep point reuses the same draws.
absl::StatusOr<SimInstance> GenerateInstance(const ScenarioConfig& config,
                                             const SweepPoint& point, int rep);

struct MethodSummary {
  SimMethod method = SimMethod::kOls;
  double sweep_value = 0.0;
  int reps = 0;
  int failures = 0;
  double mean_rel_error = 0.0;
  double rel_error_se = 0.0;
  Vector mean_estimate;
  // Monte Carlo standard error of mean_estimate.
  Vector standard_error;
  Matrix emp_cov;
  std::optional<Matrix> thr_cov;
};

struct SimReport {
  ScenarioConfig config;
  std::vector<SweepPoint> points;
  // Sweep point major, config.methods order minor.
  std::vector<MethodSummary> rows;
  double wall_seconds = 0.0;

  const MethodSummary* Find(SimMethod method, size_t point_index) const;
};

// Runs every method at every sweep point. Repetitions run in parallel; rep
// failures (SSP retry exhaustion) are counted and dropped.
absl::StatusOr<SimReport> RunScenario(const ScenarioConfig& config);

// RunScenario with each DP method run both post-RL and naively on the same
// linked data.
absl::StatusOr<SimReport> CompareRlVsNonRl(ScenarioConfig config);

// Columns method, sweep_value, mean_rel_error, emp_var_trace, thr_var_trace,
// reps. thr_var_trace is empty for the naive arms.
std::string ReportCsv(const SimReport& report);

// Per-point schedules and flags for the manifest (no timings).
nlohmann::json ReportPointsJson(const SimReport& report);

}  // namespace linkdp

#endif  // LINKDP_SIMLAB_H_
