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

#include "linkdp/simlab.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "linkdp/io.h"
#include "linkdp/parallel.h"
#include "linkdp/random.h"

namespace linkdp {
namespace {

// Stream tags under the master seed.
constexpr uint64_t kDesignStream = 1;
constexpr uint64_t kGammaStream = 2;
constexpr uint64_t kRepStream = 3;
// Stream tags under a repetition seed.
constexpr uint64_t kDataStream = 0;
constexpr uint64_t kNgdStream = 1;
constexpr uint64_t kSspStream = 2;

constexpr SimMethod kAllMethods[] = {
    SimMethod::kOls,      SimMethod::kRl,       SimMethod::kNgdRl,
    SimMethod::kSspRl,    SimMethod::kNgd,      SimMethod::kSsp,
    SimMethod::kOlsNaive, SimMethod::kNgdNaive, SimMethod::kSspNaive};

bool IsNaive(SimMethod m) {
  return m == SimMethod::kOlsNaive || m == SimMethod::kNgdNaive ||
         m == SimMethod::kSspNaive;
}

Vector TrueBeta(const ScenarioConfig& config) {
  return config.beta.size() > 0 ? config.beta : Vector::Ones(config.d);
}

}  // namespace

std::string_view SimMethodName(SimMethod method) {
  switch (method) {
    case SimMethod::kOls:
      return "ols";
    case SimMethod::kRl:
      return "rl";
    case SimMethod::kNgdRl:
      return "ngd_rl";
    case SimMethod::kSspRl:
      return "ssp_rl";
    case SimMethod::kNgd:
      return "ngd";
    case SimMethod::kSsp:
      return "ssp";
    case SimMethod::kOlsNaive:
      return "ols_naive";
    case SimMethod::kNgdNaive:
      return "ngd_naive";
    case SimMethod::kSspNaive:
      return "ssp_naive";
  }
  return "unknown";
}

std::optional<SimMethod> ParseSimMethod(std::string_view name) {
  for (SimMethod m : kAllMethods) {
    if (SimMethodName(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kN:
      return "n";
    case SweepAxis::kSigma:
      return "sigma";
    case SweepAxis::kGamma:
      return "gamma";
  }
  return "unknown";
}

absl::Status ScenarioConfig::Validate() const {
  if (reps < 1) return absl::InvalidArgumentError("reps must be at least 1");
  if (sweep.empty()) return absl::InvalidArgumentError("sweep list is empty");
  if (methods.empty()) return absl::InvalidArgumentError("no methods selected");
  if (d < 1) return absl::InvalidArgumentError("d must be at least 1");
  if (beta.size() != 0 && beta.size() != d) {
    return absl::InvalidArgumentError("beta length differs from d");
  }
  if (block_size < 1) {
    return absl::InvalidArgumentError("block_size must be positive");
  }
  if (!(gamma_law.lo >= 0.0 && gamma_law.hi <= 1.0 &&
        (gamma_law.kind == GammaLaw::Kind::kFixed ||
         gamma_law.lo <= gamma_law.hi))) {
    return absl::InvalidArgumentError("gamma law must lie within [0, 1]");
  }
  if (!(m >= 0.0)) return absl::InvalidArgumentError("M must be non-negative");
  if (m_scale.has_value() && !(*m_scale > 0.0)) {
    return absl::InvalidArgumentError("m_scale must be positive");
  }
  if (!(epsilon > 0.0)) return absl::InvalidArgumentError("epsilon must be positive");
  if (delta.has_value() && !(*delta > 0.0 && *delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (!(delta_exponent > 0.0)) {
    return absl::InvalidArgumentError("delta_exponent must be positive");
  }
  if (!(c_x > 0.0 && c0 > 0.0 && c > 0.0 && t_fraction > 0.0)) {
    return absl::InvalidArgumentError("c_x, c0, C and t_fraction must be positive");
  }
  for (double v : sweep) {
    switch (axis) {
      case SweepAxis::kN:
        if (v != std::floor(v) || v < std::max(2, d + 1)) {
          return absl::InvalidArgumentError(absl::StrCat(
              "n sweep values must be integers above d, got ", v));
        }
        break;
      case SweepAxis::kSigma:
        if (!(v > 0.0)) {
          return absl::InvalidArgumentError("sigma sweep values must be positive");
        }
        break;
      case SweepAxis::kGamma:
        if (!(v >= 0.0 && v <= 1.0)) {
          return absl::InvalidArgumentError("gamma sweep values must lie in [0, 1]");
        }
        break;
    }
  }
  if (axis != SweepAxis::kN && n < std::max(2, d + 1)) {
    return absl::InvalidArgumentError("n must exceed d");
  }
  if (!(sigma > 0.0)) return absl::InvalidArgumentError("sigma must be positive");
  return absl::OkStatus();
}

ScenarioConfig Setting1() {
  ScenarioConfig c;
  c.name = "setting1";
  c.axis = SweepAxis::kN;
  c.sweep = {3000, 6000, 10000};
  c.sigma = 1.0;
  c.m = 1.0;
  c.c = 3.0;
  return c;
}

ScenarioConfig Setting2() {
  ScenarioConfig c;
  c.name = "setting2";
  c.axis = SweepAxis::kSigma;
  c.sweep.clear();
  for (int k = 5; k <= 18; ++k) c.sweep.push_back(k / 10.0);
  c.n = 10000;
  c.m = 1.0;
  c.c = 1.0;
  return c;
}

ScenarioConfig Setting3() {
  ScenarioConfig c;
  c.name = "setting3";
  c.axis = SweepAxis::kGamma;
  c.sweep = {0.6, 0.7, 0.8, 0.9, 1.0};
  c.n = 10000;
  c.sigma = 1.0;
  c.gamma_law = {GammaLaw::Kind::kFixed, 1.0, 1.0};
  c.m_scale = 0.4;
  c.c = 3.0;
  return c;
}

absl::StatusOr<ScenarioConfig> PresetSetting(int setting) {
  switch (setting) {
    case 1:
      return Setting1();
    case 2:
      return Setting2();
    case 3:
      return Setting3();
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown setting ", setting, "; expected 1, 2 or 3"));
}

nlohmann::json ScenarioToJson(const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["axis"] = std::string(SweepAxisName(c.axis));
  j["sweep"] = c.sweep;
  j["n"] = c.n;
  j["d"] = c.d;
  const Vector beta = TrueBeta(c);
  j["beta"] = std::vector<double>(beta.begin(), beta.end());
  j["sigma"] = c.sigma;
  j["block_size"] = c.block_size;
  j["gamma_law"] = {
      {"kind", c.gamma_law.kind == GammaLaw::Kind::kFixed ? "fixed" : "uniform"},
      {"lo", c.gamma_law.lo},
      {"hi", c.gamma_law.hi}};
  j["m"] = c.m;
  j["m_scale"] = c.m_scale.has_value() ? nlohmann::json(*c.m_scale)
                                       : nlohmann::json(nullptr);
  j["epsilon"] = c.epsilon;
  j["delta"] =
      c.delta.has_value() ? nlohmann::json(*c.delta) : nlohmann::json(nullptr);
  j["delta_exponent"] = c.delta_exponent;
  j["c_x"] = c.c_x;
  j["c0"] = c.c0;
  j["c"] = c.c;
  j["t_fraction"] = c.t_fraction;
  j["route"] = std::string(NoiseRouteName(c.route));
  j["project_ngd"] = c.project_ngd;
  j["truncate"] = c.truncate;
  j["linkage_mode"] = c.linkage_mode == LinkageMode::kPermutation
                          ? "permutation"
                          : "independent";
  j["reps"] = c.reps;
  nlohmann::json methods = nlohmann::json::array();
  for (SimMethod m : c.methods) methods.push_back(std::string(SimMethodName(m)));
  j["methods"] = std::move(methods);
  j["master_seed"] = c.master_seed;
  return j;
}

absl::StatusOr<ScenarioConfig> ScenarioFromJson(const nlohmann::json& j,
                                                ScenarioConfig c) {
  if (!j.is_object()) {
    return absl::InvalidArgumentError("scenario config must be a JSON object");
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
        c.name = value.get<std::string>();
      } else if (key == "axis") {
        const std::string axis = value.get<std::string>();
        if (axis == "n") {
          c.axis = SweepAxis::kN;
        } else if (axis == "sigma") {
          c.axis = SweepAxis::kSigma;
        } else if (axis == "gamma") {
          c.axis = SweepAxis::kGamma;
        } else {
          return absl::InvalidArgumentError(
              absl::StrCat("unknown sweep axis '", axis, "'"));
        }
      } else if (key == "sweep") {
        c.sweep = value.get<std::vector<double>>();
      } else if (key == "n") {
        c.n = value.get<int>();
      } else if (key == "d") {
        c.d = value.get<int>();
      } else if (key == "beta") {
        const std::vector<double> beta = value.get<std::vector<double>>();
        c.beta = Eigen::Map<const Vector>(beta.data(), beta.size());
      } else if (key == "sigma") {
        c.sigma = value.get<double>();
      } else if (key == "block_size") {
        c.block_size = value.get<int>();
      } else if (key == "gamma_law") {
        const std::string kind = value.value("kind", "uniform");
        if (kind != "uniform" && kind != "fixed") {
          return absl::InvalidArgumentError(
              absl::StrCat("unknown gamma law '", kind, "'"));
        }
        c.gamma_law.kind = kind == "fixed" ? GammaLaw::Kind::kFixed
                                           : GammaLaw::Kind::kUniform;
        c.gamma_law.lo = value.value("lo", c.gamma_law.lo);
        c.gamma_law.hi = value.value("hi", c.gamma_law.lo);
        if (c.gamma_law.kind == GammaLaw::Kind::kUniform) {
          c.gamma_law.hi = value.at("hi").get<double>();
        }
      } else if (key == "m") {
        c.m = value.get<double>();
      } else if (key == "m_scale") {
        c.m_scale = value.is_null() ? std::nullopt
                                    : std::optional<double>(value.get<double>());
      } else if (key == "epsilon") {
        c.epsilon = value.get<double>();
      } else if (key == "delta") {
        c.delta = value.is_null() ? std::nullopt
                                  : std::optional<double>(value.get<double>());
      } else if (key == "delta_exponent") {
        c.delta_exponent = value.get<double>();
      } else if (key == "c_x") {
        c.c_x = value.get<double>();
      } else if (key == "c0") {
        c.c0 = value.get<double>();
      } else if (key == "c") {
        c.c = value.get<double>();
      } else if (key == "t_fraction") {
        c.t_fraction = value.get<double>();
      } else if (key == "route") {
        const std::string route = value.get<std::string>();
        if (route == "simplified") {
          c.route = NoiseRoute::kSimplified;
        } else if (route == "exact_rho") {
          c.route = NoiseRoute::kExactRho;
        } else {
          return absl::InvalidArgumentError(
              absl::StrCat("unknown noise route '", route, "'"));
        }
      } else if (key == "project_ngd") {
        c.project_ngd = value.get<bool>();
      } else if (key == "truncate") {
        c.truncate = value.get<bool>();
      } else if (key == "linkage_mode") {
        const std::string mode = value.get<std::string>();
        if (mode == "permutation") {
          c.linkage_mode = LinkageMode::kPermutation;
        } else if (mode == "independent") {
          c.linkage_mode = LinkageMode::kIndependent;
        } else {
          return absl::InvalidArgumentError(
              absl::StrCat("unknown linkage mode '", mode, "'"));
        }
      } else if (key == "reps") {
        c.reps = value.get<int>();
      } else if (key == "methods") {
        c.methods.clear();
        for (const nlohmann::json& name : value) {
          const std::optional<SimMethod> m =
              ParseSimMethod(name.get<std::string>());
          if (!m.has_value()) {
            return absl::InvalidArgumentError(absl::StrCat(
                "unknown method '", name.get<std::string>(), "'"));
          }
          c.methods.push_back(*m);
        }
      } else if (key == "master_seed") {
        c.master_seed = value.get<uint64_t>();
      } else {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown scenario key '", key, "'"));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed scenario config: ", e.what()));
  }
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

std::string ScenarioHash(const ScenarioConfig& config) {
  return Sha256Hex(ScenarioToJson(config).dump());
}

absl::StatusOr<SweepPoint> PrepareSweepPoint(const ScenarioConfig& config,
                                             size_t point_index) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  if (point_index >= config.sweep.size()) {
    return absl::OutOfRangeError("sweep point index out of range");
  }
  const double value = config.sweep[point_index];
  SweepPoint p;
  p.sweep_value = value;
  p.n = config.axis == SweepAxis::kN ? static_cast<int>(value) : config.n;
  p.sigma = config.axis == SweepAxis::kSigma ? value : config.sigma;
  GammaLaw law = config.gamma_law;
  double m = config.m;
  if (config.axis == SweepAxis::kGamma) {
    law = {GammaLaw::Kind::kFixed, value, value};
    if (config.m_scale.has_value()) m = (1.0 - value) / *config.m_scale;
  }
  const int n = p.n;
  const int d = config.d;
  p.params = {TrueBeta(config), p.sigma * p.sigma};
  p.budget = {config.epsilon,
              config.delta.value_or(std::pow(n, -config.delta_exponent))};

  Rng design(DeriveSeed(config.master_seed, kDesignStream, n));
  p.x.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) p.x(i, k) = design.Uniform(-1.0, 1.0);
  }

  Rng gammas(DeriveSeed(config.master_seed, kGammaStream, n));
  std::vector<EleBlock> blocks;
  for (int start = 0; start < n; start += config.block_size) {
    const int size = std::min(config.block_size, n - start);
    double gamma = law.kind == GammaLaw::Kind::kFixed
                       ? law.lo
                       : gammas.Uniform(law.lo, law.hi);
    if (size == 1) gamma = 1.0;
    blocks.push_back({size, gamma});
  }
  p.last_block_size = blocks.back().size;
  p.truncated_last_block = n % config.block_size != 0;
  absl::StatusOr<MatchingMatrix> q = MatchingMatrix::FromBlocks(std::move(blocks));
  if (!q.ok()) return q.status();
  p.q = *std::move(q);
  p.w = p.q.Apply(p.x);

  absl::StatusOr<DataDerivedBounds> derived = UnsafeDataDerivedBounds(p.x, p.w);
  if (!derived.ok()) return derived.status();
  absl::StatusOr<double> r = DefaultTruncation(p.sigma, n);
  if (!r.ok()) return r.status();
  p.bounds = {config.c_x, m, config.c0, derived->l, *r, config.c};
  if (absl::Status s = p.bounds.Validate(); !s.ok()) return s;
  BoundSet plain = p.bounds;
  plain.m = 0.0;

  p.ngd.eta = d / p.bounds.l;
  const double steps = config.t_fraction * p.bounds.l * p.bounds.l *
                       std::log(config.c0 * config.c0 * n);
  p.ngd.t = std::max(1, static_cast<int>(std::ceil(steps)));
  p.ngd.c = config.c;
  p.ngd.r = *r;
  p.ngd.b = NgdSensitivityFactor(p.bounds);
  p.ngd.beta0 = Vector::Zero(d);
  p.ngd.route = config.route;
  p.ngd.project_iterates = config.project_ngd;
  p.ngd.truncate_response = config.truncate;
  p.ssp.r = *r;
  p.ssp.b = SspSensitivityFactor(p.bounds);
  p.ssp.truncate_response = config.truncate;

  absl::StatusOr<double> omega =
      NgdNoiseScale(p.ngd.eta, p.ngd.b, p.ngd.t, n, p.budget, config.route);
  if (!omega.ok()) return omega.status();
  p.omega_ngd_rl = *omega;
  omega = NgdNoiseScale(p.ngd.eta, NgdSensitivityFactor(plain), p.ngd.t, n,
                        p.budget, config.route);
  if (!omega.ok()) return omega.status();
  p.omega_ngd = *omega;
  omega = SspNoiseScale(p.ssp.b, p.budget);
  if (!omega.ok()) return omega.status();
  p.omega_ssp_rl = *omega;
  omega = SspNoiseScale(SspSensitivityFactor(plain), p.budget);
  if (!omega.ok()) return omega.status();
  p.omega_ssp = *omega;
  return p;
}

absl::StatusOr<SimInstance> GenerateInstance(const ScenarioConfig& config,
                                             const SweepPoint& point, int rep) {
  SimInstance inst;
  inst.rep_seed = DeriveSeed(config.master_seed, kRepStream, rep);
  Rng rng(DeriveSeed(inst.rep_seed, kDataStream));
  Vector y = point.x * point.params.beta;
  const double sigma = std::sqrt(point.params.sigma2);
  for (int i = 0; i < point.n; ++i) y(i) += sigma * rng.Normal();
  absl::StatusOr<std::vector<int>> source =
      SampleLinkage(point.q, config.linkage_mode, rng);
  if (!source.ok()) return source.status();
  inst.source = *std::move(source);
  inst.data.x = point.x;
  inst.data.z = ApplyLinkage(y, inst.source);
  inst.data.y = std::move(y);
  return inst;
}

const MethodSummary* SimReport::Find(SimMethod method,
                                     size_t point_index) const {
  if (point_index >= points.size()) return nullptr;
  for (const MethodSummary& row : rows) {
    if (row.method == method && row.sweep_value == points[point_index].sweep_value) {
      return &row;
    }
  }
  return nullptr;
}

namespace {

struct RepOutcome {
  absl::Status status;
  std::vector<std::optional<Vector>> estimates;
};

absl::StatusOr<std::optional<Matrix>> TheoreticalCovariance(
    SimMethod method, const SweepPoint& p, const MomentSet& linked,
    const MomentSet& clean, const Matrix& sigma_rl) {
  switch (method) {
    case SimMethod::kOls: {
      absl::StatusOr<Matrix> inv = InverseGram(p.x.transpose() * p.x);
      if (!inv.ok()) return inv.status();
      return std::optional<Matrix>(p.params.sigma2 * *inv);
    }
    case SimMethod::kRl:
      return std::optional<Matrix>(sigma_rl);
    case SimMethod::kNgdRl:
    case SimMethod::kNgd: {
      const bool rl = method == SimMethod::kNgdRl;
      absl::StatusOr<VarianceReport> v =
          NgdVariance(rl ? p.w : p.x, rl ? linked : clean, p.ngd.eta, p.ngd.t,
                      rl ? p.omega_ngd_rl : p.omega_ngd);
      if (!v.ok()) return v.status();
      return std::optional<Matrix>(v->total);
    }
    case SimMethod::kSspRl: {
      absl::StatusOr<VarianceReport> v =
          SspVariance(p.w, p.params.beta, sigma_rl, p.omega_ssp_rl);
      if (!v.ok()) return v.status();
      return std::optional<Matrix>(v->total);
    }
    case SimMethod::kSsp: {
      absl::StatusOr<Matrix> inv = InverseGram(p.x.transpose() * p.x);
      if (!inv.ok()) return inv.status();
      absl::StatusOr<VarianceReport> v = SspVariance(
          p.x, p.params.beta, p.params.sigma2 * *inv, p.omega_ssp);
      if (!v.ok()) return v.status();
      return std::optional<Matrix>(v->total);
    }
    default:
      return std::optional<Matrix>();
  }
}

absl::StatusOr<FitResult> RunMethod(SimMethod method, const SweepPoint& p,
                                    const MatchingMatrix& identity,
                                    const SimInstance& inst) {
  const Matrix& x = inst.data.x;
  const Vector& y = *inst.data.y;
  const Vector& z = inst.data.z;
  BoundSet plain = p.bounds;
  plain.m = 0.0;
  NgdConfig ngd = p.ngd;
  ngd.seed = DeriveSeed(inst.rep_seed, kNgdStream);
  SspConfig ssp = p.ssp;
  ssp.seed = DeriveSeed(inst.rep_seed, kSspStream);
  NgdConfig ngd_plain = ngd;
  ngd_plain.b = NgdSensitivityFactor(plain);
  SspConfig ssp_plain = ssp;
  ssp_plain.b = SspSensitivityFactor(plain);
  const LinkedDataset linked{x, z, std::nullopt, false};
  const LinkedDataset clean{x, y, std::nullopt, false};
  switch (method) {
    case SimMethod::kOls:
      return OlsFit(x, y);
    case SimMethod::kRl:
      return RlFit(x, z, p.q, {.covariance = false});
    case SimMethod::kNgdRl:
      return NgdFit(linked, p.q, p.budget, p.bounds, ngd);
    case SimMethod::kSspRl:
      return SspFit(linked, p.q, p.budget, p.bounds, ssp);
    case SimMethod::kNgd:
      return NgdFit(clean, identity, p.budget, plain, ngd_plain);
    case SimMethod::kSsp:
      return SspFit(clean, identity, p.budget, plain, ssp_plain);
    case SimMethod::kOlsNaive:
      return OlsFit(x, z);
    case SimMethod::kNgdNaive:
      return NgdFit(linked, identity, p.budget, plain, ngd_plain);
    case SimMethod::kSspNaive:
      return SspFit(linked, identity, p.budget, plain, ssp_plain);
  }
  return absl::InternalError("unhandled method");
}

MethodSummary Summarize(SimMethod method, const SweepPoint& p,
                        const std::vector<RepOutcome>& outcomes,
                        size_t method_index) {
  MethodSummary s;
  s.method = method;
  s.sweep_value = p.sweep_value;
  const Vector& beta = p.params.beta;
  const int d = static_cast<int>(beta.size());
  std::vector<const Vector*> ok;
  for (const RepOutcome& o : outcomes) {
    const std::optional<Vector>& e = o.estimates[method_index];
    if (e.has_value()) {
      ok.push_back(&*e);
    } else {
      ++s.failures;
    }
  }
  s.reps = static_cast<int>(ok.size());
  s.mean_estimate = Vector::Zero(d);
  s.emp_cov = Matrix::Zero(d, d);
  s.standard_error = Vector::Zero(d);
  if (ok.empty()) return s;
  const double k = static_cast<double>(ok.size());
  double err_sum = 0.0;
  double err_sq = 0.0;
  for (const Vector* e : ok) {
    const double rel = (*e - beta).norm() / beta.norm();
    err_sum += rel;
    err_sq += rel * rel;
    s.mean_estimate += *e;
  }
  s.mean_rel_error = err_sum / k;
  s.mean_estimate /= k;
  if (ok.size() > 1) {
    for (const Vector* e : ok) {
      const Vector centred = *e - s.mean_estimate;
      s.emp_cov.noalias() += centred * centred.transpose();
    }
    s.emp_cov /= k - 1.0;
    s.standard_error = (s.emp_cov.diagonal() / k).cwiseSqrt();
    const double var =
        std::max(0.0, (err_sq - k * s.mean_rel_error * s.mean_rel_error) /
                          (k - 1.0));
    s.rel_error_se = std::sqrt(var / k);
  }
  return s;
}

}  // namespace

absl::StatusOr<SimReport> RunScenario(const ScenarioConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  const auto started = std::chrono::steady_clock::now();
  SimReport report;
  report.config = config;
  const CrossCovarianceForm form =
      config.linkage_mode == LinkageMode::kIndependent
          ? CrossCovarianceForm::kIndependentSources
          : CrossCovarianceForm::kTransposed;
  for (size_t pi = 0; pi < config.sweep.size(); ++pi) {
    absl::StatusOr<SweepPoint> point = PrepareSweepPoint(config, pi);
    if (!point.ok()) return point.status();
    const SweepPoint& p = *point;
    const MatchingMatrix identity = MatchingMatrix::Identity(p.n);

    std::vector<RepOutcome> outcomes(config.reps);
    ParallelFor(config.reps, [&](size_t rep) {
      RepOutcome& out = outcomes[rep];
      out.estimates.resize(config.methods.size());
      absl::StatusOr<SimInstance> inst =
          GenerateInstance(config, p, static_cast<int>(rep));
      if (!inst.ok()) {
        out.status = inst.status();
        return;
      }
      for (size_t mi = 0; mi < config.methods.size(); ++mi) {
        absl::StatusOr<FitResult> fit =
            RunMethod(config.methods[mi], p, identity, *inst);
        if (fit.ok()) {
          out.estimates[mi] = std::move(fit->beta_hat);
        } else if (fit.status().code() != absl::StatusCode::kResourceExhausted &&
                   fit.status().code() != absl::StatusCode::kFailedPrecondition) {
          out.status = fit.status();
          return;
        }
      }
    });
    for (const RepOutcome& o : outcomes) {
      if (!o.status.ok()) return o.status;
    }

    absl::StatusOr<MomentSet> linked = ZMoments(p.x, p.q, p.params, form);
    if (!linked.ok()) return linked.status();
    absl::StatusOr<MomentSet> clean = ZMoments(p.x, identity, p.params, form);
    if (!clean.ok()) return clean.status();
    absl::StatusOr<Matrix> sigma_rl = RlCovariance(p.w, *linked);
    if (!sigma_rl.ok()) return sigma_rl.status();

    for (size_t mi = 0; mi < config.methods.size(); ++mi) {
      const SimMethod method = config.methods[mi];
      MethodSummary summary = Summarize(method, p, outcomes, mi);
      if (!IsNaive(method)) {
        absl::StatusOr<std::optional<Matrix>> thr =
            TheoreticalCovariance(method, p, *linked, *clean, *sigma_rl);
        if (!thr.ok()) return thr.status();
        summary.thr_cov = *std::move(thr);
      }
      report.rows.push_back(std::move(summary));
    }
    report.points.push_back(*std::move(point));
  }
  report.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return report;
}

absl::StatusOr<SimReport> CompareRlVsNonRl(ScenarioConfig config) {
  config.methods = {SimMethod::kRl,    SimMethod::kOlsNaive,
                    SimMethod::kNgdRl, SimMethod::kNgdNaive,
                    SimMethod::kSspRl, SimMethod::kSspNaive};
  return RunScenario(config);
}

std::string ReportCsv(const SimReport& report) {
  CsvTable table;
  table.header = {"method",        "sweep_value",   "mean_rel_error",
                  "emp_var_trace", "thr_var_trace", "reps"};
  for (const MethodSummary& row : report.rows) {
    table.rows.push_back(
        {std::string(SimMethodName(row.method)), FormatDouble(row.sweep_value),
         FormatDouble(row.mean_rel_error), FormatDouble(row.emp_cov.trace()),
         row.thr_cov.has_value() ? FormatDouble(row.thr_cov->trace()) : "",
         absl::StrCat(row.reps)});
  }
  return FormatCsv(table);
}

nlohmann::json ReportPointsJson(const SimReport& report) {
  nlohmann::json points = nlohmann::json::array();
  for (const SweepPoint& p : report.points) {
    int failures = 0;
    for (const MethodSummary& row : report.rows) {
      if (row.sweep_value == p.sweep_value) failures += row.failures;
    }
    points.push_back({{"sweep_value", p.sweep_value},
                      {"n", p.n},
                      {"sigma", p.sigma},
                      {"delta", p.budget.delta},
                      {"M", p.bounds.m},
                      {"L", p.bounds.l},
                      {"R", p.bounds.r},
                      {"eta", p.ngd.eta},
                      {"T", p.ngd.t},
                      {"omega_ngd_rl", p.omega_ngd_rl},
                      {"omega_ngd", p.omega_ngd},
                      {"omega_ssp_rl", p.omega_ssp_rl},
                      {"omega_ssp", p.omega_ssp},
                      {"last_block_size", p.last_block_size},
                      {"truncated_last_block", p.truncated_last_block},
                      {"failed_reps", failures}});
  }
  return points;
}

}  // namespace linkdp
