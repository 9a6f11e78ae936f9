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

#include "cli.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "linkdp/dp_regression.h"
#include "linkdp/estimators.h"
#include "linkdp/io.h"
#include "linkdp/linkage.h"
#include "linkdp/linker.h"
#include "linkdp/privacy.h"
#include "linkdp/random.h"
#include "linkdp/simlab.h"
#include "nlohmann/json.hpp"

namespace linkdp::cli {
namespace {

using json = nlohmann::json;

constexpr char kVersion[] = "0.1.0";

enum class Kind { kNumber, kInt, kUint, kString, kPath, kBool };

struct FlagSpec {
  std::string name;
  Kind kind;
  json fallback;  // null: unset unless given
  std::string help;
};

struct RunOutputs {
  // (path, bytes) written in order.
  std::vector<std::pair<std::string, std::string>> files;
  std::string stdout_text;
  std::vector<std::string> inputs;
  std::optional<uint64_t> seed;
  std::string default_manifest;
  json extra = json::object();
  // Notes for the diagnostic stream; not part of the reproducible output.
  std::vector<std::string> notes;
};

using Handler = std::function<absl::StatusOr<RunOutputs>(const json&)>;

struct Command {
  std::string name;
  std::string help;
  std::vector<FlagSpec> flags;
  Handler handler;
  // Whether --config overlays flag defaults; simulate reads a scenario file
  // through its own --config flag instead.
  bool generic_config = true;
};

int ExitCode(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 0;
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kResourceExhausted:
      return 2;
    default:
      return 1;
  }
}

absl::StatusOr<json> ConvertFlag(const FlagSpec& flag, const std::string& raw) {
  const auto bad = [&] {
    return absl::InvalidArgumentError(
        absl::StrCat("--", flag.name, ": cannot parse '", raw, "'"));
  };
  switch (flag.kind) {
    case Kind::kNumber: {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) return bad();
      return json(v);
    }
    case Kind::kInt: {
      long long v = 0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) return bad();
      return json(v);
    }
    case Kind::kUint: {
      uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc() || ptr != raw.data() + raw.size()) return bad();
      return json(v);
    }
    case Kind::kPath:
      return json(std::filesystem::absolute(raw).lexically_normal().string());
    case Kind::kString:
      return json(raw);
    case Kind::kBool:
      return json(raw == "true" || raw == "1");
  }
  return bad();
}

// Checks a config-file value against the flag kind; paths are made absolute.
absl::StatusOr<json> ConvertConfigValue(const FlagSpec& flag, const json& v) {
  const auto bad = [&] {
    return absl::InvalidArgumentError(
        absl::StrCat("config key '", flag.name, "' has the wrong type"));
  };
  if (v.is_null()) return json(v);
  switch (flag.kind) {
    case Kind::kNumber:
      if (!v.is_number()) return bad();
      return json(v.get<double>());
    case Kind::kInt:
      if (!v.is_number_integer()) return bad();
      return json(v);
    case Kind::kUint:
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<int64_t>() >= 0)) {
        return bad();
      }
      return json(v.get<uint64_t>());
    case Kind::kPath:
      if (!v.is_string()) return bad();
      return json(std::filesystem::absolute(v.get<std::string>())
                      .lexically_normal()
                      .string());
    case Kind::kString:
      if (!v.is_string()) return bad();
      return json(v);
    case Kind::kBool:
      if (!v.is_boolean()) return bad();
      return json(v);
  }
  return bad();
}

template <typename T>
std::optional<T> Get(const json& cfg, const std::string& key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return std::nullopt;
  return cfg.at(key).get<T>();
}

absl::StatusOr<std::string> Require(const json& cfg, const std::string& key) {
  std::optional<std::string> v = Get<std::string>(cfg, key);
  if (!v.has_value() || v->empty()) {
    return absl::InvalidArgumentError(absl::StrCat("--", key, " is required"));
  }
  return *v;
}

std::string JoinPath(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// ---------------------------------------------------------------- gen-data

absl::StatusOr<RunOutputs> GenData(const json& cfg) {
  absl::StatusOr<std::string> out = Require(cfg, "out");
  if (!out.ok()) return out.status();
  CorpusOptions options;
  options.n = cfg.at("n").get<int>();
  options.n_blocks = cfg.at("blocks").get<int>();
  options.corruption_rate = cfg.at("corruption-rate").get<double>();
  options.seed = cfg.at("seed").get<uint64_t>();
  options.slope = cfg.at("slope").get<double>();
  options.noise_sd = cfg.at("noise-sd").get<double>();
  absl::StatusOr<std::pair<EntityTable, EntityTable>> corpus =
      GenerateCorpus(options);
  if (!corpus.ok()) return corpus.status();
  RunOutputs r;
  r.seed = options.seed;
  r.files.emplace_back(JoinPath(*out, "a.csv"), EntityTableToCsv(corpus->first));
  r.files.emplace_back(JoinPath(*out, "b.csv"),
                       EntityTableToCsv(corpus->second));
  r.default_manifest = JoinPath(*out, "manifest.json");
  return r;
}

// -------------------------------------------------------------------- link

absl::StatusOr<RunOutputs> Link(const json& cfg) {
  absl::StatusOr<std::string> path_a = Require(cfg, "a");
  if (!path_a.ok()) return path_a.status();
  absl::StatusOr<std::string> path_b = Require(cfg, "b");
  if (!path_b.ok()) return path_b.status();
  absl::StatusOr<std::string> out = Require(cfg, "out");
  if (!out.ok()) return out.status();
  absl::StatusOr<EntityTable> a = ReadEntityTable(*path_a);
  if (!a.ok()) return a.status();
  absl::StatusOr<EntityTable> b = ReadEntityTable(*path_b);
  if (!b.ok()) return b.status();
  LinkerOptions options;
  options.threshold = cfg.at("threshold").get<double>();
  options.seed = cfg.at("seed").get<uint64_t>();
  absl::StatusOr<LinkageResult> result = LinkRecords(*a, *b, options);
  if (!result.ok()) return result.status();

  RunOutputs r;
  r.seed = options.seed;
  r.inputs = {*path_a, *path_b};
  r.files.emplace_back(*out, DumpJson(LinkageResultToJson(*result)));
  if (std::optional<std::string> dir = Get<std::string>(cfg, "emit-dir")) {
    const LinkedDataset data = LinkedPayloads(*a, *b, *result);
    absl::StatusOr<MatchingMatrix> q = GammaToMpm(*result);
    if (!q.ok()) return q.status();
    r.files.emplace_back(JoinPath(*dir, "x.csv"), MatrixToCsv(data.x, {"x"}));
    r.files.emplace_back(JoinPath(*dir, "z.csv"), MatrixToCsv(data.z, {"z"}));
    r.files.emplace_back(JoinPath(*dir, "q.json"),
                         DumpJson(MatchingMatrixToJson(*q)));
  }
  json summary;
  summary["overall_accuracy"] = result->overall_accuracy;
  summary["per_block_gamma"] = LinkageResultToJson(*result)["per_block_gamma"];
  r.stdout_text = DumpJson(summary);
  r.default_manifest = *out + ".manifest.json";
  return r;
}

// ------------------------------------------------------------------ budget

absl::StatusOr<RunOutputs> Budget(const json& cfg) {
  const PrivacyBudget budget{cfg.at("epsilon").get<double>(),
                             cfg.at("delta").get<double>()};
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  const double eta = cfg.at("eta").get<double>();
  const double b = cfg.at("b").get<double>();
  const int t = cfg.at("t").get<int>();
  const int n = cfg.at("n").get<int>();
  json j;
  j["epsilon"] = budget.epsilon;
  j["delta"] = budget.delta;
  j["rho"] = ZcdpRho(budget);
  const bool regime = SimplifiedRegime(budget);
  j["simplified_regime"] = regime;
  j["simplified_threshold"] =
      8.0 * -std::log(budget.delta) / (2.0 + std::sqrt(2.0));
  json ngd;
  if (regime) {
    absl::StatusOr<double> simple =
        NgdNoiseScale(eta, b, t, n, budget, NoiseRoute::kSimplified);
    if (!simple.ok()) return simple.status();
    ngd["simplified"] = *simple;
  } else {
    ngd["simplified"] = nullptr;
  }
  absl::StatusOr<double> exact =
      NgdNoiseScale(eta, b, t, n, budget, NoiseRoute::kExactRho);
  if (!exact.ok()) return exact.status();
  ngd["exact_rho"] = *exact;
  j["ngd_noise_scale"] = ngd;
  j["ngd_inputs"] = {{"eta", eta}, {"b", b}, {"t", t}, {"n", n}};
  std::vector<std::string> warnings;
  absl::StatusOr<double> ssp = SspNoiseScale(b, budget, &warnings);
  if (!ssp.ok()) return ssp.status();
  j["ssp_noise_scale"] = *ssp;
  j["warnings"] = warnings;

  RunOutputs r;
  if (std::optional<std::string> out = Get<std::string>(cfg, "out")) {
    r.files.emplace_back(*out, DumpJson(j));
    r.default_manifest = *out + ".manifest.json";
  } else {
    r.stdout_text = DumpJson(j);
  }
  return r;
}

// --------------------------------------------------------------------- fit

void Standardize(Matrix& x, Vector& z) {
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    auto col = x.col(k);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1.0));
    col.array() -= mean;
    if (sd > 0.0) col /= sd;
  }
  const double mean = z.mean();
  const double sd = std::sqrt((z.array() - mean).square().sum() / (n - 1.0));
  z.array() -= mean;
  if (sd > 0.0) z /= sd;
}

absl::StatusOr<RunOutputs> Fit(const json& cfg) {
  absl::StatusOr<std::string> method_name = Require(cfg, "method");
  if (!method_name.ok()) return method_name.status();
  const std::optional<Method> method = ParseMethod(*method_name);
  if (!method.has_value()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "--method must be one of ols, rl, ngd, ssp; got '", *method_name, "'"));
  }
  absl::StatusOr<std::string> x_path = Require(cfg, "x");
  if (!x_path.ok()) return x_path.status();
  absl::StatusOr<std::string> z_path = Require(cfg, "z");
  if (!z_path.ok()) return z_path.status();

  RunOutputs r;
  r.inputs = {*x_path, *z_path};
  absl::StatusOr<Matrix> x = ReadMatrixCsv(*x_path);
  if (!x.ok()) return x.status();
  absl::StatusOr<Vector> z = ReadVectorCsv(*z_path);
  if (!z.ok()) return z.status();
  const int n = static_cast<int>(x->rows());
  const int d = static_cast<int>(x->cols());

  std::optional<MatchingMatrix> q;
  if (std::optional<std::string> q_path = Get<std::string>(cfg, "q")) {
    r.inputs.push_back(*q_path);
    absl::StatusOr<MatchingMatrix> loaded = ReadMatchingMatrix(*q_path);
    if (!loaded.ok()) return loaded.status();
    q = *std::move(loaded);
  } else {
    q = MatchingMatrix::Identity(n);
  }

  std::vector<std::string> warnings;
  if (cfg.at("standardize").get<bool>()) {
    Standardize(*x, *z);
    warnings.push_back(
        "standardization uses non-private column means and deviations");
  }

  LinkedDataset data{*x, *z, std::nullopt, false};
  if (absl::Status s = ValidateDataset(data); !s.ok()) return s;
  if (q->n() != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("Q has ", q->n(), " rows but X has ", n));
  }

  absl::StatusOr<FitResult> fit;
  if (*method == Method::kOls) {
    fit = OlsFit(data.x, data.z);
  } else if (*method == Method::kRl) {
    fit = RlFit(data.x, data.z, *q);
  } else {
    const PrivacyBudget budget{cfg.at("epsilon").get<double>(),
                               cfg.at("delta").get<double>()};
    BoundSet bounds;
    bounds.m = cfg.at("m").get<double>();
    bounds.c0 = cfg.at("c0").get<double>();
    std::optional<double> cx = Get<double>(cfg, "cx");
    std::optional<double> l = Get<double>(cfg, "l");
    if (!cx.has_value() || !l.has_value()) {
      absl::StatusOr<DataDerivedBounds> derived =
          UnsafeDataDerivedBounds(data.x, q->Apply(data.x));
      if (!derived.ok()) return derived.status();
      if (!cx.has_value()) {
        cx = derived->c_x;
        warnings.push_back("c_x read from the data: not differentially private");
      }
      if (!l.has_value()) {
        l = derived->l;
        warnings.push_back("L read from the data: not differentially private");
      }
    }
    bounds.c_x = *cx;
    bounds.l = *l;
    std::optional<double> sigma = Get<double>(cfg, "sigma");
    if (!sigma.has_value()) {
      absl::StatusOr<FitResult> rl =
          RlFit(data.x, data.z, *q, {.covariance = false});
      if (!rl.ok()) return rl.status();
      sigma = std::sqrt(ResidualVariance(q->Apply(data.x), data.z, rl->beta_hat));
      warnings.push_back(
          "sigma estimated by the RL residual mean square: not differentially "
          "private");
    }
    absl::StatusOr<double> r_level = DefaultTruncation(*sigma, n);
    if (!r_level.ok()) return r_level.status();
    bounds.r = *r_level;
    bounds.c = cfg.contains("c") && !cfg.at("c").is_null()
                   ? cfg.at("c").get<double>()
                   : bounds.c0;
    const uint64_t seed = cfg.at("seed").get<uint64_t>();
    r.seed = seed;
    if (*method == Method::kNgd) {
      absl::StatusOr<NgdConfig> ngd = SuggestedNgdConfig(
          n, d, bounds, sigma, cfg.at("t-fraction").get<double>());
      if (!ngd.ok()) return ngd.status();
      ngd->c = bounds.c;
      ngd->b = NgdSensitivityFactor(bounds);
      ngd->seed = seed;
      const std::string route = cfg.at("route").get<std::string>();
      if (route != "simplified" && route != "exact_rho") {
        return absl::InvalidArgumentError(
            "--route must be simplified or exact_rho");
      }
      ngd->route = route == "simplified" ? NoiseRoute::kSimplified
                                         : NoiseRoute::kExactRho;
      fit = NgdFit(data, *q, budget, bounds, *ngd);
    } else {
      absl::StatusOr<SspConfig> ssp = SuggestedSspConfig(n, bounds, sigma);
      if (!ssp.ok()) return ssp.status();
      ssp->seed = seed;
      fit = SspFit(data, *q, budget, bounds, *ssp);
    }
  }
  if (!fit.ok()) return fit.status();
  fit->warnings.insert(fit->warnings.begin(), warnings.begin(), warnings.end());
  const std::string text = DumpJson(FitResultToJson(*fit));
  if (std::optional<std::string> out = Get<std::string>(cfg, "out")) {
    r.files.emplace_back(*out, text);
    r.default_manifest = *out + ".manifest.json";
  } else {
    r.stdout_text = text;
  }
  return r;
}

// ---------------------------------------------------------------- simulate

absl::StatusOr<RunOutputs> Simulate(const json& cfg) {
  absl::StatusOr<std::string> out = Require(cfg, "out");
  if (!out.ok()) return out.status();
  const std::string setting = cfg.at("setting").get<std::string>();
  ScenarioConfig base;
  if (setting == "1" || setting == "2" || setting == "3") {
    absl::StatusOr<ScenarioConfig> preset = PresetSetting(std::stoi(setting));
    if (!preset.ok()) return preset.status();
    base = *std::move(preset);
  } else if (setting != "custom") {
    return absl::InvalidArgumentError(
        absl::StrCat("--setting must be 1, 2, 3 or custom; got '", setting, "'"));
  }
  RunOutputs r;
  if (std::optional<std::string> path = Get<std::string>(cfg, "config")) {
    r.inputs.push_back(*path);
    absl::StatusOr<json> file = ReadJson(*path);
    if (!file.ok()) return file.status();
    absl::StatusOr<ScenarioConfig> merged = ScenarioFromJson(*file, base);
    if (!merged.ok()) return merged.status();
    base = *std::move(merged);
  } else if (setting == "custom") {
    return absl::InvalidArgumentError("--setting custom needs --config");
  }
  if (std::optional<int> reps = Get<int>(cfg, "reps")) base.reps = *reps;
  if (std::optional<uint64_t> seed = Get<uint64_t>(cfg, "seed")) {
    base.master_seed = *seed;
  }
  if (absl::Status s = base.Validate(); !s.ok()) return s;

  absl::StatusOr<SimReport> report = RunScenario(base);
  if (!report.ok()) return report.status();
  r.seed = base.master_seed;
  r.files.emplace_back(JoinPath(*out, base.name + ".csv"), ReportCsv(*report));
  r.default_manifest = JoinPath(*out, "manifest.json");
  r.extra["scenario"] = ScenarioToJson(base);
  r.extra["config_hash"] = ScenarioHash(base);
  r.extra["points"] = ReportPointsJson(*report);
  r.notes.push_back(absl::StrCat("simulate: ", report->rows.size(),
                                 " rows in ", report->wall_seconds, " s"));
  return r;
}

// -------------------------------------------------------------- commands

std::vector<Command> Commands() {
  std::vector<Command> commands;
  commands.push_back(
      {"gen-data",
       "Generate paired entity tables with corrupted quasi-identifiers",
       {{"n", Kind::kInt, 5000, "Number of entities"},
        {"blocks", Kind::kInt, 9, "Number of blocks"},
        {"corruption-rate", Kind::kNumber, kCalibratedCorruptionRate,
         "Per-field typo probability in table B"},
        {"slope", Kind::kNumber, 0.8, "Payload regression slope"},
        {"noise-sd", Kind::kNumber, 0.6, "Payload regression noise sd"},
        {"seed", Kind::kUint, 0, "Random seed"},
        {"out", Kind::kPath, nullptr, "Output directory (a.csv, b.csv)"}},
       GenData});
  commands.push_back(
      {"link",
       "Link two entity tables with blocking and Jaro-Winkler scoring",
       {{"a", Kind::kPath, nullptr, "Table A CSV"},
        {"b", Kind::kPath, nullptr, "Table B CSV"},
        {"threshold", Kind::kNumber, 4.0, "Minimum total score to link"},
        {"seed", Kind::kUint, 0, "Seed for pairing unlinked records"},
        {"out", Kind::kPath, nullptr, "Linkage result JSON"},
        {"emit-dir", Kind::kPath, nullptr,
         "Also write x.csv, z.csv and q.json here"}},
       Link});
  commands.push_back(
      {"budget",
       "Report rho, the simplified-regime flag and candidate noise scales",
       {{"epsilon", Kind::kNumber, 1.0, "Privacy epsilon"},
        {"delta", Kind::kNumber, 1e-5, "Privacy delta"},
        {"eta", Kind::kNumber, 1.0, "NGD step size"},
        {"b", Kind::kNumber, 1.0, "Noise scale factor B"},
        {"t", Kind::kInt, 1, "NGD iterations"},
        {"n", Kind::kInt, 1, "Sample size"},
        {"out", Kind::kPath, nullptr, "Write JSON here instead of stdout"}},
       Budget});
  commands.push_back(
      {"fit",
       "Fit ols, rl, ngd or ssp and print the result as JSON",
       {{"method", Kind::kString, nullptr, "ols | rl | ngd | ssp"},
        {"x", Kind::kPath, nullptr, "Design matrix CSV"},
        {"z", Kind::kPath, nullptr, "Linked response CSV"},
        {"q", Kind::kPath, nullptr, "MPM as dense CSV or JSON (default I)"},
        {"epsilon", Kind::kNumber, 1.0, "Privacy epsilon"},
        {"delta", Kind::kNumber, 1e-5, "Privacy delta"},
        {"cx", Kind::kNumber, nullptr, "Row norm bound c_x"},
        {"m", Kind::kNumber, 0.0, "MPM perturbation bound M"},
        {"c0", Kind::kNumber, 1.0, "Coefficient norm bound c0"},
        {"l", Kind::kNumber, nullptr, "Eigenvalue bound L"},
        {"c", Kind::kNumber, nullptr, "Projection radius C (default c0)"},
        {"sigma", Kind::kNumber, nullptr, "Noise sd for the truncation level"},
        {"t-fraction", Kind::kNumber, 1.0, "Fraction of the NGD schedule"},
        {"route", Kind::kString, "exact_rho", "NGD noise: simplified | exact_rho"},
        {"seed", Kind::kUint, 0, "Random seed"},
        {"standardize", Kind::kBool, false, "Centre and scale X and z"},
        {"out", Kind::kPath, nullptr, "Write JSON here instead of stdout"}},
       Fit});
  commands.push_back(
      {"simulate",
       "Run a Monte Carlo scenario and write the summary CSV",
       {{"setting", Kind::kString, "1", "1 | 2 | 3 | custom"},
        {"config", Kind::kPath, nullptr, "Scenario JSON overriding the preset"},
        {"reps", Kind::kInt, nullptr, "Repetitions per sweep point"},
        {"seed", Kind::kUint, nullptr, "Master seed"},
        {"out", Kind::kPath, nullptr, "Output directory"}},
       Simulate,
       /*generic_config=*/false});
  return commands;
}

json Manifest(const Command& command, const json& cfg, const RunOutputs& r) {
  json m;
  m["subcommand"] = command.name;
  m["artifact_version"] = kVersion;
  m["normal_routine"] = kNormalRoutine;
  m["config"] = cfg;
  m["master_seed"] = r.seed.has_value() ? json(*r.seed) : json(nullptr);
  json inputs = json::object();
  for (const std::string& path : r.inputs) {
    absl::StatusOr<std::string> hash = FileSha256(path);
    inputs[path] = hash.ok() ? json(*hash) : json(nullptr);
  }
  m["inputs"] = inputs;
  json outputs = json::object();
  for (const auto& [path, bytes] : r.files) outputs[path] = Sha256Hex(bytes);
  if (!r.stdout_text.empty()) outputs["-"] = Sha256Hex(r.stdout_text);
  m["outputs"] = outputs;
  for (const auto& [key, value] : r.extra.items()) m[key] = value;
  return m;
}

absl::Status WriteOutputs(const RunOutputs& r) {
  for (const auto& [path, bytes] : r.files) {
    if (absl::Status s = WriteFile(path, bytes); !s.ok()) return s;
  }
  for (const std::string& note : r.notes) std::cerr << note << "\n";
  return absl::OkStatus();
}

int Fail(const absl::Status& status) {
  std::cerr << "linkdp: " << status.message() << "\n";
  return ExitCode(status);
}

int Execute(const Command& command, const json& cfg,
            const std::optional<std::string>& manifest_path) {
  absl::StatusOr<RunOutputs> r = command.handler(cfg);
  if (!r.ok()) return Fail(r.status());
  if (absl::Status s = WriteOutputs(*r); !s.ok()) return Fail(s);
  std::cout << r->stdout_text << std::flush;
  const std::string path = manifest_path.value_or(r->default_manifest);
  if (!path.empty()) {
    if (absl::Status s = WriteFile(path, DumpJson(Manifest(command, cfg, *r)));
        !s.ok()) {
      return Fail(s);
    }
  }
  return 0;
}

int Replay(const std::vector<Command>& commands, const std::string& path) {
  absl::StatusOr<json> manifest = ReadJson(path);
  if (!manifest.ok()) return Fail(manifest.status());
  const json& m = *manifest;
  if (!m.contains("subcommand") || !m.contains("config")) {
    return Fail(absl::InvalidArgumentError(
        absl::StrCat(path, ": not a linkdp manifest")));
  }
  const std::string name = m.at("subcommand").get<std::string>();
  const Command* command = nullptr;
  for (const Command& c : commands) {
    if (c.name == name) command = &c;
  }
  if (command == nullptr) {
    return Fail(absl::InvalidArgumentError(
        absl::StrCat("manifest names unknown subcommand '", name, "'")));
  }
  const json inputs = m.value("inputs", json::object());
  for (const auto& [input, hash] : inputs.items()) {
    absl::StatusOr<std::string> now = FileSha256(input);
    if (!now.ok() || hash.is_null() || *now != hash.get<std::string>()) {
      return Fail(absl::FailedPreconditionError(
          absl::StrCat("input ", input, " changed since the recorded run")));
    }
  }
  absl::StatusOr<RunOutputs> r = command->handler(m.at("config"));
  if (!r.ok()) return Fail(r.status());
  if (absl::Status s = WriteOutputs(*r); !s.ok()) return Fail(s);

  std::map<std::string, std::string> produced;
  for (const auto& [file, bytes] : r->files) produced[file] = Sha256Hex(bytes);
  if (!r->stdout_text.empty()) produced["-"] = Sha256Hex(r->stdout_text);
  bool identical = true;
  json report;
  report["subcommand"] = name;
  report["outputs"] = json::object();
  const json recorded = m.value("outputs", json::object());
  for (const auto& [file, hash] : recorded.items()) {
    const auto it = produced.find(file);
    const bool same = it != produced.end() && it->second == hash.get<std::string>();
    identical &= same;
    report["outputs"][file] = same;
  }
  identical &= produced.size() == recorded.size();
  report["identical"] = identical;
  std::cout << DumpJson(report) << std::flush;
  if (!identical) {
    std::cerr << "linkdp: replay produced different outputs\n";
    return 2;
  }
  return 0;
}

}  // namespace

int Main(int argc, char** argv) {
  const std::vector<Command> commands = Commands();
  CLI::App app{"Differentially private regression on probabilistically linked data",
               "linkdp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  struct Parsed {
    CLI::App* sub = nullptr;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> bools;
    std::string config;
    std::string manifest;
  };
  std::vector<std::unique_ptr<Parsed>> parsed;
  for (const Command& c : commands) {
    auto p = std::make_unique<Parsed>();
    p->sub = app.add_subcommand(c.name, c.help);
    for (const FlagSpec& f : c.flags) {
      std::string help = f.help;
      if (!f.fallback.is_null()) help += " [" + f.fallback.dump() + "]";
      if (f.kind == Kind::kBool) {
        p->sub->add_flag("--" + f.name, p->bools[f.name], help);
      } else {
        p->sub->add_option("--" + f.name, p->raw[f.name], help);
      }
    }
    if (c.generic_config) {
      p->sub->add_option("--config", p->config,
                         "JSON object of flag defaults (flags take precedence)");
    }
    p->sub->add_option("--manifest", p->manifest,
                       "Where to write the run manifest");
    parsed.push_back(std::move(p));
  }
  std::string replay_manifest;
  CLI::App* replay = app.add_subcommand(
      "replay", "Re-run a recorded manifest and check outputs are identical");
  replay->add_option("--manifest", replay_manifest, "Manifest to replay")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (replay->parsed()) return Replay(commands, replay_manifest);

  for (size_t i = 0; i < commands.size(); ++i) {
    const Command& c = commands[i];
    Parsed& p = *parsed[i];
    if (!p.sub->parsed()) continue;
    json cfg = json::object();
    for (const FlagSpec& f : c.flags) cfg[f.name] = f.fallback;
    if (c.generic_config && !p.config.empty()) {
      absl::StatusOr<json> file = ReadJson(p.config);
      if (!file.ok()) return Fail(file.status());
      if (!file->is_object()) {
        return Fail(absl::InvalidArgumentError("--config must hold a JSON object"));
      }
      for (const auto& [key, value] : file->items()) {
        const FlagSpec* spec = nullptr;
        for (const FlagSpec& f : c.flags) {
          if (f.name == key) spec = &f;
        }
        if (spec == nullptr) {
          return Fail(absl::InvalidArgumentError(
              absl::StrCat("unknown config key '", key, "' for ", c.name)));
        }
        absl::StatusOr<json> v = ConvertConfigValue(*spec, value);
        if (!v.ok()) return Fail(v.status());
        cfg[key] = *v;
      }
    }
    for (const FlagSpec& f : c.flags) {
      const CLI::Option* opt = p.sub->get_option("--" + f.name);
      if (opt->count() == 0) continue;
      if (f.kind == Kind::kBool) {
        cfg[f.name] = true;
        continue;
      }
      absl::StatusOr<json> v = ConvertFlag(f, p.raw[f.name]);
      if (!v.ok()) {
        std::cerr << p.sub->help();
        return Fail(v.status());
      }
      cfg[f.name] = *v;
    }
    std::optional<std::string> manifest;
    if (!p.manifest.empty()) {
      manifest = std::filesystem::absolute(p.manifest).lexically_normal().string();
    }
    return Execute(c, cfg, manifest);
  }
  return 1;
}

}  // namespace linkdp::cli
