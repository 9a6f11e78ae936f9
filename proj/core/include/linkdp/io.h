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

#ifndef LINKDP_IO_H_
#define LINKDP_IO_H_

#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "linkdp/estimators.h"
#include "linkdp/linkage.h"
#include "linkdp/linker.h"
#include "nlohmann/json.hpp"

namespace linkdp {

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 subset: comma separated, optional double quotes, LF or CRLF.
absl::StatusOr<CsvTable> ParseCsv(std::string_view text, bool has_header);
std::string FormatCsv(const CsvTable& table);

absl::StatusOr<std::string> ReadFile(const std::string& path);
absl::Status WriteFile(const std::string& path, std::string_view content);

// Numeric CSV. A first row that does not parse as numbers is taken as the
// header.
absl::StatusOr<Matrix> ParseMatrixCsv(std::string_view text);
absl::StatusOr<Matrix> ReadMatrixCsv(const std::string& path);
// Single-column numeric CSV.
absl::StatusOr<Vector> ReadVectorCsv(const std::string& path);
std::string MatrixToCsv(const Matrix& m, const std::vector<std::string>& header);

// {"type": "ele", "blocks": [{"size": m, "gamma": g}, ...]} or
// {"type": "dense", "rows": [[...], ...]}.
nlohmann::json MatchingMatrixToJson(const MatchingMatrix& q);
absl::StatusOr<MatchingMatrix> MatchingMatrixFromJson(const nlohmann::json& j);
// Dispatches on extension: .json, otherwise dense CSV.
absl::StatusOr<MatchingMatrix> ReadMatchingMatrix(const std::string& path);

nlohmann::json FitResultToJson(const FitResult& fit);
nlohmann::json LinkageResultToJson(const LinkageResult& result);

// Columns entity_id, block_key, f1..f6, payload.
std::string EntityTableToCsv(const EntityTable& table);
absl::StatusOr<EntityTable> ParseEntityTable(std::string_view text);
absl::StatusOr<EntityTable> ReadEntityTable(const std::string& path);

// Pretty-printed with a trailing newline.
std::string DumpJson(const nlohmann::json& j);
absl::StatusOr<nlohmann::json> ReadJson(const std::string& path);

std::string Sha256Hex(std::string_view bytes);
absl::StatusOr<std::string> FileSha256(const std::string& path);

}  // namespace linkdp

#endif  // LINKDP_IO_H_
