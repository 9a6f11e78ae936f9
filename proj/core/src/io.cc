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

#include "linkdp/io.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "openssl/evp.h"

namespace linkdp {
namespace {

bool ParseDouble(std::string_view text, double* out) {
  while (!text.empty() && absl::ascii_isspace(text.front())) text.remove_prefix(1);
  while (!text.empty() && absl::ascii_isspace(text.back())) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), *out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string QuoteCsv(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

absl::Status NoteFile(const absl::Status& status, const std::string& path) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      absl::StrCat(path, ": ", status.message()));
}

}  // namespace

std::string FormatDouble(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

absl::StatusOr<CsvTable> ParseCsv(std::string_view text, bool has_header) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        if (field_started || !field.empty() || !row.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        field_started = false;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (quoted) return absl::InvalidArgumentError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("CSV line ", i + 1, " has ", rows[i].size(),
                       " fields, expected ", rows.front().size()));
    }
  }
  CsvTable table;
  if (has_header && !rows.empty()) {
    table.header = std::move(rows.front());
    rows.erase(rows.begin());
  }
  table.rows = std::move(rows);
  return table;
}

std::string FormatCsv(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += QuoteCsv(row[i]);
    }
    out += '\n';
  };
  if (!table.header.empty()) append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

absl::StatusOr<std::string> ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

absl::Status WriteFile(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", path));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) return absl::DataLossError(absl::StrCat("short write to ", path));
  return absl::OkStatus();
}

absl::StatusOr<Matrix> ParseMatrixCsv(std::string_view text) {
  absl::StatusOr<CsvTable> table = ParseCsv(text, false);
  if (!table.ok()) return table.status();
  std::vector<std::vector<std::string>>& rows = table->rows;
  if (!rows.empty()) {
    double probe;
    bool numeric = true;
    for (const std::string& f : rows.front()) numeric &= ParseDouble(f, &probe);
    if (!numeric) rows.erase(rows.begin());
  }
  if (rows.empty()) return absl::InvalidArgumentError("CSV has no data rows");
  const size_t cols = rows.front().size();
  Matrix m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      return absl::InvalidArgumentError(absl::StrCat(
          "data row ", i + 1, " has ", rows[i].size(), " fields, expected ",
          cols));
    }
    for (size_t j = 0; j < cols; ++j) {
      if (!ParseDouble(rows[i][j], &m(i, j))) {
        return absl::InvalidArgumentError(absl::StrCat(
            "data row ", i + 1, " field ", j + 1, " is not a number: '",
            rows[i][j], "'"));
      }
    }
  }
  return m;
}

absl::StatusOr<Matrix> ReadMatrixCsv(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<Matrix> m = ParseMatrixCsv(*text);
  if (!m.ok()) return NoteFile(m.status(), path);
  return m;
}

absl::StatusOr<Vector> ReadVectorCsv(const std::string& path) {
  absl::StatusOr<Matrix> m = ReadMatrixCsv(path);
  if (!m.ok()) return m.status();
  if (m->cols() != 1) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": expected one column, found ", m->cols()));
  }
  return Vector(m->col(0));
}

std::string MatrixToCsv(const Matrix& m,
                        const std::vector<std::string>& header) {
  CsvTable table;
  table.header = header;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(FormatDouble(m(i, j)));
    }
    table.rows.push_back(std::move(row));
  }
  return FormatCsv(table);
}

nlohmann::json MatchingMatrixToJson(const MatchingMatrix& q) {
  nlohmann::json j;
  if (q.is_block_ele()) {
    j["type"] = "ele";
    j["blocks"] = nlohmann::json::array();
    for (const EleBlock& b : q.blocks()) {
      j["blocks"].push_back({{"size", b.size}, {"gamma", b.gamma}});
    }
    return j;
  }
  j["type"] = "dense";
  j["rows"] = nlohmann::json::array();
  for (int i = 0; i < q.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < q.n(); ++k) row.push_back(q.dense()(i, k));
    j["rows"].push_back(std::move(row));
  }
  return j;
}

absl::StatusOr<MatchingMatrix> MatchingMatrixFromJson(const nlohmann::json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "ele") {
      std::vector<EleBlock> blocks;
      for (const nlohmann::json& b : j.at("blocks")) {
        blocks.push_back({b.at("size").get<int>(), b.at("gamma").get<double>()});
      }
      return MatchingMatrix::FromBlocks(std::move(blocks));
    }
    if (type == "dense") {
      const nlohmann::json& rows = j.at("rows");
      const size_t n = rows.size();
      Matrix q(n, n);
      for (size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
          return absl::InvalidArgumentError("dense MPM rows must have n entries");
        }
        for (size_t k = 0; k < n; ++k) q(i, k) = rows[i][k].get<double>();
      }
      return MatchingMatrix::FromDense(std::move(q));
    }
    return absl::InvalidArgumentError(
        absl::StrCat("unknown MPM type '", type, "'"));
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed MPM document: ", e.what()));
  }
}

absl::StatusOr<MatchingMatrix> ReadMatchingMatrix(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".json") {
    absl::StatusOr<nlohmann::json> j = ReadJson(path);
    if (!j.ok()) return j.status();
    absl::StatusOr<MatchingMatrix> q = MatchingMatrixFromJson(*j);
    if (!q.ok()) return NoteFile(q.status(), path);
    return q;
  }
  absl::StatusOr<Matrix> dense = ReadMatrixCsv(path);
  if (!dense.ok()) return dense.status();
  absl::StatusOr<MatchingMatrix> q = MatchingMatrix::FromDense(*std::move(dense));
  if (!q.ok()) return NoteFile(q.status(), path);
  return q;
}

nlohmann::json FitResultToJson(const FitResult& fit) {
  nlohmann::json j;
  j["method"] = std::string(MethodName(fit.method));
  j["beta_hat"] = std::vector<double>(fit.beta_hat.begin(), fit.beta_hat.end());
  if (fit.covariance.has_value()) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < fit.covariance->rows(); ++i) {
      const Vector row = fit.covariance->row(i).transpose();
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["covariance"] = std::move(rows);
  } else {
    j["covariance"] = nullptr;
  }
  j["noise_scale"] = fit.noise_scale.has_value()
                         ? nlohmann::json(*fit.noise_scale)
                         : nlohmann::json(nullptr);
  j["iterations"] = fit.iterations.has_value()
                        ? nlohmann::json(*fit.iterations)
                        : nlohmann::json(nullptr);
  j["seed"] = fit.seed.has_value() ? nlohmann::json(*fit.seed)
                                   : nlohmann::json(nullptr);
  j["retries"] = fit.retries;
  j["warnings"] = fit.warnings;
  return j;
}

nlohmann::json LinkageResultToJson(const LinkageResult& result) {
  nlohmann::json j;
  j["overall_accuracy"] = result.overall_accuracy;
  j["per_block_gamma"] = nlohmann::json::array();
  for (const BlockAccuracy& b : result.per_block_gamma) {
    j["per_block_gamma"].push_back(
        {{"block_key", b.block_key}, {"size", b.size}, {"gamma", b.gamma}});
  }
  j["pairs"] = nlohmann::json::array();
  for (const LinkPair& p : result.pairs) {
    j["pairs"].push_back({{"index_a", p.index_a},
                          {"index_b", p.index_b},
                          {"score", p.score},
                          {"above_threshold", p.above_threshold}});
  }
  return j;
}

std::string EntityTableToCsv(const EntityTable& table) {
  CsvTable csv;
  csv.header = {"entity_id", "block_key", "f1", "f2", "f3",
                "f4",        "f5",        "f6", "payload"};
  for (const EntityRecord& r : table.records) {
    std::vector<std::string> row = {r.entity_id, r.block_key};
    row.insert(row.end(), r.fields.begin(), r.fields.end());
    row.push_back(FormatDouble(r.payload));
    csv.rows.push_back(std::move(row));
  }
  return FormatCsv(csv);
}

absl::StatusOr<EntityTable> ParseEntityTable(std::string_view text) {
  absl::StatusOr<CsvTable> csv = ParseCsv(text, true);
  if (!csv.ok()) return csv.status();
  constexpr size_t kColumns = 2 + kFieldCount + 1;
  if (csv->header.size() != kColumns) {
    return absl::InvalidArgumentError(absl::StrCat(
        "entity table needs ", kColumns, " columns, header has ",
        csv->header.size()));
  }
  EntityTable table;
  for (size_t i = 0; i < csv->rows.size(); ++i) {
    const std::vector<std::string>& row = csv->rows[i];
    if (row.size() != kColumns) {
      return absl::InvalidArgumentError(
          absl::StrCat("entity row ", i + 1, " has ", row.size(), " fields"));
    }
    EntityRecord r;
    r.entity_id = row[0];
    r.block_key = row[1];
    for (int f = 0; f < kFieldCount; ++f) r.fields[f] = row[2 + f];
    if (!ParseDouble(row[kColumns - 1], &r.payload)) {
      return absl::InvalidArgumentError(
          absl::StrCat("entity row ", i + 1, " has a non-numeric payload"));
    }
    table.records.push_back(std::move(r));
  }
  if (absl::Status s = table.Validate(); !s.ok()) return s;
  return table;
}

absl::StatusOr<EntityTable> ReadEntityTable(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  absl::StatusOr<EntityTable> table = ParseEntityTable(*text);
  if (!table.ok()) return NoteFile(table.status(), path);
  return table;
}

std::string DumpJson(const nlohmann::json& j) { return j.dump(2) + "\n"; }

absl::StatusOr<nlohmann::json> ReadJson(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  nlohmann::json j = nlohmann::json::parse(*text, nullptr, false);
  if (j.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": invalid JSON"));
  }
  return j;
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
             nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

absl::StatusOr<std::string> FileSha256(const std::string& path) {
  absl::StatusOr<std::string> text = ReadFile(path);
  if (!text.ok()) return text.status();
  return Sha256Hex(*text);
}

}  // namespace linkdp
