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

#include "linkdp/linker.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "linkdp/random.h"

namespace linkdp {
namespace {

constexpr double kPrefixScale = 0.1;
constexpr int kPrefixCap = 4;

constexpr std::string_view kGivenNames[] = {
    "OLIVIA",  "CHARLOTTE", "AMELIA",  "ISLA",     "MIA",     "AVA",
    "GRACE",   "CHLOE",     "WILLOW",  "MATILDA",  "RUBY",    "SOPHIE",
    "EMILY",   "HARPER",    "ZOE",     "LILY",     "EVIE",    "SIENNA",
    "JASMINE", "ELLA",      "HANNAH",  "GEORGIA",  "LUCY",    "ABIGAIL",
    "OLIVER",  "NOAH",      "JACK",    "WILLIAM",  "LEO",     "LUCAS",
    "THOMAS",  "HENRY",     "CHARLIE", "JAMES",    "ETHAN",   "MASON",
    "HUDSON",  "ARCHIE",    "SAMUEL",  "LACHLAN",  "HARRISON", "ALEXANDER",
    "BENJAMIN", "COOPER",   "RILEY",   "MAX",      "JOSHUA",  "DANIEL",
    "PATRICK", "MARGARET",  "DOROTHY", "KATHLEEN", "PHILLIP", "GRAHAM",
    "ROBERT",  "STEPHEN",   "NATASHA", "REBECCA",  "VICTORIA", "NICHOLAS"};

constexpr std::string_view kSurnames[] = {
    "SMITH",    "JONES",     "WILLIAMS", "BROWN",    "WILSON",   "TAYLOR",
    "JOHNSON",  "WHITE",     "MARTIN",   "ANDERSON", "THOMPSON", "NGUYEN",
    "THOMAS",   "WALKER",    "HARRIS",   "LEE",      "RYAN",     "ROBINSON",
    "KELLY",    "KING",      "DAVIS",    "WRIGHT",   "EVANS",    "ROBERTS",
    "GREEN",    "HALL",      "WOOD",     "JACKSON",  "CLARKE",   "PATEL",
    "KHAN",     "LEWIS",     "JAMES",    "PHILLIPS", "MITCHELL", "CAMPBELL",
    "MORRIS",   "COOPER",    "WARD",     "TURNER",   "MURPHY",   "O'BRIEN",
    "MCDONALD", "STEWART",   "SCOTT",    "YOUNG",    "BAKER",    "ADAMS",
    "NELSON",   "HILL",      "RAMIREZ",  "CHEN",     "WANG",     "SINGH",
    "BRADSHAW", "FITZGERALD", "HENDERSON", "PETERSEN", "ROSSI",   "MULLER"};

constexpr std::string_view kStreets[] = {
    "WATTLE",  "BANKSIA",  "ACACIA",   "GEORGE",  "VICTORIA", "ELIZABETH",
    "KING",    "QUEEN",    "CHURCH",   "HIGH",    "STATION",  "RAILWAY",
    "PARK",    "MAIN",     "MILL",     "BRIDGE",  "HILLSIDE", "RIVERVIEW",
    "OCEAN",   "BEACH",    "FOREST",   "GLENROY", "KOOKABURRA", "MAGPIE",
    "EUCALYPT", "BOTTLEBRUSH", "JACARANDA", "WARATAH", "CORAL", "SUNSET",
    "TELOPEA", "MACQUARIE", "FLINDERS", "SWANSTON", "COLLINS", "BOURKE",
    "LONSDALE", "RUSSELL", "EXHIBITION", "SPENCER"};

constexpr std::string_view kStreetTypes[] = {"STREET", "ROAD",  "AVENUE",
                                             "PLACE",  "CRESCENT", "DRIVE",
                                             "COURT",  "PARADE"};

constexpr std::string_view kSuburbs[] = {
    "ASHFIELD",   "BALMAIN",    "CAMPSIE",    "DARLINGHURST", "ENMORE",
    "FAIRFIELD",  "GLEBE",      "HORNSBY",    "INGLEBURN",    "JANNALI",
    "KOGARAH",    "LEICHHARDT", "MARRICKVILLE", "NEWTOWN",    "ORANGE",
    "PADDINGTON", "QUAKERS HILL", "RANDWICK", "STANMORE",     "TOONGABBIE",
    "ULTIMO",     "VAUCLUSE",   "WAVERLEY",   "YAGOONA",      "ZETLAND",
    "BRUNSWICK",  "CARLTON",    "FITZROY",    "RICHMOND",     "ST KILDA",
    "TOORAK",     "FOOTSCRAY",  "BELCONNEN",  "WODEN",        "TUGGERANONG",
    "GUNGAHLIN",  "FREMANTLE",  "SUBIACO",    "GLENELG",      "SANDY BAY"};

template <size_t N>
std::string Pick(const std::string_view (&choices)[N], Rng& rng) {
  return std::string(choices[rng.UniformInt(N)]);
}

bool IsDigits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

char RandomLike(char original, Rng& rng) {
  if (original >= '0' && original <= '9') {
    return static_cast<char>('0' + rng.UniformInt(10));
  }
  return static_cast<char>('A' + rng.UniformInt(26));
}

// One typo. Digit-only and date fields skip abbreviation and keep their
// separators in place.
std::string Corrupt(std::string value, Rng& rng) {
  if (value.empty()) return value;
  const bool numeric =
      IsDigits(value) || (value.size() == 10 && value[4] == '-');
  std::vector<size_t> editable;
  for (size_t i = 0; i < value.size(); ++i) {
    if (value[i] != ' ' && value[i] != '-') editable.push_back(i);
  }
  if (editable.empty()) return value;
  const int op = static_cast<int>(rng.UniformInt(numeric ? 3 : 4));
  const size_t at = editable[rng.UniformInt(editable.size())];
  switch (op) {
    case 0: {  // substitution
      char replacement = value[at];
      while (replacement == value[at]) replacement = RandomLike(value[at], rng);
      value[at] = replacement;
      break;
    }
    case 1: {  // adjacent transposition
      size_t i = at;
      size_t j = at + 1;
      if (j >= value.size() || value[j] == ' ' || value[j] == '-') {
        if (at == 0 || value[at - 1] == ' ' || value[at - 1] == '-') break;
        i = at - 1;
        j = at;
      }
      if (value[i] == value[j]) {
        value[i] = RandomLike(value[i], rng);
      } else {
        std::swap(value[i], value[j]);
      }
      break;
    }
    case 2:  // deletion
      if (numeric) {
        value[at] = RandomLike(value[at], rng);
      } else {
        value.erase(at, 1);
      }
      break;
    default: {  // abbreviation: keep the first letter of the first word
      const size_t space = value.find(' ');
      value = value.substr(0, 1) + "." +
              (space == std::string::npos ? "" : value.substr(space));
      break;
    }
  }
  return value;
}

}  // namespace

absl::Status EntityTable::Validate() const {
  std::unordered_set<std::string> seen;
  for (const EntityRecord& r : records) {
    if (!seen.insert(r.entity_id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate entity_id ", r.entity_id));
    }
  }
  return absl::OkStatus();
}

double Jaro(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const int la = static_cast<int>(a.size());
  const int lb = static_cast<int>(b.size());
  const int window = std::max(0, std::max(la, lb) / 2 - 1);
  std::vector<char> used_a(la, 0);
  std::vector<char> used_b(lb, 0);
  int matches = 0;
  for (int i = 0; i < la; ++i) {
    const int lo = std::max(0, i - window);
    const int hi = std::min(lb - 1, i + window);
    for (int j = lo; j <= hi; ++j) {
      if (!used_b[j] && a[i] == b[j]) {
        used_a[i] = used_b[j] = 1;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  int half_transpositions = 0;
  for (int i = 0, j = 0; i < la; ++i) {
    if (!used_a[i]) continue;
    while (!used_b[j]) ++j;
    if (a[i] != b[j]) ++half_transpositions;
    ++j;
  }
  const double m = matches;
  return (m / la + m / lb + (m - half_transpositions / 2.0) / m) / 3.0;
}

double JaroWinkler(std::string_view a, std::string_view b) {
  const double jaro = Jaro(a, b);
  const size_t cap = std::min({a.size(), b.size(), size_t{kPrefixCap}});
  size_t prefix = 0;
  while (prefix < cap && a[prefix] == b[prefix]) ++prefix;
  return jaro + prefix * kPrefixScale * (1.0 - jaro);
}

double PairScore(const EntityRecord& a, const EntityRecord& b,
                 const LinkerOptions& options) {
  double score = 0.0;
  for (int f = 0; f < kFieldCount; ++f) {
    if (options.comparators[f] == FieldComparator::kExact) {
      score += a.fields[f] == b.fields[f] ? 1.0 : 0.0;
    } else {
      score += JaroWinkler(a.fields[f], b.fields[f]);
    }
  }
  return score;
}

absl::StatusOr<LinkageResult> LinkRecords(const EntityTable& a,
                                          const EntityTable& b,
                                          const LinkerOptions& options) {
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> blocks;
  for (int i = 0; i < static_cast<int>(a.records.size()); ++i) {
    blocks[a.records[i].block_key].first.push_back(i);
  }
  for (int j = 0; j < static_cast<int>(b.records.size()); ++j) {
    blocks[b.records[j].block_key].second.push_back(j);
  }
  for (const auto& [key, members] : blocks) {
    if (members.first.size() != members.second.size()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "block '", key, "' has ", members.first.size(), " records in A but ",
          members.second.size(), " in B"));
    }
  }

  LinkageResult result;
  size_t correct_total = 0;
  uint64_t block_index = 0;
  for (const auto& [key, members] : blocks) {
    const std::vector<int>& rows_a = members.first;
    const std::vector<int>& rows_b = members.second;
    const int m = static_cast<int>(rows_a.size());

    struct Candidate {
      double score;
      int a;
      int b;
    };
    std::vector<Candidate> candidates;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        const double s =
            PairScore(a.records[rows_a[i]], b.records[rows_b[j]], options);
        if (s >= options.threshold) candidates.push_back({s, i, j});
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& x, const Candidate& y) {
                if (x.score != y.score) return x.score > y.score;
                if (x.a != y.a) return x.a < y.a;
                return x.b < y.b;
              });
    std::vector<int> partner(m, -1);
    std::vector<double> score(m, 0.0);
    std::vector<char> taken_b(m, 0);
    for (const Candidate& c : candidates) {
      if (partner[c.a] >= 0 || taken_b[c.b]) continue;
      partner[c.a] = c.b;
      score[c.a] = c.score;
      taken_b[c.b] = 1;
    }
    std::vector<char> above(m, 0);
    std::vector<int> free_b;
    for (int i = 0; i < m; ++i) above[i] = partner[i] >= 0;
    for (int j = 0; j < m; ++j) {
      if (!taken_b[j]) free_b.push_back(j);
    }
    Rng rng(DeriveSeed(options.seed, block_index++));
    rng.Shuffle(std::span<int>(free_b));
    size_t next = 0;
    for (int i = 0; i < m; ++i) {
      if (partner[i] >= 0) continue;
      partner[i] = free_b[next++];
      score[i] = PairScore(a.records[rows_a[i]], b.records[rows_b[partner[i]]],
                           options);
    }

    int correct = 0;
    for (int i = 0; i < m; ++i) {
      const int ia = rows_a[i];
      const int ib = rows_b[partner[i]];
      if (a.records[ia].entity_id == b.records[ib].entity_id) ++correct;
      result.pairs.push_back({ia, ib, score[i], static_cast<bool>(above[i])});
    }
    correct_total += correct;
    result.per_block_gamma.push_back(
        {key, m, m > 0 ? static_cast<double>(correct) / m : 1.0});
  }
  result.overall_accuracy =
      result.pairs.empty()
          ? 1.0
          : static_cast<double>(correct_total) / result.pairs.size();
  return result;
}

absl::StatusOr<std::pair<EntityTable, EntityTable>> GenerateCorpus(
    const CorpusOptions& options) {
  if (!(options.corruption_rate >= 0.0 && options.corruption_rate <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "corruption_rate must lie in [0, 1], got ", options.corruption_rate));
  }
  if (options.n_blocks < 1 || options.n < options.n_blocks) {
    return absl::InvalidArgumentError(
        absl::StrCat("need n >= n_blocks >= 1, got n=", options.n,
                     " n_blocks=", options.n_blocks));
  }
  Rng rng(DeriveSeed(options.seed, 0));
  EntityTable a;
  a.records.reserve(options.n);
  for (int k = 0; k < options.n; ++k) {
    EntityRecord r;
    r.entity_id = absl::StrFormat("E%07d", k + 1);
    const int block = k < options.n_blocks
                          ? k
                          : static_cast<int>(rng.UniformInt(options.n_blocks));
    r.block_key = absl::StrFormat("B%02d", block + 1);
    r.fields[0] = Pick(kGivenNames, rng);
    r.fields[1] = Pick(kSurnames, rng);
    r.fields[2] = absl::StrCat(1 + rng.UniformInt(300), " ", Pick(kStreets, rng),
                               " ", Pick(kStreetTypes, rng));
    r.fields[3] = Pick(kSuburbs, rng);
    r.fields[4] = absl::StrFormat("%04d", 2000 + rng.UniformInt(1000));
    r.fields[5] = absl::StrFormat("%04d-%02d-%02d", 1930 + rng.UniformInt(76),
                                  1 + rng.UniformInt(12), 1 + rng.UniformInt(28));
    r.payload = rng.Normal();
    a.records.push_back(std::move(r));
  }

  Rng noise(DeriveSeed(options.seed, 1));
  Rng typo(DeriveSeed(options.seed, 2));
  EntityTable b;
  b.records = a.records;
  for (EntityRecord& r : b.records) {
    r.payload = options.slope * r.payload + options.noise_sd * noise.Normal();
    for (std::string& field : r.fields) {
      if (typo.Uniform01() < options.corruption_rate) {
        field = Corrupt(field, typo);
      }
    }
  }
  Rng order(DeriveSeed(options.seed, 3));
  order.Shuffle(std::span<EntityRecord>(b.records));
  return std::make_pair(std::move(a), std::move(b));
}

absl::StatusOr<MatchingMatrix> GammaToMpm(const LinkageResult& result) {
  std::vector<EleBlock> blocks;
  for (const BlockAccuracy& block : result.per_block_gamma) {
    if (!(block.gamma >= 0.0 && block.gamma <= 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "block '", block.block_key, "' has gamma ", block.gamma,
          " outside [0, 1]"));
    }
    blocks.push_back({block.size, block.gamma});
  }
  return MatchingMatrix::FromBlocks(std::move(blocks));
}

LinkedDataset LinkedPayloads(const EntityTable& a, const EntityTable& b,
                             const LinkageResult& result) {
  std::unordered_map<std::string, int> truth;
  for (int j = 0; j < static_cast<int>(b.records.size()); ++j) {
    truth.emplace(b.records[j].entity_id, j);
  }
  const int n = static_cast<int>(result.pairs.size());
  LinkedDataset data;
  data.x.resize(n, 1);
  data.z.resize(n);
  Vector y(n);
  bool complete = true;
  for (int i = 0; i < n; ++i) {
    const LinkPair& p = result.pairs[i];
    data.x(i, 0) = a.records[p.index_a].payload;
    data.z(i) = b.records[p.index_b].payload;
    const auto it = truth.find(a.records[p.index_a].entity_id);
    if (it == truth.end()) {
      complete = false;
    } else {
      y(i) = b.records[it->second].payload;
    }
  }
  if (complete) data.y = std::move(y);
  return data;
}

}  // namespace linkdp
