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

#include "linkdp/linkage.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace linkdp {
namespace {

double OffDiagonal(const EleBlock& block) {
  return block.size > 1 ? (1.0 - block.gamma) / (block.size - 1) : 0.0;
}

absl::Status CheckBlock(const EleBlock& block, size_t index) {
  if (block.size < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("block ", index, ": size must be positive, got ",
                     block.size));
  }
  if (!(block.gamma >= 0.0 && block.gamma <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "block ", index, ": gamma must lie in [0, 1], got ", block.gamma));
  }
  if (block.size == 1 && block.gamma != 1.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "block ", index, ": a block of size 1 requires gamma = 1, got ",
        block.gamma));
  }
  return absl::OkStatus();
}

}  // namespace

MatchingMatrix MatchingMatrix::Identity(int n) {
  return *FromBlocks(std::vector<EleBlock>(n, EleBlock{1, 1.0}));
}

absl::StatusOr<MatchingMatrix> MatchingMatrix::FromBlocks(
    std::vector<EleBlock> blocks) {
  if (blocks.empty()) {
    return absl::InvalidArgumentError("matching matrix needs at least one block");
  }
  for (size_t b = 0; b < blocks.size(); ++b) {
    if (absl::Status s = CheckBlock(blocks[b], b); !s.ok()) return s;
  }
  MatchingMatrix q;
  q.kind_ = Kind::kBlockEle;
  q.offsets_.reserve(blocks.size() + 1);
  q.offsets_.push_back(0);
  for (size_t b = 0; b < blocks.size(); ++b) {
    q.offsets_.push_back(q.offsets_.back() + blocks[b].size);
    q.block_of_.insert(q.block_of_.end(), blocks[b].size, static_cast<int>(b));
  }
  q.n_ = q.offsets_.back();
  q.blocks_ = std::move(blocks);
  return q;
}

absl::StatusOr<MatchingMatrix> MatchingMatrix::FromDense(Matrix dense,
                                                         double tol) {
  if (dense.rows() == 0 || dense.rows() != dense.cols()) {
    return absl::InvalidArgumentError(
        absl::StrCat("matching matrix must be square and non-empty, got ",
                     dense.rows(), "x", dense.cols()));
  }
  std::vector<Violation> violations = Validate(dense, tol);
  if (!violations.empty()) {
    std::vector<std::string> lines;
    for (size_t i = 0; i < violations.size() && i < 5; ++i) {
      lines.push_back(violations[i].ToString());
    }
    return absl::InvalidArgumentError(
        absl::StrCat("matrix is not doubly stochastic (", violations.size(),
                     " violations): ", absl::StrJoin(lines, "; ")));
  }
  MatchingMatrix q;
  q.kind_ = Kind::kDense;
  q.n_ = static_cast<int>(dense.rows());
  q.dense_ = std::move(dense);
  return q;
}

double MatchingMatrix::Entry(int i, int j) const {
  if (kind_ == Kind::kDense) return dense_(i, j);
  const int b = block_of_[i];
  if (block_of_[j] != b) return 0.0;
  return i == j ? blocks_[b].gamma : OffDiagonal(blocks_[b]);
}

Matrix MatchingMatrix::ToDense() const {
  if (kind_ == Kind::kDense) return dense_;
  Matrix out = Matrix::Zero(n_, n_);
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const int start = offsets_[b];
    const int m = blocks_[b].size;
    out.block(start, start, m, m).setConstant(OffDiagonal(blocks_[b]));
    for (int k = 0; k < m; ++k) out(start + k, start + k) = blocks_[b].gamma;
  }
  return out;
}

Matrix MatchingMatrix::Apply(const Matrix& m) const {
  if (kind_ == Kind::kDense) return dense_ * m;
  Matrix out(m.rows(), m.cols());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const int start = offsets_[b];
    const int size = blocks_[b].size;
    const auto in_block = m.middleRows(start, size);
    if (size == 1) {
      out.row(start) = in_block;
      continue;
    }
    const double gamma = blocks_[b].gamma;
    const double off = OffDiagonal(blocks_[b]);
    const Eigen::RowVectorXd total = in_block.colwise().sum();
    for (int k = 0; k < size; ++k) {
      out.row(start + k) =
          gamma * in_block.row(k) + off * (total - in_block.row(k));
    }
  }
  return out;
}

Matrix MatchingMatrix::ApplyTranspose(const Matrix& m) const {
  // ELE blocks are symmetric.
  if (kind_ == Kind::kDense) return dense_.transpose() * m;
  return Apply(m);
}

std::vector<double> MatchingMatrix::BlockSums(const Vector& h) const {
  std::vector<double> sums;
  if (kind_ == Kind::kDense) return sums;
  sums.resize(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    sums[b] = h.segment(offsets_[b], blocks_[b].size).sum();
  }
  return sums;
}

double MatchingMatrix::PairWeight(int i, int j, const Vector& h,
                                  std::span<const double> block_sums) const {
  if (kind_ == Kind::kDense) {
    return (dense_.row(i).array() * dense_.row(j).array() *
            h.transpose().array())
        .sum();
  }
  const int b = block_of_[i];
  if (block_of_[j] != b) return 0.0;
  const EleBlock& block = blocks_[b];
  if (block.size == 1) return h(i);
  const double total = block_sums.empty()
                           ? h.segment(offsets_[b], block.size).sum()
                           : block_sums[b];
  const double a = block.gamma;
  const double off = OffDiagonal(block);
  if (i == j) return a * a * h(i) + off * off * (total - h(i));
  return a * off * (h(i) + h(j)) + off * off * (total - h(i) - h(j));
}

absl::StatusOr<MatchingMatrix> EleMatrix(double gamma, int n) {
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("ELE matrix needs n >= 1, got ", n));
  }
  return MatchingMatrix::FromBlocks({EleBlock{n, gamma}});
}

absl::StatusOr<MatchingMatrix> BlockDiagonal(
    std::span<const MatchingMatrix> blocks) {
  if (blocks.empty()) {
    return absl::InvalidArgumentError("block_diagonal needs at least one block");
  }
  const bool all_ele = std::all_of(
      blocks.begin(), blocks.end(),
      [](const MatchingMatrix& q) { return q.is_block_ele(); });
  if (all_ele) {
    std::vector<EleBlock> merged;
    for (const MatchingMatrix& q : blocks) {
      merged.insert(merged.end(), q.blocks().begin(), q.blocks().end());
    }
    return MatchingMatrix::FromBlocks(std::move(merged));
  }
  int n = 0;
  for (const MatchingMatrix& q : blocks) n += q.n();
  Matrix dense = Matrix::Zero(n, n);
  int start = 0;
  for (const MatchingMatrix& q : blocks) {
    dense.block(start, start, q.n(), q.n()) = q.ToDense();
    start += q.n();
  }
  return MatchingMatrix::FromDense(std::move(dense));
}

absl::StatusOr<Matrix> TransformDesign(const MatchingMatrix& q,
                                       const Matrix& x) {
  if (x.rows() != q.n()) {
    return absl::InvalidArgumentError(
        absl::StrCat("design has ", x.rows(), " rows but Q is ", q.n(), "x",
                     q.n()));
  }
  return q.Apply(x);
}

std::string Violation::ToString() const {
  switch (kind) {
    case Kind::kEntryRange:
      return absl::StrCat("entry out of [0,1] in row ", index, ": ", value);
    case Kind::kRowSum:
      return absl::StrCat("row ", index, " sums to ", value);
    case Kind::kColumnSum:
      return absl::StrCat("column ", index, " sums to ", value);
    case Kind::kBlockParameter:
      return absl::StrCat("block ", index, " has invalid parameter ", value);
  }
  return "unknown violation";
}

std::vector<Violation> Validate(const Matrix& q, double tol) {
  std::vector<Violation> out;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      const double v = q(i, j);
      if (!(v >= -tol && v <= 1.0 + tol)) {
        out.push_back({Violation::Kind::kEntryRange, static_cast<int>(i), v});
      }
    }
  }
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double s = q.row(i).sum();
    if (!(std::abs(s - 1.0) <= tol)) {
      out.push_back({Violation::Kind::kRowSum, static_cast<int>(i), s});
    }
  }
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double s = q.col(j).sum();
    if (!(std::abs(s - 1.0) <= tol)) {
      out.push_back({Violation::Kind::kColumnSum, static_cast<int>(j), s});
    }
  }
  return out;
}

std::vector<Violation> Validate(const MatchingMatrix& q, double tol) {
  if (q.kind() == MatchingMatrix::Kind::kDense) return Validate(q.dense(), tol);
  std::vector<Violation> out;
  for (size_t b = 0; b < q.blocks().size(); ++b) {
    const EleBlock& block = q.blocks()[b];
    if (!CheckBlock(block, b).ok()) {
      out.push_back(
          {Violation::Kind::kBlockParameter, static_cast<int>(b), block.gamma});
      continue;
    }
    // Rows and columns of an ELE block share one sum.
    const double s = block.gamma + (block.size - 1) * OffDiagonal(block);
    if (!(std::abs(s - 1.0) <= tol)) {
      out.push_back({Violation::Kind::kRowSum, q.offsets()[b], s});
    }
  }
  return out;
}

double MarkProbability(double gamma, int block_size) {
  if (block_size <= 1 || gamma >= 1.0) return 0.0;
  if (gamma <= 0.0) return 1.0;
  const double target = 1.0 - gamma;
  const int others = block_size - 1;
  // f(p) = p (1 - (1 - p)^others) increases from 0 to 1 on [0, 1].
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-17; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = mid * -std::expm1(others * std::log1p(-mid));
    (f < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

absl::StatusOr<PermutationSampler> PermutationSampler::Create(
    const MatchingMatrix& q) {
  if (!q.is_block_ele()) {
    return absl::InvalidArgumentError(
        "permutation sampling needs a block-form (ELE) matching matrix");
  }
  PermutationSampler sampler;
  sampler.blocks_ = q.blocks();
  sampler.offsets_ = q.offsets();
  sampler.mark_prob_.reserve(q.blocks().size());
  for (const EleBlock& block : q.blocks()) {
    sampler.mark_prob_.push_back(MarkProbability(block.gamma, block.size));
  }
  return sampler;
}

LinkagePermutation PermutationSampler::Sample(Rng& rng) const {
  LinkagePermutation out;
  out.perm.resize(offsets_.back());
  std::iota(out.perm.begin(), out.perm.end(), 0);
  std::vector<int> marked;
  std::vector<int> order;
  for (size_t b = 0; b < blocks_.size(); ++b) {
    const int start = offsets_[b];
    const int size = blocks_[b].size;
    marked.clear();
    for (int k = 0; k < size; ++k) {
      if (rng.Uniform01() < mark_prob_[b]) marked.push_back(start + k);
    }
    const size_t count = marked.size();
    if (count < 2) continue;
    order.resize(count);
    bool deranged = false;
    while (!deranged) {
      std::iota(order.begin(), order.end(), 0);
      rng.Shuffle(std::span<int>(order));
      deranged = true;
      for (size_t t = 0; t < count; ++t) {
        if (order[t] == static_cast<int>(t)) {
          deranged = false;
          break;
        }
      }
    }
    for (size_t t = 0; t < count; ++t) out.perm[marked[t]] = marked[order[t]];
  }
  return out;
}

absl::StatusOr<std::vector<int>> SampleLinkage(const MatchingMatrix& q,
                                               LinkageMode mode, Rng& rng) {
  if (mode == LinkageMode::kPermutation) {
    absl::StatusOr<PermutationSampler> sampler = PermutationSampler::Create(q);
    if (!sampler.ok()) return sampler.status();
    return sampler->Sample(rng).perm;
  }
  std::vector<int> source(q.n());
  if (q.is_block_ele()) {
    for (size_t b = 0; b < q.blocks().size(); ++b) {
      const int start = q.offsets()[b];
      const int size = q.blocks()[b].size;
      const double gamma = q.blocks()[b].gamma;
      for (int k = 0; k < size; ++k) {
        if (size == 1 || rng.Uniform01() < gamma) {
          source[start + k] = start + k;
        } else {
          int other = static_cast<int>(rng.UniformInt(size - 1));
          if (other >= k) ++other;
          source[start + k] = start + other;
        }
      }
    }
    return source;
  }
  const Matrix& dense = q.dense();
  for (int i = 0; i < q.n(); ++i) {
    const double u = rng.Uniform01() * dense.row(i).sum();
    double cumulative = 0.0;
    int pick = q.n() - 1;
    for (int j = 0; j < q.n(); ++j) {
      cumulative += dense(i, j);
      if (u < cumulative) {
        pick = j;
        break;
      }
    }
    source[i] = pick;
  }
  return source;
}

Vector ApplyLinkage(const Vector& y, std::span<const int> source) {
  Vector z(static_cast<Eigen::Index>(source.size()));
  for (size_t i = 0; i < source.size(); ++i) z(i) = y(source[i]);
  return z;
}

absl::Status ValidateDataset(const LinkedDataset& data) {
  if (data.d() < 1 || data.n() < data.d()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "need n >= d >= 1, got n=", data.n(), " d=", data.d()));
  }
  if (data.z.size() != data.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "z has ", data.z.size(), " entries but X has ", data.n(), " rows"));
  }
  if (data.y.has_value()) {
    if (data.y->size() != data.n()) {
      return absl::InvalidArgumentError("y and z differ in length");
    }
    std::vector<double> zs(data.z.begin(), data.z.end());
    std::vector<double> ys(data.y->begin(), data.y->end());
    std::sort(zs.begin(), zs.end());
    std::sort(ys.begin(), ys.end());
    if (zs != ys) {
      return absl::InvalidArgumentError("z is not a permutation of y");
    }
  }
  return absl::OkStatus();
}

}  // namespace linkdp
