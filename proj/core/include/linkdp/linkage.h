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

// Matching probability matrices (MPMs) and the linked-data containers built
// around them.
//
// An MPM Q is doubly stochastic with q_ij = P(z_i = y_j). Two storage forms
// are supported: a dense n x n matrix, and the block exchangeable-linkage-error
// form where each diagonal block of size m carries a single accuracy gamma
// (diagonal gamma, off-diagonal (1 - gamma) / (m - 1)). The block form is the
// canonical one; nothing in this library densifies it unless asked to.

#ifndef LINKDP_LINKAGE_H_
#define LINKDP_LINKAGE_H_

#include <span>
#include <string>
#include <optional>
#include <vector>

#include "Eigen/Core"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "linkdp/random.h"

namespace linkdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kStochasticTolerance = 1e-9;

struct EleBlock {
  int size = 0;
  double gamma = 1.0;

  friend bool operator==(const EleBlock&, const EleBlock&) = default;
};

class MatchingMatrix {
 public:
  enum class Kind { kDense, kBlockEle };

  // Identity (perfect linkage) as n blocks of size 1.
  static MatchingMatrix Identity(int n);

  // One block per entry. Rejects sizes < 1, gamma outside [0, 1], and
  // size-1 blocks with gamma != 1.
  static absl::StatusOr<MatchingMatrix> FromBlocks(std::vector<EleBlock> blocks);

  // Validated dense input; fails with the violation list when Q is not doubly
  // stochastic within tol.
  static absl::StatusOr<MatchingMatrix> FromDense(
      Matrix q, double tol = kStochasticTolerance);

  Kind kind() const { return kind_; }
  bool is_block_ele() const { return kind_ == Kind::kBlockEle; }
  int n() const { return n_; }

  // Block-form accessors; empty for dense matrices.
  const std::vector<EleBlock>& blocks() const { return blocks_; }
  // offsets()[b] is the first row of block b; offsets().back() == n.
  const std::vector<int>& offsets() const { return offsets_; }
  int BlockOf(int row) const { return block_of_[row]; }

  // The dense matrix for Kind::kDense.
  const Matrix& dense() const { return dense_; }

  double Entry(int i, int j) const;
  Matrix ToDense() const;

  // Q * m and Q^T * m for an n-row matrix m, using block structure when
  // available (O(n * cols) for the block form).
  Matrix Apply(const Matrix& m) const;
  Matrix ApplyTranspose(const Matrix& m) const;

  // Per-block sums of h; empty for dense matrices. Feed the result to
  // PairWeight to make it O(1) for the block form.
  std::vector<double> BlockSums(const Vector& h) const;

  // sum_u q_iu q_ju h_u.
  double PairWeight(int i, int j, const Vector& h,
                    std::span<const double> block_sums) const;

 private:
  MatchingMatrix() = default;

  Kind kind_ = Kind::kBlockEle;
  int n_ = 0;
  Matrix dense_;
  std::vector<EleBlock> blocks_;
  std::vector<int> offsets_;
  std::vector<int> block_of_;
};

// Single-block ELE matrix: q_ii = gamma, q_ij = (1 - gamma) / (n - 1).
absl::StatusOr<MatchingMatrix> EleMatrix(double gamma, int n);

// Block-diagonal assembly. Stays in block form when every input is; otherwise
// the result is dense.
absl::StatusOr<MatchingMatrix> BlockDiagonal(
    std::span<const MatchingMatrix> blocks);

// W = Q X. Row w_i is the convex combination sum_j q_ij x_j.
absl::StatusOr<Matrix> TransformDesign(const MatchingMatrix& q,
                                       const Matrix& x);

struct Violation {
  enum class Kind { kEntryRange, kRowSum, kColumnSum, kBlockParameter };
  Kind kind;
  int index;  // row, column, or block
  double value;

  std::string ToString() const;
};

std::vector<Violation> Validate(const Matrix& q,
                                double tol = kStochasticTolerance);
std::vector<Violation> Validate(const MatchingMatrix& q,
                                double tol = kStochasticTolerance);

// perm[i] = j means record i of the linked file carries response y_j.
struct LinkagePermutation {
  std::vector<int> perm;
};

enum class LinkageMode {
  // Within-block bijection: records are marked as mislinked independently and
  // the marked set is deranged uniformly at random.
  kPermutation,
  // Each record draws its source independently from its row of Q. Not a
  // permutation; the covariance law of independent products q_iu q_jv holds
  // exactly.
  kIndependent,
};

// Permutation sampler for a block-form Q. The per-record mark probability p
// of each block solves p * (1 - (1 - p)^(m - 1)) = 1 - gamma, so that after
// a lone mark is cleared the correct-link probability is exactly gamma.
class PermutationSampler {
 public:
  static absl::StatusOr<PermutationSampler> Create(const MatchingMatrix& q);

  LinkagePermutation Sample(Rng& rng) const;

  std::span<const double> mark_probabilities() const { return mark_prob_; }

 private:
  PermutationSampler() = default;

  std::vector<EleBlock> blocks_;
  std::vector<int> offsets_;
  std::vector<double> mark_prob_;
};

// Mark probability used by PermutationSampler for one block.
double MarkProbability(double gamma, int block_size);

// Returns source indices: a within-block bijection (kPermutation, block form
// only) or independent draws from each row of Q (kIndependent).
absl::StatusOr<std::vector<int>> SampleLinkage(const MatchingMatrix& q,
                                               LinkageMode mode, Rng& rng);

// z_i = y[source[i]].
Vector ApplyLinkage(const Vector& y, std::span<const int> source);

// Linked data: covariates X (n x d), linked response z, and, in simulations,
// the ground-truth response y.
struct LinkedDataset {
  Matrix x;
  Vector z;
  std::optional<Vector> y;
  bool has_intercept_column = false;

  int n() const { return static_cast<int>(x.rows()); }
  int d() const { return static_cast<int>(x.cols()); }
};

// Checks n >= d >= 1, |z| == n, and that z is a permutation of y when y is
// present.
absl::Status ValidateDataset(const LinkedDataset& data);

}  // namespace linkdp

#endif  // LINKDP_LINKAGE_H_
