#pragma once

#include "bilayer/types.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <memory>
#include <vector>

namespace bilayer {

/// Relative residual accepted for every direct solve.
inline constexpr double kSolveTolerance = 1e-9;

struct SaddleSolution {
  Eigen::VectorXd solution;
  Eigen::VectorXd multipliers;
  double relative_residual = 0.0;
};

/// The symmetric indefinite system [[A, Cᵀ], [C, 0]] with a sparse LU factorization.
///
/// The fill-reducing ordering is computed on the first factorization and reused as long as
/// the sparsity pattern of the composed matrix does not change.
class SaddleSystem {
 public:
  SaddleSystem() = default;

  /// Composes and factors. Throws InadmissibleState naming the first dependent constraint row
  /// when C is rank deficient, or the failing pivot column when the LU breaks down.
  void factor(const SparseMatrix& a, const SparseMatrix& c);

  /// rhs has size n + m. Throws SolverFailure if the relative residual exceeds kSolveTolerance.
  SaddleSolution solve(const Eigen::VectorXd& rhs) const;

  Index num_primal() const { return n_; }
  Index num_constraints() const { return m_; }
  const SparseMatrix& matrix() const { return composed_; }

 private:
  Index n_ = 0;
  Index m_ = 0;
  SparseMatrix composed_;
  std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

/// A = (1/tau + 1) K composed with the constraint block C.
SaddleSystem compose_and_factor(const SparseMatrix& k, const SparseMatrix& c, double tau);

/// Constraint attached to one block of unknowns: either the whole block is fixed to zero, or
/// the rows of `rows` (r x block_size, possibly empty) must annihilate the block.
struct BlockConstraint {
  bool fixed = false;
  Eigen::MatrixXd rows;
  /// Optional null-space basis of `rows` (block_size x (block_size - r)). When empty an
  /// orthonormal basis is computed by QR.
  Eigen::MatrixXd basis;
};

struct SolveReport {
  /// 0 for a direct solve with a current factorization.
  int pcg_iterations = 0;
  bool refactored = false;
  double relative_residual = 0.0;
};

/// Minimizes ½ xᵀ (s K) x - bᵀ x over x satisfying independent block-local constraints by
/// eliminating them with a null-space basis B per block. The reduced matrix s Bᵀ K B is
/// symmetric positive definite and factored with a sparse Cholesky; the symbolic analysis is
/// kept while the block ranks stay the same.
///
/// With factor reuse enabled, a factorization computed for earlier constraints preconditions
/// conjugate gradients on the current reduced system; when that needs more than
/// `max_pcg_iterations`, the current system is refactored and solved directly.
class BlockConstrainedSystem {
 public:
  BlockConstrainedSystem(SparseMatrix k, int block_size);

  /// Throws InadmissibleState if a block constraint is rank deficient or a supplied basis
  /// does not span its null space.
  void set_constraints(const std::vector<BlockConstraint>& constraints);
  /// Factors s * Bᵀ K B for the current constraints. Throws InadmissibleState if the reduced
  /// matrix is not positive definite.
  void factor(double scale);
  /// Enables preconditioned reuse of older factorizations.
  void set_factor_reuse(bool enabled, int max_pcg_iterations = 12);

  /// Constrained solution of (s K) x = rhs. Throws SolverFailure if the relative residual of the
  /// reduced system exceeds kSolveTolerance.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, SolveReport* report = nullptr);

  /// max over blocks of |C_b x_b| (fixed blocks count their full value).
  double constraint_residual(const Eigen::VectorXd& x) const;

  Index size() const { return k_.rows(); }
  Index reduced_size() const { return offsets_.empty() ? 0 : offsets_.back(); }
  /// Sparse null-space basis B (size() x reduced_size()).
  SparseMatrix basis() const;
  /// Lower triangle of the last factored reduced matrix.
  const SparseMatrix& reduced_matrix() const { return reduced_; }
  /// Number of numeric factorizations so far.
  long factorizations() const { return factorizations_; }
  bool has_factor() const { return has_factor_; }

 private:
  struct BlockPair {
    Index row_block;
    Eigen::MatrixXd k;
  };

  void build_pattern();
  Eigen::VectorXd restrict_to_reduced(const Eigen::VectorXd& x) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& u) const;
  Eigen::VectorXd apply_reduced(const Eigen::VectorXd& u) const;

  SparseMatrix k_;
  int block_size_;
  Index num_blocks_;
  /// Per column block, the blocks at or below the diagonal with nonzero coupling, ascending.
  std::vector<std::vector<BlockPair>> lower_pairs_;
  std::vector<BlockConstraint> constraints_;
  std::vector<Eigen::MatrixXd> block_basis_;
  std::vector<Index> offsets_;
  std::vector<Index> pattern_counts_;
  SparseMatrix reduced_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> cholesky_;
  bool analyzed_ = false;
  /// The factorization belongs to the current constraints and scale.
  bool factor_current_ = false;
  bool has_factor_ = false;
  double scale_ = 1.0;
  bool reuse_ = false;
  int max_pcg_iterations_ = 12;
  long factorizations_ = 0;
};

}  // namespace bilayer
