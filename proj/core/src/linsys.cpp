#include "bilayer/linsys.hpp"

#include "bilayer/error.hpp"

#include <Eigen/SparseQR>

#include <algorithm>
#include <map>
#include <string>

namespace bilayer {

namespace {

bool same_pattern(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.nonZeros() != b.nonZeros()) return false;
  return std::equal(a.outerIndexPtr(), a.outerIndexPtr() + a.outerSize() + 1, b.outerIndexPtr()) &&
         std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr());
}

}  // namespace

void SaddleSystem::factor(const SparseMatrix& a, const SparseMatrix& c) {
  if (a.rows() != a.cols()) throw DataError("saddle system: A must be square");
  if (c.rows() > 0 && c.cols() != a.cols()) throw DataError("saddle system: C has incompatible width");
  n_ = a.rows();
  m_ = c.rows();

  if (m_ > 0) {
    SparseMatrix ct = c.transpose();
    ct.makeCompressed();
    Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr(ct);
    if (qr.info() != Eigen::Success) throw InadmissibleState("saddle system: QR of the constraint block failed");
    if (qr.rank() < m_) {
      const Index row = qr.colsPermutation().indices()(qr.rank());
      throw InadmissibleState("saddle system: constraint block is rank deficient (rank " + std::to_string(qr.rank()) +
                              " of " + std::to_string(m_) + "), dependent row " + std::to_string(row));
    }
  }

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * c.nonZeros()));
  for (int col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
  const auto offset = static_cast<int>(n_);
  for (int col = 0; col < c.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(c, col); it; ++it) {
      triplets.emplace_back(offset + it.row(), it.col(), it.value());
      triplets.emplace_back(it.col(), offset + it.row(), it.value());
    }
  SparseMatrix composed(static_cast<int>(n_ + m_), static_cast<int>(n_ + m_));
  composed.setFromTriplets(triplets.begin(), triplets.end());
  composed.makeCompressed();

  if (!lu_ || !same_pattern(composed, composed_)) {
    lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(composed);
  }
  composed_ = std::move(composed);
  lu_->factorize(composed_);
  if (lu_->info() != Eigen::Success)
    throw InadmissibleState("saddle system: singular composition (" + lu_->lastErrorMessage() + ")");
}

SaddleSolution SaddleSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != n_ + m_) throw DataError("saddle system: right-hand side has the wrong size");
  SaddleSolution out;
  const double norm_b = rhs.norm();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
  if (norm_b > 0.0) {
    if (!lu_) throw DataError("saddle system: not factored");
    x = lu_->solve(rhs);
    out.relative_residual = (composed_ * x - rhs).norm() / norm_b;
    if (!(out.relative_residual <= kSolveTolerance))
      throw SolverFailure("saddle solve residual " + std::to_string(out.relative_residual) + " above tolerance");
  }
  out.solution = x.head(n_);
  out.multipliers = x.tail(m_);
  return out;
}

SaddleSystem compose_and_factor(const SparseMatrix& k, const SparseMatrix& c, double tau) {
  if (!(tau > 0.0)) throw DataError("tau must be positive");
  SaddleSystem sys;
  sys.factor((1.0 / tau + 1.0) * k, c);
  return sys;
}

// ---------------------------------------------------------------------------

BlockConstrainedSystem::BlockConstrainedSystem(SparseMatrix k, int block_size)
    : k_(std::move(k)), block_size_(block_size) {
  if (block_size_ <= 0 || k_.rows() % block_size_ != 0 || k_.rows() != k_.cols())
    throw DataError("block constrained system: incompatible block size");
  k_.makeCompressed();
  num_blocks_ = k_.rows() / block_size_;
  const int b = block_size_;
  std::vector<std::map<Index, Eigen::MatrixXd>> pairs(static_cast<std::size_t>(num_blocks_));
  for (int col = 0; col < k_.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(k_, col); it; ++it) {
      const Index bw = col / b;
      const Index bv = it.row() / b;
      if (bv < bw) continue;
      auto& m = pairs[static_cast<std::size_t>(bw)][bv];
      if (m.size() == 0) m = Eigen::MatrixXd::Zero(b, b);
      m(it.row() % b, col % b) += it.value();
    }
  lower_pairs_.resize(static_cast<std::size_t>(num_blocks_));
  for (std::size_t w = 0; w < pairs.size(); ++w)
    for (auto& [v, m] : pairs[w]) lower_pairs_[w].push_back({v, std::move(m)});
}

void BlockConstrainedSystem::set_constraints(const std::vector<BlockConstraint>& constraints) {
  if (static_cast<Index>(constraints.size()) != num_blocks_) throw DataError("block constrained system: wrong number of blocks");
  constraints_ = constraints;
  block_basis_.assign(static_cast<std::size_t>(num_blocks_), Eigen::MatrixXd());
  offsets_.assign(static_cast<std::size_t>(num_blocks_) + 1, 0);

  const int b = block_size_;
  for (Index blk = 0; blk < num_blocks_; ++blk) {
    const auto& con = constraints_[static_cast<std::size_t>(blk)];
    auto& basis = block_basis_[static_cast<std::size_t>(blk)];
    if (con.fixed) {
      basis.resize(b, 0);
    } else if (con.rows.rows() == 0) {
      basis = Eigen::MatrixXd::Identity(b, b);
    } else if (con.basis.size() > 0) {
      if (con.rows.cols() != b || con.basis.rows() != b) throw DataError("block constraint has the wrong width");
      if (con.basis.cols() + con.rows.rows() != b)
        throw InadmissibleState("constraint block " + std::to_string(blk) + ": basis has the wrong dimension");
      const double scale = std::max(1.0, con.rows.norm()) * std::max(1.0, con.basis.norm());
      if ((con.rows * con.basis).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InadmissibleState("constraint block " + std::to_string(blk) + ": basis is not in the null space");
      basis = con.basis;
    } else {
      if (con.rows.cols() != b) throw DataError("block constraint has the wrong width");
      // unknowns the rows do not touch keep unit basis vectors; the rest get an orthonormal
      // complement of the row space
      std::vector<int> touched;
      std::vector<int> untouched;
      for (int i = 0; i < b; ++i) (con.rows.col(i).isZero(0.0) ? untouched : touched).push_back(i);
      const auto r = static_cast<int>(con.rows.rows());
      const auto t = static_cast<int>(touched.size());
      if (t < r) throw InadmissibleState("rank-deficient constraint block " + std::to_string(blk));
      Eigen::MatrixXd rt(t, r);
      for (int i = 0; i < t; ++i) rt.row(i) = con.rows.col(touched[static_cast<std::size_t>(i)]).transpose();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(rt);
      const double scale = std::max(1.0, con.rows.norm());
      for (int i = 0; i < r; ++i)
        if (std::abs(qr.matrixQR()(i, i)) < 1e-12 * scale)
          throw InadmissibleState("rank-deficient constraint block " + std::to_string(blk));
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(t, t);
      basis = Eigen::MatrixXd::Zero(b, static_cast<Index>(untouched.size()) + t - r);
      Index col = 0;
      for (int i : untouched) basis(i, col++) = 1.0;
      for (int j = r; j < t; ++j, ++col)
        for (int i = 0; i < t; ++i) basis(touched[static_cast<std::size_t>(i)], col) = q(i, j);
    }
    offsets_[static_cast<std::size_t>(blk) + 1] = offsets_[static_cast<std::size_t>(blk)] + basis.cols();
  }
  factor_current_ = false;
  if (analyzed_) {
    for (Index w = 0; w < num_blocks_; ++w)
      if (pattern_counts_[static_cast<std::size_t>(w)] != block_basis_[static_cast<std::size_t>(w)].cols()) {
        // a stale factor of a different size cannot precondition the new system
        has_factor_ = false;
        break;
      }
  }
}

void BlockConstrainedSystem::set_factor_reuse(bool enabled, int max_pcg_iterations) {
  if (max_pcg_iterations < 1) throw DataError("max_pcg_iterations must be positive");
  reuse_ = enabled;
  max_pcg_iterations_ = max_pcg_iterations;
}

SparseMatrix BlockConstrainedSystem::basis() const {
  std::vector<Triplet> triplets;
  for (Index blk = 0; blk < num_blocks_; ++blk) {
    const auto& basis = block_basis_[static_cast<std::size_t>(blk)];
    for (Index j = 0; j < basis.cols(); ++j)
      for (Index i = 0; i < basis.rows(); ++i)
        triplets.emplace_back(static_cast<int>(blk * block_size_ + i), static_cast<int>(offsets_[static_cast<std::size_t>(blk)] + j),
                              basis(i, j));
  }
  SparseMatrix out(static_cast<int>(k_.rows()), static_cast<int>(reduced_size()));
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

void BlockConstrainedSystem::build_pattern() {
  const auto n = static_cast<int>(reduced_size());
  std::vector<int> outer(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> inner;
  for (Index w = 0; w < num_blocks_; ++w) {
    const Index nw = block_basis_[static_cast<std::size_t>(w)].cols();
    for (Index j = 0; j < nw; ++j) {
      const auto col = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(w)] + j);
      for (const auto& pair : lower_pairs_[static_cast<std::size_t>(w)]) {
        const Index v = pair.row_block;
        const Index nv = block_basis_[static_cast<std::size_t>(v)].cols();
        for (Index i = (v == w ? j : 0); i < nv; ++i)
          inner.push_back(static_cast<int>(offsets_[static_cast<std::size_t>(v)] + i));
      }
      outer[col + 1] = static_cast<int>(inner.size());
    }
  }
  std::vector<double> values(inner.size(), 0.0);
  reduced_ = Eigen::Map<const SparseMatrix>(n, n, static_cast<Index>(inner.size()), outer.data(), inner.data(), values.data());
  reduced_.makeCompressed();
  pattern_counts_.resize(static_cast<std::size_t>(num_blocks_));
  for (Index w = 0; w < num_blocks_; ++w) pattern_counts_[static_cast<std::size_t>(w)] = block_basis_[static_cast<std::size_t>(w)].cols();
  cholesky_.analyzePattern(reduced_);
  analyzed_ = true;
}

void BlockConstrainedSystem::factor(double scale) {
  if (static_cast<Index>(block_basis_.size()) != num_blocks_) throw DataError("block constrained system: constraints not set");
  bool same = analyzed_;
  for (Index w = 0; same && w < num_blocks_; ++w)
    same = pattern_counts_[static_cast<std::size_t>(w)] == block_basis_[static_cast<std::size_t>(w)].cols();
  if (!same) build_pattern();

  // values in the order of build_pattern
  double* values = reduced_.valuePtr();
  Index pos = 0;
  std::vector<Eigen::MatrixXd> products;
  for (Index w = 0; w < num_blocks_; ++w) {
    const auto& bw = block_basis_[static_cast<std::size_t>(w)];
    if (bw.cols() == 0) continue;
    const auto& pairs = lower_pairs_[static_cast<std::size_t>(w)];
    products.resize(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& bv = block_basis_[static_cast<std::size_t>(pairs[p].row_block)];
      products[p].noalias() = scale * bv.transpose().lazyProduct(pairs[p].k.lazyProduct(bw));
    }
    for (Index j = 0; j < bw.cols(); ++j)
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const Index v = pairs[p].row_block;
        for (Index i = (v == w ? j : 0); i < products[p].rows(); ++i) values[pos++] = products[p](i, j);
      }
  }
  cholesky_.factorize(reduced_);
  ++factorizations_;
  has_factor_ = false;
  factor_current_ = false;
  if (cholesky_.info() != Eigen::Success)
    throw InadmissibleState("reduced constrained system is not positive definite");
  scale_ = scale;
  has_factor_ = true;
  factor_current_ = true;
}

Eigen::VectorXd BlockConstrainedSystem::restrict_to_reduced(const Eigen::VectorXd& x) const {
  const int b = block_size_;
  Eigen::VectorXd u(reduced_size());
  for (Index blk = 0; blk < num_blocks_; ++blk) {
    const auto& basis = block_basis_[static_cast<std::size_t>(blk)];
    if (basis.cols() > 0)
      u.segment(offsets_[static_cast<std::size_t>(blk)], basis.cols()).noalias() = basis.transpose() * x.segment(blk * b, b);
  }
  return u;
}

Eigen::VectorXd BlockConstrainedSystem::expand(const Eigen::VectorXd& u) const {
  const int b = block_size_;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k_.rows());
  for (Index blk = 0; blk < num_blocks_; ++blk) {
    const auto& basis = block_basis_[static_cast<std::size_t>(blk)];
    if (basis.cols() > 0)
      x.segment(blk * b, b).noalias() = basis * u.segment(offsets_[static_cast<std::size_t>(blk)], basis.cols());
  }
  return x;
}

Eigen::VectorXd BlockConstrainedSystem::apply_reduced(const Eigen::VectorXd& u) const {
  const Eigen::VectorXd ku = k_ * expand(u);
  return scale_ * restrict_to_reduced(ku);
}

Eigen::VectorXd BlockConstrainedSystem::solve(const Eigen::VectorXd& rhs, SolveReport* report) {
  if (rhs.size() != k_.rows()) throw DataError("block constrained system: right-hand side has the wrong size");
  if (!has_factor_) throw DataError("block constrained system: no factorization available");
  SolveReport local;
  const Eigen::VectorXd reduced_rhs = restrict_to_reduced(rhs);
  const double norm_b = reduced_rhs.norm();
  if (norm_b == 0.0) {
    if (report) *report = local;
    return Eigen::VectorXd::Zero(rhs.size());
  }

  Eigen::VectorXd u;
  bool done = false;
  if (!factor_current_ && reuse_) {
    // conjugate gradients on the current reduced system, preconditioned by the stale factor
    constexpr double kTarget = 0.1 * kSolveTolerance;
    u = Eigen::VectorXd::Zero(reduced_rhs.size());
    Eigen::VectorXd r = reduced_rhs;
    Eigen::VectorXd z = cholesky_.solve(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 1; it <= max_pcg_iterations_; ++it) {
      const Eigen::VectorXd ap = apply_reduced(p);
      const double alpha = rz / p.dot(ap);
      u += alpha * p;
      r -= alpha * ap;
      local.pcg_iterations = it;
      if (r.norm() <= kTarget * norm_b) {
        done = true;
        break;
      }
      z = cholesky_.solve(r);
      const double rz_next = r.dot(z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
  }
  if (!done && !factor_current_) {
    factor(scale_);
    local.refactored = true;
  }
  if (!done) u = cholesky_.solve(reduced_rhs);

  local.relative_residual = (apply_reduced(u) - reduced_rhs).norm() / norm_b;
  if (report) *report = local;
  if (!(local.relative_residual <= kSolveTolerance))
    throw SolverFailure("constrained solve residual " + std::to_string(local.relative_residual) + " above tolerance");
  return expand(u);
}

double BlockConstrainedSystem::constraint_residual(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  const int b = block_size_;
  for (std::size_t blk = 0; blk < constraints_.size(); ++blk) {
    const auto seg = x.segment(static_cast<Index>(blk) * b, b);
    const auto& con = constraints_[blk];
    if (con.fixed) {
      worst = std::max(worst, seg.cwiseAbs().maxCoeff());
    } else if (con.rows.rows() > 0) {
      worst = std::max(worst, (con.rows * seg).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace bilayer
