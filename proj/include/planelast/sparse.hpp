// Assembly container and direct solver for the symmetric indefinite saddle
// systems produced by the other modules.  Duplicate triplets accumulate;
// pinned dofs are replaced by identity rows/columns with zero right-hand
// side; solves go through a sparse LU factorization and are verified by an
// explicit residual check.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <planelast/geometry.hpp>

namespace planelast {

struct SolveFailure : std::runtime_error {
  int pivot = -1;
  explicit SolveFailure(const std::string& msg, int pivot_index = -1)
      : std::runtime_error(msg), pivot(pivot_index) {}
};

class SparseSystem {
 public:
  explicit SparseSystem(int dim) : dim_(dim), rhs_(Eigen::VectorXd::Zero(dim)) {
    require(dim > 0, "SparseSystem: dimension must be positive");
  }

  int dim() const { return dim_; }

  void add(int i, int j, double value) {
    require(i >= 0 && i < dim_ && j >= 0 && j < dim_,
            "SparseSystem::add: index out of range (" + std::to_string(i) + "," +
                std::to_string(j) + ")");
    require(std::isfinite(value), "SparseSystem::add: non-finite entry at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
    triplets_.emplace_back(i, j, value);
  }

  void add_rhs(int i, double value) {
    require(i >= 0 && i < dim_, "SparseSystem::add_rhs: index out of range");
    require(std::isfinite(value), "SparseSystem::add_rhs: non-finite entry");
    rhs_[i] += value;
  }

  // Constrain dof i to zero: its row and column are cleared, a unit diagonal
  // entry is inserted, and the right-hand side entry is zeroed.
  void pin(int i) {
    require(i >= 0 && i < dim_, "SparseSystem::pin: index out of range");
    pinned_.push_back(i);
  }

  const Eigen::VectorXd& rhs() const { return rhs_; }

  Eigen::SparseMatrix<double> matrix() const {
    std::vector<char> is_pinned(dim_, 0);
    for (int i : pinned_) is_pinned[i] = 1;
    std::vector<Eigen::Triplet<double>> kept;
    kept.reserve(triplets_.size() + pinned_.size());
    for (const auto& t : triplets_)
      if (!is_pinned[t.row()] && !is_pinned[t.col()]) kept.push_back(t);
    for (int i : pinned_) kept.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> m(dim_, dim_);
    m.setFromTriplets(kept.begin(), kept.end());
    return m;
  }

  Eigen::VectorXd effective_rhs() const {
    Eigen::VectorXd b = rhs_;
    for (int i : pinned_) b[i] = 0.0;
    return b;
  }

 private:
  int dim_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::VectorXd rhs_;
  std::vector<int> pinned_;
};

inline Eigen::VectorXd solve(const SparseSystem& system, double residual_tol = 1e-10) {
  const Eigen::SparseMatrix<double> m = system.matrix();
  const Eigen::VectorXd b = system.effective_rhs();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) {
    // Eigen reports the offending column in its message for singular inputs.
    const std::string detail = lu.lastErrorMessage();
    int pivot = -1;
    for (std::size_t k = 0; k < detail.size(); ++k)
      if (std::isdigit(static_cast<unsigned char>(detail[k]))) {
        pivot = std::atoi(detail.c_str() + k);
        break;
      }
    throw SolveFailure("solve: factorization failed (" + detail + ")", pivot);
  }
  const Eigen::VectorXd x = lu.solve(b);
  const double scale = b.norm();
  const double residual = (m * x - b).norm();
  if (!(residual <= residual_tol * (scale > 0.0 ? scale : 1.0)))
    throw SolveFailure("solve: residual " + std::to_string(residual) +
                       " exceeds tolerance; system singular or ill-conditioned");
  return x;
}

}  // namespace planelast
