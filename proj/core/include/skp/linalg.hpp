#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace skp {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric matrix stored as compressed rows of its lower triangle (col <= row, columns sorted,
/// no explicit zeros except a zero diagonal, which is always stored).
class SparseSymmetric {
 public:
  SparseSymmetric() = default;

  /// Entries may be given in either triangle; (i, j) and (j, i) must not both be present.
  /// Exact zeros off the diagonal are dropped.
  static SparseSymmetric from_triplets(std::size_t order, std::span<const Triplet> entries);
  static SparseSymmetric from_dense(const Eigen::MatrixXd& dense, double drop_below = 0.0);
  static SparseSymmetric identity(std::size_t order);

  std::size_t order() const noexcept { return order_; }
  std::size_t nnz_lower() const noexcept { return values_.size(); }
  /// Entries of the full symmetric matrix.
  std::size_t nnz() const noexcept { return 2 * values_.size() - order_; }

  /// Value at (i, j) in either triangle; 0 when not stored.
  double at(std::size_t i, std::size_t j) const;

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;

  /// Full symmetric row structure (both triangles), for row-wise random access.
  struct FullRows {
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> cols;
    std::vector<double> values;
  };
  FullRows full_rows() const;

  friend bool operator==(const SparseSymmetric&, const SparseSymmetric&) = default;

 private:
  std::size_t order_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// Sparse Cholesky factorization P A P^T = L L^T with an approximate-minimum-degree ordering.
class SparseCholesky {
 public:
  enum class Ordering { amd, natural };

  /// Throws FactorizationError naming the failing pivot (an original row index) when A is not
  /// positive definite.
  explicit SparseCholesky(const SparseSymmetric& a, Ordering ordering = Ordering::amd);

  std::size_t order() const noexcept { return n_; }
  std::size_t nnz_factor() const noexcept { return values_.size(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// y = L^{-1} P rhs, so that rhs^T A^{-1} rhs = |y|^2.
  Eigen::VectorXd half_solve(const Eigen::VectorXd& rhs) const;
  double log_determinant() const;

  /// perm[k] = original index placed at position k.
  const std::vector<std::size_t>& permutation() const noexcept { return perm_; }
  /// Dense copy of L (permuted ordering).
  Eigen::MatrixXd factor_dense() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> perm_;
  // L stored by columns, diagonal first in every column.
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> rows_;
  std::vector<double> values_;
};

/// Dense Cholesky (Eigen LLT) that reports the failing pivot like SparseCholesky.
class DenseCholesky {
 public:
  explicit DenseCholesky(const Eigen::MatrixXd& a);

  std::size_t order() const noexcept { return static_cast<std::size_t>(llt_.rows()); }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd factor() const { return llt_.matrixL(); }
  double log_determinant() const;

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace skp
