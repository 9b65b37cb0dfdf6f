#include "skp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

#include "skp/error.hpp"

namespace skp {

SparseSymmetric SparseSymmetric::from_triplets(std::size_t order, std::span<const Triplet> entries) {
  std::vector<Triplet> lower;
  lower.reserve(entries.size() + order);
  for (const Triplet& t : entries) {
    if (t.row >= order || t.col >= order) throw InvalidArgument("triplet index out of range");
    if (t.row != t.col && t.value == 0.0) continue;
    lower.push_back(t.row >= t.col ? t : Triplet{t.col, t.row, t.value});
  }
  for (std::size_t i = 0; i < order; ++i) lower.push_back({i, i, 0.0});
  // Stable sort keeps a given diagonal ahead of the padding zero inserted above.
  std::stable_sort(lower.begin(), lower.end(),
                   [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });

  SparseSymmetric m;
  m.order_ = order;
  m.row_ptr_.assign(order + 1, 0);
  for (std::size_t p = 0; p < lower.size(); ++p) {
    const Triplet& t = lower[p];
    const bool repeated = p > 0 && lower[p - 1].row == t.row && lower[p - 1].col == t.col;
    if (repeated) {
      if (t.row == t.col) continue;  // padding zero behind a real diagonal
      throw InvalidArgument("duplicate symmetric entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) + ")");
    }
    m.cols_.push_back(t.col);
    m.values_.push_back(t.value);
    ++m.row_ptr_[t.row + 1];
  }
  std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
  return m;
}

SparseSymmetric SparseSymmetric::from_dense(const Eigen::MatrixXd& dense, double drop_below) {
  if (dense.rows() != dense.cols()) throw InvalidArgument("matrix must be square");
  std::vector<Triplet> t;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = dense(i, j);
      if (i == j || std::abs(v) > drop_below) t.push_back({std::size_t(i), std::size_t(j), v});
    }
  }
  return from_triplets(static_cast<std::size_t>(dense.rows()), t);
}

SparseSymmetric SparseSymmetric::identity(std::size_t order) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < order; ++i) t.push_back({i, i, 1.0});
  return from_triplets(order, t);
}

double SparseSymmetric::at(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  const auto cols = row_cols(i);
  const auto it = std::lower_bound(cols.begin(), cols.end(), j);
  if (it == cols.end() || *it != j) return 0.0;
  return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
}

Eigen::VectorXd SparseSymmetric::multiply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != order_) throw InvalidArgument("dimension mismatch in multiply");
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t j = cols_[p];
      y[i] += values_[p] * x[j];
      if (j != i) y[j] += values_[p] * x[i];
    }
  }
  return y;
}

Eigen::MatrixXd SparseSymmetric::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(order_, order_);
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      d(i, cols_[p]) = values_[p];
      d(cols_[p], i) = values_[p];
    }
  }
  return d;
}

SparseSymmetric::FullRows SparseSymmetric::full_rows() const {
  FullRows f;
  std::vector<std::size_t> count(order_, 0);
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      ++count[i];
      if (cols_[p] != i) ++count[cols_[p]];
    }
  }
  f.row_ptr.assign(order_ + 1, 0);
  for (std::size_t i = 0; i < order_; ++i) f.row_ptr[i + 1] = f.row_ptr[i] + count[i];
  f.cols.resize(f.row_ptr.back());
  f.values.resize(f.row_ptr.back());
  std::vector<std::size_t> next(f.row_ptr.begin(), f.row_ptr.end() - 1);
  // Row i receives its lower part (cols <= i) first and entries from later rows afterwards, both
  // ascending, so every full row comes out sorted.
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
      const std::size_t j = cols_[p];
      f.cols[next[i]] = j;
      f.values[next[i]++] = values_[p];
      if (j != i) {
        f.cols[next[j]] = i;
        f.values[next[j]++] = values_[p];
      }
    }
  }
  return f;
}

namespace {

std::vector<std::size_t> amd_permutation(const SparseSymmetric& a) {
  const auto n = static_cast<Eigen::Index>(a.order());
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(a.nnz());
  for (std::size_t i = 0; i < a.order(); ++i) {
    for (std::size_t j : a.row_cols(i)) {
      t.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
      if (i != j) t.emplace_back(static_cast<int>(j), static_cast<int>(i), 1.0);
    }
  }
  Eigen::SparseMatrix<double, Eigen::ColMajor, int> pattern(n, n);
  pattern.setFromTriplets(t.begin(), t.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
  Eigen::AMDOrdering<int> amd;
  amd(pattern, pinv);
  std::vector<std::size_t> perm(a.order());
  for (Eigen::Index k = 0; k < n; ++k) perm[k] = static_cast<std::size_t>(pinv.indices()[k]);
  return perm;
}

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

}  // namespace

SparseCholesky::SparseCholesky(const SparseSymmetric& a, Ordering ordering) : n_(a.order()) {
  if (ordering == Ordering::amd && n_ > 1) {
    perm_ = amd_permutation(a);
  } else {
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  }
  std::vector<std::size_t> inv(n_);
  for (std::size_t k = 0; k < n_; ++k) inv[perm_[k]] = k;

  // Lower rows of C = P A P^T: row k holds C(k, j) for j <= k.
  const auto full = a.full_rows();
  std::vector<std::size_t> c_ptr(n_ + 1, 0);
  std::vector<std::size_t> c_col;
  std::vector<double> c_val;
  c_col.reserve(a.nnz_lower());
  c_val.reserve(a.nnz_lower());
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t o = perm_[k];
    for (std::size_t p = full.row_ptr[o]; p < full.row_ptr[o + 1]; ++p) {
      const std::size_t j = inv[full.cols[p]];
      if (j <= k) {
        c_col.push_back(j);
        c_val.push_back(full.values[p]);
      }
    }
    c_ptr[k + 1] = c_col.size();
  }

  // Elimination tree.
  std::vector<std::size_t> parent(n_, kNone), ancestor(n_, kNone);
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t p = c_ptr[k]; p < c_ptr[k + 1]; ++p) {
      for (std::size_t i = c_col[p]; i != kNone && i < k;) {
        const std::size_t next = ancestor[i];
        ancestor[i] = k;
        if (next == kNone) parent[i] = k;
        i = next;
      }
    }
  }

  // Row pattern of L(k, :) in topological order; returns the start offset in `stack`.
  std::vector<std::size_t> mark(n_, kNone), stack(n_), path(n_);
  auto ereach = [&](std::size_t k) {
    std::size_t top = n_;
    mark[k] = k;
    for (std::size_t p = c_ptr[k]; p < c_ptr[k + 1]; ++p) {
      std::size_t i = c_col[p];
      if (i >= k) continue;
      std::size_t len = 0;
      for (; mark[i] != k; i = parent[i]) {
        path[len++] = i;
        mark[i] = k;
      }
      while (len > 0) stack[--top] = path[--len];
    }
    return top;
  };

  std::vector<std::size_t> counts(n_, 1);
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t top = ereach(k); top < n_; ++top) ++counts[stack[top]];
  }
  col_ptr_.assign(n_ + 1, 0);
  for (std::size_t k = 0; k < n_; ++k) col_ptr_[k + 1] = col_ptr_[k] + counts[k];
  rows_.assign(col_ptr_.back(), 0);
  values_.assign(col_ptr_.back(), 0.0);

  std::fill(mark.begin(), mark.end(), kNone);
  std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
  std::vector<double> x(n_, 0.0);
  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t top = ereach(k);
    x[k] = 0.0;
    for (std::size_t p = c_ptr[k]; p < c_ptr[k + 1]; ++p) x[c_col[p]] += c_val[p];
    double d = x[k];
    x[k] = 0.0;
    for (; top < n_; ++top) {
      const std::size_t i = stack[top];
      const double lki = x[i] / values_[col_ptr_[i]];
      x[i] = 0.0;
      for (std::size_t p = col_ptr_[i] + 1; p < fill[i]; ++p) x[rows_[p]] -= values_[p] * lki;
      d -= lki * lki;
      const std::size_t p = fill[i]++;
      rows_[p] = k;
      values_[p] = lki;
    }
    if (!(d > 0.0) || !std::isfinite(d)) throw FactorizationError("matrix is not positive definite", perm_[k]);
    const std::size_t p = fill[k]++;
    rows_[p] = k;
    values_[p] = std::sqrt(d);
  }
}

Eigen::VectorXd SparseCholesky::half_solve(const Eigen::VectorXd& rhs) const {
  if (static_cast<std::size_t>(rhs.size()) != n_) throw InvalidArgument("dimension mismatch in solve");
  Eigen::VectorXd y(n_);
  for (std::size_t k = 0; k < n_; ++k) y[k] = rhs[perm_[k]];
  for (std::size_t j = 0; j < n_; ++j) {
    y[j] /= values_[col_ptr_[j]];
    const double yj = y[j];
    for (std::size_t p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) y[rows_[p]] -= values_[p] * yj;
  }
  return y;
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = half_solve(rhs);
  for (std::size_t j = n_; j-- > 0;) {
    double s = y[j];
    for (std::size_t p = col_ptr_[j] + 1; p < col_ptr_[j + 1]; ++p) s -= values_[p] * y[rows_[p]];
    y[j] = s / values_[col_ptr_[j]];
  }
  Eigen::VectorXd out(n_);
  for (std::size_t k = 0; k < n_; ++k) out[perm_[k]] = y[k];
  return out;
}

double SparseCholesky::log_determinant() const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += std::log(values_[col_ptr_[j]]);
  return 2.0 * s;
}

Eigen::MatrixXd SparseCholesky::factor_dense() const {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t j = 0; j < n_; ++j) {
    for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) l(rows_[p], j) = values_[p];
  }
  return l;
}

DenseCholesky::DenseCholesky(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InvalidArgument("matrix must be square");
  llt_.compute(a);
  if (llt_.info() == Eigen::Success) return;
  // Locate the first failing pivot with an unblocked pass.
  Eigen::MatrixXd l = a;
  for (Eigen::Index k = 0; k < l.rows(); ++k) {
    double d = l(k, k) - l.row(k).head(k).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) throw FactorizationError("matrix is not positive definite", std::size_t(k));
    l(k, k) = std::sqrt(d);
    for (Eigen::Index i = k + 1; i < l.rows(); ++i) {
      l(i, k) = (l(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / l(k, k);
    }
  }
  throw FactorizationError("matrix is not positive definite", std::size_t(l.rows() - 1));
}

double DenseCholesky::log_determinant() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

}  // namespace skp
