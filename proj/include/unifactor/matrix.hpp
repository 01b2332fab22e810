#pragma once

// Dense symmetric matrices, a cyclic Jacobi eigensolver, Loewner-order
// predicates and covariance estimation.

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unifactor/error.hpp"

namespace unifactor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative PSD tolerance: min eigenvalue >= -tol * max(1, largest eigenvalue).
inline constexpr double kPsdTol = 1e-10;
/// Relative rank tolerance: |lambda| > tol * max(1, |lambda|max) counts.
inline constexpr double kRankTol = 1e-8;

/// Square matrix with exactly symmetric storage. Construction averages the
/// (i,j) and (j,i) entries, so a(i,j) == a(j,i) holds bit for bit.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const Matrix& m) {
    detail::require(m.rows() >= 1 && m.rows() == m.cols(), ErrorKind::kDimensionMismatch,
                    "symmetric matrix must be square with dimension >= 1");
    m_ = 0.5 * (m + m.transpose());
  }

  static SymmetricMatrix zero(Index p) { return SymmetricMatrix(Matrix::Zero(p, p)); }
  static SymmetricMatrix identity(Index p) { return SymmetricMatrix(Matrix::Identity(p, p)); }
  static SymmetricMatrix ones(Index p) { return SymmetricMatrix(Matrix::Ones(p, p)); }
  static SymmetricMatrix diagonal(const Vector& d) {
    return SymmetricMatrix(Matrix(d.asDiagonal()));
  }
  static SymmetricMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const auto p = static_cast<Index>(rows.size());
    Matrix m(p, p);
    Index i = 0;
    for (const auto& row : rows) {
      detail::require(static_cast<Index>(row.size()) == p, ErrorKind::kDimensionMismatch,
                      "from_rows: matrix must be square");
      Index j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return SymmetricMatrix(m);
  }
  /// A * A^T.
  static SymmetricMatrix outer(const Matrix& a) { return SymmetricMatrix(a * a.transpose()); }

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

  Vector diag() const { return m_.diagonal(); }
  SymmetricMatrix diagonal_part() const { return diagonal(m_.diagonal()); }
  double trace() const { return m_.trace(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  friend SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    check_same_dim(a, b);
    return SymmetricMatrix(a.m_ + b.m_);
  }
  friend SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    check_same_dim(a, b);
    return SymmetricMatrix(a.m_ - b.m_);
  }
  friend SymmetricMatrix operator-(const SymmetricMatrix& a) { return SymmetricMatrix(-a.m_); }
  friend SymmetricMatrix operator*(double s, const SymmetricMatrix& a) {
    return SymmetricMatrix(s * a.m_);
  }

 private:
  static void check_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    detail::require(a.dim() == b.dim(), ErrorKind::kDimensionMismatch,
                    "symmetric matrices differ in dimension");
  }

  Matrix m_;
};

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::kDimensionMismatch,
                  "max_abs_diff: shape mismatch");
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return max_abs_diff(a.matrix(), b.matrix());
}

/// Eigenvalues sorted descending; columns of `vectors` are the matching
/// orthonormal eigenvectors.
struct EigenSystem {
  Vector values;
  Matrix vectors;

  Index dim() const { return values.size(); }
  /// First q eigenvectors (p x q).
  Matrix leading_vectors(Index q) const { return vectors.leftCols(q); }
  /// R * diag(values) * R^T.
  Matrix reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
  }
};

struct JacobiOptions {
  int max_sweeps = 100;
  /// Converged when the off-diagonal Frobenius norm <= tol * ||A||_F.
  double tol = 1e-14;
};

/// Cyclic Jacobi eigendecomposition.
///
/// Output ordering is a stable descending sort of the converged diagonal, so
/// equal eigenvalues keep the column order the rotations produced (an
/// identity input yields identity vectors). Each eigenvector is signed so its
/// entry of largest magnitude (first one on ties) is nonnegative.
inline EigenSystem eigendecompose(const SymmetricMatrix& m, const JacobiOptions& options = {}) {
  const Index n = m.dim();
  Matrix a = m.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double threshold = options.tol * a.norm();

  bool converged = false;
  for (int sweep = 0;; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(2.0 * off) <= threshold) {
      converged = true;
      break;
    }
    if (sweep == options.max_sweeps) break;

    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    throw Error(ErrorKind::kIterationFailure,
                "Jacobi eigensolver did not converge in " + std::to_string(options.max_sweeps) +
                    " sweeps");
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenSystem out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Vector col = v.col(src);
    Index big = 0;
    for (Index i = 1; i < n; ++i)
      if (std::abs(col(i)) > std::abs(col(big))) big = i;
    if (col(big) < 0.0) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

inline Vector eigenvalues(const SymmetricMatrix& m) { return eigendecompose(m).values; }

inline bool is_psd_values(const Vector& values, double tol) {
  const double top = values.maxCoeff();
  return values.minCoeff() >= -tol * std::max(1.0, top);
}

inline bool is_psd(const SymmetricMatrix& m, double tol = kPsdTol) {
  detail::require(tol >= 0.0, ErrorKind::kInvalidArgument, "is_psd: tol must be >= 0");
  return is_psd_values(eigenvalues(m), tol);
}

/// a <= b in the Loewner order, i.e. b - a is PSD within tolerance.
inline bool loewner_leq(const SymmetricMatrix& a, const SymmetricMatrix& b,
                        double tol = kPsdTol) {
  detail::require(a.dim() == b.dim(), ErrorKind::kDimensionMismatch,
                  "loewner_leq: dimension mismatch");
  return is_psd(b - a, tol);
}

inline int numeric_rank_values(const Vector& values, double tol) {
  const double top = values.cwiseAbs().maxCoeff();
  const double cut = tol * std::max(1.0, top);
  int rank = 0;
  for (Index i = 0; i < values.size(); ++i)
    if (std::abs(values(i)) > cut) ++rank;
  return rank;
}

inline int numeric_rank(const SymmetricMatrix& m, double tol = kRankTol) {
  return numeric_rank_values(eigenvalues(m), tol);
}

/// n observations of p variables, one row per observation.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix rows) : rows_(std::move(rows)) {
    detail::require(rows_.rows() >= 2, ErrorKind::kInvalidArgument,
                    "data matrix needs at least 2 observations");
    detail::require(rows_.cols() >= 1, ErrorKind::kInvalidArgument,
                    "data matrix needs at least 1 variable");
  }

  Index n() const { return rows_.rows(); }
  Index p() const { return rows_.cols(); }
  const Matrix& rows() const { return rows_; }

 private:
  Matrix rows_;
};

enum class Estimator { kMl, kSample };

/// Mean-centred cross products divided by n (ml) or n - 1 (sample).
inline SymmetricMatrix covariance_from_data(const DataMatrix& d, Estimator estimator) {
  const Vector mean = d.rows().colwise().mean();
  const Matrix centred = d.rows().rowwise() - mean.transpose();
  const double denom = estimator == Estimator::kMl ? static_cast<double>(d.n())
                                                   : static_cast<double>(d.n() - 1);
  const Matrix cov = (centred.transpose() * centred) / denom;
  for (Index j = 0; j < cov.cols(); ++j) {
    if (!std::isfinite(cov(j, j))) {
      throw Error(ErrorKind::kDegenerateData,
                  "variance of column " + std::to_string(j) + " is not finite");
    }
  }
  return SymmetricMatrix(cov);
}

/// (lambda_1 + ... + lambda_q) / (lambda_1 + ... + lambda_p).
inline double cumulative_proportion(const EigenSystem& e, Index q, double tol = kPsdTol) {
  const Index p = e.dim();
  detail::require(q >= 1 && q <= p, ErrorKind::kInvalidArgument,
                  "cumulative_proportion: q must lie in [1, p]");
  const double top = std::max(1.0, e.values.maxCoeff());
  if (e.values.minCoeff() < -tol * top) {
    throw Error(ErrorKind::kNegativeSpectrum, "cumulative_proportion: negative eigenvalue");
  }
  const Vector clamped = e.values.cwiseMax(0.0);
  const double total = clamped.sum();
  detail::require(total > 0.0, ErrorKind::kNegativeSpectrum,
                  "cumulative_proportion: spectrum is identically zero");
  return std::clamp(clamped.head(q).sum() / total, 0.0, 1.0);
}

namespace detail {

inline void require_full_column_rank(const Matrix& m, double tol, const char* what) {
  detail::require(m.cols() >= 1 && m.rows() >= m.cols(), ErrorKind::kRankDeficient, what);
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > tol * std::max(1.0, sv(0)))) {
    throw Error(ErrorKind::kRankDeficient, what);
  }
}

/// Orthonormal basis of span(m) for a full-column-rank m.
inline Matrix orthonormal_basis(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace detail

/// True iff every candidate column lies in span(basis): the projection
/// residual of each column is at most tol times that column's norm.
inline bool subspace_contains(const Matrix& basis, const Matrix& candidate, double tol = 1e-8) {
  detail::require(basis.rows() == candidate.rows(), ErrorKind::kDimensionMismatch,
                  "subspace_contains: row counts differ");
  detail::require_full_column_rank(basis, tol, "subspace_contains: basis is rank deficient");
  detail::require_full_column_rank(candidate, tol,
                                   "subspace_contains: candidate is rank deficient");
  const Matrix q = detail::orthonormal_basis(basis);
  const Matrix residual = candidate - q * (q.transpose() * candidate);
  for (Index j = 0; j < candidate.cols(); ++j) {
    if (residual.col(j).norm() > tol * candidate.col(j).norm()) return false;
  }
  return true;
}

/// Largest principal angle (radians) between span(a) and span(b).
inline double principal_angle(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::kDimensionMismatch,
                  "principal_angle: shape mismatch");
  const Matrix qa = detail::orthonormal_basis(a);
  const Matrix qb = detail::orthonormal_basis(b);
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  const double smallest_cos = svd.singularValues().minCoeff();
  // asin of the residual norm is better conditioned than acos near zero.
  const Matrix residual = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Matrix> rsvd(residual);
  const double largest_sin = std::min(1.0, rsvd.singularValues().maxCoeff());
  return smallest_cos > 0.7 ? std::asin(largest_sin) : std::acos(std::min(1.0, smallest_cos));
}

/// A fitted split Sigma ~ T + V with T = A A^T of rank q.
struct Decomposition {
  std::optional<Matrix> loading;
  SymmetricMatrix low_rank;
  SymmetricMatrix residual;
  int rank = 0;
  std::vector<std::string> warnings;
};

}  // namespace unifactor
