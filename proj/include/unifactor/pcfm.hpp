#pragma once

// Principal component factor model: T = R1 diag(gamma) R1^T where R1 holds
// the top-q eigenvectors of T + V itself. Fitted by alternating between the
// eigenbasis of the current T + V and a (p+q)-dimensional nonnegative fit
// of (gamma, v).

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "unifactor/direct_search.hpp"
#include "unifactor/fit_report.hpp"
#include "unifactor/objectives.hpp"

namespace unifactor {

/// minimise z^T H z - 2 b^T z subject to z >= 0, with z = (gamma, v).
struct QpProblem {
  Matrix h;
  Vector b;
  Index q = 0;

  double objective(const Vector& z) const { return z.dot(h * z) - 2.0 * b.dot(z); }
};

inline constexpr double kOrthonormalTol = 1e-8;

/// For orthonormal R1 the least-squares loss satisfies
///   ||Sigma - R1 diag(gamma) R1^T - diag(v)||_F^2 = z^T H z - 2 b^T z + ||Sigma||_F^2
/// with H = [[I_q, (R1.R1)^T], [R1.R1, I_p]] ('.' elementwise) and
/// b = (r_k^T Sigma r_k for each k, diag Sigma).
inline QpProblem build_qp(const Matrix& r1, const SymmetricMatrix& sigma) {
  const Index p = sigma.dim();
  const Index q = r1.cols();
  detail::require(r1.rows() == p && q >= 1, ErrorKind::kDimensionMismatch,
                  "build_qp: basis must be p x q");
  const Matrix gram = r1.transpose() * r1 - Matrix::Identity(q, q);
  if (!(gram.cwiseAbs().maxCoeff() <= kOrthonormalTol)) {
    throw Error(ErrorKind::kNonOrthonormal, "build_qp: basis columns are not orthonormal");
  }
  const Matrix sq = r1.cwiseProduct(r1);
  QpProblem qp;
  qp.q = q;
  qp.h = Matrix::Zero(q + p, q + p);
  qp.h.topLeftCorner(q, q).setIdentity();
  qp.h.bottomLeftCorner(p, q) = sq;
  qp.h.topRightCorner(q, p) = sq.transpose();
  qp.h.bottomRightCorner(p, p).setIdentity();
  qp.b.resize(q + p);
  qp.b.head(q) = (r1.transpose() * sigma.matrix() * r1).diagonal();
  qp.b.tail(p) = sigma.diag();
  return qp;
}

struct NnqpOptions {
  double tol = 1e-12;
  std::size_t max_iters = 1000000;
};

struct NnqpResult {
  Vector z;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected-gradient stationarity with gradient 2 (H z - b).
inline bool nnqp_stationary(const QpProblem& qp, const Vector& z, double tol) {
  const Vector grad = 2.0 * (qp.h * z - qp.b);
  const double scale = tol * (1.0 + qp.b.norm());
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) > 0.0 ? std::abs(grad(i)) > scale : grad(i) < -scale) return false;
  }
  return true;
}

/// Projected gradient with fixed step 1/L, L the largest eigenvalue of H.
inline NnqpResult solve_nnqp(const QpProblem& qp, const NnqpOptions& options = {},
                             const std::optional<Vector>& start = std::nullopt) {
  const Index n = qp.b.size();
  detail::require(qp.h.rows() == n && qp.h.cols() == n, ErrorKind::kDimensionMismatch,
                  "solve_nnqp: H and b disagree in size");
  const Vector spectrum = eigenvalues(SymmetricMatrix(qp.h));
  detail::require(is_psd_values(spectrum, kPsdTol), ErrorKind::kNegativeSpectrum,
                  "solve_nnqp: H is not PSD");

  NnqpResult out;
  out.z = start ? Vector(start->cwiseMax(0.0)) : Vector(Vector::Zero(n));
  detail::require(out.z.size() == n, ErrorKind::kDimensionMismatch,
                  "solve_nnqp: start has the wrong length");
  const double lipschitz = spectrum(0);
  if (lipschitz <= 0.0) {
    out.z.setZero();
    out.converged = true;
  } else {
    for (; out.iterations < options.max_iters; ++out.iterations) {
      if (nnqp_stationary(qp, out.z, options.tol)) {
        out.converged = true;
        break;
      }
      out.z = (out.z - (qp.h * out.z - qp.b) / lipschitz).cwiseMax(0.0);
    }
    if (!out.converged) out.converged = nnqp_stationary(qp, out.z, options.tol);
  }
  out.objective = qp.objective(out.z);
  return out;
}

enum class PcfmObjective { kLs, kMl };

struct PcfmOptions {
  /// Outer loop stops once the objective changes by less than this.
  double tol = 1e-9;
  std::size_t max_iters = 500;
  NnqpOptions qp;
  SearchOptions search;
};

struct PcfmFit {
  /// Factor variances, sorted descending.
  Vector gamma;
  Vector v;
  /// p x q eigenvectors of T + V used to build T, ordered to match gamma.
  Matrix basis;
  /// basis * diag(gamma)^(1/2).
  Matrix loading;
  double objective = 0.0;
  /// Largest principal angle between basis and the top-q eigenvectors of
  /// the fitted T + V.
  double self_consistency_angle = 0.0;
  FitReport report;

  SymmetricMatrix low_rank() const { return SymmetricMatrix::outer(loading); }
  SymmetricMatrix residual() const { return SymmetricMatrix::diagonal(v); }
};

namespace detail {

inline SymmetricMatrix pcfm_covariance(const Matrix& r1, const Vector& z) {
  const Index q = r1.cols();
  return SymmetricMatrix(r1 * z.head(q).asDiagonal() * r1.transpose() +
                         Matrix(z.tail(r1.rows()).asDiagonal()));
}

inline Matrix leading_basis(const SymmetricMatrix& c, int q) {
  const EigenSystem e = eigendecompose(c);
  const double cut = kRankTol * std::max(1.0, std::abs(e.values(0)));
  if (!(e.values(q - 1) > cut)) {
    throw Error(ErrorKind::kDegenerateBasis, "pcfm: lambda_q of T + V is within the rank tolerance");
  }
  return e.leading_vectors(q);
}

inline bool pcfm_ml_feasible(const Matrix& r1, const SymmetricMatrix& sigma, const Vector& z) {
  if (z.minCoeff() < 0.0) return false;
  const SymmetricMatrix c = pcfm_covariance(r1, z);
  return try_neg_loglik(c, SymmetricMatrix::zero(c.dim()), sigma).has_value();
}

/// Bounded direct search of the negative log-likelihood over z = (gamma, v).
inline SearchResult pcfm_ml_step(const Matrix& r1, const SymmetricMatrix& sigma, const Vector& start,
                                 const SearchOptions& options) {
  SearchProblem problem;
  problem.initial = start;
  problem.objective = [&](std::span<const double> x) {
    const Vector z = Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size()));
    const SymmetricMatrix c = pcfm_covariance(r1, z);
    return try_neg_loglik(c, SymmetricMatrix::zero(c.dim()), sigma)
        .value_or(std::numeric_limits<double>::infinity());
  };
  problem.feasible = [&](std::span<const double> x) {
    return pcfm_ml_feasible(r1, sigma, Eigen::Map<const Vector>(x.data(), static_cast<Index>(x.size())));
  };
  problem.step0 = options.resolve_step0(sigma);
  problem.eps = options.eps;
  problem.max_evaluations = options.max_evaluations;
  return unidirectional_search(problem);
}

}  // namespace detail

/// Alternate R1 <- top-q eigenvectors of T + V (starting from T + V = Sigma)
/// with the inner fit of (gamma, v) for that basis: the QP for least
/// squares, a bounded direct search of the likelihood for ml. The ml loop
/// starts from the converged least-squares fit.
inline PcfmFit fit_pcfm(const SymmetricMatrix& sigma, int q, PcfmObjective objective,
                        const PcfmOptions& options = {}) {
  const Index p = sigma.dim();
  detail::require(q >= 1 && q < p, ErrorKind::kInvalidArgument, "fit_pcfm: need 1 <= q < p");
  detail::require(options.tol > 0.0 && options.max_iters >= 1, ErrorKind::kInvalidArgument,
                  "fit_pcfm: need tol > 0 and max_iters >= 1");
  if (objective == PcfmObjective::kMl) {
    const Vector spectrum = eigenvalues(sigma);
    detail::require(spectrum(p - 1) > kPdTol * std::max(1.0, spectrum(0)),
                    ErrorKind::kSingularModel, "fit_pcfm: sigma must be positive definite");
  }
  const double sigma_sq = frobenius_sq(sigma);

  FitReport report;
  report.final_tolerance = options.tol;
  report.stop_reason = "max_iters";
  SymmetricMatrix c = sigma;
  Matrix r1;
  Vector z;
  std::optional<PcfmFit> ls_fit;
  if (objective == PcfmObjective::kMl) {
    ls_fit = fit_pcfm(sigma, q, PcfmObjective::kLs, options);
    c = ls_fit->low_rank() + ls_fit->residual();
  }
  double value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    r1 = detail::leading_basis(c, q);
    const QpProblem qp = build_qp(r1, sigma);
    const NnqpResult ls = solve_nnqp(qp, options.qp, z.size() ? std::optional<Vector>(z) : std::nullopt);
    if (!ls.converged) report.warnings.push_back("inner QP hit its iteration budget");
    double next = ls.objective + sigma_sq;
    Vector next_z = ls.z;
    if (objective == PcfmObjective::kMl) {
      Vector start = ls.z;
      if (z.size()) {
        start = z;
      } else {
        start.head(q) = (r1.transpose() * ls_fit->low_rank().matrix() * r1).diagonal();
        start.tail(p) = ls_fit->v;
      }
      if (!detail::pcfm_ml_feasible(r1, sigma, start)) start = ls.z;
      if (!detail::pcfm_ml_feasible(r1, sigma, start)) {
        start.head(q) = qp.b.head(q);
        start.tail(p) = sigma.diag();
      }
      const SearchResult sr = detail::pcfm_ml_step(r1, sigma, start, options.search);
      report.evaluations += sr.trace.evaluations;
      if (sr.budget_exhausted) report.warnings.push_back("inner search hit its evaluation budget");
      next = sr.value;
      next_z = sr.solution;
    }
    z = next_z;
    c = detail::pcfm_covariance(r1, z);
    report.objective_trace.push_back(next);
    report.iterations = k;
    const double change = std::abs(value - next);
    value = next;
    if (change < options.tol) {
      report.stop_reason = "tolerance";
      report.converged = true;
      break;
    }
  }

  PcfmFit fit;
  fit.objective = value;
  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return z(a) > z(b); });
  fit.gamma.resize(q);
  fit.basis.resize(p, q);
  for (Index j = 0; j < q; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    fit.gamma(j) = z(src);
    fit.basis.col(j) = r1.col(src);
  }
  fit.v = z.tail(p);
  fit.loading = fit.basis * fit.gamma.cwiseSqrt().asDiagonal();
  const EigenSystem final_eigen = eigendecompose(c);
  fit.self_consistency_angle = principal_angle(fit.basis, final_eigen.leading_vectors(q));
  fit.report = std::move(report);
  return fit;
}

/// Smallest i in [q, p] with span(A) inside the span of the first i
/// eigenvectors of sigma.
inline int principal_component_index(const Matrix& a, const SymmetricMatrix& sigma,
                                     double tol = 1e-8) {
  const Index p = sigma.dim();
  detail::require(a.rows() == p, ErrorKind::kDimensionMismatch,
                  "principal_component_index: loading rows differ from sigma dimension");
  detail::require_full_column_rank(a, tol, "principal_component_index: loading is rank deficient");
  const EigenSystem e = eigendecompose(sigma);
  for (Index i = a.cols(); i < p; ++i) {
    if (subspace_contains(e.leading_vectors(i), a, tol)) return static_cast<int>(i);
  }
  return static_cast<int>(p);
}

}  // namespace unifactor
