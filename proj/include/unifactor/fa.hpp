#pragma once

// Factor analysis: least squares and penalized least squares by coordinate
// descent over (T, V), maximum likelihood by direct search over (A, v).

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unifactor/direct_search.hpp"
#include "unifactor/fit_report.hpp"
#include "unifactor/format.hpp"
#include "unifactor/objectives.hpp"
#include "unifactor/pca.hpp"

namespace unifactor {

struct FaFitConfig {
  int q = 1;
  double lambda = 0.0;
  /// Stop once the Frobenius residual drops by less than this.
  double eps = 1e-10;
  std::size_t max_iters = 10000;
  /// Initial diagonal V; zero when unset.
  std::optional<SymmetricMatrix> v0;
  /// Also stop (returning the previous iterate) when a new V fails V <= Sigma.
  bool stop_on_loewner = false;

  void validate(const SymmetricMatrix& sigma) const {
    const Index p = sigma.dim();
    detail::require(q >= 1 && q < p, ErrorKind::kInvalidArgument, "fa: need 1 <= q < p");
    detail::require(lambda >= 0.0, ErrorKind::kInvalidArgument, "fa: lambda must be >= 0");
    detail::require(eps > 0.0, ErrorKind::kInvalidArgument, "fa: eps must be > 0");
    detail::require(max_iters >= 1, ErrorKind::kInvalidArgument, "fa: max_iters must be >= 1");
    if (v0) {
      detail::require(v0->dim() == p, ErrorKind::kDimensionMismatch, "fa: v0 dimension differs");
      const Matrix off = v0->matrix() - Matrix(v0->diag().asDiagonal());
      detail::require(off.cwiseAbs().maxCoeff() == 0.0, ErrorKind::kInvalidArgument,
                      "fa: v0 must be diagonal");
      detail::require(v0->diag().minCoeff() >= 0.0, ErrorKind::kInvalidArgument,
                      "fa: v0 must be PSD");
      detail::require(loewner_leq(*v0, sigma), ErrorKind::kInvalidArgument,
                      "fa: v0 must satisfy v0 <= sigma");
    }
  }
};

struct FaFit {
  Decomposition decomposition;
  FitReport report;
};

/// Called after every coordinate-descent iteration with the V it started
/// from and the (T, V) it produced.
using CoordinateDescentObserver = std::function<void(
    std::size_t iteration, const SymmetricMatrix& v_before, const SymmetricMatrix& t,
    const SymmetricMatrix& v_after)>;

namespace detail {

/// Top-q truncation of a symmetric matrix with negative eigenvalues
/// clamped to zero; returns the loading.
inline Matrix truncate_to_loading(const SymmetricMatrix& m, int q) {
  return truncated_loading(eigendecompose(m), q);
}

inline SymmetricMatrix shrunken_diagonal(const SymmetricMatrix& s, double lambda) {
  return SymmetricMatrix::diagonal(s.diag().cwiseMax(0.0) / (1.0 + lambda));
}

inline Decomposition make_decomposition(Matrix loading, const SymmetricMatrix& v, int q) {
  SymmetricMatrix t = SymmetricMatrix::outer(loading);
  const int rank = numeric_rank(t);
  Decomposition d{std::move(loading), t, v, rank, {}};
  if (rank < q) d.warnings.push_back("fitted T has rank " + std::to_string(rank) + " < q");
  return d;
}

}  // namespace detail

/// Coordinate descent on ||Sigma - T - V||_F^2 + lambda ||V||_F^2: T is the
/// best rank-q approximation of Sigma - V, then V = diag(Sigma - T)_+ / (1 + lambda).
inline FaFit coordinate_descent(const SymmetricMatrix& sigma, const FaFitConfig& config,
                                const CoordinateDescentObserver& observer = {}) {
  config.validate(sigma);
  const Index p = sigma.dim();
  SymmetricMatrix v = config.v0 ? *config.v0 : SymmetricMatrix::zero(p);
  Matrix loading = detail::truncate_to_loading(sigma - v, config.q);
  SymmetricMatrix t = SymmetricMatrix::outer(loading);

  FitReport report;
  report.final_tolerance = config.eps;
  report.stop_reason = "max_iters";
  report.objective_trace.push_back(eval_pls(t, v, sigma, config.lambda));
  double previous = (sigma - t - v).matrix().norm();

  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    Matrix next_loading = detail::truncate_to_loading(sigma - v, config.q);
    SymmetricMatrix next_t = SymmetricMatrix::outer(next_loading);
    SymmetricMatrix next_v = detail::shrunken_diagonal(sigma - next_t, config.lambda);
    if (observer) observer(k, v, next_t, next_v);
    if (config.stop_on_loewner && !loewner_leq(next_v, sigma)) {
      report.stop_reason = "loewner";
      report.converged = true;
      report.warnings.push_back("V <= Sigma failed; returning the previous iterate");
      break;
    }
    const double current = (sigma - next_t - next_v).matrix().norm();
    loading = std::move(next_loading);
    t = next_t;
    v = next_v;
    report.iterations = k;
    report.objective_trace.push_back(eval_pls(t, v, sigma, config.lambda));
    if (previous - current < config.eps) {
      report.stop_reason = "tolerance";
      report.converged = true;
      break;
    }
    previous = current;
  }

  FaFit fit{detail::make_decomposition(std::move(loading), v, config.q), std::move(report)};
  for (auto& w : fit.decomposition.warnings) fit.report.warnings.push_back(w);
  return fit;
}

inline FaFit fit_fa_ls(const SymmetricMatrix& sigma, FaFitConfig config,
                       const CoordinateDescentObserver& observer = {}) {
  detail::require(config.lambda == 0.0, ErrorKind::kInvalidArgument,
                  "fit_fa_ls: lambda must be 0 (use fit_fa_pls)");
  return coordinate_descent(sigma, config, observer);
}

inline FaFit fit_fa_pls(const SymmetricMatrix& sigma, FaFitConfig config,
                        const CoordinateDescentObserver& observer = {}) {
  detail::require(config.lambda > 0.0, ErrorKind::kInvalidArgument,
                  "fit_fa_pls: lambda must be > 0 (use fit_fa_ls)");
  return coordinate_descent(sigma, config, observer);
}

struct MlFit {
  Decomposition decomposition;
  FitReport report;
  double neg_loglik = 0.0;
};

/// Maximum likelihood: minimise l(A A^T, diag(v)) over (A row-major, v) by
/// unidirectional search subject to v >= 0 and A A^T + diag(v) positive
/// definite. Starts from the PCA loading and v = diag(Sigma - T)_+.
inline MlFit fit_fa_ml(const SymmetricMatrix& sigma, int q, const SearchOptions& options = {}) {
  const Index p = sigma.dim();
  detail::require(q >= 1 && q < p, ErrorKind::kInvalidArgument, "fit_fa_ml: need 1 <= q < p");
  const Vector spectrum = eigenvalues(sigma);
  detail::require(spectrum(p - 1) > kPdTol * std::max(1.0, spectrum(0)), ErrorKind::kSingularModel,
                  "fit_fa_ml: sigma must be positive definite");

  const Decomposition pca = solve_pca(sigma, q);
  const Matrix& a0 = *pca.loading;
  Vector v0 = pca.residual.diag().cwiseMax(0.0);
  if (!try_neg_loglik(pca.low_rank, SymmetricMatrix::diagonal(v0), sigma)) v0 = sigma.diag();
  if (!try_neg_loglik(pca.low_rank, SymmetricMatrix::diagonal(v0), sigma)) {
    throw Error(ErrorKind::kSingularModel, "fit_fa_ml: no positive definite starting point");
  }

  const Index na = p * q;
  auto split = [=](std::span<const double> x) {
    return std::pair{SymmetricMatrix::outer(delinearize(x.first(static_cast<std::size_t>(na)), p, q)),
                     SymmetricMatrix::diagonal(Eigen::Map<const Vector>(x.data() + na, p))};
  };

  SearchProblem problem;
  problem.initial.resize(na + p);
  problem.initial << linearize_loading(a0), v0;
  problem.objective = [=](std::span<const double> x) {
    const auto [t, v] = split(x);
    return try_neg_loglik(t, v, sigma).value_or(std::numeric_limits<double>::infinity());
  };
  problem.feasible = [=](std::span<const double> x) {
    for (Index i = 0; i < p; ++i)
      if (x[static_cast<std::size_t>(na + i)] < 0.0) return false;
    const auto [t, v] = split(x);
    return try_neg_loglik(t, v, sigma).has_value();
  };
  problem.step0 = options.resolve_step0(sigma);
  problem.eps = options.eps;
  problem.max_evaluations = options.max_evaluations;

  const SearchResult result = unidirectional_search(problem);
  Matrix loading = delinearize(
      std::span<const double>(result.solution.data(), static_cast<std::size_t>(na)), p, q);
  const Vector v = result.solution.tail(p);

  FitReport report;
  report.objective_trace = result.trace.iterates;
  report.iterations = result.trace.steps.size();
  report.converged = !result.budget_exhausted;
  report.final_tolerance = result.trace.final_step;
  report.evaluations = result.trace.evaluations;
  report.stop_reason = result.budget_exhausted ? "budget" : "step";

  MlFit fit{detail::make_decomposition(std::move(loading), SymmetricMatrix::diagonal(v), q),
            std::move(report), result.value};
  for (auto& w : fit.decomposition.warnings) fit.report.warnings.push_back(w);
  return fit;
}

struct SweepRow {
  double lambda = 0.0;
  double v_fro = 0.0;
  double ls_loss = 0.0;
  bool converged = false;
};

/// Fit once per lambda (lambda = 0 runs plain least squares).
inline std::vector<SweepRow> regularization_sweep(const SymmetricMatrix& sigma,
                                                  const std::vector<double>& lambdas,
                                                  FaFitConfig config) {
  std::vector<SweepRow> rows;
  rows.reserve(lambdas.size());
  for (double lambda : lambdas) {
    config.lambda = lambda;
    const FaFit fit = coordinate_descent(sigma, config);
    const Decomposition& d = fit.decomposition;
    rows.push_back({lambda, d.residual.matrix().norm(), eval_ls(d.low_rank, d.residual, sigma),
                    fit.report.converged});
  }
  return rows;
}

inline std::string emit_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,v_fro,ls_loss\n";
  for (const auto& r : rows) {
    out += format_double(r.lambda) + "," + format_double(r.v_fro) + "," +
           format_double(r.ls_loss) + "\n";
  }
  return out;
}

}  // namespace unifactor
