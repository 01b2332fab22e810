#pragma once

// Loss functions over symmetric matrices and (T, V) pairs.
//
// One-matrix losses are written against the residual S = Sigma - T; the
// two-matrix losses take T and V directly.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "unifactor/matrix.hpp"

namespace unifactor {

enum class ElementaryLoss { kTrace, kSpectral, kFrobenius, kRank };

inline double eval_elementary(ElementaryLoss f, const SymmetricMatrix& s) {
  switch (f) {
    case ElementaryLoss::kTrace:
      return s.trace();
    case ElementaryLoss::kSpectral:
      return eigenvalues(s).cwiseAbs().maxCoeff();
    case ElementaryLoss::kFrobenius:
      return s.matrix().norm();
    case ElementaryLoss::kRank:
      return static_cast<double>(numeric_rank(s));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline double frobenius_sq(const SymmetricMatrix& s) { return s.matrix().squaredNorm(); }

inline constexpr double kZeroTol = 1e-8;

/// Modified l0 norm: 0 for the zero matrix, p for a singular nonzero
/// matrix, otherwise the number of nonzero entries.
inline double eval_modified_l0(const SymmetricMatrix& s, double zero_tol = kZeroTol) {
  const Matrix& m = s.matrix();
  const Index p = s.dim();
  if (m.cwiseAbs().maxCoeff() <= zero_tol) return 0.0;
  const double det_tol = 1e-10 * std::pow(1.0 + m.norm(), static_cast<double>(p));
  if (std::abs(m.determinant()) <= det_tol) return static_cast<double>(p);
  return static_cast<double>((m.cwiseAbs().array() > zero_tol).count());
}

/// Sum over i < j of |s_ij|^tau; with tau = 0 it counts off-diagonal entries
/// above kZeroTol.
inline double eval_f_tau(const SymmetricMatrix& s, double tau) {
  detail::require(tau >= 0.0, ErrorKind::kInvalidArgument, "f_tau: tau must be >= 0");
  double sum = 0.0;
  for (Index i = 0; i < s.dim(); ++i) {
    for (Index j = i + 1; j < s.dim(); ++j) {
      const double x = std::abs(s(i, j));
      if (tau == 0.0) {
        sum += x > kZeroTol ? 1.0 : 0.0;
      } else if (tau == 2.0) {
        sum += x * x;
      } else {
        sum += std::pow(x, tau);
      }
    }
  }
  return sum;
}

/// f(S) - f(diag(S)) for f spectral or Frobenius.
inline double eval_f_offdiag(const SymmetricMatrix& s, ElementaryLoss base) {
  detail::require(base == ElementaryLoss::kSpectral || base == ElementaryLoss::kFrobenius,
                  ErrorKind::kInvalidArgument, "f_offdiag: base must be spectral or frobenius");
  return eval_elementary(base, s) - eval_elementary(base, s.diagonal_part());
}

/// Minimum eigenvalue of T + V must exceed this (relative to max(1, top)).
inline constexpr double kPdTol = 1e-12;

/// log|C| + trace(C^-1 Sigma) for C = T + V, or nullopt when C is not
/// positive definite within kPdTol.
inline std::optional<double> try_neg_loglik(const SymmetricMatrix& t, const SymmetricMatrix& v,
                                            const SymmetricMatrix& sigma) {
  detail::require(t.dim() == v.dim() && t.dim() == sigma.dim(), ErrorKind::kDimensionMismatch,
                  "neg_loglik: dimension mismatch");
  const EigenSystem e = eigendecompose(t + v);
  const double top = std::max(1.0, e.values(0));
  if (!(e.values(e.dim() - 1) > kPdTol * top)) return std::nullopt;
  // trace(C^-1 Sigma) = sum_k r_k' Sigma r_k / lambda_k
  const Matrix projected = e.vectors.transpose() * sigma.matrix() * e.vectors;
  double log_det = 0.0;
  double tr = 0.0;
  for (Index k = 0; k < e.dim(); ++k) {
    log_det += std::log(e.values(k));
    tr += projected(k, k) / e.values(k);
  }
  return log_det + tr;
}

inline double eval_neg_loglik(const SymmetricMatrix& t, const SymmetricMatrix& v,
                              const SymmetricMatrix& sigma) {
  const auto value = try_neg_loglik(t, v, sigma);
  if (!value) throw Error(ErrorKind::kSingularModel, "T + V is not positive definite");
  return *value;
}

/// Squared-error loss ||Sigma - (T + V)||_F^2.
inline double eval_ls(const SymmetricMatrix& t, const SymmetricMatrix& v,
                      const SymmetricMatrix& sigma) {
  return frobenius_sq(sigma - (t + v));
}

inline double eval_pls(const SymmetricMatrix& t, const SymmetricMatrix& v,
                       const SymmetricMatrix& sigma, double lambda) {
  detail::require(lambda >= 0.0, ErrorKind::kInvalidArgument, "pls: lambda must be >= 0");
  return eval_ls(t, v, sigma) + lambda * frobenius_sq(v);
}

/// w * ||Sigma - T||_F^2 + (1 - w) * f_2(Sigma - T).
inline double eval_path(const SymmetricMatrix& t, const SymmetricMatrix& sigma, double w) {
  detail::require(w >= 0.0 && w <= 1.0, ErrorKind::kInvalidArgument, "path: w must lie in [0,1]");
  const SymmetricMatrix s = sigma - t;
  return w * frobenius_sq(s) + (1.0 - w) * eval_f_tau(s, 2.0);
}

namespace detail {

inline Matrix psd_sqrt(const SymmetricMatrix& m) {
  const EigenSystem e = eigendecompose(m);
  return e.vectors * e.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * e.vectors.transpose();
}

}  // namespace detail

/// 2-Wasserstein distance (squared) between N(0, Sigma) and N(0, T).
inline double eval_wasserstein(const SymmetricMatrix& t, const SymmetricMatrix& sigma) {
  detail::require(t.dim() == sigma.dim(), ErrorKind::kDimensionMismatch,
                  "wasserstein: dimension mismatch");
  const Matrix root = detail::psd_sqrt(sigma);
  const SymmetricMatrix inner(root * t.matrix() * root);
  const double cross = eigenvalues(inner).cwiseMax(0.0).cwiseSqrt().sum();
  return std::max(0.0, sigma.trace() + t.trace() - 2.0 * cross);
}

enum class Family {
  kTrace,
  kSpectral,
  kFrobenius,
  kFrobeniusSq,
  kRank,
  kModifiedL0,
  kFTau,
  kFOffdiag,
  kNegLoglik,
  kPenalizedMlF,
  kPenalizedMlV2,
  kLs,
  kPls,
  kPath,
  kWasserstein,
};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::kTrace: return "trace";
    case Family::kSpectral: return "spectral";
    case Family::kFrobenius: return "frobenius";
    case Family::kFrobeniusSq: return "frobenius_sq";
    case Family::kRank: return "rank";
    case Family::kModifiedL0: return "modified_l0";
    case Family::kFTau: return "f_tau";
    case Family::kFOffdiag: return "f_offdiag";
    case Family::kNegLoglik: return "neg_loglik";
    case Family::kPenalizedMlF: return "penalized_ml_f";
    case Family::kPenalizedMlV2: return "penalized_ml_v2";
    case Family::kLs: return "ls";
    case Family::kPls: return "pls";
    case Family::kPath: return "path";
    case Family::kWasserstein: return "wasserstein";
  }
  return "";
}

inline std::optional<Family> parse_family(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Family::kWasserstein); ++i) {
    const auto f = static_cast<Family>(i);
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

/// True for families evaluated on a (T, V) pair.
inline bool is_two_matrix(Family f) {
  return f == Family::kNegLoglik || f == Family::kPenalizedMlF || f == Family::kPenalizedMlV2 ||
         f == Family::kLs || f == Family::kPls;
}

/// A closed loss description. Parameters are optional and must be present
/// exactly when the family uses them; validate() enforces that.
///
/// base_f is the matrix loss inside f_offdiag (spectral | frobenius) and
/// the penalty loss inside penalized_ml_f (trace | spectral | frobenius).
struct ObjectiveSpec {
  Family family;
  SymmetricMatrix sigma;
  std::optional<double> tau;
  std::optional<double> lambda;
  std::optional<double> w;
  std::optional<ElementaryLoss> base_f;

  void validate() const {
    const bool needs_tau = family == Family::kFTau;
    const bool needs_lambda = family == Family::kPenalizedMlF ||
                              family == Family::kPenalizedMlV2 || family == Family::kPls;
    const bool needs_w = family == Family::kPath;
    const bool needs_base = family == Family::kFOffdiag || family == Family::kPenalizedMlF;
    const std::string name(to_string(family));
    auto check = [&](bool needed, bool present, const char* param) {
      if (needed != present) {
        throw Error(ErrorKind::kInvalidArgument,
                    name + (needed ? " requires " : " does not take ") + param);
      }
    };
    check(needs_tau, tau.has_value(), "tau");
    check(needs_lambda, lambda.has_value(), "lambda");
    check(needs_w, w.has_value(), "w");
    check(needs_base, base_f.has_value(), "base_f");
    if (tau) detail::require(*tau >= 0.0, ErrorKind::kInvalidArgument, "tau must be >= 0");
    if (lambda) detail::require(*lambda >= 0.0, ErrorKind::kInvalidArgument, "lambda must be >= 0");
    if (w) detail::require(*w >= 0.0 && *w <= 1.0, ErrorKind::kInvalidArgument, "w must lie in [0,1]");
    if (family == Family::kFOffdiag) {
      detail::require(*base_f == ElementaryLoss::kSpectral || *base_f == ElementaryLoss::kFrobenius,
                      ErrorKind::kInvalidArgument, "f_offdiag base must be spectral or frobenius");
    }
    if (family == Family::kPenalizedMlF) {
      detail::require(*base_f != ElementaryLoss::kRank, ErrorKind::kInvalidArgument,
                      "penalized_ml_f penalty must be trace, spectral or frobenius");
    }
  }
};

/// l(T, V) + lambda * f(Sigma - T)  or  l(T, V) + lambda * ||V||_2^2.
inline double eval_penalized(const ObjectiveSpec& spec, const SymmetricMatrix& t,
                             const SymmetricMatrix& v) {
  spec.validate();
  const double base = eval_neg_loglik(t, v, spec.sigma);
  if (spec.family == Family::kPenalizedMlF) {
    return base + *spec.lambda * eval_elementary(*spec.base_f, spec.sigma - t);
  }
  detail::require(spec.family == Family::kPenalizedMlV2, ErrorKind::kInvalidArgument,
                  "eval_penalized expects a penalized_ml family");
  const double spectral = eval_elementary(ElementaryLoss::kSpectral, v);
  return base + *spec.lambda * spectral * spectral;
}

/// Evaluate any family. One-matrix families use S = Sigma - T (path and
/// wasserstein take T and Sigma directly); two-matrix families need v.
inline double evaluate(const ObjectiveSpec& spec, const SymmetricMatrix& t,
                       const std::optional<SymmetricMatrix>& v = std::nullopt) {
  spec.validate();
  detail::require(t.dim() == spec.sigma.dim(), ErrorKind::kDimensionMismatch,
                  "evaluate: T and Sigma differ in dimension");
  if (is_two_matrix(spec.family)) {
    detail::require(v.has_value(), ErrorKind::kInvalidArgument,
                    "two-matrix objective requires V");
  }
  const SymmetricMatrix s = spec.sigma - t;
  switch (spec.family) {
    case Family::kTrace: return eval_elementary(ElementaryLoss::kTrace, s);
    case Family::kSpectral: return eval_elementary(ElementaryLoss::kSpectral, s);
    case Family::kFrobenius: return eval_elementary(ElementaryLoss::kFrobenius, s);
    case Family::kFrobeniusSq: return frobenius_sq(s);
    case Family::kRank: return eval_elementary(ElementaryLoss::kRank, s);
    case Family::kModifiedL0: return eval_modified_l0(s);
    case Family::kFTau: return eval_f_tau(s, *spec.tau);
    case Family::kFOffdiag: return eval_f_offdiag(s, *spec.base_f);
    case Family::kNegLoglik: return eval_neg_loglik(t, *v, spec.sigma);
    case Family::kPenalizedMlF:
    case Family::kPenalizedMlV2: return eval_penalized(spec, t, *v);
    case Family::kLs: return eval_ls(t, *v, spec.sigma);
    case Family::kPls: return eval_pls(t, *v, spec.sigma, *spec.lambda);
    case Family::kPath: return eval_path(t, spec.sigma, *spec.w);
    case Family::kWasserstein: return eval_wasserstein(t, spec.sigma);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace unifactor
