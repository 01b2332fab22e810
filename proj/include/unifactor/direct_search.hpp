#pragma once

// Unidirectional (compass) search: perturb each coordinate by +/- s, move to
// the best feasible improving candidate, halve s when none improves, and stop
// once s drops below eps.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "unifactor/matrix.hpp"

namespace unifactor {

using ParamFunction = std::function<double(std::span<const double>)>;
using ParamPredicate = std::function<bool(std::span<const double>)>;

inline constexpr double kDefaultSearchEps = 1e-6;
inline constexpr std::size_t kDefaultMaxEvaluations = 200000;

struct SearchProblem {
  ParamFunction objective;
  /// Empty means every point is feasible.
  ParamPredicate feasible;
  Vector initial;
  double step0 = 0.1;
  double eps = kDefaultSearchEps;
  std::size_t max_evaluations = kDefaultMaxEvaluations;
  /// Cap on accepted moves.
  std::size_t max_iters = std::numeric_limits<std::size_t>::max();
  /// Called with each accepted point and its objective value.
  std::function<void(const Vector&, double)> on_accept;

  Index dim() const { return initial.size(); }
};

struct SearchTrace {
  /// Objective at the start, then after every accepted move.
  std::vector<double> iterates;
  /// Step size in force when each move was accepted.
  std::vector<double> steps;
  double final_step = 0.0;
  std::size_t evaluations = 0;
  std::size_t halvings = 0;
};

struct SearchResult {
  Vector solution;
  double value = 0.0;
  SearchTrace trace;
  bool budget_exhausted = false;
};

inline SearchResult unidirectional_search(const SearchProblem& problem) {
  detail::require(static_cast<bool>(problem.objective), ErrorKind::kInvalidArgument,
                  "search: objective is empty");
  detail::require(problem.dim() >= 1, ErrorKind::kInvalidArgument, "search: empty parameter vector");
  detail::require(problem.eps > 0.0 && problem.step0 > problem.eps, ErrorKind::kInvalidArgument,
                  "search: need step0 > eps > 0");

  auto feasible = [&](const Vector& x) {
    return !problem.feasible || problem.feasible(std::span<const double>(x.data(), x.size()));
  };
  auto evaluate = [&](const Vector& x) {
    return problem.objective(std::span<const double>(x.data(), x.size()));
  };

  if (!feasible(problem.initial)) {
    throw Error(ErrorKind::kInfeasibleStart, "search: initial point is infeasible");
  }

  SearchResult result;
  result.solution = problem.initial;
  result.value = evaluate(result.solution);
  detail::require(std::isfinite(result.value), ErrorKind::kInfeasibleStart,
                  "search: objective is not finite at the initial point");
  result.trace.evaluations = 1;
  result.trace.iterates.push_back(result.value);

  double step = problem.step0;
  std::size_t moves = 0;
  Vector candidate = result.solution;
  while (step >= problem.eps) {
    if (moves >= problem.max_iters ||
        result.trace.evaluations + 2 * static_cast<std::size_t>(problem.dim()) >
            problem.max_evaluations) {
      result.budget_exhausted = true;
      break;
    }
    // Scan +s then -s for each coordinate; strict '<' keeps the earliest
    // candidate on ties.
    double best_value = result.value;
    Index best_coord = -1;
    double best_sign = 0.0;
    for (Index i = 0; i < problem.dim(); ++i) {
      for (double sign : {1.0, -1.0}) {
        candidate(i) = result.solution(i) + sign * step;
        const double value = evaluate(candidate);
        ++result.trace.evaluations;
        if (value < best_value && feasible(candidate)) {
          best_value = value;
          best_coord = i;
          best_sign = sign;
        }
      }
      candidate(i) = result.solution(i);
    }
    if (best_coord < 0) {
      step *= 0.5;
      ++result.trace.halvings;
      continue;
    }
    result.solution(best_coord) += best_sign * step;
    candidate(best_coord) = result.solution(best_coord);
    result.value = best_value;
    result.trace.iterates.push_back(best_value);
    result.trace.steps.push_back(step);
    ++moves;
    if (problem.on_accept) problem.on_accept(result.solution, result.value);
  }
  result.trace.final_step = step;
  return result;
}

/// Row-major flattening of a p x q loading matrix.
inline Vector linearize_loading(const Matrix& a) {
  Vector out(a.size());
  Index k = 0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) out(k++) = a(i, j);
  return out;
}

inline Matrix delinearize(std::span<const double> x, Index p, Index q) {
  detail::require(p >= 1 && q >= 1 && static_cast<Index>(x.size()) == p * q,
                  ErrorKind::kDimensionMismatch, "delinearize: length does not equal p*q");
  Matrix a(p, q);
  Index k = 0;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j) a(i, j) = x[static_cast<std::size_t>(k++)];
  return a;
}

inline Matrix delinearize(const Vector& x, Index p, Index q) {
  return delinearize(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), p, q);
}

/// Search settings shared by the loading-based solvers. An unset step0 means
/// 0.1 * sqrt(max diagonal of Sigma).
struct SearchOptions {
  std::optional<double> step0;
  double eps = kDefaultSearchEps;
  std::size_t max_evaluations = kDefaultMaxEvaluations;

  double resolve_step0(const SymmetricMatrix& sigma) const {
    if (step0) return *step0;
    return 0.1 * std::sqrt(std::max(sigma.diag().maxCoeff(), 0.0));
  }
};

/// Minimise objective(A A^T) over p x q loadings A starting at `initial`,
/// optionally constrained to A A^T <= sigma.
inline SearchResult search_loading(const SymmetricMatrix& sigma, const Matrix& initial,
                                   std::function<double(const SymmetricMatrix&)> objective,
                                   bool loewner_bounded, const SearchOptions& options = {}) {
  const Index p = initial.rows();
  const Index q = initial.cols();
  detail::require(p == sigma.dim(), ErrorKind::kDimensionMismatch,
                  "search_loading: loading rows differ from sigma dimension");
  SearchProblem problem;
  problem.initial = linearize_loading(initial);
  problem.objective = [=](std::span<const double> x) {
    return objective(SymmetricMatrix::outer(delinearize(x, p, q)));
  };
  if (loewner_bounded) {
    problem.feasible = [=](std::span<const double> x) {
      return loewner_leq(SymmetricMatrix::outer(delinearize(x, p, q)), sigma);
    };
  }
  problem.step0 = options.resolve_step0(sigma);
  problem.eps = options.eps;
  problem.max_evaluations = options.max_evaluations;
  return unidirectional_search(problem);
}

}  // namespace unifactor
