#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "unifactor/direct_search.hpp"
#include "unifactor/objectives.hpp"
#include "unifactor/pca.hpp"

using namespace unifactor;

namespace {

void expect_strict_descent(const SearchTrace& trace) {
  ASSERT_FALSE(trace.iterates.empty());
  for (std::size_t k = 1; k < trace.iterates.size(); ++k) {
    ASSERT_LT(trace.iterates[k], trace.iterates[k - 1]) << "at accepted move " << k;
  }
  ASSERT_EQ(trace.steps.size() + 1, trace.iterates.size());
}

SearchProblem quadratic_problem() {
  SearchProblem p;
  p.objective = [](std::span<const double> x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + (x[1] - 2.0) * (x[1] - 2.0);
  };
  p.initial = Vector::Zero(2);
  p.step0 = 1.0;
  p.eps = 1e-6;
  return p;
}

/// Loewner-feasible search of f_2(Sigma - a a^T) from the PCA loading.
SearchResult fa_search(const SymmetricMatrix& sigma, int q) {
  const Decomposition pca = solve_pca(sigma, q);
  return search_loading(
      sigma, *pca.loading, [&](const SymmetricMatrix& t) { return eval_f_tau(sigma - t, 2.0); }, true);
}

}  // namespace

TEST(Linearize, RowMajorExamples) {
  const Matrix a = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  EXPECT_EQ(linearize_loading(a), (Vector(4) << 1, 2, 3, 4).finished());
  EXPECT_EQ(delinearize((Vector(4) << 1, 0, 0, 1).finished(), 2, 2), Matrix::Identity(2, 2));
  oracles::Gen gen(1);
  const Matrix r = gen.gaussian(3, 2);
  EXPECT_EQ(delinearize(linearize_loading(r), 3, 2), r);
  EXPECT_THROW(delinearize(Vector::Zero(5), 3, 2), Error);
}

TEST(UnidirectionalSearch, SeparableQuadratic) {
  const SearchResult r = unidirectional_search(quadratic_problem());
  EXPECT_LE(std::abs(r.solution(0) - 1.0), 1e-5);
  EXPECT_LE(std::abs(r.solution(1) - 2.0), 1e-5);
  EXPECT_FALSE(r.budget_exhausted);
  EXPECT_LT(r.trace.final_step, 1e-6);
  expect_strict_descent(r.trace);
}

TEST(UnidirectionalSearch, HalvingCountIsBoundedByStepRatio) {
  const SearchProblem p = quadratic_problem();
  const SearchResult r = unidirectional_search(p);
  const auto bound = static_cast<std::size_t>(std::ceil(std::log2(p.step0 / p.eps)));
  EXPECT_LE(r.trace.halvings, bound + 1);
}

TEST(UnidirectionalSearch, TieBreakPrefersLowestIndexThenPlus) {
  SearchProblem p;
  p.objective = [](std::span<const double> x) { return -(std::abs(x[0]) + std::abs(x[1])); };
  p.initial = Vector::Zero(2);
  p.step0 = 0.5;
  p.max_iters = 1;
  const SearchResult r = unidirectional_search(p);
  EXPECT_EQ(r.solution, (Vector(2) << 0.5, 0.0).finished());
}

TEST(UnidirectionalSearch, InfeasibleCandidatesAreSkipped) {
  SearchProblem p = quadratic_problem();
  p.feasible = [](std::span<const double> x) { return x[1] <= 1.5; };
  const SearchResult r = unidirectional_search(p);
  EXPECT_NEAR(r.solution(0), 1.0, 1e-5);
  EXPECT_LE(r.solution(1), 1.5);
  EXPECT_NEAR(r.solution(1), 1.5, 1e-5);
}

TEST(UnidirectionalSearch, InfeasibleStartIsAnError) {
  SearchProblem p = quadratic_problem();
  p.feasible = [](std::span<const double> x) { return x[0] > 0.5; };
  try {
    unidirectional_search(p);
    FAIL() << "expected infeasible-start error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInfeasibleStart);
  }
}

TEST(UnidirectionalSearch, RejectsBadSteps) {
  SearchProblem p = quadratic_problem();
  p.eps = 2.0;
  EXPECT_THROW(unidirectional_search(p), Error);
  p = quadratic_problem();
  p.objective = nullptr;
  EXPECT_THROW(unidirectional_search(p), Error);
}

TEST(UnidirectionalSearch, BudgetExhaustionIsFlagged) {
  SearchProblem p = quadratic_problem();
  p.max_evaluations = 20;
  const SearchResult r = unidirectional_search(p);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_LE(r.trace.evaluations, 20u);
  expect_strict_descent(r.trace);
}

TEST(UnidirectionalSearch, Deterministic) {
  const SearchResult a = fa_search(fixtures::sigma_i(), 1);
  const SearchResult b = fa_search(fixtures::sigma_i(), 1);
  EXPECT_EQ(a.solution, b.solution);
  EXPECT_EQ(a.trace.iterates, b.trace.iterates);
  EXPECT_EQ(a.trace.evaluations, b.trace.evaluations);
}

TEST(SearchLoading, FactorFitOfUnidentifiableExample) {
  const SymmetricMatrix sigma = fixtures::sigma_I();
  const SearchResult r = fa_search(sigma, 1);
  expect_strict_descent(r.trace);
  EXPECT_LE(r.value, 1e-8);
  const SymmetricMatrix t = SymmetricMatrix::outer(delinearize(r.solution, 2, 1));
  EXPECT_TRUE(loewner_leq(t, sigma));
  EXPECT_NEAR(t(0, 1), 1.0, 1e-4);
  // Every exact fit has a1 a2 = 1 with a1^2 in [1/3, 2]; the search lands on
  // that curve, though not at a particular point of it.
  EXPECT_GE(t(0, 0), 1.0 / 3.0 - 1e-6);
  EXPECT_LE(t(0, 0), 2.0 + 1e-6);
}

TEST(SearchLoading, FeasibilityHoldsAlongEveryAcceptedIterate) {
  const SymmetricMatrix sigma = fixtures::sigma_ii();
  SearchProblem p;
  p.initial = linearize_loading(0.9 * *solve_pca(sigma, 2).loading);
  p.objective = [&](std::span<const double> x) {
    return eval_f_tau(sigma - SymmetricMatrix::outer(delinearize(x, 5, 2)), 2.0);
  };
  p.feasible = [&](std::span<const double> x) {
    return loewner_leq(SymmetricMatrix::outer(delinearize(x, 5, 2)), sigma);
  };
  p.step0 = 0.2;
  std::size_t accepted = 0;
  p.on_accept = [&](const Vector& x, double) {
    ++accepted;
    const Matrix t = SymmetricMatrix::outer(delinearize(x, 5, 2)).matrix();
    ASSERT_GE(oracles::min_eigenvalue(sigma.matrix() - t), -1e-9);
  };
  const SearchResult r = unidirectional_search(p);
  expect_strict_descent(r.trace);
  EXPECT_EQ(accepted, r.trace.steps.size());
  EXPECT_GT(accepted, 0u);
  EXPECT_LE(r.value, 1e-6);
}

TEST(SearchLoading, PcaFitWithoutConstraint) {
  const SymmetricMatrix sigma = fixtures::sigma_I();
  const Decomposition pca = solve_pca(sigma, 1);
  Matrix start(2, 1);
  start << 0.5, 0.5;
  const SearchResult r = search_loading(
      sigma, start, [&](const SymmetricMatrix& t) { return frobenius_sq(sigma - t); }, false);
  expect_strict_descent(r.trace);
  const SymmetricMatrix t = SymmetricMatrix::outer(delinearize(r.solution, 2, 1));
  EXPECT_LE(max_abs_diff(t, pca.low_rank), 1e-3);
}
