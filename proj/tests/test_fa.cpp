#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "unifactor/fa.hpp"

using namespace unifactor;

namespace {

FaFitConfig config(int q, double lambda = 0.0) {
  FaFitConfig c;
  c.q = q;
  c.lambda = lambda;
  return c;
}

double ls_loss(const FaFit& f, const SymmetricMatrix& sigma) {
  return eval_ls(f.decomposition.low_rank, f.decomposition.residual, sigma);
}

double v_fro(const FaFit& f) { return f.decomposition.residual.matrix().norm(); }

void expect_nonincreasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    ASSERT_LE(trace[k], trace[k - 1] + 1e-12 * std::max(1.0, std::abs(trace[k - 1])))
        << "at iteration " << k;
  }
}

/// Smallest ||V||_F over exact fits of [[s11, s12], [s12, s22]] with a
/// rank-1 T = a a^T and diagonal V >= 0: scan a1^2 over its feasible range.
double min_exact_v_fro_2x2(double s11, double s12, double s22) {
  const double lo = s12 * s12 / s22;
  const double hi = s11;
  double best = INFINITY;
  const int n = 2000000;
  for (int i = 0; i <= n; ++i) {
    const double a1sq = lo + (hi - lo) * i / n;
    const double v1 = s11 - a1sq;
    const double v2 = s22 - s12 * s12 / a1sq;
    best = std::min(best, std::sqrt(v1 * v1 + v2 * v2));
  }
  return best;
}

}  // namespace

TEST(FitFaLs, IdentifiableThreeByThree) {
  const FaFit f = fit_fa_ls(fixtures::sigma_i(), config(1));
  EXPECT_LE((f.decomposition.residual.diag() - fixtures::residual_i()).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_LE(ls_loss(f, fixtures::sigma_i()), 1e-6);
  EXPECT_TRUE(f.report.converged);
  EXPECT_EQ(f.report.stop_reason, "tolerance");
  EXPECT_EQ(f.decomposition.rank, 1);
  expect_nonincreasing(f.report.objective_trace);
}

TEST(FitFaLs, DiagonalSigmaFitsExactly) {
  const SymmetricMatrix sigma = SymmetricMatrix::diagonal((Vector(2) << 4, 1).finished());
  const FaFit f = fit_fa_ls(sigma, config(1));
  EXPECT_LE(ls_loss(f, sigma), 1e-12);
  EXPECT_LE(max_abs_diff(f.decomposition.low_rank + f.decomposition.residual, sigma), 1e-6);
}

TEST(FitFaLs, IdentifiableFiveByFive) {
  const FaFit f = fit_fa_ls(fixtures::sigma_ii(), config(2));
  EXPECT_LE(ls_loss(f, fixtures::sigma_ii()), 1e-6);
  EXPECT_LE((f.decomposition.residual.diag() - fixtures::residual_ii()).cwiseAbs().maxCoeff(), 1e-3);
  expect_nonincreasing(f.report.objective_trace);
}

TEST(FitFaLs, RejectsPositiveLambdaAndBadConfig) {
  EXPECT_THROW(fit_fa_ls(fixtures::sigma_I(), config(1, 0.5)), Error);
  EXPECT_THROW(fit_fa_pls(fixtures::sigma_I(), config(1, 0.0)), Error);
  EXPECT_THROW(fit_fa_ls(fixtures::sigma_I(), config(2)), Error);
  FaFitConfig c = config(1);
  c.v0 = SymmetricMatrix::ones(2);
  EXPECT_THROW(fit_fa_ls(fixtures::sigma_I(), c), Error);
  c.v0 = SymmetricMatrix::diagonal((Vector(2) << 3, 0).finished());
  EXPECT_THROW(fit_fa_ls(fixtures::sigma_I(), c), Error);
  c.v0 = SymmetricMatrix::diagonal((Vector(2) << 1, 0).finished());
  EXPECT_NO_THROW(fit_fa_ls(fixtures::sigma_I(), c));
}

TEST(FitFaPls, UnidentifiableTwoByTwoApproachesMinimalResidual) {
  const FaFit f = fit_fa_pls(fixtures::sigma_I(), config(1, 1e-3));
  EXPECT_LE(ls_loss(f, fixtures::sigma_I()), 1e-3);
  const double oracle = min_exact_v_fro_2x2(2, 1, 3);
  EXPECT_NEAR(oracle, 1.65495, 1e-5);
  EXPECT_NEAR(v_fro(f), oracle, 1e-2);
  // The pair with V = diag(5/3, 0) is an exact fit but not the smallest one.
  EXPECT_LT(oracle, 5.0 / 3.0);
  expect_nonincreasing(f.report.objective_trace);
}

TEST(FitFaPls, UnidentifiableFourByFourBeatsReferencePair) {
  const SymmetricMatrix sigma = fixtures::sigma_II();
  const double lambda = 1e-3;
  const FaFit f = fit_fa_pls(sigma, config(2, lambda));
  EXPECT_LE(ls_loss(f, sigma), 1e-3);
  const SymmetricMatrix t_ref = SymmetricMatrix::outer(fixtures::loading_II());
  const SymmetricMatrix v_ref = sigma - t_ref;
  EXPECT_LE(eval_pls(f.decomposition.low_rank, f.decomposition.residual, sigma, lambda),
            eval_pls(t_ref, v_ref, sigma, lambda));
  EXPECT_LT(v_fro(f), std::sqrt(2.0));
  expect_nonincreasing(f.report.objective_trace);
}

TEST(FitFaPls, LoewnerStopReturnsPreviousIterate) {
  FaFitConfig c = config(2, 1e-3);
  c.stop_on_loewner = true;
  const FaFit f = fit_fa_pls(fixtures::sigma_II(), c);
  EXPECT_EQ(f.report.stop_reason, "loewner");
  EXPECT_EQ(f.report.iterations, 1u);
  // The returned V satisfies V <= Sigma; the rejected one did not.
  EXPECT_TRUE(loewner_leq(f.decomposition.residual, fixtures::sigma_II()));
  EXPECT_GT(ls_loss(f, fixtures::sigma_II()), 0.4);
}

TEST(FitFaPls, LargeLambdaShrinksResidual) {
  oracles::Gen gen(211);
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = gen.integer(2, 5);
    const SymmetricMatrix sigma(gen.spd(p));
    const FaFit f = fit_fa_pls(sigma, config(1, 1e3));
    EXPECT_LE(v_fro(f), sigma.diag().norm() / (1.0 + 1e3) + 1e-12);
  }
}

TEST(FitFaPls, ResidualNormIncreasesAsPenaltyShrinks) {
  double prev = 0.0;
  for (double lambda : {1.0, 0.1, 0.01, 0.001}) {
    const double v = v_fro(fit_fa_pls(fixtures::sigma_I(), config(1, lambda)));
    EXPECT_GE(v, prev - 1e-6);
    prev = v;
  }
}

TEST(CoordinateDescent, TraceIsNonincreasingOnRandomInputs) {
  oracles::Gen gen(223);
  for (int trial = 0; trial < 40; ++trial) {
    const Index p = gen.integer(2, 6);
    const int q = gen.integer(1, static_cast<int>(p) - 1);
    const double lambda = trial % 2 ? 0.0 : gen.uniform(0.0, 1.0);
    FaFitConfig c = config(q, lambda);
    c.max_iters = 2000;
    const FaFit f = coordinate_descent(SymmetricMatrix(gen.spd(p)), c);
    expect_nonincreasing(f.report.objective_trace);
  }
}

TEST(CoordinateDescent, StepsAreExactBlockMinimizers) {
  oracles::Gen gen(227);
  for (int trial = 0; trial < 10; ++trial) {
    const Index p = gen.integer(3, 5);
    const int q = gen.integer(1, static_cast<int>(p) - 1);
    const SymmetricMatrix sigma(gen.spd(p));
    const double lambda = trial % 2 ? 0.0 : 0.05;
    FaFitConfig c = config(q, lambda);
    c.max_iters = 50;
    std::size_t calls = 0;
    coordinate_descent(sigma, c, [&](std::size_t, const SymmetricMatrix& v_before,
                                     const SymmetricMatrix& t, const SymmetricMatrix& v) {
      ++calls;
      const SymmetricMatrix s = sigma - v_before;
      // T-step: best rank-q approximation of Sigma - V (PCA when PSD).
      if (is_psd(s)) {
        EXPECT_LE(max_abs_diff(t, solve_pca(s, q).low_rank), 1e-10);
      }
      const Matrix r = oracles::top_vectors(s.matrix(), q);
      Vector top = oracles::eigenvalues(s.matrix()).head(q).cwiseMax(0.0);
      EXPECT_LE(max_abs_diff(t.matrix(), r * top.asDiagonal() * r.transpose()), 1e-9);
      // V-step: no single diagonal perturbation improves the penalized loss.
      const double base = eval_pls(t, v, sigma, lambda);
      for (Index i = 0; i < p; ++i) {
        for (double delta : {1e-4, -1e-4}) {
          Vector d = v.diag();
          d(i) += delta;
          if (d(i) < 0.0) continue;
          EXPECT_GE(eval_pls(t, SymmetricMatrix::diagonal(d), sigma, lambda), base - 1e-12);
        }
      }
    });
    EXPECT_GT(calls, 0u);
  }
}

TEST(CoordinateDescent, FixedPointSatisfiesShrinkage) {
  const double lambda = 0.01;
  const FaFit f = fit_fa_pls(fixtures::sigma_ii(), config(2, lambda));
  const Vector expected =
      (fixtures::sigma_ii() - f.decomposition.low_rank).diag().cwiseMax(0.0) / (1.0 + lambda);
  EXPECT_LE((f.decomposition.residual.diag() - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(ModifiedL0, ExactDecompositionAttainsP) {
  const SymmetricMatrix sigma = fixtures::sigma_i();
  EXPECT_EQ(eval_modified_l0(sigma - SymmetricMatrix::ones(3)), 3.0);
  const Matrix s = sigma.matrix();
  double best = INFINITY;
  for (int i = -8; i <= 8; ++i)
    for (int j = -8; j <= 8; ++j)
      for (int k = -8; k <= 8; ++k) {
        const Vector a = (Vector(3) << 0.25 * i, 0.25 * j, 0.25 * k).finished();
        const Matrix t = a * a.transpose();
        if (oracles::min_eigenvalue(s - t) < -1e-10 || a.isZero()) continue;
        best = std::min(best, eval_modified_l0(SymmetricMatrix(s - t)));
      }
  EXPECT_GE(best, 3.0);
}

TEST(FitFaMl, IdentifiableExampleAttainsSaturatedLikelihood) {
  const MlFit f = fit_fa_ml(fixtures::sigma_i(), 1);
  const double oracle = oracles::neg_loglik(fixtures::sigma_i().matrix(), fixtures::sigma_i().matrix());
  EXPECT_NEAR(oracle, std::log(12.0) + 3.0, 1e-12);
  EXPECT_NEAR(f.neg_loglik, oracle, 1e-4);
  EXPECT_TRUE(f.report.converged);
  for (std::size_t k = 1; k < f.report.objective_trace.size(); ++k) {
    ASSERT_LT(f.report.objective_trace[k], f.report.objective_trace[k - 1]);
  }
  EXPECT_GE(f.decomposition.residual.diag().minCoeff(), 0.0);
}

TEST(FitFaMl, ScaledIdentity) {
  for (double c : {0.5, 1.0, 4.0}) {
    const MlFit f = fit_fa_ml(c * SymmetricMatrix::identity(3), 1);
    EXPECT_LE(f.neg_loglik, std::log(c * c * c) + 3.0 + 1e-6);
  }
}

TEST(FitFaMl, UnidentifiableExample) {
  const MlFit f = fit_fa_ml(fixtures::sigma_I(), 1);
  EXPECT_LE(f.neg_loglik, std::log(5.0) + 2.0 + 1e-4);
}

TEST(FitFaMl, SingularSigmaIsAnError) {
  try {
    fit_fa_ml(SymmetricMatrix::ones(3), 1);
    FAIL() << "expected singular-model error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSingularModel);
  }
}

TEST(Sweep, RowsAndCsv) {
  const auto rows = regularization_sweep(fixtures::sigma_I(), {1.0, 0.0}, config(1));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].lambda, 1.0);
  EXPECT_NEAR(rows[0].v_fro, v_fro(fit_fa_pls(fixtures::sigma_I(), config(1, 1.0))), 1e-15);
  const std::string csv = emit_sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda,v_fro,ls_loss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
