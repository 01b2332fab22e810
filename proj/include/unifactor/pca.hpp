#pragma once

#include <string>
#include <vector>

#include "unifactor/matrix.hpp"

namespace unifactor {

/// Best PSD approximation of rank at most q: the top-q eigenpairs with
/// negative eigenvalues clamped to zero. Returns the loading R1 * Lambda1^(1/2).
inline Matrix truncated_loading(const EigenSystem& e, Index q) {
  const Vector root = e.values.head(q).cwiseMax(0.0).cwiseSqrt();
  return e.leading_vectors(q) * root.asDiagonal();
}

/// T* = R1 Lambda1 R1^T from the top-q eigenpairs of sigma, V = sigma - T*.
///
/// When lambda_q is at or below the rank tolerance the solution is still
/// returned, with a warning, because T then has rank < q.
inline Decomposition solve_pca(const SymmetricMatrix& sigma, int q) {
  const Index p = sigma.dim();
  detail::require(q >= 1 && q < p, ErrorKind::kInvalidArgument, "solve_pca: need 1 <= q < p");
  const EigenSystem e = eigendecompose(sigma);
  detail::require(is_psd_values(e.values, kPsdTol), ErrorKind::kNegativeSpectrum,
                  "solve_pca: sigma is not PSD");

  Matrix loading = truncated_loading(e, q);
  SymmetricMatrix t = SymmetricMatrix::outer(loading);
  SymmetricMatrix v = sigma - t;
  Decomposition out{std::move(loading), t, v, q, {}};

  const double cut = kRankTol * std::max(1.0, std::abs(e.values(0)));
  if (!(e.values(q - 1) > cut)) {
    out.rank = numeric_rank_values(e.values.head(q), kRankTol);
    out.warnings.push_back("rank collapse: lambda_q = " + std::to_string(e.values(q - 1)) +
                           " is within the rank tolerance");
  }
  return out;
}

inline constexpr double kProportionThreshold = 0.85;

struct PcaReport {
  Decomposition decomposition;
  EigenSystem eigen;
  double cumulative_proportion = 0.0;
  /// Variances of the first q principal components.
  Vector component_variances;
  /// cumulative_proportion >= 0.85.
  bool well_represented = false;
};

inline PcaReport pca_report(const SymmetricMatrix& sigma, int q) {
  Decomposition d = solve_pca(sigma, q);
  EigenSystem e = eigendecompose(sigma);
  const double proportion = cumulative_proportion(e, q);
  Vector variances = e.values.head(q);
  return PcaReport{std::move(d), std::move(e), proportion, std::move(variances),
                   proportion >= kProportionThreshold - 1e-12};
}

}  // namespace unifactor
