#pragma once

// Homotopy from PCA (w = 1) to factor analysis (w = 0): minimise
// w ||Sigma - T||_F^2 + (1 - w) f_2(Sigma - T) over T = A A^T <= Sigma on a
// decreasing grid of w, warm-starting each point at the previous loading.

#include <string>
#include <vector>

#include "unifactor/direct_search.hpp"
#include "unifactor/format.hpp"
#include "unifactor/objectives.hpp"
#include "unifactor/pca.hpp"

namespace unifactor {

/// 1, 1 - 1/m, ..., 0.
inline std::vector<double> uniform_grid(int m = 20) {
  detail::require(m >= 1, ErrorKind::kInvalidArgument, "uniform_grid: need m >= 1");
  std::vector<double> grid;
  for (int i = 0; i <= m; ++i) grid.push_back(1.0 - static_cast<double>(i) / m);
  grid.back() = 0.0;
  return grid;
}

struct PathConfig {
  std::vector<double> grid = uniform_grid();
  int q = 1;
  SearchOptions search;
  /// The first search starts from (1 - start_shrink) times the PCA loading,
  /// a strictly feasible point.
  double start_shrink = 1e-6;

  void validate(const SymmetricMatrix& sigma) const {
    detail::require(q >= 1 && q < sigma.dim(), ErrorKind::kInvalidArgument, "path: need 1 <= q < p");
    detail::require(grid.size() >= 2 && grid.front() == 1.0 && grid.back() == 0.0,
                    ErrorKind::kInvalidArgument, "path: grid must run from 1 to 0");
    for (std::size_t i = 1; i < grid.size(); ++i) {
      detail::require(grid[i] < grid[i - 1], ErrorKind::kInvalidArgument,
                      "path: grid must be strictly decreasing");
    }
    detail::require(start_shrink >= 0.0 && start_shrink < 1.0, ErrorKind::kInvalidArgument,
                    "path: start_shrink must lie in [0, 1)");
  }
};

struct PathPoint {
  double w = 0.0;
  SymmetricMatrix t = SymmetricMatrix::zero(1);
  Matrix loading;
  double pca_loss = 0.0;
  double fa_loss = 0.0;
  double combined = 0.0;
  bool converged = true;
};

inline PathPoint make_path_point(double w, const SymmetricMatrix& sigma, Matrix loading,
                                 bool converged) {
  PathPoint pt;
  pt.w = w;
  pt.t = SymmetricMatrix::outer(loading);
  pt.loading = std::move(loading);
  const SymmetricMatrix s = sigma - pt.t;
  pt.pca_loss = frobenius_sq(s);
  pt.fa_loss = eval_f_tau(s, 2.0);
  pt.combined = w * pt.pca_loss + (1.0 - w) * pt.fa_loss;
  pt.converged = converged;
  return pt;
}

inline std::vector<PathPoint> solve_path(const SymmetricMatrix& sigma, const PathConfig& config) {
  config.validate(sigma);
  std::vector<PathPoint> points;
  points.reserve(config.grid.size());
  points.push_back(make_path_point(1.0, sigma, *solve_pca(sigma, config.q).loading, true));
  for (std::size_t i = 1; i < config.grid.size(); ++i) {
    const double w = config.grid[i];
    const Matrix start = i == 1 ? Matrix((1.0 - config.start_shrink) * points.back().loading)
                                : points.back().loading;
    const SearchResult r = search_loading(
        sigma, start,
        [&sigma, w](const SymmetricMatrix& t) { return eval_path(t, sigma, w); }, true,
        config.search);
    points.push_back(make_path_point(w, sigma, delinearize(r.solution, sigma.dim(), config.q),
                                     !r.budget_exhausted));
  }
  return points;
}

inline std::string emit_path_csv(const std::vector<PathPoint>& points) {
  std::string out = "w,pca_loss,fa_loss,combined\n";
  for (const auto& pt : points) {
    out += format_double(pt.w) + "," + format_double(pt.pca_loss) + "," +
           format_double(pt.fa_loss) + "," + format_double(pt.combined) + "\n";
  }
  return out;
}

}  // namespace unifactor
