#pragma once

// Command-line front end: reads a covariance (or raw data) CSV, runs one
// solver and writes a JSON or CSV artifact.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unifactor/unifactor.hpp"

namespace unifactor::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNonConvergence = 3;

struct RunRequest {
  std::string command;
  std::optional<std::string> cov_path;
  std::optional<std::string> data_path;
  std::string estimator = "ml";
  int q = 1;
  std::string method = "ls";
  std::string objective;
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<double> w;
  std::optional<std::string> base;
  std::optional<std::string> t_path;
  std::optional<std::string> v_path;
  std::vector<double> lambdas;
  std::vector<double> grid;
  int grid_steps = 20;
  std::optional<double> eps;
  std::optional<std::size_t> max_iters;
  std::optional<double> tol;
  bool stop_on_loewner = false;
  std::optional<double> step0;
  std::optional<double> search_eps;
  std::optional<std::size_t> max_evals;
  std::optional<std::string> out_path;
  /// json | csv; empty picks csv for path and sweep, json otherwise.
  std::string format;
};

namespace detail {

using nlohmann::json;

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

inline json to_json(const FitReport& r) {
  return {{"iterations", r.iterations},     {"converged", r.converged},
          {"stop_reason", r.stop_reason},   {"final_tolerance", r.final_tolerance},
          {"evaluations", r.evaluations},   {"warnings", r.warnings}};
}

inline SymmetricMatrix load_sigma(const RunRequest& req) {
  if (req.cov_path) return parse_matrix_csv(*req.cov_path);
  const Estimator est = req.estimator == "sample" ? Estimator::kSample : Estimator::kMl;
  return covariance_from_data(parse_data_csv(*req.data_path), est);
}

inline SearchOptions search_options(const RunRequest& req) {
  SearchOptions s;
  s.step0 = req.step0;
  if (req.search_eps) s.eps = *req.search_eps;
  if (const char* env = std::getenv("UNIFACTOR_MAX_EVALS")) {
    try {
      const long long n = std::stoll(env);
      unifactor::detail::require(n > 0, ErrorKind::kInvalidArgument,
                                 "UNIFACTOR_MAX_EVALS must be a positive integer");
      s.max_evaluations = static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kInvalidArgument, "UNIFACTOR_MAX_EVALS must be a positive integer");
    }
  }
  if (req.max_evals) s.max_evaluations = *req.max_evals;
  return s;
}

inline FaFitConfig fa_config(const RunRequest& req) {
  FaFitConfig c;
  c.q = req.q;
  c.lambda = req.lambda.value_or(0.0);
  if (req.eps) c.eps = *req.eps;
  if (req.max_iters) c.max_iters = *req.max_iters;
  c.stop_on_loewner = req.stop_on_loewner;
  return c;
}

inline std::optional<ElementaryLoss> parse_base(const std::optional<std::string>& name) {
  if (!name) return std::nullopt;
  if (*name == "trace") return ElementaryLoss::kTrace;
  if (*name == "spectral") return ElementaryLoss::kSpectral;
  if (*name == "frobenius") return ElementaryLoss::kFrobenius;
  if (*name == "rank") return ElementaryLoss::kRank;
  throw Error(ErrorKind::kInvalidArgument, "unknown base loss '" + *name + "'");
}

/// Text artifact plus whether the solver converged.
struct Artifact {
  std::string text;
  bool converged = true;
};

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json decomposition_json(const Decomposition& d) {
  json j;
  j["low_rank"] = to_json(d.low_rank.matrix());
  j["residual"] = to_json(d.residual.matrix());
  j["loading"] = d.loading ? to_json(*d.loading) : json(nullptr);
  j["rank"] = d.rank;
  j["warnings"] = d.warnings;
  return j;
}

inline Artifact run_pca(const RunRequest& req, const SymmetricMatrix& sigma) {
  const PcaReport r = pca_report(sigma, req.q);
  if (req.format == "csv") return {write_matrix_csv(r.decomposition.low_rank.matrix())};
  json j = decomposition_json(r.decomposition);
  j["command"] = "pca";
  j["q"] = req.q;
  j["eigenvalues"] = to_json(r.eigen.values);
  j["cumulative_proportion"] = r.cumulative_proportion;
  j["component_variances"] = to_json(r.component_variances);
  j["well_represented"] = r.well_represented;
  return {dump(j)};
}

inline Artifact run_fa(const RunRequest& req, const SymmetricMatrix& sigma) {
  std::optional<Decomposition> fitted;
  FitReport report;
  double objective = 0.0;
  if (req.method == "ml") {
    MlFit fit = fit_fa_ml(sigma, req.q, search_options(req));
    objective = fit.neg_loglik;
    fitted = std::move(fit.decomposition);
    report = std::move(fit.report);
  } else {
    const FaFitConfig config = fa_config(req);
    FaFit fit = req.method == "ls" ? fit_fa_ls(sigma, config) : fit_fa_pls(sigma, config);
    objective = fit.report.objective_trace.back();
    fitted = std::move(fit.decomposition);
    report = std::move(fit.report);
  }
  const Decomposition& d = *fitted;
  if (req.format == "csv") return {write_matrix_csv(d.low_rank.matrix()), report.converged};
  json j = decomposition_json(d);
  j["command"] = "fa";
  j["method"] = req.method;
  j["q"] = req.q;
  j["lambda"] = req.method == "pls" ? json(*req.lambda) : json(nullptr);
  j["v"] = to_json(d.residual.diag());
  j["v_fro"] = d.residual.matrix().norm();
  j["ls_loss"] = eval_ls(d.low_rank, d.residual, sigma);
  j["objective"] = objective;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["report"] = to_json(report);
  return {dump(j), report.converged};
}

inline Artifact run_sweep(const RunRequest& req, const SymmetricMatrix& sigma) {
  const auto rows = regularization_sweep(sigma, req.lambdas, fa_config(req));
  bool converged = true;
  for (const auto& r : rows) converged = converged && r.converged;
  if (req.format == "csv") return {emit_sweep_csv(rows), converged};
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"lambda", r.lambda}, {"v_fro", r.v_fro}, {"ls_loss", r.ls_loss},
                 {"converged", r.converged}});
  }
  return {dump(j), converged};
}

inline Artifact run_path(const RunRequest& req, const SymmetricMatrix& sigma) {
  PathConfig config;
  config.q = req.q;
  config.grid = req.grid.empty() ? uniform_grid(req.grid_steps) : req.grid;
  config.search = search_options(req);
  const auto points = solve_path(sigma, config);
  bool converged = true;
  for (const auto& pt : points) converged = converged && pt.converged;
  if (req.format == "csv") return {emit_path_csv(points), converged};
  json j = json::array();
  for (const auto& pt : points) {
    j.push_back({{"w", pt.w},
                 {"pca_loss", pt.pca_loss},
                 {"fa_loss", pt.fa_loss},
                 {"combined", pt.combined},
                 {"low_rank", to_json(pt.t.matrix())},
                 {"converged", pt.converged}});
  }
  return {dump(j), converged};
}

inline Artifact run_pcfm(const RunRequest& req, const SymmetricMatrix& sigma) {
  PcfmOptions options;
  if (req.tol) options.tol = *req.tol;
  if (req.max_iters) options.max_iters = *req.max_iters;
  options.search = search_options(req);
  const PcfmObjective objective = req.objective == "ml" ? PcfmObjective::kMl : PcfmObjective::kLs;
  const PcfmFit fit = fit_pcfm(sigma, req.q, objective, options);
  if (req.format == "csv") return {write_matrix_csv(fit.low_rank().matrix()), fit.report.converged};
  json j;
  j["gamma"] = to_json(fit.gamma);
  j["v"] = to_json(fit.v);
  j["basis"] = to_json(fit.basis);
  j["loading"] = to_json(fit.loading);
  j["objective"] = fit.objective;
  j["iterations"] = fit.report.iterations;
  j["converged"] = fit.report.converged;
  j["self_consistency_angle"] = fit.self_consistency_angle;
  j["report"] = to_json(fit.report);
  return {dump(j), fit.report.converged};
}

inline Artifact run_loss(const RunRequest& req, const SymmetricMatrix& sigma) {
  const auto family = parse_family(req.objective);
  if (!family) throw Error(ErrorKind::kInvalidArgument, "unknown objective '" + req.objective + "'");
  const ObjectiveSpec spec{*family, sigma, req.tau, req.lambda, req.w, parse_base(req.base)};
  spec.validate();
  unifactor::detail::require(req.t_path.has_value(), ErrorKind::kInvalidArgument,
                             "loss requires --t");
  const SymmetricMatrix t = parse_matrix_csv(*req.t_path);
  std::optional<SymmetricMatrix> v;
  if (req.v_path) v = parse_matrix_csv(*req.v_path);
  const double value = evaluate(spec, t, v);
  if (req.format == "csv") return {format_double(value) + "\n"};
  return {dump({{"objective", req.objective}, {"value", value}})};
}

inline void check_request(const RunRequest& req) {
  auto need = [](bool ok, const char* msg) {
    unifactor::detail::require(ok, ErrorKind::kInvalidArgument, msg);
  };
  need(req.cov_path.has_value() != req.data_path.has_value(),
       "exactly one of --cov and --data is required");
  if (req.command == "fa") {
    need(req.method != "pls" || req.lambda.has_value(), "fa --method pls requires --lambda");
    need(req.method == "pls" || !req.lambda.has_value(), "--lambda applies only to --method pls");
  }
  if (req.command == "sweep") need(!req.lambdas.empty(), "sweep requires --lambdas");
  if (req.command == "pcfm") need(req.objective == "ls" || req.objective == "ml",
                                  "pcfm --objective must be ls or ml");
}

inline Artifact dispatch(RunRequest req) {
  if (req.format.empty()) req.format = req.command == "path" || req.command == "sweep" ? "csv" : "json";
  check_request(req);
  const SymmetricMatrix sigma = load_sigma(req);
  if (req.command == "pca") return run_pca(req, sigma);
  if (req.command == "fa") return run_fa(req, sigma);
  if (req.command == "sweep") return run_sweep(req, sigma);
  if (req.command == "path") return run_path(req, sigma);
  if (req.command == "pcfm") return run_pcfm(req, sigma);
  return run_loss(req, sigma);
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIterationFailure:
    case ErrorKind::kDegenerateBasis:
      return kExitNonConvergence;
    default:
      return kExitValidation;
  }
}

}  // namespace detail

/// Execute a parsed request, writing the artifact to req.out_path (or out).
inline int execute(const RunRequest& req, std::ostream& out, std::ostream& err) {
  try {
    const detail::Artifact artifact = detail::dispatch(req);
    if (req.out_path) {
      std::ofstream file(*req.out_path, std::ios::binary);
      if (!file || !(file << artifact.text)) {
        err << "error: cannot write '" << *req.out_path << "'\n";
        return kExitFailure;
      }
    } else {
      out << artifact.text;
    }
    if (!artifact.converged) {
      err << "warning: solver did not converge\n";
      return kExitNonConvergence;
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return detail::exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Covariance fitting: PCA, factor analysis, PCA-FA path and PCFM"};
  app.require_subcommand(1);
  RunRequest req;

  auto add_input = [&](CLI::App* sub) {
    auto* cov = sub->add_option("--cov", req.cov_path, "Covariance matrix CSV");
    auto* data = sub->add_option("--data", req.data_path, "Raw data CSV (rows = observations)");
    cov->excludes(data);
    sub->add_option("--estimator", req.estimator, "Covariance estimator for --data")
        ->check(CLI::IsMember({"ml", "sample"}));
    sub->add_option("--out", req.out_path, "Output file (default stdout)");
    sub->add_option("--format", req.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  };
  auto add_q = [&](CLI::App* sub) {
    sub->add_option("--q", req.q, "Number of factors")->check(CLI::PositiveNumber);
  };
  auto add_search = [&](CLI::App* sub) {
    sub->add_option("--step0", req.step0, "Initial search step")->check(CLI::PositiveNumber);
    sub->add_option("--search-eps", req.search_eps, "Search step threshold")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-evals", req.max_evals, "Search evaluation budget")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* pca = app.add_subcommand("pca", "Truncated eigendecomposition and cumulative proportion");
  add_input(pca);
  add_q(pca);

  CLI::App* fa = app.add_subcommand("fa", "Factor analysis fit");
  add_input(fa);
  add_q(fa);
  add_search(fa);
  fa->add_option("--method", req.method, "ls | pls | ml")->check(CLI::IsMember({"ls", "pls", "ml"}));
  fa->add_option("--lambda", req.lambda, "Penalty weight for pls")->check(CLI::NonNegativeNumber);
  fa->add_option("--eps", req.eps, "Coordinate-descent tolerance")->check(CLI::PositiveNumber);
  fa->add_option("--max-iters", req.max_iters, "Coordinate-descent iteration cap");
  fa->add_flag("--stop-on-loewner", req.stop_on_loewner, "Stop when V <= Sigma fails");

  CLI::App* sweep = app.add_subcommand("sweep", "Penalized least squares over a list of lambdas");
  add_input(sweep);
  add_q(sweep);
  sweep->add_option("--lambdas", req.lambdas, "Comma-separated lambdas")
      ->delimiter(',')
      ->required()
      ->check(CLI::NonNegativeNumber);
  sweep->add_option("--eps", req.eps, "Coordinate-descent tolerance")->check(CLI::PositiveNumber);
  sweep->add_option("--max-iters", req.max_iters, "Coordinate-descent iteration cap");
  sweep->add_flag("--stop-on-loewner", req.stop_on_loewner, "Stop when V <= Sigma fails");

  CLI::App* path = app.add_subcommand("path", "PCA to FA homotopy path");
  add_input(path);
  add_q(path);
  add_search(path);
  path->add_option("--grid", req.grid, "Comma-separated decreasing w grid from 1 to 0")
      ->delimiter(',');
  path->add_option("--grid-steps", req.grid_steps, "Uniform grid steps")->check(CLI::PositiveNumber);

  CLI::App* pcfm = app.add_subcommand("pcfm", "Principal component factor model");
  add_input(pcfm);
  add_q(pcfm);
  add_search(pcfm);
  pcfm->add_option("--objective", req.objective, "ls | ml")
      ->required()
      ->check(CLI::IsMember({"ls", "ml"}));
  pcfm->add_option("--tol", req.tol, "Outer-loop tolerance")->check(CLI::PositiveNumber);
  pcfm->add_option("--max-iters", req.max_iters, "Outer-loop iteration cap");

  CLI::App* loss = app.add_subcommand("loss", "Evaluate a loss at a given T (and V)");
  add_input(loss);
  loss->add_option("--objective", req.objective, "Loss family name")->required();
  loss->add_option("--t", req.t_path, "T matrix CSV")->required();
  loss->add_option("--v", req.v_path, "V matrix CSV (two-matrix losses)");
  loss->add_option("--tau", req.tau, "Exponent for f_tau");
  loss->add_option("--lambda", req.lambda, "Penalty weight");
  loss->add_option("--w", req.w, "Path weight");
  loss->add_option("--base", req.base, "Inner loss: trace | spectral | frobenius | rank");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  for (CLI::App* sub : {pca, fa, sweep, path, pcfm, loss}) {
    if (sub->parsed()) req.command = sub->get_name();
  }
  return execute(req, out, err);
}

}  // namespace unifactor::cli
