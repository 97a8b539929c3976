// Command-line front end: decomposition, covariance/precision estimation,
// global testing, portfolio backtesting, LDA error curves and the seeded
// experiment reproductions. Every subcommand writes a manifest next to its
// outputs; `rerun --manifest` replays a recorded run.
//
// Exit codes: 0 success (warnings allowed), 2 usage or input error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/hc.hpp"
#include "ddpca/lda.hpp"
#include "ddpca/portfolio.hpp"
#include "ddpca/projection.hpp"
#include "ddpca/simgen.hpp"
#include "ddpca/solvers.hpp"
#include "experiments.hpp"
#include "io.hpp"

namespace {

using ddpca::Index;
using ddpca::Matrix;
using ddpca::Vector;
using nlohmann::json;

constexpr const char* kSeedEnvVar = "DDPCA_SEED";

std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnvVar)) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw std::invalid_argument(std::string("bad ") + kSeedEnvVar + " value: " + env);
    }
  }
  return 20240817;
}

struct RunContext {
  std::string subcommand;
  json parameters;
  std::uint64_t master_seed = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void finish(const std::string& manifest_path) {
    ddpca::io::Manifest manifest;
    manifest.subcommand = subcommand;
    manifest.parameters = parameters;
    manifest.master_seed = master_seed;
    manifest.artifact_version = ddpca::kVersion;
    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.warnings = warnings;
    for (const auto& path : outputs) {
      manifest.output_digests[path] = ddpca::io::file_digest(path);
    }
    ddpca::io::write_manifest(manifest_path, manifest);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  }
};

ddpca::SolverConfig<double> config_from(const json& p) {
  ddpca::SolverConfig<double> config;
  config.c = p.value("c", 1.0);
  config.lambda = p.value("lambda", 1.0);
  config.rho = p.value("rho", 1.0);
  config.tol = p.value("tol", 1e-7);
  config.max_iter = p.value("max_iter", 0);
  return config;
}

// ---------------------------------------------------------------- decompose

void run_decompose(const json& p) {
  RunContext ctx;
  ctx.subcommand = "decompose";
  ctx.parameters = p;

  const std::string method = p.at("method").get<std::string>();
  const std::string prefix = p.value("out_prefix", std::string());
  const auto csv = ddpca::io::read_csv_matrix(p.at("input").get<std::string>());
  const Matrix<double> s = ddpca::io::require_symmetric_input(csv.values, ctx.warnings);

  ddpca::SolverConfig<double> config = config_from(p);
  const int rank = p.value("rank", 0);
  ddpca::Decomposition<double> dec;
  if (method == "onestep") {
    if (rank < 1) throw CLI::ValidationError("--rank is required for method 'onestep'");
    if (config.max_iter <= 0) config.max_iter = 1;
    dec = ddpca::one_step_ddpca(s, rank, config);
  } else if (method == "iterproj") {
    if (rank < 1) throw CLI::ValidationError("--rank is required for method 'iterproj'");
    if (config.max_iter <= 0) config.max_iter = 100;
    dec = ddpca::iterative_projection(s, rank, config);
  } else if (method == "admm") {
    if (config.max_iter <= 0) config.max_iter = 500;
    dec = ddpca::admm_relaxed(s, config);
  } else if (method == "admm-exact") {
    if (config.max_iter <= 0) config.max_iter = 500;
    dec = ddpca::admm_exact(s, config);
  } else {
    throw CLI::ValidationError("unknown method '" + method + "'");
  }
  if (!dec.converged) ctx.warnings.push_back("solver hit its iteration cap without converging");
  if (dec.input_psd_warning) ctx.warnings.push_back("input matrix is noticeably non-PSD");

  ddpca::io::write_csv_matrix(prefix + "L.csv", dec.low_rank);
  ddpca::io::write_csv_matrix(prefix + "A.csv", dec.dominant);
  std::vector<std::vector<std::string>> diag_rows;
  for (size_t t = 0; t < dec.residual_history.size(); ++t) {
    diag_rows.push_back({std::to_string(t + 1), ddpca::io::fmt_double(dec.residual_history[t]),
                         ddpca::io::fmt_double(dec.margin_history[t])});
  }
  diag_rows.push_back({"rank", std::to_string(static_cast<long long>(dec.rank_low_rank)), ""});
  ddpca::io::write_csv_table(prefix + "diagnostics.csv", {"iteration", "residual", "zeta"}, diag_rows);
  ctx.outputs = {prefix + "L.csv", prefix + "A.csv", prefix + "diagnostics.csv"};
  ctx.finish(prefix + "manifest.json");
}

// ----------------------------------------------------- estimate / precision

ddpca::CovEstimate<double> estimate_from_params(const json& p, RunContext& ctx) {
  const auto csv = ddpca::io::read_csv_matrix(p.at("data").get<std::string>());
  ddpca::EstimatorSpec spec;
  spec.method = p.at("method").get<std::string>();
  spec.rank = p.value("rank", 3);
  spec.threshold = p.value("threshold", 0.5);
  spec.c = p.value("c", 1.0);
  const auto est = ddpca::estimate<double>(csv.values, spec);
  if (est.decomposition && !est.decomposition->converged) {
    ctx.warnings.push_back("inner projection hit its iteration cap");
  }
  return est;
}

void run_estimate_cov(const json& p) {
  RunContext ctx;
  ctx.subcommand = "estimate-cov";
  ctx.parameters = p;
  const std::string prefix = p.value("out_prefix", std::string());
  const auto est = estimate_from_params(p, ctx);
  ddpca::io::write_csv_matrix(prefix + "sigma.csv", est.sigma);
  ctx.outputs = {prefix + "sigma.csv"};
  if (est.method == ddpca::CovMethod::ddpca) {
    ddpca::io::write_csv_matrix(prefix + "L.csv", est.low_rank);
    ddpca::io::write_csv_matrix(prefix + "A.csv", est.residual);
    ctx.outputs.push_back(prefix + "L.csv");
    ctx.outputs.push_back(prefix + "A.csv");
  }
  ctx.finish(prefix + "manifest.json");
}

void run_precision(const json& p) {
  RunContext ctx;
  ctx.subcommand = "precision";
  ctx.parameters = p;
  const std::string prefix = p.value("out_prefix", std::string());
  const std::string route = p.value("route", std::string("auto"));
  const auto est = estimate_from_params(p, ctx);

  Matrix<double> omega;
  if (route == "dense") {
    ddpca::CovEstimate<double> dense = est;
    dense.decomposition.reset();
    dense.method = ddpca::CovMethod::sample;
    omega = ddpca::precision_from_estimate(dense);
  } else {
    omega = ddpca::precision_from_estimate(est);
    if (route == "auto" && est.method == ddpca::CovMethod::ddpca) {
      // Cross-check the factor formula against plain dense inversion.
      ddpca::CovEstimate<double> dense = est;
      dense.decomposition.reset();
      dense.method = ddpca::CovMethod::sample;
      const Matrix<double> direct = ddpca::precision_from_estimate(dense);
      const double gap = (omega - direct).norm() / std::max(1.0, direct.norm());
      if (gap > 1e-8) {
        ctx.warnings.push_back("factor and dense inversion disagree by " + ddpca::io::fmt_double(gap));
      }
    }
  }
  ddpca::io::write_csv_matrix(prefix + "omega.csv", omega);
  ctx.outputs = {prefix + "omega.csv"};
  ctx.finish(prefix + "manifest.json");
}

// -------------------------------------------------------------- test-global

void run_test_global(const json& p) {
  RunContext ctx;
  ctx.subcommand = "test-global";
  ctx.parameters = p;
  ctx.master_seed = p.value("seed", default_seed());
  const std::string prefix = p.value("out_prefix", std::string());
  const std::string method = p.at("method").get<std::string>();
  const int rank = p.value("rank", 2);
  const int null_reps = p.value("null_reps", 1000);

  Vector<double> z;
  Matrix<double> sigma_hat;
  if (p.contains("data")) {
    const auto csv = ddpca::io::read_csv_matrix(p.at("data").get<std::string>());
    const Index n = csv.values.rows();
    z = csv.values.colwise().sum().transpose() / std::sqrt(static_cast<double>(n));
    sigma_hat = ddpca::sample_cov(csv.values);
  } else if (p.contains("zscores")) {
    z = ddpca::io::read_csv_vector(p.at("zscores").get<std::string>());
    if (p.contains("sigma")) {
      const auto csv = ddpca::io::read_csv_matrix(p.at("sigma").get<std::string>());
      sigma_hat = ddpca::io::require_symmetric_input(csv.values, ctx.warnings);
    } else {
      sigma_hat = Matrix<double>::Identity(z.size(), z.size());
      ctx.warnings.push_back("no --sigma given; using the identity");
    }
  } else {
    throw CLI::ValidationError("need --data or --zscores");
  }
  if (sigma_hat.rows() != z.size()) throw CLI::ValidationError("sigma size does not match z-scores");

  ddpca::SolverConfig<double> dd_config = ddpca::iterative_projection_defaults<double>();
  dd_config.max_iter = 20;
  const auto statistic_of = [&](const Vector<double>& zs, const Matrix<double>& sh) -> double {
    if (method == "chi2") return zs.squaredNorm();
    if (method == "max") return zs.cwiseAbs().maxCoeff();
    if (method == "ohc") return ddpca::ohc_test<double>(zs, sh.diagonal()).statistic;
    if (method == "ihc") return ddpca::reference_tests(zs, sh).ihc.statistic;
    if (method == "ihc-dd") return ddpca::ihc_dd_test(zs, sh, rank).statistic;
    if (method == "dd-hc") return ddpca::dd_hc_test(zs, sh, rank, dd_config).statistic;
    throw CLI::ValidationError("unknown test method '" + method + "'");
  };
  const double observed = statistic_of(z, sigma_hat);

  // Null calibration by simulation: draw z ~ N(0, sigma_hat) and recompute
  // the statistic against the same sigma_hat.
  const Matrix<double> chol = ddpca::detail::cholesky_lower(sigma_hat);
  int at_or_above = 0;
  for (int rep = 0; rep < null_reps; ++rep) {
    ddpca::RngStream stream(ctx.master_seed, static_cast<std::uint64_t>(rep));
    Vector<double> noise(z.size());
    for (Index j = 0; j < z.size(); ++j) noise[j] = stream.next_normal();
    const Vector<double> draw = ddpca::detail::lower_times(chol, noise);
    if (statistic_of(draw, sigma_hat) >= observed) ++at_or_above;
  }
  const double pvalue = (1.0 + at_or_above) / (null_reps + 1.0);

  std::cout << "method: " << method << "\nstatistic: " << ddpca::io::fmt_double(observed)
            << "\npvalue: " << ddpca::io::fmt_double(pvalue) << " (" << null_reps
            << " null simulations)\n";
  ddpca::io::write_csv_table(prefix + "test.csv", {"method", "statistic", "pvalue", "null_reps"},
                             {{method, ddpca::io::fmt_double(observed), ddpca::io::fmt_double(pvalue),
                               std::to_string(null_reps)}});
  ctx.outputs = {prefix + "test.csv"};
  ctx.finish(prefix + "manifest.json");
}

// ---------------------------------------------------------------- portfolio

std::vector<ddpca::EstimatorSpec> specs_from(const json& p) {
  std::vector<ddpca::EstimatorSpec> specs;
  for (const auto& name : p.at("methods").get<std::vector<std::string>>()) {
    ddpca::EstimatorSpec spec;
    spec.method = name;
    spec.rank = p.value("rank", 3);
    spec.threshold = p.value("threshold", 0.5);
    spec.c = p.value("c", 1.0);
    specs.push_back(spec);
  }
  return specs;
}

void run_portfolio(const json& p) {
  RunContext ctx;
  ctx.subcommand = "portfolio";
  ctx.parameters = p;
  const std::string prefix = p.value("out_prefix", std::string());
  const auto series = ddpca::io::read_return_series(p.at("returns").get<std::string>());
  const auto specs = specs_from(p);
  const auto result = ddpca::rolling_backtest<double>(series, p.value("window", 252), specs);

  std::vector<std::string> header{"month"};
  for (const auto& name : result.method_names) header.push_back("risk_" + name);
  for (const auto& name : result.method_names) header.push_back("r_" + name);
  std::vector<std::vector<std::string>> rows;
  for (Index m = 0; m < static_cast<Index>(result.months.size()); ++m) {
    std::vector<std::string> row{std::to_string(result.months[static_cast<size_t>(m)])};
    for (Index e = 0; e < result.risks.cols(); ++e) row.push_back(ddpca::io::fmt_double(result.risks(m, e)));
    for (Index e = 0; e < result.risks.cols(); ++e) {
      row.push_back(ddpca::io::fmt_double(result.improvement(m, e)));
    }
    rows.push_back(row);
  }
  ddpca::io::write_csv_table(prefix + "portfolio.csv", header, rows);
  ctx.outputs = {prefix + "portfolio.csv"};
  ctx.finish(prefix + "manifest.json");
}

// ---------------------------------------------------------------------- lda

void run_lda(const json& p) {
  RunContext ctx;
  ctx.subcommand = "lda";
  ctx.parameters = p;
  ctx.master_seed = p.value("seed", default_seed());
  const std::string prefix = p.value("out_prefix", std::string());
  const auto data = ddpca::io::read_labeled_dataset(p.at("train").get<std::string>());

  std::vector<ddpca::EstimatorSpec> specs;
  for (const auto& name : p.at("omega").get<std::vector<std::string>>()) {
    ddpca::EstimatorSpec spec;
    spec.method = name == "diag" ? "diagonal" : name;
    spec.rank = p.value("rank", 3);
    spec.threshold = p.value("threshold", 0.5);
    specs.push_back(spec);
  }
  const auto curve = ddpca::error_curve<double>(data, specs, p.value("folds", 5), ctx.master_seed);

  std::vector<std::string> header{"k"};
  for (const auto& name : curve.methods) header.push_back("errors_" + name);
  for (const auto& name : curve.methods) header.push_back("rate_" + name);
  std::vector<std::vector<std::string>> rows;
  for (Index k = 0; k < curve.errors.cols(); ++k) {
    std::vector<std::string> row{std::to_string(static_cast<long long>(k + 1))};
    for (Index v = 0; v < curve.errors.rows(); ++v) {
      row.push_back(ddpca::io::fmt_double(curve.errors(v, k)));
    }
    for (Index v = 0; v < curve.rates.rows(); ++v) {
      row.push_back(ddpca::io::fmt_double(curve.rates(v, k)));
    }
    rows.push_back(row);
  }
  ddpca::io::write_csv_table(prefix + "lda_curve.csv", header, rows);
  ctx.outputs = {prefix + "lda_curve.csv"};
  ctx.finish(prefix + "manifest.json");
}

// --------------------------------------------------------------- experiment

void run_experiment_cmd(const json& p) {
  RunContext ctx;
  ctx.subcommand = "experiment";
  ctx.parameters = p;
  ctx.master_seed = p.value("seed", default_seed());

  ddpca::exp::ExperimentOptions options;
  options.name = p.at("name").get<std::string>();
  options.scale = p.value("scale", std::string("desk"));
  options.seed = ctx.master_seed;
  options.out_dir = p.value("out_dir", std::string("."));
  options.reps = p.value("reps", 0);
  options.threads = p.value("threads", 0);
  const auto output = ddpca::exp::run_experiment(options);
  ctx.outputs = output.files;
  for (const auto& w : output.warnings) ctx.warnings.push_back(w);
  ctx.finish(ddpca::io::join_path(options.out_dir, options.name + "_manifest.json"));
}

// -------------------------------------------------------------------- rerun

void dispatch(const std::string& subcommand, const json& parameters);

void run_rerun(const std::string& manifest_path) {
  const auto manifest = ddpca::io::read_manifest(manifest_path);
  dispatch(manifest.subcommand, manifest.parameters);
}

void dispatch(const std::string& subcommand, const json& parameters) {
  if (subcommand == "decompose") return run_decompose(parameters);
  if (subcommand == "estimate-cov") return run_estimate_cov(parameters);
  if (subcommand == "precision") return run_precision(parameters);
  if (subcommand == "test-global") return run_test_global(parameters);
  if (subcommand == "portfolio") return run_portfolio(parameters);
  if (subcommand == "lda") return run_lda(parameters);
  if (subcommand == "experiment") return run_experiment_cmd(parameters);
  throw std::invalid_argument("manifest names unknown subcommand '" + subcommand + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank plus diagonally-dominant matrix decomposition toolkit"};
  app.require_subcommand(1);

  json p_dec, p_cov, p_prec, p_test, p_port, p_lda, p_expr;
  std::string manifest_path;

  auto* dec = app.add_subcommand("decompose", "Decompose a symmetric matrix into L + A");
  {
    static std::string input, method, prefix;
    static int rank = 0, max_iter = 0;
    static double c = 1.0, lambda = 1.0, rho = 1.0, tol = 1e-7;
    dec->add_option("--input", input, "CSV matrix")->required();
    dec->add_option("--method", method, "onestep|iterproj|admm|admm-exact")->required();
    dec->add_option("--rank", rank, "target rank K (onestep, iterproj)");
    dec->add_option("--c", c, "dominance constant");
    dec->add_option("--lambda", lambda, "nuclear-norm weight (admm)");
    dec->add_option("--rho", rho, "ADMM penalty");
    dec->add_option("--tol", tol, "relative-change stopping tolerance");
    dec->add_option("--max-iter", max_iter, "iteration cap (0 = method default)");
    dec->add_option("--out-prefix", prefix, "output file prefix");
    dec->callback([&]() {
      p_dec = {{"input", input}, {"method", method}, {"c", c},       {"lambda", lambda},
               {"rho", rho},     {"tol", tol},       {"max_iter", max_iter}, {"out_prefix", prefix}};
      if (rank > 0) p_dec["rank"] = rank;
      run_decompose(p_dec);
    });
  }

  auto* cov = app.add_subcommand("estimate-cov", "Estimate a covariance matrix from data rows");
  {
    static std::string data, method = "ddpca", prefix;
    static int rank = 3;
    static double threshold = 0.5, c = 1.0;
    cov->add_option("--data", data, "CSV data matrix, one observation per row")->required();
    cov->add_option("--method", method, "ddpca|poet|sample|diagonal");
    cov->add_option("--rank", rank, "factor count K");
    cov->add_option("--threshold", threshold, "poet correlation threshold in [0,1]");
    cov->add_option("--c", c, "dominance constant");
    cov->add_option("--out-prefix", prefix, "output file prefix");
    cov->callback([&]() {
      p_cov = {{"data", data},           {"method", method}, {"rank", rank},
               {"threshold", threshold}, {"c", c},           {"out_prefix", prefix}};
      run_estimate_cov(p_cov);
    });
  }

  auto* prec = app.add_subcommand("precision", "Estimate a precision matrix from data rows");
  {
    static std::string data, method = "ddpca", prefix, route = "auto";
    static int rank = 3;
    static double threshold = 0.5, c = 1.0;
    prec->add_option("--data", data, "CSV data matrix")->required();
    prec->add_option("--method", method, "ddpca|poet|sample|diagonal");
    prec->add_option("--rank", rank, "factor count K");
    prec->add_option("--threshold", threshold, "poet correlation threshold");
    prec->add_option("--c", c, "dominance constant");
    prec->add_option("--route", route, "auto|factor|dense inversion route");
    prec->add_option("--out-prefix", prefix, "output file prefix");
    prec->callback([&]() {
      p_prec = {{"data", data},           {"method", method}, {"rank", rank},
                {"threshold", threshold}, {"c", c},           {"route", route},
                {"out_prefix", prefix}};
      run_precision(p_prec);
    });
  }

  auto* test = app.add_subcommand("test-global", "Global null test on z-scores");
  {
    static std::string zscores, data, sigma, method = "dd-hc", prefix;
    static int rank = 2, null_reps = 1000;
    static std::uint64_t seed = 0;
    static bool seed_set = false;
    test->add_option("--zscores", zscores, "CSV vector of z-scores");
    test->add_option("--data", data, "CSV of repeated observations (z = column sum / sqrt(n))");
    test->add_option("--sigma", sigma, "CSV covariance for the z-scores");
    test->add_option("--method", method, "ohc|ihc|ihc-dd|dd-hc|chi2|max");
    test->add_option("--rank", rank, "factor count K");
    test->add_option("--null-reps", null_reps, "null-simulation count");
    test->add_option("--seed", seed, "master seed")->each([&](const std::string&) { seed_set = true; });
    test->add_option("--out-prefix", prefix, "output file prefix");
    test->callback([&]() {
      p_test = {{"method", method}, {"rank", rank}, {"null_reps", null_reps}, {"out_prefix", prefix}};
      if (!zscores.empty()) p_test["zscores"] = zscores;
      if (!data.empty()) p_test["data"] = data;
      if (!sigma.empty()) p_test["sigma"] = sigma;
      if (seed_set) p_test["seed"] = seed;
      run_test_global(p_test);
    });
  }

  auto* port = app.add_subcommand("portfolio", "Monthly rolling minimum-risk backtest");
  {
    static std::string returns, prefix;
    static std::vector<std::string> methods{"ddpca", "poet"};
    static int window = 252, rank = 3;
    static double threshold = 0.5;
    port->add_option("--returns", returns, "CSV with a leading date column")->required();
    port->add_option("--window", window, "trailing window length in days");
    port->add_option("--rank", rank, "factor count K");
    port->add_option("--threshold", threshold, "poet correlation threshold");
    port->add_option("--methods", methods, "estimators, first ddpca entry is the baseline")->delimiter(',');
    port->add_option("--out-prefix", prefix, "output file prefix");
    port->callback([&]() {
      p_port = {{"returns", returns},     {"window", window},       {"rank", rank},
                {"threshold", threshold}, {"methods", methods},     {"out_prefix", prefix}};
      run_portfolio(p_port);
    });
  }

  auto* lda = app.add_subcommand("lda", "Cross-validated LDA error-vs-k curves");
  {
    static std::string train, prefix;
    static std::vector<std::string> omega{"ddpca", "poet", "diag"};
    static int rank = 3, folds = 5;
    static double threshold = 0.5;
    static std::uint64_t seed = 0;
    static bool seed_set = false;
    lda->add_option("--train", train, "CSV with a leading 1/2 label column")->required();
    lda->add_option("--omega", omega, "precision variants: ddpca|poet|diag")->delimiter(',');
    lda->add_option("--rank", rank, "factor count K");
    lda->add_option("--threshold", threshold, "poet correlation threshold");
    lda->add_option("--folds", folds, "stratified fold count");
    lda->add_option("--seed", seed, "fold-shuffle seed")->each([&](const std::string&) { seed_set = true; });
    lda->add_option("--out-prefix", prefix, "output file prefix");
    lda->callback([&]() {
      p_lda = {{"train", train}, {"omega", omega},         {"rank", rank},
               {"folds", folds}, {"threshold", threshold}, {"out_prefix", prefix}};
      if (seed_set) p_lda["seed"] = seed;
      run_lda(p_lda);
    });
  }

  auto* expr = app.add_subcommand("experiment", "Reproduce a named simulation study");
  {
    static std::string name, scale = "desk", out_dir = ".", config_path;
    static std::uint64_t seed = 0;
    static bool seed_set = false;
    static int reps = 0, threads = 0;
    expr->add_option("--name", name, "exp1|exp2|exp3|exp4|exp5|fig1|fig5")->required();
    expr->add_option("--scale", scale, "desk|paper");
    expr->add_option("--seed", seed, "master seed")->each([&](const std::string&) { seed_set = true; });
    expr->add_option("--out-dir", out_dir, "output directory (must exist)");
    expr->add_option("--reps", reps, "override repetition count (0 = scale default)");
    expr->add_option("--threads", threads, "worker threads (0 = hardware)");
    expr->add_option("--config", config_path, "key = value overrides (scale, seed, reps, threads)");
    expr->callback([&]() {
      p_expr = {{"name", name}, {"scale", scale}, {"out_dir", out_dir}, {"reps", reps}, {"threads", threads}};
      if (seed_set) p_expr["seed"] = seed;
      if (!config_path.empty()) {
        for (const auto& [key, value] : ddpca::io::read_config(config_path)) {
          if (key == "scale") p_expr["scale"] = value;
          else if (key == "seed") p_expr["seed"] = std::stoull(value);
          else if (key == "reps") p_expr["reps"] = std::stoi(value);
          else if (key == "threads") p_expr["threads"] = std::stoi(value);
          else throw CLI::ValidationError("unknown config key '" + key + "'");
        }
      }
      run_experiment_cmd(p_expr);
    });
  }

  auto* rerun = app.add_subcommand("rerun", "Re-execute a recorded run from its manifest");
  rerun->add_option("--manifest", manifest_path, "manifest.json path")->required();
  rerun->callback([&]() { run_rerun(manifest_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ddpca::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
