#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddpca/covariance.hpp"
#include "ddpca/hc.hpp"
#include "ddpca/linalg.hpp"
#include "ddpca/projection.hpp"
#include "ddpca/rng.hpp"
#include "ddpca/simgen.hpp"
#include "ddpca/solvers.hpp"
#include "io.hpp"

namespace ddpca::exp {

namespace {

using ddpca::io::fmt_double;

using ddpca::io::join_path;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return mix64(seed ^ mix64(tag)); }

struct Row {
  std::vector<std::string> cells;
  Row& add(const std::string& s) {
    cells.push_back(s);
    return *this;
  }
  Row& add(double v) { return add(fmt_double(v)); }
  Row& add(Index v) { return add(std::to_string(static_cast<long long>(v))); }
  Row& add(int v) { return add(std::to_string(v)); }
};

// Shared metric row for a recovered decomposition against its ground truth.
MetricRow decomposition_metrics(const Matrix<double>& s, const Matrix<double>& low_truth,
                                const Matrix<double>& dom_truth, const Decomposition<double>& dec) {
  MetricRow row;
  row.emplace_back("rank", static_cast<double>(dec.rank_low_rank));
  row.emplace_back("res", (dec.low_rank + dec.dominant - s).norm() / s.norm());
  row.emplace_back("lerr", (dec.low_rank - low_truth).norm() / low_truth.norm());
  row.emplace_back("aerr", (dec.dominant - dom_truth).norm() / dom_truth.norm());
  return row;
}

void add_summary_cells(Row& row, const ExperimentReport& report) {
  row.add(report.mean("rank"));
  double rank_min = std::numeric_limits<double>::infinity();
  double rank_max = -rank_min;
  for (const double v : report.samples.at("rank")) {
    rank_min = std::min(rank_min, v);
    rank_max = std::max(rank_max, v);
  }
  row.add(rank_min).add(rank_max);
  for (const char* name : {"res", "lerr", "aerr"}) {
    row.add(report.mean(name)).add(report.standard_error(name));
  }
  row.add(report.completed_reps);
}

ExperimentOutput run_exp1(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const std::vector<Index> p_list = paper ? std::vector<Index>{500} : std::vector<Index>{100};
  const int reps = opt.reps > 0 ? opt.reps : 20;

  std::vector<std::vector<std::string>> admm_rows;
  for (size_t i = 0; i < p_list.size(); ++i) {
    const Index p = p_list[i];
    const Index k = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(p))));
    SolverConfig<double> config;
    config.tol = 0;  // run the fixed iteration budget
    config.max_iter = 20;
    const ExperimentReport report = run_monte_carlo(
        sub_seed(opt.seed, 100 + i), reps,
        [&](int, RngStream& stream) {
          const ExactDecomp gen = gen_exact_decomp(p, k, stream);
          return decomposition_metrics(gen.sum, gen.low_rank, gen.dominant, admm_exact(gen.sum, config));
        },
        opt.threads);
    Row row;
    row.add(p).add(k);
    add_summary_cells(row, report);
    admm_rows.push_back(row.cells);
  }
  const std::string admm_path = join_path(opt.out_dir, "exp1_admm.csv");
  ddpca::io::write_csv_table(admm_path,
                             {"p", "K", "rank_mean", "rank_min", "rank_max", "res_mean", "res_se",
                              "lerr_mean", "lerr_se", "aerr_mean", "aerr_se", "reps"},
                             admm_rows);

  // Iterative-projection trace: margin and residual per iteration.
  std::vector<std::vector<std::string>> trace_rows;
  const std::vector<Index> trace_p = paper ? std::vector<Index>{500} : std::vector<Index>{50, 100};
  for (const Index p : trace_p) {
    const Index k = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(p))));
    RngStream stream(sub_seed(opt.seed, 200 + static_cast<std::uint64_t>(p)), 0);
    const ExactDecomp gen = gen_exact_decomp(p, k, stream);
    SolverConfig<double> config = iterative_projection_defaults<double>();
    config.tol = 0;
    config.max_iter = 20;
    const Decomposition<double> dec = iterative_projection(gen.sum, k, config);
    for (size_t t = 0; t < dec.residual_history.size(); ++t) {
      Row row;
      row.add(p).add(static_cast<int>(t + 1)).add(dec.margin_history[t]).add(dec.residual_history[t]);
      trace_rows.push_back(row.cells);
    }
  }
  const std::string trace_path = join_path(opt.out_dir, "exp1_iterproj_trace.csv");
  ddpca::io::write_csv_table(trace_path, {"p", "iteration", "zeta", "residual"}, trace_rows);
  return {{admm_path, trace_path}, {}};
}

ExperimentOutput run_exp2(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const Index p = paper ? 500 : 100;
  const Index k = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(p))));
  const int reps = opt.reps > 0 ? opt.reps : 20;
  const double sigma = 1.0;

  SolverConfig<double> admm_config;
  admm_config.lambda = 3.0;
  admm_config.tol = 0;
  admm_config.max_iter = 50;
  const ExperimentReport admm_report = run_monte_carlo(
      sub_seed(opt.seed, 300), reps,
      [&](int, RngStream& stream) {
        const NoisyDecomp gen = gen_noisy_decomp(p, k, sigma, stream);
        return decomposition_metrics(gen.sum, gen.low_rank, gen.dominant, admm_relaxed(gen.sum, admm_config));
      },
      opt.threads);
  Row admm_row;
  admm_row.add(p).add(k).add(sigma).add(admm_config.lambda);
  add_summary_cells(admm_row, admm_report);
  const std::string admm_path = join_path(opt.out_dir, "exp2_admm.csv");
  ddpca::io::write_csv_table(admm_path,
                             {"p", "K", "sigma", "lambda", "rank_mean", "rank_min", "rank_max", "res_mean",
                              "res_se", "lerr_mean", "lerr_se", "aerr_mean", "aerr_se", "reps"},
                             {admm_row.cells});

  // Iterative projection curves: residual vs noise level and vs plug-in rank.
  const int curve_reps = opt.reps > 0 ? opt.reps : (paper ? 20 : 5);
  SolverConfig<double> iter_config = iterative_projection_defaults<double>();
  iter_config.tol = 0;
  iter_config.max_iter = 20;

  std::vector<std::vector<std::string>> sigma_rows;
  const std::vector<double> sigmas{0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  for (size_t i = 0; i < sigmas.size(); ++i) {
    const ExperimentReport report = run_monte_carlo(
        sub_seed(opt.seed, 400 + i), curve_reps,
        [&](int, RngStream& stream) {
          const NoisyDecomp gen = gen_noisy_decomp(p, k, sigmas[i], stream);
          const Decomposition<double> dec = iterative_projection(gen.sum, k, iter_config);
          MetricRow row;
          row.emplace_back("res", (dec.low_rank + dec.dominant - gen.sum).norm() / gen.sum.norm());
          return row;
        },
        opt.threads);
    Row row;
    row.add(p).add(sigmas[i]).add(report.mean("res")).add(report.standard_error("res"));
    sigma_rows.push_back(row.cells);
  }
  const std::string sigma_path = join_path(opt.out_dir, "exp2_sigma_curve.csv");
  ddpca::io::write_csv_table(sigma_path, {"p", "sigma", "res_mean", "res_se"}, sigma_rows);

  std::vector<std::vector<std::string>> ratio_rows;
  for (int pct = 1; pct <= 10; ++pct) {
    const Index k_ratio = std::max<Index>(1, (p * pct) / 100);
    const ExperimentReport report = run_monte_carlo(
        sub_seed(opt.seed, 500 + static_cast<std::uint64_t>(pct)), curve_reps,
        [&](int, RngStream& stream) {
          const NoisyDecomp gen = gen_noisy_decomp(p, k_ratio, sigma, stream);
          const Decomposition<double> dec = iterative_projection(gen.sum, k_ratio, iter_config);
          MetricRow row;
          row.emplace_back("res", (dec.low_rank + dec.dominant - gen.sum).norm() / gen.sum.norm());
          return row;
        },
        opt.threads);
    Row row;
    row.add(p).add(static_cast<double>(pct) / 100.0).add(report.mean("res")).add(report.standard_error("res"));
    ratio_rows.push_back(row.cells);
  }
  const std::string ratio_path = join_path(opt.out_dir, "exp2_rank_curve.csv");
  ddpca::io::write_csv_table(ratio_path, {"p", "k_over_p", "res_mean", "res_se"}, ratio_rows);

  return {{admm_path, sigma_path, ratio_path}, {}};
}

ExperimentOutput run_exp3(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const Index p = paper ? 500 : 100;
  const Index k = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(p))));
  RngStream stream(sub_seed(opt.seed, 600), 0);
  const ExactDecomp gen = gen_exact_decomp(p, k, stream);

  SolverConfig<double> config = iterative_projection_defaults<double>();
  config.tol = 0;
  config.max_iter = 20;
  const Decomposition<double> dec = iterative_projection(gen.sum, k, config);
  const Matrix<double> pca_residual = gen.sum - rank_k_approx(gen.sum, k);

  const auto standardized = [p](const Matrix<double>& a) {
    std::vector<double> values;
    values.reserve(static_cast<size_t>(p) * static_cast<size_t>(p - 1));
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        if (i != j) values.push_back(a(i, j) / std::sqrt(a(i, i) * a(j, j)));
      }
    }
    return values;
  };
  const std::vector<double> dd_values = standardized(dec.dominant);
  const std::vector<double> pca_values = standardized(pca_residual);

  double max_abs = 0;
  for (const double v : dd_values) max_abs = std::max(max_abs, std::abs(v));
  for (const double v : pca_values) max_abs = std::max(max_abs, std::abs(v));
  const int bins = 61;
  const double width = 2 * max_abs / bins;
  std::vector<long> dd_counts(bins, 0), pca_counts(bins, 0);
  const auto fill = [&](const std::vector<double>& values, std::vector<long>& counts) {
    for (const double v : values) {
      int bin = static_cast<int>((v + max_abs) / width);
      bin = std::clamp(bin, 0, bins - 1);
      ++counts[static_cast<size_t>(bin)];
    }
  };
  fill(dd_values, dd_counts);
  fill(pca_values, pca_counts);

  std::vector<std::vector<std::string>> rows;
  for (int b = 0; b < bins; ++b) {
    Row row;
    row.add(-max_abs + b * width).add(-max_abs + (b + 1) * width);
    row.add(static_cast<int>(dd_counts[static_cast<size_t>(b)]));
    row.add(static_cast<int>(pca_counts[static_cast<size_t>(b)]));
    rows.push_back(row.cells);
  }
  const std::string hist_path = join_path(opt.out_dir, "exp3_residual_hist.csv");
  ddpca::io::write_csv_table(hist_path, {"bin_lo", "bin_hi", "count_ddpca", "count_pca"}, rows);

  std::vector<std::vector<std::string>> margin_rows;
  Row margin_row;
  margin_row.add(p).add(k).add(dd_margin(dec.dominant)).add(dd_margin(pca_residual));
  margin_rows.push_back(margin_row.cells);
  const std::string margin_path = join_path(opt.out_dir, "exp3_margins.csv");
  ddpca::io::write_csv_table(margin_path, {"p", "K", "zeta_ddpca", "zeta_pca"}, margin_rows);
  return {{hist_path, margin_path}, {}};
}

ExperimentOutput run_exp4(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const Index p = paper ? 500 : 100;
  const Index k_true = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * static_cast<double>(p))));
  const int reps = opt.reps > 0 ? opt.reps : 20;
  std::vector<Index> ks;
  if (paper) {
    for (Index k = 5; k <= 50; k += 5) ks.push_back(k);
  } else {
    for (Index k = 1; k <= 10; ++k) ks.push_back(k);
  }

  SolverConfig<double> config = iterative_projection_defaults<double>();
  config.tol = 0;
  config.max_iter = 10;  // solutions after ten iterations

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < ks.size(); ++i) {
    const Index k_plug = ks[i];
    const ExperimentReport report = run_monte_carlo(
        sub_seed(opt.seed, 700 + i), reps,
        [&](int, RngStream& stream) {
          const ExactDecomp gen = gen_exact_decomp(p, k_true, stream);
          const Decomposition<double> dec = iterative_projection(gen.sum, k_plug, config);
          MetricRow row;
          row.emplace_back("frob", (dec.low_rank - gen.low_rank).norm() / gen.low_rank.norm());
          row.emplace_back("spec", spectral_norm<double>(symmetrize<double>(dec.low_rank - gen.low_rank)) /
                                       spectral_norm<double>(gen.low_rank));
          return row;
        },
        opt.threads);
    Row row;
    row.add(p).add(k_true).add(k_plug);
    row.add(report.mean("frob")).add(report.standard_error("frob"));
    row.add(report.mean("spec")).add(report.standard_error("spec"));
    row.add(report.completed_reps);
    rows.push_back(row.cells);
  }
  const std::string path = join_path(opt.out_dir, "exp4_rank_robustness.csv");
  ddpca::io::write_csv_table(
      path, {"p", "K_true", "k_plug", "frob_mean", "frob_se", "spec_mean", "spec_se", "reps"}, rows);
  return {{path}, {}};
}

ExperimentOutput run_exp5(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const std::vector<Index> p_list = paper ? std::vector<Index>{100, 300, 500} : std::vector<Index>{100};
  const Index k_true = 3;
  const Index n = 200;
  const int reps = opt.reps > 0 ? opt.reps : (paper ? 100 : 50);
  const std::vector<double> threshold_grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};

  std::vector<std::vector<std::string>> rows;
  for (size_t pi = 0; pi < p_list.size(); ++pi) {
    const Index p = p_list[pi];
    const Matrix<double> noise_cov = ar_noise_cov(p, 0.5, 1);
    const EigenSystem<double> es = eig_sym(noise_cov);
    const Matrix<double> noise_prec =
        symmetrize<double>(es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());

    const ExperimentReport report = run_monte_carlo(
        sub_seed(opt.seed, 800 + pi), reps,
        [&](int, RngStream& stream) {
          const FactorCovSample sample = gen_factor_cov(p, n, k_true, stream);
          const EigenSystem<double> sig_es = eig_sym(sample.sigma);
          const Matrix<double> sigma_inv = symmetrize<double>(
              sig_es.vectors * sig_es.values.cwiseInverse().asDiagonal() * sig_es.vectors.transpose());
          MetricRow row;
          for (Index k = 1; k <= 6; ++k) {
            const CovEstimate<double> est = estimate_ddpca<double>(sample.data, k);
            const ErrorReport<double> err =
                error_report(est, sample.sigma, sigma_inv, sample.noise_cov, noise_prec);
            const std::string tag = "dd_k" + std::to_string(k);
            row.emplace_back(tag + "_a_frob", err.residual_frob);
            row.emplace_back(tag + "_a_spec", err.residual_spec);
            row.emplace_back(tag + "_ainv_frob", err.residual_inv_frob);
            row.emplace_back(tag + "_ainv_spec", err.residual_inv_spec);
            row.emplace_back(tag + "_sigma_frob", err.sigma_frob);
            row.emplace_back(tag + "_sigma_spec", err.sigma_spec);
            row.emplace_back(tag + "_prec_frob", err.precision_frob);
            row.emplace_back(tag + "_prec_spec", err.precision_spec);
          }
          for (size_t a = 0; a < threshold_grid.size(); ++a) {
            const CovEstimate<double> est = estimate_poet<double>(sample.data, k_true, threshold_grid[a]);
            const ErrorReport<double> err =
                error_report(est, sample.sigma, sigma_inv, sample.noise_cov, noise_prec);
            const std::string tag = "poet_a" + std::to_string(a);
            row.emplace_back(tag + "_a_frob", err.residual_frob);
            row.emplace_back(tag + "_a_spec", err.residual_spec);
            row.emplace_back(tag + "_ainv_frob", err.residual_inv_frob);
            row.emplace_back(tag + "_ainv_spec", err.residual_inv_spec);
          }
          return row;
        },
        opt.threads);

    for (Index k = 1; k <= 6; ++k) {
      const std::string tag = "dd_k" + std::to_string(k);
      Row row;
      row.add(p).add("ddpca").add(k);
      for (const char* part : {"_a_frob", "_a_spec", "_ainv_frob", "_ainv_spec", "_sigma_frob",
                               "_sigma_spec", "_prec_frob", "_prec_spec"}) {
        row.add(report.mean(tag + part));
      }
      row.add(report.completed_reps);
      rows.push_back(row.cells);
    }
    // Oracle POET row: per error measure, the best mean over the threshold grid.
    Row poet_row;
    poet_row.add(p).add("poet_oracle").add(k_true);
    for (const char* part : {"_a_frob", "_a_spec", "_ainv_frob", "_ainv_spec"}) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t a = 0; a < threshold_grid.size(); ++a) {
        best = std::min(best, report.mean("poet_a" + std::to_string(a) + part));
      }
      poet_row.add(best);
    }
    poet_row.add(std::numeric_limits<double>::quiet_NaN());
    poet_row.add(std::numeric_limits<double>::quiet_NaN());
    poet_row.add(std::numeric_limits<double>::quiet_NaN());
    poet_row.add(std::numeric_limits<double>::quiet_NaN());
    poet_row.add(report.completed_reps);
    rows.push_back(poet_row.cells);
  }
  const std::string path = join_path(opt.out_dir, "exp5_table3.csv");
  ddpca::io::write_csv_table(path,
                             {"p", "method", "k", "a_frob", "a_spec", "ainv_frob", "ainv_spec",
                              "sigma_frob", "sigma_spec", "prec_frob", "prec_spec", "reps"},
                             rows);
  return {{path}, {}};
}

ExperimentOutput run_fig1(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const Index p = paper ? 2000 : 500;
  const Index n = 200;
  const Index k_true = 3;
  const int reps = opt.reps > 0 ? opt.reps : (paper ? 100 : 20);
  const std::vector<Index> k_list{3, 4, 5, 6, 7, 8};
  const std::vector<double> threshold_grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};

  const ExperimentReport report = run_monte_carlo(
      sub_seed(opt.seed, 900), reps,
      [&](int, RngStream& stream) {
        const FactorCovSample sample = gen_factor_cov(p, n, k_true, stream);
        const EigenSystem<double> sig_es = eig_sym(sample.sigma);
        const Matrix<double> sigma_inv = symmetrize<double>(
            sig_es.vectors * sig_es.values.cwiseInverse().asDiagonal() * sig_es.vectors.transpose());
        const Matrix<double> noise_prec = [&] {
          const EigenSystem<double> es = eig_sym(sample.noise_cov);
          return symmetrize<double>(es.vectors * es.values.cwiseInverse().asDiagonal() *
                                    es.vectors.transpose());
        }();
        MetricRow row;
        for (const Index k : k_list) {
          const CovEstimate<double> dd = estimate_ddpca<double>(sample.data, k);
          const ErrorReport<double> err =
              error_report(dd, sample.sigma, sigma_inv, sample.noise_cov, noise_prec);
          const std::string tag = "dd_k" + std::to_string(k);
          row.emplace_back(tag + "_sigma_frob", err.sigma_frob);
          row.emplace_back(tag + "_sigma_spec", err.sigma_spec);
          row.emplace_back(tag + "_prec_frob", err.precision_frob);
          row.emplace_back(tag + "_prec_spec", err.precision_spec);
          row.emplace_back(tag + "_a_frob", err.residual_frob);
          row.emplace_back(tag + "_a_spec", err.residual_spec);
          row.emplace_back(tag + "_ainv_frob", err.residual_inv_frob);
          row.emplace_back(tag + "_ainv_spec", err.residual_inv_spec);
          for (size_t a = 0; a < threshold_grid.size(); ++a) {
            const CovEstimate<double> poet = estimate_poet<double>(sample.data, k, threshold_grid[a]);
            const ErrorReport<double> perr =
                error_report(poet, sample.sigma, sigma_inv, sample.noise_cov, noise_prec);
            const std::string ptag = "poet_k" + std::to_string(k) + "_a" + std::to_string(a);
            row.emplace_back(ptag + "_sigma_frob", perr.sigma_frob);
            row.emplace_back(ptag + "_sigma_spec", perr.sigma_spec);
            row.emplace_back(ptag + "_prec_frob", perr.precision_frob);
            row.emplace_back(ptag + "_prec_spec", perr.precision_spec);
            row.emplace_back(ptag + "_a_frob", perr.residual_frob);
            row.emplace_back(ptag + "_a_spec", perr.residual_spec);
            row.emplace_back(ptag + "_ainv_frob", perr.residual_inv_frob);
            row.emplace_back(ptag + "_ainv_spec", perr.residual_inv_spec);
          }
        }
        return row;
      },
      opt.threads);

  const std::vector<const char*> parts{"_sigma_frob", "_sigma_spec", "_prec_frob", "_prec_spec",
                                       "_a_frob", "_a_spec", "_ainv_frob", "_ainv_spec"};
  std::vector<std::vector<std::string>> rows;
  for (const Index k : k_list) {
    Row dd_row;
    dd_row.add(p).add("ddpca").add(k);
    for (const char* part : parts) dd_row.add(report.mean("dd_k" + std::to_string(k) + part));
    dd_row.add(report.completed_reps);
    rows.push_back(dd_row.cells);

    Row poet_row;
    poet_row.add(p).add("poet_oracle").add(k);
    for (const char* part : parts) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t a = 0; a < threshold_grid.size(); ++a) {
        best = std::min(best,
                        report.mean("poet_k" + std::to_string(k) + "_a" + std::to_string(a) + part));
      }
      poet_row.add(best);
    }
    poet_row.add(report.completed_reps);
    rows.push_back(poet_row.cells);
  }
  const std::string path = join_path(opt.out_dir, "fig1_errors.csv");
  ddpca::io::write_csv_table(path,
                             {"p", "method", "k", "sigma_frob", "sigma_spec", "prec_frob", "prec_spec",
                              "a_frob", "a_spec", "ainv_frob", "ainv_spec", "reps"},
                             rows);
  return {{path}, {}};
}

ExperimentOutput run_fig5(const ExperimentOptions& opt) {
  const bool paper = opt.scale == "paper";
  const Index n = 50;
  const Index rank = 2;  // factor count of the testing model
  const int reps = opt.reps > 0 ? opt.reps : (paper ? 1000 : 500);
  const std::vector<Index> p_list{100, 200};
  const std::vector<Index> s_list{5, 10};
  const std::vector<double> tau_list{0.3, 0.5};

  SolverConfig<double> dd_config = iterative_projection_defaults<double>();
  dd_config.max_iter = 20;

  std::vector<std::vector<std::string>> rows;
  std::uint64_t grid_tag = 0;
  for (const Index p : p_list) {
    for (const Index s : s_list) {
      for (const double tau : tau_list) {
        ++grid_tag;
        RngStream model_stream(sub_seed(opt.seed, 1000 + grid_tag), 0);
        const TestingModel model = TestingModel::make(p, n, s, tau, model_stream);

        const auto stats_for = [&](const TestingModel::Draw& draw) {
          std::vector<std::pair<std::string, double>> stats;
          const ReferenceStatistics<double> ref = reference_tests(draw.zscores, draw.sigma_hat);
          stats.emplace_back("chi2", ref.chi2);
          stats.emplace_back("max", ref.max_abs);
          stats.emplace_back("ohc", ref.ohc.statistic);
          stats.emplace_back("ihc", ref.ihc.statistic);
          stats.emplace_back("ihc_dd", ihc_dd_test(draw.zscores, draw.sigma_hat, rank).statistic);
          stats.emplace_back("dd_hc", dd_hc_test(draw.zscores, draw.sigma_hat, rank, dd_config).statistic);
          return stats;
        };

        const ExperimentReport report = run_monte_carlo(
            sub_seed(opt.seed, 2000 + grid_tag), reps,
            [&](int, RngStream& stream) {
              MetricRow row;
              const TestingModel::Draw null_draw = model.draw(stream, false);
              for (const auto& [name, value] : stats_for(null_draw)) {
                row.emplace_back(name + "_null", value);
              }
              const TestingModel::Draw alt_draw = model.draw(stream, true);
              for (const auto& [name, value] : stats_for(alt_draw)) {
                row.emplace_back(name + "_alt", value);
              }
              return row;
            },
            opt.threads);

        for (const char* test : {"chi2", "max", "ohc", "ihc", "ihc_dd", "dd_hc"}) {
          const auto& null_stats = report.samples.at(std::string(test) + "_null");
          const auto& alt_stats = report.samples.at(std::string(test) + "_alt");
          Row row;
          row.add(p).add(s).add(tau).add(test).add(ideal_testing_error(null_stats, alt_stats));
          row.add(report.completed_reps);
          rows.push_back(row.cells);
        }
      }
    }
  }
  const std::string path = join_path(opt.out_dir, "fig5_errors.csv");
  ddpca::io::write_csv_table(path, {"p", "s", "tau", "test", "ideal_error", "reps"}, rows);
  return {{path}, {}};
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentOptions& options) {
  if (options.scale != "desk" && options.scale != "paper") {
    throw std::invalid_argument("experiment scale must be 'desk' or 'paper'");
  }
  if (options.name == "exp1") return run_exp1(options);
  if (options.name == "exp2") return run_exp2(options);
  if (options.name == "exp3") return run_exp3(options);
  if (options.name == "exp4") return run_exp4(options);
  if (options.name == "exp5") return run_exp5(options);
  if (options.name == "fig1") return run_fig1(options);
  if (options.name == "fig5") return run_fig5(options);
  throw std::invalid_argument("unknown experiment '" + options.name + "'");
}

}  // namespace ddpca::exp
