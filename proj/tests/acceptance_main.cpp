// Acceptance suite: one numbered check per release criterion, each printing a
// [PASS]/[FAIL] line with the measured numbers. Run with no arguments for the
// whole battery or with a list of criterion ids.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/hc.hpp"
#include "ddpca/lda.hpp"
#include "ddpca/portfolio.hpp"
#include "ddpca/projection.hpp"
#include "ddpca/simgen.hpp"
#include "ddpca/solvers.hpp"
#include "io.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ddpca;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    detail << "    " << (ok ? "ok  " : "FAIL") << "  " << what << "\n";
    pass = pass && ok;
  }
};

MetricRow exact_metrics(const ExactDecomp& gen, const Decomposition<double>& dec) {
  MetricRow row;
  row.emplace_back("rank", double(dec.rank_low_rank));
  row.emplace_back("res", (gen.sum - dec.low_rank - dec.dominant).norm() / gen.sum.norm());
  row.emplace_back("lerr", (dec.low_rank - gen.low_rank).norm() / gen.low_rank.norm());
  row.emplace_back("aerr", (dec.dominant - gen.dominant).norm() / gen.dominant.norm());
  return row;
}

std::string fmt(double v) { return ddpca::io::fmt_double(v); }

// --------------------------------------------------------- criterion 1
// Exact-decomposition ADMM at paper scale (Table 1 row p = 500) plus the
// pinned desk-scale regression.
Outcome criterion1() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  const Index p = 500, k = 25;
  SolverConfig<double> config;
  config.tol = 0;
  config.max_iter = 20;
  const auto report = run_monte_carlo(
      1001, 20,
      [&](int, RngStream& stream) {
        const auto gen = gen_exact_decomp(p, k, stream);
        return exact_metrics(gen, admm_exact(gen.sum, config));
      },
      0);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool every_rank = report.completed_reps == 20;
  for (const double r : report.samples.at("rank")) every_rank = every_rank && r == 25.0;
  out.require(every_rank, "rank(L-hat) = 25 in every repetition");
  const double res = report.mean("res"), lerr = report.mean("lerr"), aerr = report.mean("aerr");
  out.require(res <= 2 * 0.008, "mean residual " + fmt(res) + " <= 2 x 0.008");
  out.require(lerr <= 2 * 0.011, "mean L error " + fmt(lerr) + " <= 2 x 0.011");
  out.require(aerr <= 2 * 0.045, "mean A error " + fmt(aerr) + " <= 2 x 0.045");
  out.require(wall < 600.0, "runtime " + fmt(wall) + "s under 10 minutes");

  RngStream desk_stream(42, 1);
  const auto desk_gen = gen_exact_decomp(100, 5, desk_stream);
  const auto desk = admm_exact(desk_gen.sum, config);
  out.require(desk.rank_low_rank == 5, "desk-scale rank pinned at 5");
  const double desk_res = desk.residual_history.back();
  out.require(std::abs(desk_res - 0.00060787814728696416) < 1e-6 * 0.0006,
              "desk-scale residual pinned: " + fmt(desk_res));
  return out;
}

// --------------------------------------------------------- criterion 2
// Convex-relaxation ADMM at paper scale (Table 2 row p = 500).
Outcome criterion2() {
  Outcome out;
  const Index p = 500, k = 25;
  SolverConfig<double> config;
  config.lambda = 3.0;
  config.tol = 0;
  config.max_iter = 50;
  const auto report = run_monte_carlo(
      1002, 20,
      [&](int, RngStream& stream) {
        const auto gen = gen_noisy_decomp(p, k, 1.0, stream);
        ExactDecomp shim{gen.low_rank, gen.dominant, gen.sum};
        return exact_metrics(shim, admm_relaxed(gen.sum, config));
      },
      0);
  bool every_rank = report.completed_reps == 20;
  for (const double r : report.samples.at("rank")) every_rank = every_rank && r == 25.0;
  out.require(every_rank, "rank(L-hat) = 25 exactly");
  const double res = report.mean("res"), lerr = report.mean("lerr"), aerr = report.mean("aerr");
  out.require(res <= 2 * 0.264, "mean residual " + fmt(res) + " <= 2 x 0.264");
  out.require(lerr <= 2 * 0.166, "mean L error " + fmt(lerr) + " <= 2 x 0.166");
  out.require(aerr <= 2 * 0.340, "mean A error " + fmt(aerr) + " <= 2 x 0.340");
  return out;
}

// --------------------------------------------------------- criterion 3
// Iterative projection: final margin near zero, residual falls by iteration 20.
Outcome criterion3() {
  Outcome out;
  for (const Index p : {50, 100}) {
    const Index k = std::max<Index>(1, static_cast<Index>(std::llround(0.05 * double(p))));
    SolverConfig<double> config;
    config.tol = 0;
    config.max_iter = 500;
    int ok = 0;
    double worst = 0;
    const int reps = 50;
    const auto report = run_monte_carlo(
        1003 + p, reps,
        [&](int, RngStream& stream) {
          const auto gen = gen_exact_decomp(p, k, stream);
          const auto dec = iterative_projection(gen.sum, k, config);
          MetricRow row;
          row.emplace_back("zeta", std::abs(dec.margin_history.back()));
          row.emplace_back("drop", dec.residual_history[19] < dec.residual_history[0] ? 1.0 : 0.0);
          return row;
        },
        0);
    for (int r = 0; r < reps; ++r) {
      const double z = report.samples.at("zeta")[size_t(r)];
      worst = std::max(worst, z);
      if (z <= 1e-2 && report.samples.at("drop")[size_t(r)] == 1.0) ++ok;
    }
    std::ostringstream what;
    what << "p=" << p << ": " << ok << "/50 reps with |zeta| <= 1e-2 and residual drop (worst "
         << fmt(worst) << ")";
    out.require(ok >= 48, what.str());
  }
  return out;
}

// --------------------------------------------------------- criterion 4
// Plug-in rank robustness at (p, K) = (100, 5), ten iterations.
Outcome criterion4() {
  Outcome out;
  const Index p = 100, k_true = 5;
  SolverConfig<double> config;
  config.tol = 0;
  config.max_iter = 10;
  std::map<Index, double> err;
  for (Index k_plug = 1; k_plug <= 10; ++k_plug) {
    const auto report = run_monte_carlo(
        1004, 20,
        [&](int, RngStream& stream) {
          const auto gen = gen_exact_decomp(p, k_true, stream);
          const auto dec = iterative_projection(gen.sum, k_plug, config);
          MetricRow row;
          row.emplace_back("lerr", (dec.low_rank - gen.low_rank).norm() / gen.low_rank.norm());
          return row;
        },
        0);
    err[k_plug] = report.mean("lerr");
  }
  double lo = err[5], hi = err[5];
  for (Index k = 5; k <= 10; ++k) {
    lo = std::min(lo, err[k]);
    hi = std::max(hi, err[k]);
  }
  std::ostringstream spread;
  spread << "k in [5,10]: errors " << fmt(lo) << " .. " << fmt(hi) << ", spread "
         << fmt(hi - lo) << " < 0.15";
  out.require(hi - lo < 0.15, spread.str());
  for (Index k = 1; k <= 4; ++k) {
    std::ostringstream what;
    what << "undershoot k=" << k << ": " << fmt(err[k]) << " >= 3 x err(5) = " << fmt(3 * err[5]);
    out.require(err[k] >= 3 * err[5], what.str());
  }
  return out;
}

// --------------------------------------------------------- criterion 5
// Precision advantage over POET at (p, n, K) = (500, 200, 3). The POET
// threshold is the covariance-fit oracle over the grid (the surrogate for the
// cross-validated choice the comparison was published with); the
// precision-oracle ratio is printed alongside for reference.
Outcome criterion5() {
  Outcome out;
  const Index p = 500, n = 200, k = 3;
  const std::vector<double> grid{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5};
  const Matrix<double> noise_cov = ar_noise_cov(p, 0.5, 1);
  const auto report = run_monte_carlo(
      1005, 50,
      [&](int, RngStream& stream) {
        const auto gen = gen_factor_cov(p, n, k, stream);
        const EigenSystem<double> es = eig_sym(gen.sigma);
        const Matrix<double> sigma_inv = symmetrize<double>(
            es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());
        MetricRow row;
        const auto dd = estimate_ddpca<double>(gen.data, k);
        const Matrix<double> dd_prec = precision_from_estimate(dd);
        row.emplace_back("dd_prec_spec", spectral_norm<double>(symmetrize<double>(
                                             (dd_prec - sigma_inv).eval())));
        for (size_t a = 0; a < grid.size(); ++a) {
          const auto poet = estimate_poet<double>(gen.data, k, grid[a]);
          row.emplace_back("poet" + std::to_string(a) + "_sigma_frob",
                           (poet.sigma - gen.sigma).norm());
          double prec_err = std::numeric_limits<double>::infinity();
          try {
            const Matrix<double> poet_prec = precision_from_estimate(poet);
            prec_err = spectral_norm<double>(symmetrize<double>((poet_prec - sigma_inv).eval()));
          } catch (const numerical_error&) {
          }
          row.emplace_back("poet" + std::to_string(a) + "_prec_spec", prec_err);
        }
        return row;
      },
      0);
  size_t fit_oracle = 0;
  double best_fit = std::numeric_limits<double>::infinity();
  double best_prec = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < grid.size(); ++a) {
    const double fit = report.mean("poet" + std::to_string(a) + "_sigma_frob");
    if (fit < best_fit) {
      best_fit = fit;
      fit_oracle = a;
    }
    best_prec = std::min(best_prec, report.mean("poet" + std::to_string(a) + "_prec_spec"));
  }
  const double dd = report.mean("dd_prec_spec");
  const double poet_at_fit = report.mean("poet" + std::to_string(fit_oracle) + "_prec_spec");
  out.detail << "    info  ddpca precision spectral error " << fmt(dd) << "\n";
  out.detail << "    info  poet at fit-oracle threshold " << fmt(grid[fit_oracle]) << ": "
             << fmt(poet_at_fit) << " (ratio " << fmt(dd / poet_at_fit) << ")\n";
  out.detail << "    info  poet at precision-oracle threshold: " << fmt(best_prec) << " (ratio "
             << fmt(dd / best_prec) << ", Table-3 regime)\n";
  out.require(dd <= 0.7 * poet_at_fit,
              "ddpca <= 0.7 x poet at the covariance-fit oracle threshold");
  return out;
}

// --------------------------------------------------------- criterion 6
// Table 3 replica at (p, K, k) = (100, 3, 3), n = 200.
Outcome criterion6() {
  Outcome out;
  const Index p = 100, n = 200, k = 3;
  const Matrix<double> noise_cov = ar_noise_cov(p, 0.5, 1);
  const EigenSystem<double> aes = eig_sym(noise_cov);
  const Matrix<double> noise_prec = symmetrize<double>(
      aes.vectors * aes.values.cwiseInverse().asDiagonal() * aes.vectors.transpose());
  const auto report = run_monte_carlo(
      1006, 50,
      [&](int, RngStream& stream) {
        const auto gen = gen_factor_cov(p, n, k, stream);
        const EigenSystem<double> es = eig_sym(gen.sigma);
        const Matrix<double> sigma_inv = symmetrize<double>(
            es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());
        const auto est = estimate_ddpca<double>(gen.data, k);
        const auto err = error_report(est, gen.sigma, sigma_inv, noise_cov, noise_prec);
        MetricRow row;
        row.emplace_back("a_frob", err.residual_frob);
        row.emplace_back("a_spec", err.residual_spec);
        row.emplace_back("ainv_frob", err.residual_inv_frob);
        row.emplace_back("ainv_spec", err.residual_inv_spec);
        row.emplace_back("sigma_frob", err.sigma_frob);
        row.emplace_back("prec_spec", err.precision_spec);
        return row;
      },
      0);
  const std::vector<std::pair<std::string, double>> targets{
      {"a_frob", 3.28}, {"a_spec", 0.80}, {"ainv_frob", 3.02}, {"ainv_spec", 0.61}};
  for (const auto& [name, target] : targets) {
    const double value = report.mean(name);
    std::ostringstream what;
    what << name << " = " << fmt(value) << " within 25% of " << target;
    out.require(value >= 0.75 * target && value <= 1.25 * target, what.str());
  }
  out.detail << "    info  full-covariance errors for reference: sigma_frob "
             << fmt(report.mean("sigma_frob")) << ", precision_spec "
             << fmt(report.mean("prec_spec")) << "\n";
  return out;
}

// --------------------------------------------------------- criterion 7
// Testing ordering on the (p, s, tau) grid at n = 50, 500 reps per arm.
Outcome criterion7() {
  Outcome out;
  const Index n = 50, rank = 2;
  const int reps = 500;
  SolverConfig<double> dd_config = iterative_projection_defaults<double>();
  dd_config.max_iter = 20;
  int chain_ok = 0, lowest_ok = 0, points = 0;
  for (const Index p : {100, 200}) {
    for (const Index s : {5, 10}) {
      for (const double tau : {0.3, 0.5}) {
        ++points;
        RngStream model_stream(mix64(1007 ^ mix64(static_cast<std::uint64_t>(points))), 0);
        const auto model = TestingModel::make(p, n, s, tau, model_stream);
        const auto report = run_monte_carlo(
            mix64(2007 ^ mix64(static_cast<std::uint64_t>(points))), reps,
            [&](int, RngStream& stream) {
              MetricRow row;
              for (const bool alt : {false, true}) {
                const auto draw = model.draw(stream, alt);
                const char* sfx = alt ? "_alt" : "_null";
                const auto ref = reference_tests(draw.zscores, draw.sigma_hat);
                row.emplace_back(std::string("chi2") + sfx, ref.chi2);
                row.emplace_back(std::string("max") + sfx, ref.max_abs);
                row.emplace_back(std::string("ohc") + sfx, ref.ohc.statistic);
                row.emplace_back(std::string("ihcdd") + sfx,
                                 ihc_dd_test(draw.zscores, draw.sigma_hat, rank).statistic);
                row.emplace_back(std::string("ddhc") + sfx,
                                 dd_hc_test(draw.zscores, draw.sigma_hat, rank, dd_config).statistic);
              }
              return row;
            },
            0);
        std::map<std::string, double> errors;
        for (const char* test : {"chi2", "max", "ohc", "ihcdd", "ddhc"}) {
          errors[test] = ideal_testing_error(report.samples.at(std::string(test) + "_null"),
                                             report.samples.at(std::string(test) + "_alt"));
        }
        const double reference = std::min({errors["ohc"], errors["chi2"], errors["max"]});
        const bool chain = errors["ddhc"] <= errors["ihcdd"] && errors["ihcdd"] <= reference + 0.02;
        const bool lowest = errors["ddhc"] < std::min(errors["ihcdd"], reference);
        chain_ok += chain;
        lowest_ok += lowest;
        out.detail << "    info  p=" << p << " s=" << s << " tau=" << tau << ": ddhc "
                   << fmt(errors["ddhc"]) << ", ihcdd " << fmt(errors["ihcdd"]) << ", min(refs) "
                   << fmt(reference) << (chain ? "" : "  [chain miss]") << "\n";
      }
    }
  }
  std::ostringstream chain_what, lowest_what;
  chain_what << "chain ddhc <= ihcdd <= min(refs)+0.02 on " << chain_ok << "/" << points
             << " points (need >= 7)";
  lowest_what << "ddhc strictly lowest on " << lowest_ok << "/" << points << " points (need >= 4)";
  out.require(chain_ok >= 7, chain_what.str());
  out.require(lowest_ok >= 4, lowest_what.str());
  return out;
}

// --------------------------------------------------------- criterion 8
// Property battery, bounded to one minute.
Outcome criterion8() {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  RngStream stream(1008, 0);

  bool idempotent = true, oracle_ok = true;
  double worst_oracle = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index p = 2 + static_cast<Index>(stream.next_u64() % 2);  // 2 or 3
    const Matrix<double> a = oracles::random_matrix(p, p, stream, 1.5);
    for (const double c : {1.0, 2.0}) {
      const Matrix<double> proj = project_dd_c(a, c);
      idempotent =
          idempotent && (project_dd_c(proj, c) - proj).cwiseAbs().maxCoeff() < 1e-12;
      Matrix<double> expected(p, p);
      for (Index j = 0; j < p; ++j) {
        expected.row(j) = oracles::project_row(a.row(j).transpose(), j, c).transpose();
      }
      worst_oracle = std::max(worst_oracle, (proj - expected).norm());
    }
  }
  oracle_ok = worst_oracle < 1e-6;
  out.require(idempotent, "projection idempotence at 1e-12");
  out.require(oracle_ok, "row-program oracle agreement, worst gap " + fmt(worst_oracle));

  bool dykstra_ok = true;
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix<double> a = oracles::random_matrix(6, 6, stream, 2.0);
    const auto result = project_sdd(a);
    dykstra_ok = dykstra_ok && result.converged &&
                 (result.matrix - result.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0 &&
                 dd_margin(result.matrix) >= -1e-8 * a.norm();
  }
  out.require(dykstra_ok, "Dykstra outputs exactly symmetric and inside the cone");

  bool bound_ok = true;
  for (int trial = 0; trial < 15; ++trial) {
    const Matrix<double> a =
        oracles::random_symmetric(8, stream) + Matrix<double>::Identity(8, 8) * 2.0;
    const auto result = project_sdd(a, ConeSpec<double>{1.5});
    if (!result.converged || result.matrix.diagonal().minCoeff() <= 0) continue;
    Eigen::SelfAdjointEigenSolver<Matrix<double>> es(result.matrix);
    bound_ok = bound_ok && es.eigenvalues().minCoeff() >=
                               (0.5 / 1.5) * result.matrix.diagonal().minCoeff() - 1e-8;
  }
  out.require(bound_ok, "smallest-eigenvalue bound for c = 1.5");

  bool woodbury_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix<double> a = oracles::random_spd(30, stream);
    const Matrix<double> b = oracles::random_matrix(30, 3, stream);
    const Matrix<double> omega = factor_precision(a, b);
    const Matrix<double> direct = (a + b * b.transpose()).inverse();
    woodbury_ok = woodbury_ok && (omega - direct).norm() / direct.norm() < 1e-8;
  }
  out.require(woodbury_ok, "factor inversion matches dense inversion at 1e-8");

  Vector<double> uniform(12);
  for (Index j = 0; j < 12; ++j) uniform[j] = double(j + 1) / 12.0;
  out.require(std::abs(hc_statistic(uniform)) < 1e-12, "HC vanishes on uniform quantiles");

  Vector<double> med_x(3);
  med_x << 1, 2, 10;
  out.require(std::abs(l1_regress<double>(med_x, Matrix<double>::Ones(3, 1))[0] - 2.0) < 1e-12,
              "L1 regression on the all-ones covariate is the median");

  const Vector<double> w = min_risk_weights<double>(Matrix<double>::Identity(8, 8));
  out.require((w - Vector<double>::Constant(8, 0.125)).cwiseAbs().maxCoeff() < 1e-12,
              "minimum-risk weights are 1/p on the identity");

  bool rank_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = 3 + static_cast<Index>(stream.next_u64() % 4);  // 3..6
    const Matrix<double> m = oracles::random_symmetric(p, stream);
    const Index k = 1 + static_cast<Index>(stream.next_u64() % 2);
    const double ours = (m - rank_k_approx(m, std::min(k, p))).norm();
    for (int cand = 0; cand < 100; ++cand) {
      const Matrix<double> q = oracles::random_orthonormal(p, std::min(k, p), stream);
      const Matrix<double> best_in_span = q * (q.transpose() * m * q) * q.transpose();
      rank_ok = rank_ok && ours <= (m - best_in_span).norm() + 1e-9;
    }
  }
  out.require(rank_ok, "rank-K truncation beats random orthonormal candidates");

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.require(wall < 60.0, "property battery ran in " + fmt(wall) + "s (< 60s)");
  return out;
}

// --------------------------------------------------------- criterion 9
// Manifest determinism: every experiment rerun from its manifest reproduces
// its output files byte for byte.
Outcome criterion9() {
  Outcome out;
#ifndef DDPCA_CLI_PATH
  out.require(false, "CLI path not configured");
  return out;
#else
  const fs::path base =
      fs::temp_directory_path() / ("ddpca_accept9_" + std::to_string(::getpid()));
  fs::remove_all(base);
  fs::create_directories(base);
  for (const std::string name : {"exp1", "exp2", "exp3", "exp4", "exp5", "fig1", "fig5"}) {
    const fs::path dir = base / name;
    fs::create_directories(dir);
    const std::string run = "cd '" + dir.string() + "' && '" + DDPCA_CLI_PATH +
                            "' experiment --name " + name +
                            " --scale desk --seed 33 --reps 2 --out-dir . > run.log 2>&1";
    int status = std::system(run.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      out.require(false, name + ": first run failed");
      continue;
    }
    std::map<std::string, std::string> before;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string fname = entry.path().filename().string();
      if (fname.size() > 4 && fname.substr(fname.size() - 4) == ".csv") {
        before[fname] = ddpca::io::read_file(entry.path().string());
      }
    }
    const std::string rerun = "cd '" + dir.string() + "' && '" + DDPCA_CLI_PATH +
                              "' rerun --manifest " + name + "_manifest.json > rerun.log 2>&1";
    status = std::system(rerun.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      out.require(false, name + ": rerun failed");
      continue;
    }
    bool identical = !before.empty();
    for (const auto& [fname, contents] : before) {
      identical = identical && ddpca::io::read_file((dir / fname).string()) == contents;
    }
    out.require(identical, name + ": " + std::to_string(before.size()) +
                               " output files byte-identical after rerun");
  }
  fs::remove_all(base);
  return out;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
      {1, {"exact-decomposition ADMM replicates Table 1", criterion1}},
      {2, {"convex-relaxation ADMM replicates Table 2", criterion2}},
      {3, {"iterative projection drives the margin to zero", criterion3}},
      {4, {"plug-in rank robustness", criterion4}},
      {5, {"precision advantage over POET", criterion5}},
      {6, {"Table 3 replica", criterion6}},
      {7, {"global-testing error ordering", criterion7}},
      {8, {"property battery", criterion8}},
      {9, {"experiment manifests rerun byte-identically", criterion9}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }
  int failures = 0;
  for (const int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
    const Outcome outcome = it->second.second();
    std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": "
              << it->second.first << "\n"
              << outcome.detail.str();
    failures += outcome.pass ? 0 : 1;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
  }
  return failures == 0 ? 0 : 1;
}
