#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/rng.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

// The generators below pin their draw order (and hand-roll the few matrix
// products that feed golden fixtures) so a (seed, stream) pair reproduces the
// same matrices on any platform.

namespace detail {

/// Lower-triangular Cholesky factor with a fixed row-by-row loop order.
inline Matrix<double> cholesky_lower(const Matrix<double>& a) {
  const Index p = a.rows();
  Matrix<double> l = Matrix<double>::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j <= i; ++j) {
      double sum = a(i, j);
      for (Index k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (sum <= 0.0) throw numerical_error("cholesky_lower: matrix is not positive definite");
        l(i, j) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return l;
}

inline Vector<double> lower_times(const Matrix<double>& l, const Vector<double>& z) {
  const Index p = l.rows();
  Vector<double> out(p);
  for (Index i = 0; i < p; ++i) {
    double sum = 0.0;
    for (Index k = 0; k <= i; ++k) sum += l(i, k) * z[k];
    out[i] = sum;
  }
  return out;
}

/// x * x^T with a fixed accumulation order, mirrored to exact symmetry.
inline Matrix<double> gram_lower(const Matrix<double>& x) {
  const Index p = x.rows();
  const Index k = x.cols();
  Matrix<double> out(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (Index m = 0; m < k; ++m) sum += x(i, m) * x(j, m);
      out(i, j) = sum;
      out(j, i) = sum;
    }
  }
  return out;
}

}  // namespace detail

/// Exact low-rank plus dominant target: L = X X^T with X a p x K matrix of
/// standard normal entries, A = A0 + A0^T + D with A0 entries N(0, 1/p^2)
/// and D chosen so every row of A sits exactly on the dominance-cone
/// boundary. S = L + A. The loading scale puts the nonzero eigenvalues of L
/// at order p, well above ||A||; that separation is what makes the fixed
/// nuclear-norm weights of the ADMM benchmarks recover rank(L) exactly.
struct ExactDecomp {
  Matrix<double> low_rank;
  Matrix<double> dominant;
  Matrix<double> sum;
};

inline ExactDecomp gen_exact_decomp(Index p, Index k, RngStream& stream) {
  if (k < 1 || k > p) throw std::invalid_argument("gen_exact_decomp: need 1 <= K <= p");
  Matrix<double> x(p, k);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < k; ++j) x(i, j) = stream.next_normal();
  }
  Matrix<double> a0(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) a0(i, j) = stream.next_normal() / static_cast<double>(p);
  }
  ExactDecomp out;
  out.low_rank = detail::gram_lower(x);
  out.dominant.resize(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) out.dominant(i, j) = a0(i, j) + a0(j, i);
  }
  for (Index j = 0; j < p; ++j) {
    double row_abs = 0.0;
    for (Index i = 0; i < p; ++i) {
      if (i != j) row_abs += std::abs(out.dominant(j, i));
    }
    out.dominant(j, j) = row_abs;  // diagonal exactly equals the off-diagonal row sum
  }
  out.sum = out.low_rank + out.dominant;
  return out;
}

/// Exact target plus symmetric noise E with upper-triangular (including
/// diagonal) entries N(0, sigma^2/p).
struct NoisyDecomp {
  Matrix<double> low_rank;
  Matrix<double> dominant;
  Matrix<double> noise;
  Matrix<double> sum;
};

inline NoisyDecomp gen_noisy_decomp(Index p, Index k, double sigma, RngStream& stream) {
  const ExactDecomp exact = gen_exact_decomp(p, k, stream);
  NoisyDecomp out;
  out.low_rank = exact.low_rank;
  out.dominant = exact.dominant;
  out.noise.resize(p, p);
  const double scale = sigma / std::sqrt(static_cast<double>(p));
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) {
      const double e = scale * stream.next_normal();
      out.noise(i, j) = e;
      out.noise(j, i) = e;
    }
  }
  out.sum = exact.sum + out.noise;
  return out;
}

/// Factor-model data: loadings N(0,1), factors N(0,1), noise N_p(0, A) with
/// A(i,j) = 0.5^(|i-j|+1) off the diagonal and 1 on it. Returns the ground
/// truth Sigma = B B^T + A along with the n x p data matrix.
struct FactorCovSample {
  Matrix<double> sigma;
  Matrix<double> noise_cov;
  Matrix<double> loadings;
  Matrix<double> data;
};

/// Banded noise covariance with unit diagonal and off-diagonal decay
/// base^(|i-j| + offset).
inline Matrix<double> ar_noise_cov(Index p, double base, Index offset) {
  Matrix<double> a(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      a(i, j) = i == j ? 1.0 : std::pow(base, static_cast<double>(std::abs(i - j) + offset));
    }
  }
  return a;
}

inline FactorCovSample gen_factor_cov(Index p, Index n, Index k, RngStream& stream) {
  if (n < 2) throw std::invalid_argument("gen_factor_cov: need n >= 2");
  FactorCovSample out;
  out.noise_cov = ar_noise_cov(p, 0.5, 1);
  out.loadings.resize(p, k);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < k; ++j) out.loadings(i, j) = stream.next_normal();
  }
  const Matrix<double> chol = detail::cholesky_lower(out.noise_cov);
  out.data.resize(n, p);
  Vector<double> z(p);
  for (Index obs = 0; obs < n; ++obs) {
    Vector<double> w(k);
    for (Index j = 0; j < k; ++j) w[j] = stream.next_normal();
    for (Index j = 0; j < p; ++j) z[j] = stream.next_normal();
    const Vector<double> noise = detail::lower_times(chol, z);
    for (Index j = 0; j < p; ++j) {
      double value = noise[j];
      for (Index m = 0; m < k; ++m) value += out.loadings(j, m) * w[m];
      out.data(obs, j) = value;
    }
  }
  out.sigma = detail::gram_lower(out.loadings) + out.noise_cov;
  return out;
}

/// Global-testing model: Sigma = F F^T + A with F a p x 2 matrix of
/// N(0, 1/2) entries (drawn once per model) and A(i,j) = 0.5^|i-j|. Each
/// repetition resamples n observations; the z-score vector is the column sum
/// scaled by 1/sqrt(n) and sigma_hat is the sample covariance of the draws.
struct TestingModel {
  Matrix<double> sigma;
  Vector<double> mean_shift;
  Index n = 0;

  struct Draw {
    Vector<double> zscores;
    Matrix<double> sigma_hat;
  };

  static TestingModel make(Index p, Index n, Index s, double tau, RngStream& stream) {
    if (s > p) throw std::invalid_argument("gen_testing_model: need s <= p");
    TestingModel model;
    model.n = n;
    Matrix<double> f(p, 2);
    const double root_half = std::sqrt(0.5);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < 2; ++j) f(i, j) = root_half * stream.next_normal();
    }
    model.sigma = detail::gram_lower(f) + ar_noise_cov(p, 0.5, 0);
    model.mean_shift = Vector<double>::Zero(p);
    for (Index j = 0; j < s; ++j) model.mean_shift[j] = tau;
    model.chol_ = detail::cholesky_lower(model.sigma);
    return model;
  }

  Draw draw(RngStream& stream, bool alternative) const {
    const Index p = sigma.rows();
    Draw out;
    Matrix<double> data(n, p);
    Vector<double> z(p);
    for (Index obs = 0; obs < n; ++obs) {
      for (Index j = 0; j < p; ++j) z[j] = stream.next_normal();
      const Vector<double> noise = detail::lower_times(chol_, z);
      for (Index j = 0; j < p; ++j) {
        data(obs, j) = noise[j] + (alternative ? mean_shift[j] : 0.0);
      }
    }
    out.zscores = data.colwise().sum().transpose() / std::sqrt(static_cast<double>(n));
    out.sigma_hat = sample_cov<double>(data);
    return out;
  }

 private:
  Matrix<double> chol_;
};

/// One Monte Carlo repetition: takes the repetition index and its private
/// stream, returns named metrics in a fixed order.
using MetricRow = std::vector<std::pair<std::string, double>>;
using Pipeline = std::function<MetricRow(int rep, RngStream& stream)>;

struct ExperimentReport {
  int requested_reps = 0;
  int completed_reps = 0;
  std::vector<std::string> metric_names;
  std::map<std::string, std::vector<double>> samples;
  std::vector<std::pair<int, std::string>> failures;
  double wall_seconds = 0;

  double mean(const std::string& name) const {
    const auto it = samples.find(name);
    if (it == samples.end() || it->second.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0;
    for (const double v : it->second) total += v;
    return total / static_cast<double>(it->second.size());
  }

  double standard_error(const std::string& name) const {
    const auto it = samples.find(name);
    if (it == samples.end() || it->second.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean(name);
    double ss = 0;
    for (const double v : it->second) ss += (v - m) * (v - m);
    const double n = static_cast<double>(it->second.size());
    return std::sqrt(ss / (n - 1.0) / n);
  }
};

/// Runs the pipeline over per-repetition streams derived from (master_seed,
/// rep). Repetitions may run on several threads; the aggregate is assembled
/// in repetition order, so the report does not depend on scheduling.
/// Per-repetition exceptions are recorded, not fatal.
inline ExperimentReport run_monte_carlo(std::uint64_t master_seed, int reps, const Pipeline& pipeline,
                                        int threads = 0) {
  if (reps < 1) throw std::invalid_argument("run_monte_carlo: need reps >= 1");
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.requested_reps = reps;

  std::vector<MetricRow> rows(static_cast<size_t>(reps));
  std::vector<std::string> errors(static_cast<size_t>(reps));
  const auto work = [&](int rep) {
    try {
      RngStream stream(master_seed, static_cast<std::uint64_t>(rep));
      rows[static_cast<size_t>(rep)] = pipeline(rep, stream);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(rep)] = e.what();
    }
  };

  int worker_count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  worker_count = std::max(1, std::min(worker_count, reps));
  if (worker_count == 1) {
    for (int rep = 0; rep < reps; ++rep) work(rep);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) {
      pool.emplace_back([&, w]() {
        for (int rep = w; rep < reps; rep += worker_count) work(rep);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (int rep = 0; rep < reps; ++rep) {
    if (!errors[static_cast<size_t>(rep)].empty()) {
      report.failures.emplace_back(rep, errors[static_cast<size_t>(rep)]);
      continue;
    }
    ++report.completed_reps;
    for (const auto& [name, value] : rows[static_cast<size_t>(rep)]) {
      auto [it, inserted] = report.samples.try_emplace(name);
      if (inserted) report.metric_names.push_back(name);
      it->second.push_back(value);
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace ddpca
