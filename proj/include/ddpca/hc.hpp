#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/linalg.hpp"
#include "ddpca/solvers.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

inline constexpr double kPValueClip = 1e-12;

/// Upper tail of the standard normal, P(Z > z).
template <typename Scalar>
Scalar normal_sf(Scalar z) {
  return Scalar(0.5) * std::erfc(z / std::sqrt(Scalar(2)));
}

/// Two-sided marginal p-values for z-scores with known variances.
template <typename Scalar>
Vector<Scalar> marginal_pvalues(const Vector<Scalar>& z, const Vector<Scalar>& variances) {
  if (z.size() != variances.size()) {
    throw std::invalid_argument("marginal_pvalues: size mismatch");
  }
  if (variances.size() == 0 || (variances.array() <= Scalar(0)).any()) {
    throw std::invalid_argument("marginal_pvalues: variances must be positive");
  }
  Vector<Scalar> pvalues(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    pvalues[j] = Scalar(2) * normal_sf(std::abs(z[j]) / std::sqrt(variances[j]));
  }
  return pvalues;
}

template <typename Scalar>
Vector<Scalar> clip_pvalues(Vector<Scalar> pvalues) {
  for (Index j = 0; j < pvalues.size(); ++j) {
    pvalues[j] = std::min(std::max(pvalues[j], Scalar(kPValueClip)), Scalar(1) - Scalar(kPValueClip));
  }
  return pvalues;
}

/// Higher Criticism statistic: sort the p-values ascending, standardize the
/// deviation of each order statistic from uniformity and take the maximum
/// over the first half. Inputs are clipped away from {0, 1} first.
template <typename Scalar>
Scalar hc_statistic(const Vector<Scalar>& pvalues) {
  const Index p = pvalues.size();
  if (p < 2) {
    throw std::invalid_argument("hc_statistic: need at least 2 p-values");
  }
  Vector<Scalar> sorted = clip_pvalues(pvalues);
  std::sort(sorted.data(), sorted.data() + p);
  const Scalar sqrt_p = std::sqrt(Scalar(p));
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (Index j = 1; j <= p / 2; ++j) {
    const Scalar pi_j = sorted[j - 1];
    const Scalar hc = sqrt_p * (Scalar(j) / Scalar(p) - pi_j) / std::sqrt(pi_j * (Scalar(1) - pi_j));
    best = std::max(best, hc);
  }
  return best;
}

template <typename Scalar>
struct TestResult {
  Scalar statistic = 0;
  Vector<Scalar> adjusted_pvalues;  // the clipped p-values fed to HC
  std::string method;
};

/// Orthodox HC on marginal p-values with the given variances.
template <typename Scalar>
TestResult<Scalar> ohc_test(const Vector<Scalar>& z, const Vector<Scalar>& variances) {
  TestResult<Scalar> result;
  result.adjusted_pvalues = clip_pvalues(marginal_pvalues(z, variances));
  result.statistic = hc_statistic(result.adjusted_pvalues);
  result.method = "ohc";
  return result;
}

/// Innovated HC with the DD-PCA precision estimate: transform the z-scores by
/// the inverse of L + A from one-step DD-PCA and feed the re-standardized
/// p-values to HC.
template <typename Scalar>
TestResult<Scalar> ihc_dd_test(const Vector<Scalar>& z, const Matrix<Scalar>& sigma_hat, Index k,
                               const SolverConfig<Scalar>& config = {}) {
  if (z.size() != sigma_hat.rows()) {
    throw std::invalid_argument("ihc_dd_test: z-score length must match sigma");
  }
  const Decomposition<Scalar> dec = one_step_ddpca(sigma_hat, k, config);
  Matrix<Scalar> omega;
  try {
    omega = ddpca_precision(dec);
  } catch (const numerical_error&) {
    // The factor formula needs the dominant part alone to be invertible;
    // the transform only needs L + A to be. Invert the sum directly then.
    CovEstimate<Scalar> plain;
    plain.method = CovMethod::sample;
    plain.sigma = dec.low_rank + dec.dominant;
    omega = precision_from_estimate(plain);
  }
  const Vector<Scalar> transformed = omega * z;
  TestResult<Scalar> result;
  result.adjusted_pvalues = clip_pvalues(marginal_pvalues<Scalar>(transformed, omega.diagonal()));
  result.statistic = hc_statistic(result.adjusted_pvalues);
  result.method = "ihc_dd";
  return result;
}

namespace detail {

// Exact L1 fit by primal simplex with Bland's rule on the residual-splitting
// program  min 1'u + 1'v  s.t.  H(w+ - w-) + u - v = x,  all variables >= 0.
// The initial basis picks u_i or v_i per row, which is feasible outright.
template <typename Scalar>
Vector<Scalar> l1_fit_simplex(const Matrix<Scalar>& h, const Vector<Scalar>& x) {
  const Index rows = h.rows();
  const Index k = h.cols();
  const Index cols = 2 * k + 2 * rows;
  Matrix<Scalar> tab(rows, cols);
  tab.block(0, 0, rows, k) = h;
  tab.block(0, k, rows, k) = -h;
  tab.block(0, 2 * k, rows, rows) = Matrix<Scalar>::Identity(rows, rows);
  tab.block(0, 2 * k + rows, rows, rows) = -Matrix<Scalar>::Identity(rows, rows);
  Vector<Scalar> rhs = x;
  std::vector<Index> basis(static_cast<size_t>(rows));
  for (Index i = 0; i < rows; ++i) {
    if (x[i] >= Scalar(0)) {
      basis[static_cast<size_t>(i)] = 2 * k + i;  // u_i
    } else {
      basis[static_cast<size_t>(i)] = 2 * k + rows + i;  // v_i
      tab.row(i) = -tab.row(i);
      rhs[i] = -rhs[i];
    }
  }
  const auto cost = [&](Index j) { return j < 2 * k ? Scalar(0) : Scalar(1); };
  const Scalar eps = Scalar(1e-10) * std::max(Scalar(1), x.cwiseAbs().maxCoeff());

  const int max_pivots = 50 * static_cast<int>(rows + cols);
  bool optimal = false;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    // Reduced costs r_j = c_j - sum over basic rows with unit cost of tab(i, j).
    Index entering = -1;
    for (Index j = 0; j < cols && entering < 0; ++j) {
      Scalar reduced = cost(j);
      for (Index i = 0; i < rows; ++i) {
        if (cost(basis[static_cast<size_t>(i)]) != Scalar(0)) reduced -= tab(i, j);
      }
      if (reduced < -eps) entering = j;  // Bland: first improving index
    }
    if (entering < 0) {
      optimal = true;
      break;
    }

    Index leaving = -1;
    Scalar best_ratio = std::numeric_limits<Scalar>::max();
    for (Index i = 0; i < rows; ++i) {
      if (tab(i, entering) > eps) {
        const Scalar ratio = rhs[i] / tab(i, entering);
        if (ratio < best_ratio - eps ||
            (ratio < best_ratio + eps &&
             (leaving < 0 || basis[static_cast<size_t>(i)] < basis[static_cast<size_t>(leaving)]))) {
          best_ratio = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) {
      throw numerical_error("l1_regress: linear program is unbounded (should not happen)");
    }
    const Scalar pivot_value = tab(leaving, entering);
    tab.row(leaving) /= pivot_value;
    rhs[leaving] /= pivot_value;
    for (Index i = 0; i < rows; ++i) {
      if (i == leaving) continue;
      const Scalar factor = tab(i, entering);
      if (factor != Scalar(0)) {
        tab.row(i) -= factor * tab.row(leaving);
        rhs[i] -= factor * rhs[leaving];
      }
    }
    basis[static_cast<size_t>(leaving)] = entering;
  }
  if (!optimal) {
    throw numerical_error("l1_regress: simplex exceeded its pivot budget");
  }

  Vector<Scalar> w = Vector<Scalar>::Zero(k);
  for (Index i = 0; i < rows; ++i) {
    const Index j = basis[static_cast<size_t>(i)];
    if (j < k) {
      w[j] += rhs[i];
    } else if (j < 2 * k) {
      w[j - k] -= rhs[i];
    }
  }
  return w;
}

}  // namespace detail

/// Minimizer of ||x - etas * w||_1 over w, solved as an exact linear program.
template <typename Scalar>
Vector<Scalar> l1_regress(const Vector<Scalar>& x, const Matrix<Scalar>& etas) {
  if (etas.cols() < 1) {
    throw std::invalid_argument("l1_regress: need at least one covariate");
  }
  if (etas.rows() != x.size()) {
    throw std::invalid_argument("l1_regress: covariate rows must match x");
  }
  Eigen::JacobiSVD<Matrix<Scalar>> svd(etas);
  const auto& sing = svd.singularValues();
  if (sing[sing.size() - 1] <= Scalar(1e-10) * sing[0]) {
    throw std::invalid_argument("l1_regress: covariate matrix is rank deficient");
  }
  return detail::l1_fit_simplex(etas, x);
}

/// Factor-adjusted HC: remove the estimated latent factor contribution from
/// the z-scores by an L1 regression on the leading eigenvectors of L, then
/// run HC with residual variances diag(sigma - L). K = 0 collapses to plain
/// HC with variances diag(sigma).
template <typename Scalar>
TestResult<Scalar> dd_hc_test(const Vector<Scalar>& z, const Matrix<Scalar>& sigma_hat, Index k,
                              SolverConfig<Scalar> config = iterative_projection_defaults<Scalar>()) {
  if (z.size() != sigma_hat.rows()) {
    throw std::invalid_argument("dd_hc_test: z-score length must match sigma");
  }
  TestResult<Scalar> result;
  result.method = "dd_hc";
  if (k == 0) {
    result.adjusted_pvalues = clip_pvalues(marginal_pvalues<Scalar>(z, sigma_hat.diagonal()));
    result.statistic = hc_statistic(result.adjusted_pvalues);
    return result;
  }
  const Decomposition<Scalar> dec = iterative_projection(sigma_hat, k, config);
  const EigenSystem<Scalar> es = eig_sym(dec.low_rank);
  const Matrix<Scalar> etas = es.vectors.leftCols(k);
  const Vector<Scalar> w = l1_regress<Scalar>(z, etas);
  const Vector<Scalar> residual = z - etas * w;
  const Vector<Scalar> variances = (sigma_hat - dec.low_rank).diagonal();
  for (Index j = 0; j < variances.size(); ++j) {
    if (variances[j] <= Scalar(0)) {
      std::ostringstream os;
      os << "dd_hc_test: residual variance is nonpositive at index " << j;
      throw numerical_error(os.str());
    }
  }
  result.adjusted_pvalues = clip_pvalues(marginal_pvalues(residual, variances));
  result.statistic = hc_statistic(result.adjusted_pvalues);
  return result;
}

/// Reference battery: chi-square ||z||^2, max |z_j|, plain HC, and Innovated
/// HC with the eigen-truncated generalized inverse of sigma.
template <typename Scalar>
struct ReferenceStatistics {
  Scalar chi2 = 0;
  Scalar max_abs = 0;
  TestResult<Scalar> ohc;
  TestResult<Scalar> ihc;
};

template <typename Scalar>
ReferenceStatistics<Scalar> reference_tests(const Vector<Scalar>& z, const Matrix<Scalar>& sigma_hat) {
  if (z.size() != sigma_hat.rows()) {
    throw std::invalid_argument("reference_tests: z-score length must match sigma");
  }
  ReferenceStatistics<Scalar> out;
  out.chi2 = z.squaredNorm();
  out.max_abs = z.size() == 0 ? Scalar(0) : z.cwiseAbs().maxCoeff();
  out.ohc = ohc_test<Scalar>(z, sigma_hat.diagonal());

  const EigenSystem<Scalar> es = eig_sym(sigma_hat);
  const Scalar top = es.values.cwiseAbs().maxCoeff();
  const Scalar cut = Scalar(1e-10) * top;
  Vector<Scalar> inv_vals = Vector<Scalar>::Zero(es.values.size());
  for (Index i = 0; i < es.values.size(); ++i) {
    if (std::abs(es.values[i]) > cut) inv_vals[i] = Scalar(1) / es.values[i];
  }
  const Matrix<Scalar> omega = symmetrize<Scalar>(es.vectors * inv_vals.asDiagonal() * es.vectors.transpose());
  const Vector<Scalar> transformed = omega * z;
  Vector<Scalar> variances = omega.diagonal();
  const Scalar vmax = variances.maxCoeff();
  const Scalar floor_value = vmax > Scalar(0) ? Scalar(1e-15) * vmax : Scalar(1);
  variances = variances.cwiseMax(floor_value);
  out.ihc.adjusted_pvalues = clip_pvalues(marginal_pvalues(transformed, variances));
  out.ihc.statistic = hc_statistic(out.ihc.adjusted_pvalues);
  out.ihc.method = "ihc";
  return out;
}

/// Minimum over cutoffs of (type I + type II) error for a reject-if-large
/// test, computed exactly from the pooled order statistics.
template <typename Scalar>
Scalar ideal_testing_error(const std::vector<Scalar>& null_stats, const std::vector<Scalar>& alt_stats) {
  if (null_stats.empty() || alt_stats.empty()) {
    throw std::invalid_argument("ideal_testing_error: draw sets must be non-empty");
  }
  std::vector<Scalar> null_sorted = null_stats;
  std::vector<Scalar> alt_sorted = alt_stats;
  std::sort(null_sorted.begin(), null_sorted.end());
  std::sort(alt_sorted.begin(), alt_sorted.end());
  std::vector<Scalar> cutoffs = null_sorted;
  cutoffs.insert(cutoffs.end(), alt_sorted.begin(), alt_sorted.end());
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());

  const Scalar n0 = Scalar(null_sorted.size());
  const Scalar n1 = Scalar(alt_sorted.size());
  Scalar best = Scalar(1);  // cutoff below every draw: reject always
  for (const Scalar t : cutoffs) {
    const auto above_null = null_sorted.end() - std::upper_bound(null_sorted.begin(), null_sorted.end(), t);
    const auto at_or_below_alt = std::upper_bound(alt_sorted.begin(), alt_sorted.end(), t) - alt_sorted.begin();
    const Scalar error = Scalar(above_null) / n0 + Scalar(at_or_below_alt) / n1;
    best = std::min(best, error);
  }
  return best;
}

}  // namespace ddpca
