#pragma once

#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "ddpca/linalg.hpp"
#include "ddpca/solvers.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

enum class CovMethod { ddpca, poet, sample, diagonal };

inline const char* to_string(CovMethod m) {
  switch (m) {
    case CovMethod::ddpca: return "ddpca";
    case CovMethod::poet: return "poet";
    case CovMethod::sample: return "sample";
    case CovMethod::diagonal: return "diagonal";
  }
  return "unknown";
}

template <typename Scalar>
struct CovEstimate {
  Matrix<Scalar> sigma;
  CovMethod method = CovMethod::sample;
  std::optional<Decomposition<Scalar>> decomposition;  // present for ddpca
  std::optional<Scalar> threshold_used;                // present for poet
  // Split of sigma into factor part and noise part where the method defines
  // one (ddpca, poet); empty matrices otherwise.
  Matrix<Scalar> low_rank;
  Matrix<Scalar> residual;
};

/// Sample covariance with divisor n (not n - 1). Output is exactly symmetric.
template <typename Scalar>
Matrix<Scalar> sample_cov(const Matrix<Scalar>& data) {
  if (data.rows() < 2) {
    throw std::invalid_argument("sample_cov: need at least 2 observations");
  }
  if (!data.allFinite()) {
    throw std::invalid_argument("sample_cov: data has non-finite entries");
  }
  const Index n = data.rows();
  const Index p = data.cols();
  const Matrix<Scalar> centered = data.rowwise() - data.colwise().mean();
  Matrix<Scalar> s = Matrix<Scalar>::Zero(p, p);
  s.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), Scalar(1) / Scalar(n));
  s.template triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

template <typename Scalar>
CovEstimate<Scalar> estimate_ddpca(const Matrix<Scalar>& data, Index k,
                                   const SolverConfig<Scalar>& config = {}) {
  const Matrix<Scalar> s = sample_cov(data);
  CovEstimate<Scalar> est;
  est.method = CovMethod::ddpca;
  est.decomposition = one_step_ddpca(s, k, config);
  est.low_rank = est.decomposition->low_rank;
  est.residual = est.decomposition->dominant;
  est.sigma = est.low_rank + est.residual;
  return est;
}

/// POET-style estimator: top-K eigen part plus the residual hard-thresholded
/// on the correlation scale. Kept entries are restored from the raw residual,
/// so a = 0 reproduces the sample covariance exactly and a = 1 keeps only the
/// residual diagonal. The diagonal is never thresholded.
template <typename Scalar>
CovEstimate<Scalar> estimate_poet(const Matrix<Scalar>& data, Index k, Scalar a) {
  if (!(a >= Scalar(0) && a <= Scalar(1))) {
    throw std::invalid_argument("estimate_poet: threshold must lie in [0, 1]");
  }
  const Matrix<Scalar> s = sample_cov(data);
  const EigenSystem<Scalar> es = eig_sym(s);
  if (k < 1 || k >= s.rows()) {
    throw std::invalid_argument("estimate_poet: K must be in [1, p)");
  }
  const Matrix<Scalar> low = rank_k_approx(es, k);
  const Matrix<Scalar> raw = s - low;
  const Index p = s.rows();

  Matrix<Scalar> thresholded = raw;
  if (a > Scalar(0)) {
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        if (i == j) continue;
        const Scalar scale = raw(i, i) * raw(j, j);
        const bool keep = scale > Scalar(0) && std::abs(raw(i, j)) >= a * std::sqrt(scale);
        if (!keep) thresholded(i, j) = Scalar(0);
      }
    }
  }
  CovEstimate<Scalar> est;
  est.method = CovMethod::poet;
  est.threshold_used = a;
  est.low_rank = low;
  est.residual = thresholded;
  est.sigma = low + thresholded;
  return est;
}

template <typename Scalar>
CovEstimate<Scalar> estimate_sample(const Matrix<Scalar>& data) {
  CovEstimate<Scalar> est;
  est.method = CovMethod::sample;
  est.sigma = sample_cov(data);
  return est;
}

/// Diagonal-only estimate diag(S); its inverse is the FAIR-style Omega.
template <typename Scalar>
CovEstimate<Scalar> estimate_diagonal(const Matrix<Scalar>& data) {
  CovEstimate<Scalar> est;
  est.method = CovMethod::diagonal;
  est.sigma = sample_cov(data).diagonal().asDiagonal();
  return est;
}

/// Inverse of A + B B^T through the SVD of A^{-1/2} B; the p x p inverse of
/// the sum is never formed directly.
template <typename Scalar>
Matrix<Scalar> factor_precision(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  detail::require_square_finite(a, "factor_precision");
  if (b.size() != 0 && b.rows() != a.rows()) {
    throw std::invalid_argument("factor_precision: loading matrix row count must match A");
  }
  const EigenSystem<Scalar> es = eig_sym(a);
  const Scalar top = es.values.cwiseAbs().maxCoeff();
  const Scalar lambda_min = es.values.minCoeff();
  if (lambda_min <= Scalar(1e-12) * top) {
    std::ostringstream os;
    os << "factor_precision: A is numerically singular (lambda_min = " << lambda_min << ")";
    throw numerical_error(os.str());
  }
  const Vector<Scalar> inv_vals = es.values.cwiseInverse();
  const Vector<Scalar> inv_sqrt_vals = es.values.cwiseSqrt().cwiseInverse();
  const Matrix<Scalar> a_inv = symmetrize<Scalar>(es.vectors * inv_vals.asDiagonal() * es.vectors.transpose());
  if (b.size() == 0 || b.cols() == 0) return a_inv;

  const Matrix<Scalar> a_inv_sqrt = (es.vectors * inv_sqrt_vals.asDiagonal() * es.vectors.transpose()).eval();
  const Matrix<Scalar> m = a_inv_sqrt * b;
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU);
  const Vector<Scalar> sing = svd.singularValues();
  Vector<Scalar> weights(sing.size());
  for (Index i = 0; i < sing.size(); ++i) {
    const Scalar s2 = sing[i] * sing[i];
    weights[i] = s2 / (Scalar(1) + s2);
  }
  const Matrix<Scalar> core = svd.matrixU() * weights.asDiagonal() * svd.matrixU().transpose();
  return symmetrize<Scalar>(a_inv - a_inv_sqrt * core * a_inv_sqrt);
}

/// Loading matrix B with L = B B^T from the eigen-factorization of L.
/// Negative eigenvalues among the kept ones are clipped to zero.
template <typename Scalar>
Matrix<Scalar> loading_factor(const Matrix<Scalar>& low_rank) {
  const EigenSystem<Scalar> es = eig_sym(low_rank);
  const Index r = detail::rank_of_kept<Scalar>(es.values);
  Matrix<Scalar> b(low_rank.rows(), r);
  bool clipped = false;
  for (Index k = 0; k < r; ++k) {
    Scalar v = es.values[k];
    if (v < Scalar(0)) {
      v = Scalar(0);
      clipped = true;
    }
    b.col(k) = es.vectors.col(k) * std::sqrt(v);
  }
  if (clipped) {
    std::cerr << "loading_factor: negative eigenvalues in the low-rank part were clipped to zero\n";
  }
  return b;
}

/// Precision of a decomposition L + A through the factor formula.
template <typename Scalar>
Matrix<Scalar> ddpca_precision(const Decomposition<Scalar>& dec) {
  return factor_precision<Scalar>(dec.dominant, loading_factor<Scalar>(dec.low_rank));
}

/// Inverse of an estimated covariance matrix. DD-PCA estimates route through
/// the factor formula; everything else inverts densely by eigendecomposition.
/// When the dominant part alone is singular but L + A is not, the dense path
/// takes over.
template <typename Scalar>
Matrix<Scalar> precision_from_estimate(const CovEstimate<Scalar>& est) {
  if (est.method == CovMethod::ddpca && est.decomposition.has_value()) {
    try {
      return ddpca_precision(*est.decomposition);
    } catch (const numerical_error&) {
    }
  }
  const EigenSystem<Scalar> es = eig_sym(est.sigma);
  const Scalar top = es.values.cwiseAbs().maxCoeff();
  const Scalar lambda_min = es.values.minCoeff();
  if (top == Scalar(0) || lambda_min <= Scalar(1e-12) * top) {
    std::ostringstream os;
    os << "precision_from_estimate: estimate is numerically singular (lambda_min = " << lambda_min << ")";
    throw numerical_error(os.str());
  }
  return symmetrize<Scalar>(es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());
}

/// The eight error numbers of a covariance study: Frobenius and spectral
/// errors on sigma, its inverse, the noise part and the noise precision.
template <typename Scalar>
struct ErrorReport {
  Scalar sigma_frob = 0, sigma_spec = 0;
  Scalar precision_frob = 0, precision_spec = 0;
  Scalar residual_frob = 0, residual_spec = 0;
  Scalar residual_inv_frob = 0, residual_inv_spec = 0;
};

template <typename Scalar>
ErrorReport<Scalar> error_report(const CovEstimate<Scalar>& est,
                                 const Matrix<Scalar>& sigma_truth,
                                 const Matrix<Scalar>& precision_truth,
                                 const Matrix<Scalar>& residual_truth,
                                 const Matrix<Scalar>& residual_inv_truth) {
  if (est.sigma.rows() != sigma_truth.rows() || sigma_truth.rows() != precision_truth.rows() ||
      residual_truth.rows() != sigma_truth.rows() || residual_inv_truth.rows() != sigma_truth.rows()) {
    throw std::invalid_argument("error_report: dimension mismatch");
  }
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  ErrorReport<Scalar> report;
  report.sigma_frob = (est.sigma - sigma_truth).norm();
  report.sigma_spec = spectral_norm<Scalar>(symmetrize<Scalar>(est.sigma - sigma_truth));
  try {
    const Matrix<Scalar> omega = precision_from_estimate(est);
    report.precision_frob = (omega - precision_truth).norm();
    report.precision_spec = spectral_norm<Scalar>(symmetrize<Scalar>(omega - precision_truth));
  } catch (const numerical_error&) {
    report.precision_frob = report.precision_spec = inf;
  }
  if (est.residual.size() == 0) {
    const Scalar nan = std::numeric_limits<Scalar>::quiet_NaN();
    report.residual_frob = report.residual_spec = nan;
    report.residual_inv_frob = report.residual_inv_spec = nan;
    return report;
  }
  report.residual_frob = (est.residual - residual_truth).norm();
  report.residual_spec = spectral_norm<Scalar>(symmetrize<Scalar>(est.residual - residual_truth));
  const EigenSystem<Scalar> es = eig_sym(est.residual);
  const Scalar top = es.values.cwiseAbs().maxCoeff();
  if (top == Scalar(0) || es.values.minCoeff() <= Scalar(1e-12) * top) {
    report.residual_inv_frob = report.residual_inv_spec = inf;
  } else {
    const Matrix<Scalar> inv =
        symmetrize<Scalar>(es.vectors * es.values.cwiseInverse().asDiagonal() * es.vectors.transpose());
    report.residual_inv_frob = (inv - residual_inv_truth).norm();
    report.residual_inv_spec = spectral_norm<Scalar>(symmetrize<Scalar>(inv - residual_inv_truth));
  }
  return report;
}

/// Recipe for building a covariance estimate; the currency of the backtest
/// and cross-validation drivers.
struct EstimatorSpec {
  std::string method = "ddpca";  // ddpca | poet | sample | diagonal
  int rank = 3;
  double threshold = 0.5;  // poet correlation threshold
  double c = 1.0;          // dominance constant for ddpca
};

template <typename Scalar>
CovEstimate<Scalar> estimate(const Matrix<Scalar>& data, const EstimatorSpec& spec) {
  if (spec.method == "ddpca") {
    SolverConfig<Scalar> config;
    config.c = Scalar(spec.c);
    return estimate_ddpca<Scalar>(data, spec.rank, config);
  }
  if (spec.method == "poet") return estimate_poet<Scalar>(data, spec.rank, Scalar(spec.threshold));
  if (spec.method == "sample") return estimate_sample<Scalar>(data);
  if (spec.method == "diagonal") return estimate_diagonal<Scalar>(data);
  throw std::invalid_argument("estimate: unknown method '" + spec.method + "'");
}

}  // namespace ddpca
