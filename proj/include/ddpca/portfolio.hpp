#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ddpca/covariance.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

/// Minimum-risk weights (1' Sigma^-1 1)^-1 Sigma^-1 1, computed by solving
/// the linear system and renormalizing; no dense inverse is formed.
template <typename Scalar>
Vector<Scalar> min_risk_weights(const Matrix<Scalar>& sigma) {
  detail::require_square_finite(sigma, "min_risk_weights");
  const Index p = sigma.rows();
  const Vector<Scalar> ones = Vector<Scalar>::Ones(p);
  Eigen::LDLT<Matrix<Scalar>> ldlt(sigma);
  if (ldlt.info() != Eigen::Success) {
    throw numerical_error("min_risk_weights: factorization failed");
  }
  Vector<Scalar> solved = ldlt.solve(ones);
  const Scalar residual = (sigma * solved - ones).norm() / std::sqrt(Scalar(p));
  if (!solved.allFinite() || residual > Scalar(1e-6) * std::max(Scalar(1), sigma.norm())) {
    throw numerical_error("min_risk_weights: covariance matrix is numerically singular");
  }
  const Scalar total = solved.sum();
  if (total == Scalar(0) || !std::isfinite(total)) {
    throw numerical_error("min_risk_weights: 1' Sigma^-1 1 vanished");
  }
  return solved / total;
}

/// Overload for estimates carrying a decomposition L + A: applies the
/// Woodbury identity with solves against A, avoiding the p x p inverse.
template <typename Scalar>
Vector<Scalar> min_risk_weights(const CovEstimate<Scalar>& est) {
  if (!(est.method == CovMethod::ddpca && est.decomposition.has_value())) {
    return min_risk_weights(est.sigma);
  }
  const Decomposition<Scalar>& dec = *est.decomposition;
  const Index p = est.sigma.rows();
  const Vector<Scalar> ones = Vector<Scalar>::Ones(p);
  const Matrix<Scalar> b = loading_factor(dec.low_rank);
  Eigen::LDLT<Matrix<Scalar>> ldlt(dec.dominant);
  if (ldlt.info() != Eigen::Success) {
    return min_risk_weights(est.sigma);
  }
  const Vector<Scalar> a_inv_ones = ldlt.solve(ones);
  Vector<Scalar> solved;
  if (b.cols() == 0) {
    solved = a_inv_ones;
  } else {
    const Matrix<Scalar> a_inv_b = ldlt.solve(b);
    const Matrix<Scalar> small =
        Matrix<Scalar>::Identity(b.cols(), b.cols()) + b.transpose() * a_inv_b;
    solved = a_inv_ones - a_inv_b * small.ldlt().solve(b.transpose() * a_inv_ones);
  }
  const Scalar residual = (est.sigma * solved - ones).norm() / std::sqrt(Scalar(p));
  if (!solved.allFinite() || residual > Scalar(1e-6) * std::max(Scalar(1), est.sigma.norm())) {
    // Woodbury route degraded (singular dominant part); fall back to the
    // direct solve against the full estimate.
    return min_risk_weights(est.sigma);
  }
  const Scalar total = solved.sum();
  if (total == Scalar(0) || !std::isfinite(total)) {
    throw numerical_error("min_risk_weights: 1' Sigma^-1 1 vanished");
  }
  return solved / total;
}

/// Realized risk (1/T) sum_t (y_t' w)^2.
template <typename Scalar>
Scalar realized_risk(const Matrix<Scalar>& returns, const Vector<Scalar>& weights) {
  if (returns.rows() < 1) throw std::invalid_argument("realized_risk: need at least one period");
  if (returns.cols() != weights.size()) {
    throw std::invalid_argument("realized_risk: dimension mismatch between returns and weights");
  }
  const Vector<Scalar> projected = returns * weights;
  return projected.squaredNorm() / Scalar(returns.rows());
}

/// Daily return panel keyed by YYYYMMDD dates.
template <typename Scalar>
struct ReturnSeries {
  std::vector<long> dates;  // strictly increasing
  Matrix<Scalar> returns;   // T x p

  void validate() const {
    if (returns.cols() < 2) throw std::invalid_argument("ReturnSeries: need p >= 2 assets");
    if (static_cast<Index>(dates.size()) != returns.rows()) {
      throw std::invalid_argument("ReturnSeries: date column length must match returns");
    }
    for (size_t i = 1; i < dates.size(); ++i) {
      if (dates[i] <= dates[i - 1]) {
        throw std::invalid_argument("ReturnSeries: dates must be strictly increasing");
      }
    }
  }
};

template <typename Scalar>
struct BacktestResult {
  std::vector<long> months;                         // YYYYMM, scored months only
  std::vector<std::string> method_names;
  Matrix<Scalar> risks;                             // months x methods
  Matrix<Scalar> improvement;                       // (R_method - R_baseline)/R_baseline
  Index baseline = 0;
  std::vector<std::vector<Vector<Scalar>>> weights;  // [month][method]
};

/// Monthly rolling backtest: on the first trading day of each month, fit each
/// estimator on the trailing window of days strictly before that month and
/// score the weights on the month's days. The baseline for the improvement
/// ratio is the first estimator tagged ddpca (or the first one otherwise).
template <typename Scalar>
BacktestResult<Scalar> rolling_backtest(const ReturnSeries<Scalar>& series, Index window_n,
                                        const std::vector<EstimatorSpec>& estimators) {
  series.validate();
  if (estimators.empty()) throw std::invalid_argument("rolling_backtest: need at least one estimator");
  if (window_n < 2) throw std::invalid_argument("rolling_backtest: window must cover at least 2 days");

  const Index days = series.returns.rows();
  std::vector<std::pair<long, std::pair<Index, Index>>> months;  // month -> [first, last)
  for (Index t = 0; t < days; ++t) {
    const long month = series.dates[static_cast<size_t>(t)] / 100;
    if (months.empty() || months.back().first != month) {
      months.push_back({month, {t, t + 1}});
    } else {
      months.back().second.second = t + 1;
    }
  }

  BacktestResult<Scalar> result;
  for (const auto& spec : estimators) result.method_names.push_back(spec.method);
  for (size_t m = 0; m < estimators.size(); ++m) {
    if (estimators[m].method == "ddpca") {
      result.baseline = static_cast<Index>(m);
      break;
    }
  }

  std::vector<std::vector<Scalar>> risk_rows;
  for (const auto& [month, span] : months) {
    const Index first_day = span.first;
    if (first_day < window_n) continue;  // not enough strictly-prior history
    const Matrix<Scalar> window = series.returns.middleRows(first_day - window_n, window_n);
    const Matrix<Scalar> month_returns = series.returns.middleRows(first_day, span.second - first_day);
    std::vector<Scalar> risks;
    std::vector<Vector<Scalar>> month_weights;
    for (const auto& spec : estimators) {
      const CovEstimate<Scalar> est = estimate<Scalar>(window, spec);
      Vector<Scalar> w = min_risk_weights(est);
      risks.push_back(realized_risk(month_returns, w));
      month_weights.push_back(std::move(w));
    }
    result.months.push_back(month);
    risk_rows.push_back(std::move(risks));
    result.weights.push_back(std::move(month_weights));
  }
  if (result.months.empty()) {
    std::ostringstream os;
    os << "rolling_backtest: no month has " << window_n << " days of prior history";
    throw std::invalid_argument(os.str());
  }

  const Index scored = static_cast<Index>(result.months.size());
  const Index methods = static_cast<Index>(estimators.size());
  result.risks.resize(scored, methods);
  result.improvement.resize(scored, methods);
  for (Index m = 0; m < scored; ++m) {
    for (Index e = 0; e < methods; ++e) {
      result.risks(m, e) = risk_rows[static_cast<size_t>(m)][static_cast<size_t>(e)];
    }
    const Scalar base = result.risks(m, result.baseline);
    for (Index e = 0; e < methods; ++e) {
      result.improvement(m, e) = base != Scalar(0) ? (result.risks(m, e) - base) / base : Scalar(0);
    }
  }
  return result;
}

}  // namespace ddpca
