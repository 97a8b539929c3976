#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ddpca/types.hpp"

namespace ddpca {

template <typename Scalar>
bool all_finite(const Matrix<Scalar>& m) {
  return m.allFinite();
}

/// Exactly symmetric copy of a square matrix: out(i,j) = (m(i,j)+m(j,i))/2.
template <typename Scalar>
Matrix<Scalar> symmetrize(const Matrix<Scalar>& m) {
  return ((m + m.transpose()) * Scalar(0.5)).eval();
}

template <typename Scalar>
Scalar max_asymmetry(const Matrix<Scalar>& m) {
  return (m - m.transpose()).template lpNorm<Eigen::Infinity>();
}

namespace detail {

template <typename Scalar>
void require_square_finite(const Matrix<Scalar>& m, const char* who) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << who << ": matrix must be square, got " << m.rows() << "x" << m.cols();
    throw std::invalid_argument(os.str());
  }
  if (m.size() == 0) {
    throw std::invalid_argument(std::string(who) + ": matrix must be non-empty");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
  }
}

}  // namespace detail

/// Eigenpairs of a symmetric matrix, ordered by |eigenvalue| descending.
/// Ties break by signed value descending, then by position in the
/// ascending-eigenvalue output of the underlying solver, so results are
/// deterministic across runs.
template <typename Scalar>
struct EigenSystem {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;  // orthonormal columns, one per value
};

template <typename Scalar>
EigenSystem<Scalar> eig_sym(const Matrix<Scalar>& m) {
  detail::require_square_finite(m, "eig_sym");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(m);
  if (solver.info() != Eigen::Success) {
    throw numerical_error("eig_sym: QL/QR iteration failed to converge within the solver's sweep limit");
  }
  const Index p = m.rows();
  std::vector<Index> order(static_cast<size_t>(p));
  std::iota(order.begin(), order.end(), Index(0));
  const auto& vals = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    const Scalar aa = std::abs(vals[a]), ab = std::abs(vals[b]);
    if (aa != ab) return aa > ab;
    return vals[a] > vals[b];
  });
  EigenSystem<Scalar> out;
  out.values.resize(p);
  out.vectors.resize(p, p);
  for (Index k = 0; k < p; ++k) {
    out.values[k] = vals[order[static_cast<size_t>(k)]];
    out.vectors.col(k) = solver.eigenvectors().col(order[static_cast<size_t>(k)]);
  }
  return out;
}

/// Best rank-K approximation in Frobenius norm: keep the K eigenpairs of
/// largest absolute eigenvalue.
template <typename Scalar>
Matrix<Scalar> rank_k_approx(const Matrix<Scalar>& m, Index k) {
  detail::require_square_finite(m, "rank_k_approx");
  if (k < 1 || k > m.rows()) {
    std::ostringstream os;
    os << "rank_k_approx: K must be in [1, " << m.rows() << "], got " << k;
    throw std::invalid_argument(os.str());
  }
  const EigenSystem<Scalar> es = eig_sym(m);
  const auto qk = es.vectors.leftCols(k);
  return (qk * es.values.head(k).asDiagonal() * qk.transpose()).eval();
}

/// Best rank-K approximation from a precomputed eigensystem.
template <typename Scalar>
Matrix<Scalar> rank_k_approx(const EigenSystem<Scalar>& es, Index k) {
  if (k < 1 || k > es.values.size()) {
    throw std::invalid_argument("rank_k_approx: K out of range");
  }
  const auto qk = es.vectors.leftCols(k);
  return (qk * es.values.head(k).asDiagonal() * qk.transpose()).eval();
}

/// Singular value thresholding of a symmetric matrix. Singular values are
/// |eigenvalues| with the eigenvalue sign reattached after shrinkage, which
/// avoids a general SVD and keeps the output exactly symmetric.
template <typename Scalar>
Matrix<Scalar> svt(const Matrix<Scalar>& m, Scalar tau) {
  detail::require_square_finite(m, "svt");
  if (tau < Scalar(0)) {
    throw std::invalid_argument("svt: threshold must be nonnegative");
  }
  EigenSystem<Scalar> es = eig_sym(m);
  for (Index k = 0; k < es.values.size(); ++k) {
    const Scalar sigma = std::abs(es.values[k]);
    const Scalar shrunk = std::max(sigma - tau, Scalar(0));
    es.values[k] = es.values[k] < Scalar(0) ? -shrunk : shrunk;
  }
  return (es.vectors * es.values.asDiagonal() * es.vectors.transpose()).eval();
}

template <typename Scalar>
Scalar frob_norm(const Matrix<Scalar>& m) {
  detail::require_square_finite(m, "frob_norm");
  return m.norm();
}

/// Largest absolute eigenvalue (input symmetric).
template <typename Scalar>
Scalar spectral_norm(const Matrix<Scalar>& m) {
  detail::require_square_finite(m, "spectral_norm");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw numerical_error("spectral_norm: eigenvalue iteration failed to converge");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Number of eigenvalues above 1e-10 * |lambda_1| in absolute value.
template <typename Scalar>
Index numeric_rank(const Matrix<Scalar>& m) {
  const EigenSystem<Scalar> es = eig_sym(m);
  const Scalar top = std::abs(es.values[0]);
  if (top == Scalar(0)) return 0;
  const Scalar cut = Scalar(1e-10) * top;
  Index r = 0;
  while (r < es.values.size() && std::abs(es.values[r]) > cut) ++r;
  return r;
}

}  // namespace ddpca
