#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <vector>

#include "ddpca/linalg.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

/// Diagonal-dominance margin: min_j { b_jj - sum_{i != j} |b_ji| }, using
/// row sums. Nonnegative exactly when every row is diagonally dominant.
template <typename Scalar>
Scalar dd_margin(const Matrix<Scalar>& b) {
  detail::require_square_finite(b, "dd_margin");
  const Index p = b.rows();
  Scalar margin = std::numeric_limits<Scalar>::max();
  for (Index j = 0; j < p; ++j) {
    Scalar off = Scalar(0);
    for (Index i = 0; i < p; ++i) {
      if (i != j) off += std::abs(b(j, i));
    }
    margin = std::min(margin, b(j, j) - off);
  }
  return margin;
}

namespace detail {

template <typename Scalar>
Scalar soft_shrink(Scalar value, Scalar amount) {
  const Scalar mag = std::max(std::abs(value) - amount, Scalar(0));
  return value < Scalar(0) ? -mag : mag;
}

// Row projection onto { v : v_j >= c * sum_{i != j} |v_i| } for any c > 0.
// The shrinkage is an active-set scan on the sign-reduced quadratic program:
// off-diagonal magnitudes are soft-thresholded by u and the diagonal is
// raised by u/c, where u solves  a_jj + u/c = c * sum_i (|a_ji| - u)^+ .
// The left side is increasing and the right side decreasing in u, so exactly
// one segment of the piecewise-linear equation is consistent.
template <typename Scalar>
void project_row_cone(Eigen::Ref<Vector<Scalar>> row, Index j, Scalar c) {
  const Index p = row.size();
  std::vector<Scalar> mags;
  mags.reserve(static_cast<size_t>(p - 1));
  Scalar sum_abs = Scalar(0);
  for (Index i = 0; i < p; ++i) {
    if (i == j) continue;
    const Scalar m = std::abs(row[i]);
    mags.push_back(m);
    sum_abs += m;
  }
  if (row[j] >= c * sum_abs) return;  // already in the cone

  std::sort(mags.begin(), mags.end());
  const Index q = p - 1;
  // suffix[k] = sum of the q - k largest magnitudes
  std::vector<Scalar> suffix(static_cast<size_t>(q) + 1, Scalar(0));
  for (Index k = q - 1; k >= 0; --k) {
    suffix[static_cast<size_t>(k)] = suffix[static_cast<size_t>(k) + 1] + mags[static_cast<size_t>(k)];
  }
  const Scalar scale = std::max({Scalar(1), std::abs(row[j]), sum_abs});
  const Scalar eps = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;

  Scalar u = std::max(-c * row[j], Scalar(0));  // all-zeroed fallback segment
  for (Index k = 0; k <= q; ++k) {
    const Scalar survivors = Scalar(q - k);
    const Scalar cand = c * (c * suffix[static_cast<size_t>(k)] - row[j]) / (Scalar(1) + c * c * survivors);
    const Scalar lo = (k == 0) ? Scalar(0) : mags[static_cast<size_t>(k) - 1];
    const Scalar hi = (k == q) ? std::numeric_limits<Scalar>::max() : mags[static_cast<size_t>(k)];
    if (cand >= lo - eps && cand <= hi + eps) {
      u = std::max(cand, Scalar(0));
      break;
    }
  }
  for (Index i = 0; i < p; ++i) {
    if (i != j) row[i] = soft_shrink(row[i], u);
  }
  row[j] += u / c;
}

// Mendoza-Raydan-Tarazaga row projection onto the c = 1 dominance cone.
// Returns false when the threshold search finds no admissible index, in
// which case the caller falls back to the direct row program.
template <typename Scalar>
bool mrt_project_row(Eigen::Ref<Vector<Scalar>> row, Index j) {
  const Index p = row.size();
  Scalar sum_off = Scalar(0);
  Scalar max_off = Scalar(0);
  for (Index i = 0; i < p; ++i) {
    if (i == j) continue;
    const Scalar m = std::abs(row[i]);
    sum_off += m;
    max_off = std::max(max_off, m);
  }
  const Scalar diag = row[j];
  if (diag >= sum_off) return true;  // dominant row, unchanged
  if (diag < -sum_off || (diag < Scalar(0) && std::abs(diag) > max_off)) {
    row.setZero();
    return true;
  }

  // Off-diagonal magnitudes sorted ascending; the diagonal keeps 1-based
  // position j + 1 inside the reordered vector e.
  const Index q = p - 1;
  std::vector<Scalar> mags;
  mags.reserve(static_cast<size_t>(q));
  for (Index i = 0; i < p; ++i) {
    if (i != j) mags.push_back(std::abs(row[i]));
  }
  std::sort(mags.begin(), mags.end());
  std::vector<Scalar> suffix(static_cast<size_t>(q) + 1, Scalar(0));
  for (Index k = q - 1; k >= 0; --k) {
    suffix[static_cast<size_t>(k)] = suffix[static_cast<size_t>(k) + 1] + mags[static_cast<size_t>(k)];
  }

  const Index diag_pos = j + 1;  // 1-based position of the diagonal in e
  bool found = false;
  Scalar shift = Scalar(0);
  for (Index m = 1; m <= p; ++m) {
    if (m == diag_pos) continue;
    const Index t = (m < diag_pos) ? m - 1 : m - 2;  // index into mags
    const Scalar em = mags[static_cast<size_t>(t)];
    if (em <= Scalar(0)) continue;
    const Scalar dm = suffix[static_cast<size_t>(t)] - diag;
    const Scalar denom = (m < diag_pos) ? Scalar(p - m + 1) : Scalar(p - m + 2);
    const Scalar dbar = dm / denom;
    if (em >= dbar) {
      shift = dbar;
      found = true;
      break;
    }
  }
  if (!found) return false;

  for (Index i = 0; i < p; ++i) {
    if (i != j) row[i] = soft_shrink(row[i], shift);
  }
  row[j] = diag + shift;
  return true;
}

}  // namespace detail

/// Euclidean projection onto DD+ (c = 1), row by row via the MRT scheme.
/// Rows are independent; a row already in the cone is returned unchanged.
template <typename Scalar>
Matrix<Scalar> project_dd(const Matrix<Scalar>& a) {
  detail::require_square_finite(a, "project_dd");
  Matrix<Scalar> out = a;
  const Index p = a.rows();
  for (Index j = 0; j < p; ++j) {
    Vector<Scalar> row = out.row(j).transpose();
    if (!detail::mrt_project_row<Scalar>(row, j)) {
      std::cerr << "project_dd: row " << j
                << " had no admissible MRT threshold index, using the direct row program\n";
      detail::project_row_cone<Scalar>(row, j, Scalar(1));
    }
    out.row(j) = row.transpose();
  }
  return out;
}

/// Euclidean projection onto DD_c+ for a general dominance constant c > 0.
/// Delegates to the MRT scheme when c = 1.
template <typename Scalar>
Matrix<Scalar> project_dd_c(const Matrix<Scalar>& a, Scalar c) {
  detail::require_square_finite(a, "project_dd_c");
  if (!(c > Scalar(0))) {
    throw std::invalid_argument("project_dd_c: dominance constant must be positive");
  }
  if (c == Scalar(1)) return project_dd(a);
  Matrix<Scalar> out = a;
  const Index p = a.rows();
  for (Index j = 0; j < p; ++j) {
    Vector<Scalar> row = out.row(j).transpose();
    detail::project_row_cone<Scalar>(row, j, c);
    out.row(j) = row.transpose();
  }
  return out;
}

/// Dykstra alternation between DD_c+ and the symmetric matrices. Stops when
/// the change of the correction increment drops below tol * ||a||_F and the
/// symmetrized iterate sits inside the cone up to the same tolerance; hitting
/// max_iter flags the result instead of failing.
template <typename Scalar>
ProjectionResult<Scalar> project_sdd(const Matrix<Scalar>& a,
                                     ConeSpec<Scalar> cone = {},
                                     Scalar tol = Scalar(1e-8),
                                     int max_iter = 10000) {
  detail::require_square_finite(a, "project_sdd");
  const Scalar anorm = a.norm();
  const Scalar threshold = tol * anorm;

  Matrix<Scalar> g = a;
  Matrix<Scalar> inc = Matrix<Scalar>::Zero(a.rows(), a.cols());
  ProjectionResult<Scalar> result;
  result.converged = false;
  for (int t = 1; t <= max_iter; ++t) {
    const Matrix<Scalar> target = symmetrize(g) - inc;
    const Matrix<Scalar> g_next = project_dd_c(target, cone.c);
    const Matrix<Scalar> inc_next = g_next - target;
    const Scalar delta = (inc_next - inc).norm();
    g = g_next;
    inc = inc_next;
    result.iterations = t;
    result.residual = delta;
    if (delta <= threshold) {
      Matrix<Scalar> x = symmetrize(g);
      if (dd_margin(x) >= -threshold) {
        result.matrix = std::move(x);
        result.converged = true;
        return result;
      }
    }
  }
  result.matrix = symmetrize(g);
  return result;
}

}  // namespace ddpca
