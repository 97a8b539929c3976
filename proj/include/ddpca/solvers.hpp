#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "ddpca/linalg.hpp"
#include "ddpca/projection.hpp"
#include "ddpca/types.hpp"

namespace ddpca {

namespace detail {

template <typename Scalar>
void require_decomposable(const Matrix<Scalar>& s, const char* who) {
  require_square_finite(s, who);
  if (max_asymmetry(s) != Scalar(0)) {
    throw std::invalid_argument(std::string(who) + ": input must be symmetric (symmetrize first)");
  }
}

template <typename Scalar>
Index rank_of_kept(const Vector<Scalar>& kept_values) {
  if (kept_values.size() == 0) return 0;
  const Scalar top = kept_values.cwiseAbs().maxCoeff();
  if (top == Scalar(0)) return 0;
  const Scalar cut = Scalar(1e-10) * top;
  Index r = 0;
  for (Index k = 0; k < kept_values.size(); ++k) {
    if (std::abs(kept_values[k]) > cut) ++r;
  }
  return r;
}

template <typename Scalar>
Scalar safe_denom(Scalar norm) {
  return norm > Scalar(0) ? norm : Scalar(1);
}

}  // namespace detail

/// One-step DD-PCA: top-K eigen part of S followed by a single projection of
/// the residual onto the symmetric dominance cone.
template <typename Scalar>
Decomposition<Scalar> one_step_ddpca(const Matrix<Scalar>& s, Index k,
                                     const SolverConfig<Scalar>& config = {}) {
  detail::require_decomposable(s, "one_step_ddpca");
  if (k < 1 || k >= s.rows()) {
    std::ostringstream os;
    os << "one_step_ddpca: K must be in [1, p), got K=" << k << " with p=" << s.rows();
    throw std::invalid_argument(os.str());
  }
  const EigenSystem<Scalar> es = eig_sym(s);
  Decomposition<Scalar> dec;
  dec.input_psd_warning = es.values.minCoeff() < Scalar(-1e-8) * es.values.cwiseAbs().maxCoeff();
  dec.low_rank = rank_k_approx(es, k);
  dec.rank_low_rank = detail::rank_of_kept<Scalar>(es.values.head(k));

  const Matrix<Scalar> residual = s - dec.low_rank;
  const ProjectionResult<Scalar> proj =
      project_sdd<Scalar>(residual, ConeSpec<Scalar>{config.c}, config.dykstra_tol, config.dykstra_max_iter);
  dec.dominant = proj.matrix;
  dec.iterations = proj.iterations;
  dec.converged = proj.converged;
  const Scalar denom = detail::safe_denom(s.norm());
  dec.residual_history.push_back((s - dec.low_rank - dec.dominant).norm() / denom);
  dec.margin_history.push_back(dd_margin(residual));
  return dec;
}

/// Alternating projections onto the rank-K set and the row-wise dominance
/// cone (with symmetrization), run until the relative change of (L, A) drops
/// below tol or max_iter is hit.
template <typename Scalar>
Decomposition<Scalar> iterative_projection(const Matrix<Scalar>& s, Index k,
                                           const SolverConfig<Scalar>& config = iterative_projection_defaults<Scalar>()) {
  detail::require_decomposable(s, "iterative_projection");
  if (k < 1 || k >= s.rows()) {
    std::ostringstream os;
    os << "iterative_projection: K must be in [1, p), got K=" << k << " with p=" << s.rows();
    throw std::invalid_argument(os.str());
  }
  const Index p = s.rows();
  const Scalar denom = detail::safe_denom(s.norm());

  Decomposition<Scalar> dec;
  dec.low_rank = Matrix<Scalar>::Zero(p, p);
  dec.dominant = Matrix<Scalar>::Zero(p, p);
  for (int t = 1; t <= config.max_iter; ++t) {
    const Matrix<Scalar> low = rank_k_approx<Scalar>(s - dec.dominant, k);
    const Matrix<Scalar> dom = symmetrize(project_dd_c<Scalar>(s - low, config.c));
    const Scalar change = std::max((low - dec.low_rank).norm(), (dom - dec.dominant).norm()) / denom;
    dec.low_rank = low;
    dec.dominant = dom;
    dec.iterations = t;
    dec.residual_history.push_back((s - low - dom).norm() / denom);
    dec.margin_history.push_back(dd_margin<Scalar>(s - low));
    if (change < config.tol) {
      dec.converged = true;
      break;
    }
  }
  dec.rank_low_rank = numeric_rank(dec.low_rank);
  return dec;
}

/// Three-block ADMM for the convex relaxation
///   min 0.5 ||S - L - A||_F^2 + lambda ||L||_*   s.t.  A in SDD_c+.
/// The rank of L is not an input; it emerges from lambda.
template <typename Scalar>
Decomposition<Scalar> admm_relaxed(const Matrix<Scalar>& s, const SolverConfig<Scalar>& config = {}) {
  detail::require_decomposable(s, "admm_relaxed");
  if (!(config.lambda > Scalar(0)) || !(config.rho > Scalar(0))) {
    throw std::invalid_argument("admm_relaxed: lambda and rho must be positive");
  }
  const Index p = s.rows();
  const Scalar rho = config.rho;
  const Scalar snorm = s.norm();
  const Scalar denom = detail::safe_denom(snorm);

  Matrix<Scalar> low = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> dom = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> slack = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> mult = Matrix<Scalar>::Zero(p, p);

  Decomposition<Scalar> dec;
  for (int t = 1; t <= config.max_iter; ++t) {
    const Matrix<Scalar> low_next = svt<Scalar>(s - dom - slack - mult / rho, config.lambda / rho);

    const Matrix<Scalar> target = s - low_next - slack - mult / rho;
    // Inner tolerance is relative to ||S||_F, rescaled to the projection input.
    const Scalar inner_tol = config.admm_inner_tol * snorm / detail::safe_denom(target.norm());
    const Matrix<Scalar> dom_next =
        project_sdd<Scalar>(target, ConeSpec<Scalar>{config.c}, inner_tol, config.admm_inner_max_iter).matrix;

    slack = (rho / (rho + Scalar(1))) * (s - dom_next - low_next - mult / rho);
    mult += rho * (dom_next + low_next + slack - s);

    const Scalar change = std::max((low_next - low).norm(), (dom_next - dom).norm()) / denom;
    low = low_next;
    dom = dom_next;
    dec.iterations = t;
    dec.residual_history.push_back((s - low - dom).norm() / denom);
    dec.margin_history.push_back(dd_margin<Scalar>(s - low));
    dec.equality_residual_history.push_back((low + dom + slack - s).norm());
    if (change < config.tol) {
      dec.converged = true;
      break;
    }
  }
  dec.low_rank = low;
  dec.dominant = dom;
  dec.slack = slack;
  dec.multiplier = mult;
  dec.rank_low_rank = numeric_rank(low);
  return dec;
}

/// Two-block ADMM for the exact decomposition
///   min ||L||_*   s.t.  S = L + A,  A in SDD+.
/// Stated for c = 1 only; the dominance projection is row-wise with a
/// separate symmetrization variable B driven to agree with A.
template <typename Scalar>
Decomposition<Scalar> admm_exact(const Matrix<Scalar>& s, const SolverConfig<Scalar>& config = {}) {
  detail::require_decomposable(s, "admm_exact");
  if (config.c != Scalar(1)) {
    throw std::invalid_argument("admm_exact: only c = 1 is supported");
  }
  if (!(config.rho > Scalar(0))) {
    throw std::invalid_argument("admm_exact: rho must be positive");
  }
  const Index p = s.rows();
  const Scalar rho = config.rho;
  const Scalar denom = detail::safe_denom(s.norm());

  Matrix<Scalar> low = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> dom = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> mult1 = Matrix<Scalar>::Zero(p, p);
  Matrix<Scalar> mult2 = Matrix<Scalar>::Zero(p, p);

  Decomposition<Scalar> dec;
  for (int t = 1; t <= config.max_iter; ++t) {
    const Matrix<Scalar> low_next = svt<Scalar>(s - dom - mult1 / rho, Scalar(1) / rho);
    const Matrix<Scalar> sym_target = symmetrize<Scalar>(dom + mult2 / rho);
    const Matrix<Scalar> dom_next =
        project_dd<Scalar>(Scalar(0.5) * (s - low_next + sym_target - mult1 / rho - mult2 / rho));
    mult1 += rho * (dom_next + low_next - s);
    mult2 += rho * (dom_next - sym_target);

    const Scalar change = std::max((low_next - low).norm(), (dom_next - dom).norm()) / denom;
    low = low_next;
    dom = dom_next;
    dec.iterations = t;
    dec.residual_history.push_back((s - low - dom).norm() / denom);
    dec.margin_history.push_back(dd_margin<Scalar>(s - low));
    dec.equality_residual_history.push_back((dom - sym_target).norm());
    if (change < config.tol && dd_margin<Scalar>(symmetrize(dom)) >= -config.tol * denom) {
      dec.converged = true;
      break;
    }
  }
  dec.low_rank = low;
  dec.dominant = symmetrize(dom);
  dec.multiplier = mult1;
  dec.rank_low_rank = numeric_rank(low);
  return dec;
}

}  // namespace ddpca
