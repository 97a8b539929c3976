#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ddpca {

inline constexpr const char* kVersion = "0.1.0";

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thrown when an algorithm fails for numerical (not usage) reasons.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// Dominance cone parameters: a_jj >= c * sum_{i != j} |a_ji| per row.
template <typename Scalar>
struct ConeSpec {
  Scalar c = Scalar(1);
};

template <typename Scalar>
struct ProjectionResult {
  Matrix<Scalar> matrix;
  Index iterations = 0;
  Scalar residual = Scalar(0);  // final Dykstra increment change, Frobenius
  bool converged = true;
};

/// Tuning knobs shared by the decomposition solvers. Fields not used by a
/// given solver are ignored by it.
template <typename Scalar>
struct SolverConfig {
  Scalar c = Scalar(1);          // dominance constant
  Scalar lambda = Scalar(1);     // nuclear-norm weight (relaxed ADMM only)
  Scalar rho = Scalar(1);        // augmented-Lagrangian penalty
  int max_iter = 500;
  Scalar tol = Scalar(1e-7);     // relative-change stopping threshold
  Scalar dykstra_tol = Scalar(1e-8);
  int dykstra_max_iter = 10000;
  // Inexact inner projection used by the A-step of the relaxed ADMM.
  Scalar admm_inner_tol = Scalar(1e-6);
  int admm_inner_max_iter = 2000;
};

/// Defaults for the iterative projection solver (fewer outer iterations).
template <typename Scalar>
SolverConfig<Scalar> iterative_projection_defaults() {
  SolverConfig<Scalar> cfg;
  cfg.max_iter = 100;
  return cfg;
}

/// Output of any DD-PCA solver: a low-rank part plus a diagonally-dominant
/// part, with per-iteration diagnostics.
template <typename Scalar>
struct Decomposition {
  Matrix<Scalar> low_rank;   // L
  Matrix<Scalar> dominant;   // A, symmetric, in (or near) the dominance cone
  Index rank_low_rank = 0;   // eigenvalues of L above 1e-10 * |lambda_1|
  Index iterations = 0;
  std::vector<Scalar> residual_history;  // ||S - L - A||_F / ||S||_F
  std::vector<Scalar> margin_history;    // dd_margin(S - L)
  bool converged = false;
  bool input_psd_warning = false;  // input had eigenvalue < -1e-8 * ||S||

  // Relaxed-ADMM extras (empty for the other solvers).
  Matrix<Scalar> slack;                        // E
  Matrix<Scalar> multiplier;                   // final Lagrange multiplier
  std::vector<Scalar> equality_residual_history;  // ||L + A + E - S||_F
};

}  // namespace ddpca
