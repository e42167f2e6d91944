#pragma once

#include "stiefel/odeint.hpp"
#include "stiefel/rolling.hpp"
#include "stiefel/vec.hpp"

#include <span>
#include <string>
#include <vector>

namespace stiefel {

/// Orthogonal change of coordinates on vec(R^{n x k}) at E = [I_k; 0]:
/// rows 0..ell_t-1 span vec(T_E), the last ell_n rows span vec(N_E), last row vec(E)^T / sqrt(k).
struct ClassicalFrame {
  Eigen::Index n = 0;
  Eigen::Index k = 0;
  Eigen::Index ell_t = 0;
  Eigen::Index ell_n = 0;
  Matrix p0;
};

ClassicalFrame build_P0(Eigen::Index n, Eigen::Index k);

/// Pi_T A Pi_T + Pi_N A Pi_N with coordinate projectors; A is given in P0 coordinates.
Matrix bl_diag(const Matrix& a, const ClassicalFrame& frame);

struct ClassicalSTilde {
  std::vector<double> times;
  std::vector<Matrix> s_tilde;
  std::vector<std::string> warnings;
};

/// Q^T Q' at each sample, Q = theta kron R, from five-point central differences of R and theta.
std::vector<Matrix> body_velocity(std::span<const GroupPair> q, std::span<const double> times);

/// Integrates S~' = -P0^T (P0 Q^T Q' P0^T)_bl P0 S~ with S~(0) = I by RK4 on the sample grid.
/// The generator is linearly interpolated between samples.
ClassicalSTilde classical_S_tilde(std::span<const GroupPair> q, std::span<const double> times,
                                  const ClassicalFrame& frame, const IntegratorConfig& cfg = {});

/// vec o (push o S o lift) on vec(T_E) plus vec o T on vec(N_E), from an extrinsic trajectory at E.
std::vector<Matrix> assemble_S_tilde(const RollingTrajectory& traj, const ClassicalFrame& frame);

/// vec(beta(t)) - vec(E)
std::vector<Vector> translation_curve(std::span<const Matrix> beta, Eigen::Index n, Eigen::Index k);

struct ClassicalComparison {
  double s_tilde_deviation = 0.0;        // max |assembled - classical|_F
  double e_invariance = 0.0;             // max |S~ vec(E) - vec(E)| over both formulations
  double translation_ode_residual = 0.0; // max |s' - S~^T Q^T Q' vec(E)|
  double rotational_consistency = 0.0;   // max |Q S~ vec(E) - vec(beta_hat)|
  double assembled_orthogonality = 0.0;  // max |S~^T S~ - I|
  double identity_deviation = 0.0;       // max |S~ - I| (classical)
  double tangential_block_deviation = 0.0;  // max |(P0 S~ P0^T)_TT - I| (assembled); vanishes for k = 1
  std::vector<std::string> warnings;
};

/// Runs both formulations on an extrinsic trajectory based at E.
ClassicalComparison compare_classical(const RollingTrajectory& traj, const IntegratorConfig& cfg = {});

}  // namespace stiefel
