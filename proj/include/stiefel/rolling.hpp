#pragma once

#include "stiefel/odeint.hpp"
#include "stiefel/stiefel_geometry.hpp"
#include "stiefel/transport.hpp"

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stiefel {

/// Frobenius-orthonormal basis X*Sym of the normal space at X. Diagonal generators first,
/// then off-diagonal pairs (i < j) in row order.
class NormalFrame {
 public:
  explicit NormalFrame(const StiefelPoint& x);

  const StiefelPoint& base() const noexcept { return base_; }
  int dim() const noexcept { return static_cast<int>(basis_.size()); }
  const std::vector<Matrix>& basis() const noexcept { return basis_; }

  Vector coords(const Matrix& m) const;
  Matrix element(const Vector& c) const;
  /// Matrix of <N_i, f(N_j)>; for f leaving N_X this is P_perp o f restricted to N_X.
  Matrix operator_matrix(const std::function<Matrix(const Matrix&)>& f) const;
  /// nk x dim matrix whose columns are vec(N_i).
  Matrix vec_basis() const;

 private:
  StiefelPoint base_;
  std::vector<Matrix> basis_;
};

/// S(t) in frame coordinates.
struct IsometryOnP {
  std::shared_ptr<const ReductiveFrame> frame;
  Matrix s_mat;

  /// max |S^T G S - G|
  double drift() const { return frame->g_orthogonality_defect(s_mat); }
};

/// T(t) in NormalFrame coordinates.
struct NormalIsometry {
  std::shared_ptr<const NormalFrame> frame;
  Matrix t_mat;

  double drift() const;
};

struct RollingDiagnostics {
  double s_drift = 0.0;
  double q_drift = 0.0;
  double t_drift = 0.0;
  /// max |T(t) X - X| in normal coordinates
  double normal_fix = 0.0;
  int reprojections = 0;
  bool truncated = false;
  double truncated_at = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> messages;
};

struct RollingTrajectory {
  std::shared_ptr<const ReductiveFrame> frame;
  /// Null for intrinsic rollings.
  std::shared_ptr<const NormalFrame> normal_frame;

  std::vector<double> times;
  std::vector<Vector> rolling_coords;  // alpha(t) in frame coordinates
  std::vector<Matrix> rolling_curve;   // beta(t) in T_X
  std::vector<GroupPair> q;
  std::vector<Matrix> s;
  std::vector<Matrix> t;  // empty for intrinsic rollings
  std::vector<Matrix> development;  // act(q(t), X)
  RollingDiagnostics diagnostics;

  std::size_t size() const noexcept { return times.size(); }
  bool extrinsic() const noexcept { return normal_frame != nullptr && !t.empty(); }
  const StiefelPoint& base() const { return frame->base(); }
  const AlphaParam& alpha() const { return frame->alpha(); }

  IsometryOnP isometry(std::size_t i) const { return {frame, s.at(i)}; }
  NormalIsometry normal_isometry(std::size_t i) const { return {normal_frame, t.at(i)}; }

  /// B(t_i) V = act(q, push(S lift(V)))
  Matrix apply_b(std::size_t i, const Matrix& v) const;
  /// C(t_i) N = act(q, T N)
  Matrix apply_c(std::size_t i, const Matrix& nrm) const;
};

/// Recomputes drift entries of traj.diagnostics from the stored samples.
void audit(RollingTrajectory& traj);

/// Defect above which S is considered to have left O(p); the run is truncated there.
inline constexpr double kSExitTolerance = 1e-6;

RollingTrajectory intrinsic_roll(const StiefelPoint& x, const AlphaParam& alpha, const ControlCurve& u,
                                 std::span<const double> grid, const IntegratorConfig& cfg);

/// Uses alpha = -1/2 and additionally integrates T(t).
RollingTrajectory extrinsic_roll(const StiefelPoint& x, const ControlCurve& u, std::span<const double> grid,
                                 const IntegratorConfig& cfg);

/// xi1 W - W xi2
Matrix f_op(const LieAlgPair& xi, const Matrix& w);

/// exp(t xi) exp(-t xi_h)
GroupPair horizontal_lift_special(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha, double t);

/// Rolling along the one-parameter subgroup t -> exp(t xi), evaluated at arbitrary times.
class SpecialCurveRolling {
 public:
  SpecialCurveRolling(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha);

  const std::shared_ptr<const ReductiveFrame>& frame() const noexcept { return frame_; }
  const std::shared_ptr<const NormalFrame>& normal_frame() const noexcept { return normal_frame_; }
  const LieAlgPair& xi_p() const noexcept { return xi_p_; }
  const LieAlgPair& xi_h() const noexcept { return xi_h_; }
  /// M = ad_{xi_h} + 1/2 pr_p ad_{xi_p} on p
  const Matrix& generator() const noexcept { return m_; }

  GroupPair q(double t) const;
  Matrix s(double t) const;
  /// Only valid for alpha = -1/2.
  Matrix t_normal(double t) const;
  Vector rolling_coords(double t) const;
  Matrix development(double t) const;
  /// Control u(t) = exp(t M) xi_p in frame coordinates.
  Vector control_coords(double t) const;

  RollingTrajectory sample(std::span<const double> grid, bool with_normal) const;

 private:
  LieAlgPair xi_;
  LieAlgPair xi_p_;
  LieAlgPair xi_h_;
  std::shared_ptr<const ReductiveFrame> frame_;
  std::shared_ptr<const NormalFrame> normal_frame_;
  Matrix m_;
  Vector xi_p_coords_;
  Matrix normal_generator_;  // nk x nk: P_perp o f_xi on vec
};

RollingTrajectory closed_form_intrinsic(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha,
                                        std::span<const double> grid);
RollingTrajectory closed_form_extrinsic(const LieAlgPair& xi, const StiefelPoint& x, std::span<const double> grid);

/// Max over interior samples of |d/dt beta_hat - B(t) d/dt beta|_F, derivatives by central differences.
double verify_no_slip(const RollingTrajectory& traj);

struct NoTwistResidual {
  double tangential = 0.0;
  double normal = 0.0;
  bool normal_checked = false;
};

/// Tangential part: z(t) = S(t) lift(Z0) must solve z' = -1/2 pr_p([x, z]) with x = q^{-1} q'.
/// Normal part: P_perp of d/dt C(t) N0 must vanish. Normal probes require T samples.
/// Probes are scaled to unit Frobenius norm; residuals are taken at interior samples (central differences).
NoTwistResidual verify_no_twist(const RollingTrajectory& traj, std::span<const Matrix> tangent_probes,
                                std::span<const Matrix> normal_probes = {});

/// Rotation on the n x k space (as an nk x nk matrix on vec) plus translation.
struct EuclideanMotion {
  Matrix rotation;
  Vector translation;
};

std::vector<EuclideanMotion> to_euclidean_group_pair(const RollingTrajectory& traj);

/// Inverse direction: tangential part A = R P_T, normal part C = R P_perp (both nk x nk on vec)
/// and development s + R vec(beta).
struct RecoveredRolling {
  Matrix tangential;
  Matrix normal;
  Matrix development;
};

RecoveredRolling from_euclidean_group_pair(const EuclideanMotion& motion, const StiefelPoint& x, const Matrix& beta);

}  // namespace stiefel
