#pragma once

#include "stiefel/lie_core.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace stiefel {

/// n x k matrix with orthonormal columns.
class StiefelPoint {
 public:
  /// Inputs within 10*tol of orthonormality are polar-repaired, worse inputs throw.
  explicit StiefelPoint(Matrix x);

  /// E = [I_k; 0]
  static StiefelPoint canonical(Eigen::Index n, Eigen::Index k);

  const Matrix& matrix() const noexcept { return x_; }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index k() const noexcept { return x_.cols(); }

 private:
  Matrix x_;
};

class TangentVec {
 public:
  /// Requires X^T v + v^T X = 0 within tolerance.
  TangentVec(StiefelPoint base, Matrix v);

  const StiefelPoint& base() const noexcept { return base_; }
  const Matrix& matrix() const noexcept { return v_; }

 private:
  StiefelPoint base_;
  Matrix v_;
};

class NormalVec {
 public:
  /// Requires z = X S with S symmetric, within tolerance.
  NormalVec(StiefelPoint base, Matrix z);

  const StiefelPoint& base() const noexcept { return base_; }
  const Matrix& matrix() const noexcept { return z_; }

 private:
  StiefelPoint base_;
  Matrix z_;
};

/// Orthogonal projection of so(n) x so(k) onto p with respect to alpha_inner.
LieAlgPair pr_p(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi);
LieAlgPair pr_h(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi);

/// True when pr_p fixes xi up to tol (relative to max(1, |xi|)).
bool in_p(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi, double tol = 1e-8);

LieAlgPair lift_tangent(const StiefelPoint& x, const AlphaParam& alpha, const TangentVec& v);
/// Same formula without the tangency check.
LieAlgPair lift_matrix(const StiefelPoint& x, const AlphaParam& alpha, const Matrix& v);

/// Omega X - X eta for any xi, no membership check.
Matrix orbit_velocity(const StiefelPoint& x, const LieAlgPair& xi);
/// Checked version; rejects xi outside p.
TangentVec push_tangent(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi);

/// 2 tr(V^T W) - ((2a+1)/(a+1)) tr(V^T X X^T W)
double alpha_metric(const StiefelPoint& x, const Matrix& v, const Matrix& w, const AlphaParam& alpha);
double alpha_metric(const StiefelPoint& x, const TangentVec& v, const TangentVec& w, const AlphaParam& alpha);

/// 1/2 X (X^T M + M^T X)
Matrix normal_part(const Matrix& x, const Matrix& m);
TangentVec tangent_project(const StiefelPoint& x, const Matrix& m);
NormalVec normal_project(const StiefelPoint& x, const Matrix& m);

/// Basis A_1..A_d of p at (X, alpha) together with its alpha_inner Gram matrix.
class ReductiveFrame {
 public:
  static std::shared_ptr<const ReductiveFrame> build(const StiefelPoint& x, const AlphaParam& alpha);

  const StiefelPoint& base() const noexcept { return base_; }
  const AlphaParam& alpha() const noexcept { return alpha_; }
  int dim() const noexcept { return static_cast<int>(basis_.size()); }
  const std::vector<LieAlgPair>& basis() const noexcept { return basis_; }
  const Matrix& gram() const noexcept { return gram_; }
  /// gram == I
  bool orthonormal() const noexcept { return orthonormal_; }

  /// Coordinates of the alpha-orthogonal projection of xi onto p.
  Vector coords(const LieAlgPair& xi) const;
  LieAlgPair element(const Vector& c) const;

  /// Matrix of pr_p o ad_w restricted to p; w may be any element of g.
  Matrix ad_matrix(const LieAlgPair& w) const;
  /// Same for w in p given by coordinates, via cached structure constants.
  Matrix ad_matrix(const Vector& w) const;
  /// Matrix of a linear map p -> g, composed with the projection onto p.
  Matrix operator_matrix(const std::function<LieAlgPair(const LieAlgPair&)>& f) const;

  double inner(const Vector& a, const Vector& b) const;
  /// max |S^T G S - G|
  double g_orthogonality_defect(const Matrix& s) const;

  Vector coords_of_tangent(const Matrix& v) const;
  Matrix tangent_of_coords(const Vector& c) const;

 private:
  ReductiveFrame(StiefelPoint x, AlphaParam alpha) : base_(std::move(x)), alpha_(alpha) {}

  StiefelPoint base_;
  AlphaParam alpha_;
  std::vector<LieAlgPair> basis_;
  Matrix gram_;
  Eigen::PartialPivLU<Matrix> gram_lu_;
  bool orthonormal_ = false;
  std::vector<Matrix> ad_basis_;
};

std::shared_ptr<const ReductiveFrame> reductive_frame(const StiefelPoint& x, const AlphaParam& alpha);

/// pr_p([a, b]) for a, b in p.
LieAlgPair bracket_defect(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& a,
                          const LieAlgPair& b);

/// Element of p at E built from an (n-k) x k block B: ((0, -B^T; B, 0), 0).
LieAlgPair block_generator(Eigen::Index n, const Matrix& b);

}  // namespace stiefel
