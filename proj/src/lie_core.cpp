#include "stiefel/lie_core.hpp"

#include "stiefel/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace stiefel {

namespace {

Matrix checked_skew(Matrix m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix must be square");
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
  const double scale = std::max(1.0, max_abs(m));
  const double defect = max_abs(m + m.transpose());
  if (defect > 10.0 * kSkewTolerance * scale)
    throw DomainError(std::string(what) + ": not skew-symmetric (defect " + std::to_string(defect) + ")");
  return skew_part(m);
}

double orth_defect(const Matrix& m) {
  return max_abs(m.transpose() * m - Matrix::Identity(m.cols(), m.cols()));
}

Matrix checked_orthogonal(Matrix m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix must be square");
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
  const double defect = orth_defect(m);
  if (defect > 10.0 * kOrthTolerance)
    throw DomainError(std::string(what) + ": not orthogonal (defect " + std::to_string(defect) + ")");
  if (defect > 0.0) return polar_factor(m);
  return m;
}

}  // namespace

AlphaParam::AlphaParam(double alpha) : alpha_(alpha) {
  if (!std::isfinite(alpha) || alpha == 0.0 || alpha == -1.0)
    throw DomainError("alpha must be finite and not in {-1, 0}");
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix skew_part(const Matrix& m) { return 0.5 * (m - m.transpose()); }

LieAlgPair::LieAlgPair(Matrix omega, Matrix psi)
    : omega_(checked_skew(std::move(omega), "LieAlgPair omega")),
      psi_(checked_skew(std::move(psi), "LieAlgPair psi")) {}

LieAlgPair LieAlgPair::from_unchecked(Matrix omega, Matrix psi) {
  return LieAlgPair(Raw{}, skew_part(omega), skew_part(psi));
}

LieAlgPair LieAlgPair::zero(Eigen::Index n, Eigen::Index k) {
  return LieAlgPair(Raw{}, Matrix::Zero(n, n), Matrix::Zero(k, k));
}

double LieAlgPair::norm() const { return std::sqrt(omega_.squaredNorm() + psi_.squaredNorm()); }

LieAlgPair LieAlgPair::operator+(const LieAlgPair& o) const {
  require_same_dims(*this, o);
  return LieAlgPair(Raw{}, omega_ + o.omega_, psi_ + o.psi_);
}

LieAlgPair LieAlgPair::operator-(const LieAlgPair& o) const {
  require_same_dims(*this, o);
  return LieAlgPair(Raw{}, omega_ - o.omega_, psi_ - o.psi_);
}

LieAlgPair LieAlgPair::operator-() const { return LieAlgPair(Raw{}, -omega_, -psi_); }

LieAlgPair LieAlgPair::operator*(double s) const { return LieAlgPair(Raw{}, s * omega_, s * psi_); }

GroupPair::GroupPair(Matrix r, Matrix theta)
    : r_(checked_orthogonal(std::move(r), "GroupPair r")),
      theta_(checked_orthogonal(std::move(theta), "GroupPair theta")) {}

GroupPair GroupPair::from_unchecked(Matrix r, Matrix theta) {
  return GroupPair(Raw{}, std::move(r), std::move(theta));
}

GroupPair GroupPair::identity(Eigen::Index n, Eigen::Index k) {
  return GroupPair(Raw{}, Matrix::Identity(n, n), Matrix::Identity(k, k));
}

GroupPair GroupPair::inverse() const { return GroupPair(Raw{}, r_.transpose(), theta_.transpose()); }

GroupPair GroupPair::operator*(const GroupPair& o) const {
  if (n() != o.n() || k() != o.k()) throw DimensionError("GroupPair product: dimension mismatch");
  return GroupPair(Raw{}, r_ * o.r_, theta_ * o.theta_);
}

double GroupPair::orthogonality_drift() const { return std::max(orth_defect(r_), orth_defect(theta_)); }

void require_same_dims(const LieAlgPair& a, const LieAlgPair& b) {
  if (a.n() != b.n() || a.k() != b.k()) throw DimensionError("LieAlgPair dimension mismatch");
}

void require_same_dims(const GroupPair& g, const LieAlgPair& a) {
  if (g.n() != a.n() || g.k() != a.k()) throw DimensionError("GroupPair/LieAlgPair dimension mismatch");
}

LieAlgPair bracket(const LieAlgPair& a, const LieAlgPair& b) {
  require_same_dims(a, b);
  return LieAlgPair::from_unchecked(a.omega() * b.omega() - b.omega() * a.omega(),
                                    a.psi() * b.psi() - b.psi() * a.psi());
}

double alpha_inner(const LieAlgPair& a, const LieAlgPair& b, const AlphaParam& alpha) {
  require_same_dims(a, b);
  // tr(AB) = sum_ij A_ij B_ji
  const double tr_omega = a.omega().cwiseProduct(b.omega().transpose()).sum();
  const double tr_psi = a.psi().cwiseProduct(b.psi().transpose()).sum();
  return -tr_omega - tr_psi / alpha.value();
}

GroupPair group_exp(const LieAlgPair& xi) {
  return GroupPair::from_unchecked(expm(xi.omega()), expm(xi.psi()));
}

LieAlgPair adjoint(const GroupPair& g, const LieAlgPair& xi) {
  require_same_dims(g, xi);
  return LieAlgPair::from_unchecked(g.r() * xi.omega() * g.r().transpose(),
                                    g.theta() * xi.psi() * g.theta().transpose());
}

Matrix act(const GroupPair& g, const Matrix& m) {
  if (m.rows() != g.n() || m.cols() != g.k()) throw DimensionError("act: dimension mismatch");
  return g.r() * m * g.theta().transpose();
}

}  // namespace stiefel
