#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace stiefel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSkewTolerance = 1e-9;
inline constexpr double kOrthTolerance = 1e-9;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Parameter of the metric family; 0 and -1 are excluded.
class AlphaParam {
 public:
  explicit AlphaParam(double alpha);

  double value() const noexcept { return alpha_; }
  /// (2a+1)/(a+1)
  double lift_coefficient() const noexcept { return (2.0 * alpha_ + 1.0) / (alpha_ + 1.0); }
  /// a/(a+1)
  double psi_coefficient() const noexcept { return alpha_ / (alpha_ + 1.0); }

  static AlphaParam euclidean() { return AlphaParam(-0.5); }

 private:
  double alpha_;
};

/// Element (omega, psi) of so(n) x so(k).
class LieAlgPair {
 public:
  /// Validates skew-symmetry; inputs within 10*tol are symmetrized, worse inputs throw.
  LieAlgPair(Matrix omega, Matrix psi);

  /// Skips validation but still takes the skew part. For internally generated values.
  static LieAlgPair from_unchecked(Matrix omega, Matrix psi);
  static LieAlgPair zero(Eigen::Index n, Eigen::Index k);

  const Matrix& omega() const noexcept { return omega_; }
  const Matrix& psi() const noexcept { return psi_; }
  Eigen::Index n() const noexcept { return omega_.rows(); }
  Eigen::Index k() const noexcept { return psi_.rows(); }

  /// Frobenius norm of the stacked pair.
  double norm() const;

  LieAlgPair operator+(const LieAlgPair& o) const;
  LieAlgPair operator-(const LieAlgPair& o) const;
  LieAlgPair operator-() const;
  LieAlgPair operator*(double s) const;
  friend LieAlgPair operator*(double s, const LieAlgPair& a) { return a * s; }

 private:
  struct Raw {};
  LieAlgPair(Raw, Matrix omega, Matrix psi) : omega_(std::move(omega)), psi_(std::move(psi)) {}
  Matrix omega_;
  Matrix psi_;
};

/// Element (r, theta) of O(n) x O(k).
class GroupPair {
 public:
  /// Validates orthogonality; inputs within 10*tol are polar-repaired, worse inputs throw.
  GroupPair(Matrix r, Matrix theta);

  /// No validation. Used for integrator output whose drift is measured separately.
  static GroupPair from_unchecked(Matrix r, Matrix theta);
  static GroupPair identity(Eigen::Index n, Eigen::Index k);

  const Matrix& r() const noexcept { return r_; }
  const Matrix& theta() const noexcept { return theta_; }
  Eigen::Index n() const noexcept { return r_.rows(); }
  Eigen::Index k() const noexcept { return theta_.rows(); }

  GroupPair inverse() const;
  GroupPair operator*(const GroupPair& o) const;

  /// max(|r^T r - I|, |theta^T theta - I|) entrywise.
  double orthogonality_drift() const;

 private:
  struct Raw {};
  GroupPair(Raw, Matrix r, Matrix theta) : r_(std::move(r)), theta_(std::move(theta)) {}
  Matrix r_;
  Matrix theta_;
};

void require_same_dims(const LieAlgPair& a, const LieAlgPair& b);
void require_same_dims(const GroupPair& g, const LieAlgPair& a);

LieAlgPair bracket(const LieAlgPair& a, const LieAlgPair& b);

/// -tr(Oa Ob) - (1/alpha) tr(Pa Pb)
double alpha_inner(const LieAlgPair& a, const LieAlgPair& b, const AlphaParam& alpha);

GroupPair group_exp(const LieAlgPair& xi);

/// (R Omega R^T, theta Psi theta^T)
LieAlgPair adjoint(const GroupPair& g, const LieAlgPair& xi);

/// R m theta^T
Matrix act(const GroupPair& g, const Matrix& m);

Matrix skew_part(const Matrix& m);
double max_abs(const Matrix& m);

}  // namespace stiefel
