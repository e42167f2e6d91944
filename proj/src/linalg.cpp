#include "stiefel/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace stiefel {

namespace {

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

constexpr double kTheta13 = 5.371920351148152;

double norm1(const Matrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

}  // namespace

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm: matrix must be square");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) throw DomainError("expm: non-finite input");
  if (a.isZero(0.0)) return Matrix::Identity(n, n);

  const double nrm = norm1(a);
  int s = 0;
  if (nrm > kTheta13) s = static_cast<int>(std::ceil(std::log2(nrm / kTheta13)));
  const Matrix as = a / std::ldexp(1.0, s);

  const Matrix id = Matrix::Identity(n, n);
  const Matrix a2 = as * as;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const auto& b = kPade13;

  Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id;
  Matrix u = as * u_inner;
  Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

Matrix integral_of_exp(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw DimensionError("integral_of_exp: matrix must be square");
  const Eigen::Index d = m.rows();
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = t * m;
  aug.topRightCorner(d, d) = t * Matrix::Identity(d, d);
  return expm(aug).topRightCorner(d, d);
}

Matrix polar_factor(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("polar_factor: matrix must be square");
  if (!m.allFinite()) throw DomainError("polar_factor: non-finite input");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  if (sv.size() > 0 && sv(sv.size() - 1) <= 1e-14 * std::max(1.0, sv(0)))
    throw DomainError("polar_factor: singular matrix");
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace stiefel
