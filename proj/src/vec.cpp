#include "stiefel/vec.hpp"

#include "stiefel/linalg.hpp"
#include "stiefel/stiefel_geometry.hpp"

namespace stiefel {

Vector vec(const Matrix& m) { return m.reshaped(); }

Matrix unvec(const Vector& v, Eigen::Index n, Eigen::Index k) {
  if (v.size() != n * k) throw DimensionError("unvec: size mismatch");
  return v.reshaped(n, k);
}

Matrix kron_generator(const LieAlgPair& xi) {
  const Eigen::Index n = xi.n();
  const Eigen::Index k = xi.k();
  return kron(Matrix::Identity(k, k), xi.omega()) + kron(xi.psi(), Matrix::Identity(n, n));
}

Matrix kron_group(const GroupPair& g) { return kron(g.theta(), g.r()); }

Matrix normal_projector_vec(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  Matrix p(n * k, n * k);
  for (Eigen::Index j = 0; j < n * k; ++j) {
    Matrix e = Matrix::Zero(n, k);
    e(j % n, j / n) = 1.0;
    p.col(j) = vec(normal_part(x, e));
  }
  return p;
}

}  // namespace stiefel
