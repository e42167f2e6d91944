#include "stiefel/stiefel_geometry.hpp"

#include "stiefel/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stiefel {

namespace {

Matrix checked_stiefel(Matrix x) {
  if (x.cols() > x.rows() || x.cols() == 0) throw DimensionError("StiefelPoint: need 1 <= k <= n");
  if (!x.allFinite()) throw DomainError("StiefelPoint: non-finite entries");
  const Eigen::Index k = x.cols();
  const double defect = max_abs(x.transpose() * x - Matrix::Identity(k, k));
  if (defect > 10.0 * kOrthTolerance)
    throw DomainError("StiefelPoint: columns not orthonormal (defect " + std::to_string(defect) + ")");
  if (defect > 0.0) {
    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().transpose();
  }
  return x;
}

void require_point_dims(const StiefelPoint& x, const Matrix& m, const char* what) {
  if (m.rows() != x.n() || m.cols() != x.k()) throw DimensionError(std::string(what) + ": dimension mismatch");
}

void require_point_dims(const StiefelPoint& x, const LieAlgPair& xi, const char* what) {
  if (xi.n() != x.n() || xi.k() != x.k()) throw DimensionError(std::string(what) + ": dimension mismatch");
}

Vector flatten(const LieAlgPair& a) {
  Vector v(a.omega().size() + a.psi().size());
  v.head(a.omega().size()) = a.omega().reshaped();
  v.tail(a.psi().size()) = a.psi().reshaped();
  return v;
}

LieAlgPair unflatten(const Vector& v, Eigen::Index n, Eigen::Index k) {
  Matrix omega = v.head(n * n).reshaped(n, n);
  Matrix psi = v.tail(k * k).reshaped(k, k);
  return LieAlgPair::from_unchecked(std::move(omega), std::move(psi));
}

}  // namespace

StiefelPoint::StiefelPoint(Matrix x) : x_(checked_stiefel(std::move(x))) {}

StiefelPoint StiefelPoint::canonical(Eigen::Index n, Eigen::Index k) {
  Matrix e = Matrix::Zero(n, k);
  e.topRows(k).setIdentity();
  return StiefelPoint(std::move(e));
}

TangentVec::TangentVec(StiefelPoint base, Matrix v) : base_(std::move(base)), v_(std::move(v)) {
  require_point_dims(base_, v_, "TangentVec");
  const Matrix s = base_.matrix().transpose() * v_;
  const double defect = max_abs(s + s.transpose());
  if (defect > 10.0 * kSkewTolerance * std::max(1.0, max_abs(v_)))
    throw DomainError("TangentVec: not tangent at base (defect " + std::to_string(defect) + ")");
}

NormalVec::NormalVec(StiefelPoint base, Matrix z) : base_(std::move(base)), z_(std::move(z)) {
  require_point_dims(base_, z_, "NormalVec");
  const double defect = max_abs(z_ - normal_part(base_.matrix(), z_));
  if (defect > 10.0 * kSkewTolerance * std::max(1.0, max_abs(z_)))
    throw DomainError("NormalVec: not normal at base (defect " + std::to_string(defect) + ")");
}

LieAlgPair pr_p(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi) {
  require_point_dims(x, xi, "pr_p");
  const Matrix& X = x.matrix();
  const double a = alpha.value();
  const Matrix xxt = X * X.transpose();
  const Matrix& om = xi.omega();
  const Matrix& eta = xi.psi();
  Matrix omega_p = xxt * om + om * xxt - alpha.lift_coefficient() * (xxt * om * xxt) -
                   (1.0 / (a + 1.0)) * (X * eta * X.transpose());
  Matrix eta_p = alpha.psi_coefficient() * (eta - X.transpose() * om * X);
  return LieAlgPair::from_unchecked(std::move(omega_p), std::move(eta_p));
}

LieAlgPair pr_h(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi) {
  return xi - pr_p(x, alpha, xi);
}

bool in_p(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi, double tol) {
  return (pr_p(x, alpha, xi) - xi).norm() <= tol * std::max(1.0, xi.norm());
}

LieAlgPair lift_matrix(const StiefelPoint& x, const AlphaParam& alpha, const Matrix& v) {
  require_point_dims(x, v, "lift_tangent");
  const Matrix& X = x.matrix();
  Matrix omega = v * X.transpose() - X * v.transpose() +
                 alpha.lift_coefficient() * (X * v.transpose() * X * X.transpose());
  Matrix eta = -alpha.psi_coefficient() * (X.transpose() * v);
  return LieAlgPair::from_unchecked(std::move(omega), std::move(eta));
}

LieAlgPair lift_tangent(const StiefelPoint& x, const AlphaParam& alpha, const TangentVec& v) {
  return lift_matrix(x, alpha, v.matrix());
}

Matrix orbit_velocity(const StiefelPoint& x, const LieAlgPair& xi) {
  require_point_dims(x, xi, "orbit_velocity");
  return xi.omega() * x.matrix() - x.matrix() * xi.psi();
}

TangentVec push_tangent(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& xi) {
  if (!in_p(x, alpha, xi)) throw DomainError("push_tangent: argument is not in p");
  return TangentVec(x, orbit_velocity(x, xi));
}

double alpha_metric(const StiefelPoint& x, const Matrix& v, const Matrix& w, const AlphaParam& alpha) {
  require_point_dims(x, v, "alpha_metric");
  require_point_dims(x, w, "alpha_metric");
  const Matrix& X = x.matrix();
  const double plain = v.cwiseProduct(w).sum();
  const double vertical = (X.transpose() * v).cwiseProduct(X.transpose() * w).sum();
  return 2.0 * plain - alpha.lift_coefficient() * vertical;
}

double alpha_metric(const StiefelPoint& x, const TangentVec& v, const TangentVec& w, const AlphaParam& alpha) {
  return alpha_metric(x, v.matrix(), w.matrix(), alpha);
}

Matrix normal_part(const Matrix& x, const Matrix& m) {
  const Matrix s = x.transpose() * m;
  return 0.5 * x * (s + s.transpose());
}

TangentVec tangent_project(const StiefelPoint& x, const Matrix& m) {
  require_point_dims(x, m, "tangent_project");
  return TangentVec(x, m - normal_part(x.matrix(), m));
}

NormalVec normal_project(const StiefelPoint& x, const Matrix& m) {
  require_point_dims(x, m, "normal_project");
  return NormalVec(x, normal_part(x.matrix(), m));
}

std::shared_ptr<const ReductiveFrame> ReductiveFrame::build(const StiefelPoint& x, const AlphaParam& alpha) {
  const Eigen::Index n = x.n();
  const Eigen::Index k = x.k();
  const int d = static_cast<int>(n * k - k * (k + 1) / 2);

  // Canonical sparse generators of so(n) x so(k), projected onto p.
  std::vector<Vector> cand;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      Matrix om = Matrix::Zero(n, n);
      om(i, j) = -1.0;
      om(j, i) = 1.0;
      cand.push_back(flatten(pr_p(x, alpha, LieAlgPair::from_unchecked(om, Matrix::Zero(k, k)))));
    }
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Matrix ps = Matrix::Zero(k, k);
      ps(i, j) = -1.0;
      ps(j, i) = 1.0;
      cand.push_back(flatten(pr_p(x, alpha, LieAlgPair::from_unchecked(Matrix::Zero(n, n), ps))));
    }

  // Pivoted modified Gram-Schmidt in the flat Frobenius product.
  std::vector<Vector> raw;
  std::vector<bool> used(cand.size(), false);
  for (int step = 0; step < d; ++step) {
    int best = -1;
    double best_norm = 0.0;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      if (used[c]) continue;
      const double nn = cand[c].norm();
      if (nn > best_norm) {
        best_norm = nn;
        best = static_cast<int>(c);
      }
    }
    if (best < 0 || best_norm < 1e-10) throw DomainError("reductive_frame: p has lower dimension than expected");
    used[best] = true;
    Vector q = cand[best] / best_norm;
    for (std::size_t c = 0; c < cand.size(); ++c)
      if (!used[c]) cand[c] -= q.dot(cand[c]) * q;
    raw.push_back(std::move(q));
  }

  auto frame = std::shared_ptr<ReductiveFrame>(new ReductiveFrame(x, alpha));
  for (const auto& v : raw) frame->basis_.push_back(unflatten(v, n, k));

  auto compute_gram = [&](const std::vector<LieAlgPair>& b) {
    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) g(i, j) = g(j, i) = alpha_inner(b[i], b[j], alpha);
    return g;
  };

  Matrix gram = compute_gram(frame->basis_);
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const Vector& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    if (ev.cwiseAbs().minCoeff() <= 1e-10 * scale)
      throw DomainError("reductive_frame: Gram matrix is singular for this alpha (degenerate configuration)");
    if (ev.minCoeff() > 0.0) {
      // Two Cholesky passes: orthonormalize, then clean up round-off.
      for (int pass = 0; pass < 2; ++pass) {
        Eigen::LLT<Matrix> llt(gram);
        const Matrix linv_t = llt.matrixL().solve(Matrix::Identity(d, d)).transpose();
        std::vector<LieAlgPair> ortho;
        for (int j = 0; j < d; ++j) {
          LieAlgPair acc = LieAlgPair::zero(n, k);
          for (int i = 0; i < d; ++i)
            if (linv_t(i, j) != 0.0) acc = acc + linv_t(i, j) * frame->basis_[i];
          ortho.push_back(acc);
        }
        frame->basis_ = std::move(ortho);
        gram = compute_gram(frame->basis_);
      }
      if (max_abs(gram - Matrix::Identity(d, d)) > 1e-12)
        throw DomainError("reductive_frame: orthonormalization failed");
      gram = Matrix::Identity(d, d);
      frame->orthonormal_ = true;
    }
  } else {
    frame->orthonormal_ = true;
  }
  frame->gram_ = gram;
  frame->gram_lu_ = Eigen::PartialPivLU<Matrix>(gram);

  frame->ad_basis_.reserve(d);
  for (int i = 0; i < d; ++i) frame->ad_basis_.push_back(frame->ad_matrix(frame->basis_[i]));
  return frame;
}

Vector ReductiveFrame::coords(const LieAlgPair& xi) const {
  require_point_dims(base_, xi, "ReductiveFrame::coords");
  Vector b(dim());
  for (int i = 0; i < dim(); ++i) b(i) = alpha_inner(basis_[i], xi, alpha_);
  if (orthonormal_) return b;
  return gram_lu_.solve(b);
}

LieAlgPair ReductiveFrame::element(const Vector& c) const {
  if (c.size() != dim()) throw DimensionError("ReductiveFrame::element: coordinate size mismatch");
  Matrix om = Matrix::Zero(base_.n(), base_.n());
  Matrix ps = Matrix::Zero(base_.k(), base_.k());
  for (int i = 0; i < dim(); ++i) {
    om += c(i) * basis_[i].omega();
    ps += c(i) * basis_[i].psi();
  }
  return LieAlgPair::from_unchecked(std::move(om), std::move(ps));
}

Matrix ReductiveFrame::ad_matrix(const LieAlgPair& w) const {
  return operator_matrix([&](const LieAlgPair& a) { return bracket(w, a); });
}

Matrix ReductiveFrame::ad_matrix(const Vector& w) const {
  if (w.size() != dim()) throw DimensionError("ReductiveFrame::ad_matrix: coordinate size mismatch");
  Matrix out = Matrix::Zero(dim(), dim());
  for (int i = 0; i < dim(); ++i)
    if (w(i) != 0.0) out += w(i) * ad_basis_[i];
  return out;
}

Matrix ReductiveFrame::operator_matrix(const std::function<LieAlgPair(const LieAlgPair&)>& f) const {
  Matrix out(dim(), dim());
  for (int j = 0; j < dim(); ++j) out.col(j) = coords(f(basis_[j]));
  return out;
}

double ReductiveFrame::inner(const Vector& a, const Vector& b) const { return a.dot(gram_ * b); }

double ReductiveFrame::g_orthogonality_defect(const Matrix& s) const {
  return max_abs(s.transpose() * gram_ * s - gram_);
}

Vector ReductiveFrame::coords_of_tangent(const Matrix& v) const { return coords(lift_matrix(base_, alpha_, v)); }

Matrix ReductiveFrame::tangent_of_coords(const Vector& c) const { return orbit_velocity(base_, element(c)); }

std::shared_ptr<const ReductiveFrame> reductive_frame(const StiefelPoint& x, const AlphaParam& alpha) {
  return ReductiveFrame::build(x, alpha);
}

LieAlgPair bracket_defect(const StiefelPoint& x, const AlphaParam& alpha, const LieAlgPair& a,
                          const LieAlgPair& b) {
  if (!in_p(x, alpha, a) || !in_p(x, alpha, b)) throw DomainError("bracket_defect: arguments must lie in p");
  return pr_p(x, alpha, bracket(a, b));
}

LieAlgPair block_generator(Eigen::Index n, const Matrix& b) {
  const Eigen::Index k = b.cols();
  if (b.rows() != n - k) throw DimensionError("block_generator: B must be (n-k) x k");
  Matrix om = Matrix::Zero(n, n);
  om.bottomLeftCorner(n - k, k) = b;
  om.topRightCorner(k, n - k) = -b.transpose();
  return LieAlgPair::from_unchecked(std::move(om), Matrix::Zero(k, k));
}

}  // namespace stiefel
