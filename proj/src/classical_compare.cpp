#include "stiefel/classical_compare.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stiefel {

namespace {

// Orthonormalizes `gens` against `accepted` (and each other) in order; nearly dependent ones are dropped.
void gram_schmidt_append(std::vector<Vector>& accepted, const std::vector<Vector>& gens, std::vector<Vector>& out) {
  for (Vector v : gens) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& a : accepted) v -= a.dot(v) * a;
      for (const auto& a : out) v -= a.dot(v) * a;
    }
    const double nv = v.norm();
    if (nv > 1e-10) out.push_back(v / nv);
  }
}

}  // namespace

ClassicalFrame build_P0(Eigen::Index n, Eigen::Index k) {
  if (k < 1 || k > n) throw DimensionError("build_P0: need 1 <= k <= n");
  ClassicalFrame f;
  f.n = n;
  f.k = k;
  f.ell_n = k * (k + 1) / 2;
  f.ell_t = n * k - f.ell_n;
  const Matrix e = StiefelPoint::canonical(n, k).matrix();

  std::vector<Vector> tan_gens;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Matrix v = Matrix::Zero(n, k);
      v(i, j) = 1.0;
      v(j, i) = -1.0;
      tan_gens.push_back(vec(v));
    }
  for (Eigen::Index a = k; a < n; ++a)
    for (Eigen::Index b = 0; b < k; ++b) {
      Matrix v = Matrix::Zero(n, k);
      v(a, b) = 1.0;
      tan_gens.push_back(vec(v));
    }

  std::vector<Vector> nor_gens;
  for (Eigen::Index i = 0; i < k; ++i) {
    Matrix s = Matrix::Zero(k, k);
    s(i, i) = 1.0;
    nor_gens.push_back(vec(e * s));
  }
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Matrix s = Matrix::Zero(k, k);
      s(i, j) = s(j, i) = 1.0;
      nor_gens.push_back(vec(e * s));
    }

  std::vector<Vector> none;
  std::vector<Vector> tan_basis;
  gram_schmidt_append(none, tan_gens, tan_basis);
  std::vector<Vector> last{vec(e) / std::sqrt(static_cast<double>(k))};
  std::vector<Vector> nor_basis;
  gram_schmidt_append(last, nor_gens, nor_basis);

  if (static_cast<Eigen::Index>(tan_basis.size()) != f.ell_t ||
      static_cast<Eigen::Index>(nor_basis.size()) + 1 != f.ell_n)
    throw std::logic_error("build_P0: unexpected basis sizes");

  f.p0.resize(n * k, n * k);
  Eigen::Index row = 0;
  for (const auto& v : tan_basis) f.p0.row(row++) = v.transpose();
  for (const auto& v : nor_basis) f.p0.row(row++) = v.transpose();
  f.p0.row(row) = last.front().transpose();
  return f;
}

Matrix bl_diag(const Matrix& a, const ClassicalFrame& frame) {
  const Eigen::Index nk = frame.n * frame.k;
  if (a.rows() != nk || a.cols() != nk) throw DimensionError("bl_diag: expected an nk x nk matrix");
  Matrix pt = Matrix::Zero(nk, nk);
  pt.topLeftCorner(frame.ell_t, frame.ell_t).setIdentity();
  const Matrix pn = Matrix::Identity(nk, nk) - pt;
  return pt * a * pt + pn * a * pn;
}

std::vector<Matrix> body_velocity(std::span<const GroupPair> q, std::span<const double> times) {
  if (q.size() != times.size()) throw DimensionError("body_velocity: sample/time count mismatch");
  // Q^T Q' = I kron R^T R' + theta^T theta' kron I; differencing the factors keeps the Kronecker form.
  std::vector<Matrix> r, th;
  r.reserve(q.size());
  th.reserve(q.size());
  for (const auto& g : q) {
    r.push_back(g.r());
    th.push_back(g.theta());
  }
  const auto dr = differentiate4<Matrix>(times, r);
  const auto dth = differentiate4<Matrix>(times, th);
  std::vector<Matrix> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    out[i] = kron_generator(LieAlgPair::from_unchecked(r[i].transpose() * dr[i], th[i].transpose() * dth[i]));
  return out;
}

ClassicalSTilde classical_S_tilde(std::span<const GroupPair> q, std::span<const double> times,
                                  const ClassicalFrame& frame, const IntegratorConfig& cfg) {
  if (q.size() != times.size()) throw DimensionError("classical_S_tilde: sample/time count mismatch");
  const Eigen::Index nk = frame.n * frame.k;
  ClassicalSTilde out;
  double worst = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i) worst = std::max(worst, times[i] - times[i - 1]);
  if (worst > 1e-2) {
    std::ostringstream os;
    os << "coarse sampling for differencing Q: largest step " << worst;
    out.warnings.push_back(os.str());
  }

  const auto omega = body_velocity(q, times);
  std::vector<Matrix> gen(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    gen[i] = -frame.p0.transpose() * bl_diag(frame.p0 * omega[i] * frame.p0.transpose(), frame) * frame.p0;

  const Rhs rhs = [&](double t, const Vector& y) -> Vector {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    i = std::min(i, times.size() - 2);
    const double w = std::clamp((t - times[i]) / (times[i + 1] - times[i]), 0.0, 1.0);
    const Matrix b = (1.0 - w) * gen[i] + w * gen[i + 1];
    const Matrix s = y.reshaped(nk, nk);
    return (b * s).reshaped();
  };

  const Reprojector reproject = [&](Vector& y) {
    const Matrix s = y.reshaped(nk, nk);
    y = polar_reproject(s).reshaped();
  };
  const FlowResult flow = rk4_on_grid(rhs, Matrix::Identity(nk, nk).reshaped(), times, cfg, reproject);
  out.times = flow.times;
  for (const auto& y : flow.states) out.s_tilde.push_back(y.reshaped(nk, nk));
  return out;
}

std::vector<Matrix> assemble_S_tilde(const RollingTrajectory& traj, const ClassicalFrame& frame) {
  if (!traj.extrinsic()) throw std::invalid_argument("assemble_S_tilde: extrinsic trajectory required");
  const StiefelPoint& x = traj.base();
  if (x.n() != frame.n || x.k() != frame.k) throw DimensionError("assemble_S_tilde: frame dimension mismatch");
  if ((x.matrix() - StiefelPoint::canonical(frame.n, frame.k).matrix()).cwiseAbs().maxCoeff() > 1e-12)
    throw DomainError("assemble_S_tilde: trajectory must be based at E");
  if (traj.alpha().value() != -0.5) throw DomainError("assemble_S_tilde: requires alpha = -1/2");

  const Eigen::Index n = frame.n, k = frame.k, lt = frame.ell_t, ln = frame.ell_n, nk = n * k;
  const auto& rf = *traj.frame;
  const auto& nf = *traj.normal_frame;
  std::vector<Matrix> tan_rows(lt), nor_rows(ln);
  for (Eigen::Index a = 0; a < lt; ++a) tan_rows[a] = unvec(frame.p0.row(a).transpose(), n, k);
  for (Eigen::Index a = 0; a < ln; ++a) nor_rows[a] = unvec(frame.p0.row(lt + a).transpose(), n, k);
  std::vector<Vector> tan_lift(lt), nor_coords(ln);
  for (Eigen::Index a = 0; a < lt; ++a) tan_lift[a] = rf.coords_of_tangent(tan_rows[a]);
  for (Eigen::Index a = 0; a < ln; ++a) nor_coords[a] = nf.coords(nor_rows[a]);

  std::vector<Matrix> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    Matrix blk = Matrix::Zero(nk, nk);
    for (Eigen::Index b = 0; b < lt; ++b) {
      const Matrix img = rf.tangent_of_coords(traj.s[i] * tan_lift[b]);
      for (Eigen::Index a = 0; a < lt; ++a) blk(a, b) = tan_rows[a].cwiseProduct(img).sum();
    }
    for (Eigen::Index b = 0; b < ln; ++b) {
      const Matrix img = nf.element(traj.t[i] * nor_coords[b]);
      for (Eigen::Index a = 0; a < ln; ++a) blk(lt + a, lt + b) = nor_rows[a].cwiseProduct(img).sum();
    }
    out.push_back(frame.p0.transpose() * blk * frame.p0);
  }
  return out;
}

std::vector<Vector> translation_curve(std::span<const Matrix> beta, Eigen::Index n, Eigen::Index k) {
  const Vector ve = vec(StiefelPoint::canonical(n, k).matrix());
  std::vector<Vector> out;
  out.reserve(beta.size());
  for (const auto& b : beta) out.push_back(vec(b) - ve);
  return out;
}

ClassicalComparison compare_classical(const RollingTrajectory& traj, const IntegratorConfig& cfg) {
  const Eigen::Index n = traj.base().n(), k = traj.base().k(), nk = n * k;
  const ClassicalFrame frame = build_P0(n, k);
  ClassicalComparison out;

  const ClassicalSTilde classical = classical_S_tilde(traj.q, traj.times, frame, cfg);
  out.warnings = classical.warnings;
  if (classical.s_tilde.size() != traj.size()) throw std::logic_error("compare_classical: sample count mismatch");
  const auto assembled = assemble_S_tilde(traj, frame);
  const Vector ve = vec(StiefelPoint::canonical(n, k).matrix());
  const auto omega = body_velocity(traj.q, traj.times);
  const auto s = translation_curve(traj.rolling_curve, n, k);
  const auto ds = differentiate4<Vector>(traj.times, s);
  const Eigen::Index lt = frame.ell_t;

  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Matrix& sa = assembled[i];
    const Matrix& sc = classical.s_tilde[i];
    out.s_tilde_deviation = std::max(out.s_tilde_deviation, (sa - sc).norm());
    out.identity_deviation = std::max(out.identity_deviation, max_abs(sc - Matrix::Identity(nk, nk)));
    out.e_invariance = std::max({out.e_invariance, (sa * ve - ve).cwiseAbs().maxCoeff(),
                                 (sc * ve - ve).cwiseAbs().maxCoeff()});
    out.translation_ode_residual =
        std::max(out.translation_ode_residual, (ds[i] - sa.transpose() * omega[i] * ve).norm());
    out.rotational_consistency = std::max(
        out.rotational_consistency, (kron_group(traj.q[i]) * sc * ve - vec(traj.development[i])).norm());
    out.assembled_orthogonality =
        std::max(out.assembled_orthogonality, max_abs(sa.transpose() * sa - Matrix::Identity(nk, nk)));
    const Matrix tt = (frame.p0 * sa * frame.p0.transpose()).topLeftCorner(lt, lt);
    out.tangential_block_deviation =
        std::max(out.tangential_block_deviation, max_abs(tt - Matrix::Identity(lt, lt)));
  }
  return out;
}

}  // namespace stiefel
