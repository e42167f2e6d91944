#include "stiefel/rolling.hpp"

#include "stiefel/linalg.hpp"
#include "stiefel/vec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stiefel {

NormalFrame::NormalFrame(const StiefelPoint& x) : base_(x) {
  const Eigen::Index k = x.k();
  for (Eigen::Index i = 0; i < k; ++i) {
    Matrix s = Matrix::Zero(k, k);
    s(i, i) = 1.0;
    basis_.push_back(x.matrix() * s);
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Matrix s = Matrix::Zero(k, k);
      s(i, j) = r;
      s(j, i) = r;
      basis_.push_back(x.matrix() * s);
    }
}

Vector NormalFrame::coords(const Matrix& m) const {
  Vector c(dim());
  for (int i = 0; i < dim(); ++i) c(i) = basis_[i].cwiseProduct(m).sum();
  return c;
}

Matrix NormalFrame::element(const Vector& c) const {
  if (c.size() != dim()) throw DimensionError("NormalFrame::element: coordinate size mismatch");
  Matrix m = Matrix::Zero(base_.n(), base_.k());
  for (int i = 0; i < dim(); ++i) m += c(i) * basis_[i];
  return m;
}

Matrix NormalFrame::operator_matrix(const std::function<Matrix(const Matrix&)>& f) const {
  Matrix out(dim(), dim());
  for (int j = 0; j < dim(); ++j) out.col(j) = coords(f(basis_[j]));
  return out;
}

Matrix NormalFrame::vec_basis() const {
  Matrix b(base_.n() * base_.k(), dim());
  for (int j = 0; j < dim(); ++j) b.col(j) = vec(basis_[j]);
  return b;
}

double NormalIsometry::drift() const {
  return max_abs(t_mat.transpose() * t_mat - Matrix::Identity(t_mat.cols(), t_mat.cols()));
}

Matrix RollingTrajectory::apply_b(std::size_t i, const Matrix& v) const {
  const Vector c = s.at(i) * frame->coords_of_tangent(v);
  return act(q.at(i), frame->tangent_of_coords(c));
}

Matrix RollingTrajectory::apply_c(std::size_t i, const Matrix& nrm) const {
  if (!extrinsic()) throw std::logic_error("apply_c: trajectory has no normal samples");
  return act(q.at(i), normal_frame->element(t.at(i) * normal_frame->coords(nrm)));
}

void audit(RollingTrajectory& traj) {
  auto& d = traj.diagnostics;
  d.s_drift = d.q_drift = d.t_drift = d.normal_fix = 0.0;
  for (const auto& s : traj.s) d.s_drift = std::max(d.s_drift, traj.frame->g_orthogonality_defect(s));
  for (const auto& q : traj.q) d.q_drift = std::max(d.q_drift, q.orthogonality_drift());
  if (traj.extrinsic()) {
    const Vector cx = traj.normal_frame->coords(traj.base().matrix());
    for (const auto& t : traj.t) {
      d.t_drift = std::max(d.t_drift, max_abs(t.transpose() * t - Matrix::Identity(t.cols(), t.cols())));
      d.normal_fix = std::max(d.normal_fix, (t * cx - cx).cwiseAbs().maxCoeff());
    }
  }
}

Matrix f_op(const LieAlgPair& xi, const Matrix& w) {
  if (w.rows() != xi.n() || w.cols() != xi.k()) throw DimensionError("f_op: dimension mismatch");
  return xi.omega() * w - w * xi.psi();
}

namespace {

struct Layout {
  Eigen::Index d, n, k, l;
  Eigen::Index s_off() const { return 0; }
  Eigen::Index r_off() const { return d * d; }
  Eigen::Index th_off() const { return r_off() + n * n; }
  Eigen::Index a_off() const { return th_off() + k * k; }
  Eigen::Index t_off() const { return a_off() + d; }
  Eigen::Index size() const { return t_off() + l * l; }
};

RollingTrajectory run_kinematics(std::shared_ptr<const ReductiveFrame> frame,
                                 std::shared_ptr<const NormalFrame> normal, const ControlCurve& u,
                                 std::span<const double> grid, const IntegratorConfig& cfg) {
  if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("rolling: grid must start at 0");
  const StiefelPoint& x = frame->base();
  u.require_in_p(x, frame->alpha(), grid);

  const Layout lay{frame->dim(), x.n(), x.k(), normal ? normal->dim() : 0};
  const auto d = lay.d, n = lay.n, k = lay.k, l = lay.l;

  const Rhs rhs = [&](double t, const Vector& y) -> Vector {
    const Matrix s = y.segment(lay.s_off(), d * d).reshaped(d, d);
    const Matrix r = y.segment(lay.r_off(), n * n).reshaped(n, n);
    const Matrix th = y.segment(lay.th_off(), k * k).reshaped(k, k);
    const Vector uc = frame->coords(u(t));
    const Vector w = s * uc;
    const LieAlgPair xi = frame->element(w);

    Vector dy(lay.size());
    dy.segment(lay.s_off(), d * d) = (-0.5 * (frame->ad_matrix(w) * s)).reshaped();
    dy.segment(lay.r_off(), n * n) = (r * xi.omega()).reshaped();
    dy.segment(lay.th_off(), k * k) = (th * xi.psi()).reshaped();
    dy.segment(lay.a_off(), d) = uc;
    if (l > 0) {
      const Matrix tm = y.segment(lay.t_off(), l * l).reshaped(l, l);
      const Matrix kmat = normal->operator_matrix([&](const Matrix& v) { return f_op(xi, v); });
      dy.segment(lay.t_off(), l * l) = (-(kmat * tm)).reshaped();
    }
    return dy;
  };

  Vector y0 = Vector::Zero(lay.size());
  y0.segment(lay.s_off(), d * d) = Matrix::Identity(d, d).reshaped();
  y0.segment(lay.r_off(), n * n) = Matrix::Identity(n, n).reshaped();
  y0.segment(lay.th_off(), k * k) = Matrix::Identity(k, k).reshaped();
  if (l > 0) y0.segment(lay.t_off(), l * l) = Matrix::Identity(l, l).reshaped();

  const Reprojector reproject = [&](Vector& y) {
    auto fix = [&](Eigen::Index off, Eigen::Index m) {
      if (m == 0) return;
      const Matrix a = y.segment(off, m * m).reshaped(m, m);
      y.segment(off, m * m) = polar_reproject(a).reshaped();
    };
    // S is only reprojected when O(p) is an ordinary orthogonal group in these coordinates.
    if (frame->orthonormal()) fix(lay.s_off(), d);
    fix(lay.r_off(), n);
    fix(lay.th_off(), k);
    fix(lay.t_off(), l);
  };

  double exit_time = std::numeric_limits<double>::quiet_NaN();
  double exit_defect = 0.0;
  const StepMonitor monitor = [&](double t, const Vector& y) {
    const Matrix s = y.segment(lay.s_off(), d * d).reshaped(d, d);
    const double defect = frame->g_orthogonality_defect(s);
    if (defect > kSExitTolerance || !y.allFinite()) {
      exit_time = t;
      exit_defect = defect;
      return false;
    }
    return true;
  };

  const FlowResult flow = rk4_on_grid(rhs, y0, grid, cfg, reproject, monitor);

  RollingTrajectory traj;
  traj.frame = frame;
  traj.normal_frame = normal;
  traj.times = flow.times;
  for (const auto& y : flow.states) {
    const Matrix s = y.segment(lay.s_off(), d * d).reshaped(d, d);
    GroupPair q = GroupPair::from_unchecked(y.segment(lay.r_off(), n * n).reshaped(n, n),
                                            y.segment(lay.th_off(), k * k).reshaped(k, k));
    const Vector a = y.segment(lay.a_off(), d);
    traj.s.push_back(s);
    traj.rolling_coords.push_back(a);
    traj.rolling_curve.push_back(frame->tangent_of_coords(a));
    traj.development.push_back(act(q, x.matrix()));
    traj.q.push_back(std::move(q));
    if (l > 0) traj.t.push_back(y.segment(lay.t_off(), l * l).reshaped(l, l));
  }
  traj.diagnostics.reprojections = flow.reprojections;
  if (flow.stopped_early) {
    traj.diagnostics.truncated = true;
    traj.diagnostics.truncated_at = exit_time;
    std::ostringstream os;
    os << "S left O(p) at t = " << exit_time << " (defect " << exit_defect << "); run truncated";
    traj.diagnostics.messages.push_back(os.str());
  }
  audit(traj);
  return traj;
}

}  // namespace

RollingTrajectory intrinsic_roll(const StiefelPoint& x, const AlphaParam& alpha, const ControlCurve& u,
                                 std::span<const double> grid, const IntegratorConfig& cfg) {
  return run_kinematics(reductive_frame(x, alpha), nullptr, u, grid, cfg);
}

RollingTrajectory extrinsic_roll(const StiefelPoint& x, const ControlCurve& u, std::span<const double> grid,
                                 const IntegratorConfig& cfg) {
  return run_kinematics(reductive_frame(x, AlphaParam::euclidean()), std::make_shared<const NormalFrame>(x), u, grid,
                        cfg);
}

GroupPair horizontal_lift_special(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha, double t) {
  const LieAlgPair xh = pr_h(x, alpha, xi);
  const GroupPair a = group_exp(xi * t);
  const GroupPair b = group_exp(xh * (-t));
  return a * b;
}

SpecialCurveRolling::SpecialCurveRolling(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha)
    : xi_(xi),
      xi_p_(pr_p(x, alpha, xi)),
      xi_h_(xi - xi_p_),
      frame_(reductive_frame(x, alpha)),
      normal_frame_(std::make_shared<const NormalFrame>(x)) {
  m_ = frame_->ad_matrix(xi_h_) + 0.5 * frame_->ad_matrix(xi_p_);
  xi_p_coords_ = frame_->coords(xi_p_);
  normal_generator_ = normal_projector_vec(x.matrix()) * kron_generator(xi_);
}

GroupPair SpecialCurveRolling::q(double t) const { return group_exp(xi_ * t) * group_exp(xi_h_ * (-t)); }

Matrix SpecialCurveRolling::s(double t) const {
  const GroupPair h = group_exp(xi_h_ * t);
  const Matrix ad_h = frame_->operator_matrix([&](const LieAlgPair& a) { return adjoint(h, a); });
  return ad_h * expm(-t * m_);
}

Matrix SpecialCurveRolling::t_normal(double t) const {
  if (frame_->alpha().value() != -0.5) throw DomainError("t_normal: extrinsic closed form requires alpha = -1/2");
  const Matrix bn = normal_frame_->vec_basis();
  const GroupPair h = group_exp(xi_h_ * t);
  return bn.transpose() * kron_group(h) * expm(-t * normal_generator_) * bn;
}

Vector SpecialCurveRolling::rolling_coords(double t) const { return integral_of_exp(m_, t) * xi_p_coords_; }

Matrix SpecialCurveRolling::development(double t) const {
  return act(group_exp(xi_ * t), frame_->base().matrix());
}

Vector SpecialCurveRolling::control_coords(double t) const { return expm(t * m_) * xi_p_coords_; }

RollingTrajectory SpecialCurveRolling::sample(std::span<const double> grid, bool with_normal) const {
  RollingTrajectory traj;
  traj.frame = frame_;
  if (with_normal) traj.normal_frame = normal_frame_;
  for (double t : grid) {
    traj.times.push_back(t);
    const Vector a = rolling_coords(t);
    traj.rolling_coords.push_back(a);
    traj.rolling_curve.push_back(frame_->tangent_of_coords(a));
    traj.q.push_back(q(t));
    traj.s.push_back(s(t));
    traj.development.push_back(development(t));
    if (with_normal) traj.t.push_back(t_normal(t));
  }
  audit(traj);
  return traj;
}

RollingTrajectory closed_form_intrinsic(const LieAlgPair& xi, const StiefelPoint& x, const AlphaParam& alpha,
                                        std::span<const double> grid) {
  return SpecialCurveRolling(xi, x, alpha).sample(grid, false);
}

RollingTrajectory closed_form_extrinsic(const LieAlgPair& xi, const StiefelPoint& x, std::span<const double> grid) {
  return SpecialCurveRolling(xi, x, AlphaParam::euclidean()).sample(grid, true);
}

double verify_no_slip(const RollingTrajectory& traj) {
  if (traj.size() < 3) throw std::invalid_argument("verify_no_slip: need at least 3 samples");
  const auto dbeta_hat = differentiate<Matrix>(traj.times, traj.development);
  const auto dbeta = differentiate<Matrix>(traj.times, traj.rolling_curve);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < traj.size(); ++i)
    worst = std::max(worst, (dbeta_hat[i] - traj.apply_b(i, dbeta[i])).norm());
  return worst;
}

NoTwistResidual verify_no_twist(const RollingTrajectory& traj, std::span<const Matrix> tangent_probes,
                                std::span<const Matrix> normal_probes) {
  if (traj.size() < 3) throw std::invalid_argument("verify_no_twist: need at least 3 samples");
  if (!normal_probes.empty() && !traj.extrinsic())
    throw std::invalid_argument("verify_no_twist: normal probes need T samples");
  NoTwistResidual out;
  const auto& frame = *traj.frame;
  const std::size_t m = traj.size();

  if (!tangent_probes.empty()) {
    std::vector<Matrix> r(m), th(m);
    for (std::size_t i = 0; i < m; ++i) {
      r[i] = traj.q[i].r();
      th[i] = traj.q[i].theta();
    }
    const auto dr = differentiate<Matrix>(traj.times, r);
    const auto dth = differentiate<Matrix>(traj.times, th);
    std::vector<Matrix> xad(m);
    for (std::size_t i = 0; i < m; ++i) {
      const LieAlgPair xv =
          LieAlgPair::from_unchecked(r[i].transpose() * dr[i], th[i].transpose() * dth[i]);
      xad[i] = frame.ad_matrix(xv);
    }
    for (const Matrix& z0 : tangent_probes) {
      if (!(z0.norm() > 0.0)) throw std::invalid_argument("verify_no_twist: zero probe");
      const Vector c0 = frame.coords_of_tangent(z0 / z0.norm());
      std::vector<Vector> z(m);
      for (std::size_t i = 0; i < m; ++i) z[i] = traj.s[i] * c0;
      const auto dz = differentiate<Vector>(traj.times, z);
      for (std::size_t i = 1; i + 1 < m; ++i) {
        const Vector res = dz[i] + 0.5 * (xad[i] * z[i]);
        // Covariant derivative of B(t) Z0 as a tangent vector; act(q, .) is a Frobenius isometry.
        out.tangential = std::max(out.tangential, frame.tangent_of_coords(res).norm());
      }
    }
  }

  if (!normal_probes.empty()) {
    out.normal_checked = true;
    for (const Matrix& n0 : normal_probes) {
      if (!(n0.norm() > 0.0)) throw std::invalid_argument("verify_no_twist: zero probe");
      std::vector<Matrix> w(m);
      for (std::size_t i = 0; i < m; ++i) w[i] = traj.apply_c(i, n0 / n0.norm());
      const auto dw = differentiate<Matrix>(traj.times, w);
      for (std::size_t i = 1; i + 1 < m; ++i)
        out.normal = std::max(out.normal, normal_part(traj.development[i], dw[i]).norm());
    }
  }
  return out;
}

std::vector<EuclideanMotion> to_euclidean_group_pair(const RollingTrajectory& traj) {
  if (!traj.extrinsic()) throw std::invalid_argument("to_euclidean_group_pair: extrinsic trajectory required");
  const StiefelPoint& x = traj.base();
  const Eigen::Index n = x.n(), k = x.k(), nk = n * k;
  std::vector<EuclideanMotion> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    Matrix rot(nk, nk);
    for (Eigen::Index j = 0; j < nk; ++j) {
      Matrix e = Matrix::Zero(n, k);
      e(j % n, j / n) = 1.0;
      const Matrix en = normal_part(x.matrix(), e);
      rot.col(j) = vec(traj.apply_b(i, e - en) + traj.apply_c(i, en));
    }
    Vector s = vec(traj.development[i]) - rot * vec(traj.rolling_curve[i]);
    out.push_back({std::move(rot), std::move(s)});
  }
  return out;
}

RecoveredRolling from_euclidean_group_pair(const EuclideanMotion& motion, const StiefelPoint& x, const Matrix& beta) {
  const Eigen::Index n = x.n(), k = x.k(), nk = n * k;
  if (motion.rotation.rows() != nk || motion.translation.size() != nk)
    throw DimensionError("from_euclidean_group_pair: dimension mismatch");
  const Matrix pn = normal_projector_vec(x.matrix());
  const Matrix pt = Matrix::Identity(nk, nk) - pn;
  RecoveredRolling out;
  out.tangential = motion.rotation * pt;
  out.normal = motion.rotation * pn;
  out.development = unvec(motion.translation + motion.rotation * vec(beta), n, k);
  return out;
}

}  // namespace stiefel
