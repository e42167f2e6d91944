#include "stiefel/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stiefel {

ControlCurve ControlCurve::closure(Fn f) {
  if (!f) throw std::invalid_argument("ControlCurve: empty closure");
  ControlCurve c;
  c.fn_ = std::move(f);
  return c;
}

ControlCurve ControlCurve::sampled(std::vector<double> times, std::vector<LieAlgPair> values) {
  if (times.empty() || times.size() != values.size())
    throw std::invalid_argument("ControlCurve: need matching, non-empty time and value arrays");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("ControlCurve: sample times must increase");
    require_same_dims(values[i], values[0]);
  }
  ControlCurve c;
  c.times_ = std::move(times);
  c.values_ = std::move(values);
  return c;
}

ControlCurve ControlCurve::constant(const LieAlgPair& v) {
  return closure([v](double) { return v; });
}

ControlCurve ControlCurve::zero(Eigen::Index n, Eigen::Index k) { return constant(LieAlgPair::zero(n, k)); }

LieAlgPair ControlCurve::operator()(double t) const {
  if (fn_) return fn_(t);
  if (t <= times_.front()) return values_.front();
  if (t >= times_.back()) return values_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return values_[i] * (1.0 - w) + values_[i + 1] * w;
}

void ControlCurve::require_in_p(const StiefelPoint& x, const AlphaParam& alpha, std::span<const double> probe_times,
                                double tol) const {
  auto check = [&](const LieAlgPair& v, double t) {
    if (!in_p(x, alpha, v, tol)) {
      std::ostringstream os;
      os << "control value at t = " << t << " is not in p";
      throw DomainError(os.str());
    }
  };
  if (is_sampled()) {
    for (std::size_t i = 0; i < times_.size(); ++i) check(values_[i], times_[i]);
  } else {
    for (double t : probe_times) check(fn_(t), t);
  }
}

namespace {

void grid_warnings(std::span<const double> grid, const TransportOptions& opts, std::vector<std::string>& w) {
  double worst = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) worst = std::max(worst, grid[i] - grid[i - 1]);
  if (worst >= opts.max_step) {
    std::ostringstream os;
    os << "grid too coarse: largest step " << worst << " >= " << opts.max_step;
    w.push_back(os.str());
  }
}

void require_in_p_frame(const ReductiveFrame& frame, const LieAlgPair& z0) {
  if (!in_p(frame.base(), frame.alpha(), z0)) throw DomainError("parallel_transport: initial value not in p");
}

}  // namespace

TransportResult parallel_transport(const ReductiveFrame& frame, const ControlCurve& x, const LieAlgPair& z0,
                                   std::span<const double> grid, const TransportOptions& opts) {
  require_in_p_frame(frame, z0);
  TransportResult out;
  grid_warnings(grid, opts, out.warnings);

  const Rhs rhs = [&](double t, const Vector& z) -> Vector {
    return -0.5 * (frame.ad_matrix(frame.coords(x(t))) * z);
  };
  IntegratorConfig cfg;
  cfg.steps = std::max<int>(1, static_cast<int>(grid.size()) - 1);
  const FlowResult flow = rk4_on_grid(rhs, frame.coords(z0), grid, cfg);
  out.times = flow.times;
  out.coords = flow.states;
  out.samples.reserve(flow.states.size());
  for (const auto& c : flow.states) out.samples.push_back(frame.element(c));
  return out;
}

TransportResult parallel_transport(const StiefelPoint& base, const AlphaParam& alpha, const ControlCurve& x,
                                   const LieAlgPair& z0, std::span<const double> grid,
                                   const TransportOptions& opts) {
  const auto frame = reductive_frame(base, alpha);
  return parallel_transport(*frame, x, z0, grid, opts);
}

GeneralLiftResult parallel_transport_general_lift(const ReductiveFrame& frame, const ControlCurve& x,
                                                  const ControlCurve& s_vel, const LieAlgPair& z0,
                                                  std::span<const double> grid, const TransportOptions& opts) {
  require_in_p_frame(frame, z0);
  const Eigen::Index n = frame.base().n();
  const Eigen::Index k = frame.base().k();
  const Eigen::Index d = frame.dim();
  for (double t : grid) {
    const LieAlgPair y = s_vel(t);
    if (pr_p(frame.base(), frame.alpha(), y).norm() > 1e-8 * std::max(1.0, y.norm()))
      throw DomainError("parallel_transport_general_lift: gauge velocity not in the isotropy algebra");
  }

  GeneralLiftResult out;
  grid_warnings(grid, opts, out.warnings);

  // State layout: [z (d) | s1 (n*n) | s2 (k*k)]
  const Rhs rhs = [&](double t, const Vector& y) -> Vector {
    const Matrix s1 = y.segment(d, n * n).reshaped(n, n);
    const Matrix s2 = y.segment(d + n * n, k * k).reshaped(k, k);
    const LieAlgPair xv = x(t);
    const LieAlgPair pulled = LieAlgPair::from_unchecked(s1.transpose() * xv.omega() * s1,
                                                         s2.transpose() * xv.psi() * s2);
    const LieAlgPair sv = s_vel(t);
    Vector dy(y.size());
    // The -[y, z] term accounts for the frame change z_r = Ad_{s^-1} z_q.
    dy.head(d) = -(frame.ad_matrix(sv) * y.head(d)) - 0.5 * (frame.ad_matrix(frame.coords(pulled)) * y.head(d));
    dy.segment(d, n * n) = (s1 * sv.omega()).reshaped();
    dy.segment(d + n * n, k * k) = (s2 * sv.psi()).reshaped();
    return dy;
  };

  Vector y0(d + n * n + k * k);
  y0.head(d) = frame.coords(z0);
  y0.segment(d, n * n) = Matrix::Identity(n, n).reshaped();
  y0.segment(d + n * n, k * k) = Matrix::Identity(k, k).reshaped();

  IntegratorConfig cfg;
  cfg.steps = std::max<int>(1, static_cast<int>(grid.size()) - 1);
  const FlowResult flow = rk4_on_grid(rhs, y0, grid, cfg);
  out.times = flow.times;
  for (const auto& y : flow.states) {
    out.coords.push_back(y.head(d));
    out.samples.push_back(frame.element(y.head(d)));
    out.gauge.push_back(GroupPair::from_unchecked(y.segment(d, n * n).reshaped(n, n),
                                                  y.segment(d + n * n, k * k).reshaped(k, k)));
  }
  return out;
}

CovariantDerivative covariant_derivative_coords(const CoordCurve& x, const CoordCurve& y, const ReductiveFrame& frame,
                                                double t, double t_min, double t_max, double h_fd) {
  if (!(h_fd > 0.0)) throw std::invalid_argument("covariant_derivative_coords: h_fd must be positive");
  CovariantDerivative out;
  Vector ydot;
  if (t - h_fd >= t_min && t + h_fd <= t_max) {
    ydot = (y(t + h_fd) - y(t - h_fd)) / (2.0 * h_fd);
  } else if (t + h_fd <= t_max) {
    ydot = (y(t + h_fd) - y(t)) / h_fd;
    out.one_sided = true;
  } else {
    ydot = (y(t) - y(t - h_fd)) / h_fd;
    out.one_sided = true;
  }
  if (out.one_sided) out.warning = "one-sided difference at interval boundary (first order)";
  out.value = ydot + 0.5 * (frame.ad_matrix(x(t)) * y(t));
  return out;
}

}  // namespace stiefel
