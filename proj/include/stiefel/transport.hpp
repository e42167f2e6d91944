#pragma once

#include "stiefel/odeint.hpp"
#include "stiefel/stiefel_geometry.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace stiefel {

/// Curve t -> g, given either as a closure or as samples joined piecewise linearly.
/// Sampled curves are held constant outside the sampled interval.
class ControlCurve {
 public:
  using Fn = std::function<LieAlgPair(double)>;

  static ControlCurve closure(Fn f);
  static ControlCurve sampled(std::vector<double> times, std::vector<LieAlgPair> values);
  static ControlCurve constant(const LieAlgPair& v);
  static ControlCurve zero(Eigen::Index n, Eigen::Index k);

  LieAlgPair operator()(double t) const;
  bool is_sampled() const noexcept { return !times_.empty(); }
  const std::vector<double>& sample_times() const noexcept { return times_; }

  /// Throws DomainError if a sampled value, or the closure at any probe time, is outside p.
  void require_in_p(const StiefelPoint& x, const AlphaParam& alpha, std::span<const double> probe_times,
                    double tol = 1e-8) const;

 private:
  Fn fn_;
  std::vector<double> times_;
  std::vector<LieAlgPair> values_;
};

struct TransportOptions {
  /// Steps at or above this length produce a warning.
  double max_step = 0.05;
};

struct TransportResult {
  std::vector<double> times;
  std::vector<Vector> coords;
  std::vector<LieAlgPair> samples;
  std::vector<std::string> warnings;
};

struct GeneralLiftResult : TransportResult {
  std::vector<GroupPair> gauge;
};

/// z' = -1/2 pr_p([x(t), z]) along a horizontal lift with velocity x(t) in p.
TransportResult parallel_transport(const ReductiveFrame& frame, const ControlCurve& x, const LieAlgPair& z0,
                                   std::span<const double> grid, const TransportOptions& opts = {});
TransportResult parallel_transport(const StiefelPoint& base, const AlphaParam& alpha, const ControlCurve& x,
                                   const LieAlgPair& z0, std::span<const double> grid,
                                   const TransportOptions& opts = {});

/// Same field along the lift r = q s, with s' = s s_vel(t), s_vel in h:
/// z' = -[s_vel, z] - 1/2 pr_p([Ad_{s^-1} x, z]).
GeneralLiftResult parallel_transport_general_lift(const ReductiveFrame& frame, const ControlCurve& x,
                                                  const ControlCurve& s_vel, const LieAlgPair& z0,
                                                  std::span<const double> grid, const TransportOptions& opts = {});

using CoordCurve = std::function<Vector(double)>;

struct CovariantDerivative {
  Vector value;
  bool one_sided = false;
  std::string warning;
};

inline constexpr double kDefaultFdStep = 1e-5;

/// Frame coordinates of y' + 1/2 pr_p([x, y]) at t. Near the ends of [t_min, t_max] a first-order
/// one-sided difference is used and flagged.
CovariantDerivative covariant_derivative_coords(const CoordCurve& x, const CoordCurve& y, const ReductiveFrame& frame,
                                                double t, double t_min, double t_max, double h_fd = kDefaultFdStep);

}  // namespace stiefel
