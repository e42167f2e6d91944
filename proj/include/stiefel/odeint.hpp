#pragma once

#include "stiefel/lie_core.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace stiefel {

struct IntegratorConfig {
  int steps = 1000;
  bool reproject = false;
  int reproject_every = 1;
  bool tolerance_report = false;

  void validate() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, double t) : std::runtime_error(msg), time(t) {}
  double time;
};

using Rhs = std::function<Vector(double, const Vector&)>;
/// Called after a step when reprojection is due; modifies the state in place.
using Reprojector = std::function<void(Vector&)>;
/// Called after every accepted step; returning false stops the run at that sample.
using StepMonitor = std::function<bool(double, const Vector&)>;

struct FlowResult {
  std::vector<double> times;
  std::vector<Vector> states;
  int reprojections = 0;
  bool stopped_early = false;
};

/// Classical RK4 on a uniform grid of cfg.steps steps over [t0, t1].
FlowResult rk4_flow(const Rhs& f, const Vector& y0, double t0, double t1, const IntegratorConfig& cfg,
                    const Reprojector& reproject = {}, const StepMonitor& monitor = {});

/// Classical RK4 with one step per interval of a strictly increasing grid.
FlowResult rk4_on_grid(const Rhs& f, const Vector& y0, std::span<const double> grid, const IntegratorConfig& cfg,
                       const Reprojector& reproject = {}, const StepMonitor& monitor = {});

/// Nearest orthogonal matrix in the Frobenius norm.
Matrix polar_reproject(const Matrix& m);

std::vector<double> uniform_grid(double t0, double t1, int steps);

/// Second-order three-point derivative of samples on a possibly nonuniform grid.
/// Interior points are centered, the two ends use one-sided stencils. Needs at least 3 samples.
template <class T>
std::vector<T> differentiate(std::span<const double> t, const std::vector<T>& f) {
  const std::size_t m = t.size();
  if (m < 3 || f.size() != m) throw std::invalid_argument("differentiate: need >= 3 matching samples");
  std::vector<T> d(m);
  auto stencil = [&](std::size_t c, std::size_t at) {
    // three-point Lagrange derivative through samples c-1, c, c+1 evaluated at node `at`
    const double x0 = t[c - 1], x1 = t[c], x2 = t[c + 1];
    const double xa = t[at];
    const double w0 = ((xa - x1) + (xa - x2)) / ((x0 - x1) * (x0 - x2));
    const double w1 = ((xa - x0) + (xa - x2)) / ((x1 - x0) * (x1 - x2));
    const double w2 = ((xa - x0) + (xa - x1)) / ((x2 - x0) * (x2 - x1));
    return T(w0 * f[c - 1] + w1 * f[c] + w2 * f[c + 1]);
  };
  d[0] = stencil(1, 0);
  for (std::size_t i = 1; i + 1 < m; ++i) d[i] = stencil(i, i);
  d[m - 1] = stencil(m - 2, m - 1);
  return d;
}

/// Fourth-order five-point variant: centered stencils in the interior, shifted five-point
/// stencils within two samples of either end. Needs at least 5 samples.
template <class T>
std::vector<T> differentiate4(std::span<const double> t, const std::vector<T>& f) {
  const std::size_t m = t.size();
  if (m < 5 || f.size() != m) throw std::invalid_argument("differentiate4: need >= 5 matching samples");
  std::vector<T> d(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = std::min(i < 2 ? 0 : i - 2, m - 5);
    const double xa = t[i];
    T acc = 0.0 * f[lo];
    for (std::size_t j = lo; j < lo + 5; ++j) {
      // derivative of the j-th Lagrange basis polynomial at xa
      double w = 0.0;
      for (std::size_t l = lo; l < lo + 5; ++l) {
        if (l == j) continue;
        double prod = 1.0 / (t[j] - t[l]);
        for (std::size_t q = lo; q < lo + 5; ++q)
          if (q != j && q != l) prod *= (xa - t[q]) / (t[j] - t[q]);
        w += prod;
      }
      acc += w * f[j];
    }
    d[i] = acc;
  }
  return d;
}

}  // namespace stiefel
