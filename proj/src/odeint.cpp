#include "stiefel/odeint.hpp"

#include "stiefel/linalg.hpp"

#include <string>

namespace stiefel {

void IntegratorConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("IntegratorConfig: steps must be >= 1");
  if (reproject_every < 1) throw std::invalid_argument("IntegratorConfig: reproject_every must be >= 1");
}

std::vector<double> uniform_grid(double t0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("uniform_grid: steps must be >= 1");
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  const double h = (t1 - t0) / steps;
  for (int i = 0; i <= steps; ++i) g[i] = t0 + i * h;
  g.back() = t1;
  return g;
}

FlowResult rk4_on_grid(const Rhs& f, const Vector& y0, std::span<const double> grid, const IntegratorConfig& cfg,
                       const Reprojector& reproject, const StepMonitor& monitor) {
  cfg.validate();
  if (grid.empty()) throw std::invalid_argument("rk4_on_grid: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("rk4_on_grid: grid must be strictly increasing");

  auto eval = [&](double t, const Vector& y) {
    Vector dy = f(t, y);
    if (dy.size() != y.size()) throw IntegrationError("rk4: derivative has wrong size", t);
    if (!dy.allFinite()) throw IntegrationError("rk4: non-finite derivative at t = " + std::to_string(t), t);
    return dy;
  };

  FlowResult out;
  out.times.reserve(grid.size());
  out.states.reserve(grid.size());
  out.times.push_back(grid[0]);
  out.states.push_back(y0);

  Vector y = y0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    const double h = grid[i + 1] - t;
    const Vector k1 = eval(t, y);
    const Vector k2 = eval(t + 0.5 * h, y + 0.5 * h * k1);
    const Vector k3 = eval(t + 0.5 * h, y + 0.5 * h * k2);
    const Vector k4 = eval(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (cfg.reproject && reproject && (i + 1) % static_cast<std::size_t>(cfg.reproject_every) == 0) {
      reproject(y);
      ++out.reprojections;
    }
    if (monitor && !monitor(grid[i + 1], y)) {
      out.stopped_early = true;
      break;
    }
    out.times.push_back(grid[i + 1]);
    out.states.push_back(y);
  }
  return out;
}

FlowResult rk4_flow(const Rhs& f, const Vector& y0, double t0, double t1, const IntegratorConfig& cfg,
                    const Reprojector& reproject, const StepMonitor& monitor) {
  cfg.validate();
  const auto grid = uniform_grid(t0, t1, cfg.steps);
  return rk4_on_grid(f, y0, grid, cfg, reproject, monitor);
}

Matrix polar_reproject(const Matrix& m) { return polar_factor(m); }

}  // namespace stiefel
