#include <doctest.h>

#include "stiefel/linalg.hpp"
#include "stiefel/odeint.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace stiefel;
using testsupport::Rng;

namespace {

Rhs linear_skew_flow(const Matrix& omega) {
  const Eigen::Index n = omega.rows();
  return [omega, n](double, const Vector& y) -> Vector {
    const Matrix q = y.reshaped(n, n);
    return (q * omega).reshaped();
  };
}

double rk4_error(const Matrix& omega, int steps) {
  const Eigen::Index n = omega.rows();
  IntegratorConfig cfg;
  cfg.steps = steps;
  const FlowResult r = rk4_flow(linear_skew_flow(omega), Matrix::Identity(n, n).reshaped(), 0.0, 1.0, cfg);
  const Matrix q1 = r.states.back().reshaped(n, n);
  return (q1 - expm(omega)).norm();
}

}  // namespace

TEST_CASE("rk4 with zero derivative is constant") {
  IntegratorConfig cfg;
  cfg.steps = 10;
  Vector y0(3);
  y0 << 1, 2, 3;
  const FlowResult r = rk4_flow([](double, const Vector& y) { return Vector(Vector::Zero(y.size())); }, y0, 0, 1, cfg);
  REQUIRE(r.states.size() == 11);
  for (const auto& s : r.states) CHECK((s - y0).norm() == 0.0);
  CHECK(r.times.back() == 1.0);
}

TEST_CASE("rk4 reproduces the exponential") {
  IntegratorConfig cfg;
  cfg.steps = 1000;
  Vector y0(1);
  y0 << 1.0;
  const FlowResult r = rk4_flow([](double, const Vector& y) { return y; }, y0, 0, 1, cfg);
  CHECK(std::abs(r.states.back()(0) - std::exp(1.0)) < 1e-10);
}

TEST_CASE("orthogonality drift of the linear skew flow") {
  Rng rng(30);
  const Matrix omega = rng.skew(5);
  IntegratorConfig cfg;
  cfg.steps = 1000;
  const auto f = linear_skew_flow(omega);
  const Vector y0 = Matrix::Identity(5, 5).reshaped();

  const FlowResult plain = rk4_flow(f, y0, 0, 1, cfg);
  double drift = 0.0;
  for (const auto& s : plain.states) {
    const Matrix q = s.reshaped(5, 5);
    drift = std::max(drift, max_abs(q.transpose() * q - Matrix::Identity(5, 5)));
  }
  CHECK(drift <= 1e-9);

  cfg.reproject = true;
  const FlowResult fixed = rk4_flow(f, y0, 0, 1, cfg, [](Vector& y) {
    const Matrix q = y.reshaped(5, 5);
    y = polar_reproject(q).reshaped();
  });
  double drift2 = 0.0;
  for (const auto& s : fixed.states) {
    const Matrix q = s.reshaped(5, 5);
    drift2 = std::max(drift2, max_abs(q.transpose() * q - Matrix::Identity(5, 5)));
  }
  CHECK(drift2 <= 1e-13);
  CHECK(fixed.reprojections == 1000);

  cfg.reproject_every = 10;
  const FlowResult sparse = rk4_flow(f, y0, 0, 1, cfg, [](Vector& y) {
    const Matrix q = y.reshaped(5, 5);
    y = polar_reproject(q).reshaped();
  });
  CHECK(sparse.reprojections == 100);
}

TEST_CASE("rk4 global error slope on the linear skew benchmark") {
  Rng rng(31);
  const Matrix omega = 3.0 * rng.skew(4);
  const double e1 = rk4_error(omega, 100), e2 = rk4_error(omega, 200), e3 = rk4_error(omega, 400);
  // least-squares slope of log(err) against log(h)
  const double x[3] = {std::log(1.0 / 100), std::log(1.0 / 200), std::log(1.0 / 400)};
  const double y[3] = {std::log(e1), std::log(e2), std::log(e3)};
  const double xm = (x[0] + x[1] + x[2]) / 3, ym = (y[0] + y[1] + y[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) {
    num += (x[i] - xm) * (y[i] - ym);
    den += (x[i] - xm) * (x[i] - xm);
  }
  CHECK(num / den >= 3.8);
}

TEST_CASE("rk4 aborts on a non-finite derivative") {
  IntegratorConfig cfg;
  cfg.steps = 5;
  Vector y0 = Vector::Ones(2);
  const auto bad = [](double t, const Vector& y) -> Vector {
    Vector d = y;
    if (t > 0.5) d(0) = std::numeric_limits<double>::infinity();
    return d;
  };
  CHECK_THROWS_AS(rk4_flow(bad, y0, 0, 1, cfg), IntegrationError);
  cfg.steps = 0;
  CHECK_THROWS(rk4_flow(bad, y0, 0, 1, cfg));
}

TEST_CASE("rk4 monitor stops the run") {
  IntegratorConfig cfg;
  cfg.steps = 10;
  Vector y0 = Vector::Ones(1);
  const FlowResult r =
      rk4_flow([](double, const Vector& y) { return y; }, y0, 0, 1, cfg, {}, [](double t, const Vector&) { return t < 0.45; });
  CHECK(r.stopped_early);
  CHECK(r.states.size() == 5);
}

TEST_CASE("polar_reproject examples") {
  Rng rng(32);
  const Matrix q = rng.orthogonal(5);
  CHECK(max_abs(polar_reproject(q) - q) < 1e-14);
  CHECK(max_abs(polar_reproject(2.0 * Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) < 1e-15);

  const Matrix perturbed = q + 1e-3 * rng.gaussian(5, 5);
  const Matrix p = polar_reproject(perturbed);
  CHECK((p - q).norm() <= 2e-3 * std::sqrt(25.0));
  CHECK(max_abs(p - q) <= 2e-3 * 5);
  CHECK(max_abs(p.transpose() * p - Matrix::Identity(5, 5)) < 1e-14);
  // Newton oracle: Y <- (Y + Y^-T) / 2 converges quadratically to the polar factor.
  Matrix y = perturbed;
  for (int it = 0; it < 20; ++it) y = 0.5 * (y + y.inverse().transpose());
  CHECK(max_abs(p - y) < 1e-14);
  // P^T M is the symmetric positive definite factor.
  const Matrix h = p.transpose() * perturbed;
  CHECK(max_abs(h - h.transpose()) < 1e-14);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff() > 0.0);

  CHECK_THROWS_AS(polar_reproject(Matrix::Zero(3, 3)), DomainError);
}

TEST_CASE("differentiate is exact on quadratics, including nonuniform grids") {
  std::vector<double> t = {0.0, 0.1, 0.25, 0.3, 0.5, 0.8};
  std::vector<Vector> f;
  for (double s : t) {
    Vector v(1);
    v << 2.0 * s * s - 3.0 * s + 1.0;
    f.push_back(v);
  }
  const auto d = differentiate<Vector>(t, f);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(d[i](0) - (4.0 * t[i] - 3.0)) < 1e-12);
  std::vector<Vector> two(f.begin(), f.begin() + 2);
  CHECK_THROWS(differentiate<Vector>(std::span<const double>(t.data(), 2), two));
}

TEST_CASE("differentiate4 is exact on quartics and fourth order") {
  std::vector<double> t = {0.0, 0.1, 0.15, 0.3, 0.45, 0.5, 0.8};
  auto f = [](double s) { return s * s * s * s - 2.0 * s * s * s + s - 1.0; };
  auto df = [](double s) { return 4.0 * s * s * s - 6.0 * s * s + 1.0; };
  std::vector<double> v;
  for (double s : t) v.push_back(f(s));
  const auto d = differentiate4<double>(t, v);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(d[i] - df(t[i])) < 1e-11);

  auto err = [](int n) {
    const auto g = uniform_grid(0, 1, n);
    std::vector<double> s;
    for (double x : g) s.push_back(std::sin(3 * x));
    const auto ds = differentiate4<double>(g, s);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(ds[i] - 3 * std::cos(3 * g[i])));
    return e;
  };
  CHECK(err(50) / err(100) > 14.0);
  CHECK_THROWS(differentiate4<double>(std::span<const double>(t.data(), 4), std::vector<double>(4, 0.0)));
}
