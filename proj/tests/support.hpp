#pragma once

#include "stiefel/lie_core.hpp"
#include "stiefel/stiefel_geometry.hpp"

#include <array>
#include <cmath>
#include <random>

namespace testsupport {

using stiefel::LieAlgPair;
using stiefel::Matrix;
using stiefel::Vector;

inline constexpr std::array<double, 5> kAlphaGrid = {-3.0, -0.5, 0.5, 1.0, 2.0};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return nd_(gen_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Matrix gaussian(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

  Matrix skew(Eigen::Index n) {
    const Matrix g = gaussian(n, n);
    return 0.5 * (g - g.transpose());
  }

  LieAlgPair algebra(Eigen::Index n, Eigen::Index k) { return LieAlgPair(skew(n), skew(k)); }

  Matrix orthogonal(Eigen::Index n) {
    Eigen::HouseholderQR<Matrix> qr(gaussian(n, n));
    Matrix q = qr.householderQ();
    return q;
  }

  stiefel::GroupPair group(Eigen::Index n, Eigen::Index k) { return stiefel::GroupPair(orthogonal(n), orthogonal(k)); }

  stiefel::StiefelPoint point(Eigen::Index n, Eigen::Index k) {
    return stiefel::StiefelPoint(orthogonal(n).leftCols(k));
  }

  Matrix tangent(const stiefel::StiefelPoint& x) {
    const Matrix m = gaussian(x.n(), x.k());
    const Matrix s = x.matrix().transpose() * m;
    return m - 0.5 * x.matrix() * (s + s.transpose());
  }

  Matrix normal_vec(const stiefel::StiefelPoint& x) {
    const Matrix s = gaussian(x.k(), x.k());
    return x.matrix() * (s + s.transpose());
  }

  double alpha() { return kAlphaGrid[static_cast<std::size_t>(integer(0, 4))]; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> nd_{0.0, 1.0};
};

inline double pair_distance(const LieAlgPair& a, const LieAlgPair& b) { return (a - b).norm(); }

/// Truncated Taylor series; only for moderate norms.
inline Matrix series_exp(const Matrix& a, int terms = 30) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int j = 1; j < terms; ++j) {
    term = term * a / static_cast<double>(j);
    sum += term;
  }
  return sum;
}

}  // namespace testsupport
