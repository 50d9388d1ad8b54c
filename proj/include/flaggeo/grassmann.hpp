#pragma once

#include <vector>

#include "flaggeo/matfun.hpp"

namespace flaggeo {

// A point of Gr(k, n): the span of an n x k orthonormal representative.
class GrassmannPoint {
 public:
  GrassmannPoint() = default;
  explicit GrassmannPoint(OrthonormalColumns x) : x_(std::move(x)) {}
  explicit GrassmannPoint(const Matrix& x, double tol = kOrthonormalTolerance)
      : x_(x, tol) {}

  Eigen::Index n() const { return x_.rows(); }
  Eigen::Index k() const { return x_.cols(); }
  const Matrix& matrix() const { return x_.matrix(); }

 private:
  OrthonormalColumns x_;
};

// Principal angles between the two spans, ascending, each in [0, pi/2].
// Singular values of X^T Y are clamped to [-1, 1] before arccos. When k = n
// all angles are exactly zero.
std::vector<double> principal_angles(const GrassmannPoint& a,
                                     const GrassmannPoint& b);

// Geodesic distance sqrt(sum of squared principal angles).
double grassmann_distance(const GrassmannPoint& a, const GrassmannPoint& b);

}  // namespace flaggeo
