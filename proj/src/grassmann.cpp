#include "flaggeo/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace flaggeo {

std::vector<double> principal_angles(const GrassmannPoint& a,
                                     const GrassmannPoint& b) {
  if (a.n() != b.n() || a.k() != b.k()) {
    throw Error(ErrorKind::InvalidInput,
                "principal_angles: shape mismatch " + std::to_string(a.n()) +
                    "x" + std::to_string(a.k()) + " vs " +
                    std::to_string(b.n()) + "x" + std::to_string(b.k()));
  }
  // Gr(n, n) is a single point; arccos would turn roundoff into ~1e-8 angles.
  if (a.k() == a.n()) return std::vector<double>(static_cast<std::size_t>(a.k()), 0.0);
  const Vector sigma = svd_compact(a.matrix().transpose() * b.matrix()).sigma;
  std::vector<double> angles(static_cast<std::size_t>(sigma.size()));
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    angles[static_cast<std::size_t>(j)] =
        std::acos(std::clamp(sigma(j), -1.0, 1.0));
  }
  return angles;
}

double grassmann_distance(const GrassmannPoint& a, const GrassmannPoint& b) {
  double sum = 0.0;
  for (double angle : principal_angles(a, b)) sum += angle * angle;
  return std::sqrt(sum);
}

}  // namespace flaggeo
