#pragma once

#include <Eigen/Dense>

#include "flaggeo/error.hpp"

namespace flaggeo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSkewTolerance = 1e-12;
inline constexpr double kOrthonormalTolerance = 1e-10;
inline constexpr double kLogOrthogonalityTolerance = 1e-8;
inline constexpr double kCutLocusTolerance = 1e-6;

bool all_finite(const Matrix& m);

/// Square matrix with A^T = -A. Construction from a dense matrix rejects
/// asymmetry above kSkewTolerance (scaled by max(1, |A|_F)) and then stores
/// the exact skew part, so transpose() == -*this holds bit for bit.
class SkewMatrix {
 public:
  SkewMatrix() = default;
  explicit SkewMatrix(const Matrix& a);

  static SkewMatrix zero(Eigen::Index dim);
  // (m - m^T) / 2 with no tolerance check.
  static SkewMatrix skew_part(const Matrix& m);

  Eigen::Index dim() const { return a_.rows(); }
  const Matrix& matrix() const { return a_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return a_(i, j); }

 private:
  struct Unchecked {};
  SkewMatrix(Matrix a, Unchecked) : a_(std::move(a)) {}

  Matrix a_;
};

/// n x k matrix whose columns are orthonormal within kOrthonormalTolerance.
class OrthonormalColumns {
 public:
  OrthonormalColumns() = default;
  explicit OrthonormalColumns(Matrix x, double tol = kOrthonormalTolerance);

  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }
  const Matrix& matrix() const { return x_; }

 private:
  Matrix x_;
};

// |X^T X - I|_F
double orthonormality_error(const Matrix& x);

// exp(A) for skew A; the result lies in SO(n).
Matrix expm_skew(const SkewMatrix& a);

/// Principal logarithm of a rotation, every rotation angle in (-pi, pi).
///
/// Works from the symmetric/skew split of R (see the implementation), so only
/// a symmetric eigensolver is involved. Throws InvalidInput when R is not in
/// SO(n) within kLogOrthogonalityTolerance, and LogNearCutLocus when some
/// rotation angle is within kCutLocusTolerance of pi, where the log is not
/// unique.
SkewMatrix logm_so(const Matrix& r);

struct QrResult {
  OrthonormalColumns q;
  Matrix r;  // upper triangular, nonnegative diagonal
};

// Thin Householder QR of an n x m matrix with m <= n.
QrResult qr_thin(const Matrix& x);

struct SvdResult {
  OrthonormalColumns u;
  Vector sigma;  // descending
  OrthonormalColumns v;
};

// Compact SVD. Each left singular vector has its largest-magnitude entry
// positive (first such entry on ties); V follows.
SvdResult svd_compact(const Matrix& x);

// Completes an n x k orthonormal frame to an n x n orthogonal matrix whose
// first k columns are exactly x. Determinant sign is not adjusted.
Matrix complete_orthonormal(const Matrix& x);

}  // namespace flaggeo
