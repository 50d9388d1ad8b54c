#include "flaggeo/matfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace flaggeo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::LogNearCutLocus: return "LogNearCutLocus";
    case ErrorKind::NoConvergedTrial: return "NoConvergedTrial";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::RankTooLow: return "RankTooLow";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::InvalidInput,
                std::string(what) + ": non-finite entries");
  }
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::InvalidInput,
                std::string(what) + ": expected a nonempty square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

SkewMatrix::SkewMatrix(const Matrix& a) {
  require_square(a, "SkewMatrix");
  require_finite(a, "SkewMatrix");
  const double asym = (a + a.transpose()).norm();
  if (asym > kSkewTolerance * std::max(1.0, a.norm())) {
    throw Error(ErrorKind::InvalidInput,
                "SkewMatrix: |A + A^T|_F = " + std::to_string(asym) +
                    " exceeds skew-symmetry tolerance");
  }
  a_ = 0.5 * (a - a.transpose());
}

SkewMatrix SkewMatrix::zero(Eigen::Index dim) {
  return SkewMatrix(Matrix::Zero(dim, dim), Unchecked{});
}

SkewMatrix SkewMatrix::skew_part(const Matrix& m) {
  require_square(m, "SkewMatrix::skew_part");
  return SkewMatrix(0.5 * (m - m.transpose()), Unchecked{});
}

double orthonormality_error(const Matrix& x) {
  return (x.transpose() * x - Matrix::Identity(x.cols(), x.cols())).norm();
}

OrthonormalColumns::OrthonormalColumns(Matrix x, double tol) : x_(std::move(x)) {
  require_finite(x_, "OrthonormalColumns");
  if (x_.cols() > x_.rows() || x_.cols() == 0) {
    throw Error(ErrorKind::InvalidInput,
                "OrthonormalColumns: need 1 <= k <= n, got " +
                    std::to_string(x_.rows()) + "x" + std::to_string(x_.cols()));
  }
  const double err = orthonormality_error(x_);
  if (!(err <= tol)) {
    throw Error(ErrorKind::InvalidInput,
                "orthonormality violated: |X^T X - I|_F = " +
                    std::to_string(err));
  }
}

Matrix expm_skew(const SkewMatrix& a) {
  require_finite(a.matrix(), "expm_skew");
  if (a.dim() == 0) return Matrix();
  Matrix r = a.matrix().exp();
  return r;
}

SkewMatrix logm_so(const Matrix& r) {
  require_square(r, "logm_so");
  require_finite(r, "logm_so");
  const Eigen::Index n = r.rows();
  const double orth = orthonormality_error(r);
  if (orth > kLogOrthogonalityTolerance) {
    throw Error(ErrorKind::InvalidInput,
                "logm_so: matrix is not orthogonal, |R^T R - I|_F = " +
                    std::to_string(orth));
  }
  if (r.determinant() <= 0.0) {
    throw Error(ErrorKind::InvalidInput, "logm_so: det(R) is not +1");
  }

  // R is normal, so C = (R + R^T)/2 and K = (R - R^T)/2 commute and share
  // the rotation planes of R. On a plane turned by theta, C acts as cos(theta)
  // and K as sin(theta) J, hence log R = K f(C) with f(c) = acos(c)/sqrt(1-c^2).
  // C is symmetric, which keeps the eigensolver well behaved on the highly
  // repeated unit eigenvalues that aligned flag representatives produce.
  const Matrix c = 0.5 * (r + r.transpose());
  const Matrix k = 0.5 * (r - r.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidInput, "logm_so: eigendecomposition failed");
  }
  const double cut = std::cos(std::numbers::pi - kCutLocusTolerance);
  Vector f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ci = std::clamp(eig.eigenvalues()(i), -1.0, 1.0);
    if (ci <= cut) {
      throw Error(ErrorKind::LogNearCutLocus,
                  "logm_so: rotation angle " +
                      std::to_string(std::acos(ci)) + " is too close to pi");
    }
    const double gap = 1.0 - ci;
    // theta/sin(theta) = 1 + theta^2/6 + ..., and theta^2 ~ 2(1 - c).
    f(i) = gap < 1e-8 ? 1.0 + gap / 3.0
                      : std::acos(ci) / std::sqrt(gap * (1.0 + ci));
  }
  const Matrix& v = eig.eigenvectors();
  const Matrix fc = v * f.asDiagonal() * v.transpose();
  return SkewMatrix::skew_part(k * fc);
}

QrResult qr_thin(const Matrix& x) {
  require_finite(x, "qr_thin");
  const Eigen::Index n = x.rows();
  const Eigen::Index m = x.cols();
  if (m > n || m == 0) {
    throw Error(ErrorKind::InvalidInput,
                "qr_thin: need 1 <= m <= n, got " + std::to_string(n) + "x" +
                    std::to_string(m));
  }
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix q = qr.householderQ() * Matrix::Identity(n, m);
  Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }
  return {OrthonormalColumns(std::move(q)), std::move(r)};
}

SvdResult svd_compact(const Matrix& x) {
  require_finite(x, "svd_compact");
  if (x.size() == 0) {
    throw Error(ErrorKind::InvalidInput, "svd_compact: empty matrix");
  }
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU();
  Matrix v = svd.matrixV();
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) {
      u.col(j) *= -1.0;
      v.col(j) *= -1.0;
    }
  }
  return {OrthonormalColumns(std::move(u)), svd.singularValues(),
          OrthonormalColumns(std::move(v))};
}

Matrix complete_orthonormal(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (k == n) return x;
  Eigen::HouseholderQR<Matrix> qr(x);
  Matrix full = qr.householderQ();
  full.leftCols(k) = x;
  return full;
}

}  // namespace flaggeo
