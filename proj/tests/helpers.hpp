#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "flaggeo/flag.hpp"

namespace testutil {

using flaggeo::Matrix;
using flaggeo::Vector;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrix random_skew(Eigen::Index n, std::mt19937_64& rng) {
  const Matrix a = gaussian(n, n, rng);
  return 0.5 * (a - a.transpose());
}

// Haar-ish orthogonal matrix from a Gaussian QR, with det forced to +1.
inline Matrix random_so(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix> qr(gaussian(n, n, rng));
  Matrix q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline Matrix random_frame(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng) {
  return random_so(n, rng).leftCols(k);
}

// Scaling-and-squaring Taylor series, 30 terms. Independent of Eigen's Pade.
inline Matrix taylor_expm(const Matrix& a) {
  const double norm = a.norm();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.5) ++squarings;
  const Matrix b = a / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

inline Matrix rotation2(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// Random horizontal tangent for sig, scaled to the requested geodesic length.
inline Matrix random_horizontal(const flaggeo::FlagSignature& sig, double length,
                                std::mt19937_64& rng) {
  Matrix h = random_skew(sig.n(), rng);
  for (int b = 0; b < sig.d(); ++b) {
    h.block(sig.block_start(b), sig.block_start(b), sig.block_size(b), sig.block_size(b))
        .setZero();
  }
  const double len = std::sqrt(0.5 * (h.transpose() * h).trace());
  return h * (length / len);
}

// Block-diagonal element of S(O(n_1) x ... x O(n_d)).
inline Matrix random_block_diagonal(const flaggeo::FlagSignature& sig, std::mt19937_64& rng) {
  const int n = sig.n();
  Matrix m = Matrix::Zero(n, n);
  for (int b = 0; b < sig.d(); ++b) {
    Matrix blk = random_so(sig.block_size(b), rng);
    if (std::uniform_int_distribution<int>(0, 1)(rng)) blk.col(0) *= -1.0;
    m.block(sig.block_start(b), sig.block_start(b), sig.block_size(b), sig.block_size(b)) = blk;
  }
  if (m.determinant() < 0) m.col(sig.block_start(sig.d() - 1)) *= -1.0;
  return m;
}

}  // namespace testutil
