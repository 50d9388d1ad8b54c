#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "flaggeo/matfun.hpp"

namespace flaggeo {

/// Type (n_1, ..., n_d) of a flag in R^n: the dimension increments of the
/// nested subspaces. Requires d >= 2 and every part >= 1.
class FlagSignature {
 public:
  FlagSignature() = default;
  explicit FlagSignature(std::vector<int> parts);

  // "1,1,8" -> (1,1,8)
  static FlagSignature parse(std::string_view text);

  // Signature of an n-dimensional flag whose leading parts are given and sum
  // to k < n; the trailing part becomes n - k. Leading parts that already sum
  // to n are taken as the full signature.
  static FlagSignature complete(std::vector<int> leading, int n);

  const std::vector<int>& parts() const { return parts_; }
  int n() const { return n_; }
  int d() const { return static_cast<int>(parts_.size()); }
  // Sum of the first d-1 parts.
  int k() const { return n_ - parts_.back(); }
  int block_start(int i) const { return starts_.at(static_cast<std::size_t>(i)); }
  int block_size(int i) const { return parts_.at(static_cast<std::size_t>(i)); }

  std::string to_string() const;

  friend bool operator==(const FlagSignature& a, const FlagSignature& b) {
    return a.parts_ == b.parts_;
  }

 private:
  std::vector<int> parts_;
  std::vector<int> starts_;
  int n_ = 0;
};

/// A point [Q] of FL(n_1, ..., n_d), stored as a representative Q in SO(n).
class FlagPoint {
 public:
  FlagPoint() = default;

  // Q must be orthogonal within tol. det(Q) = -1 is repaired by negating the
  // first column of the last block, which stays inside the class [Q].
  FlagPoint(Matrix q, FlagSignature sig, double tol = kOrthonormalTolerance);

  // Builds a point from an n x k orthonormal frame (k = sig.k()) or from a
  // full n x n orthogonal matrix. The missing trailing block is any
  // orthonormal completion.
  static FlagPoint from_frame(const Matrix& x, const FlagSignature& sig,
                              double tol = kOrthonormalTolerance);

  static FlagPoint identity(const FlagSignature& sig);

  const FlagSignature& signature() const { return sig_; }
  const Matrix& matrix() const { return q_; }
  // First k columns: the part of the representative that carries the flag
  // below the last block.
  Matrix frame() const { return q_.leftCols(sig_.k()); }

 private:
  FlagSignature sig_;
  Matrix q_;
};

/// Skew-symmetric n x n matrix with zero diagonal blocks. Points along
/// Q exp(tH) trace a flag geodesic.
class HorizontalTangent {
 public:
  HorizontalTangent() = default;
  HorizontalTangent(SkewMatrix h, FlagSignature sig);

  const FlagSignature& signature() const { return sig_; }
  const SkewMatrix& skew() const { return h_; }
  const Matrix& matrix() const { return h_.matrix(); }

 private:
  SkewMatrix h_;
  FlagSignature sig_;
};

/// Block-diagonal skew-symmetric matrix. Moving along it leaves the flag
/// unchanged.
class VerticalTangent {
 public:
  VerticalTangent() = default;
  VerticalTangent(SkewMatrix g, FlagSignature sig);

  static VerticalTangent zero(const FlagSignature& sig);

  const FlagSignature& signature() const { return sig_; }
  const SkewMatrix& skew() const { return g_; }
  const Matrix& matrix() const { return g_.matrix(); }

 private:
  SkewMatrix g_;
  FlagSignature sig_;
};

HorizontalTangent project_horizontal(const SkewMatrix& a,
                                     const FlagSignature& sig);
VerticalTangent project_vertical(const SkewMatrix& a, const FlagSignature& sig);

// sqrt(1/2 tr(H^T H))
double geodesic_length(const HorizontalTangent& h);

// [P exp(tH)]
FlagPoint flag_exp(const FlagPoint& p, const HorizontalTangent& h, double t);

// The 2^(d-1) representatives of [Q] on the fully oriented flag manifold.
// Element 0 is Q; the rest negate the first column of every block in an
// even-sized subset of blocks, subsets ordered by size then lexicographically.
std::vector<Matrix> enumerate_representatives(const Matrix& q,
                                              const FlagSignature& sig);
std::vector<FlagPoint> enumerate_representatives(const FlagPoint& p);

struct IterativeLogResult {
  HorizontalTangent h;
  VerticalTangent g;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

// Aborts a trial once the residual has failed to improve this many times in
// a row.
inline constexpr int kStallLimit = 10;

/// Alternating solver for Q = exp(H) exp(G) with H horizontal, G vertical.
///
/// Starting from G0 it repeats
///   H <- P_H(log(Q exp(-G)))
///   G <- P_G(log(exp(-H) Q))
/// until |Q - exp(H) exp(G)|_F < eps or max_iter sweeps have run. A cut-locus
/// log along the way ends the trial with converged = false and an infinite
/// residual.
IterativeLogResult iterative_log(const Matrix& q, const FlagSignature& sig,
                                 const VerticalTangent& g0, int max_iter,
                                 double eps, int anderson_depth = 0);

struct SolverConfig {
  int restarts = 5;
  int max_iter = 100;
  double eps = 1e-10;
  std::uint64_t seed = 0;
  // Half-width of the uniform draw for random vertical starts.
  double g0_scale = 0.5;
  // History length for Anderson mixing of the vertical iterate; 0 runs the
  // plain alternating sweeps.
  int anderson_depth = 5;
};

struct GeodesicSolution {
  HorizontalTangent h;
  VerticalTangent g;
  double distance = 0.0;
  int representative_index = 0;
  double residual = 0.0;
  bool converged = false;
  int trials = 0;
  int converged_trials = 0;
};

// Q M where M is block diagonal with each block the orthogonal polar factor
// that makes Q's diagonal block symmetric positive semidefinite; the result
// stays in [Q] and is moved back into SO(n) if the product of block
// determinants came out negative.
Matrix align_representative(const Matrix& q, const FlagSignature& sig);

// Deterministic 64-bit seed from a base seed and two indices (splitmix64
// mixing). Used wherever per-item streams must not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b);

// Random vertical start: each diagonal block's strict lower triangle drawn
// uniformly from [-scale, scale].
VerticalTangent random_vertical(const FlagSignature& sig, std::uint64_t seed,
                                double scale);

/// Shortest geodesic between two flags. Forms Q = Q1^T Q2, runs
/// cfg.restarts trials of iterative_log on every representative of [Q]
/// (the first trial from G0 = 0, later ones from seeded random starts) and
/// keeps the converged trial with the smallest geodesic length. Throws
/// NoConvergedTrial when no trial converges.
GeodesicSolution flag_distance(const FlagPoint& p1, const FlagPoint& p2,
                               const SolverConfig& cfg = {});

struct ReducedPair {
  FlagPoint first;
  FlagPoint second;
  FlagSignature signature;  // (n_1, ..., n_{d-1}, k)
  OrthonormalColumns basis;  // n x 2k basis U of span{[I_{n,k}, q]}
};

inline constexpr double kReduceRankTolerance = 1e-8;

/// Moves the pair into dimension 2k. With q the first k columns of
/// Q1^T Q2 and U the thin-QR basis of [I_{n,k}, q], the reduced endpoints
/// are the completions of U^T I_{n,k} and U^T q. Distances agree with the
/// full problem. Throws NotApplicable when 2k >= n and RankDeficient when
/// the trailing n-k rows of q have a singular value below
/// kReduceRankTolerance.
ReducedPair reduce_2k(const FlagPoint& p1, const FlagPoint& p2);

// flag_distance on the 2k-reduced pair when reduce_2k applies, on the full
// pair otherwise. The returned tangents live in whichever dimension was used.
GeodesicSolution flag_distance_auto(const FlagPoint& p1, const FlagPoint& p2,
                                    const SolverConfig& cfg = {});

}  // namespace flaggeo
