#include "flaggeo/flag.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace flaggeo {

// ---------------------------------------------------------------------------
// FlagSignature

FlagSignature::FlagSignature(std::vector<int> parts) : parts_(std::move(parts)) {
  if (parts_.size() < 2) {
    throw Error(ErrorKind::InvalidInput,
                "signature needs at least two parts, got " +
                    std::to_string(parts_.size()));
  }
  starts_.reserve(parts_.size());
  int start = 0;
  for (int p : parts_) {
    if (p < 1) {
      throw Error(ErrorKind::InvalidInput,
                  "signature parts must be positive, got " + std::to_string(p));
    }
    starts_.push_back(start);
    start += p;
  }
  n_ = start;
}

FlagSignature FlagSignature::parse(std::string_view text) {
  std::vector<int> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string_view token = text.substr(pos, comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    int value = 0;
    const auto [end, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || end != token.data() + token.size()) {
      throw Error(ErrorKind::InvalidInput,
                  "cannot parse signature '" + std::string(text) + "'");
    }
    parts.push_back(value);
    pos = comma + 1;
  }
  if (parts.size() == 1) {
    // A lone part is accepted by complete() but not here.
    throw Error(ErrorKind::InvalidInput,
                "signature needs at least two parts, got 1");
  }
  return FlagSignature(std::move(parts));
}

FlagSignature FlagSignature::complete(std::vector<int> leading, int n) {
  const int sum = std::accumulate(leading.begin(), leading.end(), 0);
  if (sum == n) return FlagSignature(std::move(leading));
  if (sum > n) {
    throw Error(ErrorKind::InvalidInput,
                "signature parts sum to " + std::to_string(sum) +
                    " which exceeds the ambient dimension " + std::to_string(n));
  }
  leading.push_back(n - sum);
  return FlagSignature(std::move(leading));
}

std::string FlagSignature::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) out << ',';
    out << parts_[i];
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Points and tangents

namespace {

void canonicalize_determinant(Matrix& q, const FlagSignature& sig) {
  if (q.determinant() < 0.0) q.col(sig.block_start(sig.d() - 1)) *= -1.0;
}

void require_dim(Eigen::Index dim, const FlagSignature& sig, const char* what) {
  if (dim != sig.n()) {
    throw Error(ErrorKind::InvalidInput,
                std::string(what) + ": dimension " + std::to_string(dim) +
                    " does not match signature (" + sig.to_string() + ")");
  }
}

void require_same_signature(const FlagSignature& a, const FlagSignature& b,
                            const char* what) {
  if (!(a == b)) {
    throw Error(ErrorKind::InvalidInput,
                std::string(what) + ": signature mismatch (" + a.to_string() +
                    ") vs (" + b.to_string() + ")");
  }
}

// Visits (row block, col block) pairs.
template <typename F>
void for_each_block(const FlagSignature& sig, F&& f) {
  for (int i = 0; i < sig.d(); ++i) {
    for (int j = 0; j < sig.d(); ++j) {
      f(i, j, sig.block_start(i), sig.block_start(j), sig.block_size(i),
        sig.block_size(j));
    }
  }
}

}  // namespace

FlagPoint::FlagPoint(Matrix q, FlagSignature sig, double tol)
    : sig_(std::move(sig)), q_(std::move(q)) {
  if (q_.rows() != q_.cols()) {
    throw Error(ErrorKind::InvalidInput, "FlagPoint: matrix must be square");
  }
  require_dim(q_.rows(), sig_, "FlagPoint");
  if (!q_.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "FlagPoint: non-finite entries");
  }
  const double err = orthonormality_error(q_);
  if (!(err <= tol)) {
    throw Error(ErrorKind::InvalidInput,
                "orthonormality violated: |Q^T Q - I|_F = " + std::to_string(err));
  }
  canonicalize_determinant(q_, sig_);
}

FlagPoint FlagPoint::from_frame(const Matrix& x, const FlagSignature& sig,
                                double tol) {
  require_dim(x.rows(), sig, "FlagPoint::from_frame");
  if (x.cols() != sig.k() && x.cols() != sig.n()) {
    throw Error(ErrorKind::InvalidInput,
                "FlagPoint::from_frame: expected " + std::to_string(sig.k()) +
                    " or " + std::to_string(sig.n()) + " columns, got " +
                    std::to_string(x.cols()));
  }
  OrthonormalColumns checked(x, tol);
  return FlagPoint(complete_orthonormal(checked.matrix()), sig,
                   std::max(tol, kOrthonormalTolerance));
}

FlagPoint FlagPoint::identity(const FlagSignature& sig) {
  return FlagPoint(Matrix::Identity(sig.n(), sig.n()), sig);
}

HorizontalTangent::HorizontalTangent(SkewMatrix h, FlagSignature sig)
    : h_(std::move(h)), sig_(std::move(sig)) {
  require_dim(h_.dim(), sig_, "HorizontalTangent");
  for (int i = 0; i < sig_.d(); ++i) {
    const int s = sig_.block_start(i);
    const int b = sig_.block_size(i);
    if (!h_.matrix().block(s, s, b, b).isZero(0.0)) {
      throw Error(ErrorKind::InvalidInput,
                  "HorizontalTangent: diagonal block " + std::to_string(i) +
                      " is not zero");
    }
  }
}

VerticalTangent::VerticalTangent(SkewMatrix g, FlagSignature sig)
    : g_(std::move(g)), sig_(std::move(sig)) {
  require_dim(g_.dim(), sig_, "VerticalTangent");
  for_each_block(sig_, [&](int i, int j, int ri, int cj, int bi, int bj) {
    if (i != j && !g_.matrix().block(ri, cj, bi, bj).isZero(0.0)) {
      throw Error(ErrorKind::InvalidInput,
                  "VerticalTangent: off-diagonal block (" + std::to_string(i) +
                      "," + std::to_string(j) + ") is not zero");
    }
  });
}

VerticalTangent VerticalTangent::zero(const FlagSignature& sig) {
  return VerticalTangent(SkewMatrix::zero(sig.n()), sig);
}

HorizontalTangent project_horizontal(const SkewMatrix& a,
                                     const FlagSignature& sig) {
  require_dim(a.dim(), sig, "project_horizontal");
  Matrix h = a.matrix();
  for (int i = 0; i < sig.d(); ++i) {
    const int s = sig.block_start(i);
    const int b = sig.block_size(i);
    h.block(s, s, b, b).setZero();
  }
  return HorizontalTangent(SkewMatrix::skew_part(h), sig);
}

VerticalTangent project_vertical(const SkewMatrix& a, const FlagSignature& sig) {
  require_dim(a.dim(), sig, "project_vertical");
  Matrix g = Matrix::Zero(a.dim(), a.dim());
  for (int i = 0; i < sig.d(); ++i) {
    const int s = sig.block_start(i);
    const int b = sig.block_size(i);
    g.block(s, s, b, b) = a.matrix().block(s, s, b, b);
  }
  return VerticalTangent(SkewMatrix::skew_part(g), sig);
}

double geodesic_length(const HorizontalTangent& h) {
  return std::sqrt(0.5 * h.matrix().squaredNorm());
}

FlagPoint flag_exp(const FlagPoint& p, const HorizontalTangent& h, double t) {
  require_same_signature(p.signature(), h.signature(), "flag_exp");
  if (t == 0.0) return p;
  const SkewMatrix scaled = SkewMatrix::skew_part(t * h.matrix());
  return FlagPoint(p.matrix() * expm_skew(scaled), p.signature());
}

std::vector<Matrix> enumerate_representatives(const Matrix& q,
                                              const FlagSignature& sig) {
  require_dim(q.rows(), sig, "enumerate_representatives");
  const int d = sig.d();
  std::vector<Matrix> reps;
  reps.reserve(std::size_t{1} << (d - 1));
  reps.push_back(q);

  // Lexicographic even-sized subsets of the d blocks, smallest size first.
  std::vector<int> chosen;
  for (int size = 2; size <= d; size += 2) {
    chosen.resize(static_cast<std::size_t>(size));
    std::iota(chosen.begin(), chosen.end(), 0);
    while (true) {
      Matrix flipped = q;
      for (int block : chosen) flipped.col(sig.block_start(block)) *= -1.0;
      reps.push_back(std::move(flipped));

      int pos = size - 1;
      while (pos >= 0 && chosen[static_cast<std::size_t>(pos)] == d - size + pos)
        --pos;
      if (pos < 0) break;
      ++chosen[static_cast<std::size_t>(pos)];
      for (int r = pos + 1; r < size; ++r) {
        chosen[static_cast<std::size_t>(r)] =
            chosen[static_cast<std::size_t>(r - 1)] + 1;
      }
    }
  }
  return reps;
}

std::vector<FlagPoint> enumerate_representatives(const FlagPoint& p) {
  std::vector<FlagPoint> out;
  for (auto& m : enumerate_representatives(p.matrix(), p.signature())) {
    out.emplace_back(std::move(m), p.signature());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solver

namespace {

// Strict lower triangles of the diagonal blocks, block by block.
Vector pack_vertical(const Matrix& g, const FlagSignature& sig) {
  int size = 0;
  for (int b = 0; b < sig.d(); ++b) size += sig.block_size(b) * (sig.block_size(b) - 1) / 2;
  Vector v(size);
  int at = 0;
  for (int b = 0; b < sig.d(); ++b) {
    const int s = sig.block_start(b);
    for (int i = 1; i < sig.block_size(b); ++i)
      for (int j = 0; j < i; ++j) v(at++) = g(s + i, s + j);
  }
  return v;
}

Matrix unpack_vertical(const Vector& v, const FlagSignature& sig) {
  Matrix g = Matrix::Zero(sig.n(), sig.n());
  int at = 0;
  for (int b = 0; b < sig.d(); ++b) {
    const int s = sig.block_start(b);
    for (int i = 1; i < sig.block_size(b); ++i) {
      for (int j = 0; j < i; ++j) {
        g(s + i, s + j) = v(at);
        g(s + j, s + i) = -v(at);
        ++at;
      }
    }
  }
  return g;
}

}  // namespace

IterativeLogResult iterative_log(const Matrix& q, const FlagSignature& sig,
                                 const VerticalTangent& g0, int max_iter,
                                 double eps, int anderson_depth) {
  require_dim(q.rows(), sig, "iterative_log");
  require_same_signature(sig, g0.signature(), "iterative_log");
  if (max_iter < 1 || !(eps > 0.0) || anderson_depth < 0) {
    throw Error(ErrorKind::InvalidInput,
                "iterative_log: need max_iter >= 1, eps > 0, anderson_depth >= 0");
  }

  IterativeLogResult out;
  out.g = g0;
  out.h = HorizontalTangent(SkewMatrix::zero(sig.n()), sig);

  // Anderson history: differences of successive map outputs and residuals.
  std::vector<Vector> d_out;
  std::vector<Vector> d_res;
  Vector last_out;
  Vector last_res;

  Matrix g_in = g0.matrix();
  double previous = std::numeric_limits<double>::infinity();
  int stalled = 0;
  try {
    for (int iter = 1; iter <= max_iter; ++iter) {
      out.iterations = iter;
      const Matrix exp_neg_g = expm_skew(SkewMatrix::skew_part(-g_in));
      out.h = project_horizontal(logm_so(q * exp_neg_g), sig);
      const Matrix exp_h = expm_skew(out.h.skew());
      out.g = project_vertical(logm_so(exp_h.transpose() * q), sig);
      const Matrix exp_g = expm_skew(out.g.skew());
      out.residual = (q - exp_h * exp_g).norm();
      if (out.residual < eps) {
        out.converged = true;
        break;
      }
      if (out.residual >= previous) {
        if (++stalled >= kStallLimit) break;
        d_out.clear();
        d_res.clear();
        last_out.resize(0);
      } else {
        stalled = 0;
      }
      previous = out.residual;

      if (anderson_depth == 0) {
        g_in = out.g.matrix();
        continue;
      }
      const Vector mapped = pack_vertical(out.g.matrix(), sig);
      const Vector res = mapped - pack_vertical(g_in, sig);
      if (last_out.size() == mapped.size()) {
        d_out.push_back(mapped - last_out);
        d_res.push_back(res - last_res);
        if (static_cast<int>(d_res.size()) > anderson_depth) {
          d_out.erase(d_out.begin());
          d_res.erase(d_res.begin());
        }
      }
      last_out = mapped;
      last_res = res;
      Vector next = mapped;
      if (!d_res.empty() && mapped.size() > 0) {
        Matrix df(mapped.size(), static_cast<Eigen::Index>(d_res.size()));
        Matrix dg(mapped.size(), static_cast<Eigen::Index>(d_out.size()));
        for (std::size_t c = 0; c < d_res.size(); ++c) {
          df.col(static_cast<Eigen::Index>(c)) = d_res[c];
          dg.col(static_cast<Eigen::Index>(c)) = d_out[c];
        }
        const Vector gamma = df.colPivHouseholderQr().solve(res);
        if (gamma.allFinite()) next = mapped - dg * gamma;
      }
      g_in = unpack_vertical(next, sig);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LogNearCutLocus) throw;
    out.residual = std::numeric_limits<double>::infinity();
    out.converged = false;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

VerticalTangent random_vertical(const FlagSignature& sig, std::uint64_t seed,
                                double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix g = Matrix::Zero(sig.n(), sig.n());
  for (int b = 0; b < sig.d(); ++b) {
    const int s = sig.block_start(b);
    for (int i = 1; i < sig.block_size(b); ++i) {
      for (int j = 0; j < i; ++j) {
        const double v = dist(rng);
        g(s + i, s + j) = v;
        g(s + j, s + i) = -v;
      }
    }
  }
  return VerticalTangent(SkewMatrix(g), sig);
}

Matrix align_representative(const Matrix& q, const FlagSignature& sig) {
  require_dim(q.rows(), sig, "align_representative");
  Matrix m = Matrix::Zero(sig.n(), sig.n());
  for (int i = 0; i < sig.d(); ++i) {
    const int s = sig.block_start(i);
    const int b = sig.block_size(i);
    Eigen::JacobiSVD<Matrix> svd(q.block(s, s, b, b),
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    m.block(s, s, b, b) = svd.matrixV() * svd.matrixU().transpose();
  }
  Matrix aligned = q * m;
  canonicalize_determinant(aligned, sig);
  return aligned;
}

GeodesicSolution flag_distance(const FlagPoint& p1, const FlagPoint& p2,
                               const SolverConfig& cfg) {
  require_same_signature(p1.signature(), p2.signature(), "flag_distance");
  if (cfg.restarts < 1) {
    throw Error(ErrorKind::InvalidInput, "flag_distance: restarts must be >= 1");
  }
  const FlagSignature& sig = p1.signature();
  const Matrix q = align_representative(p1.matrix().transpose() * p2.matrix(), sig);
  const std::vector<Matrix> reps = enumerate_representatives(q, sig);

  GeodesicSolution best;
  best.distance = std::numeric_limits<double>::infinity();
  int trials = 0;
  int converged = 0;
  double best_failed_residual = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < reps.size(); ++r) {
    for (int trial = 0; trial < cfg.restarts; ++trial) {
      const VerticalTangent g0 =
          trial == 0 ? VerticalTangent::zero(sig)
                     : random_vertical(sig, derive_seed(cfg.seed, r, trial),
                                       cfg.g0_scale);
      IterativeLogResult res =
          iterative_log(reps[r], sig, g0, cfg.max_iter, cfg.eps,
                        cfg.anderson_depth);
      ++trials;
      if (!res.converged) {
        best_failed_residual = std::min(best_failed_residual, res.residual);
        continue;
      }
      ++converged;
      const double length = geodesic_length(res.h);
      if (length < best.distance) {
        best.h = std::move(res.h);
        best.g = std::move(res.g);
        best.distance = length;
        best.representative_index = static_cast<int>(r);
        best.residual = res.residual;
        best.converged = true;
      }
    }
  }
  if (converged == 0) {
    throw Error(ErrorKind::NoConvergedTrial,
                "flag_distance: none of " + std::to_string(trials) +
                    " trials converged (best residual " +
                    std::to_string(best_failed_residual) + ")");
  }
  best.trials = trials;
  best.converged_trials = converged;
  return best;
}

// ---------------------------------------------------------------------------
// 2k reduction

ReducedPair reduce_2k(const FlagPoint& p1, const FlagPoint& p2) {
  require_same_signature(p1.signature(), p2.signature(), "reduce_2k");
  const FlagSignature& sig = p1.signature();
  const int n = sig.n();
  const int k = sig.k();
  if (2 * k >= n) {
    throw Error(ErrorKind::NotApplicable,
                "reduce_2k: needs 2k < n, got k = " + std::to_string(k) +
                    ", n = " + std::to_string(n));
  }
  const Matrix q = p1.matrix().transpose() * p2.frame();
  const Matrix tail = q.bottomRows(n - k);
  const Vector sv = Eigen::JacobiSVD<Matrix>(tail).singularValues();
  const double smallest = sv(sv.size() - 1);
  if (!(smallest > kReduceRankTolerance)) {
    throw Error(ErrorKind::RankDeficient,
                "reduce_2k: frames intersect (smallest singular value " +
                    std::to_string(smallest) + ")");
  }

  Matrix stacked(n, 2 * k);
  stacked << Matrix::Identity(n, k), q;
  OrthonormalColumns basis = qr_thin(stacked).q;
  const Matrix& u = basis.matrix();

  std::vector<int> parts(sig.parts().begin(), sig.parts().end() - 1);
  parts.push_back(k);
  FlagSignature reduced(std::move(parts));

  const Matrix start = u.topRows(k).transpose();
  const Matrix end = u.transpose() * q;
  return {FlagPoint::from_frame(start, reduced),
          FlagPoint::from_frame(end, reduced), reduced, std::move(basis)};
}

GeodesicSolution flag_distance_auto(const FlagPoint& p1, const FlagPoint& p2,
                                    const SolverConfig& cfg) {
  require_same_signature(p1.signature(), p2.signature(), "flag_distance_auto");
  const FlagSignature& sig = p1.signature();
  if (2 * sig.k() < sig.n()) {
    try {
      const ReducedPair reduced = reduce_2k(p1, p2);
      return flag_distance(reduced.first, reduced.second, cfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient) throw;
    }
  }
  return flag_distance(p1, p2, cfg);
}

}  // namespace flaggeo
