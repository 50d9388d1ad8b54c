#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "flaggeo/flag.hpp"
#include "flaggeo/grassmann.hpp"
#include "helpers.hpp"

using namespace flaggeo;

namespace {

Matrix block_mask(const FlagSignature& sig, bool diagonal) {
  Matrix m = Matrix::Constant(sig.n(), sig.n(), diagonal ? 0.0 : 1.0);
  for (int b = 0; b < sig.d(); ++b) {
    m.block(sig.block_start(b), sig.block_start(b), sig.block_size(b), sig.block_size(b))
        .setConstant(diagonal ? 1.0 : 0.0);
  }
  return m;
}

FlagPoint random_point(const FlagSignature& sig, std::mt19937_64& rng) {
  return FlagPoint(testutil::random_so(sig.n(), rng), sig);
}

}  // namespace

TEST_CASE("FlagSignature") {
  const FlagSignature sig({2, 3, 5});
  CHECK(sig.n() == 10);
  CHECK(sig.d() == 3);
  CHECK(sig.k() == 5);
  CHECK(sig.block_start(0) == 0);
  CHECK(sig.block_start(1) == 2);
  CHECK(sig.block_start(2) == 5);
  CHECK(sig.to_string() == "2,3,5");
  CHECK(FlagSignature::parse("2, 3,5") == sig);
  CHECK(FlagSignature::complete({2, 3}, 10) == sig);
  CHECK(FlagSignature::complete({2, 3, 5}, 10) == sig);
  CHECK_THROWS_AS(FlagSignature({4}), Error);
  CHECK_THROWS_AS(FlagSignature({2, 0, 1}), Error);
  CHECK_THROWS_AS(FlagSignature::parse("1,x"), Error);
  CHECK_THROWS_AS(FlagSignature::complete({6, 5}, 10), Error);
}

TEST_CASE("FlagPoint canonicalization and completion") {
  const FlagSignature sig({1, 1, 2});
  Matrix reflect = Matrix::Identity(4, 4);
  reflect(0, 0) = -1;
  const FlagPoint p(reflect, sig);
  CHECK(p.matrix().determinant() == doctest::Approx(1.0));
  CHECK(p.matrix()(2, 2) == -1.0);  // first column of the last block flipped
  CHECK(p.matrix()(0, 0) == -1.0);

  Matrix skewed = Matrix::Identity(4, 4);
  skewed(0, 1) = 0.1;
  try {
    FlagPoint bad(skewed, sig);
    FAIL("non-orthogonal accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("orthonormality violated") != std::string::npos);
  }

  std::mt19937_64 rng(2);
  const Matrix frame = testutil::random_frame(6, 3, rng);
  const FlagPoint q = FlagPoint::from_frame(frame, FlagSignature({1, 2, 3}));
  CHECK(q.frame() == frame);
  CHECK(orthonormality_error(q.matrix()) < 1e-10);
  CHECK(q.matrix().determinant() == doctest::Approx(1.0));
  CHECK_THROWS_AS(FlagPoint::from_frame(frame, FlagSignature({1, 1, 4})), Error);
  CHECK_THROWS_AS(FlagPoint(Matrix::Identity(5, 5), sig), Error);
}

TEST_CASE("tangent projections") {
  std::mt19937_64 rng(8);
  const FlagSignature s111({1, 1, 1});
  Matrix vert = Matrix::Zero(3, 3);
  CHECK(project_horizontal(SkewMatrix(vert), s111).matrix().norm() == 0.0);

  const FlagSignature s22({2, 2});
  Matrix a = testutil::random_skew(4, rng);
  const auto h = project_horizontal(SkewMatrix(a), s22);
  const auto g = project_vertical(SkewMatrix(a), s22);
  CHECK(h.matrix() == a.cwiseProduct(block_mask(s22, false)));
  CHECK(g.matrix() == a.cwiseProduct(block_mask(s22, true)));
  CHECK(h.matrix() + g.matrix() == a);
  CHECK((h.matrix().transpose() * g.matrix()).trace() == doctest::Approx(0.0));
  CHECK(project_horizontal(SkewMatrix(h.matrix()), s22).matrix() == h.matrix());

  const FlagSignature s23({2, 3});
  const Matrix b = testutil::random_skew(5, rng);
  CHECK(project_vertical(SkewMatrix(b), s23).matrix() == b.cwiseProduct(block_mask(s23, true)));
  CHECK(project_vertical(SkewMatrix::zero(5), s23).matrix().norm() == 0.0);
  CHECK_THROWS_AS(project_vertical(SkewMatrix::zero(4), s23), Error);

  CHECK_THROWS_AS(HorizontalTangent(SkewMatrix(a), s22), Error);
  CHECK_THROWS_AS(VerticalTangent(SkewMatrix(a), s22), Error);

  SUBCASE("completeness and orthogonality over random signatures") {
    for (const auto& parts : std::vector<std::vector<int>>{{1, 1, 1}, {1, 2, 1}, {3, 1, 2}, {2, 2, 2, 1}}) {
      const FlagSignature sig(parts);
      for (int t = 0; t < 5; ++t) {
        const Matrix m = testutil::random_skew(sig.n(), rng);
        const Matrix hh = project_horizontal(SkewMatrix(m), sig).matrix();
        const Matrix gg = project_vertical(SkewMatrix(m), sig).matrix();
        CHECK(hh + gg == m);
        CHECK(std::abs(0.5 * (hh.transpose() * gg).trace()) < 1e-14);
      }
    }
  }
}

TEST_CASE("geodesic_length") {
  const FlagSignature s11({1, 1});
  CHECK(geodesic_length(HorizontalTangent(SkewMatrix::zero(2), s11)) == 0.0);
  Matrix h(2, 2);
  h << 0, -0.7, 0.7, 0;
  CHECK(geodesic_length(HorizontalTangent(SkewMatrix(h), s11)) == doctest::Approx(0.7).epsilon(1e-14));

  std::mt19937_64 rng(1);
  const FlagSignature sig({1, 1, 2});
  for (int t = 0; t < 10; ++t) {
    const Matrix m = project_horizontal(SkewMatrix(testutil::random_skew(4, rng)), sig).matrix();
    // Eigenvalues of a skew matrix are +-i*lambda; lambda^2 are eigenvalues of -H^2.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(-m * m);
    const double oracle = std::sqrt(0.5 * eig.eigenvalues().cwiseMax(0.0).sum());
    CHECK(std::abs(geodesic_length(HorizontalTangent(SkewMatrix(m), sig)) - oracle) < 1e-10);
  }
}

TEST_CASE("flag_exp") {
  const FlagSignature s11({1, 1});
  const FlagPoint id = FlagPoint::identity(s11);
  const double theta = std::numbers::pi / 4;
  Matrix h(2, 2);
  h << 0, -theta, theta, 0;
  const HorizontalTangent ht(SkewMatrix(h), s11);
  CHECK(flag_exp(id, ht, 0.0).matrix() == id.matrix());
  CHECK((flag_exp(id, ht, 1.0).matrix() - testutil::rotation2(theta)).norm() < 1e-14);

  std::mt19937_64 rng(6);
  const FlagSignature sig({2, 1, 3});
  const FlagPoint p = random_point(sig, rng);
  const HorizontalTangent rnd(SkewMatrix(testutil::random_horizontal(sig, 1.3, rng)), sig);
  for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const Matrix q = flag_exp(p, rnd, t).matrix();
    CHECK(orthonormality_error(q) < 1e-10);
    CHECK(std::abs(q.determinant() - 1.0) < 1e-10);
  }
  CHECK_THROWS_AS(flag_exp(p, ht, 1.0), Error);
}

TEST_CASE("enumerate_representatives") {
  std::mt19937_64 rng(12);
  for (const auto& parts : std::vector<std::vector<int>>{{2, 3}, {1, 1, 1}, {1, 2, 1}, {1, 1, 1, 2}}) {
    const FlagSignature sig(parts);
    const FlagPoint p = random_point(sig, rng);
    const auto reps = enumerate_representatives(p.matrix(), sig);
    CHECK(reps.size() == (std::size_t{1} << (sig.d() - 1)));
    for (std::size_t i = 0; i < reps.size(); ++i) {
      CHECK(orthonormality_error(reps[i]) < 1e-10);
      CHECK(std::abs(reps[i].determinant() - 1.0) < 1e-10);
      // Same flag: each column differs from p's by a sign only.
      CHECK((reps[i].cwiseAbs() - p.matrix().cwiseAbs()).norm() == 0.0);
      for (std::size_t j = 0; j < i; ++j) CHECK((reps[i] - reps[j]).norm() > 1.0);
    }
  }
  const FlagSignature s23({2, 3});
  const auto two = enumerate_representatives(Matrix::Identity(5, 5), s23);
  REQUIRE(two.size() == 2);
  CHECK(two[0] == Matrix::Identity(5, 5));
  Matrix flipped = Matrix::Identity(5, 5);
  flipped(0, 0) = -1;
  flipped(2, 2) = -1;
  CHECK(two[1] == flipped);

  SUBCASE("representatives are the same flag") {
    const FlagSignature sig({1, 1, 1});
    const FlagPoint p = random_point(sig, rng);
    for (const auto& rep : enumerate_representatives(p)) {
      CHECK(flag_distance(p, rep).distance < 1e-6);
    }
  }
}

TEST_CASE("iterative_log") {
  const FlagSignature sig({1, 2, 2});
  const auto trivial = iterative_log(Matrix::Identity(5, 5), sig, VerticalTangent::zero(sig), 100, 1e-10);
  CHECK(trivial.converged);
  CHECK(trivial.iterations == 1);
  CHECK(trivial.residual == 0.0);
  CHECK(trivial.h.matrix().norm() == 0.0);

  std::mt19937_64 rng(21);
  for (int anderson : {0, 5}) {
    for (int t = 0; t < 5; ++t) {
      const Matrix h0 = testutil::random_horizontal(sig, 0.3, rng);
      const auto res = iterative_log(expm_skew(SkewMatrix(h0)), sig, VerticalTangent::zero(sig),
                                     100, 1e-10, anderson);
      CHECK(res.converged);
      CHECK(res.residual < 1e-10);
      CHECK((res.h.matrix() - h0).norm() < 1e-6);
    }
    for (int t = 0; t < 5; ++t) {
      const Matrix h0 = testutil::random_horizontal(sig, 0.3, rng);
      Matrix g0 = project_vertical(SkewMatrix(testutil::random_skew(5, rng)), sig).matrix();
      g0 *= 0.3 / g0.norm();
      const Matrix q = expm_skew(SkewMatrix(h0)) * expm_skew(SkewMatrix(g0));
      const auto res = iterative_log(q, sig, VerticalTangent::zero(sig), 100, 1e-10, anderson);
      CHECK(res.converged);
      CHECK(res.residual < 1e-10);
      CHECK(res.iterations <= 100);
      const Matrix rebuilt = expm_skew(res.h.skew()) * expm_skew(res.g.skew());
      CHECK((rebuilt - q).norm() < 1e-9);
    }
  }

  SUBCASE("cut locus yields a failed trial") {
    const FlagSignature s11({1, 1});
    const auto res = iterative_log(testutil::rotation2(std::numbers::pi), s11,
                                   VerticalTangent::zero(s11), 100, 1e-10);
    CHECK_FALSE(res.converged);
    CHECK(std::isinf(res.residual));
  }
  CHECK_THROWS_AS(iterative_log(Matrix::Identity(4, 4), sig, VerticalTangent::zero(sig), 10, 1e-10), Error);
}

TEST_CASE("flag_distance closed forms") {
  const FlagSignature s11({1, 1});
  const FlagPoint id = FlagPoint::identity(s11);
  CHECK(flag_distance(id, id).distance < 1e-8);

  const FlagPoint a(testutil::rotation2(2 * std::numbers::pi / 5), s11);
  const auto sa = flag_distance(id, a);
  CHECK(sa.distance == doctest::Approx(2 * std::numbers::pi / 5).epsilon(1e-12));
  CHECK(sa.converged);
  CHECK(sa.representative_index == 0);

  const FlagPoint b(testutil::rotation2(3 * std::numbers::pi / 5), s11);
  const auto sb = flag_distance(id, b);
  CHECK(sb.distance == doctest::Approx(2 * std::numbers::pi / 5).epsilon(1e-12));
  CHECK(std::abs(geodesic_length(sb.h) - sb.distance) < 1e-12);
  CHECK(sb.residual < 1e-10);

  const FlagPoint c(testutil::rotation2(0.4), s11);
  CHECK(flag_distance(id, c).distance == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("flag_distance properties") {
  std::mt19937_64 rng(31);
  SUBCASE("Grassmann consistency") {
    for (int t = 0; t < 15; ++t) {
      const int n = std::uniform_int_distribution<int>(3, 8)(rng);
      const int k = std::uniform_int_distribution<int>(1, std::min(3, n - 1))(rng);
      const FlagSignature sig({k, n - k});
      const FlagPoint p = random_point(sig, rng);
      const FlagPoint q = random_point(sig, rng);
      const double gr = grassmann_distance(GrassmannPoint(p.frame()), GrassmannPoint(q.frame()));
      CHECK(std::abs(flag_distance(p, q).distance - gr) < 1e-6);
    }
  }
  SUBCASE("symmetry, identity and triangle inequality") {
    for (int n : {4, 5, 6}) {
      const FlagSignature sig({1, 1, n - 2});
      for (int t = 0; t < 4; ++t) {
        const FlagPoint p = random_point(sig, rng);
        const FlagPoint q = random_point(sig, rng);
        const FlagPoint r = random_point(sig, rng);
        const double pq = flag_distance(p, q).distance;
        const double qp = flag_distance(q, p).distance;
        const double qr = flag_distance(q, r).distance;
        const double pr = flag_distance(p, r).distance;
        CHECK(std::abs(pq - qp) < 1e-6);
        CHECK(flag_distance(p, p).distance < 1e-8);
        CHECK(pr <= pq + qr + 1e-6);
      }
    }
  }
  SUBCASE("class and left invariance") {
    for (int t = 0; t < 8; ++t) {
      const int n = std::uniform_int_distribution<int>(3, 6)(rng);
      const FlagSignature sig = FlagSignature::complete({1, 1}, n);
      const FlagPoint p = random_point(sig, rng);
      const FlagPoint q = random_point(sig, rng);
      const double base = flag_distance(p, q).distance;
      const Matrix m = testutil::random_block_diagonal(sig, rng);
      CHECK(std::abs(flag_distance(p, FlagPoint(q.matrix() * m, sig)).distance - base) < 1e-6);
      const Matrix r = testutil::random_so(n, rng);
      CHECK(std::abs(flag_distance(FlagPoint(r * p.matrix(), sig), FlagPoint(r * q.matrix(), sig)).distance -
                     base) < 1e-6);
    }
  }
  SUBCASE("exp/log consistency") {
    for (const auto& parts : std::vector<std::vector<int>>{{1, 1, 2}, {2, 2}, {1, 2, 1}, {2, 3}}) {
      const FlagSignature sig(parts);
      for (int t = 0; t < 3; ++t) {
        const FlagPoint p = random_point(sig, rng);
        const double len = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
        const HorizontalTangent h(SkewMatrix(testutil::random_horizontal(sig, len, rng)), sig);
        const auto sol = flag_distance(p, flag_exp(p, h, 1.0));
        CHECK(sol.distance <= geodesic_length(h) + 1e-6);
        CHECK(sol.residual < 1e-10);
      }
    }
  }
  SUBCASE("the solution reconstructs the representative") {
    const FlagSignature sig({1, 2, 3});
    const FlagPoint p = random_point(sig, rng);
    const FlagPoint q = random_point(sig, rng);
    const auto sol = flag_distance(p, q);
    REQUIRE(sol.converged);
    CHECK(std::abs(sol.distance - geodesic_length(sol.h)) < 1e-12);
    // The endpoint of the geodesic is the target flag.
    CHECK(flag_distance(flag_exp(p, sol.h, 1.0), q).distance < 1e-6);
  }
}

TEST_CASE("flag_distance determinism and config") {
  std::mt19937_64 rng(41);
  const FlagSignature sig({1, 1, 3});
  const FlagPoint p = random_point(sig, rng);
  const FlagPoint q = random_point(sig, rng);
  SolverConfig cfg;
  cfg.seed = 77;
  const auto a = flag_distance(p, q, cfg);
  const auto b = flag_distance(p, q, cfg);
  CHECK(a.distance == b.distance);
  CHECK(a.h.matrix() == b.h.matrix());
  CHECK(a.trials == 4 * cfg.restarts);
  CHECK(a.converged_trials >= 1);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));

  SolverConfig starved;
  starved.max_iter = 1;
  starved.restarts = 1;
  try {
    flag_distance(p, q, starved);
    FAIL("expected NoConvergedTrial");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoConvergedTrial);
    CHECK(e.numerical());
  }
  CHECK_THROWS_AS(flag_distance(p, FlagPoint::identity(FlagSignature({2, 3}))), Error);
}

TEST_CASE("random_vertical") {
  const FlagSignature sig({2, 3, 1});
  const auto g = random_vertical(sig, 5, 0.5);
  CHECK(g.matrix().cwiseAbs().maxCoeff() <= 0.5);
  CHECK(g.matrix() == random_vertical(sig, 5, 0.5).matrix());
  CHECK(g.matrix() != random_vertical(sig, 6, 0.5).matrix());
}

TEST_CASE("reduce_2k") {
  std::mt19937_64 rng(51);
  const FlagSignature sig({1, 1, 8});
  for (int t = 0; t < 4; ++t) {
    const FlagPoint p = random_point(sig, rng);
    const FlagPoint q = random_point(sig, rng);
    const ReducedPair red = reduce_2k(p, q);
    CHECK(red.signature == FlagSignature({1, 1, 2}));
    CHECK(red.first.matrix().rows() == 4);
    CHECK(red.basis.rows() == 10);
    CHECK(red.basis.cols() == 4);
    const double reduced = flag_distance(red.first, red.second).distance;
    const double full = flag_distance(p, q).distance;
    CHECK(std::abs(reduced - full) < 1e-6);
    CHECK(std::abs(flag_distance_auto(p, q).distance - full) < 1e-6);
  }
  const FlagPoint p = random_point(sig, rng);
  try {
    reduce_2k(p, p);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
  CHECK(flag_distance_auto(p, p).distance < 1e-8);
  const FlagSignature wide({2, 3, 5});
  try {
    reduce_2k(random_point(wide, rng), random_point(wide, rng));
    FAIL("expected NotApplicable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotApplicable);
  }
}
