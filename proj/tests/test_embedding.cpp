#include <cmath>
#include <numbers>

#include "doctest.h"
#include "flaggeo/embedding.hpp"
#include "helpers.hpp"

using namespace flaggeo;

namespace {

Matrix euclidean_distances(const Matrix& pts) {  // rows are points
  Matrix d(pts.rows(), pts.rows());
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = 0; j < pts.rows(); ++j) d(i, j) = (pts.row(i) - pts.row(j)).norm();
  return d;
}

std::vector<FlagPoint> random_points(const FlagSignature& sig, int p, std::mt19937_64& rng) {
  std::vector<FlagPoint> out;
  for (int i = 0; i < p; ++i) out.emplace_back(testutil::random_so(sig.n(), rng), sig);
  return out;
}

}  // namespace

TEST_CASE("pairwise_distances small cases") {
  const FlagSignature s11({1, 1});
  const FlagPoint id = FlagPoint::identity(s11);
  const DistanceMatrix zero = pairwise_distances({id, id}, Method::Flag);
  CHECK(zero.values.norm() == 0.0);

  const std::vector<double> theta{0.1, 0.5, 1.2};
  std::vector<FlagPoint> pts;
  for (double t : theta) pts.emplace_back(testutil::rotation2(t), s11);
  const DistanceMatrix d = pairwise_distances(pts, Method::Flag, {}, {"a", "b", "c"});
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double gap = std::abs(theta[i] - theta[j]);
      CHECK(std::abs(d.values(i, j) - std::min(gap, std::numbers::pi - gap)) < 1e-6);
    }
  }
  CHECK(d.labels[2] == "c");
  CHECK_NOTHROW(validate(d));
  CHECK_THROWS_AS(pairwise_distances({id}, Method::Flag), Error);
  CHECK_THROWS_AS(pairwise_distances({id, id}, Method::Flag, {}, {"only one"}), Error);
}

TEST_CASE("pairwise_distances invariants and determinism") {
  std::mt19937_64 rng(23);
  const FlagSignature sig({1, 1, 2});
  const auto pts = random_points(sig, 10, rng);
  PairwiseConfig one;
  one.threads = 1;
  one.solver.seed = 5;
  PairwiseConfig four = one;
  four.threads = 4;
  const DistanceMatrix a = pairwise_distances(pts, Method::Flag, one);
  const DistanceMatrix b = pairwise_distances(pts, Method::Flag, four);
  CHECK(a.values == b.values);
  CHECK(a.values == a.values.transpose());
  CHECK(a.values.diagonal().norm() == 0.0);
  CHECK(a.values.minCoeff() >= 0.0);
  CHECK_NOTHROW(validate(a));
}

TEST_CASE("flag and grassmann methods agree on (k, n-k)") {
  std::mt19937_64 rng(29);
  const FlagSignature sig({2, 4});
  const auto pts = random_points(sig, 6, rng);
  const DistanceMatrix f = pairwise_distances(pts, Method::Flag);
  const DistanceMatrix g = pairwise_distances(pts, Method::Grassmann);
  CHECK((f.values - g.values).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("pair failures carry indices") {
  std::mt19937_64 rng(37);
  const FlagSignature sig({1, 1, 2});
  const auto pts = random_points(sig, 3, rng);
  PairwiseConfig cfg;
  cfg.solver.max_iter = 1;
  cfg.solver.restarts = 1;
  try {
    pairwise_distances(pts, Method::Flag, cfg);
    FAIL("expected PairError");
  } catch (const PairError& e) {
    CHECK(e.first() == 0);
    CHECK(e.second() == 1);
    CHECK(e.kind() == ErrorKind::NoConvergedTrial);
  }
}

TEST_CASE("validate") {
  DistanceMatrix d;
  d.values = Matrix::Zero(2, 2);
  CHECK_NOTHROW(validate(d));
  d.values(0, 1) = 1.0;
  CHECK_THROWS_AS(validate(d), Error);
  d.values(1, 0) = 1.0;
  CHECK_NOTHROW(validate(d));
  d.values(0, 0) = 0.1;
  CHECK_THROWS_AS(validate(d), Error);
  d.values(0, 0) = 0.0;
  d.values(0, 1) = d.values(1, 0) = -1.0;
  CHECK_THROWS_AS(validate(d), Error);
  d.values(0, 1) = d.values(1, 0) = std::nan("");
  CHECK_THROWS_AS(validate(d), Error);
}

TEST_CASE("classical_mds examples") {
  const MdsResult zero = classical_mds(Matrix::Zero(3, 3), 2);
  CHECK(zero.coordinates.norm() == 0.0);

  Matrix eq = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  const MdsResult tri = classical_mds(eq, 2);
  CHECK((euclidean_distances(tri.coordinates) - eq).cwiseAbs().maxCoeff() < 1e-10);

  Matrix line(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) line(i, j) = std::abs(i - j);
  const MdsResult l = classical_mds(line, 1);
  CHECK(l.eigenvalues(0) > 1.0);
  CHECK(std::abs(l.eigenvalues(1)) < 1e-8);
  CHECK((euclidean_distances(l.coordinates) - line).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index i = 1; i < l.eigenvalues.size(); ++i) CHECK(l.eigenvalues(i - 1) >= l.eigenvalues(i));

  CHECK_THROWS_AS(classical_mds(eq, 3), Error);
  CHECK_THROWS_AS(classical_mds(eq, 0), Error);
}

TEST_CASE("classical_mds properties") {
  std::mt19937_64 rng(43);
  const Matrix pts = testutil::gaussian(8, 3, rng);
  const Matrix d = euclidean_distances(pts);
  const MdsResult r = classical_mds(d, 3);
  CHECK((euclidean_distances(r.coordinates) - d).cwiseAbs().maxCoeff() < 1e-8);

  const Eigen::Index p = d.rows();
  const Matrix j = Matrix::Identity(p, p) - Matrix::Constant(p, p, 1.0 / p);
  const Matrix b = -0.5 * j * d.cwiseProduct(d) * j;
  CHECK(std::abs(b.trace() - r.eigenvalues.sum()) < 1e-8);
  CHECK(std::abs(r.eigenvalues.head(3).sum() - b.trace()) < 1e-8);

  // Permuting the points permutes the recovered distances.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(p);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + p, rng);
  const Matrix dp = perm * d * perm.transpose();
  const MdsResult rp = classical_mds(dp, 3);
  CHECK((euclidean_distances(rp.coordinates) - perm * euclidean_distances(r.coordinates) * perm.transpose())
            .cwiseAbs()
            .maxCoeff() < 1e-8);

  // Non-Euclidean input: negative eigenvalues reported, coordinates finite.
  Matrix bad = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
  bad(0, 1) = bad(1, 0) = 3.0;
  const MdsResult nb = classical_mds(bad, 2);
  CHECK(nb.eigenvalues.minCoeff() < 0.0);
  CHECK(nb.coordinates.allFinite());
}

TEST_CASE("separation diagnostics") {
  Matrix pts(6, 2);
  pts << 0, 0, 0.1, 0, 0, 0.1, 5, 5, 5.1, 5, 5, 5.1;
  const std::vector<std::string> labels{"a", "a", "a", "b", "b", "b"};
  CHECK(silhouette(pts, labels) > 0.9);
  CHECK(centroid_gap(pts, labels) == doctest::Approx(std::sqrt(50.0)));
  CHECK(perceptron_separable(pts, labels).separable);
  const auto cd = class_distances(euclidean_distances(pts), labels);
  CHECK(cd.mean_inter > 10 * cd.mean_intra);

  Matrix xorpts(4, 2);
  xorpts << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<std::string> xl{"a", "a", "b", "b"};
  const auto res = perceptron_separable(xorpts, xl);
  CHECK_FALSE(res.separable);
  CHECK(res.updates == 10000);

  // Single point in a class contributes 0.
  Matrix three(3, 1);
  three << 0, 1, 10;
  CHECK(silhouette(three, {"a", "a", "b"}) == doctest::Approx((0.9 + 8.0 / 9.0) / 3.0));
  CHECK_THROWS_AS(silhouette(three, {"a", "a", "a"}), Error);
  CHECK_THROWS_AS(silhouette(three, {"a", "b"}), Error);
}

TEST_CASE("method names") {
  CHECK(parse_method("flag") == Method::Flag);
  CHECK(std::string(to_string(Method::Grassmann)) == "grassmann");
  CHECK_THROWS_AS(parse_method("euclid"), Error);
}
