#pragma once

#include <string>
#include <vector>

#include "flaggeo/flag.hpp"
#include "flaggeo/grassmann.hpp"

namespace flaggeo {

enum class Method { Flag, Grassmann };

const char* to_string(Method m);
Method parse_method(const std::string& text);

/// Symmetric, hollow, nonnegative matrix of pairwise geodesic distances.
struct DistanceMatrix {
  Matrix values;
  std::vector<std::string> labels;
  Method method = Method::Flag;
  // The flag signature for Method::Flag; for Method::Grassmann only k() is
  // meaningful (spans of the first k columns).
  FlagSignature signature;

  Eigen::Index size() const { return values.rows(); }
};

// Throws InvalidInput unless values is square, finite, nonnegative, has a
// zero diagonal and is symmetric within 1e-6.
void validate(const DistanceMatrix& d);

struct PairwiseConfig {
  SolverConfig solver;
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Use the 2k reduction whenever it applies.
  bool reduce = true;
};

/// All pairwise distances between points sharing one signature.
///
/// Only the upper triangle is solved; the matrix is then symmetrized and its
/// diagonal set to zero. Pair (i, j) runs with solver seed
/// derive_seed(cfg.solver.seed, i, j), so results do not depend on the thread
/// count. A failing pair is rethrown as PairError carrying its indices (the
/// lowest failing pair when several fail).
DistanceMatrix pairwise_distances(const std::vector<FlagPoint>& points,
                                  Method method, const PairwiseConfig& cfg = {},
                                  std::vector<std::string> labels = {});

struct MdsResult {
  Matrix coordinates;  // p x m
  Vector eigenvalues;  // all p eigenvalues of the centered Gram matrix, descending
};

/// Classical (Torgerson) MDS. B = -1/2 J (D∘D) J is eigendecomposed; the
/// coordinates are the top-m eigenvectors scaled by sqrt(max(lambda, 0)).
/// Negative eigenvalues are reported but never contribute coordinates.
MdsResult classical_mds(const DistanceMatrix& d, int m);
MdsResult classical_mds(const Matrix& d, int m);

// --- separation diagnostics for labelled configurations -------------------

// Mean silhouette width over all points with Euclidean distance between rows
// of coords. Points alone in their class score 0.
double silhouette(const Matrix& coords, const std::vector<std::string>& labels);

// Euclidean distance between the centroids of the first two classes (in order
// of first appearance).
double centroid_gap(const Matrix& coords, const std::vector<std::string>& labels);

struct PerceptronResult {
  bool separable = false;
  int updates = 0;
};

// Affine perceptron on two classes; separable when an epoch finishes with no
// mistakes before max_updates corrections.
PerceptronResult perceptron_separable(const Matrix& coords,
                                      const std::vector<std::string>& labels,
                                      int max_updates = 10000);

struct ClassDistances {
  double mean_intra = 0.0;
  double mean_inter = 0.0;
};

// Mean of off-diagonal D entries within classes and across classes.
ClassDistances class_distances(const Matrix& d,
                               const std::vector<std::string>& labels);

}  // namespace flaggeo
