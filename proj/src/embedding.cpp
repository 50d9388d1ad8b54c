#include "flaggeo/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace flaggeo {

const char* to_string(Method m) {
  return m == Method::Flag ? "flag" : "grassmann";
}

Method parse_method(const std::string& text) {
  if (text == "flag") return Method::Flag;
  if (text == "grassmann") return Method::Grassmann;
  throw Error(ErrorKind::InvalidInput,
              "unknown method '" + text + "' (expected flag or grassmann)");
}

void validate(const DistanceMatrix& d) {
  const Matrix& v = d.values;
  if (v.rows() != v.cols() || v.rows() == 0) {
    throw Error(ErrorKind::InvalidInput, "distance matrix must be square and nonempty");
  }
  if (!v.allFinite()) throw Error(ErrorKind::InvalidInput, "distance matrix has non-finite entries");
  if ((v.array() < 0.0).any()) throw Error(ErrorKind::InvalidInput, "distance matrix has negative entries");
  if (!v.diagonal().isZero(0.0)) throw Error(ErrorKind::InvalidInput, "distance matrix diagonal is not zero");
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-6) {
    throw Error(ErrorKind::InvalidInput, "distance matrix is not symmetric");
  }
  if (!d.labels.empty() && static_cast<Eigen::Index>(d.labels.size()) != v.rows()) {
    throw Error(ErrorKind::InvalidInput, "distance matrix label count does not match size");
  }
}

DistanceMatrix pairwise_distances(const std::vector<FlagPoint>& points,
                                  Method method, const PairwiseConfig& cfg,
                                  std::vector<std::string> labels) {
  const std::size_t p = points.size();
  if (p < 2) throw Error(ErrorKind::InvalidInput, "pairwise_distances: need at least two points");
  const FlagSignature& sig = points.front().signature();
  for (const auto& pt : points) {
    if (!(pt.signature() == sig)) {
      throw Error(ErrorKind::InvalidInput, "pairwise_distances: points have different signatures");
    }
  }
  if (!labels.empty() && labels.size() != p) {
    throw Error(ErrorKind::InvalidInput, "pairwise_distances: label count does not match points");
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) pairs.emplace_back(i, j);

  std::vector<GrassmannPoint> spans;
  if (method == Method::Grassmann) {
    spans.reserve(p);
    for (const auto& pt : points) spans.emplace_back(pt.frame());
  }

  std::vector<double> result(pairs.size(), 0.0);
  std::vector<std::exception_ptr> failures(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < pairs.size(); t = next++) {
      const auto [i, j] = pairs[t];
      try {
        if (method == Method::Grassmann) {
          result[t] = grassmann_distance(spans[i], spans[j]);
        } else {
          SolverConfig solver = cfg.solver;
          solver.seed = derive_seed(cfg.solver.seed, i, j);
          result[t] = cfg.reduce ? flag_distance_auto(points[i], points[j], solver).distance
                                 : flag_distance(points[i], points[j], solver).distance;
        }
      } catch (...) {
        failures[t] = std::current_exception();
      }
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, pairs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  for (std::size_t t = 0; t < pairs.size(); ++t) {
    if (!failures[t]) continue;
    try {
      std::rethrow_exception(failures[t]);
    } catch (const Error& e) {
      throw PairError(e, pairs[t].first, pairs[t].second);
    }
  }

  DistanceMatrix out;
  out.method = method;
  out.signature = sig;
  out.labels = std::move(labels);
  Matrix upper = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    upper(static_cast<Eigen::Index>(pairs[t].first),
          static_cast<Eigen::Index>(pairs[t].second)) = result[t];
  }
  // Lower triangle mirrors the upper one, so the result is exactly symmetric.
  out.values = upper + upper.transpose();
  out.values.diagonal().setZero();
  return out;
}

MdsResult classical_mds(const Matrix& d, int m) {
  const Eigen::Index p = d.rows();
  if (d.rows() != d.cols() || p < 2) {
    throw Error(ErrorKind::InvalidInput, "classical_mds: need a square matrix with p >= 2");
  }
  if (m < 1 || m >= p) {
    throw Error(ErrorKind::InvalidInput,
                "classical_mds: target dimension must satisfy 1 <= m < p = " + std::to_string(p));
  }
  const Matrix j = Matrix::Identity(p, p) - Matrix::Constant(p, p, 1.0 / static_cast<double>(p));
  Matrix b = -0.5 * j * d.cwiseProduct(d) * j;
  b = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(b);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidInput, "classical_mds: eigendecomposition failed");
  }
  // Eigen sorts ascending.
  const Vector values = eig.eigenvalues().reverse();
  Matrix vectors = eig.eigenvectors().rowwise().reverse();

  MdsResult out;
  out.eigenvalues = values;
  out.coordinates.resize(p, m);
  for (int c = 0; c < m; ++c) {
    Eigen::Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
    out.coordinates.col(c) = vectors.col(c) * std::sqrt(std::max(values(c), 0.0));
  }
  return out;
}

MdsResult classical_mds(const DistanceMatrix& d, int m) {
  validate(d);
  return classical_mds(d.values, m);
}

namespace {

// Class index per point, classes numbered by first appearance.
std::vector<int> class_ids(const std::vector<std::string>& labels, int& count) {
  std::vector<std::string> seen;
  std::vector<int> ids;
  ids.reserve(labels.size());
  for (const auto& l : labels) {
    auto it = std::find(seen.begin(), seen.end(), l);
    if (it == seen.end()) {
      seen.push_back(l);
      it = seen.end() - 1;
    }
    ids.push_back(static_cast<int>(it - seen.begin()));
  }
  count = static_cast<int>(seen.size());
  return ids;
}

void require_labels(Eigen::Index rows, const std::vector<std::string>& labels,
                    const char* what) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw Error(ErrorKind::InvalidInput, std::string(what) + ": one label per point required");
  }
}

}  // namespace

double silhouette(const Matrix& coords, const std::vector<std::string>& labels) {
  require_labels(coords.rows(), labels, "silhouette");
  int classes = 0;
  const std::vector<int> id = class_ids(labels, classes);
  if (classes < 2) throw Error(ErrorKind::InvalidInput, "silhouette: need at least two classes");
  const Eigen::Index p = coords.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    std::vector<double> sum(static_cast<std::size_t>(classes), 0.0);
    std::vector<int> cnt(static_cast<std::size_t>(classes), 0);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (i == j) continue;
      const auto c = static_cast<std::size_t>(id[static_cast<std::size_t>(j)]);
      sum[c] += (coords.row(i) - coords.row(j)).norm();
      ++cnt[c];
    }
    const auto own = static_cast<std::size_t>(id[static_cast<std::size_t>(i)]);
    if (cnt[own] == 0) continue;
    const double a = sum[own] / cnt[own];
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c)
      if (c != own && cnt[c] > 0) b = std::min(b, sum[c] / cnt[c]);
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(p);
}

double centroid_gap(const Matrix& coords, const std::vector<std::string>& labels) {
  require_labels(coords.rows(), labels, "centroid_gap");
  int classes = 0;
  const std::vector<int> id = class_ids(labels, classes);
  if (classes < 2) throw Error(ErrorKind::InvalidInput, "centroid_gap: need at least two classes");
  Matrix centroid = Matrix::Zero(2, coords.cols());
  Vector count = Vector::Zero(2);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const int c = id[static_cast<std::size_t>(i)];
    if (c > 1) continue;
    centroid.row(c) += coords.row(i);
    count(c) += 1.0;
  }
  return (centroid.row(0) / count(0) - centroid.row(1) / count(1)).norm();
}

PerceptronResult perceptron_separable(const Matrix& coords,
                                      const std::vector<std::string>& labels,
                                      int max_updates) {
  require_labels(coords.rows(), labels, "perceptron_separable");
  int classes = 0;
  const std::vector<int> id = class_ids(labels, classes);
  if (classes != 2) throw Error(ErrorKind::InvalidInput, "perceptron_separable: need exactly two classes");
  const Eigen::Index p = coords.rows();
  const Eigen::Index dim = coords.cols() + 1;
  // Scale to unit spread so the bias term is comparable to the coordinates.
  const double spread = std::max(coords.cwiseAbs().maxCoeff(), 1e-300);
  Vector w = Vector::Zero(dim);
  Vector x(dim);
  PerceptronResult out;
  while (out.updates < max_updates) {
    bool clean = true;
    for (Eigen::Index i = 0; i < p; ++i) {
      x.head(dim - 1) = coords.row(i).transpose() / spread;
      x(dim - 1) = 1.0;
      const double y = id[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
      if (y * w.dot(x) <= 0.0) {
        w += y * x;
        clean = false;
        if (++out.updates >= max_updates) break;
      }
    }
    if (clean) {
      out.separable = true;
      break;
    }
  }
  return out;
}

ClassDistances class_distances(const Matrix& d, const std::vector<std::string>& labels) {
  require_labels(d.rows(), labels, "class_distances");
  int classes = 0;
  const std::vector<int> id = class_ids(labels, classes);
  double intra = 0.0;
  double inter = 0.0;
  long n_intra = 0;
  long n_inter = 0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
      if (id[static_cast<std::size_t>(i)] == id[static_cast<std::size_t>(j)]) {
        intra += d(i, j);
        ++n_intra;
      } else {
        inter += d(i, j);
        ++n_inter;
      }
    }
  }
  return {n_intra ? intra / static_cast<double>(n_intra) : 0.0,
          n_inter ? inter / static_cast<double>(n_inter) : 0.0};
}

}  // namespace flaggeo
