#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flaggeo/dataio.hpp"
#include "flaggeo/embedding.hpp"

namespace flaggeo {

// Raised for malformed experiment specs; path() is a JSON path such as
// "$.classes[1].params.stddev".
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& what)
      : Error(ErrorKind::InvalidInput, path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ClassSource {
  std::string name;
  // Exactly one of path / generator is set.
  std::optional<std::filesystem::path> path;
  std::string generator;  // "gaussian" or "ellipsoid"
  std::vector<double> stddev;  // gaussian: per frame column; ellipsoid: axes
  std::vector<double> mean;    // gaussian only, per frame column (optional)
  int dim = 0;                 // gaussian ambient dimension
  int samples = 0;
  double noise = 0.0;
  std::uint64_t frame_seed = 0;
};

/// Two-class mixture experiment: sets of m majors + q minors are drawn for
/// both mixture types, reduced to SVD flags and compared by flag and/or
/// Grassmann distance.
///
/// JSON form:
///   {"signature": [2,3], "k": 5,
///    "classes": [{"name": "A", "path": "a.csv"},
///                {"name": "B", "generator": "gaussian",
///                 "params": {"dim": 50, "stddev": [...], "mean": [...], "noise": 0.1,
///                            "samples": 400, "frame_seed": 7}}],
///    "m": 16, "q": 9, "sets": 15, "seed": 1,
///    "bands": [...], "center": true, "method": "both", "mds_dim": 2,
///    "solver": {"restarts": 5, "max_iter": 100, "eps": 1e-10}}
/// signature may list only the leading parts (summing to k) or the full type.
struct ExperimentSpec {
  std::vector<int> signature;
  int k = 0;
  std::vector<ClassSource> classes;
  int m = 0;
  int q = 0;
  int sets = 0;
  std::uint64_t seed = 0;
  std::vector<int> bands;
  bool center = true;
  std::vector<Method> methods{Method::Flag, Method::Grassmann};
  int mds_dim = 2;
  SolverConfig solver;
};

// Relative class paths resolve against base_dir.
ExperimentSpec parse_experiment_spec(const std::string& json_text,
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& file);

struct SeparationReport {
  double silhouette = 0.0;
  double centroid_gap = 0.0;
  bool linearly_separable = false;
  int perceptron_updates = 0;
  double mean_intra = 0.0;
  double mean_inter = 0.0;
};

struct MethodResult {
  Method method = Method::Flag;
  DistanceMatrix distances;
  MdsResult mds;
  SeparationReport report;
};

struct PipelineResult {
  FlagSignature signature;
  std::vector<std::string> set_labels;  // mixture type of every set
  std::vector<MethodResult> methods;
};

PipelineResult run_pipeline(const ExperimentSpec& spec, unsigned threads = 0);

// Writes <method>_distances.csv, <method>_mds.csv, <method>_eigenvalues.csv
// per method plus report.json into dir. Returns the report JSON text.
std::string write_pipeline_outputs(const PipelineResult& result,
                                   const std::filesystem::path& dir);

std::string report_json(const PipelineResult& result);

}  // namespace flaggeo
