#include "flaggeo/pipeline.hpp"

#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace flaggeo {

namespace {

using nlohmann::json;

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw SpecError(path + "." + key, "missing required field");
  return obj.at(key);
}

int as_int(const json& v, const std::string& path, int min_value) {
  if (!v.is_number_integer()) throw SpecError(path, "expected an integer");
  const auto value = v.get<long long>();
  if (value < min_value) {
    throw SpecError(path, "must be >= " + std::to_string(min_value));
  }
  if (value > std::numeric_limits<int>::max()) throw SpecError(path, "value too large");
  return static_cast<int>(value);
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw SpecError(path, "expected a number");
  return v.get<double>();
}

std::vector<int> as_int_list(const json& v, const std::string& path, int min_value) {
  if (!v.is_array() || v.empty()) throw SpecError(path, "expected a nonempty array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(as_int(v[i], path + "[" + std::to_string(i) + "]", min_value));
  }
  return out;
}

std::vector<double> as_double_list(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw SpecError(path, "expected a nonempty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string at = path + "[" + std::to_string(i) + "]";
    const double x = as_double(v[i], at);
    if (x < 0.0) throw SpecError(at, "must be >= 0");
    out.push_back(x);
  }
  return out;
}

ClassSource parse_class(const json& c, const std::string& path,
                        const std::filesystem::path& base_dir) {
  if (!c.is_object()) throw SpecError(path, "expected an object");
  ClassSource out;
  const json& name = member(c, "name", path);
  if (!name.is_string() || name.get<std::string>().empty()) {
    throw SpecError(path + ".name", "expected a nonempty string");
  }
  out.name = name.get<std::string>();
  if (out.name.find_first_of(",\n") != std::string::npos) {
    throw SpecError(path + ".name", "must not contain commas or newlines");
  }
  const bool has_path = c.contains("path");
  const bool has_gen = c.contains("generator");
  if (has_path == has_gen) {
    throw SpecError(path, "exactly one of 'path' or 'generator' is required");
  }
  if (has_path) {
    if (!c["path"].is_string()) throw SpecError(path + ".path", "expected a string");
    std::filesystem::path file = c["path"].get<std::string>();
    out.path = file.is_absolute() ? file : base_dir / file;
    return out;
  }
  if (!c["generator"].is_string()) throw SpecError(path + ".generator", "expected a string");
  out.generator = c["generator"].get<std::string>();
  if (out.generator != "gaussian" && out.generator != "ellipsoid") {
    throw SpecError(path + ".generator",
                    "unknown generator '" + out.generator + "' (expected gaussian or ellipsoid)");
  }
  const std::string ppath = path + ".params";
  const json& params = member(c, "params", path);
  if (!params.is_object()) throw SpecError(ppath, "expected an object");
  out.samples = as_int(member(params, "samples", ppath), ppath + ".samples", 1);
  if (params.contains("noise")) {
    out.noise = as_double(params["noise"], ppath + ".noise");
    if (out.noise < 0.0) throw SpecError(ppath + ".noise", "must be >= 0");
  }
  if (params.contains("frame_seed")) {
    out.frame_seed = static_cast<std::uint64_t>(
        as_int(params["frame_seed"], ppath + ".frame_seed", 0));
  }
  if (out.generator == "gaussian") {
    out.dim = as_int(member(params, "dim", ppath), ppath + ".dim", 1);
    out.stddev = as_double_list(member(params, "stddev", ppath), ppath + ".stddev");
    if (static_cast<int>(out.stddev.size()) > out.dim) {
      throw SpecError(ppath + ".stddev", "has more entries than dim");
    }
    if (params.contains("mean")) {
      const json& mean = params["mean"];
      if (!mean.is_array() || mean.size() != out.stddev.size()) {
        throw SpecError(ppath + ".mean", "expected an array as long as stddev");
      }
      for (std::size_t i = 0; i < mean.size(); ++i) {
        out.mean.push_back(as_double(mean[i], ppath + ".mean[" + std::to_string(i) + "]"));
      }
    }
  } else {
    out.stddev = as_double_list(member(params, "axes", ppath), ppath + ".axes");
    out.dim = static_cast<int>(out.stddev.size());
    for (std::size_t i = 0; i < out.stddev.size(); ++i) {
      if (!(out.stddev[i] > 0.0) || (i && out.stddev[i] > out.stddev[i - 1])) {
        throw SpecError(ppath + ".axes", "must be positive and descending");
      }
    }
  }
  return out;
}

DataMatrix build_pool(const ClassSource& src, std::uint64_t seed) {
  if (src.path) return load_csv(src.path->string());
  const Matrix rotation = random_rotation(src.dim, src.frame_seed);
  if (src.generator == "gaussian") {
    const auto r = static_cast<Eigen::Index>(src.stddev.size());
    return gen_gaussian_pool(src.stddev, rotation.leftCols(r), src.samples, src.noise, seed,
                             src.mean);
  }
  return gen_ellipsoid(src.stddev, rotation, src.samples, src.noise, seed);
}

}  // namespace

ExperimentSpec parse_experiment_spec(const std::string& json_text,
                                     const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SpecError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("$", "expected an object");

  ExperimentSpec spec;
  spec.signature = as_int_list(member(doc, "signature", "$"), "$.signature", 1);
  spec.k = as_int(member(doc, "k", "$"), "$.k", 1);
  const json& classes = member(doc, "classes", "$");
  if (!classes.is_array() || classes.size() != 2) {
    throw SpecError("$.classes", "expected exactly two class sources");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    spec.classes.push_back(
        parse_class(classes[i], "$.classes[" + std::to_string(i) + "]", base_dir));
  }
  spec.m = as_int(member(doc, "m", "$"), "$.m", 0);
  spec.q = as_int(member(doc, "q", "$"), "$.q", 0);
  if (spec.m + spec.q == 0) throw SpecError("$.m", "m + q must be positive");
  spec.sets = as_int(member(doc, "sets", "$"), "$.sets", 1);
  spec.seed = static_cast<std::uint64_t>(as_int(member(doc, "seed", "$"), "$.seed", 0));
  if (doc.contains("bands")) spec.bands = as_int_list(doc["bands"], "$.bands", 0);
  if (doc.contains("center")) {
    if (!doc["center"].is_boolean()) throw SpecError("$.center", "expected a boolean");
    spec.center = doc["center"].get<bool>();
  }
  if (doc.contains("method")) {
    const json& m = doc["method"];
    if (!m.is_string()) throw SpecError("$.method", "expected a string");
    const std::string text = m.get<std::string>();
    if (text == "both") {
      spec.methods = {Method::Flag, Method::Grassmann};
    } else if (text == "flag" || text == "grassmann") {
      spec.methods = {parse_method(text)};
    } else {
      throw SpecError("$.method", "expected flag, grassmann or both");
    }
  }
  if (doc.contains("mds_dim")) spec.mds_dim = as_int(doc["mds_dim"], "$.mds_dim", 1);
  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    if (!s.is_object()) throw SpecError("$.solver", "expected an object");
    if (s.contains("restarts")) spec.solver.restarts = as_int(s["restarts"], "$.solver.restarts", 1);
    if (s.contains("max_iter")) spec.solver.max_iter = as_int(s["max_iter"], "$.solver.max_iter", 1);
    if (s.contains("eps")) {
      spec.solver.eps = as_double(s["eps"], "$.solver.eps");
      if (!(spec.solver.eps > 0.0)) throw SpecError("$.solver.eps", "must be > 0");
    }
  }
  spec.solver.seed = spec.seed;

  const int leading = std::accumulate(spec.signature.begin(), spec.signature.end(), 0);
  const int sig_k = leading - (leading == spec.k ? 0 : spec.signature.back());
  if (sig_k != spec.k) {
    throw SpecError("$.k", "k = " + std::to_string(spec.k) +
                               " does not match the signature's leading parts");
  }
  if (spec.k > spec.m + spec.q) {
    throw SpecError("$.k", "k exceeds the number of samples per set (m + q)");
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str(), file.parent_path());
}

PipelineResult run_pipeline(const ExperimentSpec& spec, unsigned threads) {
  if (spec.classes.size() != 2) throw SpecError("$.classes", "expected exactly two class sources");
  const ClassSource& a_src = spec.classes[0];
  const ClassSource& b_src = spec.classes[1];
  DataMatrix a = build_pool(a_src, derive_seed(spec.seed, 0, 0));
  DataMatrix b = build_pool(b_src, derive_seed(spec.seed, 1, 0));
  if (a.n() != b.n()) {
    throw SpecError("$.classes", "class pools differ in dimension (" + std::to_string(a.n()) +
                                     " vs " + std::to_string(b.n()) + ")");
  }
  if (!spec.bands.empty()) {
    for (std::size_t i = 0; i < spec.bands.size(); ++i) {
      if (spec.bands[i] >= a.n()) {
        throw SpecError("$.bands[" + std::to_string(i) + "]", "index out of range");
      }
    }
    a = select_rows(a, spec.bands);
    b = select_rows(b, spec.bands);
  }
  if (spec.center) {
    // One mean over both pools, as if all samples came from one collection.
    const Vector mean = (a.values.rowwise().sum() + b.values.rowwise().sum()) /
                        static_cast<double>(a.p() + b.p());
    a.values.colwise() -= mean;
    b.values.colwise() -= mean;
  }

  const int n = static_cast<int>(a.n());
  std::vector<int> leading = spec.signature;
  const int sum = std::accumulate(leading.begin(), leading.end(), 0);
  if (sum != spec.k && sum != n) {
    throw SpecError("$.signature", "full signature must sum to the data dimension " +
                                       std::to_string(n));
  }
  if (spec.k > n) throw SpecError("$.k", "exceeds the data dimension");
  const FlagSignature sig = FlagSignature::complete(std::move(leading), n);

  const std::string type_ab = "major " + a_src.name + "/minor " + b_src.name;
  const std::string type_ba = "major " + b_src.name + "/minor " + a_src.name;
  std::vector<DataMatrix> sets =
      gen_mixture(a, b, spec.m, spec.q, spec.sets, derive_seed(spec.seed, 2, 0), type_ab,
                  a_src.name, b_src.name);
  std::vector<DataMatrix> more =
      gen_mixture(b, a, spec.m, spec.q, spec.sets, derive_seed(spec.seed, 3, 0), type_ba,
                  b_src.name, a_src.name);
  sets.insert(sets.end(), std::make_move_iterator(more.begin()),
              std::make_move_iterator(more.end()));

  PipelineResult result;
  result.signature = sig;
  std::vector<FlagPoint> points;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    points.push_back(svd_flag(sets[i], sig));
    result.set_labels.push_back(sets[i].class_label);
    const bool first_type = i < static_cast<std::size_t>(spec.sets);
    ids.push_back((first_type ? a_src.name + ">" + b_src.name : b_src.name + ">" + a_src.name) +
                  "#" + std::to_string(first_type ? i : i - spec.sets));
  }
  if (spec.mds_dim >= static_cast<int>(points.size())) {
    throw SpecError("$.mds_dim", "must be smaller than the number of sets");
  }

  PairwiseConfig cfg;
  cfg.solver = spec.solver;
  cfg.threads = threads;
  for (Method method : spec.methods) {
    MethodResult mr;
    mr.method = method;
    mr.distances = pairwise_distances(points, method, cfg, ids);
    mr.mds = classical_mds(mr.distances, spec.mds_dim);
    const Matrix plane = mr.mds.coordinates.leftCols(std::min(2, spec.mds_dim));
    mr.report.silhouette = silhouette(plane, result.set_labels);
    mr.report.centroid_gap = centroid_gap(plane, result.set_labels);
    const PerceptronResult perceptron = perceptron_separable(plane, result.set_labels);
    mr.report.linearly_separable = perceptron.separable;
    mr.report.perceptron_updates = perceptron.updates;
    const ClassDistances cd = class_distances(mr.distances.values, result.set_labels);
    mr.report.mean_intra = cd.mean_intra;
    mr.report.mean_inter = cd.mean_inter;
    result.methods.push_back(std::move(mr));
  }
  return result;
}

std::string report_json(const PipelineResult& result) {
  nlohmann::ordered_json doc;
  doc["signature"] = result.signature.parts();
  doc["sets"] = result.set_labels.size();
  for (const auto& mr : result.methods) {
    nlohmann::ordered_json r;
    r["silhouette"] = mr.report.silhouette;
    r["centroid_gap"] = mr.report.centroid_gap;
    r["linearly_separable"] = mr.report.linearly_separable;
    r["perceptron_updates"] = mr.report.perceptron_updates;
    r["mean_intra_distance"] = mr.report.mean_intra;
    r["mean_inter_distance"] = mr.report.mean_inter;
    doc[to_string(mr.method)] = r;
  }
  return doc.dump(2) + "\n";
}

std::string write_pipeline_outputs(const PipelineResult& result,
                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& mr : result.methods) {
    const std::string stem = to_string(mr.method);
    DataMatrix d;
    d.values = mr.distances.values;
    d.labels = mr.distances.labels;
    save_csv((dir / (stem + "_distances.csv")).string(), d);

    DataMatrix coords;
    coords.values = mr.mds.coordinates.transpose();
    coords.labels = mr.distances.labels;
    save_csv((dir / (stem + "_mds.csv")).string(), coords);

    DataMatrix eig;
    eig.values = mr.mds.eigenvalues;
    eig.labels = {"eigenvalue"};
    save_csv((dir / (stem + "_eigenvalues.csv")).string(), eig);
  }
  const std::string report = report_json(result);
  std::ofstream out(dir / "report.json");
  out << report;
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + (dir / "report.json").string());
  return report;
}

}  // namespace flaggeo
