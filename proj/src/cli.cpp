#include "flaggeo/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "flaggeo/dataio.hpp"
#include "flaggeo/embedding.hpp"
#include "flaggeo/pipeline.hpp"

namespace flaggeo {

namespace {

namespace fs = std::filesystem;

std::vector<int> parse_int_list(const std::string& text, const char* what) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
      throw Error(ErrorKind::InvalidInput,
                  std::string("bad ") + what + " '" + text + "': expected comma-separated integers");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    double value = 0.0;
    const char* last = text.data() + comma;
    auto [ptr, ec] = std::from_chars(text.data() + pos, last, value);
    if (ec != std::errc() || ptr != last) {
      throw Error(ErrorKind::InvalidInput,
                  std::string("bad ") + what + " '" + text + "': expected comma-separated numbers");
    }
    out.push_back(value);
    pos = comma + 1;
  }
  return out;
}

// Leading parts may omit the last block; it is filled up to n.
FlagSignature signature_for(const std::string& text, int n) {
  std::vector<int> parts = parse_int_list(text, "signature");
  for (int p : parts) {
    if (p < 1) throw Error(ErrorKind::InvalidInput, "signature parts must be positive");
  }
  return FlagSignature::complete(std::move(parts), n);
}

FlagPoint load_point(const std::string& path, const std::string& signature) {
  const DataMatrix x = load_csv(path);
  return FlagPoint::from_frame(x.values, signature_for(signature, static_cast<int>(x.n())));
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct SolverFlags {
  int restarts = 5;
  int max_iter = 100;
  double eps = 1e-10;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  void add_to(CLI::App* app, bool with_threads) {
    app->add_option("--restarts", restarts, "solver trials per representative")
        ->check(CLI::PositiveNumber);
    app->add_option("--max-iter", max_iter, "iterations per trial")->check(CLI::PositiveNumber);
    app->add_option("--eps", eps, "convergence tolerance")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "base seed (default: $FLAGGEO_SEED, else 0)");
    if (with_threads) {
      app->add_option("--threads", threads, "worker threads (0 = all cores)");
    }
  }

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("FLAGGEO_SEED")) {
      std::uint64_t value = 0;
      const std::string text = env;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error(ErrorKind::InvalidInput, "FLAGGEO_SEED must be a nonnegative integer");
      }
      return value;
    }
    return 0;
  }

  SolverConfig config() const {
    SolverConfig cfg;
    cfg.restarts = restarts;
    cfg.max_iter = max_iter;
    cfg.eps = eps;
    cfg.seed = resolved_seed();
    return cfg;
  }
};

void write_matrix(const fs::path& path, const Matrix& m, std::vector<std::string> labels = {}) {
  DataMatrix d;
  d.values = m;
  d.labels = std::move(labels);
  save_csv(path.string(), d);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geodesic distances on flag manifolds", "flaggeo"};
  app.require_subcommand(1);

  SolverFlags solver;
  std::string signature;
  std::string method_name = "flag";
  std::string out_path;

  // distance
  std::string a_path, b_path;
  bool no_reduce = false;
  auto* distance = app.add_subcommand("distance", "flag distance between two frames");
  distance->add_option("a", a_path, "first frame (CSV, n x k or n x n)")->required();
  distance->add_option("b", b_path, "second frame")->required();
  distance->add_option("--signature", signature, "block sizes n1,n2,...")->required();
  distance->add_flag("--no-reduce", no_reduce, "skip the 2k reduction");
  solver.add_to(distance, false);

  // geodesic
  int steps = 10;
  auto* geodesic = app.add_subcommand("geodesic", "sample the minimal geodesic between two flags");
  geodesic->add_option("a", a_path)->required();
  geodesic->add_option("b", b_path)->required();
  geodesic->add_option("--signature", signature)->required();
  geodesic->add_option("--steps", steps, "number of intervals T")->check(CLI::PositiveNumber);
  geodesic->add_option("--out", out_path, "output directory")->required();
  solver.add_to(geodesic, false);

  // distmat
  std::vector<std::string> inputs;
  auto* distmat = app.add_subcommand("distmat", "pairwise distance matrix of frames");
  distmat->add_option("inputs", inputs, "frame CSV files")->required()->expected(2, -1);
  distmat->add_option("--signature", signature)->required();
  distmat->add_option("--method", method_name, "flag or grassmann")
      ->check(CLI::IsMember({"flag", "grassmann"}));
  distmat->add_option("--out", out_path, "output CSV (default stdout)");
  distmat->add_flag("--no-reduce", no_reduce);
  solver.add_to(distmat, true);

  // mds
  std::string matrix_path, eigen_path;
  int mds_dim = 2;
  auto* mds = app.add_subcommand("mds", "classical MDS of a distance matrix");
  mds->add_option("matrix", matrix_path, "distance matrix CSV")->required();
  mds->add_option("--dim", mds_dim, "embedding dimension")->check(CLI::PositiveNumber);
  mds->add_option("--out", out_path, "coordinates CSV (default stdout)");
  mds->add_option("--eigenvalues", eigen_path, "eigenvalues CSV");

  // pipeline
  std::string spec_path;
  std::optional<std::uint64_t> pipeline_seed;
  unsigned pipeline_threads = 0;
  auto* pipeline = app.add_subcommand("pipeline", "run a two-class mixture experiment");
  pipeline->add_option("spec", spec_path, "experiment spec (JSON)")->required();
  pipeline->add_option("--out", out_path, "output directory")->required();
  pipeline->add_option("--threads", pipeline_threads, "worker threads (0 = all cores)");
  pipeline->add_option("--seed", pipeline_seed, "override the spec seed");

  // gen
  auto* gen = app.add_subcommand("gen", "synthetic data");
  gen->require_subcommand(1);
  std::string axes_text, stddev_text;
  int samples = 100, dim = 0, gen_n = 0, gen_k = 0;
  double noise = 0.0, angle = 0.0;
  std::uint64_t frame_seed = 0;
  std::optional<std::uint64_t> gen_seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", gen_seed, "sample seed (default: $FLAGGEO_SEED, else 0)");
    sub->add_option("--out", out_path, "output CSV (default stdout)");
  };
  auto* ellipsoid = gen->add_subcommand("ellipsoid", "points on an ellipsoid, one per column");
  ellipsoid->add_option("--axes", axes_text, "descending semi-axes a1,a2,...")->required();
  ellipsoid->add_option("--samples", samples)->check(CLI::PositiveNumber);
  ellipsoid->add_option("--noise", noise)->check(CLI::NonNegativeNumber);
  ellipsoid->add_option("--frame-seed", frame_seed, "seed of the random frame; 0 keeps the identity");
  add_common(ellipsoid);
  auto* gaussian = gen->add_subcommand("gaussian", "Gaussian pool in a random frame");
  gaussian->add_option("--dim", dim, "ambient dimension")->required()->check(CLI::PositiveNumber);
  gaussian->add_option("--stddev", stddev_text, "per-frame-column standard deviations")->required();
  gaussian->add_option("--samples", samples)->check(CLI::PositiveNumber);
  gaussian->add_option("--noise", noise)->check(CLI::NonNegativeNumber);
  gaussian->add_option("--frame-seed", frame_seed);
  add_common(gaussian);
  auto* frame = gen->add_subcommand("frame", "random orthonormal n x k frame");
  frame->add_option("--n", gen_n)->required()->check(CLI::PositiveNumber);
  frame->add_option("--k", gen_k)->required()->check(CLI::PositiveNumber);
  add_common(frame);
  auto* rotation = gen->add_subcommand("rotation", "rotation in SO(n); Haar random or a planar angle");
  rotation->add_option("--n", gen_n)->required()->check(CLI::PositiveNumber);
  rotation->add_option("--angle", angle, "rotate the (e1, e2) plane by this angle instead");
  add_common(rotation);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  auto emit_csv = [&](const DataMatrix& d) {
    if (out_path.empty()) {
      write_csv(out, d);
    } else {
      save_csv(out_path, d);
    }
  };
  auto seed_or_env = [&](const std::optional<std::uint64_t>& s) {
    SolverFlags f;
    f.seed = s;
    return f.resolved_seed();
  };

  try {
    if (distance->parsed()) {
      const FlagPoint p1 = load_point(a_path, signature);
      const FlagPoint p2 = load_point(b_path, signature);
      if (!(p1.signature() == p2.signature())) {
        throw Error(ErrorKind::InvalidInput, "inputs have different dimensions");
      }
      const auto start = std::chrono::steady_clock::now();
      const GeodesicSolution sol = no_reduce ? flag_distance(p1, p2, solver.config())
                                             : flag_distance_auto(p1, p2, solver.config());
      const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
      out << "distance: " << format_double(sol.distance) << "\n"
          << "representative: " << sol.representative_index << "\n"
          << "residual: " << format_double(sol.residual) << "\n"
          << "converged: " << (sol.converged ? "true" : "false") << "\n"
          << "trials: " << sol.converged_trials << "/" << sol.trials << "\n"
          << "wall_time_s: " << wall.count() << "\n";
      return kExitOk;
    }

    if (geodesic->parsed()) {
      const FlagPoint p1 = load_point(a_path, signature);
      const FlagPoint p2 = load_point(b_path, signature);
      if (!(p1.signature() == p2.signature())) {
        throw Error(ErrorKind::InvalidInput, "inputs have different dimensions");
      }
      // The tangent must live at p1 in the full space, so no reduction here.
      const GeodesicSolution sol = flag_distance(p1, p2, solver.config());
      fs::create_directories(out_path);
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        char name[32];
        std::snprintf(name, sizeof name, "step_%04d.csv", s);
        write_matrix(fs::path(out_path) / name, flag_exp(p1, sol.h, t).matrix());
      }
      out << "distance: " << format_double(sol.distance) << "\n"
          << "steps: " << steps << "\n"
          << "out: " << out_path << "\n";
      return kExitOk;
    }

    if (distmat->parsed()) {
      std::vector<FlagPoint> points;
      std::vector<std::string> labels;
      for (const auto& path : inputs) {
        points.push_back(load_point(path, signature));
        labels.push_back(fs::path(path).stem().string());
      }
      PairwiseConfig cfg;
      cfg.solver = solver.config();
      cfg.threads = solver.threads;
      cfg.reduce = !no_reduce;
      const DistanceMatrix d = pairwise_distances(points, parse_method(method_name), cfg, labels);
      DataMatrix csv;
      csv.values = d.values;
      csv.labels = d.labels;
      emit_csv(csv);
      return kExitOk;
    }

    if (mds->parsed()) {
      const DataMatrix raw = load_csv(matrix_path);
      DistanceMatrix d;
      d.values = raw.values;
      d.labels = raw.labels;
      const MdsResult r = classical_mds(d, mds_dim);
      DataMatrix coords;
      coords.values = r.coordinates.transpose();
      coords.labels = raw.labels;
      emit_csv(coords);
      if (!eigen_path.empty()) {
        write_matrix(eigen_path, r.eigenvalues, {"eigenvalue"});
      }
      return kExitOk;
    }

    if (pipeline->parsed()) {
      ExperimentSpec spec = load_experiment_spec(spec_path);
      if (pipeline_seed) {
        spec.seed = *pipeline_seed;
        spec.solver.seed = *pipeline_seed;
      }
      const PipelineResult result = run_pipeline(spec, pipeline_threads);
      out << write_pipeline_outputs(result, out_path);
      return kExitOk;
    }

    if (ellipsoid->parsed()) {
      const std::vector<double> axes = parse_double_list(axes_text, "axes");
      const int n = static_cast<int>(axes.size());
      const Matrix rot = frame_seed ? random_rotation(n, frame_seed) : Matrix::Identity(n, n);
      emit_csv(gen_ellipsoid(axes, rot, samples, noise, seed_or_env(gen_seed)));
      return kExitOk;
    }
    if (gaussian->parsed()) {
      const std::vector<double> sd = parse_double_list(stddev_text, "stddev");
      if (static_cast<int>(sd.size()) > dim) {
        throw Error(ErrorKind::InvalidInput, "--stddev has more entries than --dim");
      }
      const Matrix rot = random_rotation(dim, frame_seed);
      emit_csv(gen_gaussian_pool(sd, rot.leftCols(static_cast<Eigen::Index>(sd.size())), samples,
                                 noise, seed_or_env(gen_seed)));
      return kExitOk;
    }
    if (frame->parsed()) {
      if (gen_k > gen_n) throw Error(ErrorKind::InvalidInput, "--k must not exceed --n");
      DataMatrix d;
      d.values = random_rotation(gen_n, seed_or_env(gen_seed)).leftCols(gen_k);
      emit_csv(d);
      return kExitOk;
    }
    if (rotation->parsed()) {
      DataMatrix d;
      if (rotation->count("--angle")) {
        if (gen_n < 2) throw Error(ErrorKind::InvalidInput, "--angle needs --n >= 2");
        d.values = Matrix::Identity(gen_n, gen_n);
        d.values.topLeftCorner(2, 2) << std::cos(angle), -std::sin(angle), std::sin(angle),
            std::cos(angle);
      } else {
        d.values = random_rotation(gen_n, seed_or_env(gen_seed));
      }
      emit_csv(d);
      return kExitOk;
    }
  } catch (const SpecError& e) {
    err << "error: invalid experiment spec at " << e.what() << "\n";
    return kExitInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.numerical() ? kExitNumericalFailure : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace flaggeo
