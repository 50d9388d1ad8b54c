#include "flaggeo/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace flaggeo {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

bool parse_number(std::string_view cell, double& value) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && end == cell.data() + cell.size();
}

}  // namespace

DataMatrix read_csv(std::istream& in, const std::string& source) {
  DataMatrix out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (first) {
      first = false;
      width = cells.size();
      double dummy = 0.0;
      const bool numeric = std::all_of(cells.begin(), cells.end(),
                                       [&](auto c) { return parse_number(c, dummy); });
      if (!numeric) {
        for (auto c : cells) out.labels.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(width) + " cells, found " +
                           std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_number(cells[c], row[c])) {
        throw ParseError(source, line_no,
                         "non-numeric cell '" + std::string(cells[c]) +
                             "' in column " + std::to_string(c + 1));
      }
      if (!std::isfinite(row[c])) {
        throw ParseError(source, line_no,
                         "non-finite value in column " + std::to_string(c + 1));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, line_no, "no numeric rows");

  out.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

DataMatrix load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path);
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const DataMatrix& x) {
  if (!x.labels.empty()) {
    if (static_cast<Eigen::Index>(x.labels.size()) != x.p()) {
      throw Error(ErrorKind::InvalidInput, "write_csv: label count does not match columns");
    }
    for (std::size_t c = 0; c < x.labels.size(); ++c) {
      if (x.labels[c].find_first_of(",\n") != std::string::npos) {
        throw Error(ErrorKind::InvalidInput,
                    "write_csv: label '" + x.labels[c] + "' contains a comma or newline");
      }
      out << (c ? "," : "") << x.labels[c];
    }
    out << '\n';
  }
  char buf[32];
  for (Eigen::Index r = 0; r < x.n(); ++r) {
    for (Eigen::Index c = 0; c < x.p(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, x.values(r, c),
                                     std::chars_format::general, 17);
      if (c) out << ',';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const DataMatrix& x) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  write_csv(out, x);
  if (!out) throw Error(ErrorKind::InvalidInput, "error writing " + path);
}

DataMatrix center(const DataMatrix& x) {
  DataMatrix out = x;
  const Vector mean = x.values.rowwise().mean();
  out.values.colwise() -= mean;
  return out;
}

DataMatrix select_rows(const DataMatrix& x, const std::vector<int>& rows) {
  DataMatrix out = x;
  out.values.resize(static_cast<Eigen::Index>(rows.size()), x.p());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.n()) {
      throw Error(ErrorKind::InvalidInput,
                  "select_rows: index " + std::to_string(rows[i]) + " out of range [0, " +
                      std::to_string(x.n()) + ")");
    }
    out.values.row(static_cast<Eigen::Index>(i)) = x.values.row(rows[i]);
  }
  return out;
}

FlagPoint svd_flag(const DataMatrix& x, const FlagSignature& sig,
                   std::vector<std::string>* warnings) {
  if (x.n() != sig.n()) {
    throw Error(ErrorKind::InvalidInput,
                "svd_flag: data has " + std::to_string(x.n()) +
                    " rows but signature (" + sig.to_string() + ") needs " +
                    std::to_string(sig.n()));
  }
  const int k = sig.k();
  const Eigen::Index rank_cap = std::min(x.n(), x.p());
  if (k > rank_cap) {
    throw Error(ErrorKind::RankTooLow,
                "svd_flag: k = " + std::to_string(k) + " exceeds min(n, p) = " +
                    std::to_string(rank_cap));
  }
  // Normalizing first makes power-of-two rescalings of X bit-neutral.
  const double scale = x.values.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) throw Error(ErrorKind::RankTooLow, "svd_flag: zero data matrix");
  const SvdResult svd = svd_compact(x.values / scale);
  const Vector& s = svd.sigma;
  auto sigma = [&](int i) { return i < s.size() ? s(i) : 0.0; };  // 0-based
  const double tol = kSpectrumGapTolerance * s(0);

  if (sigma(k - 1) <= tol) {
    throw Error(ErrorKind::RankTooLow,
                "svd_flag: rank below k = " + std::to_string(k));
  }
  for (int b = 0; b + 1 < sig.d(); ++b) {
    const int start = sig.block_start(b);
    const int end = start + sig.block_size(b);  // boundary after index end-1
    if (sigma(end - 1) - sigma(end) <= tol) {
      throw Error(ErrorKind::DegenerateSpectrum,
                  "svd_flag: singular values " + std::to_string(end) + " and " +
                      std::to_string(end + 1) +
                      " coincide across a block boundary");
    }
    for (int i = start; i + 1 < end; ++i) {
      if (warnings && sigma(i) - sigma(i + 1) <= tol) {
        warnings->push_back("DegenerateSpectrum: singular values " +
                            std::to_string(i + 1) + " and " + std::to_string(i + 2) +
                            " coincide inside block " + std::to_string(b + 1));
      }
    }
  }
  return FlagPoint::from_frame(svd.u.matrix().leftCols(k), sig);
}

Matrix random_rotation(int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorKind::InvalidInput, "random_rotation: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (int c = 0; c < n; ++c)
    for (int r = 0; r < n; ++r) a(r, c) = normal(rng);
  // Nonnegative R diagonal makes Q Haar distributed on O(n).
  Matrix q = qr_thin(a).q.matrix();
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

DataMatrix gen_ellipsoid(const std::vector<double>& axes, const Matrix& frame,
                         int p, double noise, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(axes.size());
  if (d == 0 || frame.rows() != d || frame.cols() != d) {
    throw Error(ErrorKind::InvalidInput,
                "gen_ellipsoid: frame must be square with one column per axis");
  }
  if (p < 1 || noise < 0.0) {
    throw Error(ErrorKind::InvalidInput, "gen_ellipsoid: need p >= 1 and noise >= 0");
  }
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (!(axes[i] > 0.0) || (i && axes[i] > axes[i - 1])) {
      throw Error(ErrorKind::InvalidInput,
                  "gen_ellipsoid: axes must be positive and descending");
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Vector lengths = Eigen::Map<const Vector>(axes.data(), d);
  DataMatrix out;
  out.values.resize(d, p);
  Vector u(d);
  for (int c = 0; c < p; ++c) {
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < d; ++i) u(i) = normal(rng);
      norm = u.norm();
    } while (norm == 0.0);
    out.values.col(c) = frame * lengths.cwiseProduct(u / norm);
    if (noise > 0.0)
      for (Eigen::Index i = 0; i < d; ++i) out.values(i, c) += noise * normal(rng);
  }
  return out;
}

DataMatrix gen_gaussian_pool(const std::vector<double>& stddev,
                             const Matrix& frame, int p, double noise,
                             std::uint64_t seed, const std::vector<double>& mean) {
  const auto r = static_cast<Eigen::Index>(stddev.size());
  if (!mean.empty() && mean.size() != stddev.size()) {
    throw Error(ErrorKind::InvalidInput, "gen_gaussian_pool: mean and stddev lengths differ");
  }
  if (frame.cols() != r || r == 0) {
    throw Error(ErrorKind::InvalidInput,
                "gen_gaussian_pool: frame needs one column per stddev entry");
  }
  if (p < 1 || noise < 0.0) {
    throw Error(ErrorKind::InvalidInput, "gen_gaussian_pool: need p >= 1 and noise >= 0");
  }
  OrthonormalColumns checked(frame);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Vector sd = Eigen::Map<const Vector>(stddev.data(), r);
  const Vector mu = mean.empty() ? Vector::Zero(r) : Vector(Eigen::Map<const Vector>(mean.data(), r));
  const Eigen::Index n = frame.rows();
  DataMatrix out;
  out.values.resize(n, p);
  Vector g(r);
  for (int c = 0; c < p; ++c) {
    for (Eigen::Index i = 0; i < r; ++i) g(i) = normal(rng);
    out.values.col(c) = frame * (mu + sd.cwiseProduct(g));
    if (noise > 0.0)
      for (Eigen::Index i = 0; i < n; ++i) out.values(i, c) += noise * normal(rng);
  }
  return out;
}

std::vector<DataMatrix> gen_mixture(const DataMatrix& major,
                                    const DataMatrix& minor, int m, int q,
                                    int sets, std::uint64_t seed,
                                    const std::string& label,
                                    const std::string& major_name,
                                    const std::string& minor_name) {
  if (m < 0 || q < 0 || m + q == 0 || sets < 1) {
    throw Error(ErrorKind::InvalidInput,
                "gen_mixture: need m, q >= 0 with m + q > 0 and sets >= 1");
  }
  if (major.n() != minor.n()) {
    throw Error(ErrorKind::InvalidInput, "gen_mixture: pools differ in dimension");
  }
  if (static_cast<Eigen::Index>(m) * sets > major.p() ||
      static_cast<Eigen::Index>(q) * sets > minor.p()) {
    throw Error(ErrorKind::InvalidInput,
                "gen_mixture: pool exhausted (need " + std::to_string(m * sets) +
                    " + " + std::to_string(q * sets) + " columns, have " +
                    std::to_string(major.p()) + " + " + std::to_string(minor.p()) + ")");
  }
  std::mt19937_64 rng(seed);
  auto permutation = [&](Eigen::Index size) {
    std::vector<int> idx(static_cast<std::size_t>(size));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  };
  const std::vector<int> major_order = permutation(major.p());
  const std::vector<int> minor_order = permutation(minor.p());

  std::vector<DataMatrix> out;
  out.reserve(static_cast<std::size_t>(sets));
  for (int s = 0; s < sets; ++s) {
    DataMatrix set;
    set.class_label = label;
    set.values.resize(major.n(), m + q);
    for (int c = 0; c < m; ++c) {
      const int src = major_order[static_cast<std::size_t>(s * m + c)];
      set.values.col(c) = major.values.col(src);
      set.labels.push_back(major_name + ":" + std::to_string(src));
    }
    for (int c = 0; c < q; ++c) {
      const int src = minor_order[static_cast<std::size_t>(s * q + c)];
      set.values.col(m + c) = minor.values.col(src);
      set.labels.push_back(minor_name + ":" + std::to_string(src));
    }
    out.push_back(std::move(set));
  }
  return out;
}

}  // namespace flaggeo
