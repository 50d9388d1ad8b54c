#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "flaggeo/flag.hpp"

namespace flaggeo {

/// Raw data: n features by p samples, one sample per column.
struct DataMatrix {
  Matrix values;
  // Optional per-column tags (CSV header row).
  std::vector<std::string> labels;
  // Optional tag for the whole matrix, e.g. a mixture type.
  std::string class_label;

  Eigen::Index n() const { return values.rows(); }
  Eigen::Index p() const { return values.cols(); }
};

// Numeric CSV with an optional header row of column labels. Cells are
// trimmed; blank lines are skipped. Ragged rows and non-numeric cells raise
// ParseError naming the 1-based line.
DataMatrix read_csv(std::istream& in, const std::string& source = "<stream>");
DataMatrix load_csv(const std::string& path);

// 17 significant digits, so load_csv(save_csv(x)) is bit-exact.
void write_csv(std::ostream& out, const DataMatrix& x);
void save_csv(const std::string& path, const DataMatrix& x);

// Subtracts the mean sample from every sample.
DataMatrix center(const DataMatrix& x);

// Keeps the given rows (feature / band indices), in the given order.
DataMatrix select_rows(const DataMatrix& x, const std::vector<int>& rows);

/// Flag from the leading left singular vectors of X.
///
/// The first sig.k() columns of U (descending singular values) are completed
/// to a point of FL(sig). Throws RankTooLow when rank(X) < k and
/// DegenerateSpectrum when two singular values straddling a block boundary
/// coincide (the flag is not defined there). Ties strictly inside a block are
/// harmless and are reported through `warnings` when it is given. Gaps are
/// judged relative to sigma_1 with tolerance kSpectrumGapTolerance.
FlagPoint svd_flag(const DataMatrix& x, const FlagSignature& sig,
                   std::vector<std::string>* warnings = nullptr);

inline constexpr double kSpectrumGapTolerance = 1e-10;

// Haar-distributed rotation in SO(n).
Matrix random_rotation(int n, std::uint64_t seed);

// p samples frame * diag(axes) * u, u uniform on the unit sphere (normalized
// Gaussian), plus N(0, noise^2) per entry. frame is square, axes.size() wide.
DataMatrix gen_ellipsoid(const std::vector<double>& axes, const Matrix& frame,
                         int p, double noise, std::uint64_t seed);

// p samples frame * (mean + diag(stddev) * g) + noise * e with g, e standard
// normal. frame is n x stddev.size() with orthonormal columns; an empty mean
// means zero.
DataMatrix gen_gaussian_pool(const std::vector<double>& stddev,
                             const Matrix& frame, int p, double noise,
                             std::uint64_t seed, const std::vector<double>& mean = {});

// `sets` data matrices, each m columns drawn from `major` followed by q from
// `minor`, without replacement across the whole batch. Column labels record
// the source as "<pool>:<index>"; class_label is `label`.
std::vector<DataMatrix> gen_mixture(const DataMatrix& major,
                                    const DataMatrix& minor, int m, int q,
                                    int sets, std::uint64_t seed,
                                    const std::string& label,
                                    const std::string& major_name = "major",
                                    const std::string& minor_name = "minor");

}  // namespace flaggeo
