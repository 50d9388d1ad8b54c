#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flaggeo {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNumericalFailure = 2;

/// Runs the flaggeo command line. args excludes the program name.
/// Subcommands: distance, geodesic, distmat, mds, pipeline, gen.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flaggeo
