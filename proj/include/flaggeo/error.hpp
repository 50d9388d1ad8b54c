#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flaggeo {

// Failure categories surfaced by the library. The CLI maps them onto exit
// codes: input problems exit 1, numerical failures exit 2.
enum class ErrorKind {
  InvalidInput,
  LogNearCutLocus,
  NoConvergedTrial,
  RankDeficient,
  NotApplicable,
  RankTooLow,
  DegenerateSpectrum,
  ParseError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // True for failures of the numerics rather than of the caller's input.
  bool numerical() const {
    return kind_ == ErrorKind::LogNearCutLocus ||
           kind_ == ErrorKind::NoConvergedTrial;
  }

 private:
  ErrorKind kind_;
};

// Raised by pairwise computations so the caller knows which pair failed.
class PairError : public Error {
 public:
  PairError(const Error& cause, std::size_t i, std::size_t j)
      : Error(cause.kind(), std::string(cause.what()) + " (pair " +
                                std::to_string(i) + ", " + std::to_string(j) +
                                ")"),
        i_(i),
        j_(j) {}

  std::size_t first() const { return i_; }
  std::size_t second() const { return j_; }

 private:
  std::size_t i_;
  std::size_t j_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(ErrorKind::ParseError,
              source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace flaggeo
