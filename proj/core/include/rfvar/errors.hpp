#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rfvar {

/// Base class of every error thrown by the library. `kind()` is a stable,
/// machine-readable name used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// A documented precondition of an operation was violated by its arguments.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error("PreconditionError", what) {}
};

/// Autocovariance requested at a lag with no overlapping grid points.
class ZeroOverlapError : public Error {
 public:
  explicit ZeroOverlapError(const std::string& what) : Error("ZeroOverlap", what) {}
};

/// The standardizing variance estimate is negative, so its square root is undefined.
class NegativeVarianceError : public Error {
 public:
  explicit NegativeVarianceError(const std::string& what)
      : Error("NegativeVarianceEstimate", what) {}
};

/// Malformed field file or configuration file.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("ParseError", what) {}
};

/// Failure of a statistic evaluated on one subsampling block.
class BlockError : public Error {
 public:
  BlockError(std::size_t block_index, const std::string& kind, const std::string& what)
      : Error(kind, "block " + std::to_string(block_index) + ": " + what),
        block_index_(block_index) {}

  std::size_t block_index() const noexcept { return block_index_; }

 private:
  std::size_t block_index_;
};

}  // namespace rfvar
