#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfdrift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The request is well-formed but cannot be computed in this configuration
/// (e.g. identifiability with a single time bin).
class UnsupportedConfigError : public Error {
 public:
  using Error::Error;
};

/// A time bin that must contribute samples has none.
class EmptyBinError : public Error {
 public:
  EmptyBinError(int bin, const std::string& what) : Error(what), bin_(bin) {}
  int bin() const noexcept { return bin_; }

 private:
  int bin_;
};

/// No injective assignment avoids every infeasible entry.
class InfeasibleAssignmentError : public Error {
 public:
  InfeasibleAssignmentError(std::vector<std::size_t> rows, const std::string& what)
      : Error(what), rows_(std::move(rows)) {}
  const std::vector<std::size_t>& blocked_rows() const noexcept { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

/// Malformed input file. `row` is 1-based and counts the header line.
class IngestionError : public Error {
 public:
  IngestionError(std::size_t row, const std::string& what) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Wraps a failure raised while processing a stream with the position of
/// the sample being consumed.
class StreamError : public Error {
 public:
  StreamError(std::size_t position, const std::string& what)
      : Error("at stream position " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace cfdrift
