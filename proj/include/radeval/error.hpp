#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace radeval {

/// Base class for every error this library raises on purpose.
/// Anything escaping a radeval entry point that is not an Error is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An operation was called outside its contract (bad shapes, out-of-range
/// parameters, incompatible dimensions).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A record-style input (CSV row, label table, box file) failed validation.
class MalformedAnnotationError : public Error {
 public:
  explicit MalformedAnnotationError(const std::string& what,
                                    std::optional<std::size_t> row = std::nullopt)
      : Error(row ? "row " + std::to_string(*row) + ": " + what : what), row_(row) {}

  std::optional<std::size_t> row() const { return row_; }

 private:
  std::optional<std::size_t> row_;
};

/// A binary input (DICOM stream, tensor container) is structurally broken.
class MalformedFileError : public Error {
 public:
  explicit MalformedFileError(const std::string& what,
                              std::optional<std::size_t> byte_offset = std::nullopt)
      : Error(byte_offset ? what + " at byte " + std::to_string(*byte_offset) : what),
        byte_offset_(byte_offset) {}

  std::optional<std::size_t> byte_offset() const { return byte_offset_; }

 private:
  std::optional<std::size_t> byte_offset_;
};

/// A DICOM transfer syntax we recognize but do not decode.
class UnsupportedSyntaxError : public Error {
 public:
  explicit UnsupportedSyntaxError(std::string syntax_uid)
      : Error("unsupported transfer syntax " + syntax_uid), syntax_uid_(std::move(syntax_uid)) {}

  const std::string& syntax_uid() const { return syntax_uid_; }

 private:
  std::string syntax_uid_;
};

/// A metric was requested over an empty domain (e.g. mean over no classes).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace radeval
