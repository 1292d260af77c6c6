// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <utility>

namespace matten {

/// Broad failure categories. The C API and the CLI map these onto status
/// and exit codes, so the set is part of the public contract.
enum class ErrorKind {
  config,      ///< bad or unknown configuration value
  dataset,     ///< input data unusable (empty, unreadable, malformed file)
  divergence,  ///< non-finite loss during training
  parse,       ///< chemical formula grammar violation
  bounds,      ///< coordinate outside the tensor shape
  state,       ///< object used before it is ready (unbound stats, stale tape)
  shape,       ///< dimension mismatch
  argument,    ///< other precondition violation
  io,          ///< file system failure
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::exception {
 public:
  Error(ErrorKind kind, std::string what) : message_(std::move(what)), kind_(kind) {}

  const char* what() const noexcept override { return message_.c_str(); }
  ErrorKind kind() const noexcept { return kind_; }

  /// Prefixes the message, e.g. "iteration 3: ". Keeps the dynamic type, so
  /// `catch (Error& e) { e.add_context(...); throw; }` is lossless.
  void add_context(const std::string& prefix) { message_.insert(0, prefix); }

 private:
  std::string message_;
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DatasetError : public Error {
 public:
  explicit DatasetError(const std::string& what) : Error(ErrorKind::dataset, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, double learning_rate);

  std::size_t epoch() const noexcept { return epoch_; }
  double learning_rate() const noexcept { return learning_rate_; }

 private:
  std::size_t epoch_;
  double learning_rate_;
};

/// Formula grammar violation; `offset` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class BoundsError : public Error {
 public:
  BoundsError(std::size_t mode, std::size_t index, std::size_t extent);

  std::size_t mode() const noexcept { return mode_; }

 private:
  std::size_t mode_;
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error(ErrorKind::state, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ErrorKind::argument, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace matten
