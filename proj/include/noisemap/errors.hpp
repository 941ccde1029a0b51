#pragma once

#include <stdexcept>
#include <string>

namespace noisemap {

/// Invalid generation, propagation, training or job parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Schema violation while reading a serialized document. `path()` names the
/// offending field, e.g. "roads[2].centerline[0]".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tensor shapes inconsistent with the network specification.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied data that does not fit the loaded model or dataset.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation exceeded its wall-clock budget; no partial result exists.
class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File I/O and container format problems.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace noisemap
