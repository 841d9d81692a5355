#ifndef KTM_ERRORS_HPP
#define KTM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ktm {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed data passed to an operation (empty trajectory, bad dimensions, ...).
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// A configuration value violates its constraints.
class InvalidConfig : public Error {
 public:
  explicit InvalidConfig(const std::string& what) : Error(what) {}
};

/// A file could not be parsed; message carries the offending line where known.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// Optimisation diverged; message names the epoch.
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(what) {}
};

/// Filesystem or serialization failure.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace ktm

#endif  // KTM_ERRORS_HPP
