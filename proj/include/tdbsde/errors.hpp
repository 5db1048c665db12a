#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace tdbsde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed arguments that violate a precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input data (tables, samples) is malformed or non-finite.
class DataError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  ResourceError(const std::string& what, std::size_t required_bytes)
      : Error(what), required_bytes_(required_bytes) {}
  std::size_t required_bytes() const noexcept { return required_bytes_; }

 private:
  std::size_t required_bytes_;
};

// A non-finite value or runaway iteration during a solve. When known, the
// first offending (path, node) location is attached.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what,
                          std::optional<std::int64_t> path = std::nullopt,
                          std::optional<int> node = std::nullopt)
      : Error(what), path_(path), node_(node) {}
  std::optional<std::int64_t> path() const noexcept { return path_; }
  std::optional<int> node() const noexcept { return node_; }

 private:
  std::optional<std::int64_t> path_;
  std::optional<int> node_;
};

class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A sufficient condition required before solving does not hold.
class GateRefusal : public Error {
 public:
  using Error::Error;
};

class AssumptionError : public GateRefusal {
 public:
  AssumptionError(const std::string& assumption, const std::string& what)
      : GateRefusal(assumption + ": " + what), assumption_(assumption) {}
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace tdbsde
