#pragma once

#include <stdexcept>
#include <string>

namespace lrpprune {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

/// Invalid construction parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

/// Tensor or trace dimensions that do not match the network.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Non-finite loss during optimization.
class TrainingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "training"; }
};

/// Structural surgery that would break the network.
class PruneError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "prune"; }
};

/// Malformed files: checkpoints, CSV tables, configs.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

}  // namespace lrpprune
