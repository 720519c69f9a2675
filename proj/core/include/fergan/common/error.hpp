#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fergan {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, detected before any side effect.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corpus, manifest, or image problems.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor or image shape does not match what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Optimization produced a non-finite value.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A long-running operation stopped because its cancellation flag was set.
class Cancelled : public Error {
 public:
  using Error::Error;
};

/// Cross-database evaluation refused because the held-out set leaks into training.
class OverlapError : public Error {
 public:
  OverlapError(std::string message, std::vector<std::string> identities,
               std::vector<std::string> paths)
      : Error(std::move(message)),
        identities_(std::move(identities)),
        paths_(std::move(paths)) {}

  const std::vector<std::string>& identities() const noexcept { return identities_; }
  const std::vector<std::string>& paths() const noexcept { return paths_; }

 private:
  std::vector<std::string> identities_;
  std::vector<std::string> paths_;
};

}  // namespace fergan
