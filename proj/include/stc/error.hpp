#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions disagree with what an operation expects.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The user utterance cannot be answered (empty after tokenization).
class InvalidQuery : public Error {
 public:
  using Error::Error;
};

/// Every query token is outside the embedding vocabulary.
class NoKnownTokens : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// A bundle file is missing, corrupt or inconsistent with the rest of the bundle.
class LoadError : public Error {
 public:
  LoadError(std::string file, const std::string& what)
      : Error(file + ": " + what), file_(std::move(file)), reason_(what) {}

  const std::string& file() const noexcept { return file_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string file_;
  std::string reason_;
};

}  // namespace stc
