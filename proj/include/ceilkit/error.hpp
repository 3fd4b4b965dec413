#pragma once

#include <stdexcept>
#include <string>

namespace ceilkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (corpus files, vectors, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite losses or other numerical breakdown during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace ceilkit
