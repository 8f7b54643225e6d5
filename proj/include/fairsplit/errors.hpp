#pragma once

#include <stdexcept>
#include <string>

namespace fairsplit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: malformed loss strings, flags, or incompatible settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data: unparseable or missing cells, ragged rows,
/// constant labels.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A learner or table broke the optimal-learner contract (duplicate
/// positive counts, stale statistics).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// The dataset cannot be used for an experiment (no sensitive attribute,
/// trivially separable).
class DatasetDiscarded : public Error {
 public:
  using Error::Error;
};

/// A joint loss is not defined on the given statistics (empty group,
/// false-negative rate with no positive labels).
class UndefinedLoss : public Error {
 public:
  using Error::Error;
};

/// A work budget (enumeration size, group cap) would be exceeded.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace fairsplit
