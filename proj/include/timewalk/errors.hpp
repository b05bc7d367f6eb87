#pragma once

#include <stdexcept>
#include <string>

namespace tw {

// Error taxonomy shared by the library and the CLI. The CLI maps each class
// to a fixed exit code: IoError/FormatError -> 1, ConfigError -> 2,
// StatsError -> 3, IntegrityError -> 4.

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File access or serialization failure.
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents: bad magic, unsupported version, schema violation.
class FormatError : public IoError {
public:
  using IoError::IoError;
};

/// Invalid configuration or parameter value.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Not enough data to produce a statistically meaningful result.
class StatsError : public Error {
public:
  using Error::Error;
};

/// Internal consistency violation: ordering, length mismatch, range.
class IntegrityError : public Error {
public:
  using Error::Error;
};

} // namespace tw
