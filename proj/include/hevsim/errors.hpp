#pragma once

#include <stdexcept>
#include <string>

namespace hevsim {

/// Configuration / input-file problems. The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Domain-level infeasibility or contract violations. CLI exit code 2.
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

class InfeasibleCorridor : public DomainError {
public:
  using DomainError::DomainError;
};

class SocOutOfRange : public DomainError {
public:
  using DomainError::DomainError;
};

class OutOfRange : public DomainError {
public:
  using DomainError::DomainError;
};

class RankDeficient : public DomainError {
public:
  using DomainError::DomainError;
};

class NoBracket : public DomainError {
public:
  using DomainError::DomainError;
};

class IncomparableScenarios : public DomainError {
public:
  using DomainError::DomainError;
};

// Replay-log problems: malformed input files, so they follow the
// config/IO exit-code path.
class SchemaError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class MonotonicityError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class InvalidLambda : public ConfigError {
public:
  using ConfigError::ConfigError;
};

} // namespace hevsim
