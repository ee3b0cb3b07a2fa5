#pragma once

#include <stdexcept>
#include <string>

namespace tvnet {

/// Broad failure classes; the CLI maps each one to an exit status.
enum class ErrorKind { config, data, numerical, domain };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

// Parameter errors.
struct LagTooLarge : ConfigError {
  using ConfigError::ConfigError;
};
struct BlockTooLong : ConfigError {
  using ConfigError::ConfigError;
};
struct BandwidthTooLarge : ConfigError {
  using ConfigError::ConfigError;
};
struct WindowTooLarge : ConfigError {
  using ConfigError::ConfigError;
};
struct GridTooSmall : ConfigError {
  using ConfigError::ConfigError;
};

// Numerical degeneracies.
struct SingularDesign : NumericalError {
  using NumericalError::NumericalError;
};
struct DegenerateVariance : NumericalError {
  using NumericalError::NumericalError;
};
struct AllSingular : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace tvnet
