#pragma once

#include <stdexcept>
#include <string>

namespace staq {

/// Invalid argument or parameter outside the supported domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown (factorization failure, non-finite state).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::string context = {})
      : std::runtime_error(context.empty() ? what : context + ": " + what),
        context_(std::move(context)) {}

  const std::string& context() const noexcept { return context_; }

 private:
  std::string context_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace staq
