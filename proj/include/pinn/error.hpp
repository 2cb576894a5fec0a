#pragma once

#include <stdexcept>
#include <string>

namespace pinn {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  kSuccess = 0,
  kConfig = 2,
  kDivergence = 3,
  kVerification = 4,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ExitCode code = ExitCode::kConfig)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, ExitCode::kConfig) {}
};

// Non-finite values appeared in a forward pass, gradient, loss, or solver state.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what)
      : Error(what, ExitCode::kDivergence) {}
};

class VerificationError : public Error {
 public:
  explicit VerificationError(const std::string& what)
      : Error(what, ExitCode::kVerification) {}
};

}  // namespace pinn
