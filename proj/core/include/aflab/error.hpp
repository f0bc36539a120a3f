#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aflab {

enum class ErrorCode {
  invalid_input,
  invalid_shell,
  incompatible_operator,
  not_in_kernel,
  mean_mismatch,
  aliasing_risk,
  degenerate_input,
  degenerate_step,
  bad_integrand,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying one of the library's error kinds.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aflab
