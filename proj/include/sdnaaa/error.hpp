#pragma once

#include <stdexcept>
#include <string>

namespace sdnaaa {

/// Failure raised by parsing and protocol operations. `code()` is the
/// machine-readable reason (e.g. "NO_AT_SIGN", "SESSION_EXISTS").
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace sdnaaa
