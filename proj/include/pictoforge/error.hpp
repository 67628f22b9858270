#pragma once

#include <stdexcept>
#include <string>

namespace pictoforge {

/// Error carrying a stable machine-readable code (e.g. "NOT_LOCKED").
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

} // namespace pictoforge
