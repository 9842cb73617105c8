#pragma once

#include <stdexcept>
#include <string>

namespace coachme {

// Every failure surfaced by the library carries a stable code string. The
// HTTP layer serializes it verbatim as {"code": ..., "message": ...}.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace coachme
