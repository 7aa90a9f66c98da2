#pragma once

#include <stdexcept>
#include <string>

namespace doslab {

// Error taxonomy mirrors the CLI exit codes: bad inputs (2), numerical
// breakdowns (3), resource caps (4).  Each carries a stable short code
// so tests and the CLI can match on it without parsing prose.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct ValidationError : Error {
  using Error::Error;
  static constexpr int exit_code = 2;
};

struct NumericalError : Error {
  using Error::Error;
  static constexpr int exit_code = 3;
};

struct CapacityError : Error {
  using Error::Error;
  static constexpr int exit_code = 4;
};

}  // namespace doslab
