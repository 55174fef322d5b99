#pragma once

#include <stdexcept>
#include <string>

namespace lnadapt {

// Error taxonomy mirrored by the C API status codes.
enum class ErrorCode {
  invalid_arg = 1,
  shape = 2,
  config = 3,
  state = 4,
  numeric = 5,
  io = 6,
  data = 7,
  internal = 8,
};

class LnError : public std::runtime_error {
 public:
  LnError(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct ShapeError : LnError {
  explicit ShapeError(const std::string& msg) : LnError(ErrorCode::shape, msg) {}
};
struct ConfigError : LnError {
  explicit ConfigError(const std::string& msg) : LnError(ErrorCode::config, msg) {}
};
struct StateError : LnError {
  explicit StateError(const std::string& msg) : LnError(ErrorCode::state, msg) {}
};
struct NumericError : LnError {
  explicit NumericError(const std::string& msg) : LnError(ErrorCode::numeric, msg) {}
};
struct IoError : LnError {
  explicit IoError(const std::string& msg) : LnError(ErrorCode::io, msg) {}
};
struct DataError : LnError {
  explicit DataError(const std::string& msg) : LnError(ErrorCode::data, msg) {}
};

}  // namespace lnadapt
