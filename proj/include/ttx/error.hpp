#pragma once

#include <stdexcept>
#include <string>

namespace ttx {

// Machine-readable error categories. The service layer maps these onto HTTP
// status codes; the string form is what clients see in the `code` field.
enum class ErrorCode {
  InvalidArgument,
  NotFound,
  IllegalTransition,
  Conflict,
  Numerical,
  Schema,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::IllegalTransition: return "illegal_transition";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Numerical: return "numerical";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ttx
