#pragma once

#include <stdexcept>
#include <string>

namespace optray {

// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  parse,       // malformed input file
  validation,  // well-formed input violating a contract
  degenerate,  // input with no usable content (e.g. all-zero features)
  usage,       // bad arguments or missing prerequisites
  numerical,   // solver non-convergence or non-finite arithmetic
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::degenerate: return "degenerate input";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::numerical: return "numerical error";
  }
  return "error";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace optray
