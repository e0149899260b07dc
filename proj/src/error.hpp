#pragma once

#include <stdexcept>
#include <string>

namespace flockkit {

enum class ErrorKind {
  Input,         // malformed or inconsistent arguments
  Numerical,     // blow-up, underflowed denominators, non-convergence
  Config,        // parse/validation failures and violated model hypotheses
  Precondition,  // operation called outside its domain (e.g. reducible matrix)
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace flockkit
