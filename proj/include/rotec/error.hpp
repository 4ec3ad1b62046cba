#pragma once

#include <stdexcept>
#include <string>

namespace rotec {

enum class ErrorKind {
  InvalidInput,
  Config,
  Design,
  HorizonOverflow,
  InfeasibleTightening,
  Domain,
  Infeasible,
  InvarianceViolation,
  Precondition,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Design: return "design";
    case ErrorKind::HorizonOverflow: return "horizon-overflow";
    case ErrorKind::InfeasibleTightening: return "infeasible-tightening";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::InvarianceViolation: return "invariance-violation";
    case ErrorKind::Precondition: return "precondition";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// 1 for configuration / input problems, 2 for numerical or design failures.
  int exit_code() const noexcept {
    return (kind_ == ErrorKind::Config || kind_ == ErrorKind::InvalidInput) ? 1 : 2;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace rotec
