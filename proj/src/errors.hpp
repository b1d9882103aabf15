// Error model shared by the whole library: every recoverable failure is a
// VtlError carrying one of three coarse codes (mirrored by the C API and the
// CLI exit codes) plus a short machine-readable kind string.
#ifndef VIRALTL_ERRORS_HPP
#define VIRALTL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vtl {

enum class ErrorCode : int {
  Config = 2,    // bad parameters or malformed configuration
  Regime = 3,    // request outside the regime a formula is valid in, or solver failure
  Internal = 4,  // should-not-happen conditions
};

class VtlError : public std::runtime_error {
 public:
  VtlError(ErrorCode code, std::string kind, const std::string& message)
      : std::runtime_error(message), code_(code), kind_(std::move(kind)) {}

  ErrorCode code() const { return code_; }
  const std::string& kind() const { return kind_; }

 private:
  ErrorCode code_;
  std::string kind_;
};

inline VtlError config_error(const std::string& kind, const std::string& msg) {
  return VtlError(ErrorCode::Config, kind, msg);
}
inline VtlError regime_error(const std::string& kind, const std::string& msg) {
  return VtlError(ErrorCode::Regime, kind, msg);
}
inline VtlError internal_error(const std::string& msg) {
  return VtlError(ErrorCode::Internal, "internal", msg);
}

}  // namespace vtl

#endif
