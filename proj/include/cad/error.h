#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cad {

enum class ErrorCode {
  kInvalidLogits,
  kInvalidInput,
  kInvalidConfig,
  kInvalidToken,
  kInvalidPrompt,
  kBranchMismatch,
  kProvider,
  kTransport,
  kVersion,
  kProtocol,
  kRemote,
  kNotSwappable,
  kIo,
  kFormat,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cad
