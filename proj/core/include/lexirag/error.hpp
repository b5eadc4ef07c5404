#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lexirag {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kAlreadyExists,
  kDimensionMismatch,
  kModelMismatch,
  kZeroNorm,
  kVersionMismatch,
  kCorruptFile,
  kIoError,
  kExternalCommand,
  kBackend,
  kTimeout,
  kNetwork,
  kScriptExhausted,
  kEmptyCorpus,
  kParse,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure the library reports goes through this type; callers branch on
// code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lexirag
