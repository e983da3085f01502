#pragma once

#include <stdexcept>
#include <string>

namespace fairgraph {

enum class ErrorCode {
  kShape,
  kNumericInput,
  kState,
  kIndex,
  kParse,
  kSchema,
  kType,
  kCompleteness,
  kConfig,
  kUsage,
  kCheck,
  kDegenerate,
  kCompatibility,
  kFormat,
  kNumeric,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Process exit codes used by the command line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
  kExitCompatibility = 5,
};

int exit_code_for(ErrorCode code);

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fairgraph
