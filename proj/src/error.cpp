#include "fairgraph/error.hpp"

namespace fairgraph {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kNumericInput: return "numeric-input error";
    case ErrorCode::kState: return "state error";
    case ErrorCode::kIndex: return "index error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kSchema: return "schema error";
    case ErrorCode::kType: return "type error";
    case ErrorCode::kCompleteness: return "completeness error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kUsage: return "usage error";
    case ErrorCode::kCheck: return "check error";
    case ErrorCode::kDegenerate: return "degenerate-input error";
    case ErrorCode::kCompatibility: return "compatibility error";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kIo: return "io error";
  }
  return "error";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kUsage:
      return kExitConfig;
    case ErrorCode::kParse:
    case ErrorCode::kSchema:
    case ErrorCode::kType:
    case ErrorCode::kCompleteness:
    case ErrorCode::kFormat:
    case ErrorCode::kIo:
    case ErrorCode::kDegenerate:
      return kExitData;
    case ErrorCode::kNumeric:
    case ErrorCode::kNumericInput:
      return kExitNumeric;
    case ErrorCode::kCompatibility:
      return kExitCompatibility;
    default:
      return kExitInternal;
  }
}

}  // namespace fairgraph
