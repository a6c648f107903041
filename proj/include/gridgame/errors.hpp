// Copyright 2026 The gridgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridgame {

enum class ErrorCode {
  kDisconnectedNetwork,
  kDuplicateBus,
  kInvalidNetwork,
  kSingularMatrix,
  kDimensionMismatch,
  kUnknownBus,
  kInvalidSpec,
  kSingularReducedSystem,
  kNoConvergentActiveSet,
  kMaxIterationsExceeded,
  kInfeasibleInitial,
  kUnknownTarget,
  kParseError,
  kValidationError,
  kIoError,
};

inline std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDisconnectedNetwork: return "DisconnectedNetwork";
    case ErrorCode::kDuplicateBus: return "DuplicateBus";
    case ErrorCode::kInvalidNetwork: return "InvalidNetwork";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownBus: return "UnknownBus";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kSingularReducedSystem: return "SingularReducedSystem";
    case ErrorCode::kNoConvergentActiveSet: return "NoConvergentActiveSet";
    case ErrorCode::kMaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::kInfeasibleInitial: return "InfeasibleInitial";
    case ErrorCode::kUnknownTarget: return "UnknownTarget";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above; the
// CLI maps them onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gridgame
