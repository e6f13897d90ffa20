// Copyright 2026 The dpvfc Authors.
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

#include "dpvfc/status.h"

namespace dpvfc {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter:
      return "invalid-parameter";
    case ErrorCode::kIncompatibleSketches:
      return "incompatible-sketches";
    case ErrorCode::kSingularTransition:
      return "singular-transition";
    case ErrorCode::kDegenerateTree:
      return "degenerate-tree";
    case ErrorCode::kLengthMismatch:
      return "length-mismatch";
    case ErrorCode::kDimMismatch:
      return "dim-mismatch";
    case ErrorCode::kIdMismatch:
      return "id-mismatch";
    case ErrorCode::kConfigInvalid:
      return "config-invalid";
    case ErrorCode::kParseError:
      return "parse-error";
    case ErrorCode::kMissingColumn:
      return "missing-column";
    case ErrorCode::kSpecInvalid:
      return "spec-invalid";
    case ErrorCode::kIoError:
      return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace dpvfc
