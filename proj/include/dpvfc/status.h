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

#ifndef DPVFC_STATUS_H_
#define DPVFC_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpvfc {

// Error taxonomy shared by every module. Each public operation documents
// which codes it may raise.
enum class ErrorCode {
  kInvalidParameter,
  kIncompatibleSketches,
  kSingularTransition,
  kDegenerateTree,
  kLengthMismatch,
  kDimMismatch,
  kIdMismatch,
  kConfigInvalid,
  kParseError,
  kMissingColumn,
  kSpecInvalid,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Throws Error(kInvalidParameter, message) when `condition` is false.
inline void CheckParameter(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::kInvalidParameter, message);
}

}  // namespace dpvfc

#endif  // DPVFC_STATUS_H_
