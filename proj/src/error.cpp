// Copyright 2026 The Pearl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pearl/error.hpp"

namespace pearl {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kWomInvariantViolation: return "wom_invariant_violation";
    case ErrorCode::kDoubleProgramLimit: return "double_program_limit";
    case ErrorCode::kUnmapped: return "unmapped";
    case ErrorCode::kModeRejected: return "mode_rejected";
    case ErrorCode::kDeviceFull: return "device_full";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNoCloak: return "no_cloak";
    case ErrorCode::kUndecodable: return "undecodable";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

}  // namespace pearl
