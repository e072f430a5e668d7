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

#pragma once

#include <stdexcept>
#include <string>

namespace pearl {

// Mirrors pearl_status in pearl.h; values must stay in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kOutOfRange = 2,
  kWomInvariantViolation = 3,
  kDoubleProgramLimit = 4,
  kUnmapped = 5,
  kModeRejected = 6,
  kDeviceFull = 7,
  kCorrupt = 8,
  kIo = 9,
  kNoCloak = 10,
  kUndecodable = 11,
  kInternal = 12,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace pearl
