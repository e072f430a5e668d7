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

#include "pearl/bits.hpp"

#include "pearl/error.hpp"

namespace pearl {

BitString::BitString(std::vector<uint8_t> bytes, size_t nbits)
    : nbits_(nbits), bytes_(std::move(bytes)) {
  if (bytes_.size() != (nbits + 7) / 8) {
    fail(ErrorCode::kInvalidArgument, "bit string byte length mismatch");
  }
  for (size_t i = nbits_; i < bytes_.size() * 8; ++i) set(i, false);
}

BitString BitString::parse(std::string_view text) {
  BitString out(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '0' && text[i] != '1') {
      fail(ErrorCode::kInvalidArgument,
           "not a binary string: '" + std::string(text) + "'");
    }
    out.set(i, text[i] == '1');
  }
  return out;
}

std::string BitString::to_string() const {
  std::string s(nbits_, '0');
  for (size_t i = 0; i < nbits_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::string to_bit_string(uint32_t value, unsigned width) {
  std::string s(width, '0');
  for (unsigned i = 0; i < width; ++i) {
    if ((value >> (width - 1 - i)) & 1u) s[i] = '1';
  }
  return s;
}

}  // namespace pearl
