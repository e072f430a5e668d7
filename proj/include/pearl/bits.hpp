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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pearl {

// Bit i of a packed buffer lives in byte i/8 at mask 0x80 >> (i%8).
inline bool read_bit(std::span<const uint8_t> buf, size_t i) {
  return (buf[i >> 3] >> (7 - (i & 7))) & 1u;
}

inline void write_bit(std::span<uint8_t> buf, size_t i, bool v) {
  const uint8_t mask = static_cast<uint8_t>(0x80u >> (i & 7));
  if (v) {
    buf[i >> 3] |= mask;
  } else {
    buf[i >> 3] &= static_cast<uint8_t>(~mask);
  }
}

// Reads `width` (<= 32) bits starting at `pos`, first bit is the MSB.
inline uint32_t read_bits(std::span<const uint8_t> buf, size_t pos,
                          unsigned width) {
  uint32_t v = 0;
  for (unsigned i = 0; i < width; ++i) {
    v = (v << 1) | static_cast<uint32_t>(read_bit(buf, pos + i));
  }
  return v;
}

inline void write_bits(std::span<uint8_t> buf, size_t pos, unsigned width,
                       uint32_t value) {
  for (unsigned i = 0; i < width; ++i) {
    write_bit(buf, pos + i, (value >> (width - 1 - i)) & 1u);
  }
}

/// Fixed-length bit string packed MSB-first. Trailing pad bits are zero.
class BitString {
 public:
  BitString() = default;
  explicit BitString(size_t nbits) : nbits_(nbits), bytes_((nbits + 7) / 8) {}
  BitString(std::vector<uint8_t> bytes, size_t nbits);

  /// Parses a string of '0'/'1' characters; throws kInvalidArgument otherwise.
  static BitString parse(std::string_view text);

  size_t size() const { return nbits_; }
  bool get(size_t i) const { return read_bit(bytes_, i); }
  void set(size_t i, bool v) { write_bit(bytes_, i, v); }

  std::span<const uint8_t> bytes() const { return bytes_; }
  std::span<uint8_t> bytes() { return bytes_; }

  std::string to_string() const;

  bool operator==(const BitString&) const = default;

 private:
  size_t nbits_ = 0;
  std::vector<uint8_t> bytes_;
};

std::string to_bit_string(uint32_t value, unsigned width);

}  // namespace pearl
