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

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace pearl {

enum class Volume : uint8_t { kPublic = 0, kHidden = 1 };

const char* volume_name(Volume v);

using PageIv = std::array<uint8_t, 16>;

struct VolumeKey {
  std::array<uint8_t, 32> bytes{};
  Volume volume = Volume::kPublic;
};

/// scrypt cost parameters.
struct KdfParams {
  uint64_t n = 16384;
  uint32_t r = 8;
  uint32_t p = 1;
};

/// scrypt(password, salt || volume label). Throws kInvalidArgument on an
/// empty password.
VolumeKey derive_key(std::string_view password, Volume volume,
                     std::span<const uint8_t> salt, const KdfParams& params = {});

/// Raw scrypt, exposed for known-answer tests.
std::vector<uint8_t> scrypt(std::string_view password,
                            std::span<const uint8_t> salt,
                            const KdfParams& params, size_t out_len);

/// AES-256-CTR keyed by `key`, initial counter block `iv`. Encryption and
/// decryption are the same keystream XOR.
void ctr_xor(const VolumeKey& key, const PageIv& iv,
             std::span<const uint8_t> in, std::span<uint8_t> out);

std::vector<uint8_t> encrypt_payload(const VolumeKey& key, const PageIv& iv,
                                     std::span<const uint8_t> plaintext);
std::vector<uint8_t> decrypt_payload(const VolumeKey& key, const PageIv& iv,
                                     std::span<const uint8_t> ciphertext);

/// Maximum payload per (key, iv): 2^32 cipher blocks.
inline constexpr uint64_t kMaxCtrBytes = uint64_t{1} << 36;

/// Same IV with the top bit of byte 0 flipped; keeps auxiliary records out of
/// the payload keystream.
PageIv tweak_iv(const PageIv& iv);

using Rng = std::mt19937_64;

PageIv random_iv(Rng& rng);

/// Records every (volume, iv) used for encryption and reports reuse.
class IvRegistry {
 public:
  /// Returns false when the pair has been seen before.
  bool record(Volume volume, const PageIv& iv);
  size_t size() const { return seen_.size(); }
  uint64_t reuse_count() const { return reuse_; }

 private:
  std::unordered_set<std::string> seen_;
  uint64_t reuse_ = 0;
};

}  // namespace pearl
