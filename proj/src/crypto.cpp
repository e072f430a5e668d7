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

#include "pearl/crypto.hpp"

#include <openssl/evp.h>

#include <memory>

#include "pearl/error.hpp"

namespace pearl {

const char* volume_name(Volume v) {
  return v == Volume::kPublic ? "public" : "hidden";
}

std::vector<uint8_t> scrypt(std::string_view password,
                            std::span<const uint8_t> salt,
                            const KdfParams& params, size_t out_len) {
  std::vector<uint8_t> out(out_len);
  const uint64_t maxmem = 128 * params.r * (params.n + params.p + 2) + (64u << 20);
  if (EVP_PBE_scrypt(password.data(), password.size(), salt.data(), salt.size(),
                     params.n, params.r, params.p, maxmem, out.data(),
                     out.size()) != 1) {
    fail(ErrorCode::kInvalidArgument, "scrypt rejected parameters");
  }
  return out;
}

VolumeKey derive_key(std::string_view password, Volume volume,
                     std::span<const uint8_t> salt, const KdfParams& params) {
  if (password.empty()) fail(ErrorCode::kInvalidArgument, "empty password");
  std::vector<uint8_t> s(salt.begin(), salt.end());
  const std::string label = std::string("pearl/") + volume_name(volume);
  s.insert(s.end(), label.begin(), label.end());
  const auto raw = scrypt(password, s, params, 32);
  VolumeKey key;
  std::copy(raw.begin(), raw.end(), key.bytes.begin());
  key.volume = volume;
  return key;
}

void ctr_xor(const VolumeKey& key, const PageIv& iv,
             std::span<const uint8_t> in, std::span<uint8_t> out) {
  if (in.size() != out.size()) {
    fail(ErrorCode::kInvalidArgument, "ctr_xor length mismatch");
  }
  if (in.size() > kMaxCtrBytes) {
    fail(ErrorCode::kOutOfRange, "payload exceeds counter space");
  }
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(
      EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free);
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_ctr(), nullptr,
                                 key.bytes.data(), iv.data()) != 1) {
    fail(ErrorCode::kInternal, "AES-CTR init failed");
  }
  size_t done = 0;
  while (done < in.size()) {
    const int chunk = static_cast<int>(std::min<size_t>(in.size() - done, 1 << 30));
    int outl = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data() + done, &outl, in.data() + done,
                          chunk) != 1) {
      fail(ErrorCode::kInternal, "AES-CTR update failed");
    }
    done += static_cast<size_t>(outl);
  }
}

std::vector<uint8_t> encrypt_payload(const VolumeKey& key, const PageIv& iv,
                                     std::span<const uint8_t> plaintext) {
  std::vector<uint8_t> out(plaintext.size());
  ctr_xor(key, iv, plaintext, out);
  return out;
}

std::vector<uint8_t> decrypt_payload(const VolumeKey& key, const PageIv& iv,
                                     std::span<const uint8_t> ciphertext) {
  return encrypt_payload(key, iv, ciphertext);
}

PageIv tweak_iv(const PageIv& iv) {
  PageIv t = iv;
  t[0] ^= 0x80;
  return t;
}

PageIv random_iv(Rng& rng) {
  PageIv iv;
  for (size_t i = 0; i < iv.size(); i += 8) {
    uint64_t w = rng();
    for (size_t j = 0; j < 8; ++j) iv[i + j] = static_cast<uint8_t>(w >> (8 * j));
  }
  return iv;
}

bool IvRegistry::record(Volume volume, const PageIv& iv) {
  std::string k(1, static_cast<char>(volume));
  k.append(reinterpret_cast<const char*>(iv.data()), iv.size());
  if (!seen_.insert(std::move(k)).second) {
    ++reuse_;
    return false;
  }
  return true;
}

}  // namespace pearl
