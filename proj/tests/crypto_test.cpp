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

#include <bit>

#include <gtest/gtest.h>

#include "pearl/error.hpp"

namespace pearl {
namespace {

std::vector<uint8_t> hex(std::string_view s) {
  std::vector<uint8_t> out;
  for (size_t i = 0; i + 1 < s.size(); i += 2) {
    out.push_back(static_cast<uint8_t>(std::stoi(std::string(s.substr(i, 2)), nullptr, 16)));
  }
  return out;
}

const KdfParams kFast{1024, 8, 1};

TEST(KdfTest, Rfc7914Vector) {
  const std::string salt = "NaCl";
  const auto out = scrypt("password",
                          {reinterpret_cast<const uint8_t*>(salt.data()), salt.size()},
                          KdfParams{1024, 8, 16}, 64);
  EXPECT_EQ(out, hex("fdbabe1c9d3472007856e7190d01e9fe7c6ad7cbc8237830e77376634b373162"
                     "2eaf30d92e22a3886ff109279d9830dac727afb94a83ee6d8360cbdfa2cc0640"));
}

TEST(KdfTest, DeterministicAndSeparated) {
  const std::vector<uint8_t> salt(16, 7);
  const VolumeKey a = derive_key("hunter2", Volume::kPublic, salt, kFast);
  const VolumeKey b = derive_key("hunter2", Volume::kPublic, salt, kFast);
  const VolumeKey h = derive_key("hunter2", Volume::kHidden, salt, kFast);
  EXPECT_EQ(a.bytes, b.bytes);
  EXPECT_NE(a.bytes, h.bytes);
  EXPECT_EQ(h.volume, Volume::kHidden);
}

TEST(KdfTest, EmptyPasswordRejected) {
  const std::vector<uint8_t> salt(16, 0);
  try {
    derive_key("", Volume::kPublic, salt, kFast);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(CtrTest, Sp80038aVector) {
  VolumeKey key;
  const auto k = hex("603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4");
  std::copy(k.begin(), k.end(), key.bytes.begin());
  PageIv iv;
  const auto c = hex("f0f1f2f3f4f5f6f7f8f9fafbfcfdfeff");
  std::copy(c.begin(), c.end(), iv.begin());
  const auto plain = hex(
      "6bc1bee22e409f96e93d7e117393172aae2d8a571e03ac9c9eb76fac45af8e51"
      "30c81c46a35ce411e5fbc1191a0a52eff69f2445df4f9b17ad2b417be66c3710");
  const auto expect = hex(
      "601ec313775789a5b7a7f504bbf3d228f443e3ca4d62b59aca84e990cacaf5c5"
      "2b0930daa23de94ce87017ba2d84988ddfc9c58db67aada613c2dd08457941a6");
  EXPECT_EQ(encrypt_payload(key, iv, plain), expect);
  EXPECT_EQ(decrypt_payload(key, iv, expect), plain);
}

TEST(CtrTest, RoundTripPayloadSizes) {
  Rng rng(3);
  VolumeKey key;
  for (auto& b : key.bytes) b = static_cast<uint8_t>(rng());
  for (size_t len : {409u, 1227u, 3276u, 9828u}) {
    std::vector<uint8_t> x(len);
    for (auto& b : x) b = static_cast<uint8_t>(rng());
    const PageIv iv = random_iv(rng);
    EXPECT_EQ(decrypt_payload(key, iv, encrypt_payload(key, iv, x)), x);
  }
}

TEST(CtrTest, DifferentIvsDifferentCiphertexts) {
  Rng rng(5);
  VolumeKey key;
  const std::vector<uint8_t> x(9828, 0x5C);
  EXPECT_NE(encrypt_payload(key, random_iv(rng), x),
            encrypt_payload(key, random_iv(rng), x));
}

TEST(CtrTest, MonobitOnZeroPlaintext) {
  Rng rng(9);
  VolumeKey key;
  for (auto& b : key.bytes) b = static_cast<uint8_t>(rng());
  const std::vector<uint8_t> zeros(1000000, 0);
  const auto ct = encrypt_payload(key, random_iv(rng), zeros);
  uint64_t ones = 0;
  for (uint8_t b : ct) ones += std::popcount(b);
  const double frac = double(ones) / (8.0 * ct.size());
  EXPECT_GE(frac, 0.49);
  EXPECT_LE(frac, 0.51);
}

TEST(CtrTest, TweakedIvDiffers) {
  PageIv iv{};
  EXPECT_NE(tweak_iv(iv), iv);
  EXPECT_EQ(tweak_iv(tweak_iv(iv)), iv);
}

TEST(IvRegistryTest, DetectsReuse) {
  IvRegistry reg;
  Rng rng(1);
  const PageIv iv = random_iv(rng);
  EXPECT_TRUE(reg.record(Volume::kPublic, iv));
  EXPECT_TRUE(reg.record(Volume::kHidden, iv));
  EXPECT_FALSE(reg.record(Volume::kPublic, iv));
  EXPECT_EQ(reg.reuse_count(), 1u);
  for (int i = 0; i < 10000; ++i) EXPECT_TRUE(reg.record(Volume::kPublic, random_iv(rng)));
}

}  // namespace
}  // namespace pearl
