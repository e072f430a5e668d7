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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pearl/crypto.hpp"
#include "pearl/ftl.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl/wom.hpp"

namespace pearl::detail {

inline constexpr char kHeaderMagic[9] = "PRLHDR01";
inline constexpr char kHiddenTagMagic[9] = "PEARLHID";
inline constexpr char kGtdMagic[9] = "PRLGTD01";

void put_le(std::vector<uint8_t>& out, size_t pos, uint64_t v, int bytes);
uint64_t get_le(std::span<const uint8_t> in, size_t pos, int bytes);
uint8_t code_id(const std::string& name);
std::string code_name(uint8_t id);
std::array<uint8_t, 16> key_check(const VolumeKey& kpub);
std::vector<uint8_t> encode_header(const PearlHeader& h, size_t page_bytes);
std::vector<uint8_t> tag_plain(PageKind kind, uint32_t lpn);
bool open_tag(const VolumeKey& khid, const OobRecord& oob, PageKind& kind, uint32_t& lpn);
std::vector<uint8_t> decode_public(const WomCode& code, const PageCodecLayout& layout,
                                   const VolumeKey& kpub, const PageView& v,
                                   const OobRecord& oob);
std::vector<uint8_t> decode_hidden(const WomCode& code, const PageCodecLayout& layout,
                                   const VolumeKey& khid, const PageView& v,
                                   const OobRecord& oob);
std::vector<Ppn> unpack_entries(std::span<const uint8_t> payload, uint32_t count);
std::vector<uint8_t> pack_entries(const std::vector<Ppn>& e, size_t bytes);

}  // namespace pearl::detail
