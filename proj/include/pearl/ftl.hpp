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
#include <span>
#include <string>
#include <vector>

#include "pearl/crypto.hpp"
#include "pearl/flash.hpp"

namespace pearl {

inline constexpr uint32_t kNoLpn = 0xFFFFFFFFu;

enum class PageKind : uint8_t { kData = 0, kTranslation = 1 };

/// Fixed OOB record. Offsets: iv 0..15, lpn 16..19 (LE), stage 20, kind 21,
/// seq 22..29 (LE), hidden tag 30..45.
struct OobRecord {
  PageIv iv{};
  uint32_t lpn = kNoLpn;
  uint8_t stage = 0;  // 0 unprogrammed, 1 first write, 2 second or full write
  PageKind kind = PageKind::kData;
  uint64_t seq = 0;
  std::array<uint8_t, 16> hidden_tag{};

  static constexpr size_t kSize = 46;
  std::vector<uint8_t> encode(size_t oob_bytes) const;
  static OobRecord decode(std::span<const uint8_t> oob);
};

/// Index of the smallest `valid[b]` among blocks with `candidate[b]` set,
/// lowest index on ties. Returns -1 when there is no candidate.
int64_t select_min_valid(std::span<const uint32_t> valid,
                         const std::vector<bool>& candidate);

enum class OpKind : uint8_t { kRead = 0, kWrite = 1, kTrim = 2 };

/// Device and logical counters kept by both FTLs.
struct FtlStats {
  uint64_t host_reads[2] = {0, 0};   // indexed by Volume
  uint64_t host_writes[2] = {0, 0};
  uint64_t host_trims[2] = {0, 0};
  uint64_t logical_bytes_written[2] = {0, 0};
  // Codeword bytes that carry each volume's host data. Cloak, relocation and
  // translation traffic is counted separately below.
  uint64_t physical_bytes_written[2] = {0, 0};
  uint64_t first_writes = 0;
  uint64_t second_writes = 0;
  uint64_t full_writes = 0;
  uint64_t translation_reads = 0;
  uint64_t translation_writes[2] = {0, 0};
  uint64_t relocations = 0;        // public pages moved by GC or unmount
  uint64_t cloak_relocations = 0;  // public pages moved to cloak or fill UI1
  uint64_t hidden_relocations = 0;
  uint64_t hidden_lost = 0;        // hidden items dropped by public-only GC
  uint64_t gc_runs = 0;
  uint64_t cmt_hits = 0;
  uint64_t cmt_misses = 0;
};

/// Page-granular logical block interface shared by the FTLs so the bench can
/// drive either.
class BlockFtl {
 public:
  virtual ~BlockFtl() = default;

  virtual size_t payload_bytes(Volume v) const = 0;
  virtual uint32_t logical_pages(Volume v) const = 0;
  virtual bool has_volume(Volume v) const = 0;

  virtual void write_page(Volume v, uint32_t lpn, std::span<const uint8_t> data) = 0;
  virtual std::vector<uint8_t> read_page(Volume v, uint32_t lpn) = 0;
  virtual void trim_page(Volume v, uint32_t lpn) = 0;

  virtual const FtlStats& stats() const = 0;
  virtual FlashDevice& device() = 0;
};

}  // namespace pearl
