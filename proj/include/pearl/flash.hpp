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
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pearl {

using Ppn = uint32_t;
inline constexpr Ppn kNoPpn = 0xFFFFFFFFu;

struct DeviceGeometry {
  uint32_t dies = 1;
  uint32_t planes_per_die = 1;
  uint32_t blocks_per_plane = 64;
  uint32_t pages_per_block = 32;
  uint32_t page_bytes = 2048;
  uint32_t oob_bytes = 64;

  /// 1 x 1 x 64 blocks x 32 pages x 2 KiB; small enough for exhaustive tests.
  static DeviceGeometry desk();
  /// (1, 2, 1437, 768) x 16 KiB as published. Note this multiplies out to
  /// about 33.7 GiB rather than the quoted 64 GB.
  static DeviceGeometry paper();
  static DeviceGeometry preset(const std::string& name);

  uint32_t total_blocks() const { return dies * planes_per_die * blocks_per_plane; }
  uint64_t total_pages() const {
    return uint64_t{total_blocks()} * pages_per_block;
  }
  uint64_t physical_bytes() const { return total_pages() * page_bytes; }
  void validate() const;
  bool operator==(const DeviceGeometry&) const = default;
};

struct DeviceTimings {
  uint64_t read_us = 130;
  uint64_t program_us = 900;
  uint64_t erase_us = 10000;
};

struct PageView {
  std::span<const uint8_t> data;
  std::span<const uint8_t> oob;
};

struct WearStats {
  std::vector<uint32_t> block_erases;
  std::vector<uint32_t> page_programs;  // lifetime programs per page
  uint64_t total_programs = 0;
};

/// Raw device image. `program_counts` records programs since the last erase so
/// a restored device enforces the same limits.
struct Snapshot {
  DeviceGeometry geometry;
  std::vector<uint8_t> data;
  std::vector<uint8_t> oob;
  std::vector<uint32_t> erase_counts;
  std::vector<uint8_t> program_counts;

  PageView page(Ppn ppn) const;
  uint32_t block_of(Ppn ppn) const { return ppn / geometry.pages_per_block; }
  bool operator==(const Snapshot&) const = default;
};

/// Snapshot file: "PRLSNAP1", six little-endian u32 geometry fields (dies,
/// planes_per_die, blocks_per_plane, pages_per_block, page_bytes, oob_bytes),
/// then every page's data, every page's OOB, per-block u32 erase counts and
/// per-page u8 program counts.
std::vector<uint8_t> encode_snapshot(const Snapshot& snap);
Snapshot decode_snapshot(std::span<const uint8_t> bytes);
void write_snapshot_file(const Snapshot& snap, const std::string& path);
Snapshot read_snapshot_file(const std::string& path);

/// Bit-accurate NAND model. Erased cells read as 0 and programming may only
/// set bits; a page takes at most two programs between erases. OOB bytes are
/// rewritten whole on each program. Every operation advances a serial busy
/// clock.
class FlashDevice {
 public:
  explicit FlashDevice(DeviceGeometry geometry, DeviceTimings timings = {});
  static FlashDevice restore(const Snapshot& snap, DeviceTimings timings = {});

  FlashDevice(FlashDevice&&) noexcept = default;
  FlashDevice& operator=(FlashDevice&&) noexcept = default;

  const DeviceGeometry& geometry() const { return geometry_; }
  const DeviceTimings& timings() const { return timings_; }

  /// Returned views stay valid until the page is next programmed or erased.
  PageView read_page(Ppn ppn);
  void program_page(Ppn ppn, std::span<const uint8_t> data,
                    std::span<const uint8_t> oob);
  void erase_block(uint32_t block);

  /// Untimed access for analysis code and tests.
  PageView peek(Ppn ppn) const;
  uint8_t program_count(Ppn ppn) const;
  uint32_t erase_count(uint32_t block) const;

  Snapshot snapshot() const;
  WearStats wear_stats() const;

  uint64_t clock_us() const { return clock_us_; }
  uint64_t reads() const { return reads_; }
  uint64_t programs() const { return programs_; }
  uint64_t erases() const { return erases_; }

  uint32_t block_of(Ppn ppn) const { return ppn / geometry_.pages_per_block; }
  Ppn first_ppn(uint32_t block) const { return block * geometry_.pages_per_block; }

 private:
  struct Slot {
    std::unique_ptr<uint8_t[]> bytes;  // data then oob; null when erased
    uint8_t programmed = 0;
  };

  void check_ppn(Ppn ppn) const;
  PageView view(const Slot& s) const;

  DeviceGeometry geometry_;
  DeviceTimings timings_;
  std::vector<Slot> pages_;
  std::vector<uint32_t> erase_counts_;
  std::vector<uint32_t> lifetime_programs_;
  std::vector<uint8_t> zero_;
  uint64_t clock_us_ = 0;
  uint64_t reads_ = 0;
  uint64_t programs_ = 0;
  uint64_t erases_ = 0;
};

}  // namespace pearl
