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
#include <deque>
#include <optional>
#include <vector>

#include "pearl/cmt.hpp"
#include "pearl/ftl.hpp"

namespace pearl {

struct DftlConfig {
  double logical_fraction = 0.84;
  size_t cmt_entries = 1024;
  uint32_t gc_min_free_blocks = 2;
  double gc_free_fraction = 0.02;
};

/// Demand-based page-mapping FTL without deniability. Pages are written once
/// per erase; data and translation pages go to separate current blocks.
class Dftl final : public BlockFtl {
 public:
  Dftl(FlashDevice& device, DftlConfig config = {});

  size_t payload_bytes(Volume) const override { return page_bytes_; }
  uint32_t logical_pages(Volume v) const override {
    return v == Volume::kPublic ? logical_pages_ : 0;
  }
  bool has_volume(Volume v) const override { return v == Volume::kPublic; }

  void write_page(Volume v, uint32_t lpn, std::span<const uint8_t> data) override;
  std::vector<uint8_t> read_page(Volume v, uint32_t lpn) override;
  void trim_page(Volume v, uint32_t lpn) override;

  const FtlStats& stats() const override { return stats_; }
  FlashDevice& device() override { return dev_; }

  void write(uint32_t lpn, std::span<const uint8_t> data);
  std::vector<uint8_t> read(uint32_t lpn);
  void trim(uint32_t lpn);
  /// Resolves through the CMT, loading the translation page on a miss.
  Ppn translate(uint32_t lpn);

  /// Block with the fewest valid pages among candidates; lowest id on ties.
  std::optional<uint32_t> gc_select_victim() const;
  /// Relocates the victim's valid pages and erases it. Returns pages reclaimed.
  uint32_t gc_run();

  uint32_t entries_per_translation_page() const { return entries_per_tp_; }
  uint32_t free_blocks() const { return static_cast<uint32_t>(free_.size()); }
  uint32_t valid_pages(uint32_t block) const { return valid_[block]; }
  const MappingCache& cmt() const { return cmt_; }
  uint32_t data_block() const { return data_cursor_ / ppb_; }
  /// Writes back every dirty CMT entry.
  void flush();

 private:
  enum class State : uint8_t { kEmpty, kValid, kInvalid };
  struct PageInfo {
    State state = State::kEmpty;
    PageKind kind = PageKind::kData;
    uint32_t lpn = kNoLpn;
  };

  void check_lpn(uint32_t lpn) const;
  void maybe_gc();
  Ppn next_page(Ppn& cursor);
  Ppn program(Ppn& cursor, PageKind kind, uint32_t lpn, std::span<const uint8_t> data);
  void invalidate(Ppn ppn);
  MappingCache::Entry& ensure(uint32_t lpn);
  void write_back(uint32_t vpn);
  std::vector<Ppn> load_translation(uint32_t vpn);

  FlashDevice& dev_;
  DftlConfig cfg_;
  uint32_t ppb_;
  uint32_t page_bytes_;
  uint32_t logical_pages_;
  uint32_t entries_per_tp_;
  uint32_t gc_threshold_;
  std::vector<PageInfo> pages_;
  std::vector<uint32_t> valid_;
  std::vector<Ppn> gtd_;
  std::deque<uint32_t> free_;
  std::vector<bool> is_free_;
  Ppn data_cursor_ = kNoPpn;
  Ppn trans_cursor_ = kNoPpn;
  MappingCache cmt_;
  FtlStats stats_;
  uint64_t seq_ = 1;
  bool in_gc_ = false;
};

}  // namespace pearl
