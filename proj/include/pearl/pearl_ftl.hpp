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
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pearl/cmt.hpp"
#include "pearl/crypto.hpp"
#include "pearl/ftl.hpp"
#include "pearl/wom.hpp"

namespace pearl {

/// Internal page states. UI1 and TI1 refine the invalid first-write state;
/// I1 is only used for pages of a block being garbage collected.
enum class PageState : uint8_t { kEmpty, kV1, kUI1, kTI1, kI1, kV2, kI2 };
enum class HiddenStatus : uint8_t { kNone, kCurrent, kStale };

/// What a public-key holder can tell apart.
enum class PublicState : uint8_t { kEmpty, kV1, kI1, kV2, kI2 };

const char* page_state_name(PageState s);
const char* public_state_name(PublicState s);
PublicState observe(PageState s);
/// Single-step edges of the page state diagram, plus self loops.
bool transition_allowed(PublicState from, PublicState to);
/// Reflexive-transitive closure of `transition_allowed` without erases.
bool transition_reachable(PublicState from, PublicState to);

enum class MountMode : uint8_t { kPublicOnly, kPublicHidden };

struct PearlConfig {
  // Format-time settings, stored in the header.
  std::string code = "3,5";
  double public_fraction = 0.5625;
  double hidden_fraction = 0.1875;
  KdfParams kdf{};
  // Mount-time settings.
  size_t cmt_entries = 1024;
  uint32_t gc_min_free_blocks = 2;
  double gc_free_fraction = 0.02;
  uint64_t seed = 1;
  bool check_invariants = false;
  bool track_ivs = false;
  // Mutant: full writes ignore a pending UI1 page.
  bool broken_allocator = false;
};

/// Parses `key = value` lines. Unknown keys throw kInvalidArgument.
/// Recognized keys: preset, code, public_fraction, hidden_fraction, kdf_n,
/// kdf_r, kdf_p, cmt_entries, gc_min_free_blocks, gc_free_fraction, seed.
struct ConfigFile {
  std::string preset = "desk";
  PearlConfig pearl;
};
ConfigFile parse_config(std::string_view text);

struct Capacity {
  uint64_t public_bytes = 0;
  uint64_t hidden_bytes = 0;
  uint32_t public_pages = 0;
  uint32_t hidden_pages = 0;
  uint64_t hidden_base = 0;  // byte offset where the hidden volume starts
};

/// Plain fields of the header page in block 0.
struct PearlHeader {
  uint32_t version = 1;
  std::string code = "3,5";
  std::vector<uint8_t> salt;
  KdfParams kdf;
  uint64_t public_bytes = 0;
  uint64_t hidden_bytes = 0;
  std::array<uint8_t, 16> key_check{};  // public key verifier
};

PearlHeader read_header(const std::function<PageView(Ppn)>& page);

/// Mapping state rebuilt from a raw image by scanning OOB records and
/// translation pages.
struct RecoveredState {
  std::vector<Ppn> gtd[2];
  std::vector<Ppn> map[2];
  // Entries that differ from what the translation pages on flash say.
  std::vector<std::pair<uint32_t, Ppn>> corrections[2];
  std::vector<OobRecord> oob;          // per page; stage 0 when unprogrammed
  std::vector<int8_t> hidden_kind;     // -1 when no hidden item
  std::vector<uint32_t> hidden_lpn;
  uint64_t max_seq = 0;
};

/// Public volume only when `hidden_key` is null.
RecoveredState recover_state(const std::function<PageView(Ppn)>& page,
                             const DeviceGeometry& geometry, const WomCode& code,
                             const Capacity& cap, const VolumeKey& public_key,
                             const VolumeKey* hidden_key);

Capacity compute_capacity(const DeviceGeometry& g, const WomCode& code,
                          double public_fraction, double hidden_fraction);
/// Capacity recorded in a formatted header.
Capacity header_capacity(const DeviceGeometry& g, const WomCode& code, const PearlHeader& h);

struct MonitorReport {
  uint64_t transitions = 0;
  uint64_t illegal_transitions = 0;
  uint64_t first_writes_checked = 0;
  uint64_t priority_violations = 0;
  uint64_t full_writes_checked = 0;
  uint64_t full_writes_with_ui1 = 0;
  uint64_t invariant_failures = 0;
  std::vector<std::string> messages;  // first few problems
};

struct Request {
  OpKind op = OpKind::kRead;
  Volume volume = Volume::kPublic;
  uint32_t lpn = 0;
  std::vector<uint8_t> data;  // filled in for reads
};

/// Deniable FTL: a public and a hidden volume over one device. Public data
/// is WOM-coded so every page can later carry hidden bits in a full write.
class PearlFtl final : public BlockFtl {
 public:
  /// Erases the device and writes a fresh header.
  static void format(FlashDevice& device, const PearlConfig& config,
                     std::string_view public_password);
  /// Rebuilds all state by scanning the device. A null hidden password
  /// mounts public-only.
  static std::unique_ptr<PearlFtl> mount(FlashDevice& device,
                                         std::string_view public_password,
                                         const std::string* hidden_password,
                                         const PearlConfig& runtime = {});

  ~PearlFtl() override;

  MountMode mode() const { return hidden_mode_ ? MountMode::kPublicHidden : MountMode::kPublicOnly; }
  const Capacity& capacity() const { return cap_; }
  const PageCodecLayout& layout() const { return layout_; }
  const WomCode& code() const { return code_; }

  // BlockFtl
  size_t payload_bytes(Volume v) const override;
  uint32_t logical_pages(Volume v) const override;
  bool has_volume(Volume v) const override;
  void write_page(Volume v, uint32_t lpn, std::span<const uint8_t> data) override;
  std::vector<uint8_t> read_page(Volume v, uint32_t lpn) override;
  void trim_page(Volume v, uint32_t lpn) override;
  const FtlStats& stats() const override { return stats_; }
  FlashDevice& device() override { return dev_; }

  void public_write(uint32_t lpn, std::span<const uint8_t> data);
  void hidden_write(uint32_t lpn, std::span<const uint8_t> data);
  std::vector<uint8_t> public_read(uint32_t lpn);
  std::vector<uint8_t> hidden_read(uint32_t lpn);
  void trim(uint32_t lpn, Volume v);

  /// Byte-addressed entry point. Public offsets start at 0, hidden offsets
  /// at the physical device capacity. Lengths are whole payload pages.
  std::vector<uint8_t> submit(uint64_t offset, OpKind op, uint64_t length,
                              std::span<const uint8_t> data = {});
  /// Runs requests in order, except that a hidden write takes a later public
  /// write of the batch as its cloak when that LPN is not otherwise used.
  void submit_batch(std::vector<Request>& requests);

  /// Runs one collection cycle regardless of the free-block watermark.
  void gc_run();
  std::optional<uint32_t> gc_select_victim() const;
  /// Drains the TIQ, flushes the CMT and persists both directories.
  void prepare_unmount();

  Ppn translate(Volume v, uint32_t lpn);

  PageState page_state(Ppn p) const { return pages_[p].st; }
  HiddenStatus hidden_status(Ppn p) const { return pages_[p].hid; }
  std::optional<Ppn> current_ui1() const { return ui1_; }
  std::vector<Ppn> tiq() const { return {tiq_.begin(), tiq_.end()}; }
  Ppn current_empty_page() const { return cursor_; }
  uint32_t free_blocks() const { return static_cast<uint32_t>(free_.size()); }
  uint32_t valid_public(uint32_t block) const { return valid_[block]; }
  const std::vector<uint32_t>& valid_counts() const { return valid_; }
  const MonitorReport& monitor() const { return mon_; }
  const IvRegistry& iv_registry() const { return ivs_; }
  const MappingCache& cmt() const { return cmt_; }
  /// Full consistency check; returns problems found.
  std::vector<std::string> check_invariants() const;

 private:
  struct Key {
    Volume vol;
    PageKind kind;
    uint32_t lpn;
  };
  struct PageInfo {
    PageState st = PageState::kEmpty;
    PageKind kind = PageKind::kData;
    uint32_t lpn = kNoLpn;
    HiddenStatus hid = HiddenStatus::kNone;
    PageKind hkind = PageKind::kData;
    uint32_t hlpn = kNoLpn;
  };
  enum class BlockUse : uint8_t { kHeader, kFree, kOpen, kClosed };
  enum class Reason : uint8_t { kUpdate, kRelocate, kTrim };
  struct Cloak {
    Key key;
    std::vector<uint8_t> plain;
    Ppn source = kNoPpn;    // relocated page, or kNoPpn for a host write
  };

  PearlFtl(FlashDevice& device, const PearlConfig& config);

  void load(const PearlHeader& hdr, std::string_view public_password,
            const std::string* hidden_password);
  void host_prologue();
  void host_epilogue();
  void require_hidden() const;
  void check_lpn(Volume v, uint32_t lpn) const;

  // Mapping.
  MappingCache::Entry& ensure(Volume v, uint32_t lpn);
  Ppn location(const Key& k);
  void set_location(const Key& k, Ppn p);
  std::vector<Ppn> load_translation(Volume v, uint32_t vpn);
  void write_back(Volume v, uint32_t vpn);
  void flush_all();

  // Placement.
  Ppn take_empty();
  Ppn write_public_item(const Key& k, std::span<const uint8_t> plain, Reason reason);
  /// `moving_from` marks a relocation of the copy at that page; it is dropped
  /// (returning kNoPpn) if the item moves while a cloak is found.
  Ppn write_hidden_item(const Key& hk, std::span<const uint8_t> plain,
                        std::optional<Cloak> incoming, Ppn forced_source = kNoPpn,
                        Ppn moving_from = kNoPpn);
  void fill_ui1();
  Ppn select_cloak_source() const;
  void invalidate_public(Ppn p, Reason reason);
  void set_state(Ppn p, PageState to);
  void tiq_push(Ppn p);
  void tiq_remove(Ppn p);

  // Device access.
  std::vector<uint8_t> oob_for(const Key& k, uint8_t stage, const PageIv& iv,
                               const std::array<uint8_t, 16>& tag);
  void program_first(Ppn p, const Key& k, std::span<const uint8_t> plain);
  void program_second(Ppn p, const Key& k, std::span<const uint8_t> plain);
  void program_full(Ppn p, const Key& pk, std::span<const uint8_t> pplain,
                    const Key& hk, std::span<const uint8_t> hplain);
  std::vector<uint8_t> read_public_payload(Ppn p);
  std::vector<uint8_t> read_hidden_payload(Ppn p);
  std::vector<uint8_t> padded(std::span<const uint8_t> plain, Volume v) const;

  // Collection.
  void gc_if_needed();
  void collect(uint32_t victim);
  uint32_t gc_threshold() const;

  void persist_header();
  void note(const std::string& msg);

  FlashDevice& dev_;
  PearlConfig cfg_;
  WomCode code_;
  PageCodecLayout layout_;
  Capacity cap_;
  VolumeKey kpub_;
  VolumeKey khid_;
  bool hidden_mode_ = false;
  PearlHeader header_;
  uint32_t ppb_ = 0;
  uint32_t epp_[2] = {0, 0};
  std::vector<Ppn> gtd_[2];
  std::vector<PageInfo> pages_;
  std::vector<uint32_t> valid_;
  std::vector<BlockUse> use_;
  std::deque<uint32_t> free_;
  Ppn cursor_ = kNoPpn;
  std::optional<Ppn> ui1_;
  std::list<Ppn> tiq_;
  std::unordered_map<Ppn, std::list<Ppn>::iterator> tiq_pos_;
  std::unordered_map<uint32_t, Ppn> trimmed_ti1_;
  MappingCache cmt_;
  // Translation pages being written back, with entries queued by nested
  // evictions of the same page.
  std::map<std::pair<uint8_t, uint32_t>, std::vector<std::pair<uint32_t, Ppn>>> wb_pending_;
  Rng rng_;
  uint64_t seq_ = 1;
  FtlStats stats_;
  MonitorReport mon_;
  IvRegistry ivs_;
  std::vector<Ppn> reserved_;
  int64_t victim_ = -1;
  bool in_gc_ = false;
  uint64_t persisted_ops_ = UINT64_MAX;
};

}  // namespace pearl
