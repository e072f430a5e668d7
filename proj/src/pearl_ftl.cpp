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

#include "pearl/pearl_ftl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pearl/error.hpp"
#include "pearl_internal.hpp"

namespace pearl {

using namespace detail;

namespace {

constexpr size_t kMaxNotes = 16;

int vi(Volume v) { return static_cast<int>(v); }

size_t gtd_blob_pages(size_t entries, size_t page_bytes) {
  return (16 + 12 + 4 * entries + page_bytes - 1) / page_bytes;
}

}  // namespace

PearlFtl::PearlFtl(FlashDevice& device, const PearlConfig& config)
    : dev_(device),
      cfg_(config),
      code_(WomCode::builtin_3_5()),
      cmt_(config.cmt_entries),
      rng_(config.seed) {
  if (cfg_.cmt_entries < 8) fail(ErrorCode::kInvalidArgument, "cmt_entries must be >= 8");
}

PearlFtl::~PearlFtl() = default;

void PearlFtl::format(FlashDevice& dev, const PearlConfig& config,
                      std::string_view public_password) {
  if (public_password.empty()) fail(ErrorCode::kInvalidArgument, "empty password");
  const DeviceGeometry& g = dev.geometry();
  const WomCode code = WomCode::by_name(config.code);
  const Capacity cap = compute_capacity(g, code, config.public_fraction, config.hidden_fraction);
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  const size_t epp_pub = layout.public_payload_bytes() / 4;
  const size_t epp_hid = layout.hidden_payload_bytes() / 4;
  const size_t gtd_pages =
      gtd_blob_pages((cap.public_pages + epp_pub - 1) / epp_pub, g.page_bytes) +
      gtd_blob_pages((cap.hidden_pages + epp_hid - 1) / epp_hid, g.page_bytes);
  if (1 + gtd_pages > g.pages_per_block) {
    fail(ErrorCode::kInvalidArgument, "directories do not fit in the header block");
  }
  if (g.total_blocks() < 4) fail(ErrorCode::kInvalidArgument, "device too small");
  for (uint32_t b = 0; b < g.total_blocks(); ++b) {
    bool used = false;
    for (Ppn p = dev.first_ppn(b); p < dev.first_ppn(b) + g.pages_per_block && !used; ++p) {
      used = dev.program_count(p) > 0;
    }
    if (used) dev.erase_block(b);
  }
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  PearlHeader h;
  h.code = config.code;
  h.salt.resize(16);
  for (auto& b : h.salt) b = static_cast<uint8_t>(rng());
  h.kdf = config.kdf;
  h.public_bytes = cap.public_bytes;
  h.hidden_bytes = cap.hidden_bytes;
  h.key_check = key_check(derive_key(public_password, Volume::kPublic, h.salt, h.kdf));
  dev.program_page(0, encode_header(h, g.page_bytes), {});
}

std::unique_ptr<PearlFtl> PearlFtl::mount(FlashDevice& dev, std::string_view public_password,
                                          const std::string* hidden_password,
                                          const PearlConfig& runtime) {
  const PearlHeader h = read_header([&](Ppn p) { return dev.peek(p); });
  std::unique_ptr<PearlFtl> ftl(new PearlFtl(dev, runtime));
  ftl->load(h, public_password, hidden_password);
  return ftl;
}

void PearlFtl::load(const PearlHeader& hdr, std::string_view public_password,
                    const std::string* hidden_password) {
  header_ = hdr;
  const DeviceGeometry& g = dev_.geometry();
  code_ = WomCode::by_name(hdr.code);
  layout_ = PageCodecLayout::for_page(code_, g.page_bytes);
  cap_ = header_capacity(g, code_, hdr);
  kpub_ = derive_key(public_password, Volume::kPublic, hdr.salt, hdr.kdf);
  if (key_check(kpub_) != hdr.key_check) fail(ErrorCode::kInvalidArgument, "wrong public password");
  hidden_mode_ = hidden_password != nullptr;
  if (hidden_mode_) khid_ = derive_key(*hidden_password, Volume::kHidden, hdr.salt, hdr.kdf);
  ppb_ = g.pages_per_block;
  epp_[0] = static_cast<uint32_t>(layout_.public_payload_bytes() / 4);
  epp_[1] = static_cast<uint32_t>(layout_.hidden_payload_bytes() / 4);

  const uint32_t npages = static_cast<uint32_t>(g.total_pages());
  const uint32_t nblocks = g.total_blocks();
  const RecoveredState rs = recover_state([&](Ppn p) { return dev_.peek(p); }, g, code_,
                                          cap_, kpub_, hidden_mode_ ? &khid_ : nullptr);
  for (int v = 0; v < 2; ++v) {
    const uint32_t logical = v == 0 ? cap_.public_pages : cap_.hidden_pages;
    gtd_[v] = rs.gtd[v];
    gtd_[v].resize((logical + epp_[v] - 1) / epp_[v], kNoPpn);
  }
  pages_.assign(npages, PageInfo{});
  valid_.assign(nblocks, 0);
  use_.assign(nblocks, BlockUse::kClosed);
  use_[0] = BlockUse::kHeader;
  seq_ = rs.max_seq + 2;

  auto is_current_public = [&](Ppn p) {
    const OobRecord& o = rs.oob[p];
    if (o.kind == PageKind::kTranslation) {
      return o.lpn < gtd_[0].size() && gtd_[0][o.lpn] == p;
    }
    return o.lpn < rs.map[0].size() && rs.map[0][o.lpn] == p;
  };
  std::vector<Ppn> stale_first;
  for (Ppn p = ppb_; p < npages; ++p) {
    const OobRecord& o = rs.oob[p];
    if (o.stage == 0) continue;
    PageInfo& pi = pages_[p];
    pi.kind = o.kind;
    pi.lpn = o.lpn;
    const bool cur = is_current_public(p);
    if (o.stage == 1) {
      pi.st = cur ? PageState::kV1 : PageState::kTI1;
      if (!cur) stale_first.push_back(p);
    } else {
      pi.st = cur ? PageState::kV2 : PageState::kI2;
    }
    if (cur) ++valid_[p / ppb_];
    if (rs.hidden_kind[p] >= 0) {
      pi.hkind = static_cast<PageKind>(rs.hidden_kind[p]);
      pi.hlpn = rs.hidden_lpn[p];
      const bool hcur = pi.hkind == PageKind::kTranslation
                            ? pi.hlpn < gtd_[1].size() && gtd_[1][pi.hlpn] == p
                            : pi.hlpn < rs.map[1].size() && rs.map[1][pi.hlpn] == p;
      pi.hid = hcur ? HiddenStatus::kCurrent : HiddenStatus::kStale;
    }
  }
  // The newest stale first-write page is the pending UI1 page; any others
  // predate a crash and are queued as TI1.
  std::sort(stale_first.begin(), stale_first.end(),
            [&](Ppn a, Ppn b) { return rs.oob[a].seq < rs.oob[b].seq; });
  if (!stale_first.empty()) {
    ui1_ = stale_first.back();
    pages_[*ui1_].st = PageState::kUI1;
    stale_first.pop_back();
  }
  for (Ppn p : stale_first) {
    tiq_push(p);
    const PageInfo& pi = pages_[p];
    if (pi.kind == PageKind::kData && rs.map[0][pi.lpn] == kNoPpn) trimmed_ti1_[pi.lpn] = p;
  }

  // Blocks: programmed pages form a prefix of each block.
  uint64_t open_seq = 0;
  int64_t open_block = -1;
  for (uint32_t b = 1; b < nblocks; ++b) {
    uint32_t programmed = 0;
    uint64_t top = 0;
    for (Ppn p = b * ppb_; p < (b + 1) * ppb_; ++p) {
      if (rs.oob[p].stage != 0) {
        ++programmed;
        top = std::max(top, rs.oob[p].seq);
      }
    }
    if (programmed == 0) {
      use_[b] = BlockUse::kFree;
      free_.push_back(b);
    } else if (programmed < ppb_ && top >= open_seq) {
      open_seq = top;
      open_block = b;
    }
  }
  if (open_block >= 0) {
    const uint32_t b = static_cast<uint32_t>(open_block);
    use_[b] = BlockUse::kOpen;
    Ppn p = b * ppb_;
    while (rs.oob[p].stage != 0) ++p;
    cursor_ = p;
  }

  for (int v = 0; v < (hidden_mode_ ? 2 : 1); ++v) {
    for (const auto& [lpn, ppn] : rs.corrections[v]) {
      cmt_.insert({static_cast<uint8_t>(v), lpn}, ppn, true);
    }
  }
  persisted_ops_ = dev_.programs() + dev_.erases();
}

size_t PearlFtl::payload_bytes(Volume v) const {
  return v == Volume::kPublic ? layout_.public_payload_bytes() : layout_.hidden_payload_bytes();
}

uint32_t PearlFtl::logical_pages(Volume v) const {
  return v == Volume::kPublic ? cap_.public_pages : cap_.hidden_pages;
}

bool PearlFtl::has_volume(Volume v) const { return v == Volume::kPublic || hidden_mode_; }

void PearlFtl::require_hidden() const {
  if (!hidden_mode_) fail(ErrorCode::kModeRejected, "hidden volume not mounted");
}

void PearlFtl::check_lpn(Volume v, uint32_t lpn) const {
  if (lpn >= logical_pages(v)) {
    fail(ErrorCode::kOutOfRange, std::string(volume_name(v)) + " lpn " + std::to_string(lpn) +
                                     " out of range");
  }
}

void PearlFtl::note(const std::string& msg) {
  if (mon_.messages.size() < kMaxNotes) mon_.messages.push_back(msg);
}

// ---------------------------------------------------------------- mapping

MappingCache::Entry& PearlFtl::ensure(Volume v, uint32_t lpn) {
  const MappingCache::Key key{static_cast<uint8_t>(v), lpn};
  if (auto* e = cmt_.find(key)) {
    ++stats_.cmt_hits;
    return *e;
  }
  ++stats_.cmt_misses;
  while (cmt_.full()) {
    const auto victim = cmt_.lru_victim();
    if (!victim) break;
    if (cmt_.peek(*victim)->dirty) {
      write_back(static_cast<Volume>(victim->volume), victim->lpn / epp_[victim->volume]);
    }
    if (const auto* e = cmt_.peek(*victim); e && e->pins == 0 && !e->dirty) cmt_.erase(*victim);
  }
  // Nested write-backs may have loaded the entry already.
  if (auto* e = cmt_.find(key)) return *e;
  const uint32_t vpn = lpn / epp_[vi(v)];
  Ppn ppn = kNoPpn;
  if (gtd_[vi(v)][vpn] != kNoPpn) ppn = load_translation(v, vpn)[lpn % epp_[vi(v)]];
  if (auto it = wb_pending_.find({static_cast<uint8_t>(v), vpn}); it != wb_pending_.end()) {
    for (const auto& [l, p] : it->second) {
      if (l == lpn) ppn = p;
    }
  }
  return cmt_.insert(key, ppn, false);
}

std::vector<Ppn> PearlFtl::load_translation(Volume v, uint32_t vpn) {
  std::vector<Ppn> entries(epp_[vi(v)], kNoPpn);
  const Ppn tp = gtd_[vi(v)][vpn];
  if (tp == kNoPpn) return entries;
  ++stats_.translation_reads;
  const auto payload = v == Volume::kPublic ? read_public_payload(tp) : read_hidden_payload(tp);
  return unpack_entries(payload, epp_[vi(v)]);
}

void PearlFtl::write_back(Volume v, uint32_t vpn) {
  const uint32_t first = vpn * epp_[vi(v)];
  const auto dirty = cmt_.dirty_in_range(static_cast<uint8_t>(v), first, epp_[vi(v)]);
  if (dirty.empty()) return;
  for (const auto& d : dirty) cmt_.mark_clean({static_cast<uint8_t>(v), d.first});
  const std::pair<uint8_t, uint32_t> id{static_cast<uint8_t>(v), vpn};
  if (auto it = wb_pending_.find(id); it != wb_pending_.end()) {
    // The outer write-back of this page picks these up.
    it->second.insert(it->second.end(), dirty.begin(), dirty.end());
    return;
  }
  wb_pending_[id] = dirty;
  size_t applied = 0;
  do {
    auto entries = load_translation(v, vpn);
    const auto pending = wb_pending_[id];
    for (const auto& [lpn, ppn] : pending) entries[lpn - first] = ppn;
    applied = pending.size();
    // Entries past the logical end stay unmapped.
    const auto payload = pack_entries(entries, payload_bytes(v));
    const Key k{v, PageKind::kTranslation, vpn};
    if (v == Volume::kPublic) {
      write_public_item(k, payload, Reason::kUpdate);
    } else {
      write_hidden_item(k, payload, std::nullopt);
    }
    ++stats_.translation_writes[vi(v)];
  } while (wb_pending_[id].size() != applied);
  wb_pending_.erase(id);
}

void PearlFtl::flush_all() {
  for (int v : {1, 0}) {
    for (const auto& k : cmt_.dirty_keys()) {
      if (k.volume != v) continue;
      const auto* e = cmt_.peek(k);
      if (e && e->dirty) write_back(static_cast<Volume>(v), k.lpn / epp_[v]);
    }
  }
}

Ppn PearlFtl::location(const Key& k) {
  if (k.kind == PageKind::kTranslation) return gtd_[vi(k.vol)][k.lpn];
  const auto* e = cmt_.peek({static_cast<uint8_t>(k.vol), k.lpn});
  if (!e) fail(ErrorCode::kInternal, "mapping entry not resident");
  return e->ppn;
}

void PearlFtl::set_location(const Key& k, Ppn p) {
  if (k.kind == PageKind::kTranslation) {
    gtd_[vi(k.vol)][k.lpn] = p;
    return;
  }
  MappingCache::Entry* e = cmt_.find({static_cast<uint8_t>(k.vol), k.lpn});
  if (!e) fail(ErrorCode::kInternal, "mapping entry not resident");
  e->ppn = p;
  e->dirty = true;
}

Ppn PearlFtl::translate(Volume v, uint32_t lpn) {
  check_lpn(v, lpn);
  if (v == Volume::kHidden) require_hidden();
  return ensure(v, lpn).ppn;
}

}  // namespace pearl
