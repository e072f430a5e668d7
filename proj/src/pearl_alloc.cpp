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

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pearl/error.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl_internal.hpp"

namespace pearl {

using namespace detail;

namespace {

int vi(Volume v) { return static_cast<int>(v); }

// Pins CMT entries for the lifetime of the guard.
class Pins {
 public:
  explicit Pins(MappingCache& cmt) : cmt_(cmt) {}
  ~Pins() {
    for (const auto& k : keys_) {
      if (auto* e = cmt_.get(k)) --e->pins;
    }
  }
  void add(Volume v, uint32_t lpn) {
    const MappingCache::Key k{static_cast<uint8_t>(v), lpn};
    if (auto* e = cmt_.get(k)) {
      ++e->pins;
      keys_.push_back(k);
    }
  }

 private:
  MappingCache& cmt_;
  std::vector<MappingCache::Key> keys_;
};

// Keeps a page out of source selection while an operation uses it.
class Reserve {
 public:
  Reserve(std::vector<Ppn>& set, Ppn p) : set_(set), p_(p) { set_.push_back(p); }
  ~Reserve() {
    auto it = std::find(set_.begin(), set_.end(), p_);
    if (it != set_.end()) set_.erase(it);
  }

 private:
  std::vector<Ppn>& set_;
  Ppn p_;
};

class Flag {
 public:
  explicit Flag(bool& f) : f_(f), old_(f) { f_ = true; }
  ~Flag() { f_ = old_; }

 private:
  bool& f_;
  bool old_;
};

bool is_valid(PageState s) { return s == PageState::kV1 || s == PageState::kV2; }

}  // namespace

// ------------------------------------------------------------ device access

std::vector<uint8_t> PearlFtl::padded(std::span<const uint8_t> plain, Volume v) const {
  const size_t n = payload_bytes(v);
  if (plain.size() > n) fail(ErrorCode::kInvalidArgument, "payload larger than a page");
  std::vector<uint8_t> out(n, 0);
  std::copy(plain.begin(), plain.end(), out.begin());
  return out;
}

std::vector<uint8_t> PearlFtl::oob_for(const Key& k, uint8_t stage, const PageIv& iv,
                                       const std::array<uint8_t, 16>& tag) {
  OobRecord o;
  o.iv = iv;
  o.lpn = k.lpn;
  o.stage = stage;
  o.kind = k.kind;
  o.seq = seq_++;
  o.hidden_tag = tag;
  return o.encode(dev_.geometry().oob_bytes);
}

namespace {

std::array<uint8_t, 16> random_tag(Rng& rng) {
  const PageIv r = random_iv(rng);
  std::array<uint8_t, 16> t;
  std::copy(r.begin(), r.end(), t.begin());
  return t;
}

}  // namespace

void PearlFtl::program_first(Ppn p, const Key& k, std::span<const uint8_t> plain) {
  ++mon_.first_writes_checked;
  if (ui1_ || !tiq_.empty()) {
    ++mon_.priority_violations;
    note("first write to empty page " + std::to_string(p) + " while UI1/TIQ pending");
  }
  const PageIv iv = random_iv(rng_);
  if (cfg_.track_ivs) ivs_.record(Volume::kPublic, iv);
  const auto ct = encrypt_payload(kpub_, iv, padded(plain, Volume::kPublic));
  const BitString raw =
      encode_page_first(layout_, code_, BitString(ct, layout_.public_bits()));
  const std::vector<uint8_t> data(raw.bytes().begin(), raw.bytes().end());
  dev_.program_page(p, data, oob_for(k, 1, iv, random_tag(rng_)));
  ++stats_.first_writes;
}

void PearlFtl::program_second(Ppn p, const Key& k, std::span<const uint8_t> plain) {
  const PageView v = dev_.read_page(p);
  const BitString existing(std::vector<uint8_t>(v.data.begin(), v.data.end()),
                           layout_.page_bits);
  const PageIv iv = random_iv(rng_);
  if (cfg_.track_ivs) ivs_.record(Volume::kPublic, iv);
  const auto ct = encrypt_payload(kpub_, iv, padded(plain, Volume::kPublic));
  const BitString raw = encode_page_second(
      layout_, code_, BitString(ct, layout_.public_bits()), existing);
  const std::vector<uint8_t> data(raw.bytes().begin(), raw.bytes().end());
  dev_.program_page(p, data, oob_for(k, 2, iv, random_tag(rng_)));
  ++stats_.second_writes;
}

void PearlFtl::program_full(Ppn p, const Key& pk, std::span<const uint8_t> pplain,
                            const Key& hk, std::span<const uint8_t> hplain) {
  ++mon_.full_writes_checked;
  if (ui1_) {
    ++mon_.full_writes_with_ui1;
    if (!cfg_.broken_allocator) note("full write to " + std::to_string(p) + " with UI1 pending");
  }
  const PageIv iv = random_iv(rng_);
  if (cfg_.track_ivs) {
    ivs_.record(Volume::kPublic, iv);
    ivs_.record(Volume::kHidden, iv);
  }
  const auto pct = encrypt_payload(kpub_, iv, padded(pplain, Volume::kPublic));
  const auto hct = encrypt_payload(khid_, iv, padded(hplain, Volume::kHidden));
  const auto sealed = encrypt_payload(khid_, tweak_iv(iv), tag_plain(hk.kind, hk.lpn));
  std::array<uint8_t, 16> tag;
  std::copy(sealed.begin(), sealed.end(), tag.begin());
  const BitString raw = encode_page_full(layout_, code_, BitString(pct, layout_.public_bits()),
                                         BitString(hct, layout_.hidden_bits()));
  const std::vector<uint8_t> data(raw.bytes().begin(), raw.bytes().end());
  // A full write stands in for two programs; keep the sequence gap.
  ++seq_;
  dev_.program_page(p, data, oob_for(pk, 2, iv, tag));
  ++stats_.full_writes;
}

std::vector<uint8_t> PearlFtl::read_public_payload(Ppn p) {
  const PageView v = dev_.read_page(p);
  return decode_public(code_, layout_, kpub_, v, OobRecord::decode(v.oob));
}

std::vector<uint8_t> PearlFtl::read_hidden_payload(Ppn p) {
  const PageView v = dev_.read_page(p);
  return decode_hidden(code_, layout_, khid_, v, OobRecord::decode(v.oob));
}

// --------------------------------------------------------------- placement

void PearlFtl::set_state(Ppn p, PageState to) {
  const PageState from = pages_[p].st;
  ++mon_.transitions;
  if (!transition_allowed(observe(from), observe(to))) {
    ++mon_.illegal_transitions;
    note(std::string("illegal transition ") + page_state_name(from) + " -> " +
         page_state_name(to) + " at " + std::to_string(p));
  }
  pages_[p].st = to;
}

void PearlFtl::tiq_push(Ppn p) {
  tiq_.push_back(p);
  tiq_pos_[p] = std::prev(tiq_.end());
}

void PearlFtl::tiq_remove(Ppn p) {
  auto it = tiq_pos_.find(p);
  if (it == tiq_pos_.end()) return;
  tiq_.erase(it->second);
  tiq_pos_.erase(it);
  const PageInfo& pi = pages_[p];
  if (pi.kind == PageKind::kData) {
    auto t = trimmed_ti1_.find(pi.lpn);
    if (t != trimmed_ti1_.end() && t->second == p) trimmed_ti1_.erase(t);
  }
}

Ppn PearlFtl::take_empty() {
  if (cursor_ == kNoPpn) {
    if (free_.empty()) fail(ErrorCode::kDeviceFull, "no free blocks");
    const uint32_t b = free_.front();
    free_.pop_front();
    use_[b] = BlockUse::kOpen;
    cursor_ = b * ppb_;
  }
  const Ppn t = cursor_;
  if ((t + 1) % ppb_ == 0) {
    use_[t / ppb_] = BlockUse::kClosed;
    cursor_ = kNoPpn;
  } else {
    cursor_ = t + 1;
  }
  return t;
}

void PearlFtl::invalidate_public(Ppn p, Reason reason) {
  PageInfo& pi = pages_[p];
  if (!is_valid(pi.st)) {
    fail(ErrorCode::kInternal, std::string("invalidating ") + page_state_name(pi.st) + " page");
  }
  --valid_[p / ppb_];
  if (static_cast<int64_t>(p / ppb_) == victim_) {
    set_state(p, pi.st == PageState::kV1 ? PageState::kI1 : PageState::kI2);
    return;
  }
  if (pi.st == PageState::kV2) {
    set_state(p, PageState::kI2);
    return;
  }
  if (reason == Reason::kUpdate && !ui1_) {
    set_state(p, PageState::kUI1);
    ui1_ = p;
    return;
  }
  if (reason == Reason::kUpdate && !cfg_.broken_allocator) {
    ++mon_.invariant_failures;
    note("second UI1 candidate " + std::to_string(p));
  }
  set_state(p, PageState::kTI1);
  tiq_push(p);
  if (reason == Reason::kTrim && pi.kind == PageKind::kData) trimmed_ti1_[pi.lpn] = p;
}

Ppn PearlFtl::write_public_item(const Key& k, std::span<const uint8_t> plain, Reason reason) {
  const Ppn old = location(k);
  Ppn t;
  bool second = true;
  if (ui1_) {
    t = *ui1_;
    ui1_.reset();
  } else if (!tiq_.empty()) {
    t = tiq_.front();
    tiq_remove(t);
  } else {
    t = take_empty();
    second = false;
  }
  if (second) {
    program_second(t, k, plain);
  } else {
    program_first(t, k, plain);
  }
  set_state(t, second ? PageState::kV2 : PageState::kV1);
  PageInfo& pi = pages_[t];
  pi.kind = k.kind;
  pi.lpn = k.lpn;
  ++valid_[t / ppb_];
  set_location(k, t);
  if (old != kNoPpn) {
    invalidate_public(old, reason);
  } else if (k.kind == PageKind::kData) {
    // A trimmed LPN coming back: its old copy now looks like an update.
    auto it = trimmed_ti1_.find(k.lpn);
    if (it != trimmed_ti1_.end()) {
      const Ppn q = it->second;
      if (pages_[q].st == PageState::kTI1 && !ui1_) {
        tiq_remove(q);
        set_state(q, PageState::kUI1);
        ui1_ = q;
      } else {
        trimmed_ti1_.erase(it);
      }
    }
  }
  return t;
}

Ppn PearlFtl::select_cloak_source() const {
  std::vector<uint32_t> blocks;
  for (uint32_t b = 1; b < valid_.size(); ++b) {
    if (use_[b] == BlockUse::kFree || use_[b] == BlockUse::kHeader) continue;
    if (static_cast<int64_t>(b) == victim_ || valid_[b] == 0) continue;
    blocks.push_back(b);
  }
  std::sort(blocks.begin(), blocks.end(), [&](uint32_t a, uint32_t b) {
    const bool oa = use_[a] == BlockUse::kOpen, ob = use_[b] == BlockUse::kOpen;
    if (oa != ob) return ob;
    if (valid_[a] != valid_[b]) return valid_[a] < valid_[b];
    return a < b;
  });
  // First-write pages never carry hidden data; taking one as a cloak cannot
  // strand another hidden item in an invalid page.
  for (int pass = 0; pass < 3; ++pass) {
    for (uint32_t b : blocks) {
      for (Ppn p = b * ppb_; p < (b + 1) * ppb_; ++p) {
        const PageInfo& pi = pages_[p];
        if (!is_valid(pi.st)) continue;
        if (pass == 0 && pi.st != PageState::kV1) continue;
        if (pass == 1 && pi.hid == HiddenStatus::kCurrent) continue;
        if (std::find(reserved_.begin(), reserved_.end(), p) == reserved_.end()) return p;
      }
    }
  }
  return kNoPpn;
}

void PearlFtl::fill_ui1() {
  while (ui1_) {
    const Ppn s = select_cloak_source();
    if (s == kNoPpn) fail(ErrorCode::kNoCloak, "no public data to fill the UI1 page");
    Reserve r(reserved_, s);
    const Key k{Volume::kPublic, pages_[s].kind, pages_[s].lpn};
    Pins pins(cmt_);
    if (k.kind == PageKind::kData) {
      ensure(Volume::kPublic, k.lpn);
      pins.add(Volume::kPublic, k.lpn);
    }
    if (!is_valid(pages_[s].st) || pages_[s].kind != k.kind || pages_[s].lpn != k.lpn) continue;
    if (!ui1_) break;
    const auto plain = read_public_payload(s);
    write_public_item(k, plain, Reason::kRelocate);
    ++stats_.cloak_relocations;
  }
}

Ppn PearlFtl::write_hidden_item(const Key& hk, std::span<const uint8_t> plain,
                                std::optional<Cloak> incoming, Ppn forced_source,
                                Ppn moving_from) {
  require_hidden();
  Pins pins(cmt_);
  if (hk.kind == PageKind::kData) {
    ensure(Volume::kHidden, hk.lpn);
    pins.add(Volume::kHidden, hk.lpn);
  }
  Cloak cloak;
  std::optional<Reserve> reserve;
  if (incoming) {
    cloak = std::move(*incoming);
    ensure(Volume::kPublic, cloak.key.lpn);
    pins.add(Volume::kPublic, cloak.key.lpn);
  } else {
    for (;;) {
      const Ppn s = forced_source != kNoPpn ? forced_source : select_cloak_source();
      if (s == kNoPpn) fail(ErrorCode::kNoCloak, "no public data to cloak a hidden write");
      reserve.emplace(reserved_, s);
      const Key k{Volume::kPublic, pages_[s].kind, pages_[s].lpn};
      if (is_valid(pages_[s].st) && k.kind == PageKind::kData) {
        ensure(Volume::kPublic, k.lpn);
        pins.add(Volume::kPublic, k.lpn);
      }
      if (!is_valid(pages_[s].st) || pages_[s].kind != k.kind || pages_[s].lpn != k.lpn) {
        reserve.reset();
        forced_source = kNoPpn;
        continue;
      }
      cloak.key = k;
      cloak.source = s;
      cloak.plain = read_public_payload(s);
      break;
    }
  }
  if (!cfg_.broken_allocator) fill_ui1();
  // Evictions above may have rewritten a translation page being relocated.
  if (moving_from != kNoPpn && location(hk) != moving_from) return kNoPpn;
  if (cloak.source != kNoPpn &&
      (!is_valid(pages_[cloak.source].st) || location(cloak.key) != cloak.source)) {
    fail(ErrorCode::kInternal, "cloak source moved during hidden write");
  }

  const Ppn t = take_empty();
  program_full(t, cloak.key, cloak.plain, hk, plain);
  set_state(t, PageState::kV2);
  PageInfo& pi = pages_[t];
  pi.kind = cloak.key.kind;
  pi.lpn = cloak.key.lpn;
  pi.hid = HiddenStatus::kCurrent;
  pi.hkind = hk.kind;
  pi.hlpn = hk.lpn;
  ++valid_[t / ppb_];

  const Ppn old_pub = location(cloak.key);
  set_location(cloak.key, t);
  if (cloak.source != kNoPpn) {
    invalidate_public(cloak.source, Reason::kRelocate);
    ++stats_.cloak_relocations;
  } else if (old_pub != kNoPpn) {
    invalidate_public(old_pub, Reason::kUpdate);
  } else if (cloak.key.kind == PageKind::kData) {
    auto it = trimmed_ti1_.find(cloak.key.lpn);
    if (it != trimmed_ti1_.end()) {
      const Ppn q = it->second;
      if (pages_[q].st == PageState::kTI1 && !ui1_) {
        tiq_remove(q);
        set_state(q, PageState::kUI1);
        ui1_ = q;
      } else {
        trimmed_ti1_.erase(it);
      }
    }
  }

  const Ppn old_hid = location(hk);
  set_location(hk, t);
  if (old_hid != kNoPpn && pages_[old_hid].hid == HiddenStatus::kCurrent &&
      pages_[old_hid].hkind == hk.kind && pages_[old_hid].hlpn == hk.lpn) {
    pages_[old_hid].hid = HiddenStatus::kStale;
  }
  return t;
}

// ------------------------------------------------------------ host requests

void PearlFtl::host_prologue() { gc_if_needed(); }

void PearlFtl::host_epilogue() {
  if (!cfg_.check_invariants) return;
  for (const auto& m : check_invariants()) {
    ++mon_.invariant_failures;
    note(m);
  }
}

void PearlFtl::public_write(uint32_t lpn, std::span<const uint8_t> data) {
  check_lpn(Volume::kPublic, lpn);
  padded(data, Volume::kPublic);
  host_prologue();
  Pins pins(cmt_);
  ensure(Volume::kPublic, lpn);
  pins.add(Volume::kPublic, lpn);
  write_public_item({Volume::kPublic, PageKind::kData, lpn}, data, Reason::kUpdate);
  ++stats_.host_writes[0];
  stats_.logical_bytes_written[0] += layout_.public_payload_bytes();
  stats_.physical_bytes_written[0] += layout_.codeword_bits() / 8;
  host_epilogue();
}

void PearlFtl::hidden_write(uint32_t lpn, std::span<const uint8_t> data) {
  require_hidden();
  check_lpn(Volume::kHidden, lpn);
  padded(data, Volume::kHidden);
  host_prologue();
  write_hidden_item({Volume::kHidden, PageKind::kData, lpn}, data, std::nullopt);
  ++stats_.host_writes[1];
  stats_.logical_bytes_written[1] += layout_.hidden_payload_bytes();
  stats_.physical_bytes_written[1] += layout_.codeword_bits() / 8;
  host_epilogue();
}

std::vector<uint8_t> PearlFtl::public_read(uint32_t lpn) {
  check_lpn(Volume::kPublic, lpn);
  const Ppn p = ensure(Volume::kPublic, lpn).ppn;
  if (p == kNoPpn) fail(ErrorCode::kUnmapped, "public lpn " + std::to_string(lpn) + " unmapped");
  ++stats_.host_reads[0];
  return read_public_payload(p);
}

std::vector<uint8_t> PearlFtl::hidden_read(uint32_t lpn) {
  require_hidden();
  check_lpn(Volume::kHidden, lpn);
  const Ppn p = ensure(Volume::kHidden, lpn).ppn;
  if (p == kNoPpn) fail(ErrorCode::kUnmapped, "hidden lpn " + std::to_string(lpn) + " unmapped");
  ++stats_.host_reads[1];
  return read_hidden_payload(p);
}

void PearlFtl::trim(uint32_t lpn, Volume v) {
  if (v == Volume::kHidden) require_hidden();
  check_lpn(v, lpn);
  MappingCache::Entry& e = ensure(v, lpn);
  if (e.ppn == kNoPpn) {
    fail(ErrorCode::kUnmapped, std::string(volume_name(v)) + " lpn " + std::to_string(lpn) +
                                   " unmapped");
  }
  const Ppn p = e.ppn;
  e.ppn = kNoPpn;
  e.dirty = true;
  if (v == Volume::kPublic) {
    invalidate_public(p, Reason::kTrim);
  } else if (pages_[p].hid == HiddenStatus::kCurrent) {
    pages_[p].hid = HiddenStatus::kStale;
  }
  ++stats_.host_trims[vi(v)];
  host_epilogue();
}

void PearlFtl::write_page(Volume v, uint32_t lpn, std::span<const uint8_t> data) {
  if (v == Volume::kPublic) {
    public_write(lpn, data);
  } else {
    hidden_write(lpn, data);
  }
}

std::vector<uint8_t> PearlFtl::read_page(Volume v, uint32_t lpn) {
  return v == Volume::kPublic ? public_read(lpn) : hidden_read(lpn);
}

void PearlFtl::trim_page(Volume v, uint32_t lpn) { trim(lpn, v); }

std::vector<uint8_t> PearlFtl::submit(uint64_t offset, OpKind op, uint64_t length,
                                      std::span<const uint8_t> data) {
  Volume v;
  uint64_t base;
  const uint64_t pub_end = uint64_t{cap_.public_pages} * layout_.public_payload_bytes();
  const uint64_t hid_end =
      cap_.hidden_base + uint64_t{cap_.hidden_pages} * layout_.hidden_payload_bytes();
  if (offset < pub_end) {
    v = Volume::kPublic;
    base = 0;
  } else if (offset >= cap_.hidden_base && offset < hid_end) {
    v = Volume::kHidden;
    base = cap_.hidden_base;
  } else {
    fail(ErrorCode::kOutOfRange, "offset " + std::to_string(offset) + " outside both volumes");
  }
  const uint64_t pb = payload_bytes(v);
  if ((offset - base) % pb != 0 || length == 0 || length % pb != 0) {
    fail(ErrorCode::kInvalidArgument, "offset and length must be whole payload pages");
  }
  const uint32_t first = static_cast<uint32_t>((offset - base) / pb);
  const uint32_t count = static_cast<uint32_t>(length / pb);
  check_lpn(v, first + count - 1);
  if (op == OpKind::kWrite && data.size() != length) {
    fail(ErrorCode::kInvalidArgument, "write data size differs from length");
  }
  std::vector<uint8_t> out;
  for (uint32_t i = 0; i < count; ++i) {
    switch (op) {
      case OpKind::kWrite: write_page(v, first + i, data.subspan(i * pb, pb)); break;
      case OpKind::kTrim: trim(first + i, v); break;
      case OpKind::kRead: {
        const auto d = read_page(v, first + i);
        out.insert(out.end(), d.begin(), d.end());
        break;
      }
    }
  }
  return out;
}

void PearlFtl::submit_batch(std::vector<Request>& reqs) {
  std::unordered_map<uint32_t, int> uses;
  for (const auto& r : reqs) {
    if (r.volume == Volume::kPublic) ++uses[r.lpn];
  }
  std::vector<bool> done(reqs.size(), false);
  for (size_t i = 0; i < reqs.size(); ++i) {
    if (done[i]) continue;
    Request& r = reqs[i];
    if (r.op == OpKind::kWrite && r.volume == Volume::kHidden) {
      size_t pair = reqs.size();
      for (size_t k = i + 1; k < reqs.size(); ++k) {
        if (!done[k] && reqs[k].op == OpKind::kWrite && reqs[k].volume == Volume::kPublic &&
            uses[reqs[k].lpn] == 1) {
          pair = k;
          break;
        }
      }
      if (pair < reqs.size()) {
        require_hidden();
        check_lpn(Volume::kHidden, r.lpn);
        check_lpn(Volume::kPublic, reqs[pair].lpn);
        padded(r.data, Volume::kHidden);
        padded(reqs[pair].data, Volume::kPublic);
        host_prologue();
        Cloak c{{Volume::kPublic, PageKind::kData, reqs[pair].lpn}, reqs[pair].data, kNoPpn};
        write_hidden_item({Volume::kHidden, PageKind::kData, r.lpn}, r.data, std::move(c));
        for (int v = 0; v < 2; ++v) {
          ++stats_.host_writes[v];
          stats_.logical_bytes_written[v] += payload_bytes(static_cast<Volume>(v));
          stats_.physical_bytes_written[v] += layout_.codeword_bits() / 8;
        }
        host_epilogue();
        done[pair] = true;
        done[i] = true;
        continue;
      }
    }
    switch (r.op) {
      case OpKind::kWrite: write_page(r.volume, r.lpn, r.data); break;
      case OpKind::kRead: r.data = read_page(r.volume, r.lpn); break;
      case OpKind::kTrim: trim(r.lpn, r.volume); break;
    }
    done[i] = true;
  }
}

// -------------------------------------------------------------- collection

uint32_t PearlFtl::gc_threshold() const {
  return std::max<uint32_t>(
      cfg_.gc_min_free_blocks,
      static_cast<uint32_t>(std::ceil(cfg_.gc_free_fraction * static_cast<double>(valid_.size()))));
}

std::optional<uint32_t> PearlFtl::gc_select_victim() const {
  std::vector<bool> cand(valid_.size());
  for (uint32_t b = 0; b < valid_.size(); ++b) cand[b] = use_[b] == BlockUse::kClosed;
  const int64_t b = select_min_valid(valid_, cand);
  if (b < 0) return std::nullopt;
  return static_cast<uint32_t>(b);
}

void PearlFtl::gc_if_needed() {
  if (in_gc_) return;
  Flag f(in_gc_);
  const uint32_t limit = 4 * static_cast<uint32_t>(valid_.size());
  for (uint32_t i = 0; free_.size() < gc_threshold(); ++i) {
    const auto v = gc_select_victim();
    if (!v || valid_[*v] >= ppb_ || i > limit) {
      fail(ErrorCode::kDeviceFull, "garbage collection cannot free a block");
    }
    collect(*v);
  }
}

void PearlFtl::gc_run() {
  Flag f(in_gc_);
  const auto v = gc_select_victim();
  if (!v) fail(ErrorCode::kDeviceFull, "no garbage collection victim");
  collect(*v);
  host_epilogue();
}

void PearlFtl::collect(uint32_t b) {
  victim_ = b;
  ++stats_.gc_runs;
  const Ppn lo = b * ppb_, hi = (b + 1) * ppb_;
  if (ui1_ && *ui1_ / ppb_ == b) ui1_.reset();
  for (Ppn p = lo; p < hi; ++p) {
    if (pages_[p].st == PageState::kTI1) tiq_remove(p);
  }
  if (hidden_mode_) {
    for (Ppn p = lo; p < hi; ++p) {
      if (pages_[p].hid != HiddenStatus::kCurrent) continue;
      const Key hk{Volume::kHidden, pages_[p].hkind, pages_[p].hlpn};
      Pins pins(cmt_);
      if (hk.kind == PageKind::kData) {
        ensure(Volume::kHidden, hk.lpn);
        pins.add(Volume::kHidden, hk.lpn);
      }
      if (pages_[p].hid != HiddenStatus::kCurrent || location(hk) != p) continue;
      const auto plain = read_hidden_payload(p);
      Ppn partner = kNoPpn;
      for (Ppn q = lo; q < hi && partner == kNoPpn; ++q) {
        if (is_valid(pages_[q].st) &&
            std::find(reserved_.begin(), reserved_.end(), q) == reserved_.end()) {
          partner = q;
        }
      }
      if (write_hidden_item(hk, plain, std::nullopt, partner, p) != kNoPpn) {
        ++stats_.hidden_relocations;
      }
    }
  } else {
    for (Ppn p = lo; p < hi; ++p) {
      if (pages_[p].hid == HiddenStatus::kCurrent) ++stats_.hidden_lost;
    }
  }
  for (Ppn p = lo; p < hi; ++p) {
    if (!is_valid(pages_[p].st)) continue;
    const Key k{Volume::kPublic, pages_[p].kind, pages_[p].lpn};
    Pins pins(cmt_);
    if (k.kind == PageKind::kData) {
      ensure(Volume::kPublic, k.lpn);
      pins.add(Volume::kPublic, k.lpn);
    }
    if (!is_valid(pages_[p].st) || pages_[p].kind != k.kind || pages_[p].lpn != k.lpn) continue;
    const auto plain = read_public_payload(p);
    write_public_item(k, plain, Reason::kRelocate);
    ++stats_.relocations;
  }
  for (Ppn p = lo; p < hi; ++p) {
    if (is_valid(pages_[p].st)) fail(ErrorCode::kInternal, "valid page left in victim");
    if (pages_[p].st != PageState::kEmpty) set_state(p, PageState::kEmpty);
    pages_[p] = PageInfo{};
  }
  dev_.erase_block(b);
  valid_[b] = 0;
  use_[b] = BlockUse::kFree;
  free_.push_back(b);
  victim_ = -1;
}

void PearlFtl::prepare_unmount() {
  for (int iter = 0;; ++iter) {
    if (iter > 256) fail(ErrorCode::kInternal, "unmount preparation did not converge");
    flush_all();
    if (tiq_.empty() && cmt_.dirty_keys().empty()) break;
    Flag f(in_gc_);
    const uint32_t limit = 4 * static_cast<uint32_t>(valid_.size());
    for (uint32_t i = 0; !tiq_.empty(); ++i) {
      if (i > limit) fail(ErrorCode::kInternal, "TIQ drain did not converge");
      auto v = gc_select_victim();
      if (!v) {
        // Everything lives in the open block; close it so it can be collected.
        if (cursor_ == kNoPpn) fail(ErrorCode::kInternal, "no block to drain the TIQ from");
        v = cursor_ / ppb_;
        use_[*v] = BlockUse::kClosed;
        cursor_ = kNoPpn;
      }
      collect(*v);
    }
  }
  if (dev_.programs() + dev_.erases() != persisted_ops_) persist_header();
  host_epilogue();
}

void PearlFtl::persist_header() {
  const DeviceGeometry& g = dev_.geometry();
  dev_.erase_block(0);
  dev_.program_page(0, encode_header(header_, g.page_bytes), {});
  std::vector<uint8_t> region;
  for (int v = 0; v < 2; ++v) {
    std::vector<uint8_t> plain(12 + 4 * gtd_[v].size(), 0);
    std::memcpy(plain.data(), kGtdMagic, 8);
    put_le(plain, 8, gtd_[v].size(), 4);
    for (size_t i = 0; i < gtd_[v].size(); ++i) put_le(plain, 12 + 4 * i, gtd_[v][i], 4);
    const PageIv iv = random_iv(rng_);
    std::vector<uint8_t> blob(iv.begin(), iv.end());
    if (v == 0 || hidden_mode_) {
      const auto ct = encrypt_payload(v == 0 ? kpub_ : khid_, iv, plain);
      blob.insert(blob.end(), ct.begin(), ct.end());
    } else {
      for (size_t i = 0; i < plain.size(); ++i) blob.push_back(static_cast<uint8_t>(rng_()));
    }
    blob.resize((blob.size() + g.page_bytes - 1) / g.page_bytes * g.page_bytes, 0);
    region.insert(region.end(), blob.begin(), blob.end());
  }
  for (size_t i = 0; i * g.page_bytes < region.size(); ++i) {
    dev_.program_page(static_cast<Ppn>(1 + i),
                      std::span<const uint8_t>(region).subspan(i * g.page_bytes, g.page_bytes),
                      {});
  }
  persisted_ops_ = dev_.programs() + dev_.erases();
}

std::vector<std::string> PearlFtl::check_invariants() const {
  std::vector<std::string> out;
  size_t ui1_count = 0, ti1_count = 0;
  std::vector<uint32_t> valid(valid_.size(), 0);
  for (Ppn p = 0; p < pages_.size(); ++p) {
    const PageState s = pages_[p].st;
    if (is_valid(s)) ++valid[p / ppb_];
    if (s == PageState::kUI1) {
      ++ui1_count;
      if (!ui1_ || *ui1_ != p) out.push_back("UI1 page " + std::to_string(p) + " not tracked");
    }
    if (s == PageState::kTI1) {
      ++ti1_count;
      if (!tiq_pos_.count(p)) out.push_back("TI1 page " + std::to_string(p) + " not in TIQ");
    }
    if (s == PageState::kI1) out.push_back("transient I1 page " + std::to_string(p));
  }
  if (ui1_count > 1) out.push_back("more than one UI1 page");
  if (ti1_count != tiq_.size()) out.push_back("TIQ size differs from TI1 count");
  for (Ppn p : tiq_) {
    if (pages_[p].st != PageState::kTI1) out.push_back("TIQ holds non-TI1 page " + std::to_string(p));
  }
  if (valid != valid_) out.push_back("valid counts out of sync");
  if (cursor_ != kNoPpn) {
    for (Ppn p = cursor_; p % ppb_ != 0 || p == cursor_; ++p) {
      if (pages_[p].st != PageState::kEmpty) {
        out.push_back("programmed page after cursor: " + std::to_string(p));
        break;
      }
      if ((p + 1) % ppb_ == 0) break;
    }
  }
  for (const auto& [lpn, p] : trimmed_ti1_) {
    if (pages_[p].st != PageState::kTI1) out.push_back("stale trimmed entry " + std::to_string(lpn));
  }
  return out;
}

}  // namespace pearl
