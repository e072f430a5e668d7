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

#include "pearl/dftl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pearl/error.hpp"

namespace pearl {

namespace {

std::vector<uint8_t> pack_entries(const std::vector<Ppn>& entries, size_t bytes) {
  std::vector<uint8_t> out(bytes, 0);
  for (size_t i = 0; i < entries.size(); ++i) {
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<uint8_t>(entries[i] >> (8 * b));
  }
  return out;
}

}  // namespace

Dftl::Dftl(FlashDevice& device, DftlConfig config)
    : dev_(device), cfg_(config), cmt_(config.cmt_entries) {
  const DeviceGeometry& g = dev_.geometry();
  if (cfg_.logical_fraction <= 0 || cfg_.logical_fraction >= 1) {
    fail(ErrorCode::kInvalidArgument, "logical_fraction must be in (0, 1)");
  }
  if (cfg_.cmt_entries < 1) fail(ErrorCode::kInvalidArgument, "cmt_entries < 1");
  ppb_ = g.pages_per_block;
  page_bytes_ = g.page_bytes;
  logical_pages_ = static_cast<uint32_t>(
      std::floor(cfg_.logical_fraction * static_cast<double>(g.total_pages())));
  entries_per_tp_ = page_bytes_ / 4;
  gc_threshold_ = std::max<uint32_t>(
      cfg_.gc_min_free_blocks,
      static_cast<uint32_t>(std::ceil(cfg_.gc_free_fraction * g.total_blocks())));
  pages_.resize(g.total_pages());
  valid_.assign(g.total_blocks(), 0);
  gtd_.assign((logical_pages_ + entries_per_tp_ - 1) / entries_per_tp_, kNoPpn);
  is_free_.assign(g.total_blocks(), true);
  for (uint32_t b = 0; b < g.total_blocks(); ++b) free_.push_back(b);
}

void Dftl::check_lpn(uint32_t lpn) const {
  if (lpn >= logical_pages_) {
    fail(ErrorCode::kOutOfRange, "lpn " + std::to_string(lpn) + " out of range");
  }
}

Ppn Dftl::next_page(Ppn& cursor) {
  if (cursor == kNoPpn) {
    if (free_.empty()) fail(ErrorCode::kDeviceFull, "no free blocks");
    const uint32_t b = free_.front();
    free_.pop_front();
    is_free_[b] = false;
    cursor = dev_.first_ppn(b);
  }
  const Ppn p = cursor;
  cursor = (p + 1) % ppb_ == 0 ? kNoPpn : p + 1;
  return p;
}

Ppn Dftl::program(Ppn& cursor, PageKind kind, uint32_t lpn,
                  std::span<const uint8_t> data) {
  const Ppn p = next_page(cursor);
  OobRecord oob;
  oob.lpn = lpn;
  oob.stage = 1;
  oob.kind = kind;
  oob.seq = seq_++;
  std::vector<uint8_t> buf(page_bytes_, 0);
  std::memcpy(buf.data(), data.data(), std::min<size_t>(data.size(), page_bytes_));
  dev_.program_page(p, buf, oob.encode(dev_.geometry().oob_bytes));
  pages_[p] = PageInfo{State::kValid, kind, lpn};
  ++valid_[p / ppb_];
  ++stats_.first_writes;
  return p;
}

void Dftl::invalidate(Ppn ppn) {
  if (ppn == kNoPpn) return;
  PageInfo& pi = pages_[ppn];
  if (pi.state != State::kValid) fail(ErrorCode::kInternal, "invalidating non-valid page");
  pi.state = State::kInvalid;
  --valid_[ppn / ppb_];
}

std::vector<Ppn> Dftl::load_translation(uint32_t vpn) {
  std::vector<Ppn> entries(entries_per_tp_, kNoPpn);
  if (gtd_[vpn] == kNoPpn) return entries;
  const PageView v = dev_.read_page(gtd_[vpn]);
  ++stats_.translation_reads;
  for (uint32_t i = 0; i < entries_per_tp_; ++i) {
    Ppn e = 0;
    for (int b = 0; b < 4; ++b) e |= Ppn{v.data[4 * i + b]} << (8 * b);
    entries[i] = e;
  }
  return entries;
}

void Dftl::write_back(uint32_t vpn) {
  auto entries = load_translation(vpn);
  const uint32_t first = vpn * entries_per_tp_;
  for (const auto& [lpn, ppn] : cmt_.dirty_in_range(0, first, entries_per_tp_)) {
    entries[lpn - first] = ppn;
    cmt_.mark_clean({0, lpn});
  }
  const Ppn old = gtd_[vpn];
  gtd_[vpn] = program(trans_cursor_, PageKind::kTranslation, vpn,
                      pack_entries(entries, page_bytes_));
  ++stats_.translation_writes[0];
  invalidate(old);
}

MappingCache::Entry& Dftl::ensure(uint32_t lpn) {
  if (auto* e = cmt_.find({0, lpn})) {
    ++stats_.cmt_hits;
    return *e;
  }
  ++stats_.cmt_misses;
  while (cmt_.full()) {
    const auto victim = cmt_.lru_victim();
    if (!victim) break;
    if (cmt_.peek(*victim)->dirty) write_back(victim->lpn / entries_per_tp_);
    cmt_.erase(*victim);
  }
  const uint32_t vpn = lpn / entries_per_tp_;
  Ppn ppn = kNoPpn;
  if (gtd_[vpn] != kNoPpn) ppn = load_translation(vpn)[lpn % entries_per_tp_];
  return cmt_.insert({0, lpn}, ppn, false);
}

Ppn Dftl::translate(uint32_t lpn) {
  check_lpn(lpn);
  return ensure(lpn).ppn;
}

void Dftl::maybe_gc() {
  if (in_gc_) return;
  in_gc_ = true;
  try {
    while (free_.size() < gc_threshold_) {
      if (gc_run() == 0) fail(ErrorCode::kDeviceFull, "garbage collection made no progress");
    }
  } catch (...) {
    in_gc_ = false;
    throw;
  }
  in_gc_ = false;
}

std::optional<uint32_t> Dftl::gc_select_victim() const {
  std::vector<bool> cand(valid_.size());
  for (uint32_t b = 0; b < valid_.size(); ++b) cand[b] = !is_free_[b];
  if (data_cursor_ != kNoPpn) cand[data_cursor_ / ppb_] = false;
  if (trans_cursor_ != kNoPpn) cand[trans_cursor_ / ppb_] = false;
  const int64_t b = select_min_valid(valid_, cand);
  if (b < 0) return std::nullopt;
  return static_cast<uint32_t>(b);
}

uint32_t Dftl::gc_run() {
  const auto victim = gc_select_victim();
  if (!victim) fail(ErrorCode::kDeviceFull, "no garbage collection victim");
  ++stats_.gc_runs;
  const uint32_t b = *victim;
  const uint32_t reclaimed = ppb_ - valid_[b];
  for (Ppn p = dev_.first_ppn(b); p < dev_.first_ppn(b) + ppb_; ++p) {
    if (pages_[p].state != State::kValid) continue;
    const PageInfo info = pages_[p];
    if (info.kind == PageKind::kTranslation) {
      const PageView v = dev_.read_page(p);
      std::vector<uint8_t> copy(v.data.begin(), v.data.end());
      gtd_[info.lpn] = program(trans_cursor_, PageKind::kTranslation, info.lpn, copy);
      invalidate(p);
    } else {
      MappingCache::Entry& e = ensure(info.lpn);
      if (pages_[p].state != State::kValid) continue;
      const PageView v = dev_.read_page(p);
      std::vector<uint8_t> copy(v.data.begin(), v.data.end());
      e.ppn = program(data_cursor_, PageKind::kData, info.lpn, copy);
      e.dirty = true;
      invalidate(p);
    }
    ++stats_.relocations;
  }
  dev_.erase_block(b);
  for (Ppn p = dev_.first_ppn(b); p < dev_.first_ppn(b) + ppb_; ++p) pages_[p] = PageInfo{};
  valid_[b] = 0;
  is_free_[b] = true;
  free_.push_back(b);
  return reclaimed;
}

void Dftl::write(uint32_t lpn, std::span<const uint8_t> data) {
  check_lpn(lpn);
  if (data.size() > page_bytes_) fail(ErrorCode::kInvalidArgument, "payload too large");
  maybe_gc();
  MappingCache::Entry& e = ensure(lpn);
  const Ppn old = e.ppn;
  e.ppn = program(data_cursor_, PageKind::kData, lpn, data);
  e.dirty = true;
  invalidate(old);
  ++stats_.host_writes[0];
  stats_.logical_bytes_written[0] += page_bytes_;
  stats_.physical_bytes_written[0] += page_bytes_;
}

std::vector<uint8_t> Dftl::read(uint32_t lpn) {
  check_lpn(lpn);
  const Ppn p = ensure(lpn).ppn;
  if (p == kNoPpn) fail(ErrorCode::kUnmapped, "lpn " + std::to_string(lpn) + " unmapped");
  ++stats_.host_reads[0];
  const PageView v = dev_.read_page(p);
  return {v.data.begin(), v.data.end()};
}

void Dftl::trim(uint32_t lpn) {
  check_lpn(lpn);
  MappingCache::Entry& e = ensure(lpn);
  if (e.ppn == kNoPpn) fail(ErrorCode::kUnmapped, "lpn " + std::to_string(lpn) + " unmapped");
  invalidate(e.ppn);
  e.ppn = kNoPpn;
  e.dirty = true;
  ++stats_.host_trims[0];
}

void Dftl::flush() {
  for (const auto& k : cmt_.dirty_keys()) {
    if (cmt_.peek(k)->dirty) write_back(k.lpn / entries_per_tp_);
  }
}

void Dftl::write_page(Volume v, uint32_t lpn, std::span<const uint8_t> data) {
  if (v != Volume::kPublic) fail(ErrorCode::kModeRejected, "DFTL has no hidden volume");
  write(lpn, data);
}

std::vector<uint8_t> Dftl::read_page(Volume v, uint32_t lpn) {
  if (v != Volume::kPublic) fail(ErrorCode::kModeRejected, "DFTL has no hidden volume");
  return read(lpn);
}

void Dftl::trim_page(Volume v, uint32_t lpn) {
  if (v != Volume::kPublic) fail(ErrorCode::kModeRejected, "DFTL has no hidden volume");
  trim(lpn);
}

}  // namespace pearl
