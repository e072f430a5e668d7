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

#include "pearl/flash.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pearl/error.hpp"

namespace pearl {

DeviceGeometry DeviceGeometry::desk() { return DeviceGeometry{}; }

DeviceGeometry DeviceGeometry::paper() {
  DeviceGeometry g;
  g.dies = 1;
  g.planes_per_die = 2;
  g.blocks_per_plane = 1437;
  g.pages_per_block = 768;
  g.page_bytes = 16384;
  g.oob_bytes = 64;
  return g;
}

DeviceGeometry DeviceGeometry::preset(const std::string& name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  fail(ErrorCode::kInvalidArgument, "unknown preset: " + name);
}

void DeviceGeometry::validate() const {
  if (dies < 1 || planes_per_die < 1 || blocks_per_plane < 1 ||
      pages_per_block < 1) {
    fail(ErrorCode::kInvalidArgument, "geometry counts must be >= 1");
  }
  if (page_bytes < 512) fail(ErrorCode::kInvalidArgument, "page_bytes < 512");
  if (oob_bytes < 48) fail(ErrorCode::kInvalidArgument, "oob_bytes < 48");
  if (total_pages() >= kNoPpn) {
    fail(ErrorCode::kInvalidArgument, "too many pages for 32-bit PPNs");
  }
}

PageView Snapshot::page(Ppn ppn) const {
  if (ppn >= geometry.total_pages()) {
    fail(ErrorCode::kOutOfRange, "ppn out of range");
  }
  const size_t pb = geometry.page_bytes, ob = geometry.oob_bytes;
  return PageView{std::span<const uint8_t>(data).subspan(ppn * pb, pb),
                  std::span<const uint8_t>(oob).subspan(ppn * ob, ob)};
}

FlashDevice::FlashDevice(DeviceGeometry geometry, DeviceTimings timings)
    : geometry_(geometry), timings_(timings) {
  geometry_.validate();
  if (timings_.read_us == 0 || timings_.program_us == 0 ||
      timings_.erase_us == 0) {
    fail(ErrorCode::kInvalidArgument, "timings must be > 0");
  }
  pages_.resize(geometry_.total_pages());
  erase_counts_.assign(geometry_.total_blocks(), 0);
  lifetime_programs_.assign(geometry_.total_pages(), 0);
  zero_.assign(size_t{geometry_.page_bytes} + geometry_.oob_bytes, 0);
}

void FlashDevice::check_ppn(Ppn ppn) const {
  if (ppn >= pages_.size()) {
    fail(ErrorCode::kOutOfRange, "ppn " + std::to_string(ppn) + " out of range");
  }
}

PageView FlashDevice::view(const Slot& s) const {
  const uint8_t* base = s.bytes ? s.bytes.get() : zero_.data();
  return PageView{std::span<const uint8_t>(base, geometry_.page_bytes),
                  std::span<const uint8_t>(base + geometry_.page_bytes,
                                           geometry_.oob_bytes)};
}

PageView FlashDevice::read_page(Ppn ppn) {
  check_ppn(ppn);
  ++reads_;
  clock_us_ += timings_.read_us;
  return view(pages_[ppn]);
}

PageView FlashDevice::peek(Ppn ppn) const {
  check_ppn(ppn);
  return view(pages_[ppn]);
}

void FlashDevice::program_page(Ppn ppn, std::span<const uint8_t> data,
                               std::span<const uint8_t> oob) {
  check_ppn(ppn);
  if (data.size() != geometry_.page_bytes || oob.size() > geometry_.oob_bytes) {
    fail(ErrorCode::kInvalidArgument, "program buffer size mismatch");
  }
  Slot& s = pages_[ppn];
  if (s.programmed >= 2) {
    fail(ErrorCode::kDoubleProgramLimit,
         "page " + std::to_string(ppn) + " already programmed twice");
  }
  if (s.bytes) {
    const uint8_t* cur = s.bytes.get();
    for (size_t i = 0; i < data.size(); ++i) {
      if (cur[i] & ~data[i]) {
        fail(ErrorCode::kWomInvariantViolation,
             "program of page " + std::to_string(ppn) +
                 " would clear a set bit at byte " + std::to_string(i));
      }
    }
  } else {
    s.bytes = std::make_unique<uint8_t[]>(zero_.size());
  }
  uint8_t* dst = s.bytes.get();
  std::memcpy(dst, data.data(), data.size());
  std::memset(dst + geometry_.page_bytes, 0, geometry_.oob_bytes);
  std::memcpy(dst + geometry_.page_bytes, oob.data(), oob.size());
  ++s.programmed;
  ++lifetime_programs_[ppn];
  ++programs_;
  clock_us_ += timings_.program_us;
}

void FlashDevice::erase_block(uint32_t block) {
  if (block >= erase_counts_.size()) {
    fail(ErrorCode::kOutOfRange, "block " + std::to_string(block) + " out of range");
  }
  const Ppn base = first_ppn(block);
  for (uint32_t i = 0; i < geometry_.pages_per_block; ++i) {
    pages_[base + i].bytes.reset();
    pages_[base + i].programmed = 0;
  }
  ++erase_counts_[block];
  ++erases_;
  clock_us_ += timings_.erase_us;
}

uint8_t FlashDevice::program_count(Ppn ppn) const {
  check_ppn(ppn);
  return pages_[ppn].programmed;
}

uint32_t FlashDevice::erase_count(uint32_t block) const {
  return erase_counts_.at(block);
}

Snapshot FlashDevice::snapshot() const {
  Snapshot s;
  s.geometry = geometry_;
  const size_t pb = geometry_.page_bytes, ob = geometry_.oob_bytes;
  s.data.assign(pages_.size() * pb, 0);
  s.oob.assign(pages_.size() * ob, 0);
  s.program_counts.resize(pages_.size());
  for (size_t p = 0; p < pages_.size(); ++p) {
    if (pages_[p].bytes) {
      std::memcpy(&s.data[p * pb], pages_[p].bytes.get(), pb);
      std::memcpy(&s.oob[p * ob], pages_[p].bytes.get() + pb, ob);
    }
    s.program_counts[p] = pages_[p].programmed;
  }
  s.erase_counts = erase_counts_;
  return s;
}

FlashDevice FlashDevice::restore(const Snapshot& snap, DeviceTimings timings) {
  FlashDevice d(snap.geometry, timings);
  const size_t pb = snap.geometry.page_bytes, ob = snap.geometry.oob_bytes;
  if (snap.data.size() != d.pages_.size() * pb ||
      snap.oob.size() != d.pages_.size() * ob ||
      snap.erase_counts.size() != d.erase_counts_.size() ||
      snap.program_counts.size() != d.pages_.size()) {
    fail(ErrorCode::kCorrupt, "snapshot section sizes do not match geometry");
  }
  for (size_t p = 0; p < d.pages_.size(); ++p) {
    Slot& s = d.pages_[p];
    s.programmed = snap.program_counts[p];
    if (s.programmed > 2) fail(ErrorCode::kCorrupt, "program count > 2");
    const uint8_t* src = &snap.data[p * pb];
    const uint8_t* src_oob = &snap.oob[p * ob];
    const bool blank = std::all_of(src, src + pb, [](uint8_t b) { return b == 0; }) &&
                       std::all_of(src_oob, src_oob + ob, [](uint8_t b) { return b == 0; });
    if (s.programmed > 0 || !blank) {
      s.bytes = std::make_unique<uint8_t[]>(pb + ob);
      std::memcpy(s.bytes.get(), src, pb);
      std::memcpy(s.bytes.get() + pb, src_oob, ob);
    }
  }
  d.erase_counts_ = snap.erase_counts;
  return d;
}

WearStats FlashDevice::wear_stats() const {
  WearStats w;
  w.block_erases = erase_counts_;
  w.page_programs = lifetime_programs_;
  for (uint32_t c : lifetime_programs_) w.total_programs += c;
  return w;
}

namespace {

constexpr char kSnapMagic[8] = {'P', 'R', 'L', 'S', 'N', 'A', 'P', '1'};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(std::span<const uint8_t> in, size_t& pos) {
  if (pos + 4 > in.size()) fail(ErrorCode::kCorrupt, "truncated snapshot");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t{in[pos + i]} << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::vector<uint8_t> encode_snapshot(const Snapshot& snap) {
  std::vector<uint8_t> out(std::begin(kSnapMagic), std::end(kSnapMagic));
  const DeviceGeometry& g = snap.geometry;
  for (uint32_t v : {g.dies, g.planes_per_die, g.blocks_per_plane,
                     g.pages_per_block, g.page_bytes, g.oob_bytes}) {
    put_u32(out, v);
  }
  out.insert(out.end(), snap.data.begin(), snap.data.end());
  out.insert(out.end(), snap.oob.begin(), snap.oob.end());
  for (uint32_t e : snap.erase_counts) put_u32(out, e);
  out.insert(out.end(), snap.program_counts.begin(), snap.program_counts.end());
  return out;
}

Snapshot decode_snapshot(std::span<const uint8_t> in) {
  if (in.size() < 8 || !std::equal(in.begin(), in.begin() + 8, kSnapMagic)) {
    fail(ErrorCode::kCorrupt, "bad snapshot magic");
  }
  size_t pos = 8;
  Snapshot s;
  DeviceGeometry& g = s.geometry;
  g.dies = get_u32(in, pos);
  g.planes_per_die = get_u32(in, pos);
  g.blocks_per_plane = get_u32(in, pos);
  g.pages_per_block = get_u32(in, pos);
  g.page_bytes = get_u32(in, pos);
  g.oob_bytes = get_u32(in, pos);
  g.validate();
  const size_t pages = g.total_pages();
  const size_t expect = pos + pages * g.page_bytes + pages * g.oob_bytes +
                        size_t{g.total_blocks()} * 4 + pages;
  if (in.size() != expect) fail(ErrorCode::kCorrupt, "snapshot size mismatch");
  auto take = [&](size_t n) {
    std::vector<uint8_t> v(in.begin() + pos, in.begin() + pos + n);
    pos += n;
    return v;
  };
  s.data = take(pages * g.page_bytes);
  s.oob = take(pages * g.oob_bytes);
  s.erase_counts.resize(g.total_blocks());
  for (auto& e : s.erase_counts) e = get_u32(in, pos);
  s.program_counts = take(pages);
  return s;
}

void write_snapshot_file(const Snapshot& snap, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  auto bytes = encode_snapshot(snap);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) fail(ErrorCode::kIo, "write failed: " + path);
}

Snapshot read_snapshot_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_snapshot(bytes);
}

}  // namespace pearl
