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
#include <sstream>

#include "pearl/error.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl_internal.hpp"

namespace pearl {

const char* page_state_name(PageState s) {
  switch (s) {
    case PageState::kEmpty: return "empty";
    case PageState::kV1: return "V1";
    case PageState::kUI1: return "UI1";
    case PageState::kTI1: return "TI1";
    case PageState::kI1: return "I1";
    case PageState::kV2: return "V2";
    case PageState::kI2: return "I2";
  }
  return "?";
}

const char* public_state_name(PublicState s) {
  switch (s) {
    case PublicState::kEmpty: return "empty";
    case PublicState::kV1: return "V1";
    case PublicState::kI1: return "I1";
    case PublicState::kV2: return "V2";
    case PublicState::kI2: return "I2";
  }
  return "?";
}

PublicState observe(PageState s) {
  switch (s) {
    case PageState::kEmpty: return PublicState::kEmpty;
    case PageState::kV1: return PublicState::kV1;
    case PageState::kUI1:
    case PageState::kTI1:
    case PageState::kI1: return PublicState::kI1;
    case PageState::kV2: return PublicState::kV2;
    case PageState::kI2: return PublicState::kI2;
  }
  return PublicState::kEmpty;
}

bool transition_allowed(PublicState from, PublicState to) {
  using S = PublicState;
  if (from == to) return true;
  switch (from) {
    case S::kEmpty: return to == S::kV1 || to == S::kV2;
    case S::kV1: return to == S::kI1 || to == S::kEmpty;
    case S::kI1: return to == S::kV2 || to == S::kEmpty;
    case S::kV2: return to == S::kI2;
    case S::kI2: return to == S::kEmpty;
  }
  return false;
}

bool transition_reachable(PublicState from, PublicState to) {
  using S = PublicState;
  // Edges without erasure: Empty->V1->I1->V2->I2 and Empty->V2.
  auto rank = [](S s) {
    switch (s) {
      case S::kEmpty: return 0;
      case S::kV1: return 1;
      case S::kI1: return 2;
      case S::kV2: return 3;
      case S::kI2: return 4;
    }
    return 0;
  };
  return rank(to) >= rank(from);
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "bad value for " + key + ": " + v);
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "bad value for " + key + ": " + v);
  }
}

std::string trim_ws(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile cf;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim_ws(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kInvalidArgument, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string k = trim_ws(line.substr(0, eq));
    const std::string v = trim_ws(line.substr(eq + 1));
    PearlConfig& p = cf.pearl;
    if (k == "preset") cf.preset = v;
    else if (k == "code") p.code = v;
    else if (k == "public_fraction") p.public_fraction = parse_double(k, v);
    else if (k == "hidden_fraction") p.hidden_fraction = parse_double(k, v);
    else if (k == "kdf_n") p.kdf.n = parse_u64(k, v);
    else if (k == "kdf_r") p.kdf.r = static_cast<uint32_t>(parse_u64(k, v));
    else if (k == "kdf_p") p.kdf.p = static_cast<uint32_t>(parse_u64(k, v));
    else if (k == "cmt_entries") p.cmt_entries = parse_u64(k, v);
    else if (k == "gc_min_free_blocks") p.gc_min_free_blocks = static_cast<uint32_t>(parse_u64(k, v));
    else if (k == "gc_free_fraction") p.gc_free_fraction = parse_double(k, v);
    else if (k == "seed") p.seed = parse_u64(k, v);
    else fail(ErrorCode::kInvalidArgument, "config line " + std::to_string(lineno) + ": unknown key " + k);
  }
  return cf;
}

Capacity compute_capacity(const DeviceGeometry& g, const WomCode& code,
                          double public_fraction, double hidden_fraction) {
  if (!(public_fraction > 0.0) || public_fraction > 0.6) {
    fail(ErrorCode::kInvalidArgument, "public capacity must be in (0, 60%] of the device");
  }
  if (!(hidden_fraction >= 0.0) || hidden_fraction > 0.2) {
    fail(ErrorCode::kInvalidArgument, "hidden capacity must be in [0, 20%] of the device");
  }
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  const double phys = static_cast<double>(g.physical_bytes());
  Capacity c;
  c.public_bytes = static_cast<uint64_t>(std::floor(public_fraction * phys));
  c.hidden_bytes = static_cast<uint64_t>(std::floor(hidden_fraction * phys));
  const uint64_t pp = layout.public_payload_bytes();
  const uint64_t hp = layout.hidden_payload_bytes();
  c.public_pages = static_cast<uint32_t>((c.public_bytes + pp - 1) / pp);
  c.hidden_pages = static_cast<uint32_t>((c.hidden_bytes + hp - 1) / hp);
  c.hidden_base = g.physical_bytes();
  return c;
}

namespace detail {

void put_le(std::vector<uint8_t>& out, size_t pos, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out[pos + i] = static_cast<uint8_t>(v >> (8 * i));
}

uint64_t get_le(std::span<const uint8_t> in, size_t pos, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= uint64_t{in[pos + i]} << (8 * i);
  return v;
}

uint8_t code_id(const std::string& name) {
  const WomCode c = WomCode::by_name(name);
  return c.n() == 3 ? 0 : 1;
}

std::string code_name(uint8_t id) {
  if (id == 0) return "2,3";
  if (id == 1) return "3,5";
  fail(ErrorCode::kCorrupt, "unknown code id in header");
}

std::array<uint8_t, 16> key_check(const VolumeKey& kpub) {
  PageIv iv;
  iv.fill(0xff);
  const auto ct = encrypt_payload(kpub, iv, std::vector<uint8_t>(16, 0));
  std::array<uint8_t, 16> out;
  std::copy(ct.begin(), ct.end(), out.begin());
  return out;
}

std::vector<uint8_t> encode_header(const PearlHeader& h, size_t page_bytes) {
  std::vector<uint8_t> out(page_bytes, 0);
  std::memcpy(out.data(), kHeaderMagic, 8);
  put_le(out, 8, h.version, 4);
  out[12] = code_id(h.code);
  std::copy(h.salt.begin(), h.salt.end(), out.begin() + 16);
  put_le(out, 32, h.kdf.n, 8);
  put_le(out, 40, h.kdf.r, 4);
  put_le(out, 44, h.kdf.p, 4);
  put_le(out, 48, h.public_bytes, 8);
  put_le(out, 56, h.hidden_bytes, 8);
  std::copy(h.key_check.begin(), h.key_check.end(), out.begin() + 64);
  return out;
}

std::vector<uint8_t> tag_plain(PageKind kind, uint32_t lpn) {
  std::vector<uint8_t> t(16, 0);
  std::memcpy(t.data(), kHiddenTagMagic, 8);
  put_le(t, 8, lpn, 4);
  t[12] = static_cast<uint8_t>(kind);
  return t;
}

bool open_tag(const VolumeKey& khid, const OobRecord& oob, PageKind& kind,
              uint32_t& lpn) {
  const auto t = decrypt_payload(khid, tweak_iv(oob.iv), oob.hidden_tag);
  if (std::memcmp(t.data(), kHiddenTagMagic, 8) != 0) return false;
  if (t[12] > 1 || t[13] || t[14] || t[15]) return false;
  kind = static_cast<PageKind>(t[12]);
  lpn = static_cast<uint32_t>(get_le(t, 8, 4));
  return true;
}

std::vector<uint8_t> decode_public(const WomCode& code, const PageCodecLayout& layout,
                                   const VolumeKey& kpub, const PageView& v,
                                   const OobRecord& oob) {
  const BitString raw(std::vector<uint8_t>(v.data.begin(), v.data.end()), layout.page_bits);
  const BitString bits = decode_page_public(
      layout, code, raw, oob.stage == 1 ? WriteStage::kFirst : WriteStage::kSecond);
  return decrypt_payload(kpub, oob.iv, bits.bytes());
}

std::vector<uint8_t> decode_hidden(const WomCode& code, const PageCodecLayout& layout,
                                   const VolumeKey& khid, const PageView& v,
                                   const OobRecord& oob) {
  const BitString raw(std::vector<uint8_t>(v.data.begin(), v.data.end()), layout.page_bits);
  const BitString bits = decode_page_hidden(layout, code, raw);
  return decrypt_payload(khid, oob.iv, bits.bytes());
}

std::vector<Ppn> unpack_entries(std::span<const uint8_t> payload, uint32_t count) {
  std::vector<Ppn> e(count);
  for (uint32_t i = 0; i < count; ++i) e[i] = static_cast<Ppn>(get_le(payload, 4 * i, 4));
  return e;
}

std::vector<uint8_t> pack_entries(const std::vector<Ppn>& e, size_t bytes) {
  std::vector<uint8_t> out(bytes, 0);
  for (size_t i = 0; i < e.size(); ++i) put_le(out, 4 * i, e[i], 4);
  return out;
}

}  // namespace detail

using namespace detail;

Capacity header_capacity(const DeviceGeometry& g, const WomCode& code, const PearlHeader& h) {
  const uint64_t phys = g.physical_bytes();
  if (h.public_bytes == 0 || h.public_bytes * 10 > phys * 6 || h.hidden_bytes * 10 > phys * 2) {
    fail(ErrorCode::kCorrupt, "header capacities out of bounds");
  }
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  const uint64_t pp = layout.public_payload_bytes();
  const uint64_t hp = layout.hidden_payload_bytes();
  Capacity c;
  c.public_bytes = h.public_bytes;
  c.hidden_bytes = h.hidden_bytes;
  c.public_pages = static_cast<uint32_t>((c.public_bytes + pp - 1) / pp);
  c.hidden_pages = static_cast<uint32_t>((c.hidden_bytes + hp - 1) / hp);
  c.hidden_base = phys;
  return c;
}

PearlHeader read_header(const std::function<PageView(Ppn)>& page) {
  const PageView v = page(0);
  if (v.data.size() < 80 || std::memcmp(v.data.data(), kHeaderMagic, 8) != 0) {
    fail(ErrorCode::kCorrupt, "missing device header");
  }
  PearlHeader h;
  h.version = static_cast<uint32_t>(get_le(v.data, 8, 4));
  if (h.version != 1) fail(ErrorCode::kCorrupt, "unsupported header version");
  h.code = code_name(v.data[12]);
  h.salt.assign(v.data.begin() + 16, v.data.begin() + 32);
  h.kdf.n = get_le(v.data, 32, 8);
  h.kdf.r = static_cast<uint32_t>(get_le(v.data, 40, 4));
  h.kdf.p = static_cast<uint32_t>(get_le(v.data, 44, 4));
  h.public_bytes = get_le(v.data, 48, 8);
  h.hidden_bytes = get_le(v.data, 56, 8);
  std::copy(v.data.begin() + 64, v.data.begin() + 80, h.key_check.begin());
  return h;
}

RecoveredState recover_state(const std::function<PageView(Ppn)>& page,
                             const DeviceGeometry& g, const WomCode& code,
                             const Capacity& cap, const VolumeKey& kpub,
                             const VolumeKey* khid) {
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  const uint32_t npages = static_cast<uint32_t>(g.total_pages());
  const uint32_t logical[2] = {cap.public_pages, cap.hidden_pages};
  const uint32_t epp[2] = {static_cast<uint32_t>(layout.public_payload_bytes() / 4),
                           static_cast<uint32_t>(layout.hidden_payload_bytes() / 4)};
  RecoveredState st;
  st.oob.resize(npages);
  st.hidden_kind.assign(npages, -1);
  st.hidden_lpn.assign(npages, kNoLpn);

  struct Latest {
    uint64_t seq = 0;
    Ppn ppn = kNoPpn;
  };
  std::vector<Latest> data[2], trans[2];
  for (int v = 0; v < 2; ++v) {
    data[v].resize(logical[v]);
    trans[v].resize((logical[v] + epp[v] - 1) / std::max<uint32_t>(epp[v], 1));
  }
  auto offer = [](std::vector<Latest>& table, uint32_t idx, uint64_t seq, Ppn p) {
    if (idx >= table.size()) fail(ErrorCode::kCorrupt, "logical page out of range in OOB");
    if (table[idx].ppn == kNoPpn || seq > table[idx].seq) table[idx] = {seq, p};
  };

  for (Ppn p = g.pages_per_block; p < npages; ++p) {
    const PageView v = page(p);
    const OobRecord oob = OobRecord::decode(v.oob);
    st.oob[p] = oob;
    if (oob.stage == 0) continue;
    st.max_seq = std::max(st.max_seq, oob.seq);
    offer(oob.kind == PageKind::kData ? data[0] : trans[0], oob.lpn, oob.seq, p);
    PageKind hk;
    uint32_t hl;
    if (khid && oob.stage == 2 && open_tag(*khid, oob, hk, hl)) {
      st.hidden_kind[p] = static_cast<int8_t>(hk);
      st.hidden_lpn[p] = hl;
      offer(hk == PageKind::kData ? data[1] : trans[1], hl, oob.seq, p);
    }
  }

  for (int v = 0; v < (khid ? 2 : 1); ++v) {
    st.gtd[v].assign(trans[v].size(), kNoPpn);
    st.map[v].assign(logical[v], kNoPpn);
    for (uint32_t vpn = 0; vpn < trans[v].size(); ++vpn) {
      const Latest tp = trans[v][vpn];
      st.gtd[v][vpn] = tp.ppn;
      const uint32_t first = vpn * epp[v];
      const uint32_t count = std::min(epp[v], logical[v] - first);
      std::vector<Ppn> entries(count, kNoPpn);
      if (tp.ppn != kNoPpn) {
        const PageView pv = page(tp.ppn);
        const auto payload = v == 0 ? decode_public(code, layout, kpub, pv, st.oob[tp.ppn])
                                    : decode_hidden(code, layout, *khid, pv, st.oob[tp.ppn]);
        entries = unpack_entries(payload, count);
      }
      for (uint32_t i = 0; i < count; ++i) {
        const uint32_t lpn = first + i;
        const Latest copy = data[v][lpn];
        Ppn chosen = entries[i];
        const bool newer = copy.ppn != kNoPpn && (tp.ppn == kNoPpn || copy.seq > tp.seq);
        if (newer) {
          chosen = copy.ppn;
        } else if (chosen != kNoPpn) {
          const bool holds = chosen < npages &&
                             (v == 0 ? st.oob[chosen].stage != 0 &&
                                           st.oob[chosen].kind == PageKind::kData &&
                                           st.oob[chosen].lpn == lpn
                                     : st.hidden_kind[chosen] == 0 &&
                                           st.hidden_lpn[chosen] == lpn);
          if (!holds) chosen = copy.ppn;
        }
        st.map[v][lpn] = chosen;
        if (chosen != entries[i]) st.corrections[v].emplace_back(lpn, chosen);
      }
    }
  }
  return st;
}

}  // namespace pearl
