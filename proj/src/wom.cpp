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

#include "pearl/wom.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "pearl/error.hpp"

namespace pearl {
namespace {

uint32_t parse_binary(std::string_view text, unsigned* width) {
  if (text.empty() || text.size() > 16) {
    fail(ErrorCode::kInvalidArgument,
         "binary string must have 1..16 digits: '" + std::string(text) + "'");
  }
  uint32_t v = 0;
  for (char ch : text) {
    if (ch != '0' && ch != '1') {
      fail(ErrorCode::kInvalidArgument,
           "not a binary string: '" + std::string(text) + "'");
    }
    v = (v << 1) | static_cast<uint32_t>(ch == '1');
  }
  *width = static_cast<unsigned>(text.size());
  return v;
}

std::vector<uint32_t> bins(std::initializer_list<const char*> items) {
  std::vector<uint32_t> out;
  for (const char* s : items) {
    unsigned w = 0;
    out.push_back(parse_binary(s, &w));
  }
  return out;
}

}  // namespace

Message parse_message(std::string_view text) {
  Message m;
  m.bits = parse_binary(text, &m.width);
  return m;
}

Codeword parse_codeword(std::string_view text) {
  Codeword c;
  c.bits = parse_binary(text, &c.width);
  return c;
}

std::string to_string(const Message& m) { return to_bit_string(m.bits, m.width); }
std::string to_string(const Codeword& c) { return to_bit_string(c.bits, c.width); }

WomCode WomCode::builtin_2_3() {
  auto first = bins({"000", "001", "010", "100"});
  auto wb = bins({"111", "110", "101", "011"});
  std::vector<std::vector<uint32_t>> a_sets;
  for (uint32_t c : first) a_sets.push_back({c});
  // wa(m) == E1(m): rewriting the same message sets no bits.
  return WomCode("(2,3)", 2, 3, first, first, wb, std::move(a_sets));
}

WomCode WomCode::builtin_3_5() {
  auto first = bins({"00000", "00001", "00010", "00100", "01000", "10000",
                     "11000", "10100"});
  auto wa = bins({"11110", "11001", "11010", "11100", "11111", "11101",
                  "11000", "11011"});
  auto wb = bins({"10011", "10110", "10101", "01111", "01101", "01110",
                  "10111", "10100"});
  std::vector<std::vector<uint32_t>> a_sets = {
      bins({"00100", "01000", "11000", "10100"}),
      bins({"00000", "00001", "01000", "11000"}),
      bins({"00000", "00010", "01000", "11000"}),
      bins({"00000", "10000", "11000", "10100"}),
      bins({"00010", "10000", "11000", "10100"}),
      bins({"00001", "10000", "11000", "10100"}),
      bins({"00000", "01000", "10000", "11000"}),
      bins({"00001", "00010", "01000", "11000"}),
  };
  return WomCode("(3,5)", 3, 5, first, wa, wb, std::move(a_sets));
}

WomCode WomCode::by_name(std::string_view name) {
  std::string s;
  for (char ch : name) {
    if (ch != '(' && ch != ')' && ch != ' ') s.push_back(ch);
  }
  if (s == "2,3") return builtin_2_3();
  if (s == "3,5") return builtin_3_5();
  fail(ErrorCode::kInvalidArgument, "unknown built-in code: " + std::string(name));
}

WomCode WomCode::parse_table(std::string_view text, std::string name) {
  std::istringstream in{std::string(text)};
  std::string line;
  unsigned k = 0, n = 0;
  std::vector<int64_t> first, wa, wb;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string m_s, f_s, a_s, b_s, extra;
    if (!(fields >> m_s)) continue;
    if (!(fields >> f_s >> a_s >> b_s) || (fields >> extra)) {
      fail(ErrorCode::kInvalidArgument,
           "line " + std::to_string(line_no) + ": expected 4 columns");
    }
    unsigned mk, fw, aw, bw;
    uint32_t m = parse_binary(m_s, &mk);
    uint32_t f = parse_binary(f_s, &fw);
    uint32_t a = parse_binary(a_s, &aw);
    uint32_t b = parse_binary(b_s, &bw);
    if (k == 0) {
      k = mk;
      n = fw;
      if (k > 6 || n <= k) {
        fail(ErrorCode::kInvalidArgument, "unsupported code shape");
      }
      first.assign(1u << k, -1);
      wa.assign(1u << k, -1);
      wb.assign(1u << k, -1);
    }
    if (mk != k || fw != n || aw != n || bw != n) {
      fail(ErrorCode::kInvalidArgument,
           "line " + std::to_string(line_no) + ": inconsistent widths");
    }
    if (first[m] >= 0) {
      fail(ErrorCode::kInvalidArgument,
           "line " + std::to_string(line_no) + ": duplicate message");
    }
    first[m] = f;
    wa[m] = a;
    wb[m] = b;
  }
  if (k == 0) fail(ErrorCode::kInvalidArgument, "empty code table");
  std::vector<uint32_t> f32, a32, b32;
  for (uint32_t m = 0; m < (1u << k); ++m) {
    if (first[m] < 0) {
      fail(ErrorCode::kInvalidArgument,
           "missing row for message " + to_bit_string(m, k));
    }
    f32.push_back(static_cast<uint32_t>(first[m]));
    a32.push_back(static_cast<uint32_t>(wa[m]));
    b32.push_back(static_cast<uint32_t>(wb[m]));
  }
  auto a_sets = assign_partition(k, f32, a32, b32);
  return WomCode(std::move(name), k, n, f32, a32, b32, std::move(a_sets));
}

std::vector<std::vector<uint32_t>> assign_partition(
    unsigned k, const std::vector<uint32_t>& first,
    const std::vector<uint32_t>& wa, const std::vector<uint32_t>& wb) {
  std::vector<uint32_t> c1 = first;
  std::sort(c1.begin(), c1.end());
  c1.erase(std::unique(c1.begin(), c1.end()), c1.end());
  const size_t half = c1.size() / 2;
  std::vector<std::vector<uint32_t>> out(1u << k);
  for (uint32_t m = 0; m < (1u << k); ++m) {
    std::vector<uint32_t>& a = out[m];
    std::vector<uint32_t> both;
    for (uint32_t c : c1) {
      const bool ok_a = dominates(wa[m], c);
      const bool ok_b = dominates(wb[m], c);
      if (ok_a && !ok_b) a.push_back(c);
      if (ok_a && ok_b) both.push_back(c);
    }
    for (uint32_t c : both) {
      if (a.size() >= half) break;
      a.push_back(c);
    }
    std::sort(a.begin(), a.end());
  }
  return out;
}

WomCode::WomCode(std::string name, unsigned k, unsigned n,
                 std::vector<uint32_t> first, std::vector<uint32_t> wa,
                 std::vector<uint32_t> wb,
                 std::vector<std::vector<uint32_t>> a_sets)
    : name_(std::move(name)),
      k_(k),
      n_(n),
      first_(std::move(first)),
      wa_(std::move(wa)),
      wb_(std::move(wb)) {
  const size_t mc = size_t{1} << k_;
  if (k_ < 1 || k_ > 6 || n_ <= k_ || n_ > 16 || first_.size() != mc ||
      wa_.size() != mc || wb_.size() != mc || a_sets.size() != mc) {
    fail(ErrorCode::kInvalidArgument, "malformed WOM code tables");
  }
  a_mask_.assign(mc, 0);
  for (uint32_t m = 0; m < mc; ++m) set_partition_a(m, a_sets[m]);
  rebuild_lookup();
}

void WomCode::set_partition_a(uint32_t m, std::vector<uint32_t> a_set) {
  uint64_t mask = 0;
  for (uint32_t c : a_set) {
    for (uint32_t j = 0; j < first_.size(); ++j) {
      if (first_[j] == c) mask |= uint64_t{1} << j;
    }
  }
  a_mask_.at(m) = mask;
}

void WomCode::set_wa(uint32_t m, uint32_t c) {
  wa_.at(m) = c;
  rebuild_lookup();
}

void WomCode::rebuild_lookup() {
  const size_t space = size_t{1} << n_;
  d1_.assign(space, -1);
  d2_.assign(space, -1);
  hid_.assign(space, -1);
  for (uint32_t m = 0; m < first_.size(); ++m) {
    d1_[first_[m]] = static_cast<int32_t>(m);
    d2_[wa_[m]] = static_cast<int32_t>(m);
    hid_[wa_[m]] = 0;
  }
  // wb written second so a degenerate wa == wb reads as hidden 1; the
  // partition report flags that case.
  for (uint32_t m = 0; m < first_.size(); ++m) {
    d2_[wb_[m]] = static_cast<int32_t>(m);
    hid_[wb_[m]] = 1;
  }
}

bool WomCode::in_a(uint32_t m, uint32_t c1) const {
  for (uint32_t j = 0; j < first_.size(); ++j) {
    if (first_[j] == c1) return (a_mask_[m] >> j) & 1u;
  }
  return false;
}

std::vector<uint32_t> WomCode::partition_a(uint32_t m) const {
  std::vector<uint32_t> out;
  for (uint32_t j = 0; j < first_.size(); ++j) {
    if ((a_mask_[m] >> j) & 1u) out.push_back(first_[j]);
  }
  return out;
}

std::vector<uint32_t> WomCode::partition_b(uint32_t m) const {
  std::vector<uint32_t> out;
  for (uint32_t j = 0; j < first_.size(); ++j) {
    if (!((a_mask_[m] >> j) & 1u)) out.push_back(first_[j]);
  }
  return out;
}

int32_t WomCode::second_raw(uint32_t m, uint32_t existing) const {
  int32_t j = d1_[existing];
  if (j < 0) return -1;
  return static_cast<int32_t>(((a_mask_[m] >> j) & 1u) ? wa_[m] : wb_[m]);
}

Codeword WomCode::encode_first(const Message& m) const {
  if (m.width != k_) fail(ErrorCode::kInvalidArgument, "message width mismatch");
  return Codeword{first_[m.bits], n_};
}

Codeword WomCode::encode_second(const Message& m,
                                const Codeword& existing) const {
  if (m.width != k_ || existing.width != n_) {
    fail(ErrorCode::kInvalidArgument, "width mismatch");
  }
  int32_t c = second_raw(m.bits, existing.bits);
  if (c < 0) {
    fail(ErrorCode::kUndecodable,
         "existing codeword " + to_string(existing) + " is not a first write");
  }
  return Codeword{static_cast<uint32_t>(c), n_};
}

Codeword WomCode::encode_full(const Message& p, bool hidden) const {
  if (p.width != k_) fail(ErrorCode::kInvalidArgument, "message width mismatch");
  return Codeword{hidden ? wb_[p.bits] : wa_[p.bits], n_};
}

Message WomCode::decode_first(const Codeword& c) const {
  if (c.width != n_) fail(ErrorCode::kInvalidArgument, "codeword width mismatch");
  int32_t m = d1_[c.bits];
  if (m < 0) {
    fail(ErrorCode::kUndecodable, to_string(c) + " is not a first-write codeword");
  }
  return Message{static_cast<uint32_t>(m), k_};
}

Message WomCode::decode_second(const Codeword& c) const {
  if (c.width != n_) fail(ErrorCode::kInvalidArgument, "codeword width mismatch");
  int32_t m = d2_[c.bits];
  if (m < 0) {
    fail(ErrorCode::kUndecodable, to_string(c) + " is not a second-write codeword");
  }
  return Message{static_cast<uint32_t>(m), k_};
}

bool WomCode::decode_hidden(const Codeword& c) const {
  if (c.width != n_) fail(ErrorCode::kInvalidArgument, "codeword width mismatch");
  int32_t h = hid_[c.bits];
  if (h < 0) {
    fail(ErrorCode::kUndecodable, to_string(c) + " is not a second-write codeword");
  }
  return h == 1;
}

WomReport verify_wom2(const WomCode& code) {
  WomReport r;
  const unsigned k = code.k(), n = code.n();
  auto note = [&](std::string msg) {
    r.valid = false;
    r.violations.push_back(std::move(msg));
  };
  const auto& first = code.first_codewords();
  for (uint32_t m = 0; m < code.message_count(); ++m) {
    for (uint32_t m2 = m + 1; m2 < code.message_count(); ++m2) {
      if (first[m] == first[m2]) {
        note("E1 not injective: E1(" + to_bit_string(m, k) + ") = E1(" +
             to_bit_string(m2, k) + ") = " + to_bit_string(first[m], n));
      }
    }
    if (code.decode_first_raw(first[m]) != static_cast<int32_t>(m)) {
      note("D1(E1(" + to_bit_string(m, k) + ")) != " + to_bit_string(m, k));
    }
  }
  for (uint32_t m = 0; m < code.message_count(); ++m) {
    for (uint32_t c : first) {
      ++r.checked_pairs;
      const bool a = code.in_a(m, c);
      const uint32_t out = a ? code.wa(m) : code.wb(m);
      const std::string ctx = "E2(" + to_bit_string(m, k) + ", " +
                              to_bit_string(c, n) + ") = " +
                              to_bit_string(out, n);
      if (!dominates(out, c)) {
        note(ctx + " is not ⊵ " + to_bit_string(c, n));
      }
      if (code.decode_second_raw(out) != static_cast<int32_t>(m)) {
        note("D2(" + ctx + ") != " + to_bit_string(m, k));
      }
    }
  }
  return r;
}

PartitionReport verify_equal_partition(const WomCode& code) {
  PartitionReport r;
  const unsigned k = code.k(), n = code.n();
  std::vector<uint32_t> c1 = code.first_codewords();
  std::sort(c1.begin(), c1.end());
  for (uint32_t m = 0; m < code.message_count(); ++m) {
    auto a = code.partition_a(m);
    auto b = code.partition_b(m);
    r.a_sizes.push_back(a.size());
    r.b_sizes.push_back(b.size());
    const std::string tag = "m=" + to_bit_string(m, k) + ": ";
    std::vector<uint32_t> both;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(both));
    std::vector<uint32_t> all;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(all));
    if (!both.empty()) {
      r.partition_ok = false;
      r.violations.push_back(tag + "A and B overlap");
    }
    if (all != c1) {
      r.partition_ok = false;
      r.violations.push_back(tag + "A ∪ B does not cover C1");
    }
    if (a.empty() || b.empty()) {
      r.partition_ok = false;
      r.violations.push_back(tag + "empty set " + (a.empty() ? "A" : "B"));
    }
    if (code.wa(m) == code.wb(m)) {
      r.partition_ok = false;
      r.violations.push_back(tag + "wa == wb = " + to_bit_string(code.wa(m), n));
    }
    if (a.size() != b.size()) {
      r.equal = false;
      r.violations.push_back(tag + "|A|=" + std::to_string(a.size()) +
                             " != |B|=" + std::to_string(b.size()));
    }
  }
  if (!r.partition_ok) r.equal = false;
  return r;
}

PageCodecLayout PageCodecLayout::for_page(const WomCode& code,
                                          size_t page_bytes) {
  PageCodecLayout l;
  l.page_bits = page_bytes * 8;
  l.k = code.k();
  l.n = code.n();
  l.groups_per_page = (l.page_bits / l.n) / 8 * 8;
  if (l.groups_per_page == 0) {
    fail(ErrorCode::kInvalidArgument, "page too small for one codeword octet");
  }
  return l;
}

PageCodecLayout PageCodecLayout::mini(const WomCode& code, size_t groups) {
  PageCodecLayout l;
  l.k = code.k();
  l.n = code.n();
  l.groups_per_page = groups;
  l.page_bits = groups * l.n;
  return l;
}

namespace {

void check_len(const BitString& b, size_t bits, const char* what) {
  if (b.size() != bits) {
    fail(ErrorCode::kInvalidArgument,
         std::string(what) + " length " + std::to_string(b.size()) +
             " != " + std::to_string(bits) + " bits");
  }
}

[[noreturn]] void undecodable(size_t g, uint32_t c, unsigned n) {
  fail(ErrorCode::kUndecodable, "group " + std::to_string(g) + " holds " +
                                    to_bit_string(c, n) +
                                    ", not a codeword for this stage");
}

}  // namespace

BitString encode_page_first(const PageCodecLayout& l, const WomCode& code,
                            const BitString& pub) {
  check_len(pub, l.public_bits(), "public payload");
  BitString raw(l.page_bits);
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t m = read_bits(pub.bytes(), g * l.k, l.k);
    write_bits(raw.bytes(), g * l.n, l.n, code.first(m));
  }
  return raw;
}

BitString encode_page_second(const PageCodecLayout& l, const WomCode& code,
                             const BitString& pub, const BitString& existing) {
  check_len(pub, l.public_bits(), "public payload");
  check_len(existing, l.page_bits, "existing page");
  BitString raw(l.page_bits);
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t m = read_bits(pub.bytes(), g * l.k, l.k);
    uint32_t c = read_bits(existing.bytes(), g * l.n, l.n);
    int32_t out = code.second_raw(m, c);
    if (out < 0) undecodable(g, c, l.n);
    write_bits(raw.bytes(), g * l.n, l.n, static_cast<uint32_t>(out));
  }
  return raw;
}

BitString encode_page_full(const PageCodecLayout& l, const WomCode& code,
                           const BitString& pub, const BitString& hidden) {
  check_len(pub, l.public_bits(), "public payload");
  check_len(hidden, l.hidden_bits(), "hidden payload");
  BitString raw(l.page_bits);
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t m = read_bits(pub.bytes(), g * l.k, l.k);
    uint32_t c = hidden.get(g) ? code.wb(m) : code.wa(m);
    write_bits(raw.bytes(), g * l.n, l.n, c);
  }
  return raw;
}

BitString decode_page_public(const PageCodecLayout& l, const WomCode& code,
                             const BitString& raw, WriteStage stage) {
  check_len(raw, l.page_bits, "raw page");
  BitString pub(l.public_bits());
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t c = read_bits(raw.bytes(), g * l.n, l.n);
    int32_t m = stage == WriteStage::kFirst ? code.decode_first_raw(c)
                                            : code.decode_second_raw(c);
    if (m < 0) undecodable(g, c, l.n);
    write_bits(pub.bytes(), g * l.k, l.k, static_cast<uint32_t>(m));
  }
  return pub;
}

BitString decode_page_hidden(const PageCodecLayout& l, const WomCode& code,
                             const BitString& raw) {
  check_len(raw, l.page_bits, "raw page");
  BitString hid(l.hidden_bits());
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t c = read_bits(raw.bytes(), g * l.n, l.n);
    int32_t h = code.hidden_raw(c);
    if (h < 0) undecodable(g, c, l.n);
    hid.set(g, h == 1);
  }
  return hid;
}

void accumulate_histogram(CodewordHistogram& hist, const BitString& raw,
                          const PageCodecLayout& l, const WomCode& code) {
  check_len(raw, l.page_bits, "raw page");
  if (hist.counts.size() != (size_t{1} << l.n)) {
    hist.counts.assign(size_t{1} << l.n, 0);
  }
  for (size_t g = 0; g < l.groups_per_page; ++g) {
    uint32_t c = read_bits(raw.bytes(), g * l.n, l.n);
    if (code.decode_second_raw(c) < 0) undecodable(g, c, l.n);
    ++hist.counts[c];
    ++hist.total;
  }
}

CodewordHistogram codeword_histogram(std::span<const BitString> pages,
                                     const PageCodecLayout& l,
                                     const WomCode& code) {
  CodewordHistogram hist;
  hist.counts.assign(size_t{1} << l.n, 0);
  for (const BitString& p : pages) accumulate_histogram(hist, p, l, code);
  return hist;
}

}  // namespace pearl
