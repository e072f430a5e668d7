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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pearl/bits.hpp"

namespace pearl {

/// A k-bit message. `width` travels with the value so mismatches are caught.
struct Message {
  uint32_t bits = 0;
  unsigned width = 0;
  bool operator==(const Message&) const = default;
};

/// An n-bit physical codeword.
struct Codeword {
  uint32_t bits = 0;
  unsigned width = 0;
  bool operator==(const Codeword&) const = default;
};

Message parse_message(std::string_view text);
Codeword parse_codeword(std::string_view text);
std::string to_string(const Message& m);
std::string to_string(const Codeword& c);

// c_hi dominates c_lo when every set bit of c_lo is also set in c_hi.
inline bool dominates(uint32_t c_hi, uint32_t c_lo) {
  return (c_hi & c_lo) == c_lo;
}

enum class WriteStage : uint8_t { kFirst = 1, kSecond = 2 };

/// A (k,n) two-write WOM code supporting a first-write partition: the second
/// write of message m over codeword c yields wa(m) when c is in A_m and wb(m)
/// when c is in B_m. A hidden bit h selects wa (h=0) or wb (h=1) directly.
///
/// Tables are explicit data. Codes built from a text table derive their
/// partition with `assign_partition`.
class WomCode {
 public:
  static WomCode builtin_2_3();
  static WomCode builtin_3_5();
  /// Accepts "2,3", "(2,3)", "3,5", "(3,5)".
  static WomCode by_name(std::string_view name);
  /// Parses rows of `message first_write hidden0 hidden1` binary strings.
  /// Blank lines and '#' comments are skipped.
  static WomCode parse_table(std::string_view text, std::string name);

  /// `a_sets[m]` lists the first-write codewords forming A_m; B_m is the rest
  /// of C1.
  WomCode(std::string name, unsigned k, unsigned n,
          std::vector<uint32_t> first, std::vector<uint32_t> wa,
          std::vector<uint32_t> wb, std::vector<std::vector<uint32_t>> a_sets);

  const std::string& name() const { return name_; }
  unsigned k() const { return k_; }
  unsigned n() const { return n_; }
  uint32_t message_count() const { return 1u << k_; }

  Codeword encode_first(const Message& m) const;
  Codeword encode_second(const Message& m, const Codeword& existing) const;
  Codeword encode_full(const Message& p, bool hidden) const;
  Message decode_first(const Codeword& c) const;
  /// Only meaningful for codewords known to be second-write codewords; the
  /// caller supplies the stage, the codec never guesses it.
  Message decode_second(const Codeword& c) const;
  bool decode_hidden(const Codeword& c) const;

  // Raw table access, no width checks.
  uint32_t first(uint32_t m) const { return first_[m]; }
  uint32_t wa(uint32_t m) const { return wa_[m]; }
  uint32_t wb(uint32_t m) const { return wb_[m]; }
  const std::vector<uint32_t>& first_codewords() const { return first_; }
  bool in_a(uint32_t m, uint32_t c1) const;
  std::vector<uint32_t> partition_a(uint32_t m) const;
  std::vector<uint32_t> partition_b(uint32_t m) const;

  // Hot-path variants used by the page codec. Return -1 when undecodable.
  int32_t decode_first_raw(uint32_t c) const { return d1_[c]; }
  int32_t decode_second_raw(uint32_t c) const { return d2_[c]; }
  int32_t hidden_raw(uint32_t c) const { return hid_[c]; }
  int32_t second_raw(uint32_t m, uint32_t existing) const;

  // Test hooks for building mutated tables.
  void set_wa(uint32_t m, uint32_t c);
  void set_partition_a(uint32_t m, std::vector<uint32_t> a_set);

 private:
  void rebuild_lookup();

  std::string name_;
  unsigned k_ = 0;
  unsigned n_ = 0;
  std::vector<uint32_t> first_;
  std::vector<uint32_t> wa_;
  std::vector<uint32_t> wb_;
  // a_mask_[m] bit j set iff first_[j] is in A_m.
  std::vector<uint64_t> a_mask_;
  std::vector<int32_t> d1_;
  std::vector<int32_t> d2_;
  std::vector<int32_t> hid_;
};

/// Partition rule for tables that do not list one: A_m takes every C1 member
/// only wa(m) dominates, then members both wa(m) and wb(m) dominate in
/// ascending order while |A_m| < |C1|/2. Everything else goes to B_m.
std::vector<std::vector<uint32_t>> assign_partition(
    unsigned k, const std::vector<uint32_t>& first,
    const std::vector<uint32_t>& wa, const std::vector<uint32_t>& wb);

struct WomReport {
  bool valid = true;
  size_t checked_pairs = 0;
  std::vector<std::string> violations;
};

/// Exhaustive check of the four two-write WOM properties over every message
/// and every first-write codeword.
WomReport verify_wom2(const WomCode& code);

struct PartitionReport {
  bool partition_ok = true;  // disjoint, cover C1, both sides nonempty
  bool equal = true;         // |A_m| == |B_m| for all m
  std::vector<size_t> a_sizes;
  std::vector<size_t> b_sizes;
  std::vector<std::string> violations;
};

PartitionReport verify_equal_partition(const WomCode& code);

/// How codeword groups are packed into one physical page. Group g occupies
/// bits [g*n, (g+1)*n) of the page; it carries public bits [g*k, (g+1)*k)
/// and hidden bit g.
struct PageCodecLayout {
  size_t page_bits = 0;
  size_t groups_per_page = 0;
  unsigned k = 0;
  unsigned n = 0;

  /// Byte-aligned layout for a device page: groups_per_page is the largest
  /// multiple of 8 not exceeding floor(page_bits / n).
  static PageCodecLayout for_page(const WomCode& code, size_t page_bytes);
  /// Unaligned layout of exactly `groups` groups (page_bits = groups * n).
  static PageCodecLayout mini(const WomCode& code, size_t groups);

  size_t public_bits() const { return groups_per_page * k; }
  size_t hidden_bits() const { return groups_per_page; }
  size_t public_payload_bytes() const { return public_bits() / 8; }
  size_t hidden_payload_bytes() const { return hidden_bits() / 8; }
  size_t codeword_bits() const { return groups_per_page * n; }
  size_t slack_bits() const { return page_bits - codeword_bits(); }
};

BitString encode_page_first(const PageCodecLayout& layout, const WomCode& code,
                            const BitString& public_bits);
BitString encode_page_second(const PageCodecLayout& layout,
                             const WomCode& code, const BitString& public_bits,
                             const BitString& existing_raw);
BitString encode_page_full(const PageCodecLayout& layout, const WomCode& code,
                           const BitString& public_bits,
                           const BitString& hidden_bits);
BitString decode_page_public(const PageCodecLayout& layout,
                             const WomCode& code, const BitString& raw,
                             WriteStage stage);
BitString decode_page_hidden(const PageCodecLayout& layout,
                             const WomCode& code, const BitString& raw);

struct CodewordHistogram {
  std::vector<uint64_t> counts;  // indexed by codeword value, size 2^n
  uint64_t total = 0;
};

/// Counts second-write codewords over every group of every page.
CodewordHistogram codeword_histogram(std::span<const BitString> pages,
                                     const PageCodecLayout& layout,
                                     const WomCode& code);
/// Adds one page's groups into `hist`.
void accumulate_histogram(CodewordHistogram& hist, const BitString& raw,
                          const PageCodecLayout& layout, const WomCode& code);

}  // namespace pearl
