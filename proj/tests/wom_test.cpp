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

#include <random>

#include <gtest/gtest.h>

#include "pearl/error.hpp"

namespace pearl {
namespace {

Message M(const char* s) { return parse_message(s); }
Codeword C(const char* s) { return parse_codeword(s); }

TEST(WomCodeTest, FirstWrite23) {
  const WomCode code = WomCode::builtin_2_3();
  EXPECT_EQ(code.encode_first(M("10")), C("010"));
  EXPECT_EQ(code.encode_first(M("00")), C("000"));
  EXPECT_EQ(code.decode_first(C("100")), M("11"));
}

TEST(WomCodeTest, FirstWrite35) {
  const WomCode code = WomCode::builtin_3_5();
  EXPECT_EQ(code.encode_first(M("111")), C("10100"));
  EXPECT_EQ(code.decode_first(C("00001")), M("001"));
  EXPECT_EQ(code.decode_first(C("00000")), M("000"));
}

TEST(WomCodeTest, SecondWrite23) {
  const WomCode code = WomCode::builtin_2_3();
  EXPECT_EQ(code.encode_second(M("01"), C("010")), C("110"));
  // Existing codeword already encodes the message.
  EXPECT_EQ(code.encode_second(M("01"), C("001")), C("001"));
  EXPECT_EQ(code.decode_second(C("111")), M("00"));
}

TEST(WomCodeTest, SecondWrite35UsesPartition) {
  const WomCode code = WomCode::builtin_3_5();
  EXPECT_TRUE(code.in_a(0, 0b00100));
  EXPECT_EQ(code.encode_second(M("000"), C("00100")), C("11110"));
  EXPECT_EQ(code.decode_second(C("11000")), M("110"));
  EXPECT_EQ(code.decode_second(C("10101")), M("010"));
}

TEST(WomCodeTest, PartitionA000MatchesTable) {
  const WomCode code = WomCode::builtin_3_5();
  std::vector<uint32_t> expect = {0b00100, 0b01000, 0b11000, 0b10100};
  auto a = code.partition_a(0);
  std::sort(a.begin(), a.end());
  std::sort(expect.begin(), expect.end());
  EXPECT_EQ(a, expect);
}

TEST(WomCodeTest, FullWrite35) {
  const WomCode code = WomCode::builtin_3_5();
  EXPECT_EQ(code.encode_full(M("000"), false), C("11110"));
  EXPECT_EQ(code.encode_full(M("000"), true), C("10011"));
  EXPECT_EQ(code.encode_full(M("010"), true), C("10101"));
  EXPECT_FALSE(code.decode_hidden(C("11000")));
  EXPECT_TRUE(code.decode_hidden(C("10101")));
  EXPECT_FALSE(code.decode_hidden(C("11110")));
}

TEST(WomCodeTest, WidthMismatchRejected) {
  const WomCode code = WomCode::builtin_3_5();
  EXPECT_THROW(code.encode_first(M("10")), Error);
  EXPECT_THROW(code.decode_first(C("010")), Error);
}

TEST(WomCodeTest, UndecodableCodeword) {
  const WomCode code = WomCode::builtin_3_5();
  try {
    code.decode_first(C("11111"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndecodable);
  }
}

TEST(WomCodeTest, ParseTextTable) {
  const WomCode code = WomCode::parse_table(
      "# k=2 n=3\n"
      "00 000 000 111\n"
      "01 001 001 110\n"
      "10 010 010 101\n"
      "11 100 100 011\n",
      "t23");
  EXPECT_EQ(code.k(), 2u);
  EXPECT_EQ(code.n(), 3u);
  EXPECT_EQ(code.encode_second(M("01"), C("010")), C("110"));
  EXPECT_TRUE(verify_wom2(code).valid);
  EXPECT_THROW(WomCode::parse_table("00 000 000\n", "bad"), Error);
}

TEST(WomCodeTest, ByName) {
  EXPECT_EQ(WomCode::by_name("(3,5)").n(), 5u);
  EXPECT_EQ(WomCode::by_name("2,3").n(), 3u);
  EXPECT_THROW(WomCode::by_name("4,7"), Error);
}

TEST(VerifyTest, BuiltinsValid) {
  for (const WomCode& code : {WomCode::builtin_2_3(), WomCode::builtin_3_5()}) {
    const WomReport r = verify_wom2(code);
    EXPECT_TRUE(r.valid) << code.name();
    EXPECT_TRUE(r.violations.empty());
    EXPECT_EQ(r.checked_pairs, code.message_count() * code.message_count());
  }
}

TEST(VerifyTest, CorruptedWaReported) {
  WomCode code = WomCode::builtin_3_5();
  code.set_wa(0, 0b00110);
  const WomReport r = verify_wom2(code);
  EXPECT_FALSE(r.valid);
  bool found = false;
  for (const auto& v : r.violations) {
    if (v.find("not ⊵ 01000") != std::string::npos) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(VerifyTest, EqualPartition35) {
  const PartitionReport r = verify_equal_partition(WomCode::builtin_3_5());
  EXPECT_TRUE(r.partition_ok);
  EXPECT_TRUE(r.equal);
  for (size_t m = 0; m < 8; ++m) {
    EXPECT_EQ(r.a_sizes[m], 4u);
    EXPECT_EQ(r.b_sizes[m], 4u);
  }
}

TEST(VerifyTest, UnequalPartition23) {
  const PartitionReport r = verify_equal_partition(WomCode::builtin_2_3());
  EXPECT_TRUE(r.partition_ok);
  EXPECT_FALSE(r.equal);
  for (size_t m = 0; m < 4; ++m) {
    EXPECT_EQ(r.a_sizes[m], 1u);
    EXPECT_EQ(r.b_sizes[m], 3u);
  }
}

TEST(VerifyTest, EmptyBSetFlagged) {
  WomCode code = WomCode::builtin_3_5();
  code.set_partition_a(0, code.first_codewords());
  const PartitionReport r = verify_equal_partition(code);
  EXPECT_FALSE(r.partition_ok);
  EXPECT_FALSE(r.violations.empty());
}

TEST(PageCodecTest, MiniPageExample) {
  const WomCode code = WomCode::builtin_3_5();
  const auto layout = PageCodecLayout::mini(code, 2);
  const BitString raw = encode_page_full(layout, code, BitString::parse("110010"),
                                         BitString::parse("01"));
  EXPECT_EQ(raw.to_string(), "1100010101");
  EXPECT_EQ(decode_page_hidden(layout, code, raw).to_string(), "01");
  EXPECT_EQ(decode_page_public(layout, code, raw, WriteStage::kSecond).to_string(),
            "110010");
}

TEST(PageCodecTest, ZeroFirstWriteIsZero) {
  const WomCode code = WomCode::builtin_3_5();
  const auto layout = PageCodecLayout::for_page(code, 2048);
  const BitString raw =
      encode_page_first(layout, code, BitString(layout.public_bits()));
  EXPECT_EQ(raw, BitString(layout.page_bits));
}

TEST(PageCodecTest, DeskAndPaperLayouts) {
  const WomCode code = WomCode::builtin_3_5();
  const auto desk = PageCodecLayout::for_page(code, 2048);
  EXPECT_EQ(desk.groups_per_page, 3272u);
  EXPECT_EQ(desk.public_payload_bytes(), 1227u);
  EXPECT_EQ(desk.hidden_payload_bytes(), 409u);
  const auto paper = PageCodecLayout::for_page(code, 16384);
  EXPECT_EQ(paper.groups_per_page, 26208u);
  EXPECT_EQ(paper.public_payload_bytes(), 9828u);
  EXPECT_EQ(paper.hidden_payload_bytes(), 3276u);
  EXPECT_EQ(paper.slack_bits(), 32u);
}

TEST(PageCodecTest, RoundTripRandomPages) {
  const WomCode code = WomCode::builtin_3_5();
  const auto layout = PageCodecLayout::for_page(code, 2048);
  std::mt19937_64 rng(7);
  auto random_bits = [&](size_t n) {
    BitString b(n);
    for (size_t i = 0; i < n; ++i) b.set(i, rng() & 1);
    return b;
  };
  for (int trial = 0; trial < 4; ++trial) {
    const BitString p1 = random_bits(layout.public_bits());
    const BitString p2 = random_bits(layout.public_bits());
    const BitString h = random_bits(layout.hidden_bits());
    const BitString first = encode_page_first(layout, code, p1);
    EXPECT_EQ(decode_page_public(layout, code, first, WriteStage::kFirst), p1);
    const BitString second = encode_page_second(layout, code, p2, first);
    EXPECT_EQ(decode_page_public(layout, code, second, WriteStage::kSecond), p2);
    for (size_t i = 0; i < first.bytes().size(); ++i) {
      EXPECT_EQ(first.bytes()[i] & ~second.bytes()[i], 0);
    }
    const BitString full = encode_page_full(layout, code, p2, h);
    EXPECT_EQ(decode_page_public(layout, code, full, WriteStage::kSecond), p2);
    EXPECT_EQ(decode_page_hidden(layout, code, full), h);
  }
}

TEST(HistogramTest, SingleGroup) {
  const WomCode code = WomCode::builtin_3_5();
  const auto layout = PageCodecLayout::mini(code, 1);
  const std::vector<BitString> pages = {BitString::parse("11110")};
  const auto hist = codeword_histogram(pages, layout, code);
  EXPECT_EQ(hist.total, 1u);
  EXPECT_EQ(hist.counts[0b11110], 1u);
}

TEST(HistogramTest, PublicSecondWriteRatio23) {
  const WomCode code = WomCode::builtin_2_3();
  const auto layout = PageCodecLayout::mini(code, 1000);
  std::mt19937_64 rng(11);
  CodewordHistogram hist;
  for (int page = 0; page < 100; ++page) {
    BitString p1(layout.public_bits()), p2(layout.public_bits());
    for (size_t i = 0; i < p1.size(); ++i) {
      p1.set(i, rng() & 1);
      p2.set(i, rng() & 1);
    }
    const BitString raw = encode_page_second(
        layout, code, p2, encode_page_first(layout, code, p1));
    accumulate_histogram(hist, raw, layout, code);
  }
  const double ratio = double(hist.counts[0b000]) / double(hist.counts[0b111]);
  EXPECT_NEAR(ratio, 1.0 / 3.0, 0.05 / 3.0);
}

TEST(HistogramTest, FullWriteRatio23) {
  const WomCode code = WomCode::builtin_2_3();
  const auto layout = PageCodecLayout::mini(code, 1000);
  std::mt19937_64 rng(13);
  CodewordHistogram hist;
  for (int page = 0; page < 100; ++page) {
    BitString p(layout.public_bits()), h(layout.hidden_bits());
    for (size_t i = 0; i < p.size(); ++i) p.set(i, rng() & 1);
    for (size_t i = 0; i < h.size(); ++i) h.set(i, rng() & 1);
    accumulate_histogram(hist, encode_page_full(layout, code, p, h), layout, code);
  }
  const double ratio = double(hist.counts[0b000]) / double(hist.counts[0b111]);
  EXPECT_NEAR(ratio, 1.0, 0.05);
}

}  // namespace
}  // namespace pearl
