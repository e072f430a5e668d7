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

#include <map>
#include <random>

#include <gtest/gtest.h>

#include "pearl/error.hpp"

namespace pearl {
namespace {

DeviceGeometry small_geometry() {
  DeviceGeometry g;
  g.blocks_per_plane = 16;
  g.pages_per_block = 8;
  g.page_bytes = 512;
  return g;
}

std::vector<uint8_t> payload(uint32_t tag, size_t n = 512) {
  std::vector<uint8_t> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = static_cast<uint8_t>(tag * 31 + i);
  return d;
}

TEST(DftlTest, RoundTrip) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  ftl.write(3, payload(3));
  EXPECT_EQ(ftl.read(3), payload(3));
}

TEST(DftlTest, OverwriteInvalidatesOldPage) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  ftl.write(0, payload(1));
  const Ppn first = ftl.translate(0);
  ftl.write(0, payload(2));
  const Ppn second = ftl.translate(0);
  EXPECT_NE(first, second);
  EXPECT_EQ(ftl.valid_pages(first / 8), 1u);
  EXPECT_EQ(ftl.read(0), payload(2));
}

TEST(DftlTest, AllocatorAdvancesToFreshBlock) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  const uint32_t free_before = ftl.free_blocks();
  for (uint32_t i = 0; i < 8; ++i) ftl.write(i, payload(i));
  const uint32_t block = ftl.data_block();
  EXPECT_EQ(ftl.free_blocks(), free_before - 1);
  ftl.write(8, payload(8));
  EXPECT_NE(ftl.data_block(), block);
  EXPECT_EQ(ftl.free_blocks(), free_before - 2);
}

TEST(DftlTest, CmtHitCostsNoRead) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  ftl.write(5, payload(5));
  const uint64_t reads = dev.reads();
  ftl.translate(5);
  EXPECT_EQ(dev.reads(), reads);
}

TEST(DftlTest, CmtMissReadsTranslationPage) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev, DftlConfig{0.84, 1});
  ftl.write(1, payload(1));
  ftl.write(2, payload(2));  // evicts lpn 1, writes its translation page
  const uint64_t tr = ftl.stats().translation_reads;
  EXPECT_EQ(ftl.read(1), payload(1));
  EXPECT_GE(ftl.stats().translation_reads, tr + 1);
}

TEST(DftlTest, UnmappedAndRange) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  try {
    ftl.read(4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnmapped);
  }
  EXPECT_THROW(ftl.write(ftl.logical_pages(Volume::kPublic), payload(0)), Error);
  EXPECT_THROW(ftl.read_page(Volume::kHidden, 0), Error);
}

TEST(DftlTest, VictimSelection) {
  const std::vector<uint32_t> a = {3, 0, 5};
  EXPECT_EQ(select_min_valid(a, {true, true, true}), 1);
  const std::vector<uint32_t> b = {2, 2};
  EXPECT_EQ(select_min_valid(b, {true, true}), 0);
  EXPECT_EQ(select_min_valid(b, {false, false}), -1);
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  EXPECT_FALSE(ftl.gc_select_victim().has_value());
}

TEST(DftlTest, GcOfFullyInvalidBlockOnlyErases) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  for (uint32_t i = 0; i < 8; ++i) ftl.write(0, payload(i));  // fills block 0
  ftl.write(0, payload(9));  // opens block 1; block 0 now all invalid
  ASSERT_EQ(ftl.gc_select_victim(), 0u);
  const uint64_t programs = dev.programs();
  const uint64_t erases = dev.erases();
  EXPECT_EQ(ftl.gc_run(), 8u);
  EXPECT_EQ(dev.programs(), programs);
  EXPECT_EQ(dev.erases(), erases + 1);
}

TEST(DftlTest, GcProgramsEachValidPage) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev);
  for (uint32_t i = 0; i < 8; ++i) ftl.write(i, payload(i));
  for (uint32_t i = 0; i < 5; ++i) ftl.write(i, payload(100 + i));
  // Block 0 holds 3 valid pages; the data cursor sits in block 1.
  ASSERT_EQ(ftl.valid_pages(0), 3u);
  const uint64_t programs = dev.programs();
  const uint64_t erases = dev.erases();
  ftl.gc_run();
  EXPECT_EQ(dev.programs(), programs + 3);
  EXPECT_EQ(dev.erases(), erases + 1);
  for (uint32_t i = 0; i < 8; ++i) {
    EXPECT_EQ(ftl.read(i), payload(i < 5 ? 100 + i : i));
  }
}

TEST(DftlTest, GcStormPreservesData) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev, DftlConfig{0.6, 16});
  std::mt19937_64 rng(42);
  std::map<uint32_t, uint32_t> shadow;
  const uint32_t n = ftl.logical_pages(Volume::kPublic);
  for (int op = 0; op < 4000; ++op) {
    const uint32_t lpn = static_cast<uint32_t>(rng() % n);
    if (rng() % 10 == 0 && shadow.count(lpn)) {
      ftl.trim(lpn);
      shadow.erase(lpn);
    } else {
      const uint32_t tag = static_cast<uint32_t>(rng());
      ftl.write(lpn, payload(tag));
      shadow[lpn] = tag;
    }
  }
  EXPECT_GT(ftl.stats().gc_runs, 10u);
  for (const auto& [lpn, tag] : shadow) EXPECT_EQ(ftl.read(lpn), payload(tag));
  for (Ppn p = 0; p < dev.geometry().total_pages(); ++p) {
    EXPECT_LE(dev.program_count(p), 1);
  }
  // Free-list conservation: every block is free or holds programmed pages.
  uint32_t in_use = 0;
  for (uint32_t b = 0; b < dev.geometry().total_blocks(); ++b) {
    if (dev.program_count(dev.first_ppn(b)) > 0) ++in_use;
  }
  EXPECT_EQ(in_use + ftl.free_blocks(), dev.geometry().total_blocks());
}

TEST(DftlTest, ColdStartEquivalence) {
  FlashDevice dev(small_geometry());
  Dftl ftl(dev, DftlConfig{0.84, 4});
  for (uint32_t i = 0; i < 40; ++i) ftl.write(i, payload(i));
  std::vector<Ppn> warm;
  for (uint32_t i = 0; i < 40; ++i) warm.push_back(ftl.translate(i));
  ftl.flush();
  for (uint32_t i = 0; i < 40; ++i) EXPECT_EQ(ftl.translate((i * 7) % 40), warm[(i * 7) % 40]);
}

}  // namespace
}  // namespace pearl
