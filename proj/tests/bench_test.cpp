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


#include "pearl/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "pearl/dftl.hpp"
#include "pearl/error.hpp"
#include "pearl/pearl_ftl.hpp"

namespace pearl {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PearlRig {
  FlashDevice dev{DeviceGeometry::desk()};
  std::unique_ptr<PearlFtl> ftl;
  PearlRig() {
    PearlConfig c;
    c.kdf.n = 1024;
    const std::string h = "hid";
    PearlFtl::format(dev, c, "pub");
    ftl = PearlFtl::mount(dev, "pub", &h, c);
  }
};

TEST(TraceTest, ParsesFixtureLine) {
  std::istringstream in("0,1024,4096,W,0.000\n");
  const Workload w = parse_trace(in);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].op, OpKind::kWrite);
  EXPECT_EQ(w[0].offset, 1024u * 512);
  EXPECT_EQ(w[0].size, 4096u);
  EXPECT_EQ(w[0].arrival, 0.0);
  EXPECT_EQ(w[0].volume, Volume::kPublic);
}

TEST(TraceTest, EmptyInput) {
  std::istringstream in("");
  EXPECT_TRUE(parse_trace(in).empty());
}

TEST(TraceTest, OpcodeCaseInsensitive) {
  std::istringstream in("0,0,512,r,0.1\n1,8,512,R,0.2\n");
  const Workload w = parse_trace(in);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].op, OpKind::kRead);
  EXPECT_EQ(w[1].op, OpKind::kRead);
}

TEST(TraceTest, WrapsOffsets) {
  std::istringstream in("0,10,512,w,0\n");
  const Workload w = parse_trace(in, 4096);
  EXPECT_EQ(w[0].offset, (10u * 512) % 4096);
}

TEST(TraceTest, MalformedLineReportsLineNumber) {
  std::istringstream in("0,0,512,W,0\n0,zz,512,W,0\n");
  try {
    parse_trace(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(TraceTest, MissingFile) {
  try {
    parse_trace_file("/nonexistent/trace.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(TraceTest, RedirectIsSeeded) {
  Workload w(200);
  for (auto& r : w) r.op = OpKind::kWrite;
  w[0].op = OpKind::kRead;
  Workload a = w, b = w;
  redirect_writes(a, 0.5, 9);
  redirect_writes(b, 0.5, 9);
  size_t hidden = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].volume, b[i].volume);
    hidden += a[i].volume == Volume::kHidden;
  }
  EXPECT_EQ(a[0].volume, Volume::kPublic);
  EXPECT_GT(hidden, 50u);
  EXPECT_LT(hidden, 150u);
}

TEST(SyntheticTest, ZeroCountRejected) {
  SyntheticSpec s;
  s.count = 0;
  s.region_bytes = 1 << 20;
  EXPECT_THROW(gen_synthetic(s), Error);
}

TEST(SyntheticTest, Deterministic) {
  SyntheticSpec s;
  s.count = 500;
  s.read_fraction = 0.5;
  s.region_bytes = 1 << 20;
  s.seed = 4;
  const Workload a = gen_synthetic(s), b = gen_synthetic(s);
  ASSERT_EQ(a.size(), 500u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].offset, b[i].offset);
    EXPECT_EQ(a[i].op, b[i].op);
    EXPECT_LE(a[i].offset + a[i].size, s.region_bytes);
    EXPECT_EQ(a[i].arrival, 0.0);
  }
}

TEST(SyntheticTest, UnalignedSizeRejected) {
  SyntheticSpec s;
  s.count = 1;
  s.request_bytes = 1000;
  s.region_bytes = 1 << 20;
  EXPECT_THROW(gen_synthetic(s), Error);
}

TEST(InitTest, DftlRunsGc) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const InitReport r = init_device(ftl, 0.5, 1);
  EXPECT_GE(r.gc_runs, 1u);
  EXPECT_EQ(r.public_pages, ftl.logical_pages(Volume::kPublic) / 2);
  EXPECT_EQ(r.hidden_pages, 0u);
}

TEST(InitTest, PearlFillsBothVolumes) {
  PearlRig r;
  const InitReport rep = init_device(*r.ftl, 0.5, 1);
  EXPECT_GE(rep.gc_runs, 1u);
  EXPECT_GT(rep.hidden_pages, 0u);
  EXPECT_EQ(r.ftl->read_page(Volume::kHidden, 0).size(), r.ftl->payload_bytes(Volume::kHidden));
}

TEST(InitTest, ZeroFillIsNoop) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  init_device(ftl, 0, 1);
  EXPECT_EQ(dev.programs(), 0u);
}

TEST(ReplayTest, SingleReadPearl) {
  PearlRig r;
  const std::vector<uint8_t> buf(r.ftl->payload_bytes(Volume::kPublic), 7);
  for (uint32_t lpn = 0; lpn < 14; ++lpn) r.ftl->write_page(Volume::kPublic, lpn, buf);
  const Workload w{{Volume::kPublic, 0, 16384, OpKind::kRead, 0}};
  const RunMetrics m = replay(*r.ftl, w);
  ASSERT_EQ(m.requests.size(), 1u);
  EXPECT_EQ(m.requests[0].pages, 14u);
  EXPECT_DOUBLE_EQ(m.requests[0].response_us(), 14 * 130 + 14 * 2.0);
}

TEST(ReplayTest, SingleReadDftl) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const std::vector<uint8_t> buf(2048, 3);
  for (uint32_t lpn = 0; lpn < 8; ++lpn) ftl.write_page(Volume::kPublic, lpn, buf);
  const Workload w{{Volume::kPublic, 0, 16384, OpKind::kRead, 0}};
  const RunMetrics m = replay(ftl, w);
  EXPECT_DOUBLE_EQ(m.requests[0].response_us(), 8 * 130 + 8 * 2.0);
}

TEST(ReplayTest, FifoQueuing) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const std::vector<uint8_t> buf(2048, 3);
  for (uint32_t lpn = 0; lpn < 16; ++lpn) ftl.write_page(Volume::kPublic, lpn, buf);
  const Workload w{{Volume::kPublic, 0, 16384, OpKind::kRead, 0},
                   {Volume::kPublic, 16384, 16384, OpKind::kRead, 0}};
  const RunMetrics m = replay(ftl, w);
  const double one = 8 * 130 + 8 * 2.0;
  EXPECT_DOUBLE_EQ(m.requests[0].response_us(), one);
  EXPECT_DOUBLE_EQ(m.requests[1].response_us(), 2 * one);
  EXPECT_DOUBLE_EQ(m.makespan_us, 2 * one);
  EXPECT_NEAR(m.iops, 2 / (2 * one * 1e-6), 1e-6);
}

TEST(ReplayTest, UnmappedReadsCounted) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const Workload w{{Volume::kPublic, 0, 4096, OpKind::kRead, 0}};
  const RunMetrics m = replay(ftl, w);
  EXPECT_EQ(m.unmapped_reads, 2u);
}

TEST(ReplayTest, BeyondVolumeRejected) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const uint64_t end = uint64_t{ftl.logical_pages(Volume::kPublic)} * 2048;
  const Workload w{{Volume::kPublic, end - 2048, 4096, OpKind::kWrite, 0}};
  EXPECT_THROW(replay(ftl, w), Error);
}

TEST(ReplayTest, HiddenRejectedOnDftl) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  const Workload w{{Volume::kHidden, 0, 512, OpKind::kWrite, 0}};
  try {
    replay(ftl, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kModeRejected);
  }
}

TEST(ReplayTest, DeterministicMetrics) {
  auto run = [] {
    FlashDevice dev(DeviceGeometry::desk());
    Dftl ftl(dev);
    SyntheticSpec s;
    s.count = 50;
    s.read_fraction = 0.5;
    s.region_bytes = 1 << 20;
    return summary_json(replay(ftl, gen_synthetic(s)));
  };
  EXPECT_EQ(run(), run());
}

TEST(ExportTest, DeterministicFiles) {
  FlashDevice dev(DeviceGeometry::desk());
  Dftl ftl(dev);
  SyntheticSpec s;
  s.count = 20;
  s.read_fraction = 0;
  s.region_bytes = 1 << 20;
  const RunMetrics m = replay(ftl, gen_synthetic(s));
  const fs::path dir = fs::temp_directory_path() / "pearl_export_test";
  fs::create_directories(dir);
  export_report(m, (dir / "a").string());
  export_report(m, (dir / "b").string());
  for (const char* ext : {".csv", ".series.csv", ".summary.json"}) {
    const std::string a = slurp(dir / (std::string("a") + ext));
    EXPECT_FALSE(a.empty()) << ext;
    EXPECT_EQ(a, slurp(dir / (std::string("b") + ext))) << ext;
  }
  const std::string csv = slurp(dir / "a.csv");
  EXPECT_EQ(csv.rfind("# ftl=dftl seed=1\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 22);
  fs::remove_all(dir);
}

TEST(ExportTest, UnwritablePath) {
  RunMetrics m;
  try {
    export_report(m, "/nonexistent/dir/x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

}  // namespace
}  // namespace pearl
