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
#include <istream>
#include <string>
#include <vector>

#include "pearl/crypto.hpp"
#include "pearl/ftl.hpp"

namespace pearl {

inline constexpr uint64_t kSectorBytes = 512;

struct TraceRecord {
  Volume volume = Volume::kPublic;
  uint64_t offset = 0;  // bytes, relative to the start of the volume
  uint64_t size = 0;
  OpKind op = OpKind::kRead;
  double arrival = 0;   // seconds since trace start
};

using Workload = std::vector<TraceRecord>;

/// Reads `asu,lba,size,opcode,timestamp` lines. LBAs are 512-byte sectors and
/// wrap modulo `wrap_bytes` when it is nonzero. Throws kInvalidArgument with
/// the line number on malformed input.
Workload parse_trace(std::istream& in, uint64_t wrap_bytes = 0);
/// Throws kIo when the file cannot be opened.
Workload parse_trace_file(const std::string& path, uint64_t wrap_bytes = 0);

/// Sends a seeded random share of the writes to the hidden volume.
void redirect_writes(Workload& w, double hidden_fraction, uint64_t seed);

struct SyntheticSpec {
  uint64_t count = 100000;
  uint64_t request_bytes = 16384;
  double read_fraction = 1.0;
  double interarrival = 0;  // seconds
  Volume volume = Volume::kPublic;
  uint64_t region_bytes = 0;  // offsets fall in [0, region_bytes)
  uint64_t seed = 1;
};

Workload gen_synthetic(const SyntheticSpec& spec);

struct InitReport {
  uint64_t public_pages = 0;
  uint64_t hidden_pages = 0;
  uint64_t rewrites = 0;
  uint64_t gc_runs = 0;
};

/// Fills the first `fill_fraction` of every volume with random data, then
/// keeps rewriting that region until garbage collection has run at least once.
/// A PEARL device gets paired writes so the public writes cloak the hidden ones.
InitReport init_device(BlockFtl& ftl, double fill_fraction = 0.5, uint64_t seed = 1);

struct ReplayOptions {
  double cpu_us_per_page = 2.0;
  uint64_t seed = 1;
};

struct RequestResult {
  OpKind op = OpKind::kRead;
  Volume volume = Volume::kPublic;
  uint64_t size = 0;
  uint32_t pages = 0;
  double arrival_us = 0;
  double start_us = 0;
  double completion_us = 0;
  double response_us() const { return completion_us - arrival_us; }
};

struct RunMetrics {
  std::string ftl;
  uint64_t seed = 0;
  std::vector<RequestResult> requests;
  uint64_t page_requests = 0;
  uint64_t unmapped_reads = 0;
  double mean_response_us = 0;
  double p50_us = 0;
  double p95_us = 0;
  double p99_us = 0;
  double makespan_us = 0;
  double iops = 0;
  uint64_t device_reads = 0;
  uint64_t device_programs = 0;
  uint64_t device_erases = 0;
  uint64_t gc_runs = 0;
  uint64_t logical_bytes[2] = {0, 0};
  uint64_t physical_bytes[2] = {0, 0};
  uint64_t translation_writes = 0;
  uint64_t cloak_relocations = 0;
};

/// FIFO event loop over the device busy clock.
RunMetrics replay(BlockFtl& ftl, const Workload& workload, const ReplayOptions& opts = {});

/// Writes `<prefix>.csv` (per request), `<prefix>.series.csv` (completions per
/// simulated second) and `<prefix>.summary.json`.
void export_report(const RunMetrics& m, const std::string& prefix);
std::string summary_json(const RunMetrics& m);

}  // namespace pearl
