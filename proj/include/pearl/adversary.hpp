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
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pearl/crypto.hpp"
#include "pearl/flash.hpp"
#include "pearl/ftl.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl/wom.hpp"

namespace pearl {

/// What the raw bits and the OOB stage tag say about a page.
enum class Observed : uint8_t { kEmpty, kFirstWrite, kSecondWrite, kMetadata };

const char* observed_name(Observed o);

struct PageObservation {
  Observed observed = Observed::kEmpty;
  PublicState state = PublicState::kEmpty;
  PageKind kind = PageKind::kData;
  uint32_t lpn = kNoLpn;
  uint64_t seq = 0;
  uint64_t digest = 0;  // FNV-1a over data and OOB
};

struct SnapshotView {
  DeviceGeometry geometry;
  std::string code;
  std::vector<PageObservation> pages;
  std::vector<uint32_t> erase_counts;
  // Decoded public payloads of valid pages; empty unless requested.
  std::vector<std::vector<uint8_t>> payloads;
};

/// Derives the public key the way a coerced user would hand it over.
VolumeKey public_key_for(const Snapshot& snap, std::string_view public_password);

/// Classifies every page using only the public key. Throws kUndecodable when
/// a programmed page holds bits that are not codewords of its stage.
SnapshotView classify_snapshot(const Snapshot& snap, const VolumeKey& public_key,
                               bool decode_payloads = false);

struct TransitionRecord {
  Ppn ppn = 0;
  PublicState before = PublicState::kEmpty;
  PublicState after = PublicState::kEmpty;
  bool erased_between = false;
  bool plausible = true;
  std::string reason;
};

struct TransitionReport {
  std::vector<TransitionRecord> records;  // changed pages only
  uint64_t flagged = 0;
};

TransitionReport diff_transitions(const SnapshotView& earlier, const SnapshotView& later);

struct Ui1Alarm {
  uint32_t block = 0;
  Ppn stale = 0;   // older first-write copy that must have been UI1
  Ppn update = 0;  // first-write copy of the same key
  Ppn later = 0;   // page programmed while the stale copy was still pending
};

/// Flags blocks whose in-order programming contradicts the single pending
/// UI1 page rule of the public allocator.
std::vector<Ui1Alarm> ui1_inference(const SnapshotView& earlier, const SnapshotView& later);

struct FrequencyReport {
  std::string code;
  std::vector<uint64_t> counts;     // indexed by codeword value
  std::vector<double> expected;     // model probability per codeword
  uint64_t total = 0;               // second-write groups
  bool sufficient = false;
  double chi_square = 0;            // omnibus statistic over the model support
  uint32_t dof = 0;
  double omnibus_p = 1;
  double p_value = 1;               // Bonferroni-corrected per-codeword test
  uint32_t worst_codeword = 0;
  uint64_t off_model = 0;           // groups whose codeword has model probability 0
  bool distinguished = false;
};

constexpr uint64_t kMinFrequencySamples = 100000;
constexpr double kFrequencyAlpha = 0.01;

/// Second-write codeword probabilities for public-only writes of uniform
/// messages over uniform first writes.
std::vector<double> second_write_model(const WomCode& code);

/// Adds the second-write groups of every stage-2 page in `snap`.
void accumulate_second_writes(CodewordHistogram& hist, const Snapshot& snap,
                              const WomCode& code);

FrequencyReport frequency_distinguisher(std::span<const Snapshot> snapshots, const WomCode& code);
FrequencyReport frequency_test(const CodewordHistogram& hist, const WomCode& code);

/// Exact comparison, over `groups` codeword groups, of the codeword
/// distribution of full writes against two-stage public writes.
struct EnumerationResult {
  bool equal = false;
  size_t support = 0;
  uint64_t full_cases = 0;
  uint64_t two_stage_cases = 0;
};
EnumerationResult enumerate_full_vs_two_stage(const WomCode& code, size_t groups);

/// Mixed workload with an adversary snapshot after every segment.
struct PlausibilityConfig {
  std::string preset = "desk";
  uint64_t seed = 1;
  uint32_t ops = 10000;
  uint32_t segment = 500;
  bool broken_allocator = false;
  bool stop_at_first_alarm = false;
};

struct PlausibilityResult {
  uint32_t snapshots = 0;
  uint64_t ops = 0;
  uint64_t hidden_writes = 0;
  uint64_t trims = 0;
  uint64_t forced_gcs = 0;
  uint64_t gc_runs = 0;
  uint64_t implausible = 0;
  uint64_t alarms = 0;
  // Summed runtime monitor counters.
  uint64_t illegal_transitions = 0;
  uint64_t priority_violations = 0;
  uint64_t full_writes_with_ui1 = 0;
  uint64_t integrity_errors = 0;
};

PlausibilityResult run_plausibility(const PlausibilityConfig& cfg);

/// One device image with or without hidden writes, scored against the
/// public-only model.
struct FrequencyTrialConfig {
  std::string preset = "desk";
  std::string code = "3,5";
  bool hidden = true;
  uint64_t seed = 1;
  uint32_t public_pages = 300;
  uint32_t updates = 200;
};

FrequencyReport run_frequency_trial(const FrequencyTrialConfig& cfg);

// Text records, one per line, stable for diffing.
void write_records(std::ostream& os, const SnapshotView& view);
void write_records(std::ostream& os, const TransitionReport& report);
void write_records(std::ostream& os, const std::vector<Ui1Alarm>& alarms);
void write_records(std::ostream& os, const FrequencyReport& report);

}  // namespace pearl
