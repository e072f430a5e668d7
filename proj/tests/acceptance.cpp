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


// Acceptance runner: one PASS/FAIL line per criterion. Arguments select a
// subset by number; the exit status is nonzero when any selected check fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pearl/adversary.hpp"
#include "pearl/bench.hpp"
#include "pearl/dftl.hpp"
#include "pearl/error.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl/wom.hpp"

namespace pearl {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PearlConfig lab_config() {
  PearlConfig c;
  c.kdf.n = 1024;
  return c;
}

std::vector<uint8_t> pattern(uint64_t tag, size_t n) {
  std::vector<uint8_t> d(n);
  std::mt19937_64 rng(tag);
  for (auto& b : d) b = static_cast<uint8_t>(rng());
  return d;
}

Outcome wom_validity() {
  const WomCode c35 = WomCode::builtin_3_5(), c23 = WomCode::builtin_2_3();
  const auto w35 = verify_wom2(c35), w23 = verify_wom2(c23);
  const auto p35 = verify_equal_partition(c35), p23 = verify_equal_partition(c23);
  bool sizes35 = p35.a_sizes.size() == 8, sizes23 = p23.a_sizes.size() == 4;
  for (size_t m = 0; m < p35.a_sizes.size(); ++m) {
    sizes35 = sizes35 && p35.a_sizes[m] == 4 && p35.b_sizes[m] == 4;
  }
  for (size_t m = 0; m < p23.a_sizes.size(); ++m) {
    sizes23 = sizes23 && p23.a_sizes[m] == 1 && p23.b_sizes[m] == 3;
  }
  const bool pass = w35.valid && p35.partition_ok && p35.equal && sizes35 && w23.valid &&
                    p23.partition_ok && !p23.equal && sizes23;
  return {pass, fmt("(3,5) wom=%d equal=%d |A|=|B|=4:%d; (2,3) wom=%d |A|=1,|B|=3:%d",
                    w35.valid, p35.equal, sizes35, w23.valid, sizes23)};
}

Outcome decode_fidelity() {
  const WomCode code = WomCode::builtin_3_5();
  const auto layout = PageCodecLayout::mini(code, 2);
  const BitString raw = BitString::parse("1100010101");
  const std::string pub = decode_page_public(layout, code, raw, WriteStage::kSecond).to_string();
  const std::string hid = decode_page_hidden(layout, code, raw).to_string();
  const std::string enc =
      encode_page_full(layout, code, BitString::parse("110010"), BitString::parse("01")).to_string();
  return {pub == "110010" && hid == "01" && enc == "1100010101",
          "public=" + pub + " hidden=" + hid + " re-encoded=" + enc};
}

Outcome skew() {
  const WomCode code = WomCode::builtin_2_3();
  const auto layout = PageCodecLayout::mini(code, 1000);
  std::mt19937_64 rng(2026);
  CodewordHistogram two, full;
  for (int page = 0; page < 100; ++page) {
    BitString p1(layout.public_bits()), p2(layout.public_bits()), h(layout.hidden_bits());
    for (size_t i = 0; i < p1.size(); ++i) {
      p1.set(i, rng() & 1);
      p2.set(i, rng() & 1);
    }
    for (size_t i = 0; i < h.size(); ++i) h.set(i, rng() & 1);
    accumulate_histogram(two, encode_page_second(layout, code, p2, encode_page_first(layout, code, p1)),
                         layout, code);
    accumulate_histogram(full, encode_page_full(layout, code, p1, h), layout, code);
  }
  const double r2 = double(two.counts[0b000]) / double(two.counts[0b111]);
  const double rf = double(full.counts[0b000]) / double(full.counts[0b111]);
  const bool pass = two.total == 100000 && full.total == 100000 &&
                    std::abs(r2 - 1.0 / 3) <= 0.05 / 3 && std::abs(rf - 1.0) <= 0.05;
  return {pass, fmt("two-stage 000:111 = 1:%.3f, full 000:111 = 1:%.3f over %llu groups", 1 / r2,
                    1 / rf, static_cast<unsigned long long>(two.total))};
}

Outcome indistinguishability() {
  bool exact = true;
  for (size_t g : {1, 2}) exact = exact && enumerate_full_vs_two_stage(WomCode::builtin_3_5(), g).equal;
  const bool mutant_exact = enumerate_full_vs_two_stage(WomCode::builtin_2_3(), 1).equal;
  int accepted = 0;
  double min_p = 1;
  uint64_t min_groups = UINT64_MAX;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    FrequencyTrialConfig c;
    c.seed = seed;
    const auto r = run_frequency_trial(c);
    accepted += r.sufficient && r.p_value > kFrequencyAlpha;
    min_p = std::min(min_p, r.p_value);
    min_groups = std::min(min_groups, r.total);
  }
  FrequencyTrialConfig m;
  m.code = "2,3";
  const auto bad = run_frequency_trial(m);
  const bool pass = exact && !mutant_exact && accepted >= 19 && bad.p_value < 1e-6;
  return {pass, fmt("enumeration equal=%d; (3,5) %d/20 trials p>0.01 (min p %.3g, >=%llu groups); "
                    "(2,3) p=%.3g",
                    exact, accepted, min_p, static_cast<unsigned long long>(min_groups),
                    bad.p_value)};
}

Outcome plausibility() {
  uint64_t implausible = 0, alarms = 0, ops = 0, gcs = 0, hidden = 0, trims = 0;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    PlausibilityConfig c;
    c.seed = seed;
    const auto r = run_plausibility(c);
    implausible += r.implausible + r.illegal_transitions;
    alarms += r.alarms + r.full_writes_with_ui1;
    ops += r.ops;
    gcs += r.forced_gcs;
    hidden += r.hidden_writes;
    trims += r.trims;
  }
  int caught = 0;
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    PlausibilityConfig c;
    c.seed = seed;
    c.broken_allocator = true;
    c.stop_at_first_alarm = true;
    caught += run_plausibility(c).alarms > 0;
  }
  const bool pass = implausible == 0 && alarms == 0 && caught >= 99 && hidden > 0 && trims > 0 &&
                    gcs > 0;
  return {pass, fmt("clean: %llu ops, %llu hidden writes, %llu trims, %llu forced GCs, "
                    "%llu implausible, %llu alarms; mutant alarmed %d/100",
                    static_cast<unsigned long long>(ops), static_cast<unsigned long long>(hidden),
                    static_cast<unsigned long long>(trims), static_cast<unsigned long long>(gcs),
                    static_cast<unsigned long long>(implausible),
                    static_cast<unsigned long long>(alarms), caught)};
}

Outcome amplification() {
  FlashDevice dev(DeviceGeometry::desk());
  const std::string h = "h";
  PearlFtl::format(dev, lab_config(), "p");
  auto ftl = PearlFtl::mount(dev, "p", &h, lab_config());
  // 12 KB of logical data per volume, in whole pages.
  const size_t pp = ftl->payload_bytes(Volume::kPublic), hp = ftl->payload_bytes(Volume::kHidden);
  const uint32_t pub_pages = static_cast<uint32_t>((12288 + pp - 1) / pp);
  const uint32_t hid_pages = static_cast<uint32_t>((12288 + hp - 1) / hp);
  for (uint32_t i = 0; i < std::max(pub_pages, hid_pages); ++i) {
    ftl->public_write(i, pattern(i, pp));
  }
  for (uint32_t i = 0; i < hid_pages; ++i) ftl->hidden_write(i, pattern(100 + i, hp));
  const FtlStats& s = ftl->stats();
  const uint64_t lp = s.logical_bytes_written[0], pb = s.physical_bytes_written[0];
  const uint64_t lh = s.logical_bytes_written[1], ph = s.physical_bytes_written[1];
  const bool pass = pb * 3 == lp * 5 && ph == lh * 5;
  return {pass, fmt("public %llu -> %llu bytes (%.4f), hidden %llu -> %llu bytes (%.4f)",
                    static_cast<unsigned long long>(lp), static_cast<unsigned long long>(pb),
                    double(pb) / double(lp), static_cast<unsigned long long>(lh),
                    static_cast<unsigned long long>(ph), double(ph) / double(lh))};
}

uint32_t fill_public(PearlFtl& ftl, uint64_t tag) {
  const size_t pp = ftl.payload_bytes(Volume::kPublic);
  uint32_t written = 0;
  for (uint32_t lpn = 0;; ++lpn) {
    try {
      ftl.public_write(lpn, pattern(tag + lpn, pp));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kOutOfRange) break;
      throw;
    }
    ++written;
  }
  return written;
}

Outcome capacity() {
  const DeviceGeometry g = DeviceGeometry::desk();
  bool rejects = true;
  for (auto [pf, hf] : {std::pair{0.61, 0.1}, std::pair{0.5, 0.21}}) {
    FlashDevice dev(g);
    PearlConfig c = lab_config();
    c.public_fraction = pf;
    c.hidden_fraction = hf;
    try {
      PearlFtl::format(dev, c, "p");
      rejects = false;
    } catch (const Error& e) {
      rejects = rejects && e.code() == ErrorCode::kInvalidArgument;
    }
  }
  const uint64_t phys = g.physical_bytes();
  const Capacity cap = compute_capacity(g, WomCode::builtin_3_5(), 0.5625, 0.1875);
  const bool proportions = cap.public_bytes * 64 == phys * 36 && cap.hidden_bytes * 64 == phys * 12;

  auto run = [&](bool hidden_full) {
    FlashDevice dev(g);
    const std::string h = "h";
    PearlFtl::format(dev, lab_config(), "p");
    auto ftl = PearlFtl::mount(dev, "p", &h, lab_config());
    if (hidden_full) {
      // Public data first so every hidden page has a cloak, then fill the
      // hidden volume, then fill the public volume again.
      fill_public(*ftl, 50000);
      const size_t hp = ftl->payload_bytes(Volume::kHidden);
      const uint32_t n = ftl->logical_pages(Volume::kHidden);
      for (uint32_t i = 0; i < n; ++i) ftl->hidden_write(i, pattern(7000 + i, hp));
    }
    const uint32_t written = fill_public(*ftl, 1);
    bool intact = true;
    for (uint32_t lpn = 0; lpn < written; lpn += 37) {
      intact = intact && ftl->public_read(lpn) == pattern(1 + lpn, ftl->payload_bytes(Volume::kPublic));
    }
    if (hidden_full) {
      const uint32_t n = ftl->logical_pages(Volume::kHidden);
      for (uint32_t i = 0; i < n; i += 37) {
        intact = intact && ftl->hidden_read(i) == pattern(7000 + i, ftl->payload_bytes(Volume::kHidden));
      }
    }
    return std::pair{written, intact};
  };
  uint32_t empty_pages = 0, full_pages = 0;
  bool intact = false;
  std::string err;
  try {
    const auto e = run(false);
    const auto f = run(true);
    empty_pages = e.first;
    full_pages = f.first;
    intact = e.second && f.second;
  } catch (const Error& e) {
    err = std::string(" error: ") + e.what();
  }
  const bool pass = rejects && proportions && empty_pages == cap.public_pages &&
                    full_pages == empty_pages && intact;
  return {pass, fmt("rejects >60%%/>20%%: %d; public %llu/64ths hidden %llu/64ths of %llu bytes; "
                    "public fill %u pages (hidden empty) vs %u pages (hidden full); intact %d%s",
                    rejects, static_cast<unsigned long long>(cap.public_bytes * 64 / phys),
                    static_cast<unsigned long long>(cap.hidden_bytes * 64 / phys),
                    static_cast<unsigned long long>(phys), empty_pages, full_pages, intact,
                    err.c_str())};
}

Outcome throughput() {
  constexpr uint64_t kRequests = 1000;
  auto run = [](BlockFtl& f, Volume v, double read_fraction, uint64_t seed) {
    SyntheticSpec s;
    s.count = kRequests;
    s.read_fraction = read_fraction;
    s.volume = v;
    s.seed = seed;
    s.region_bytes = uint64_t{f.logical_pages(v) / 2} * f.payload_bytes(v);
    return replay(f, gen_synthetic(s)).iops;
  };
  FlashDevice d1(DeviceGeometry::desk());
  Dftl dftl(d1);
  init_device(dftl, 0.5, 1);
  const double dr = run(dftl, Volume::kPublic, 1, 2);
  const double dw = run(dftl, Volume::kPublic, 0, 3);
  FlashDevice d2(DeviceGeometry::desk());
  const std::string h = "h";
  PearlFtl::format(d2, lab_config(), "p");
  auto p = PearlFtl::mount(d2, "p", &h, lab_config());
  init_device(*p, 0.5, 1);
  const double pr = run(*p, Volume::kPublic, 1, 2);
  const double hr = run(*p, Volume::kHidden, 1, 4);
  const double pw = run(*p, Volume::kPublic, 0, 3);
  const double hw = run(*p, Volume::kHidden, 0, 5);
  const double r[4] = {pr / dr, pw / dw, hr / dr, hw / dw};
  const bool ok[4] = {r[0] >= 0.45 && r[0] <= 0.75, r[1] >= 0.45 && r[1] <= 0.75,
                      r[2] >= 0.10 && r[2] <= 0.30, r[3] >= 0.05 && r[3] <= 0.20};
  const bool pass = ok[0] && ok[1] && ok[2] && ok[3];
  return {pass, fmt("DFTL R/W %.0f/%.1f IOPS; public read %.3f%s, public write %.3f%s, "
                    "hidden read %.3f%s, hidden write %.3f%s",
                    dr, dw, r[0], ok[0] ? "" : " (out of band)", r[1], ok[1] ? "" : " (out of band)",
                    r[2], ok[2] ? "" : " (out of band)", r[3], ok[3] ? "" : " (out of band)")};
}

Outcome durability() {
  FlashDevice dev(DeviceGeometry::desk());
  PearlConfig cfg = lab_config();
  cfg.cmt_entries = 64;
  cfg.check_invariants = true;
  const std::string h = "h";
  PearlFtl::format(dev, cfg, "p");
  auto ftl = PearlFtl::mount(dev, "p", &h, cfg);
  const size_t pp = ftl->payload_bytes(Volume::kPublic), hp = ftl->payload_bytes(Volume::kHidden);
  std::mt19937_64 rng(99);
  std::map<uint32_t, uint64_t> pub, hid;
  uint64_t tag = 1, forced = 0;
  auto step = [&](uint32_t ops, bool hidden_ok) {
    for (uint32_t i = 0; i < ops; ++i, ++tag) {
      const uint64_t dice = rng() % 10;
      if (dice < 6 || pub.size() < 100) {
        const uint32_t lpn = rng() % 800;
        ftl->public_write(lpn, pattern(tag, pp));
        pub[lpn] = tag;
      } else if (dice < 8 && hidden_ok) {
        const uint32_t lpn = rng() % 300;
        ftl->hidden_write(lpn, pattern(tag, hp));
        hid[lpn] = tag;
      } else if (dice < 9) {
        auto it = pub.lower_bound(static_cast<uint32_t>(rng() % 800));
        if (it == pub.end()) continue;
        ftl->trim(it->first, Volume::kPublic);
        pub.erase(it);
      } else if (hidden_ok && !hid.empty()) {
        auto it = hid.lower_bound(static_cast<uint32_t>(rng() % 300));
        if (it == hid.end()) continue;
        ftl->trim(it->first, Volume::kHidden);
        hid.erase(it);
      }
    }
  };
  auto verify = [&](bool hidden_ok) {
    uint64_t bad = 0;
    for (const auto& [lpn, t] : pub) bad += ftl->public_read(lpn) != pattern(t, pp);
    if (hidden_ok) {
      for (const auto& [lpn, t] : hid) bad += ftl->hidden_read(lpn) != pattern(t, hp);
    }
    return bad;
  };
  for (int round = 0; round < 6; ++round) {
    step(1500, true);
    ftl->gc_run();
    ++forced;
  }
  // Power loss: no unmount, the next mount rebuilds everything from flash.
  ftl.reset();
  ftl = PearlFtl::mount(dev, "p", &h, cfg);
  const uint64_t bad_after_scan = verify(true);
  const uint64_t gc_before = ftl->stats().gc_runs;
  step(3000, true);
  ftl->gc_run();
  ++forced;
  ftl->prepare_unmount();
  ftl.reset();
  ftl = PearlFtl::mount(dev, "p", &h, cfg);
  const uint64_t bad_hidden_mode = verify(true);
  const auto problems = ftl->check_invariants();

  ftl->prepare_unmount();
  ftl.reset();
  ftl = PearlFtl::mount(dev, "p", nullptr, cfg);
  step(3000, false);
  for (int i = 0; i < 3; ++i) ftl->gc_run();
  ftl->prepare_unmount();
  ftl.reset();
  ftl = PearlFtl::mount(dev, "p", nullptr, cfg);
  const uint64_t bad_public_only = verify(false);
  const bool pass = forced >= 5 && bad_after_scan == 0 && bad_hidden_mode == 0 &&
                    bad_public_only == 0 && problems.empty();
  return {pass, fmt("%llu forced GCs (+%llu automatic after recovery); mismatches after power-loss "
                    "scan %llu, after remount %llu (%zu public, %zu hidden pages); public-only "
                    "mismatches %llu; invariant problems %zu",
                    static_cast<unsigned long long>(forced),
                    static_cast<unsigned long long>(ftl->stats().gc_runs + gc_before),
                    static_cast<unsigned long long>(bad_after_scan),
                    static_cast<unsigned long long>(bad_hidden_mode), pub.size(), hid.size(),
                    static_cast<unsigned long long>(bad_public_only), problems.size())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace pearl

int main(int argc, char** argv) {
  using namespace pearl;
  const std::vector<Criterion> all = {
      {1, "wom-validity", wom_validity},
      {2, "decode-fidelity", decode_fidelity},
      {3, "skew-reproduction", skew},
      {4, "indistinguishability", indistinguishability},
      {5, "transition-plausibility", plausibility},
      {6, "amplification", amplification},
      {7, "capacity-bounds", capacity},
      {8, "throughput-bands", throughput},
      {9, "durability", durability},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
