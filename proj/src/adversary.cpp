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

#include "pearl/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/special_functions/gamma.hpp>

#include "pearl/error.hpp"
#include "pearl_internal.hpp"

namespace pearl {

namespace {

uint64_t fnv1a(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t x : a) h = (h ^ x) * 0x100000001b3ull;
  for (uint8_t x : b) h = (h ^ x) * 0x100000001b3ull;
  return h;
}

BitString from_value(uint64_t v, size_t nbits) {
  BitString b(nbits);
  for (size_t i = 0; i < nbits; ++i) b.set(i, (v >> (nbits - 1 - i)) & 1u);
  return b;
}

uint64_t to_value(const BitString& b) {
  uint64_t v = 0;
  for (size_t i = 0; i < b.size(); ++i) v = (v << 1) | static_cast<uint64_t>(b.get(i));
  return v;
}

// Upper tail of the chi-square distribution.
double chi2_sf(double x, double dof) {
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

}  // namespace

const char* observed_name(Observed o) {
  switch (o) {
    case Observed::kEmpty: return "empty";
    case Observed::kFirstWrite: return "first-write";
    case Observed::kSecondWrite: return "second-write";
    case Observed::kMetadata: return "metadata";
  }
  return "?";
}

VolumeKey public_key_for(const Snapshot& snap, std::string_view public_password) {
  const PearlHeader h = read_header([&](Ppn p) { return snap.page(p); });
  const VolumeKey k = derive_key(public_password, Volume::kPublic, h.salt, h.kdf);
  if (detail::key_check(k) != h.key_check) {
    fail(ErrorCode::kInvalidArgument, "wrong public password");
  }
  return k;
}

SnapshotView classify_snapshot(const Snapshot& snap, const VolumeKey& kpub,
                               bool decode_payloads) {
  const DeviceGeometry& g = snap.geometry;
  auto page = [&](Ppn p) { return snap.page(p); };
  const PearlHeader h = read_header(page);
  const WomCode code = WomCode::by_name(h.code);
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  const Capacity cap = header_capacity(g, code, h);
  const RecoveredState rs = recover_state(page, g, code, cap, kpub, nullptr);

  SnapshotView view;
  view.geometry = g;
  view.code = code.name();
  view.erase_counts = snap.erase_counts;
  const Ppn npages = static_cast<Ppn>(g.total_pages());
  view.pages.resize(npages);
  if (decode_payloads) view.payloads.resize(npages);
  for (Ppn p = 0; p < npages; ++p) {
    PageObservation& o = view.pages[p];
    const PageView v = snap.page(p);
    o.digest = fnv1a(v.data, v.oob);
    if (snap.program_counts[p] == 0) continue;
    if (p < g.pages_per_block) {
      o.observed = Observed::kMetadata;
      continue;
    }
    const OobRecord& rec = rs.oob[p];
    if (rec.stage != 1 && rec.stage != 2) {
      fail(ErrorCode::kUndecodable, "page " + std::to_string(p) + " has no stage tag");
    }
    for (size_t gi = 0; gi < layout.groups_per_page; ++gi) {
      const uint32_t c = read_bits(v.data, gi * layout.n, layout.n);
      const int32_t m = rec.stage == 1 ? code.decode_first_raw(c) : code.decode_second_raw(c);
      if (m < 0) {
        fail(ErrorCode::kUndecodable,
             "page " + std::to_string(p) + " group " + std::to_string(gi) + " is not a codeword");
      }
    }
    o.observed = rec.stage == 1 ? Observed::kFirstWrite : Observed::kSecondWrite;
    o.kind = static_cast<PageKind>(rec.kind);
    o.lpn = rec.lpn;
    o.seq = rec.seq;
    const auto& table = o.kind == PageKind::kData ? rs.map[0] : rs.gtd[0];
    const bool valid = o.lpn < table.size() && table[o.lpn] == p;
    if (rec.stage == 1) {
      o.state = valid ? PublicState::kV1 : PublicState::kI1;
    } else {
      o.state = valid ? PublicState::kV2 : PublicState::kI2;
    }
    if (decode_payloads && valid) {
      view.payloads[p] = detail::decode_public(code, layout, kpub, v, rec);
    }
  }
  return view;
}

TransitionReport diff_transitions(const SnapshotView& a, const SnapshotView& b) {
  if (a.geometry.total_pages() != b.geometry.total_pages() ||
      a.geometry.pages_per_block != b.geometry.pages_per_block ||
      a.geometry.page_bytes != b.geometry.page_bytes) {
    fail(ErrorCode::kInvalidArgument, "snapshots come from different geometries");
  }
  const uint32_t ppb = a.geometry.pages_per_block;
  TransitionReport out;
  for (Ppn p = ppb; p < a.pages.size(); ++p) {
    const PageObservation& x = a.pages[p];
    const PageObservation& y = b.pages[p];
    const uint32_t blk = p / ppb;
    const bool erased = a.erase_counts[blk] != b.erase_counts[blk];
    if (!erased && x.state == y.state && x.digest == y.digest) continue;
    TransitionRecord r;
    r.ppn = p;
    r.before = x.state;
    r.after = y.state;
    r.erased_between = erased;
    if (erased) {
      if (b.erase_counts[blk] < a.erase_counts[blk]) {
        r.plausible = false;
        r.reason = "erase count went backwards";
      } else {
        r.reason = "block erased";
      }
    } else if (!transition_reachable(x.state, y.state)) {
      r.plausible = false;
      r.reason = "no public path";
    } else if (x.observed == y.observed && x.observed != Observed::kEmpty &&
               x.digest != y.digest) {
      r.plausible = false;
      r.reason = "reprogrammed without a stage change";
    } else {
      r.reason = "reachable";
    }
    if (!r.plausible) ++out.flagged;
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<Ui1Alarm> ui1_inference(const SnapshotView& a, const SnapshotView& b) {
  std::vector<Ui1Alarm> alarms;
  const uint32_t ppb = b.geometry.pages_per_block;
  const uint32_t nblocks = b.geometry.total_blocks();
  auto same_key = [](const PageObservation& u, const PageObservation& v) {
    return u.kind == v.kind && u.lpn == v.lpn;
  };
  for (uint32_t blk = 1; blk < nblocks; ++blk) {
    if (a.erase_counts[blk] != b.erase_counts[blk]) continue;
    const Ppn lo = blk * ppb, hi = lo + ppb;
    for (Ppn j = lo; j < hi; ++j) {
      const PageObservation& pj = b.pages[j];
      if (pj.observed != Observed::kFirstWrite) continue;
      bool later_exists = false;
      for (Ppn l = j + 1; l < hi && !later_exists; ++l) {
        later_exists = b.pages[l].observed != Observed::kEmpty;
      }
      if (!later_exists) continue;
      for (Ppn i = lo; i < j; ++i) {
        const PageObservation& now = b.pages[i];
        const PageObservation& then = a.pages[i];
        const bool pending_now =
            now.observed == Observed::kFirstWrite && same_key(now, pj) && now.seq < pj.seq;
        const bool held_then = then.observed == Observed::kFirstWrite && same_key(then, pj) &&
                               then.seq < pj.seq;
        if (!pending_now && !held_then) continue;
        for (Ppn l = j + 1; l < hi; ++l) {
          const PageObservation& pl = b.pages[l];
          if (pl.observed == Observed::kEmpty) continue;
          // The stale copy must be filled before anything after the update.
          if (pending_now || (now.observed == Observed::kSecondWrite && pl.seq < now.seq)) {
            alarms.push_back({blk, i, j, l});
            break;
          }
        }
      }
    }
  }
  return alarms;
}

std::vector<double> second_write_model(const WomCode& code) {
  std::vector<double> p(size_t{1} << code.n(), 0.0);
  const double msgs = code.message_count();
  const double c1 = static_cast<double>(code.first_codewords().size());
  for (uint32_t m = 0; m < code.message_count(); ++m) {
    const double a = static_cast<double>(code.partition_a(m).size());
    const double b = static_cast<double>(code.partition_b(m).size());
    p[code.wa(m)] += a / c1 / msgs;
    p[code.wb(m)] += b / c1 / msgs;
  }
  return p;
}

void accumulate_second_writes(CodewordHistogram& hist, const Snapshot& snap, const WomCode& code) {
  const DeviceGeometry& g = snap.geometry;
  const PageCodecLayout layout = PageCodecLayout::for_page(code, g.page_bytes);
  if (hist.counts.empty()) hist.counts.assign(size_t{1} << code.n(), 0);
  for (Ppn p = g.pages_per_block; p < g.total_pages(); ++p) {
    if (snap.program_counts[p] == 0) continue;
    const PageView v = snap.page(p);
    if (OobRecord::decode(v.oob).stage != 2) continue;
    for (size_t gi = 0; gi < layout.groups_per_page; ++gi) {
      ++hist.counts[read_bits(v.data, gi * layout.n, layout.n)];
      ++hist.total;
    }
  }
}

FrequencyReport frequency_test(const CodewordHistogram& hist, const WomCode& code) {
  FrequencyReport r;
  r.code = code.name();
  r.expected = second_write_model(code);
  r.counts = hist.counts;
  r.counts.resize(r.expected.size(), 0);
  r.total = hist.total;
  r.sufficient = r.total >= kMinFrequencySamples;
  if (r.total == 0) return r;
  const double n = static_cast<double>(r.total);
  uint32_t cells = 0;
  double min_p = 1.0;
  for (uint32_t c = 0; c < r.expected.size(); ++c) {
    const double pc = r.expected[c];
    const double o = static_cast<double>(r.counts[c]);
    if (pc == 0.0) {
      r.off_model += r.counts[c];
      continue;
    }
    ++cells;
    const double e = n * pc;
    r.chi_square += (o - e) * (o - e) / e;
    if (pc >= 1.0) continue;
    const double x = (o - e) * (o - e) / e + (o - e) * (o - e) / (n - e);
    const double pv = chi2_sf(x, 1.0);
    if (pv < min_p) {
      min_p = pv;
      r.worst_codeword = c;
    }
  }
  r.dof = cells > 0 ? cells - 1 : 0;
  r.omnibus_p = r.dof > 0 ? chi2_sf(r.chi_square, r.dof) : 1.0;
  r.p_value = std::min(1.0, min_p * cells);
  if (r.off_model > 0) {
    r.p_value = 0.0;
    r.omnibus_p = 0.0;
  }
  r.distinguished = r.sufficient && r.p_value < kFrequencyAlpha;
  return r;
}

FrequencyReport frequency_distinguisher(std::span<const Snapshot> snapshots, const WomCode& code) {
  CodewordHistogram hist;
  hist.counts.assign(size_t{1} << code.n(), 0);
  for (const Snapshot& s : snapshots) accumulate_second_writes(hist, s, code);
  return frequency_test(hist, code);
}

EnumerationResult enumerate_full_vs_two_stage(const WomCode& code, size_t groups) {
  if (groups == 0 || groups * code.n() > 24) {
    fail(ErrorCode::kInvalidArgument, "enumeration supports 1 or 2 groups");
  }
  const PageCodecLayout layout = PageCodecLayout::mini(code, groups);
  const size_t kb = layout.public_bits();
  const uint64_t msgs = uint64_t{1} << kb;
  const uint64_t hids = uint64_t{1} << groups;
  std::map<uint64_t, uint64_t> full, two;
  for (uint64_t p = 0; p < msgs; ++p) {
    for (uint64_t h = 0; h < hids; ++h) {
      ++full[to_value(encode_page_full(layout, code, from_value(p, kb), from_value(h, groups)))];
    }
  }
  for (uint64_t p1 = 0; p1 < msgs; ++p1) {
    const BitString first = encode_page_first(layout, code, from_value(p1, kb));
    for (uint64_t p2 = 0; p2 < msgs; ++p2) {
      ++two[to_value(encode_page_second(layout, code, from_value(p2, kb), first))];
    }
  }
  EnumerationResult r;
  r.full_cases = msgs * hids;
  r.two_stage_cases = msgs * msgs;
  r.support = two.size();
  r.equal = full.size() == two.size();
  for (const auto& [c, n] : full) {
    auto it = two.find(c);
    // full[c] / (msgs * hids) == two[c] / (msgs * msgs)
    if (it == two.end() || n * msgs != it->second * hids) r.equal = false;
  }
  return r;
}

void write_records(std::ostream& os, const SnapshotView& view) {
  for (Ppn p = 0; p < view.pages.size(); ++p) {
    const PageObservation& o = view.pages[p];
    if (o.observed == Observed::kEmpty) continue;
    os << "page ppn=" << p << " observed=" << observed_name(o.observed)
       << " state=" << public_state_name(o.state);
    if (o.observed != Observed::kMetadata) {
      os << " kind=" << (o.kind == PageKind::kData ? "data" : "translation") << " lpn=" << o.lpn
         << " seq=" << o.seq;
    }
    os << "\n";
  }
}

void write_records(std::ostream& os, const TransitionReport& report) {
  for (const auto& r : report.records) {
    os << "transition ppn=" << r.ppn << " before=" << public_state_name(r.before)
       << " after=" << public_state_name(r.after) << " erased=" << (r.erased_between ? 1 : 0)
       << " plausible=" << (r.plausible ? 1 : 0) << " reason=\"" << r.reason << "\"\n";
  }
  os << "transitions changed=" << report.records.size() << " flagged=" << report.flagged << "\n";
}

void write_records(std::ostream& os, const std::vector<Ui1Alarm>& alarms) {
  for (const auto& a : alarms) {
    os << "ui1_alarm block=" << a.block << " stale=" << a.stale << " update=" << a.update
       << " later=" << a.later << "\n";
  }
  os << "ui1_alarms count=" << alarms.size() << "\n";
}

void write_records(std::ostream& os, const FrequencyReport& r) {
  for (uint32_t c = 0; c < r.counts.size(); ++c) {
    if (r.counts[c] == 0 && r.expected[c] == 0.0) continue;
    os << "codeword value=" << c << " count=" << r.counts[c] << " model=" << r.expected[c] << "\n";
  }
  os << "frequency code=" << r.code << " groups=" << r.total
     << " sufficient=" << (r.sufficient ? 1 : 0) << " chi2=" << r.chi_square << " dof=" << r.dof
     << " omnibus_p=" << r.omnibus_p << " p=" << r.p_value << " off_model=" << r.off_model
     << " verdict=" << (r.distinguished ? "distinguished" : "no-distinguisher") << "\n";
}

}  // namespace pearl

namespace pearl {

namespace {

std::vector<uint8_t> tagged(Rng& rng, size_t n) {
  std::vector<uint8_t> d(n);
  for (auto& b : d) b = static_cast<uint8_t>(rng());
  return d;
}

PearlConfig lab_config(uint64_t seed) {
  PearlConfig c;
  c.kdf.n = 1024;
  c.seed = seed;
  c.cmt_entries = 4096;
  return c;
}

const std::string kLabHidden = "lab-hidden";
const char kLabPublic[] = "lab-public";

}  // namespace

PlausibilityResult run_plausibility(const PlausibilityConfig& cfg) {
  PlausibilityResult res;
  FlashDevice dev(DeviceGeometry::preset(cfg.preset));
  PearlConfig pc = lab_config(cfg.seed);
  pc.broken_allocator = cfg.broken_allocator;
  PearlFtl::format(dev, pc, kLabPublic);
  auto ftl = PearlFtl::mount(dev, kLabPublic, &kLabHidden, pc);
  const VolumeKey kpub = public_key_for(dev.snapshot(), kLabPublic);
  Rng rng(cfg.seed * 0x2545f4914f6cdd1dull + 7);
  const size_t pp = ftl->payload_bytes(Volume::kPublic);
  const size_t hp = ftl->payload_bytes(Volume::kHidden);

  const uint32_t pub_span = std::min<uint32_t>(900, ftl->logical_pages(Volume::kPublic) / 2);
  const uint32_t hid_span = std::min<uint32_t>(300, ftl->logical_pages(Volume::kHidden) / 4);
  uint32_t fresh = pub_span;  // probe LPNs come from above the random span
  std::map<uint32_t, uint64_t> pub, hid;  // lpn -> content seed
  auto put_pub = [&](uint32_t lpn) {
    const uint64_t s = rng();
    Rng g(s);
    ftl->public_write(lpn, tagged(g, pp));
    pub[lpn] = s;
  };
  auto put_hid = [&](uint32_t lpn) {
    const uint64_t s = rng();
    Rng g(s);
    ftl->hidden_write(lpn, tagged(g, hp));
    hid[lpn] = s;
    ++res.hidden_writes;
  };

  for (uint32_t i = 0; i < pub_span / 2; ++i) put_pub(i);
  ftl->prepare_unmount();
  SnapshotView prev = classify_snapshot(dev.snapshot(), kpub);

  auto monitor_total = [&] {
    const MonitorReport& m = ftl->monitor();
    res.illegal_transitions = m.illegal_transitions;
    res.priority_violations = m.priority_violations;
    res.full_writes_with_ui1 = m.full_writes_with_ui1;
  };

  auto snapshot = [&] {
    ftl->prepare_unmount();
    SnapshotView cur = classify_snapshot(dev.snapshot(), kpub);
    ++res.snapshots;
    res.implausible += diff_transitions(prev, cur).flagged;
    res.alarms += ui1_inference(prev, cur).size();
    prev = std::move(cur);
  };

  uint32_t done = 0;
  while (done < cfg.ops) {
    // Probe: an update followed by a hidden write right after a snapshot,
    // imaged again before anything else can overwrite the evidence.
    if (done > 0 && fresh + 3 < ftl->logical_pages(Volume::kPublic)) {
      put_pub(fresh++);
      const uint32_t f2 = fresh++;
      put_pub(f2);
      snapshot();
      put_pub(fresh++);
      put_pub(f2);
      put_hid(static_cast<uint32_t>(rng() % hid_span));
      done += 5;
      snapshot();
      if (cfg.stop_at_first_alarm && res.alarms > 0) break;
    }
    const uint32_t end = std::min(cfg.ops, done + cfg.segment);
    for (; done < end; ++done) {
      const uint64_t dice = rng() % 100;
      if (dice < 45) {
        put_pub(static_cast<uint32_t>(rng() % pub_span));
      } else if (dice < 65) {
        put_hid(static_cast<uint32_t>(rng() % hid_span));
      } else if (dice < 73 && !pub.empty()) {
        auto it = pub.lower_bound(static_cast<uint32_t>(rng() % pub_span));
        if (it == pub.end() || it->first >= pub_span) it = pub.begin();
        ftl->trim(it->first, Volume::kPublic);
        pub.erase(it);
        ++res.trims;
      } else if (dice < 78 && !hid.empty()) {
        auto it = hid.lower_bound(static_cast<uint32_t>(rng() % hid_span));
        if (it == hid.end()) it = hid.begin();
        ftl->trim(it->first, Volume::kHidden);
        hid.erase(it);
        ++res.trims;
      } else if (dice < 88 && !pub.empty()) {
        auto it = pub.lower_bound(static_cast<uint32_t>(rng() % pub_span));
        if (it == pub.end()) it = pub.begin();
        ftl->public_read(it->first);
      } else if (dice < 98 && !hid.empty()) {
        auto it = hid.lower_bound(static_cast<uint32_t>(rng() % hid_span));
        if (it == hid.end()) it = hid.begin();
        ftl->hidden_read(it->first);
      } else {
        ftl->gc_run();
        ++res.forced_gcs;
      }
    }
    snapshot();
    if (cfg.stop_at_first_alarm && res.alarms > 0) break;
  }
  res.ops = done;
  monitor_total();
  res.gc_runs = ftl->stats().gc_runs;
  if (!cfg.broken_allocator) {
    for (const auto& [lpn, s] : pub) {
      Rng g(s);
      if (ftl->public_read(lpn) != tagged(g, pp)) ++res.integrity_errors;
    }
    for (const auto& [lpn, s] : hid) {
      Rng g(s);
      if (ftl->hidden_read(lpn) != tagged(g, hp)) ++res.integrity_errors;
    }
  }
  return res;
}

FrequencyReport run_frequency_trial(const FrequencyTrialConfig& cfg) {
  FlashDevice dev(DeviceGeometry::preset(cfg.preset));
  PearlConfig pc = lab_config(cfg.seed);
  pc.code = cfg.code;
  PearlFtl::format(dev, pc, kLabPublic);
  auto ftl = PearlFtl::mount(dev, kLabPublic, &kLabHidden, pc);
  Rng rng(cfg.seed ^ 0x51ed270b27a3c1ffull);
  const size_t pp = ftl->payload_bytes(Volume::kPublic);
  const size_t hp = ftl->payload_bytes(Volume::kHidden);
  for (uint32_t i = 0; i < cfg.public_pages; ++i) ftl->public_write(i, tagged(rng, pp));
  for (uint32_t i = 0; i < cfg.updates; ++i) {
    if (cfg.hidden && i % 2 == 0) {
      ftl->hidden_write(i / 2, tagged(rng, hp));
    } else {
      ftl->public_write(static_cast<uint32_t>(rng() % cfg.public_pages), tagged(rng, pp));
    }
  }
  ftl->prepare_unmount();
  const Snapshot snap = dev.snapshot();
  return frequency_distinguisher(std::span<const Snapshot>(&snap, 1), ftl->code());
}

}  // namespace pearl
