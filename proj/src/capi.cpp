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


#include "pearl/pearl.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pearl/adversary.hpp"
#include "pearl/bench.hpp"
#include "pearl/dftl.hpp"
#include "pearl/error.hpp"
#include "pearl/flash.hpp"
#include "pearl/pearl_ftl.hpp"
#include "pearl/wom.hpp"

struct pearl_device {
  pearl::FlashDevice dev;
};

struct pearl_ftl {
  std::unique_ptr<pearl::Dftl> dftl;
  std::unique_ptr<pearl::PearlFtl> pearl;
  pearl::BlockFtl& base() const {
    return pearl ? static_cast<pearl::BlockFtl&>(*pearl) : *dftl;
  }
};

namespace {

using pearl::ErrorCode;
using pearl::fail;
using json = nlohmann::ordered_json;

thread_local std::string g_last_error;

template <typename F>
pearl_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PEARL_OK;
  } catch (const pearl::Error& e) {
    g_last_error = e.what();
    return static_cast<pearl_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return PEARL_E_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pearl::Volume to_volume(pearl_volume v) {
  if (v != PEARL_VOLUME_PUBLIC && v != PEARL_VOLUME_HIDDEN) {
    fail(ErrorCode::kInvalidArgument, "unknown volume");
  }
  return static_cast<pearl::Volume>(v);
}

pearl::ConfigFile config_of(const char* text) {
  return pearl::parse_config(text ? text : "");
}

json stats_json(const pearl::FtlStats& s) {
  json j;
  for (int v = 0; v < 2; ++v) {
    const char* name = pearl::volume_name(static_cast<pearl::Volume>(v));
    j[name] = {{"reads", s.host_reads[v]},
               {"writes", s.host_writes[v]},
               {"trims", s.host_trims[v]},
               {"logical_bytes_written", s.logical_bytes_written[v]},
               {"physical_bytes_written", s.physical_bytes_written[v]},
               {"translation_writes", s.translation_writes[v]}};
  }
  j["first_writes"] = s.first_writes;
  j["second_writes"] = s.second_writes;
  j["full_writes"] = s.full_writes;
  j["translation_reads"] = s.translation_reads;
  j["relocations"] = s.relocations;
  j["cloak_relocations"] = s.cloak_relocations;
  j["hidden_relocations"] = s.hidden_relocations;
  j["hidden_lost"] = s.hidden_lost;
  j["gc_runs"] = s.gc_runs;
  j["cmt_hits"] = s.cmt_hits;
  j["cmt_misses"] = s.cmt_misses;
  return j;
}

json frequency_json(const pearl::FrequencyReport& r) {
  return {{"code", r.code},
          {"groups", r.total},
          {"sufficient", r.sufficient},
          {"chi_square", r.chi_square},
          {"dof", r.dof},
          {"omnibus_p", r.omnibus_p},
          {"p_value", r.p_value},
          {"worst_codeword", r.worst_codeword},
          {"off_model", r.off_model},
          {"distinguished", r.distinguished}};
}

json attack_frequency(const pearl_attack_params& p, int& distinguished) {
  json trials = json::array();
  uint32_t rejected = 0;
  double min_p = 1;
  for (uint32_t i = 0; i < p.trials; ++i) {
    pearl::FrequencyTrialConfig cfg;
    if (p.preset) cfg.preset = p.preset;
    if (p.code) cfg.code = p.code;
    cfg.hidden = p.hidden != 0;
    cfg.seed = p.seed + i;
    const auto r = pearl::run_frequency_trial(cfg);
    rejected += r.distinguished;
    min_p = std::min(min_p, r.p_value);
    trials.push_back(frequency_json(r));
  }
  // One rejection in twenty is the false positive rate of the test.
  distinguished = uint64_t{rejected} * 20 > p.trials;
  return {{"experiment", "frequency"},
          {"code", p.code ? p.code : "3,5"},
          {"hidden", p.hidden != 0},
          {"trials", p.trials},
          {"rejected", rejected},
          {"min_p", min_p},
          {"verdict", distinguished ? "distinguished" : "no distinguisher"},
          {"runs", trials}};
}

json attack_plausibility(const pearl_attack_params& p, int& distinguished) {
  const bool ui1 = p.experiment == PEARL_ATTACK_UI1;
  json runs = json::array();
  uint64_t implausible = 0, alarms = 0;
  uint32_t alarmed = 0;
  for (uint32_t i = 0; i < p.trials; ++i) {
    pearl::PlausibilityConfig cfg;
    if (p.preset) cfg.preset = p.preset;
    cfg.seed = p.seed + i;
    if (p.ops) cfg.ops = p.ops;
    cfg.broken_allocator = p.broken_allocator != 0;
    cfg.stop_at_first_alarm = ui1;
    const auto r = pearl::run_plausibility(cfg);
    implausible += r.implausible;
    alarms += r.alarms;
    alarmed += (ui1 ? r.alarms : r.implausible) > 0;
    runs.push_back({{"seed", cfg.seed},
                    {"ops", r.ops},
                    {"snapshots", r.snapshots},
                    {"hidden_writes", r.hidden_writes},
                    {"trims", r.trims},
                    {"forced_gcs", r.forced_gcs},
                    {"gc_runs", r.gc_runs},
                    {"implausible", r.implausible},
                    {"alarms", r.alarms},
                    {"integrity_errors", r.integrity_errors}});
  }
  distinguished = (ui1 ? alarms : implausible) > 0;
  const char* verdict = !distinguished ? "no distinguisher" : ui1 ? "UI1 alarm" : "implausible transition";
  return {{"experiment", ui1 ? "ui1" : "transitions"},
          {"broken_allocator", p.broken_allocator != 0},
          {"trials", p.trials},
          {"flagged_trials", alarmed},
          {"implausible", implausible},
          {"alarms", alarms},
          {"verdict", verdict},
          {"runs", runs}};
}

}  // namespace

extern "C" {

const char* pearl_version(void) { return "0.1.0"; }

const char* pearl_status_name(pearl_status status) {
  return pearl::error_code_name(static_cast<ErrorCode>(status));
}

const char* pearl_last_error(void) { return g_last_error.c_str(); }

void pearl_free(void* p) { std::free(p); }

pearl_status pearl_device_create(const char* preset, pearl_device** out) {
  return guard([&] {
    need(out, "out");
    *out = nullptr;
    auto g = pearl::DeviceGeometry::preset(preset ? preset : "desk");
    *out = new pearl_device{pearl::FlashDevice(g)};
  });
}

pearl_status pearl_device_open(const char* path, pearl_device** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new pearl_device{pearl::FlashDevice::restore(pearl::read_snapshot_file(path))};
  });
}

pearl_status pearl_device_save(const pearl_device* dev, const char* path) {
  return guard([&] {
    need(dev, "device");
    need(path, "path");
    pearl::write_snapshot_file(dev->dev.snapshot(), path);
  });
}

pearl_status pearl_device_info_get(const pearl_device* dev, pearl_device_info* out) {
  return guard([&] {
    need(dev, "device");
    need(out, "out");
    const auto& g = dev->dev.geometry();
    out->blocks = g.total_blocks();
    out->pages_per_block = g.pages_per_block;
    out->page_bytes = g.page_bytes;
    out->reads = dev->dev.reads();
    out->programs = dev->dev.programs();
    out->erases = dev->dev.erases();
    out->clock_us = dev->dev.clock_us();
  });
}

void pearl_device_destroy(pearl_device* dev) { delete dev; }

pearl_status pearl_format(pearl_device* dev, const char* config, const char* public_password) {
  return guard([&] {
    need(dev, "device");
    need(public_password, "public password");
    pearl::PearlFtl::format(dev->dev, config_of(config).pearl, public_password);
  });
}

pearl_status pearl_mount(pearl_device* dev, const char* config, const char* public_password,
                         const char* hidden_password, pearl_ftl** out) {
  return guard([&] {
    need(dev, "device");
    need(public_password, "public password");
    need(out, "out");
    *out = nullptr;
    const auto cf = config_of(config);
    std::unique_ptr<pearl::PearlFtl> ftl;
    if (hidden_password) {
      const std::string h = hidden_password;
      ftl = pearl::PearlFtl::mount(dev->dev, public_password, &h, cf.pearl);
    } else {
      ftl = pearl::PearlFtl::mount(dev->dev, public_password, nullptr, cf.pearl);
    }
    *out = new pearl_ftl{nullptr, std::move(ftl)};
  });
}

pearl_status pearl_dftl_create(pearl_device* dev, pearl_ftl** out) {
  return guard([&] {
    need(dev, "device");
    need(out, "out");
    *out = nullptr;
    *out = new pearl_ftl{std::make_unique<pearl::Dftl>(dev->dev), nullptr};
  });
}

pearl_status pearl_unmount(pearl_ftl* ftl) {
  return guard([&] {
    need(ftl, "ftl");
    if (ftl->pearl) {
      ftl->pearl->prepare_unmount();
    } else {
      ftl->dftl->flush();
    }
  });
}

void pearl_ftl_destroy(pearl_ftl* ftl) { delete ftl; }

pearl_status pearl_volume_info_get(const pearl_ftl* ftl, pearl_volume volume,
                                   pearl_volume_info* out) {
  return guard([&] {
    need(ftl, "ftl");
    need(out, "out");
    const auto v = to_volume(volume);
    const auto& f = ftl->base();
    out->available = f.has_volume(v) ? 1 : 0;
    out->payload_bytes = f.has_volume(v) ? f.payload_bytes(v) : 0;
    out->pages = f.logical_pages(v);
  });
}

pearl_status pearl_write_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn,
                              const uint8_t* data, size_t len) {
  return guard([&] {
    need(ftl, "ftl");
    if (len) need(data, "data");
    const auto v = to_volume(volume);
    auto& f = ftl->base();
    const size_t pb = f.has_volume(v) ? f.payload_bytes(v) : 0;
    if (len > pb && pb) fail(ErrorCode::kInvalidArgument, "data larger than a page");
    std::vector<uint8_t> buf(pb, 0);
    if (len) std::memcpy(buf.data(), data, len);
    f.write_page(v, lpn, buf);
  });
}

pearl_status pearl_read_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn, uint8_t* buf,
                             size_t cap, size_t* len) {
  return guard([&] {
    need(ftl, "ftl");
    const auto data = ftl->base().read_page(to_volume(volume), lpn);
    if (cap) need(buf, "buffer");
    std::memcpy(buf, data.data(), std::min(cap, data.size()));
    if (len) *len = data.size();
  });
}

pearl_status pearl_trim_page(pearl_ftl* ftl, pearl_volume volume, uint32_t lpn) {
  return guard([&] {
    need(ftl, "ftl");
    ftl->base().trim_page(to_volume(volume), lpn);
  });
}

pearl_status pearl_gc(pearl_ftl* ftl) {
  return guard([&] {
    need(ftl, "ftl");
    if (ftl->pearl) {
      ftl->pearl->gc_run();
    } else {
      ftl->dftl->gc_run();
    }
  });
}

pearl_status pearl_init_device(pearl_ftl* ftl, double fill_fraction, uint64_t seed,
                               pearl_init_report* out) {
  return guard([&] {
    need(ftl, "ftl");
    const auto r = pearl::init_device(ftl->base(), fill_fraction, seed);
    if (out) *out = {r.public_pages, r.hidden_pages, r.rewrites, r.gc_runs};
  });
}

pearl_status pearl_ftl_stats_json(const pearl_ftl* ftl, char** json_out) {
  return guard([&] {
    need(ftl, "ftl");
    need(json_out, "out");
    *json_out = dup(stats_json(ftl->base().stats()).dump(2));
  });
}

pearl_status pearl_verify_code(const char* code, int* ok, char** report_json) {
  return guard([&] {
    need(code, "code");
    const std::string text = code;
    const bool table = text.find('\n') != std::string::npos;
    const pearl::WomCode c =
        table ? pearl::WomCode::parse_table(text, "table") : pearl::WomCode::by_name(text);
    const auto wom = pearl::verify_wom2(c);
    const auto part = pearl::verify_equal_partition(c);
    const bool pass = wom.valid && part.partition_ok && part.equal;
    if (ok) *ok = pass ? 1 : 0;
    if (report_json) {
      json j{{"code", c.name()},
             {"k", c.k()},
             {"n", c.n()},
             {"wom_valid", wom.valid},
             {"checked_pairs", wom.checked_pairs},
             {"wom_violations", wom.violations},
             {"partition_ok", part.partition_ok},
             {"equal_partition", part.equal},
             {"a_sizes", part.a_sizes},
             {"b_sizes", part.b_sizes},
             {"partition_violations", part.violations},
             {"pass", pass}};
      *report_json = dup(j.dump(2));
    }
  });
}

pearl_status pearl_snapshot_classify(const char* path, const char* public_password,
                                     char** records) {
  return guard([&] {
    need(path, "path");
    need(public_password, "public password");
    need(records, "out");
    const auto snap = pearl::read_snapshot_file(path);
    const auto view =
        pearl::classify_snapshot(snap, pearl::public_key_for(snap, public_password));
    std::ostringstream os;
    pearl::write_records(os, view);
    *records = dup(os.str());
  });
}

pearl_status pearl_snapshot_diff(const char* earlier, const char* later,
                                 const char* public_password, uint64_t* flagged,
                                 uint64_t* alarms, char** records) {
  return guard([&] {
    need(earlier, "earlier");
    need(later, "later");
    need(public_password, "public password");
    const auto a = pearl::read_snapshot_file(earlier);
    const auto b = pearl::read_snapshot_file(later);
    const auto key = pearl::public_key_for(a, public_password);
    const auto va = pearl::classify_snapshot(a, key);
    const auto vb = pearl::classify_snapshot(b, key);
    const auto tr = pearl::diff_transitions(va, vb);
    const auto ui1 = pearl::ui1_inference(va, vb);
    if (flagged) *flagged = tr.flagged;
    if (alarms) *alarms = ui1.size();
    if (records) {
      std::ostringstream os;
      pearl::write_records(os, tr);
      pearl::write_records(os, ui1);
      *records = dup(os.str());
    }
  });
}

pearl_status pearl_attack(const pearl_attack_params* params, int* distinguished,
                          char** report_json) {
  return guard([&] {
    need(params, "params");
    if (params->trials == 0) fail(ErrorCode::kInvalidArgument, "trials must be at least 1");
    int d = 0;
    json j;
    switch (params->experiment) {
      case PEARL_ATTACK_FREQUENCY:
        j = attack_frequency(*params, d);
        break;
      case PEARL_ATTACK_TRANSITIONS:
      case PEARL_ATTACK_UI1:
        j = attack_plausibility(*params, d);
        break;
      default:
        fail(ErrorCode::kInvalidArgument, "unknown experiment");
    }
    if (distinguished) *distinguished = d;
    if (report_json) *report_json = dup(j.dump(2));
  });
}

void pearl_bench_defaults(pearl_bench_params* p) {
  if (!p) return;
  *p = pearl_bench_params{};
  p->ftl = "pearl";
  p->volume = PEARL_VOLUME_PUBLIC;
  p->read_fraction = 1.0;
  p->count = 1000;
  p->request_bytes = 16384;
  p->fill_fraction = 0.5;
  p->seed = 1;
}

pearl_status pearl_bench(const pearl_bench_params* p, char** summary_json) {
  return guard([&] {
    need(p, "params");
    need(p->ftl, "ftl");
    const std::string kind = p->ftl;
    const auto cf = config_of(p->config);
    pearl::FlashDevice dev(pearl::DeviceGeometry::preset(p->preset ? p->preset : cf.preset));
    std::unique_ptr<pearl::BlockFtl> ftl;
    if (kind == "dftl") {
      ftl = std::make_unique<pearl::Dftl>(dev);
    } else if (kind == "pearl") {
      const std::string hidden = "bench-hidden";
      pearl::PearlFtl::format(dev, cf.pearl, "bench-public");
      ftl = pearl::PearlFtl::mount(dev, "bench-public", &hidden, cf.pearl);
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown ftl '" + kind + "'");
    }
    const auto init = pearl::init_device(*ftl, p->fill_fraction, p->seed);

    pearl::Workload w;
    const pearl::Volume vol = to_volume(p->volume);
    if (p->trace) {
      const uint64_t wrap =
          uint64_t{ftl->logical_pages(pearl::Volume::kPublic)} * ftl->payload_bytes(pearl::Volume::kPublic);
      w = pearl::parse_trace_file(p->trace, wrap);
      if (p->hidden_fraction > 0) {
        pearl::redirect_writes(w, p->hidden_fraction, p->seed);
        const uint64_t hwrap =
            uint64_t{ftl->logical_pages(pearl::Volume::kHidden)} * ftl->payload_bytes(pearl::Volume::kHidden);
        for (auto& r : w) {
          if (r.volume == pearl::Volume::kHidden) r.offset %= hwrap;
        }
      }
      // Requests straddling the end of a volume are clipped to it.
      for (auto& r : w) {
        if (!ftl->has_volume(r.volume)) continue;
        const uint64_t pb = ftl->payload_bytes(r.volume);
        const uint64_t end = uint64_t{ftl->logical_pages(r.volume)} * pb;
        if (r.offset / pb * pb + r.size > end) r.size = end - r.offset / pb * pb;
      }
    } else {
      if (!ftl->has_volume(vol)) {
        fail(ErrorCode::kModeRejected, kind + " has no " + pearl::volume_name(vol) + " volume");
      }
      pearl::SyntheticSpec s;
      s.count = p->count;
      s.request_bytes = p->request_bytes;
      s.read_fraction = p->read_fraction;
      s.volume = vol;
      s.seed = p->seed;
      s.region_bytes = uint64_t{ftl->logical_pages(vol) / 2} * ftl->payload_bytes(vol);
      w = pearl::gen_synthetic(s);
    }
    pearl::ReplayOptions opts;
    opts.seed = p->seed;
    const auto m = pearl::replay(*ftl, w, opts);
    if (p->out_prefix) pearl::export_report(m, p->out_prefix);
    if (summary_json) {
      json j = json::parse(pearl::summary_json(m));
      j["init"] = {{"public_pages", init.public_pages},
                   {"hidden_pages", init.hidden_pages},
                   {"rewrites", init.rewrites},
                   {"gc_runs", init.gc_runs}};
      *summary_json = dup(j.dump(2));
    }
  });
}

}  // extern "C"
