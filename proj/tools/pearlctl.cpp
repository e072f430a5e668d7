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


// pearlctl: command-line driver over the pearl C interface.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pearl/pearl.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kExitPass = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct Failure {
  pearl_status status;
  std::string what;
};

void check(pearl_status s, const std::string& what) {
  if (s != PEARL_OK) throw Failure{s, what + ": " + pearl_last_error()};
}

struct Owned {
  char* p = nullptr;
  ~Owned() { pearl_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct Device {
  pearl_device* d = nullptr;
  ~Device() { pearl_device_destroy(d); }
};

struct Ftl {
  pearl_ftl* f = nullptr;
  ~Ftl() { close(); }
  void close() {
    pearl_ftl_destroy(f);
    f = nullptr;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{PEARL_E_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Common {
  std::string preset;
  uint64_t seed = 1;
  std::string config_path;
  std::string out = "out";
  std::string config_text;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--preset", c.preset, "Device preset (desk|paper)")
      ->check(CLI::IsMember({"desk", "paper"}));
  sub->add_option("--seed", c.seed, "Seed");
  sub->add_option("--config", c.config_path, "key = value configuration file");
  sub->add_option("--out", c.out, "Output directory");
}

std::string preset_of(const Common& c) {
  if (!c.preset.empty()) return c.preset;
  std::istringstream in(c.config_text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(k);
    trim(v);
    if (k == "preset") return v;
  }
  return "desk";
}

std::string out_path(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

void append_manifest(const Common& c, const std::string& command, json extra, int exit_code) {
  json m;
  m["command"] = command;
  m["version"] = pearl_version();
  m["preset"] = preset_of(c);
  m["seed"] = c.seed;
  m["config_path"] = c.config_path;
  m["config"] = c.config_text;
  m["exit"] = exit_code;
  for (auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream f(out_path(c, "manifest.jsonl"), std::ios::app);
  f << m.dump() << "\n";
}

pearl_volume parse_volume(const std::string& s) {
  if (s == "public" || s == "pub") return PEARL_VOLUME_PUBLIC;
  if (s == "hidden" || s == "hid") return PEARL_VOLUME_HIDDEN;
  throw Failure{PEARL_E_INVALID_ARGUMENT, "unknown volume '" + s + "'"};
}

std::vector<uint8_t> parse_payload(const std::string& s) {
  if (s.rfind("hex:", 0) == 0) {
    const std::string h = s.substr(4);
    if (h.size() % 2) throw Failure{PEARL_E_INVALID_ARGUMENT, "odd hex length"};
    std::vector<uint8_t> out;
    for (size_t i = 0; i < h.size(); i += 2) {
      out.push_back(static_cast<uint8_t>(std::stoul(h.substr(i, 2), nullptr, 16)));
    }
    return out;
  }
  return {s.begin(), s.end()};
}

std::string hex(const std::vector<uint8_t>& d) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (uint8_t b : d) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

// ---------------------------------------------------------------- commands

int cmd_verify_code(const Common& c, const std::string& code) {
  std::string spec = code;
  if (fs::is_regular_file(code)) spec = read_file(code);
  int ok = 0;
  Owned report;
  check(pearl_verify_code(spec.c_str(), &ok, &report.p), "verify-code");
  std::cout << report.str() << "\n";
  const int rc = ok ? kExitPass : kExitViolation;
  append_manifest(c, "verify-code", {{"code", code}, {"report", json::parse(report.str())}}, rc);
  return rc;
}

struct Passwords {
  std::string pub = "public";
  std::string hid;
  bool public_only = false;
};

int cmd_init(const Common& c, const std::string& ftl_kind, double fill, const Passwords& pw) {
  Device dev;
  check(pearl_device_create(preset_of(c).c_str(), &dev.d), "device");
  Ftl ftl;
  if (ftl_kind == "dftl") {
    check(pearl_dftl_create(dev.d, &ftl.f), "dftl");
  } else {
    check(pearl_format(dev.d, c.config_text.c_str(), pw.pub.c_str()), "format");
    const std::string hid = pw.hid.empty() ? "hidden" : pw.hid;
    check(pearl_mount(dev.d, c.config_text.c_str(), pw.pub.c_str(),
                      pw.public_only ? nullptr : hid.c_str(), &ftl.f),
          "mount");
  }
  pearl_init_report r{};
  check(pearl_init_device(ftl.f, fill, c.seed, &r), "init");
  check(pearl_unmount(ftl.f), "unmount");
  json j{{"ftl", ftl_kind},
         {"public_pages", r.public_pages},
         {"hidden_pages", r.hidden_pages},
         {"rewrites", r.rewrites},
         {"gc_runs", r.gc_runs}};
  if (ftl_kind == "pearl") {
    const std::string image = out_path(c, "device.img");
    ftl.close();
    check(pearl_device_save(dev.d, image.c_str()), "save");
    j["image"] = image;
  }
  std::cout << j.dump(2) << "\n";
  append_manifest(c, "init", {{"result", j}}, kExitPass);
  return kExitPass;
}

// Script lines: write <vol> <lpn> <text|hex:..>, read <vol> <lpn>,
// expect <vol> <lpn> <text|hex:..>, trim <vol> <lpn>, gc. '#' starts a comment.
int cmd_io(const Common& c, const std::string& image, const std::string& script,
           const Passwords& pw) {
  Device dev;
  check(pearl_device_open(image.c_str(), &dev.d), "open " + image);
  Ftl ftl;
  check(pearl_mount(dev.d, c.config_text.c_str(), pw.pub.c_str(),
                    pw.hid.empty() ? nullptr : pw.hid.c_str(), &ftl.f),
        "mount");
  std::istringstream in(read_file(script));
  std::string line;
  int lineno = 0;
  uint64_t mismatches = 0, ops = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string op;
    if (!(ls >> op)) continue;
    const std::string where = script + ":" + std::to_string(lineno);
    if (op == "gc") {
      check(pearl_gc(ftl.f), where);
      ++ops;
      continue;
    }
    std::string vol;
    uint32_t lpn = 0;
    if (!(ls >> vol >> lpn)) throw Failure{PEARL_E_INVALID_ARGUMENT, where + ": expected <volume> <lpn>"};
    const pearl_volume v = parse_volume(vol);
    std::string arg;
    ls >> std::ws;
    std::getline(ls, arg);
    ++ops;
    if (op == "write") {
      const auto data = parse_payload(arg);
      check(pearl_write_page(ftl.f, v, lpn, data.data(), data.size()), where);
    } else if (op == "trim") {
      check(pearl_trim_page(ftl.f, v, lpn), where);
    } else if (op == "read" || op == "expect") {
      pearl_volume_info info{};
      check(pearl_volume_info_get(ftl.f, v, &info), where);
      std::vector<uint8_t> buf(info.payload_bytes);
      size_t len = 0;
      check(pearl_read_page(ftl.f, v, lpn, buf.data(), buf.size(), &len), where);
      if (op == "read") {
        std::cout << vol << " " << lpn << " " << hex(buf) << "\n";
      } else {
        auto want = parse_payload(arg);
        want.resize(buf.size(), 0);
        if (want != buf) {
          ++mismatches;
          std::cout << "mismatch " << where << "\n";
        }
      }
    } else {
      throw Failure{PEARL_E_INVALID_ARGUMENT, where + ": unknown op '" + op + "'"};
    }
  }
  check(pearl_unmount(ftl.f), "unmount");
  Owned stats;
  check(pearl_ftl_stats_json(ftl.f, &stats.p), "stats");
  ftl.close();
  const std::string saved = out_path(c, "device.img");
  check(pearl_device_save(dev.d, saved.c_str()), "save");
  const int rc = mismatches ? kExitViolation : kExitPass;
  json j{{"image", image}, {"saved", saved}, {"script", script}, {"ops", ops},
         {"mismatches", mismatches}, {"stats", json::parse(stats.str())}};
  std::cerr << j.dump(2) << "\n";
  append_manifest(c, "io", {{"result", j}}, rc);
  return rc;
}

struct BenchArgs {
  std::string ftl = "pearl";
  std::string trace;
  std::string volume = "public";
  std::string op = "read";
  double hidden_fraction = 0;
  double fill = 0.5;
  uint64_t count = 1000;
  uint64_t request_bytes = 16384;
};

int cmd_bench(const Common& c, const BenchArgs& a) {
  std::vector<std::string> ftls;
  if (a.ftl == "both") {
    ftls = {"dftl", "pearl"};
  } else {
    ftls = {a.ftl};
  }
  json results = json::array();
  for (const auto& kind : ftls) {
    const std::string preset = preset_of(c);
    const std::string prefix =
        out_path(c, "bench-" + kind + "-" + (a.trace.empty() ? a.volume + "-" + a.op : "trace"));
    pearl_bench_params p;
    pearl_bench_defaults(&p);
    p.preset = preset.c_str();
    p.ftl = kind.c_str();
    p.config = c.config_text.c_str();
    p.trace = a.trace.empty() ? nullptr : a.trace.c_str();
    p.volume = parse_volume(a.volume);
    p.read_fraction = a.op == "read" ? 1.0 : a.op == "write" ? 0.0 : 0.5;
    p.count = a.count;
    p.request_bytes = a.request_bytes;
    p.hidden_fraction = a.hidden_fraction;
    p.fill_fraction = a.fill;
    p.seed = c.seed;
    p.out_prefix = prefix.c_str();
    Owned summary;
    check(pearl_bench(&p, &summary.p), "bench " + kind);
    json s = json::parse(summary.str());
    std::cout << kind << " iops " << s["iops"].get<double>() << " mean_response_us "
              << s["mean_response_us"].get<double>() << "\n";
    results.push_back({{"ftl", kind}, {"prefix", prefix}, {"summary", s}});
  }
  append_manifest(c, "bench",
                  {{"trace", a.trace},
                   {"volume", a.volume},
                   {"op", a.op},
                   {"count", a.count},
                   {"hidden_fraction", a.hidden_fraction},
                   {"results", results}},
                  kExitPass);
  return kExitPass;
}

struct AttackArgs {
  std::string experiment = "frequency";
  std::string code = "3,5";
  uint32_t trials = 20;
  uint32_t ops = 10000;
  bool no_hidden = false;
  bool mutant = false;
};

int cmd_attack(const Common& c, const AttackArgs& a) {
  pearl_attack_params p{};
  p.experiment = a.experiment == "frequency"     ? PEARL_ATTACK_FREQUENCY
                 : a.experiment == "transitions" ? PEARL_ATTACK_TRANSITIONS
                                                 : PEARL_ATTACK_UI1;
  const std::string preset = preset_of(c);
  p.preset = preset.c_str();
  p.code = a.code.c_str();
  p.trials = a.trials;
  p.seed = c.seed;
  p.ops = a.ops;
  p.hidden = a.no_hidden ? 0 : 1;
  p.broken_allocator = a.mutant ? 1 : 0;
  int distinguished = 0;
  Owned report;
  check(pearl_attack(&p, &distinguished, &report.p), "attack");
  json r = json::parse(report.str());
  std::cout << r["verdict"].get<std::string>() << "\n";
  const std::string path = out_path(c, "attack-" + a.experiment + ".json");
  std::ofstream(path) << r.dump(2) << "\n";
  const int rc = distinguished ? kExitViolation : kExitPass;
  append_manifest(c, "attack",
                  {{"experiment", a.experiment},
                   {"code", a.code},
                   {"trials", a.trials},
                   {"mutant", a.mutant},
                   {"report", path},
                   {"verdict", r["verdict"]}},
                  rc);
  return rc;
}

int cmd_snapshot(const Common& c, const std::vector<std::string>& images, const Passwords& pw) {
  if (images.size() == 1) {
    Owned records;
    check(pearl_snapshot_classify(images[0].c_str(), pw.pub.c_str(), &records.p), "classify");
    const std::string path = out_path(c, "snapshot.txt");
    std::ofstream(path) << records.str();
    std::cout << path << "\n";
    append_manifest(c, "snapshot", {{"images", images}, {"records", path}}, kExitPass);
    return kExitPass;
  }
  uint64_t flagged = 0, alarms = 0;
  Owned records;
  check(pearl_snapshot_diff(images[0].c_str(), images[1].c_str(), pw.pub.c_str(), &flagged,
                            &alarms, &records.p),
        "diff");
  const std::string path = out_path(c, "snapshot-diff.txt");
  std::ofstream(path) << records.str();
  std::cout << "implausible " << flagged << " ui1_alarms " << alarms << "\n";
  const int rc = flagged || alarms ? kExitViolation : kExitPass;
  append_manifest(c, "snapshot",
                  {{"images", images}, {"records", path}, {"implausible", flagged}, {"alarms", alarms}},
                  rc);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pearl flash translation layer laboratory"};
  app.require_subcommand(1);
  Common common;
  Passwords pw;

  auto* verify = app.add_subcommand("verify-code", "Check a WOM code exhaustively");
  std::string code = "3,5";
  add_common(verify, common);
  verify->add_option("--code", code, "Builtin code name or table file");

  auto* init = app.add_subcommand("init", "Format and fill a device image");
  std::string ftl_kind = "pearl";
  double fill = 0.5;
  add_common(init, common);
  init->add_option("--ftl", ftl_kind)->check(CLI::IsMember({"dftl", "pearl"}));
  init->add_option("--fill", fill, "Fill fraction of each volume")->check(CLI::Range(0.0, 1.0));
  init->add_option("--public-password", pw.pub);
  init->add_option("--hidden-password", pw.hid);
  init->add_flag("--public-only", pw.public_only, "Mount without the hidden volume");

  auto* io = app.add_subcommand("io", "Run a scripted batch against a device image");
  std::string image, script;
  add_common(io, common);
  io->add_option("--device", image, "Device image")->required();
  io->add_option("--script", script, "Script file")->required();
  io->add_option("--public-password", pw.pub);
  io->add_option("--hidden-password", pw.hid);

  auto* bench = app.add_subcommand("bench", "Replay a workload and report throughput");
  BenchArgs ba;
  add_common(bench, common);
  bench->add_option("--ftl", ba.ftl)->check(CLI::IsMember({"dftl", "pearl", "both"}));
  bench->add_option("--trace", ba.trace, "Trace file (asu,lba,size,op,timestamp)");
  bench->add_option("--volume", ba.volume)->check(CLI::IsMember({"public", "hidden"}));
  bench->add_option("--op", ba.op, "Synthetic operation")->check(CLI::IsMember({"read", "write", "mixed"}));
  bench->add_option("--count", ba.count, "Synthetic request count");
  bench->add_option("--request-bytes", ba.request_bytes);
  bench->add_option("--hidden-fraction", ba.hidden_fraction, "Share of trace writes sent to the hidden volume")
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--fill", ba.fill)->check(CLI::Range(0.0, 1.0));

  auto* attack = app.add_subcommand("attack", "Run an adversary experiment");
  AttackArgs aa;
  add_common(attack, common);
  attack->add_option("--experiment", aa.experiment)
      ->check(CLI::IsMember({"frequency", "transitions", "ui1"}));
  attack->add_option("--code", aa.code);
  attack->add_option("--trials", aa.trials)->check(CLI::PositiveNumber);
  attack->add_option("--ops", aa.ops, "Operations per plausibility run");
  attack->add_flag("--no-hidden", aa.no_hidden, "Frequency trials without hidden writes");
  attack->add_flag("--mutant", aa.mutant, "Use the broken allocator");

  auto* snapshot = app.add_subcommand("snapshot", "Classify one image or diff two");
  std::vector<std::string> images;
  add_common(snapshot, common);
  snapshot->add_option("images", images, "Image files")->required()->expected(1, 2);
  snapshot->add_option("--public-password", pw.pub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (!common.config_path.empty()) common.config_text = read_file(common.config_path);
    if (*verify) return cmd_verify_code(common, code);
    if (*init) return cmd_init(common, ftl_kind, fill, pw);
    if (*io) return cmd_io(common, image, script, pw);
    if (*bench) return cmd_bench(common, ba);
    if (*attack) return cmd_attack(common, aa);
    if (*snapshot) return cmd_snapshot(common, images, pw);
  } catch (const Failure& f) {
    std::cerr << "pearlctl: " << f.what << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pearlctl: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
