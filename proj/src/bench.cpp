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
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pearl/error.hpp"
#include "pearl/pearl_ftl.hpp"

namespace pearl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  s = trim(s);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

[[noreturn]] void bad_line(size_t line, const std::string& why) {
  fail(ErrorCode::kInvalidArgument, "trace line " + std::to_string(line) + ": " + why);
}

void fill_random(std::vector<uint8_t>& buf, Rng& rng) {
  for (size_t i = 0; i < buf.size(); i += 8) {
    uint64_t v = rng();
    for (size_t j = i; j < std::min(buf.size(), i + 8); ++j, v >>= 8) {
      buf[j] = static_cast<uint8_t>(v);
    }
  }
}

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kRead: return "read";
    case OpKind::kWrite: return "write";
    case OpKind::kTrim: return "trim";
  }
  return "?";
}

double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0;
  const size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

Workload parse_trace(std::istream& in, uint64_t wrap_bytes) {
  Workload w;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::vector<std::string_view> f;
    size_t pos = 0;
    for (;;) {
      const size_t comma = s.find(',', pos);
      f.push_back(s.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (f.size() != 5) bad_line(lineno, "expected 5 fields");
    uint32_t asu;
    uint64_t lba, size;
    double ts;
    if (!parse_int(f[0], asu)) bad_line(lineno, "bad asu");
    if (!parse_int(f[1], lba)) bad_line(lineno, "bad lba");
    if (!parse_int(f[2], size) || size == 0) bad_line(lineno, "bad size");
    if (!parse_double(f[4], ts) || ts < 0) bad_line(lineno, "bad timestamp");
    const std::string_view op = trim(f[3]);
    TraceRecord r;
    if (op == "r" || op == "R") {
      r.op = OpKind::kRead;
    } else if (op == "w" || op == "W") {
      r.op = OpKind::kWrite;
    } else if (op == "t" || op == "T") {
      r.op = OpKind::kTrim;
    } else {
      bad_line(lineno, "bad opcode");
    }
    r.offset = lba * kSectorBytes;
    if (wrap_bytes) r.offset %= wrap_bytes;
    r.size = size;
    r.arrival = ts;
    w.push_back(r);
  }
  std::stable_sort(w.begin(), w.end(),
                   [](const TraceRecord& a, const TraceRecord& b) { return a.arrival < b.arrival; });
  return w;
}

Workload parse_trace_file(const std::string& path, uint64_t wrap_bytes) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open trace " + path);
  return parse_trace(in, wrap_bytes);
}

void redirect_writes(Workload& w, double hidden_fraction, uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& r : w) {
    if (r.op == OpKind::kWrite && u(rng) < hidden_fraction) r.volume = Volume::kHidden;
  }
}

Workload gen_synthetic(const SyntheticSpec& s) {
  if (s.count == 0) fail(ErrorCode::kInvalidArgument, "request count must be positive");
  if (s.request_bytes == 0 || s.request_bytes % kSectorBytes != 0) {
    fail(ErrorCode::kInvalidArgument, "request size must be a positive multiple of 512");
  }
  if (s.region_bytes < s.request_bytes) {
    fail(ErrorCode::kInvalidArgument, "region smaller than one request");
  }
  Rng rng(s.seed);
  const uint64_t slots = s.region_bytes / s.request_bytes;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Workload w;
  w.reserve(s.count);
  for (uint64_t i = 0; i < s.count; ++i) {
    TraceRecord r;
    r.volume = s.volume;
    r.offset = (rng() % slots) * s.request_bytes;
    r.size = s.request_bytes;
    r.op = u(rng) < s.read_fraction ? OpKind::kRead : OpKind::kWrite;
    r.arrival = s.interarrival * static_cast<double>(i);
    w.push_back(r);
  }
  return w;
}

InitReport init_device(BlockFtl& ftl, double fill_fraction, uint64_t seed) {
  InitReport rep;
  if (fill_fraction <= 0) return rep;
  Rng rng(seed);
  const uint32_t pub = static_cast<uint32_t>(ftl.logical_pages(Volume::kPublic) * fill_fraction);
  const uint32_t hid = ftl.has_volume(Volume::kHidden)
                           ? static_cast<uint32_t>(ftl.logical_pages(Volume::kHidden) * fill_fraction)
                           : 0;
  std::vector<uint8_t> pbuf(ftl.payload_bytes(Volume::kPublic));
  std::vector<uint8_t> hbuf(ftl.has_volume(Volume::kHidden) ? ftl.payload_bytes(Volume::kHidden) : 0);
  auto* pearl = dynamic_cast<PearlFtl*>(&ftl);
  for (uint32_t i = 0; i < std::max(pub, hid); ++i) {
    if (pearl && i < hid && i < pub) {
      std::vector<Request> batch(2);
      fill_random(hbuf, rng);
      fill_random(pbuf, rng);
      batch[0] = {OpKind::kWrite, Volume::kHidden, i, hbuf};
      batch[1] = {OpKind::kWrite, Volume::kPublic, i, pbuf};
      pearl->submit_batch(batch);
      ++rep.public_pages;
      ++rep.hidden_pages;
      continue;
    }
    if (i < pub) {
      fill_random(pbuf, rng);
      ftl.write_page(Volume::kPublic, i, pbuf);
      ++rep.public_pages;
    }
    if (i < hid) {
      fill_random(hbuf, rng);
      ftl.write_page(Volume::kHidden, i, hbuf);
      ++rep.hidden_pages;
    }
  }
  const uint64_t limit = 8 * ftl.device().geometry().total_pages();
  while (pub > 0 && ftl.stats().gc_runs == 0 && rep.rewrites < limit) {
    fill_random(pbuf, rng);
    ftl.write_page(Volume::kPublic, static_cast<uint32_t>(rng() % pub), pbuf);
    ++rep.rewrites;
  }
  rep.gc_runs = ftl.stats().gc_runs;
  return rep;
}

RunMetrics replay(BlockFtl& ftl, const Workload& workload, const ReplayOptions& opts) {
  RunMetrics m;
  m.ftl = dynamic_cast<PearlFtl*>(&ftl) ? "pearl" : "dftl";
  m.seed = opts.seed;
  FlashDevice& dev = ftl.device();
  const FtlStats before = ftl.stats();
  const uint64_t r0 = dev.reads(), p0 = dev.programs(), e0 = dev.erases();
  Rng rng(opts.seed);

  std::vector<size_t> order(workload.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return workload[a].arrival < workload[b].arrival;
  });

  std::vector<uint8_t> buf;
  double free_at = 0;
  m.requests.reserve(workload.size());
  for (size_t idx : order) {
    const TraceRecord& r = workload[idx];
    if (!ftl.has_volume(r.volume)) {
      fail(ErrorCode::kModeRejected, std::string(volume_name(r.volume)) + " volume not available");
    }
    const uint64_t pb = ftl.payload_bytes(r.volume);
    const uint64_t first = r.offset / pb;
    const uint32_t pages = static_cast<uint32_t>((r.size + pb - 1) / pb);
    if (first + pages > ftl.logical_pages(r.volume)) {
      fail(ErrorCode::kOutOfRange, "request beyond the end of the " +
                                       std::string(volume_name(r.volume)) + " volume");
    }
    buf.resize(pb);
    const uint64_t c0 = dev.clock_us();
    for (uint32_t i = 0; i < pages; ++i) {
      const uint32_t lpn = static_cast<uint32_t>(first + i);
      switch (r.op) {
        case OpKind::kWrite:
          fill_random(buf, rng);
          ftl.write_page(r.volume, lpn, buf);
          break;
        case OpKind::kRead:
          try {
            ftl.read_page(r.volume, lpn);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kUnmapped) throw;
            ++m.unmapped_reads;
          }
          break;
        case OpKind::kTrim:
          try {
            ftl.trim_page(r.volume, lpn);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kUnmapped) throw;
          }
          break;
      }
    }
    const double busy =
        static_cast<double>(dev.clock_us() - c0) + opts.cpu_us_per_page * pages;
    RequestResult res;
    res.op = r.op;
    res.volume = r.volume;
    res.size = r.size;
    res.pages = pages;
    res.arrival_us = r.arrival * 1e6;
    res.start_us = std::max(res.arrival_us, free_at);
    res.completion_us = res.start_us + busy;
    free_at = res.completion_us;
    m.page_requests += pages;
    m.requests.push_back(res);
  }

  const FtlStats& after = ftl.stats();
  m.device_reads = dev.reads() - r0;
  m.device_programs = dev.programs() - p0;
  m.device_erases = dev.erases() - e0;
  m.gc_runs = after.gc_runs - before.gc_runs;
  m.cloak_relocations = after.cloak_relocations - before.cloak_relocations;
  for (int v = 0; v < 2; ++v) {
    m.logical_bytes[v] = after.logical_bytes_written[v] - before.logical_bytes_written[v];
    m.physical_bytes[v] = after.physical_bytes_written[v] - before.physical_bytes_written[v];
    m.translation_writes += after.translation_writes[v] - before.translation_writes[v];
  }
  if (!m.requests.empty()) {
    std::vector<double> resp;
    resp.reserve(m.requests.size());
    double first_arrival = m.requests.front().arrival_us;
    for (const auto& r : m.requests) resp.push_back(r.response_us());
    m.mean_response_us = std::accumulate(resp.begin(), resp.end(), 0.0) / resp.size();
    std::sort(resp.begin(), resp.end());
    m.p50_us = percentile(resp, 0.50);
    m.p95_us = percentile(resp, 0.95);
    m.p99_us = percentile(resp, 0.99);
    m.makespan_us = m.requests.back().completion_us - first_arrival;
    m.iops = m.makespan_us > 0 ? m.requests.size() / (m.makespan_us / 1e6) : 0;
  }
  return m;
}

std::string summary_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["ftl"] = m.ftl;
  j["seed"] = m.seed;
  j["requests"] = m.requests.size();
  j["page_requests"] = m.page_requests;
  j["unmapped_reads"] = m.unmapped_reads;
  j["mean_response_us"] = m.mean_response_us;
  j["p50_us"] = m.p50_us;
  j["p95_us"] = m.p95_us;
  j["p99_us"] = m.p99_us;
  j["makespan_us"] = m.makespan_us;
  j["iops"] = m.iops;
  j["device"] = {{"reads", m.device_reads},
                 {"programs", m.device_programs},
                 {"erases", m.device_erases},
                 {"gc_runs", m.gc_runs}};
  nlohmann::ordered_json amp;
  for (int v = 0; v < 2; ++v) {
    const char* name = volume_name(static_cast<Volume>(v));
    amp[name] = {{"logical_bytes", m.logical_bytes[v]},
                 {"physical_bytes", m.physical_bytes[v]},
                 {"ratio", m.logical_bytes[v] ? static_cast<double>(m.physical_bytes[v]) /
                                                    static_cast<double>(m.logical_bytes[v])
                                              : 0.0}};
  }
  j["amplification"] = amp;
  j["ledger"] = {{"translation_writes", m.translation_writes},
                 {"cloak_relocations", m.cloak_relocations}};
  return j.dump(2) + "\n";
}

void export_report(const RunMetrics& m, const std::string& prefix) {
  auto open = [](const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::kIo, "cannot write " + path);
    return f;
  };
  {
    std::ofstream f = open(prefix + ".csv");
    f << "# ftl=" << m.ftl << " seed=" << m.seed << "\n";
    f << "index,op,volume,size,pages,arrival_us,start_us,completion_us,response_us\n";
    f << std::fixed << std::setprecision(3);
    for (size_t i = 0; i < m.requests.size(); ++i) {
      const RequestResult& r = m.requests[i];
      f << i << "," << op_name(r.op) << "," << volume_name(r.volume) << "," << r.size << ","
        << r.pages << "," << r.arrival_us << "," << r.start_us << "," << r.completion_us << ","
        << r.response_us() << "\n";
    }
    if (!f) fail(ErrorCode::kIo, "short write to " + prefix + ".csv");
  }
  {
    std::map<uint64_t, uint64_t> per_second;
    for (const auto& r : m.requests) ++per_second[static_cast<uint64_t>(r.completion_us / 1e6)];
    std::ofstream f = open(prefix + ".series.csv");
    f << "second,completions\n";
    for (const auto& [s, n] : per_second) f << s << "," << n << "\n";
  }
  {
    std::ofstream f = open(prefix + ".summary.json");
    f << summary_json(m);
    if (!f) fail(ErrorCode::kIo, "short write to " + prefix + ".summary.json");
  }
}

}  // namespace pearl
