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

#include "pearl/ftl.hpp"

#include <cstring>

#include "pearl/error.hpp"

namespace pearl {

std::vector<uint8_t> OobRecord::encode(size_t oob_bytes) const {
  if (oob_bytes < kSize) fail(ErrorCode::kInvalidArgument, "OOB area too small");
  std::vector<uint8_t> out(oob_bytes, 0);
  std::memcpy(out.data(), iv.data(), 16);
  for (int i = 0; i < 4; ++i) out[16 + i] = static_cast<uint8_t>(lpn >> (8 * i));
  out[20] = stage;
  out[21] = static_cast<uint8_t>(kind);
  for (int i = 0; i < 8; ++i) out[22 + i] = static_cast<uint8_t>(seq >> (8 * i));
  std::memcpy(out.data() + 30, hidden_tag.data(), 16);
  return out;
}

OobRecord OobRecord::decode(std::span<const uint8_t> oob) {
  if (oob.size() < kSize) fail(ErrorCode::kCorrupt, "OOB area too small");
  OobRecord r;
  std::memcpy(r.iv.data(), oob.data(), 16);
  r.lpn = 0;
  for (int i = 0; i < 4; ++i) r.lpn |= uint32_t{oob[16 + i]} << (8 * i);
  r.stage = oob[20];
  if (r.stage > 2) fail(ErrorCode::kCorrupt, "bad stage tag");
  if (oob[21] > 1) fail(ErrorCode::kCorrupt, "bad kind tag");
  r.kind = static_cast<PageKind>(oob[21]);
  for (int i = 0; i < 8; ++i) r.seq |= uint64_t{oob[22 + i]} << (8 * i);
  std::memcpy(r.hidden_tag.data(), oob.data() + 30, 16);
  return r;
}

int64_t select_min_valid(std::span<const uint32_t> valid,
                         const std::vector<bool>& candidate) {
  int64_t best = -1;
  for (size_t b = 0; b < valid.size(); ++b) {
    if (!candidate[b]) continue;
    if (best < 0 || valid[b] < valid[static_cast<size_t>(best)]) best = static_cast<int64_t>(b);
  }
  return best;
}

}  // namespace pearl
