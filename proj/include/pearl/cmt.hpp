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
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pearl/flash.hpp"

namespace pearl {

/// LRU cache of LPN -> PPN entries shared by both volumes. Entries can be
/// pinned while an operation holds them; pinned entries are never chosen for
/// eviction.
class MappingCache {
 public:
  struct Key {
    uint8_t volume = 0;
    uint32_t lpn = 0;
    bool operator==(const Key&) const = default;
  };
  struct Entry {
    Ppn ppn = kNoPpn;
    bool dirty = false;
    uint32_t pins = 0;
  };

  explicit MappingCache(size_t capacity) : capacity_(capacity) {}

  size_t capacity() const { return capacity_; }
  size_t size() const { return map_.size(); }
  bool full() const { return map_.size() >= capacity_; }

  /// Looks up and marks most recently used.
  Entry* find(Key k) {
    auto it = map_.find(pack(k));
    if (it == map_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.pos);
    return &it->second.entry;
  }
  /// Looks up without touching recency.
  Entry* get(Key k) {
    auto it = map_.find(pack(k));
    return it == map_.end() ? nullptr : &it->second.entry;
  }
  const Entry* peek(Key k) const {
    auto it = map_.find(pack(k));
    return it == map_.end() ? nullptr : &it->second.entry;
  }
  Entry& insert(Key k, Ppn ppn, bool dirty) {
    const uint64_t p = pack(k);
    auto it = map_.find(p);
    if (it != map_.end()) {
      it->second.entry.ppn = ppn;
      it->second.entry.dirty = it->second.entry.dirty || dirty;
      order_.splice(order_.begin(), order_, it->second.pos);
      return it->second.entry;
    }
    order_.push_front(p);
    Node& n = map_[p];
    n.entry = Entry{ppn, dirty, 0};
    n.pos = order_.begin();
    return n.entry;
  }
  void erase(Key k) {
    auto it = map_.find(pack(k));
    if (it == map_.end()) return;
    order_.erase(it->second.pos);
    map_.erase(it);
  }
  /// Least recently used unpinned entry.
  std::optional<Key> lru_victim() const {
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      if (map_.at(*it).entry.pins == 0) return unpack(*it);
    }
    return std::nullopt;
  }
  /// Dirty entries whose lpn falls in [first, first + count).
  std::vector<std::pair<uint32_t, Ppn>> dirty_in_range(uint8_t volume,
                                                       uint32_t first,
                                                       uint32_t count) const {
    std::vector<std::pair<uint32_t, Ppn>> out;
    if (count < map_.size()) {
      for (uint32_t l = first; l < first + count; ++l) {
        auto it = map_.find(pack({volume, l}));
        if (it != map_.end() && it->second.entry.dirty) {
          out.emplace_back(l, it->second.entry.ppn);
        }
      }
    } else {
      for (const auto& [p, n] : map_) {
        const Key k = unpack(p);
        if (k.volume == volume && k.lpn >= first && k.lpn < first + count &&
            n.entry.dirty) {
          out.emplace_back(k.lpn, n.entry.ppn);
        }
      }
    }
    return out;
  }
  void mark_clean(Key k) {
    auto it = map_.find(pack(k));
    if (it != map_.end()) it->second.entry.dirty = false;
  }
  std::vector<Key> dirty_keys() const {
    std::vector<Key> out;
    for (const auto& [p, n] : map_) {
      if (n.entry.dirty) out.push_back(unpack(p));
    }
    return out;
  }
  void clear() {
    map_.clear();
    order_.clear();
  }

 private:
  struct Node {
    Entry entry;
    std::list<uint64_t>::iterator pos;
  };
  static uint64_t pack(Key k) { return (uint64_t{k.volume} << 32) | k.lpn; }
  static Key unpack(uint64_t p) {
    return Key{static_cast<uint8_t>(p >> 32), static_cast<uint32_t>(p)};
  }

  size_t capacity_;
  std::unordered_map<uint64_t, Node> map_;
  std::list<uint64_t> order_;  // front = most recent
};

}  // namespace pearl
