/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_ALLOC_STATS_HPP
#define NTK_ALLOC_STATS_HPP

#include <atomic>
#include <cstddef>
#include <new>

namespace ntk {

// Global byte counters for matrix storage. The benchmark harness reads these
// to report an allocator-level high-water mark instead of process RSS, which
// keeps memory numbers deterministic and portable.
namespace alloc_stats {

inline std::atomic<std::size_t>& current_bytes_counter() {
  static std::atomic<std::size_t> bytes{0};
  return bytes;
}

inline std::atomic<std::size_t>& peak_bytes_counter() {
  static std::atomic<std::size_t> bytes{0};
  return bytes;
}

inline std::size_t current_bytes() { return current_bytes_counter().load(); }
inline std::size_t peak_bytes() { return peak_bytes_counter().load(); }

/// Resets the high-water mark to the currently live byte count.
inline void reset_peak() { peak_bytes_counter().store(current_bytes()); }

inline void record_alloc(std::size_t n) {
  const std::size_t now = current_bytes_counter().fetch_add(n) + n;
  auto& peak = peak_bytes_counter();
  std::size_t old = peak.load();
  while (old < now && !peak.compare_exchange_weak(old, now)) {
  }
}

inline void record_dealloc(std::size_t n) { current_bytes_counter().fetch_sub(n); }

}  // namespace alloc_stats

/// std::vector-compatible allocator that maintains the global byte counters.
template <class T>
struct TrackingAllocator {
  using value_type = T;

  TrackingAllocator() noexcept = default;
  template <class U>
  TrackingAllocator(const TrackingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    alloc_stats::record_alloc(n * sizeof(T));
    return static_cast<T*>(::operator new(n * sizeof(T)));
  }

  void deallocate(T* p, std::size_t n) noexcept {
    alloc_stats::record_dealloc(n * sizeof(T));
    ::operator delete(p);
  }

  template <class U>
  bool operator==(const TrackingAllocator<U>&) const noexcept {
    return true;
  }
  template <class U>
  bool operator!=(const TrackingAllocator<U>&) const noexcept {
    return false;
  }
};

}  // namespace ntk

#endif  // NTK_ALLOC_STATS_HPP
