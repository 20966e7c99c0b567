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

#ifndef NTK_PARALLEL_HPP
#define NTK_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ntk {

// Worker count for the column-partitioned kernels. Defaults to 1 (fully
// sequential); NTK_THREADS or set_thread_count() raises it. Every parallel
// loop in the library partitions output elements disjointly, so results are
// bitwise identical for any thread count.
inline std::atomic<unsigned>& thread_count_ref() {
  static std::atomic<unsigned> count = [] {
    if (const char* env = std::getenv("NTK_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1u;
  }();
  return count;
}

inline unsigned thread_count() { return thread_count_ref().load(); }
inline void set_thread_count(unsigned n) { thread_count_ref().store(n < 1 ? 1 : n); }

/// Runs fn(begin, end) over disjoint chunks of [0, n). fn must write only to
/// locations owned by its chunk.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = thread_count();
  if (workers <= 1 || n < 2) {
    fn(std::size_t{0}, n);
    return;
  }
  const unsigned used = static_cast<unsigned>(n < workers ? n : workers);
  const std::size_t chunk = (n + used - 1) / used;
  std::vector<std::thread> threads;
  threads.reserve(used);
  for (unsigned t = 0; t < used; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = b + chunk < n ? b + chunk : n;
    if (b >= e) break;
    threads.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace ntk

#endif  // NTK_PARALLEL_HPP
