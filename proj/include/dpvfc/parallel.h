// Copyright 2026 The dpvfc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPVFC_PARALLEL_H_
#define DPVFC_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dpvfc {

// Upper bound on worker threads; 0 means hardware_concurrency.
inline std::atomic<size_t>& MaxThreads() {
  static std::atomic<size_t> value{0};
  return value;
}

namespace internal {
inline thread_local bool in_parallel_region = false;
}  // namespace internal

// Runs fn(begin, end) over contiguous chunks of [0, n) on up to
// MaxThreads() threads. Chunks are disjoint, so callers writing to
// disjoint output slots need no synchronization. The first exception thrown
// by any chunk is rethrown on the calling thread.
template <typename Fn>
void ParallelFor(size_t n, Fn&& fn, size_t min_chunk = 1) {
  // Nested calls run inline to avoid oversubscription.
  size_t hw = std::max<size_t>(1, std::thread::hardware_concurrency());
  if (MaxThreads().load() > 0) hw = std::min(hw, MaxThreads().load());
  if (internal::in_parallel_region) hw = 1;
  const size_t workers =
      std::min(hw, std::max<size_t>(1, n / std::max<size_t>(1, min_chunk)));
  if (workers <= 1 || n < 2) {
    fn(size_t{0}, n);
    return;
  }
  const size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
      const size_t begin = w * chunk;
      const size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back([&, begin, end] {
        internal::in_parallel_region = true;
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace dpvfc

#endif  // DPVFC_PARALLEL_H_
