/*
 * Copyright 2026 The treematch authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
 * with the License. A copy of the License is located at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * or in the "license" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
 * OR CONDITIONS OF ANY KIND, either express or implied. See the License for the specific language governing permissions
 * and limitations under the License.
 */

#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace treematch {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(thread_index, i) for i in [begin, end). Work is handed out in
// contiguous chunks from a shared counter; every unit must write only its own
// outputs so results do not depend on which worker ran it.
template <typename Fn>
void parallel_for(uint64_t begin, uint64_t end, int threads, Fn&& fn, uint64_t chunk = 0) {
    uint64_t n = end > begin ? end - begin : 0;
    if (n == 0) return;
    int workers = resolve_threads(threads);
    if (workers <= 1 || n == 1) {
        for (uint64_t i = begin; i < end; ++i) fn(0, i);
        return;
    }
    if (chunk == 0) {
        chunk = n / (static_cast<uint64_t>(workers) * 8);
        if (chunk == 0) chunk = 1;
    }
    std::atomic<uint64_t> next{begin};
    std::mutex err_mu;
    std::exception_ptr first_error;
    auto body = [&](int tid) {
        try {
            for (;;) {
                uint64_t lo = next.fetch_add(chunk);
                if (lo >= end) break;
                uint64_t hi = lo + chunk < end ? lo + chunk : end;
                for (uint64_t i = lo; i < hi; ++i) fn(tid, i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(err_mu);
            if (!first_error) first_error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body, t);
    body(0);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace treematch
