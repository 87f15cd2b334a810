#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace fbsde::parallel {

/// Worker count: FBSDE_THREADS if set and positive, else hardware concurrency.
/// Read on every call so tests and the CLI can change it between runs.
inline std::size_t worker_count() {
    if (const char* env = std::getenv("FBSDE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(chunk_index, begin, end) over [0, n) split into fixed-size chunks.
///
/// Chunk boundaries depend only on n and chunk_size, never on the worker
/// count, so callers that write one result slot per chunk and combine the
/// slots in index order get identical output for any FBSDE_THREADS.
template <typename Fn>
void for_each_chunk(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    chunk_size = std::max<std::size_t>(chunk_size, 1);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t workers = std::min(worker_count(), chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        fn(c, begin, std::min(n, begin + chunk_size));
    };

    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
        return;
    }

    // One slot per chunk; the lowest failing chunk is rethrown so the reported
    // error does not depend on scheduling.
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            // Static round-robin assignment.
            for (std::size_t c = w; c < chunks; c += workers) {
                try {
                    run_chunk(c);
                } catch (...) {
                    errors[c] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Number of chunks for_each_chunk will use.
inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
    chunk_size = std::max<std::size_t>(chunk_size, 1);
    return (n + chunk_size - 1) / chunk_size;
}

}  // namespace fbsde::parallel
