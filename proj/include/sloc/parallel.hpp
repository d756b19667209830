#ifndef SLOC_PARALLEL_HPP
#define SLOC_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace sloc {

// Deterministic work partitioning.  The caller splits a job into
// `block_count` blocks identified by index; each block seeds its own RNG
// stream and writes results into its own slot.  Threads pull block indices
// from a shared counter, so the assignment of blocks to threads varies with
// the thread count but the per-block computation and the final sequential
// reduction do not.  Results are therefore bit-identical for any `threads`.
inline void parallel_blocks(std::size_t block_count, unsigned threads,
                            const std::function<void(std::size_t)>& body)
{
    if (threads == 0) threads = 1;
    if (threads == 1 || block_count <= 1) {
        for (std::size_t b = 0; b < block_count; ++b) body(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const std::size_t b = next.fetch_add(1);
            if (b >= block_count) return;
            try {
                body(b);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = static_cast<unsigned>(
        std::min<std::size_t>(threads, block_count));
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Thread count used by estimators unless a config overrides it.
inline unsigned default_thread_count()
{
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

} // namespace sloc

#endif
