#include "pmsdr/threads.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pmsdr {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PMSDR_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<int>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t workers = static_cast<std::size_t>(std::max(threads, 1));
    workers = std::min(workers, n);
    if (workers == 1) {
        fn(0, n);
        return;
    }
    // Fixed block partition: block b covers [b*chunk + min(b, rem), ...).
    std::size_t chunk = n / workers;
    std::size_t rem = n % workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t begin = 0;
    for (std::size_t b = 0; b < workers; ++b) {
        std::size_t len = chunk + (b < rem ? 1 : 0);
        std::size_t end = begin + len;
        pool.emplace_back([&fn, &errors, b, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace pmsdr
