#include "stegattn/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

// BLAS threading would break the fixed per-item reduction order; keep each
// gemm call single-threaded and parallelize across batch items instead.
extern "C" void openblas_set_num_threads(int);

namespace stegattn {

namespace {
int resolve_threads() {
    openblas_set_num_threads(1);
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("STEGATTN_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
}
}  // namespace

int worker_threads() {
    static const int t = resolve_threads();
    return t;
}

void parallel_for(int count, const std::function<void(int)>& fn) {
    int threads = std::min(worker_threads(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace stegattn
