#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace medfuse {

// Index-parallel fork/join helper. Tasks here are coarse (whole-record
// forward passes, Shapley subset evaluations), so threads are spawned per
// call and joined before returning. Callers write results into per-index
// slots and reduce afterwards in index order, which keeps every numeric
// result independent of scheduling.
class ThreadPool {
public:
    explicit ThreadPool(std::size_t n_threads) : n_threads_(n_threads < 1 ? 1 : n_threads) {}

    std::size_t thread_count() const { return n_threads_; }

    // Runs fn(i) for i in [0, n). Rethrows the first captured exception.
    void run(std::size_t n, const std::function<void(std::size_t)>& fn) {
        if (n == 0) return;
        const std::size_t workers = std::min(n_threads_, n);
        if (workers == 1) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr error;
        auto body = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!error) error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(workers - 1);
        for (std::size_t t = 0; t + 1 < workers; ++t) threads.emplace_back(body);
        body();
        for (auto& t : threads) t.join();
        if (error) std::rethrow_exception(error);
    }

private:
    std::size_t n_threads_;
};

}  // namespace medfuse
