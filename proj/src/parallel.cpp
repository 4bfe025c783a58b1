#include "pgdpo/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace pgdpo {

namespace {

std::atomic<int> g_workers{1};
thread_local bool t_inside = false;

constexpr std::size_t kLeaf = 8;

Vec column_sum_range(CMatRef m, Eigen::Index lo, Eigen::Index hi) {
    if (hi - lo <= static_cast<Eigen::Index>(kLeaf)) {
        Vec s = Vec::Zero(m.rows());
        for (Eigen::Index j = lo; j < hi; ++j) s += m.col(j);
        return s;
    }
    const Eigen::Index mid = lo + (hi - lo) / 2;
    return column_sum_range(m, lo, mid) + column_sum_range(m, mid, hi);
}

}  // namespace

void set_worker_count(int workers) { g_workers.store(std::max(1, workers)); }

int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
    if (workers <= 1 || t_inside) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        t_inside = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        t_inside = false;
    };
    std::vector<std::thread> threads;
    threads.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
    run();
    for (auto& th : threads) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= kLeaf) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t mid = n / 2;
    return pairwise_sum(x, mid) + pairwise_sum(x + mid, n - mid);
}

Vec pairwise_column_sum(CMatRef m) { return column_sum_range(m, 0, m.cols()); }

}  // namespace pgdpo
