#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cwp {

struct SingularMetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Max-norm tolerance for finite-difference identity checks: truncation
// dominates, so the bound scales with h^2 and the field magnitude.
inline double fd_tolerance(double h, double field_scale = 1.0) {
    return std::max(1e-6, 10.0 * h * h * std::abs(field_scale));
}

// Pairwise summation; result independent of chunking order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

// Splits [0,n) across CWP_THREADS workers (default 1). Each index is
// processed exactly once, so disjoint per-node writes stay deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    static const int nthreads = [] {
        if (const char* env = std::getenv("CWP_THREADS")) {
            int t = std::atoi(env);
            if (t > 1) return t;
        }
        return 1;
    }();
    if (nthreads <= 1 || n < 1024) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace cwp
