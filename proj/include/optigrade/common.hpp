#pragma once
// common.hpp - shared error types, the 2-D grid container, threading and
// number-formatting helpers used across the library.

#include <cassert>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace optigrade {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration, precondition violation, or malformed input data.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Filesystem or codec failure.
class IoError : public Error {
public:
    using Error::Error;
};

/// Text parse failure; carries the 1-based line number.
class ParseError : public InvalidArgument {
public:
    ParseError(int line, const std::string& what)
        : InvalidArgument("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

/// Dense row-major 2-D array.
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), data(size_t(w) * size_t(h), fill) {}

    T& at(int y, int x) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[size_t(y) * width + x];
    }
    T at(int y, int x) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[size_t(y) * width + x];
    }
    T* row(int y) { return data.data() + size_t(y) * width; }
    const T* row(int y) const { return data.data() + size_t(y) * width; }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

// ---------------------------------------------------------------------------
// Threading
// ---------------------------------------------------------------------------

/// Worker count: explicit request wins, then OPTIGRADE_THREADS, then hardware.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OPTIGRADE_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

/// Runs fn(i) for i in [0, n) over a fixed block partition. Each index is
/// computed exactly once with thread-independent arithmetic, so results do
/// not depend on the worker count.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    threads = std::min(threads < 1 ? 1 : threads, n);
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        int begin = t * chunk;
        int end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([begin, end, &fn] {
            for (int i = begin; i < end; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Fixed 6-decimal rendering used by CSV and label serialization.
inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

/// Shortest stable rendering used in condition directory names (g0.05_q0.5).
inline std::string format_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace optigrade
