#pragma once

// Enumeration of integer vectors over sup-norm shells {v : |v|_inf = s}.
//
// Rows: the last coordinate varies fastest. A row is described by the fixed
// prefix and an arithmetic progression first + t*stride, t < count, for the
// last coordinate. Order is lexicographic in (prefix, last).

#include <cstdint>
#include <span>
#include <vector>

#include "badapprox/errors.hpp"

namespace badapprox {

struct ShellRow {
    std::span<const std::int64_t> prefix; // length n - 1
    std::int64_t first;
    std::int64_t count;
    std::int64_t stride;
};

namespace detail {

/// prefix: coordinates 0..n-2. `canonical` keeps only vectors whose first
/// nonzero coordinate is positive.
template <class RowFn>
void shell_rows(int n, std::int64_t s, bool canonical, std::int64_t first_lo, std::int64_t first_hi,
                RowFn&& fn)
{
    if (n < 1) throw ContractViolation("shell enumeration needs n >= 1");
    if (s < 1) throw ContractViolation("shell index must be >= 1");
    const int p = n - 1;
    std::vector<std::int64_t> prefix(p, -s);
    if (p == 0) {
        if (canonical)
            fn(ShellRow{prefix, s, 1, 1});
        else
            fn(ShellRow{prefix, -s, 2, 2 * s});
        return;
    }
    prefix[0] = first_lo;
    for (int i = 1; i < p; ++i) prefix[i] = -s;
    while (true) {
        // classify the prefix
        int first_nonzero = -1;
        bool at_max = false;
        for (int i = 0; i < p; ++i) {
            if (first_nonzero < 0 && prefix[i] != 0) first_nonzero = i;
            if (prefix[i] == s || prefix[i] == -s) at_max = true;
        }
        bool emit = true;
        if (canonical && first_nonzero >= 0 && prefix[first_nonzero] < 0) emit = false;
        if (emit) {
            if (at_max)
                fn(ShellRow{prefix, -s, 2 * s + 1, 1});
            else if (canonical && first_nonzero < 0)
                fn(ShellRow{prefix, s, 1, 1});
            else
                fn(ShellRow{prefix, -s, 2, 2 * s});
        }
        // odometer, last prefix coordinate fastest
        int i = p - 1;
        while (i >= 0) {
            std::int64_t hi = (i == 0) ? first_hi : s;
            if (prefix[i] < hi) {
                ++prefix[i];
                break;
            }
            prefix[i] = (i == 0) ? first_lo : -s;
            --i;
        }
        if (i < 0) break;
    }
}

} // namespace detail

/// Rows of the canonical half of shell s (first nonzero coordinate positive).
template <class RowFn>
void for_each_canonical_row(int n, std::int64_t s, RowFn&& fn)
{
    detail::shell_rows(n, s, true, 0, s, fn);
}

/// Canonical rows restricted to first coordinate in [lo, hi] (for sharding; n >= 2).
template <class RowFn>
void for_each_canonical_row(int n, std::int64_t s, std::int64_t lo, std::int64_t hi, RowFn&& fn)
{
    detail::shell_rows(n, s, true, lo, hi, fn);
}

/// Every vector of the canonical half of shell s, lexicographic.
template <class F>
void for_each_canonical_in_shell(int n, std::int64_t s, F&& f)
{
    std::vector<std::int64_t> v(n);
    for_each_canonical_row(n, s, [&](const ShellRow& row) {
        std::copy(row.prefix.begin(), row.prefix.end(), v.begin());
        for (std::int64_t t = 0; t < row.count; ++t) {
            v[n - 1] = row.first + t * row.stride;
            f(std::span<const std::int64_t>(v));
        }
    });
}

/// Every vector of shell s (both signs), lexicographic.
template <class F>
void for_each_in_shell(int n, std::int64_t s, F&& f)
{
    std::vector<std::int64_t> v(n);
    detail::shell_rows(n, s, false, -s, s, [&](const ShellRow& row) {
        std::copy(row.prefix.begin(), row.prefix.end(), v.begin());
        for (std::int64_t t = 0; t < row.count; ++t) {
            v[n - 1] = row.first + t * row.stride;
            f(std::span<const std::int64_t>(v));
        }
    });
}

/// Number of vectors in the canonical half of shell s: ((2s+1)^n - (2s-1)^n) / 2.
inline long double canonical_shell_size(int n, std::int64_t s)
{
    long double a = 1, b = 1;
    for (int i = 0; i < n; ++i) {
        a *= static_cast<long double>(2 * s + 1);
        b *= static_cast<long double>(2 * s - 1);
    }
    return (a - b) / 2;
}

} // namespace badapprox
