#pragma once

// 64-bit fixed-point images of reals modulo 1, used to prefilter scans.
//
// A real v is stored as f = round(frac(v) * 2^64) mod 2^64 with an error
// bound e (in units of 2^-64) such that |v - (floor(v) + f 2^-64)| <= e.
// Integer combinations wrap exactly modulo 2^64, so sum_i y_i v_i mod 1 is
// known to within sum_i |y_i| e_i units. The filter only discards
// candidates whose distance bound already decides a comparison; every
// surviving candidate is decided in exact arithmetic.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "badapprox/core.hpp"

namespace badapprox {

using Units = long double; // exact for every uint64 value

inline constexpr Units two64 = 18446744073709551616.0L;

struct FixedReal {
    std::uint64_t frac = 0;
    Units err = 0; // units of 2^-64
};

inline FixedReal to_fixed(const CertifiedReal& v)
{
    Rational mid = v.midpoint();
    Rational fr = mid - Rational(floor_of(mid));
    Rational scaled = fr * Rational(Integer(1) << 64);
    Integer f = round_of(scaled);
    Rational rounding = scaled - Rational(f);
    if (rounding < 0) rounding = -rounding;
    if (f == (Integer(1) << 64)) f = 0;
    FixedReal out;
    Integer lo64 = f & Integer("18446744073709551615");
    out.frac = static_cast<std::uint64_t>(mpz_get_ui(lo64.get_mpz_t()));
    Rational half_width = v.width() / 2 * Rational(Integer(1) << 64);
    out.err = static_cast<Units>(half_width.get_d()) * (1 + 1e-12L) + static_cast<Units>(rounding.get_d()) + 1;
    return out;
}

/// Distance from t 2^-64 to the nearest integer, in units.
inline std::uint64_t fixed_dist(std::uint64_t t)
{
    std::uint64_t u = 0 - t;
    return t < u ? t : u;
}

namespace detail {

using u128 = unsigned __int128;

// smallest x in [0, bound) with l <= (a x mod m) <= r, or bound; needs l <= r < m
inline u128 first_in_window(u128 a, u128 m, u128 l, u128 r, u128 bound)
{
    if (bound == 0 || l == 0) return 0;
    a %= m;
    if (a == 0) return bound;
    u128 x = (l + a - 1) / a;
    if (x >= bound) return bound;
    if (a * x <= r) return x;
    // no multiple of a in [l, r]: count wraps instead
    u128 ybound = a * bound / m + 1;
    u128 y = first_in_window(m % a, a, a - r % a, a - l % a, ybound);
    if (y >= ybound) return bound;
    u128 xs = (l + m * y + a - 1) / a;
    return xs < bound ? xs : bound;
}

} // namespace detail

/// Smallest c in [0, count) with fixed_dist(t0 + c step) <= lim, or count.
inline std::uint64_t first_hit(std::uint64_t t0, std::uint64_t step, std::uint64_t count, std::uint64_t lim)
{
    if (count == 0) return 0;
    if (lim >= (std::uint64_t{1} << 62)) {
        for (std::uint64_t c = 0; c < count; ++c, t0 += step)
            if (fixed_dist(t0) <= lim) return c;
        return count;
    }
    const std::uint64_t L = 2 * lim;
    const std::uint64_t b = t0 + lim;
    if (b <= L) return 0;
    const detail::u128 M = detail::u128{1} << 64;
    return static_cast<std::uint64_t>(detail::first_in_window(step, M, M - b, M - b + L, count));
}

inline Rational units_to_rational(Units u)
{
    if (u <= 0) return Rational(0);
    int e = 0;
    long double mant = std::frexp(std::ceil(u), &e); // [1/2, 1), 64-bit mantissa
    auto bits = static_cast<std::uint64_t>(std::ldexp(mant, 64));
    Rational r(Integer(std::to_string(bits)));
    if (e >= 0)
        r *= Rational(Integer(1) << e);
    else
        r /= Rational(Integer(1) << -e);
    return r / Rational(Integer(1) << 128);
}

inline Units rational_to_units_up(const Rational& q)
{
    return static_cast<Units>(Rational(q * Rational(Integer(1) << 64)).get_d()) * (1 + 1e-12L) + 2;
}

/// Fixed-point image of a LinearForm, entry (i, j) as in A.
class FixedForm {
public:
    explicit FixedForm(const LinearForm& A) : n_(A.rows()), m_(A.cols()), cells_(static_cast<std::size_t>(n_) * m_)
    {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < m_; ++j) cells_[idx(i, j)] = to_fixed(A.at(i, j));
        col_err_.assign(m_, 0);
        row_err_.assign(n_, 0);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < m_; ++j) {
                col_err_[j] += cells_[idx(i, j)].err;
                row_err_[i] += cells_[idx(i, j)].err;
            }
    }

    int rows() const { return n_; }
    int cols() const { return m_; }
    const FixedReal& at(int i, int j) const { return cells_[idx(i, j)]; }
    /// sum_i err(i, j): error per unit of |y|_inf in column j of A^T y.
    Units column_error(int j) const { return col_err_[j]; }
    Units max_column_error() const { return *std::max_element(col_err_.begin(), col_err_.end()); }
    /// sum_j err(i, j): error per unit of |q|_inf in row i of A q.
    Units row_error(int i) const { return row_err_[i]; }
    Units max_row_error() const { return *std::max_element(row_err_.begin(), row_err_.end()); }

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }
    int n_;
    int m_;
    std::vector<FixedReal> cells_;
    std::vector<Units> col_err_;
    std::vector<Units> row_err_;
};

} // namespace badapprox
