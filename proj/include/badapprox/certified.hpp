#pragma once

// Interval-valued reals with exact rational endpoints.
//
// Every operation returns an enclosure of the true value. Endpoints are GMP
// rationals; irrational primitives (sqrt, log, n-th roots, e, pi) are enclosed
// with MPFR using directed rounding and converted to dyadic rationals exactly.

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>

#include "badapprox/errors.hpp"

namespace badapprox {

using Rational = mpq_class;
using Integer = mpz_class;

// ---------------------------------------------------------------- rationals

/// num / den in lowest terms; mpq_class(num, den) does not reduce.
inline Rational ratio(const Integer& num, const Integer& den)
{
    if (den == 0) throw ContractViolation("zero denominator");
    Rational r(num, den);
    r.canonicalize();
    return r;
}

inline Integer floor_of(const Rational& q)
{
    Integer r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

inline Integer ceil_of(const Rational& q)
{
    Integer r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

/// Integer nearest to q; halves round down.
inline Integer round_of(const Rational& q)
{
    return ceil_of(q - Rational(1, 2));
}

/// Distance from q to the nearest integer, exactly.
inline Rational dist_to_int(const Rational& q)
{
    Rational f = q - Rational(floor_of(q));
    Rational g = Rational(1) - f;
    return f < g ? f : g;
}

inline Rational pow_int(const Rational& base, unsigned long e)
{
    Rational r;
    mpz_pow_ui(r.get_num_mpz_t(), base.get_num_mpz_t(), e);
    mpz_pow_ui(r.get_den_mpz_t(), base.get_den_mpz_t(), e);
    r.canonicalize();
    return r;
}

inline Integer pow_int(const Integer& base, unsigned long e)
{
    Integer r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

inline std::string to_string(const Rational& q)
{
    return q.get_str();
}

/// Parses "p/q", "p" or an exact decimal "d.ddd" (optionally signed).
inline Rational parse_rational(std::string_view text)
{
    std::string s(text);
    if (s.empty()) throw ParseError("empty rational");
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        if (s.find('/') != std::string::npos) throw ParseError("bad rational: " + s);
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        auto frac_len = s.size() - dot - 1;
        Rational r;
        if (mpz_set_str(r.get_num_mpz_t(), digits.c_str(), 10) != 0)
            throw ParseError("bad decimal: " + s);
        Integer den = pow_int(Integer(10), frac_len);
        mpz_set(r.get_den_mpz_t(), den.get_mpz_t());
        r.canonicalize();
        return r;
    }
    Rational r;
    if (mpq_set_str(r.get_mpq_t(), s.c_str(), 10) != 0) throw ParseError("bad rational: " + s);
    if (r.get_den() == 0) throw ParseError("zero denominator: " + s);
    r.canonicalize();
    return r;
}

// ---------------------------------------------------------------- MPFR glue

namespace detail {

class Mpfr {
public:
    explicit Mpfr(mpfr_prec_t bits) { mpfr_init2(v_, std::max<mpfr_prec_t>(bits, MPFR_PREC_MIN)); }
    ~Mpfr() { mpfr_clear(v_); }
    Mpfr(const Mpfr&) = delete;
    Mpfr& operator=(const Mpfr&) = delete;
    mpfr_ptr get() { return v_; }
    mpfr_srcptr get() const { return v_; }

private:
    mpfr_t v_;
};

inline Rational to_rational(mpfr_srcptr x)
{
    if (!mpfr_number_p(x)) throw Error("non-finite MPFR value");
    if (mpfr_zero_p(x)) return Rational(0);
    Integer mant;
    mpfr_exp_t e = mpfr_get_z_2exp(mant.get_mpz_t(), x);
    Rational r(mant);
    if (e >= 0)
        mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    else
        mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(-e));
    return r;
}

} // namespace detail

// ---------------------------------------------------------------- intervals

enum class Certainty { certified_true, certified_false, undecided };

inline bool is_true(Certainty c) { return c == Certainty::certified_true; }

/// Throws Undecided unless c is decided; returns the decided value.
inline bool decide(Certainty c, const char* what)
{
    if (c == Certainty::undecided) throw Undecided(std::string("undecided: ") + what);
    return c == Certainty::certified_true;
}

class CertifiedReal {
public:
    CertifiedReal() = default;
    CertifiedReal(const Rational& v) : lo_(v), hi_(v) {} // NOLINT: implicit exact embedding
    CertifiedReal(long v) : lo_(v), hi_(v) {}            // NOLINT

    static CertifiedReal enclose(Rational lo, Rational hi)
    {
        if (hi < lo) throw ContractViolation("enclosure with lo > hi");
        CertifiedReal r;
        r.lo_ = std::move(lo);
        r.hi_ = std::move(hi);
        return r;
    }

    const Rational& lo() const { return lo_; }
    const Rational& hi() const { return hi_; }
    bool exact() const { return lo_ == hi_; }
    Rational width() const { return hi_ - lo_; }
    Rational midpoint() const { return (lo_ + hi_) / 2; }
    double to_double() const { return midpoint().get_d(); }
    bool contains(const Rational& v) const { return lo_ <= v && v <= hi_; }

    CertifiedReal operator-() const { return enclose(-hi_, -lo_); }

    friend CertifiedReal operator+(const CertifiedReal& a, const CertifiedReal& b)
    {
        if (a.exact() && b.exact()) return CertifiedReal(Rational(a.lo_ + b.lo_));
        return enclose(a.lo_ + b.lo_, a.hi_ + b.hi_);
    }
    friend CertifiedReal operator-(const CertifiedReal& a, const CertifiedReal& b)
    {
        if (a.exact() && b.exact()) return CertifiedReal(Rational(a.lo_ - b.lo_));
        return enclose(a.lo_ - b.hi_, a.hi_ - b.lo_);
    }
    friend CertifiedReal operator*(const CertifiedReal& a, const CertifiedReal& b)
    {
        if (a.exact() && b.exact()) return CertifiedReal(Rational(a.lo_ * b.lo_));
        if (a.exact()) return scale(b, a.lo_);
        if (b.exact()) return scale(a, b.lo_);
        Rational p1 = a.lo_ * b.lo_, p2 = a.lo_ * b.hi_, p3 = a.hi_ * b.lo_, p4 = a.hi_ * b.hi_;
        return enclose(std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}));
    }
    friend CertifiedReal operator/(const CertifiedReal& a, const CertifiedReal& b)
    {
        if (b.lo_ <= 0 && b.hi_ >= 0) throw Undecided("division by an enclosure containing 0");
        return a * enclose(1 / b.hi_, 1 / b.lo_);
    }
    CertifiedReal& operator+=(const CertifiedReal& b) { return *this = *this + b; }
    CertifiedReal& operator-=(const CertifiedReal& b) { return *this = *this - b; }
    CertifiedReal& operator*=(const CertifiedReal& b) { return *this = *this * b; }

    static CertifiedReal scale(const CertifiedReal& a, const Rational& s)
    {
        if (s == 0) return CertifiedReal(Rational(0));
        if (s > 0) return enclose(a.lo_ * s, a.hi_ * s);
        return enclose(a.hi_ * s, a.lo_ * s);
    }

    CertifiedReal abs() const
    {
        if (lo_ >= 0) return *this;
        if (hi_ <= 0) return -*this;
        return enclose(Rational(0), std::max(Rational(-lo_), hi_));
    }

    /// Convex hull of two enclosures.
    static CertifiedReal hull(const CertifiedReal& a, const CertifiedReal& b)
    {
        return enclose(std::min(a.lo_, b.lo_), std::max(a.hi_, b.hi_));
    }

    friend bool operator==(const CertifiedReal& a, const CertifiedReal& b)
    {
        return a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    Rational lo_{0};
    Rational hi_{0};
};

/// a < b: true iff a.hi < b.lo, false iff b.hi <= a.lo.
inline Certainty less(const CertifiedReal& a, const CertifiedReal& b)
{
    if (a.hi() < b.lo()) return Certainty::certified_true;
    if (b.hi() <= a.lo()) return Certainty::certified_false;
    return Certainty::undecided;
}

/// a <= b: true iff a.hi <= b.lo, false iff b.hi < a.lo.
inline Certainty less_equal(const CertifiedReal& a, const CertifiedReal& b)
{
    if (a.hi() <= b.lo()) return Certainty::certified_true;
    if (b.hi() < a.lo()) return Certainty::certified_false;
    return Certainty::undecided;
}

inline CertifiedReal min(const CertifiedReal& a, const CertifiedReal& b)
{
    return CertifiedReal::enclose(std::min(a.lo(), b.lo()), std::min(a.hi(), b.hi()));
}

inline CertifiedReal max(const CertifiedReal& a, const CertifiedReal& b)
{
    return CertifiedReal::enclose(std::max(a.lo(), b.lo()), std::max(a.hi(), b.hi()));
}

inline std::string to_string(const CertifiedReal& x)
{
    if (x.exact()) return to_string(x.lo());
    return "[" + to_string(x.lo()) + ", " + to_string(x.hi()) + "]";
}

// ------------------------------------------------- monotone primitive maps

namespace detail {

inline bool perfect_square(const Rational& q, Rational& root)
{
    if (q < 0) return false;
    if (!mpz_perfect_square_p(q.get_num_mpz_t()) || !mpz_perfect_square_p(q.get_den_mpz_t()))
        return false;
    mpz_sqrt(root.get_num_mpz_t(), q.get_num_mpz_t());
    mpz_sqrt(root.get_den_mpz_t(), q.get_den_mpz_t());
    root.canonicalize();
    return true;
}

template <class Op>
Rational rounded(const Rational& x, unsigned bits, mpfr_rnd_t rnd, Op&& op)
{
    Mpfr in(static_cast<mpfr_prec_t>(bits) + 64);
    Mpfr out(static_cast<mpfr_prec_t>(bits));
    mpfr_set_q(in.get(), x.get_mpq_t(), rnd);
    op(out.get(), in.get(), rnd);
    return to_rational(out.get());
}

} // namespace detail

/// Enclosure of sqrt(x); exact when both endpoints are rational squares.
inline CertifiedReal sqrt(const CertifiedReal& x, unsigned bits = 256)
{
    if (x.lo() < 0) throw ContractViolation("sqrt of a possibly negative enclosure");
    auto sq = [](mpfr_ptr o, mpfr_srcptr i, mpfr_rnd_t r) { mpfr_sqrt(o, i, r); };
    Rational lo_root, hi_root;
    if (detail::perfect_square(x.lo(), lo_root) && x.exact()) return CertifiedReal(lo_root);
    if (!detail::perfect_square(x.lo(), lo_root)) lo_root = detail::rounded(x.lo(), bits, MPFR_RNDD, sq);
    if (!detail::perfect_square(x.hi(), hi_root)) hi_root = detail::rounded(x.hi(), bits, MPFR_RNDU, sq);
    return CertifiedReal::enclose(lo_root, hi_root);
}

/// Enclosure of the natural logarithm; exact (0) only for x = 1.
inline CertifiedReal log(const CertifiedReal& x, unsigned bits = 256)
{
    if (x.lo() <= 0) throw ContractViolation("log of a non-positive enclosure");
    if (x.exact() && x.lo() == 1) return CertifiedReal(Rational(0));
    auto lg = [](mpfr_ptr o, mpfr_srcptr i, mpfr_rnd_t r) { mpfr_log(o, i, r); };
    return CertifiedReal::enclose(detail::rounded(x.lo(), bits, MPFR_RNDD, lg),
                                  detail::rounded(x.hi(), bits, MPFR_RNDU, lg));
}

/// x^(num/den) for x >= 0, den >= 1; exact when the root is rational.
inline CertifiedReal pow_rational(const CertifiedReal& x, unsigned long num, unsigned long den,
                                  unsigned bits = 256)
{
    if (den == 0) throw ContractViolation("zero exponent denominator");
    if (x.lo() < 0) throw ContractViolation("fractional power of a possibly negative enclosure");
    Rational lo = pow_int(x.lo(), num);
    Rational hi = pow_int(x.hi(), num);
    if (den == 1) return CertifiedReal::enclose(lo, hi);
    auto exact_root = [den](const Rational& q, Rational& out) {
        Integer a, b;
        if (!mpz_root(a.get_mpz_t(), q.get_num_mpz_t(), den)) return false;
        if (!mpz_root(b.get_mpz_t(), q.get_den_mpz_t(), den)) return false;
        out = Rational(a, b);
        out.canonicalize();
        return true;
    };
    auto root = [den](mpfr_ptr o, mpfr_srcptr i, mpfr_rnd_t r) { mpfr_rootn_ui(o, i, den, r); };
    Rational rlo, rhi;
    if (!exact_root(lo, rlo)) rlo = detail::rounded(lo, bits, MPFR_RNDD, root);
    if (!exact_root(hi, rhi)) rhi = detail::rounded(hi, bits, MPFR_RNDU, root);
    return CertifiedReal::enclose(rlo, rhi);
}

/// Enclosure of e at the given binary precision.
inline CertifiedReal const_e(unsigned bits)
{
    detail::Mpfr one(64), lo(bits), hi(bits);
    mpfr_set_ui(one.get(), 1, MPFR_RNDN);
    mpfr_exp(lo.get(), one.get(), MPFR_RNDD);
    mpfr_exp(hi.get(), one.get(), MPFR_RNDU);
    return CertifiedReal::enclose(detail::to_rational(lo.get()), detail::to_rational(hi.get()));
}

/// Enclosure of pi at the given binary precision.
inline CertifiedReal const_pi(unsigned bits)
{
    detail::Mpfr lo(bits), hi(bits);
    mpfr_const_pi(lo.get(), MPFR_RNDD);
    mpfr_const_pi(hi.get(), MPFR_RNDU);
    return CertifiedReal::enclose(detail::to_rational(lo.get()), detail::to_rational(hi.get()));
}

} // namespace badapprox
