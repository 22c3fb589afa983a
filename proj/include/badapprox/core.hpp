#pragma once

// Vector norms, the linear form A, nearest-integer distances, and the rank
// test on G = A^T Z^n + Z^m.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "badapprox/certified.hpp"
#include "badapprox/constants.hpp"
#include "badapprox/shells.hpp"

namespace badapprox {

using IntVec = std::vector<std::int64_t>;

inline constexpr unsigned default_bits = 128;
inline constexpr unsigned default_precision_ceiling = 4096;

/// Precision ceiling from BADAPPROX_PRECISION_CEILING, else the default.
inline unsigned precision_ceiling_from_env()
{
    if (const char* v = std::getenv("BADAPPROX_PRECISION_CEILING")) {
        char* end = nullptr;
        unsigned long bits = std::strtoul(v, &end, 10);
        if (end != v && *end == '\0' && bits >= 64) return static_cast<unsigned>(bits);
    }
    return default_precision_ceiling;
}

// ------------------------------------------------------------------ norms

inline std::uint64_t inf_norm(std::span<const std::int64_t> v)
{
    if (v.empty()) throw ContractViolation("inf_norm of an empty vector");
    std::uint64_t m = 0;
    for (auto x : v) m = std::max<std::uint64_t>(m, x < 0 ? 0 - static_cast<std::uint64_t>(x) : x);
    return m;
}

/// Sum of squares, exactly.
inline Integer norm2_squared(std::span<const std::int64_t> v)
{
    Integer s = 0;
    for (auto x : v) {
        Integer z(static_cast<long>(x));
        s += z * z;
    }
    return s;
}

inline Integer l1_norm(std::span<const std::int64_t> v)
{
    Integer s = 0;
    for (auto x : v) s += Integer(static_cast<long>(x < 0 ? -x : x));
    return s;
}

inline CertifiedReal euclid_norm(std::span<const std::int64_t> v, unsigned bits = 256)
{
    if (v.empty()) throw ContractViolation("euclid_norm of an empty vector");
    return sqrt(CertifiedReal(Rational(norm2_squared(v))), bits);
}

// ------------------------------------------------ nearest-integer distances

/// Range of t -> |t - round(t)| over the enclosure; always valid.
inline CertifiedReal dist_to_int_range(const CertifiedReal& x)
{
    Rational dlo = dist_to_int(x.lo());
    Rational dhi = dist_to_int(x.hi());
    bool has_int = ceil_of(x.lo()) <= floor_of(x.hi());
    bool has_half = ceil_of(x.lo() - Rational(1, 2)) <= floor_of(x.hi() - Rational(1, 2));
    Rational lo = has_int ? Rational(0) : std::min(dlo, dhi);
    Rational hi = has_half ? Rational(1, 2) : std::max(dlo, dhi);
    return CertifiedReal::enclose(lo, hi);
}

/// Sup-norm distance to Z^k. Each coordinate's nearest integer must be
/// determined by its enclosure; otherwise TooWide.
inline CertifiedReal nearest_int_dist(std::span<const CertifiedReal> x)
{
    if (x.empty()) throw ContractViolation("nearest_int_dist of an empty vector");
    CertifiedReal best(Rational(0));
    for (const auto& c : x) {
        if (c.width() >= Rational(1, 2)) throw TooWide("coordinate enclosure wider than 1/2");
        // a half-integer strictly inside the enclosure leaves the nearest integer open
        Integer h = ceil_of(c.lo() - Rational(1, 2));
        Rational half = Rational(h) + Rational(1, 2);
        if (c.lo() < half && half < c.hi()) throw TooWide("coordinate enclosure spans a half-integer");
        best = max(best, dist_to_int_range(c));
    }
    return best;
}

/// Like nearest_int_dist but never throws: lower bound is the worst case over the enclosure.
inline CertifiedReal nearest_int_dist_range(std::span<const CertifiedReal> x)
{
    CertifiedReal best(Rational(0));
    for (const auto& c : x) best = max(best, dist_to_int_range(c));
    return best;
}

// ------------------------------------------------------------ linear form

/// The n x m real matrix A, entries held as enclosures at a common precision budget.
/// rational + sum of coef * atom; atoms "sqrt:d" (d squarefree) are
/// linearly independent over Q together with 1, other atoms are opaque.
struct SymbolicEntry {
    Rational rational;
    std::vector<std::pair<std::string, Rational>> atoms;
};

namespace detail {

/// d = f^2 core; `exact` is false when trial division gave up on a large cofactor.
inline std::tuple<Integer, Integer, bool> squarefree_split(Integer d)
{
    Integer f = 1;
    bool exact = true;
    for (unsigned long p = 2; Integer(p) * p <= d; ++p) {
        if (p > 100000) {
            exact = mpz_probab_prime_p(d.get_mpz_t(), 30) > 0;
            break;
        }
        const Integer pp = Integer(p) * p;
        while (mpz_divisible_p(d.get_mpz_t(), pp.get_mpz_t())) {
            d /= pp;
            f *= p;
        }
    }
    return {f, d, exact};
}

} // namespace detail

class LinearForm {
public:
    LinearForm(int n, int m, std::vector<EntrySpec> specs, unsigned bits = default_bits)
        : n_(n), m_(m), specs_(std::move(specs)), bits_(bits)
    {
        if (n < 1 || m < 1) throw ContractViolation("LinearForm needs n, m >= 1");
        if (specs_.size() != static_cast<std::size_t>(n) * m)
            throw ContractViolation("LinearForm entry count does not match n*m");
        entries_.reserve(specs_.size());
        for (const auto& s : specs_) entries_.push_back(s.value(bits_));
        build_symbolic_table();
    }

    /// Convenience for an exact rational matrix given row-major.
    static LinearForm rational(int n, int m, const std::vector<Rational>& values)
    {
        std::vector<EntrySpec> specs(values.begin(), values.end());
        return LinearForm(n, m, std::move(specs));
    }

    int rows() const { return n_; }
    int cols() const { return m_; }
    unsigned bits() const { return bits_; }
    const CertifiedReal& at(int i, int j) const { return entries_[static_cast<std::size_t>(i) * m_ + j]; }
    const EntrySpec& spec(int i, int j) const { return specs_[static_cast<std::size_t>(i) * m_ + j]; }
    const std::vector<EntrySpec>& specs() const { return specs_; }

    bool all_rational() const
    {
        return std::all_of(specs_.begin(), specs_.end(), [](const EntrySpec& s) { return s.is_rational(); });
    }

    /// Same matrix with every constant re-enclosed at `bits` (never coarser).
    LinearForm refined(unsigned bits) const
    {
        return LinearForm(n_, m_, specs_, std::max(bits, bits_));
    }

    /// Entries as rational part plus rational multiples of atoms, row-major.
    const std::vector<SymbolicEntry>& symbolic() const { return sym_; }

private:
    void build_symbolic_table()
    {
        sym_.clear();
        for (const auto& s : specs_) {
            SymbolicEntry e;
            if (s.is_rational()) {
                e.rational = s.rational();
            } else {
                std::optional<QuadraticSurd> q;
                try {
                    q = as_quadratic(s.constant().name);
                } catch (const ParseError&) {
                }
                if (q) {
                    auto [f, core, exact] = detail::squarefree_split(q->d);
                    e.rational = ratio(q->a, q->c);
                    Rational coef = ratio(q->b * f, q->c);
                    e.atoms.emplace_back((exact ? "sqrt:" : "radical:") + core.get_str(), coef);
                } else {
                    e.atoms.emplace_back("const:" + s.constant().name, Rational(1));
                }
            }
            sym_.push_back(std::move(e));
        }
    }

    int n_;
    int m_;
    std::vector<EntrySpec> specs_;
    unsigned bits_;
    std::vector<CertifiedReal> entries_;
    std::vector<SymbolicEntry> sym_;
};

/// Runs f(form) doubling the precision on Undecided, up to `ceiling` bits.
template <class F>
auto with_refinement(const LinearForm& A, unsigned ceiling, F&& f) -> decltype(f(A))
{
    LinearForm cur = A;
    while (true) {
        try {
            return f(cur);
        } catch (const Undecided&) {
            if (cur.all_rational() || cur.bits() >= ceiling) throw;
            cur = cur.refined(std::min(ceiling, cur.bits() * 2));
        }
    }
}

/// Aq, q of length m.
inline std::vector<CertifiedReal> apply(const LinearForm& A, std::span<const std::int64_t> q)
{
    if (q.size() != static_cast<std::size_t>(A.cols())) throw ContractViolation("apply: dimension mismatch");
    std::vector<CertifiedReal> out(A.rows(), CertifiedReal(Rational(0)));
    for (int i = 0; i < A.rows(); ++i)
        for (int j = 0; j < A.cols(); ++j)
            if (q[j] != 0) out[i] += CertifiedReal::scale(A.at(i, j), Rational(static_cast<long>(q[j])));
    return out;
}

/// A^T y, y of length n.
inline std::vector<CertifiedReal> apply_transpose(const LinearForm& A, std::span<const std::int64_t> y)
{
    if (y.size() != static_cast<std::size_t>(A.rows()))
        throw ContractViolation("apply_transpose: dimension mismatch");
    std::vector<CertifiedReal> out(A.cols(), CertifiedReal(Rational(0)));
    for (int j = 0; j < A.cols(); ++j)
        for (int i = 0; i < A.rows(); ++i)
            if (y[i] != 0) out[j] += CertifiedReal::scale(A.at(i, j), Rational(static_cast<long>(y[i])));
    return out;
}

/// ||A^T y||, undecided enclosures surface as TooWide.
inline CertifiedReal transpose_residue(const LinearForm& A, std::span<const std::int64_t> y)
{
    auto v = apply_transpose(A, y);
    return nearest_int_dist(v);
}

// ------------------------------------------------------------ rank test

struct RankStatus {
    enum class Method { exact, searched_up_to_bound };
    bool deficient = false;
    std::optional<IntVec> witness;
    Method method = Method::exact;
    std::int64_t bound = 0;
};

namespace detail {

inline Certainty is_integer_vector(const std::vector<CertifiedReal>& v)
{
    bool all = true;
    for (const auto& c : v) {
        if (c.exact()) {
            if (c.lo().get_den() != 1) return Certainty::certified_false;
            continue;
        }
        if (ceil_of(c.lo()) > floor_of(c.hi())) return Certainty::certified_false;
        all = false;
    }
    return all ? Certainty::certified_true : Certainty::undecided;
}

/// Column j of A^T y integral, decided symbolically: true when every atom
/// cancels and the rational part is an integer, false when what is left is a
/// nonzero combination of independent square roots, else unknown.
inline std::optional<bool> column_integral_symbolic(const LinearForm& A, std::span<const std::int64_t> y, int j)
{
    const auto& t = A.symbolic();
    Rational u = 0;
    std::vector<std::pair<std::string, Rational>> acc;
    for (int i = 0; i < A.rows(); ++i) {
        if (y[i] == 0) continue;
        const auto& e = t[static_cast<std::size_t>(i) * A.cols() + j];
        u += e.rational * static_cast<long>(y[i]);
        for (const auto& [name, coef] : e.atoms) {
            auto it = std::find_if(acc.begin(), acc.end(), [&](const auto& p) { return p.first == name; });
            if (it == acc.end()) it = acc.insert(acc.end(), {name, Rational(0)});
            it->second += coef * static_cast<long>(y[i]);
        }
    }
    bool left = false, opaque = false;
    for (const auto& [name, coef] : acc)
        if (coef != 0) {
            left = true;
            opaque = opaque || name.rfind("sqrt:", 0) != 0;
        }
    if (!left) return u.get_den() == 1;
    if (!opaque) return false;
    return std::nullopt;
}

/// Certified integrality of each column of A^T y.
inline std::vector<Certainty> column_integral(const LinearForm& A, std::span<const std::int64_t> y)
{
    auto img = apply_transpose(A, y);
    std::vector<Certainty> out(A.cols());
    for (int j = 0; j < A.cols(); ++j) {
        if (auto s = column_integral_symbolic(A, y, j))
            out[j] = *s ? Certainty::certified_true : Certainty::certified_false;
        else
            out[j] = is_integer_vector({img[j]});
    }
    return out;
}

/// Certified integrality of A^T y: symbolic when possible, else from enclosures.
inline Certainty transpose_integral(const LinearForm& A, std::span<const std::int64_t> y)
{
    bool all = true;
    for (auto c : column_integral(A, y)) {
        if (c == Certainty::certified_false) return c;
        if (c == Certainty::undecided) all = false;
    }
    return all ? Certainty::certified_true : Certainty::undecided;
}

} // namespace detail

/// Decides whether G = A^T Z^n + Z^m has rank < n + m.
///
/// Rational A: always deficient; the witness is the first y (shell order) with
/// A^T y integral, searched up to min(bound, smallest row denominator), falling
/// back to d_i e_i. Otherwise: bounded search for a certified integral A^T y.
inline RankStatus rank_deficient(const LinearForm& A, std::int64_t bound,
                                 unsigned ceiling = default_precision_ceiling)
{
    if (bound < 1) throw ContractViolation("rank_deficient: bound must be >= 1");
    const int n = A.rows();
    const int m = A.cols();
    RankStatus st;
    st.bound = bound;

    if (A.all_rational()) {
        st.method = RankStatus::Method::exact;
        st.deficient = true;
        Integer common = 1;
        std::vector<Integer> row_den(n, Integer(1));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                const Integer& d = A.spec(i, j).rational().get_den();
                mpz_lcm(row_den[i].get_mpz_t(), row_den[i].get_mpz_t(), d.get_mpz_t());
                mpz_lcm(common.get_mpz_t(), common.get_mpz_t(), d.get_mpz_t());
            }
        int best_row = 0;
        for (int i = 1; i < n; ++i)
            if (row_den[i] < row_den[best_row]) best_row = i;
        // integer residues C_ij = A_ij * common mod common
        std::vector<Integer> C(static_cast<std::size_t>(n) * m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                Rational v = A.spec(i, j).rational() * common;
                C[static_cast<std::size_t>(i) * m + j] = v.get_num();
            }
        std::int64_t limit = bound;
        if (row_den[best_row].fits_slong_p() && row_den[best_row].get_si() - 1 < limit)
            limit = row_den[best_row].get_si() - 1;
        std::uint64_t budget = 4'000'000;
        std::optional<IntVec> found;
        for (std::int64_t s = 1; s <= limit && !found && budget > 0; ++s) {
            for_each_canonical_in_shell(n, s, [&](std::span<const std::int64_t> y) {
                if (found || budget == 0) return;
                --budget;
                for (int j = 0; j < m; ++j) {
                    Integer acc = 0;
                    for (int i = 0; i < n; ++i) acc += C[static_cast<std::size_t>(i) * m + j] * static_cast<long>(y[i]);
                    if (!mpz_divisible_p(acc.get_mpz_t(), common.get_mpz_t())) return;
                }
                found = IntVec(y.begin(), y.end());
            });
        }
        if (!found) {
            IntVec y(n, 0);
            if (!row_den[best_row].fits_slong_p()) throw Error("rank witness exceeds 64-bit range");
            y[best_row] = row_den[best_row].get_si();
            found = std::move(y);
        }
        st.witness = std::move(found);
        return st;
    }

    st.method = RankStatus::Method::searched_up_to_bound;
    LinearForm form = A;
    for (std::int64_t s = 1; s <= bound && !st.witness; ++s) {
        for_each_canonical_in_shell(n, s, [&](std::span<const std::int64_t> y) {
            if (st.witness) return;
            bool hit = with_refinement(form, ceiling, [&](const LinearForm& f) {
                form = f;
                return decide(detail::transpose_integral(f, y), "rank witness test");
            });
            if (hit) st.witness = IntVec(y.begin(), y.end());
        });
    }
    st.deficient = st.witness.has_value();
    return st;
}

} // namespace badapprox
