#pragma once

// Sequences of best approximations y_1, y_2, ... to A:
//   |y_1| = 1 < |y_2| < ...,  ||A^T y_1|| > ||A^T y_2|| > ...,
//   and ||A^T y|| >= ||A^T y_i|| for every nonzero y with |y| < |y_{i+1}|.
// Built by scanning sup-norm shells; also the continued-fraction oracle for
// n = m = 1 and the Dirichlet bound check.

#include <algorithm>
#include <array>
#include <thread>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "badapprox/core.hpp"
#include "badapprox/fixed_point.hpp"
#include "badapprox/shells.hpp"

namespace badapprox {

struct BestApproxItem {
    IntVec y;
    CertifiedReal r; // ||A^T y||
};

struct TieEvent {
    std::int64_t shell = 0;
    IntVec kept;
    IntVec dropped;
};

struct BestApproxSeq {
    LinearForm form;
    std::vector<BestApproxItem> items;
    std::int64_t shell_bound = 0;
    std::vector<TieEvent> ties;

    std::size_t size() const { return items.size(); }
    const IntVec& y(std::size_t i) const { return items[i].y; }
    std::uint64_t norm(std::size_t i) const { return inf_norm(items[i].y); }
};

class RankDeficientError : public Error {
public:
    RankDeficientError(IntVec w)
        : Error("A^T y is integral for a nonzero y: G is rank deficient"), witness(std::move(w))
    {
    }
    IntVec witness;
};

class UndecidedPairError : public Undecided {
public:
    UndecidedPairError(IntVec a, IntVec b)
        : Undecided("residues of two candidates cannot be separated at the precision ceiling"),
          first(std::move(a)), second(std::move(b))
    {
    }
    IntVec first;
    IntVec second;
};

struct BestApproxOptions {
    unsigned ceiling = default_precision_ceiling;
    unsigned threads = 0; // 0: hardware concurrency
};

namespace detail {

inline constexpr int max_fixed_dim = 16;

struct Candidate {
    IntVec y;
    std::uint64_t r = 0; // fixed-point residue
};

/// True when ||A^T a|| = ||A^T b|| is certified without separating enclosures:
/// some column j has (A^T a)_j = +-(A^T b)_j mod 1 exactly and attains the max on both sides.
inline bool residues_identical(const LinearForm& A, const IntVec& a, const IntVec& b)
{
    IntVec diff(a.size()), sum(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
        sum[i] = a[i] + b[i];
    }
    auto cd = column_integral(A, diff);
    auto cs = column_integral(A, sum);
    const int m = A.cols();
    std::vector<bool> matched(m);
    bool all = true;
    for (int j = 0; j < m; ++j) {
        matched[j] = cd[j] == Certainty::certified_true || cs[j] == Certainty::certified_true;
        all = all && matched[j];
    }
    if (all) return true;
    auto va = apply_transpose(A, a);
    auto vb = apply_transpose(A, b);
    std::vector<CertifiedReal> da, db;
    for (int j = 0; j < m; ++j) {
        da.push_back(dist_to_int_range(va[j]));
        db.push_back(dist_to_int_range(vb[j]));
    }
    for (int j = 0; j < m; ++j) {
        if (!matched[j]) continue;
        bool top = true;
        for (int k = 0; k < m && top; ++k)
            top = k == j || less_equal(da[k], da[j]) == Certainty::certified_true &&
                  less_equal(db[k], db[j]) == Certainty::certified_true;
        if (top) return true;
    }
    return false;
}

class ShellScanner {
public:
    ShellScanner(const FixedForm& ff, unsigned threads) : ff_(ff), threads_(threads) {}

    /// Candidates of canonical shell s whose residue may be <= min(U, shell minimum).
    std::vector<Candidate> scan(std::int64_t s, Units U, Units E) const
    {
        const int n = ff_.rows();
        if (n == 2) return scan_plane(s, U, E);
        unsigned workers = threads_;
        if (n < 2 || canonical_shell_size(n, s) < (1 << 18)) workers = 1;
        workers = static_cast<unsigned>(std::min<std::int64_t>(workers, s + 1));
        std::vector<std::vector<Candidate>> parts(workers);
        std::vector<Units> bounds(workers, U);
        if (workers == 1) {
            scan_range(s, 0, s, bounds[0], E, parts[0]);
        } else {
            std::vector<std::thread> pool;
            std::int64_t total = s + 1;
            for (unsigned w = 0; w < workers; ++w) {
                std::int64_t lo = total * w / workers;
                std::int64_t hi = total * (w + 1) / workers - 1;
                pool.emplace_back([&, w, lo, hi] { scan_range(s, lo, hi, bounds[w], E, parts[w]); });
            }
            for (auto& t : pool) t.join();
        }
        Units best = *std::min_element(bounds.begin(), bounds.end());
        std::vector<Candidate> out;
        for (auto& p : parts)
            for (auto& c : p)
                if (static_cast<Units>(c.r) - E <= best) out.push_back(std::move(c));
        return out;
    }

private:
    // n = 2: the canonical shell is three progressions, (s, *), (*, s) and (*, -s)
    std::vector<Candidate> scan_plane(std::int64_t s, Units U, Units E) const
    {
        const int m = ff_.cols();
        std::vector<Candidate> out;
        std::uint64_t lim = limit_of(U, E);
        std::array<std::uint64_t, max_fixed_dim> t{}, step{};
        auto run = [&](std::int64_t y1, std::int64_t y2, int axis, std::int64_t count) {
            for (int j = 0; j < m; ++j) {
                t[j] = static_cast<std::uint64_t>(y1) * ff_.at(0, j).frac + static_cast<std::uint64_t>(y2) * ff_.at(1, j).frac;
                step[j] = ff_.at(axis, j).frac;
            }
            std::int64_t c = 0;
            while (c < count) {
                std::uint64_t base = t[0] + static_cast<std::uint64_t>(c) * step[0];
                c += static_cast<std::int64_t>(first_hit(base, step[0], static_cast<std::uint64_t>(count - c), lim));
                if (c >= count) break;
                auto uc = static_cast<std::uint64_t>(c);
                std::uint64_t r = 0;
                for (int j = 0; j < m; ++j) r = std::max(r, fixed_dist(t[j] + uc * step[j]));
                if (r <= lim) {
                    IntVec y{y1, y2};
                    y[axis] += c;
                    out.push_back({std::move(y), r});
                    U = std::min(U, static_cast<Units>(r) + E);
                    lim = limit_of(U, E);
                }
                ++c;
            }
        };
        run(s, -s, 1, 2 * s + 1);
        run(0, s, 0, s);
        run(1, -s, 0, s - 1);
        std::vector<Candidate> keep;
        for (auto& c : out)
            if (static_cast<Units>(c.r) - E <= U) keep.push_back(std::move(c));
        std::sort(keep.begin(), keep.end(), [](const Candidate& a, const Candidate& b) { return a.y < b.y; });
        return keep;
    }

    static std::uint64_t limit_of(Units U, Units E)
    {
        Units l = U + E;
        if (!(l < two64)) return ~std::uint64_t{0};
        if (l < 0) return 0;
        return static_cast<std::uint64_t>(l);
    }

    void scan_range(std::int64_t s, std::int64_t lo, std::int64_t hi, Units& U, Units E,
                    std::vector<Candidate>& out) const
    {
        constexpr int block = 16;
        const int n = ff_.rows();
        const int m = ff_.cols();
        std::array<std::uint64_t, max_fixed_dim> t{}, step{};
            std::uint64_t lim = limit_of(U, E);
        // element c of the current row: column j at t[j] + c*step[j]; column 0 screens first
        auto test = [&](const ShellRow& row, std::int64_t c) {
            auto uc = static_cast<std::uint64_t>(c);
            std::uint64_t r = fixed_dist(t[0] + uc * step[0]);
            if (r > lim) return;
            for (int j = 1; j < m; ++j) {
                r = std::max(r, fixed_dist(t[j] + uc * step[j]));
                if (r > lim) return;
            }
            Candidate cand;
            cand.y.assign(row.prefix.begin(), row.prefix.end());
            cand.y.push_back(row.first + c * row.stride);
            cand.r = r;
            out.push_back(std::move(cand));
            U = std::min(U, static_cast<Units>(r) + E);
            lim = limit_of(U, E);
        };
        auto row_fn = [&](const ShellRow& row) {
            for (int j = 0; j < m; ++j) {
                std::uint64_t acc = 0;
                for (int i = 0; i + 1 < n; ++i)
                    acc += static_cast<std::uint64_t>(row.prefix[i]) * ff_.at(i, j).frac;
                acc += static_cast<std::uint64_t>(row.first) * ff_.at(n - 1, j).frac;
                t[j] = acc;
                step[j] = static_cast<std::uint64_t>(row.stride) * ff_.at(n - 1, j).frac;
            }
            std::int64_t c = 0;
            if (row.count >= 2 * block) {
                while (c < row.count) {
                    std::uint64_t base = t[0] + static_cast<std::uint64_t>(c) * step[0];
                    c += static_cast<std::int64_t>(
                        first_hit(base, step[0], static_cast<std::uint64_t>(row.count - c), lim));
                    if (c >= row.count) break;
                    test(row, c++);
                }
                return;
            }
            for (; c < row.count; ++c) test(row, c);
        };
        if (n == 1)
            for_each_canonical_row(n, s, row_fn);
        else
            for_each_canonical_row(n, s, lo, hi, row_fn);
    }

    const FixedForm& ff_;
    unsigned threads_;
};

} // namespace detail

/// Best approximations over shells 1..shell_bound.
///
/// Throws RankDeficientError when some y has A^T y integral, and
/// UndecidedPairError when two residues cannot be ordered at the ceiling.
inline BestApproxSeq compute_best_approx(const LinearForm& A, std::int64_t shell_bound,
                                         const BestApproxOptions& opt = {})
{
    if (shell_bound < 1) throw ContractViolation("shell_bound must be >= 1");
    const int n = A.rows();
    const int m = A.cols();
    if (n > detail::max_fixed_dim || m > detail::max_fixed_dim)
        throw ContractViolation("dimension exceeds the fixed-point scanner limit");

    BestApproxSeq seq{A, {}, shell_bound, {}};
    LinearForm form = A;
    const FixedForm ff(A);
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    detail::ShellScanner scanner(ff, threads);

    Units cur_hi = std::numeric_limits<Units>::infinity();

    auto refine = [&](const IntVec& a, const IntVec& b) {
        if (form.all_rational() || form.bits() >= opt.ceiling) throw UndecidedPairError(a, b);
        form = form.refined(std::min(opt.ceiling, form.bits() * 2));
    };

    auto decide_shell = [&](std::int64_t s, const std::vector<detail::Candidate>& cands) {
        if (cands.empty()) return;
        while (true) {
            IntVec pa, pb;
            try {
                std::vector<CertifiedReal> rs;
                rs.reserve(cands.size());
                for (const auto& c : cands) {
                    pa = c.y;
                    pb = c.y;
                    if (detail::transpose_integral(form, c.y) == Certainty::certified_true)
                        throw RankDeficientError(c.y);
                    CertifiedReal r = transpose_residue(form, c.y);
                    if (r.exact() && r.lo() == 0) throw RankDeficientError(c.y);
                    rs.push_back(r);
                }
                std::size_t best = 0;
                std::vector<std::pair<std::size_t, std::size_t>> ties;
                for (std::size_t c = 1; c < cands.size(); ++c) {
                    pa = cands[best].y;
                    pb = cands[c].y;
                    if (detail::residues_identical(form, cands[best].y, cands[c].y)) {
                        ties.emplace_back(best, c);
                        continue;
                    }
                    if (decide(less(rs[c], rs[best]), "shell minimum")) best = c;
                }
                for (auto [k, d] : ties)
                    if (k == best) seq.ties.push_back({s, cands[k].y, cands[d].y});
                if (!seq.items.empty()) {
                    const IntVec& prev = seq.items.back().y;
                    pa = cands[best].y;
                    pb = prev;
                    if (detail::residues_identical(form, cands[best].y, prev)) {
                        seq.ties.push_back({s, prev, cands[best].y});
                        return;
                    }
                    CertifiedReal prev_r = transpose_residue(form, prev);
                    if (!decide(less(rs[best], prev_r), "record test")) return;
                }
                seq.items.push_back({cands[best].y, rs[best]});
                cur_hi = rational_to_units_up(rs[best].hi());
                return;
            } catch (const RankDeficientError&) {
                throw;
            } catch (const Undecided&) {
                refine(pa, pb);
            }
        }
    };

    if (n == 1) {
        // one canonical vector per shell: a flat loop
        const Units E = static_cast<Units>(shell_bound) * ff.max_column_error() + 4;
        std::array<std::uint64_t, detail::max_fixed_dim> t{}, step{};
        for (int j = 0; j < m; ++j) step[j] = ff.at(0, j).frac;
        for (std::int64_t y = 1; y <= shell_bound; ++y) {
            std::uint64_t r = 0;
            for (int j = 0; j < m; ++j) {
                t[j] += step[j];
                r = std::max(r, fixed_dist(t[j]));
            }
            if (static_cast<Units>(r) - E <= cur_hi) decide_shell(y, {detail::Candidate{IntVec{y}, r}});
        }
        seq.form = form;
        return seq;
    }

    for (std::int64_t s = 1; s <= shell_bound; ++s) {
        const Units E = static_cast<Units>(s) * ff.max_column_error() + 4;
        auto cands = scanner.scan(s, cur_hi, E);
        decide_shell(s, cands);
    }
    seq.form = form;
    return seq;
}

// ------------------------------------------------------------ Dirichlet

/// Which exponent the Dirichlet-type bound ||A^T y_i|| <= |y_{i+1}|^{-e} uses.
enum class ExponentPolicy {
    dirichlet, // e = n/m, from Minkowski's theorem on linear forms
    literal    // e = m/n, as printed in the source derivation
};

struct DirichletVerdict {
    std::size_t index = 0;
    bool holds = false;
};

namespace detail {

inline Certainty dirichlet_holds(const CertifiedReal& r, std::uint64_t next_norm, unsigned long num,
                                 unsigned long den)
{
    // r <= Y^{-num/den}  <=>  r^den * Y^num <= 1  (r >= 0)
    Rational Y(Integer(static_cast<unsigned long>(next_norm)));
    Rational yp = pow_int(Y, num);
    if (pow_int(r.hi(), den) * yp <= 1) return Certainty::certified_true;
    if (pow_int(r.lo(), den) * yp > 1) return Certainty::certified_false;
    return Certainty::undecided;
}

} // namespace detail

/// One verdict per index with a successor; refines residues on undecided.
inline std::vector<DirichletVerdict> check_dirichlet(const BestApproxSeq& seq,
                                                     ExponentPolicy policy = ExponentPolicy::dirichlet,
                                                     unsigned ceiling = default_precision_ceiling)
{
    if (seq.size() < 2) throw ContractViolation("check_dirichlet needs at least two items");
    const unsigned long n = seq.form.rows();
    const unsigned long m = seq.form.cols();
    const unsigned long num = policy == ExponentPolicy::dirichlet ? n : m;
    const unsigned long den = policy == ExponentPolicy::dirichlet ? m : n;
    std::vector<DirichletVerdict> out;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        bool holds = with_refinement(seq.form, ceiling, [&](const LinearForm& f) {
            CertifiedReal r = f.bits() == seq.form.bits() ? seq.items[i].r : transpose_residue(f, seq.y(i));
            return decide(detail::dirichlet_holds(r, seq.norm(i + 1), num, den), "Dirichlet bound");
        });
        out.push_back({i, holds});
    }
    return out;
}

// ------------------------------------------- continued-fraction oracle

namespace detail {

inline void push_denominator(std::vector<Integer>& out, Integer& q_prev, Integer& q_cur, const Integer& a)
{
    Integer next = a * q_cur + q_prev;
    q_prev = q_cur;
    q_cur = next;
    out.push_back(q_cur);
}

} // namespace detail

/// Convergent denominators of a rational, at most `count` (stops early at termination).
inline std::vector<Integer> cf_denominators(const Rational& alpha, std::size_t count)
{
    if (count < 1) throw ContractViolation("count must be >= 1");
    std::vector<Integer> out;
    Integer num = alpha.get_num(), den = alpha.get_den();
    Integer q_prev = 1, q_cur = 0; // q_{-2}, q_{-1}
    while (out.size() < count && den != 0) {
        Integer a;
        mpz_fdiv_q(a.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
        detail::push_denominator(out, q_prev, q_cur, a);
        Integer rem = num - a * den;
        num = den;
        den = rem;
    }
    return out;
}

/// Convergent denominators of (a + b sqrt d)/c via the exact (P + sqrt D)/Q recurrence.
inline std::vector<Integer> cf_denominators(const QuadraticSurd& s, std::size_t count)
{
    if (count < 1) throw ContractViolation("count must be >= 1");
    Integer P = s.a, Q = s.c, D = s.b * s.b * s.d;
    if (s.b < 0) {
        P = -P;
        Q = -Q;
    }
    Integer r = D - P * P;
    if (!mpz_divisible_p(r.get_mpz_t(), Q.get_mpz_t())) {
        Integer absQ = abs(Q);
        P *= absQ;
        D *= Q * Q;
        Q *= absQ;
    }
    Integer root;
    mpz_sqrt(root.get_mpz_t(), D.get_mpz_t());
    std::vector<Integer> out;
    Integer q_prev = 1, q_cur = 0;
    while (out.size() < count) {
        Integer a;
        Integer top = Q > 0 ? Integer(P + root) : Integer(P + root + 1);
        mpz_fdiv_q(a.get_mpz_t(), top.get_mpz_t(), Q.get_mpz_t());
        detail::push_denominator(out, q_prev, q_cur, a);
        P = a * Q - P;
        Q = (D - P * P) / Q;
    }
    return out;
}

/// Distinct denominators up to `bound`, in increasing order (the n = m = 1 best-approximation list).
template <class Alpha>
std::vector<Integer> cf_best_denominators(const Alpha& alpha, const Integer& bound)
{
    std::vector<Integer> out;
    for (std::size_t count = 16;; count *= 2) {
        auto all = cf_denominators(alpha, count);
        out.clear();
        for (const auto& q : all) {
            if (q > bound) return out;
            if (out.empty() || q > out.back()) out.push_back(q);
        }
        if (all.size() < count) return out; // terminated (rational)
    }
}

} // namespace badapprox
