#pragma once

// Brute-force oracles: inhomogeneous margins ||Aq - x|| |q|^(m/n), margins
// along a sequence, the inclusion constant and its step-by-step replay, and
// the classical one-dimensional quantities (Markoff, Khintchine, Hurwitz).
//
// Scans run a fixed-point pass first; only q whose lower bound could reach
// the running minimum are evaluated in exact arithmetic.

#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "badapprox/best_approx.hpp"
#include "badapprox/fixed_point.hpp"
#include "badapprox/fractal.hpp"
#include "badapprox/ktv_engine.hpp"

namespace badapprox {

inline Box point_box(std::vector<Rational> x) { return Box{std::move(x), Rational(0)}; }

// ------------------------------------------------------------- margins

struct MarginReport {
    Box x;
    std::int64_t Qmax = 0;
    CertifiedReal margin; // lower end certified for every point of x
    IntVec argmin_q;
    std::vector<double> shell_minima; // display: running minimum after each shell
};

namespace detail {

/// Lower bound of ||Aq - x'|| over x' in the box, exact in the enclosures of A.
inline Rational box_residual_lower(const LinearForm& A, std::span<const std::int64_t> q, const Box& x)
{
    auto v = badapprox::apply(A, q);
    Rational best = 0;
    for (int i = 0; i < A.rows(); ++i) {
        auto r = dist_to_int_range(CertifiedReal::enclose(v[i].lo() - x.center[i] - x.half, v[i].hi() - x.center[i] + x.half));
        best = std::max(best, r.lo());
    }
    return best;
}

/// ||Aq - c|| at the box center, as an enclosure.
inline CertifiedReal center_residual(const LinearForm& A, std::span<const std::int64_t> q, const Box& x)
{
    auto v = badapprox::apply(A, q);
    CertifiedReal best(Rational(0));
    for (int i = 0; i < A.rows(); ++i) best = max(best, dist_to_int_range(v[i] - CertifiedReal(x.center[i])));
    return best;
}

struct ScanSetup {
    FixedForm ff;
    std::vector<FixedReal> cx;
    Units half = 0;
};

/// Fixed-point bounds (in units) of ||Aq - x'||: lower over the box, upper at the center.
inline void fixed_bounds(const ScanSetup& st, std::span<const std::int64_t> q, Units& lo, Units& hi)
{
    const int n = st.ff.rows();
    const int m = st.ff.cols();
    lo = 0;
    hi = 0;
    for (int i = 0; i < n; ++i) {
        std::uint64_t t = 0 - st.cx[i].frac;
        Units err = st.cx[i].err + 2;
        for (int j = 0; j < m; ++j) {
            t += static_cast<std::uint64_t>(q[j]) * st.ff.at(i, j).frac;
            err += static_cast<Units>(q[j] < 0 ? -q[j] : q[j]) * st.ff.at(i, j).err;
        }
        Units d = static_cast<Units>(fixed_dist(t));
        lo = std::max(lo, d - err - st.half);
        hi = std::max(hi, d + err);
    }
}

/// min over q of w(q) ||Aq - x'||, q ranging over `each` (a callback enumerator).
template <class Enumerate, class Weight, class ExactWeight>
MarginReport scan_margin(const LinearForm& A, const Box& x, std::int64_t Qmax, Enumerate&& each, Weight&& w,
                         ExactWeight&& wexact)
{
    if (static_cast<int>(x.center.size()) != A.rows()) throw ContractViolation("point dimension differs from n");
    ScanSetup st{FixedForm(A), {}, 0};
    for (const auto& c : x.center) st.cx.push_back(to_fixed(CertifiedReal(c)));
    st.half = x.half > 0 ? rational_to_units_up(x.half) : 0;
    MarginReport rep;
    rep.x = x;
    rep.Qmax = Qmax;
    Units U = std::numeric_limits<Units>::infinity();
    std::vector<std::pair<IntVec, Units>> cands;
    each([&](std::span<const std::int64_t> q, std::int64_t shell) {
        Units lo, hi;
        fixed_bounds(st, q, lo, hi);
        const Units wq = w(q);
        const Units lw = std::max<Units>(lo, 0) * wq * (1 - 1e-12L);
        const Units hw = hi * wq * (1 + 1e-12L);
        if (hw < U) U = hw;
        if (lw <= U) cands.emplace_back(IntVec(q.begin(), q.end()), lw);
        if (static_cast<std::size_t>(shell) > rep.shell_minima.size())
            rep.shell_minima.resize(shell, std::numeric_limits<double>::infinity());
        rep.shell_minima[shell - 1] =
            std::min(rep.shell_minima[shell - 1], static_cast<double>(U / two64));
    });
    for (std::size_t s = 1; s < rep.shell_minima.size(); ++s)
        rep.shell_minima[s] = std::min(rep.shell_minima[s], rep.shell_minima[s - 1]);
    if (cands.empty()) throw ContractViolation("empty scan range");
    bool first = true;
    Rational best_lo, best_hi;
    for (const auto& [q, lw] : cands) {
        if (lw > U) continue;
        CertifiedReal wq = wexact(q);
        Rational lo = box_residual_lower(A, q, x) * wq.lo();
        Rational hi = center_residual(A, q, x).hi() * wq.hi();
        if (first || lo < best_lo) {
            best_lo = lo;
            rep.argmin_q = q;
        }
        if (first || hi < best_hi) best_hi = hi;
        first = false;
    }
    rep.margin = CertifiedReal::enclose(best_lo, std::max(best_lo, best_hi));
    return rep;
}

inline std::pair<unsigned long, unsigned long> reduced(unsigned long num, unsigned long den)
{
    unsigned long g = std::gcd(num, den);
    return {num / g, den / g};
}

} // namespace detail

/// min over 0 < |q| <= Qmax of ||Aq - x|| |q|^(m/n), certified for every point of the box x.
inline MarginReport bad_A_margin(const LinearForm& A, const Box& x, std::int64_t Qmax)
{
    if (Qmax < 1) throw ContractViolation("Qmax must be >= 1");
    const int m = A.cols();
    const auto [num, den] = detail::reduced(A.cols(), A.rows());
    const long double e = static_cast<long double>(num) / den;
    auto each = [&](auto&& f) {
        for (std::int64_t s = 1; s <= Qmax; ++s)
            for_each_in_shell(m, s, [&](std::span<const std::int64_t> q) { f(q, s); });
    };
    auto w = [&](std::span<const std::int64_t> q) { return std::pow(static_cast<Units>(inf_norm(q)), e); };
    auto wexact = [&](const IntVec& q) {
        return pow_rational(CertifiedReal(Rational(Integer(static_cast<unsigned long>(inf_norm(q))))), num, den);
    };
    return detail::scan_margin(A, x, Qmax, each, w, wexact);
}

inline MarginReport bad_A_margin(const LinearForm& A, const std::vector<Rational>& x, std::int64_t Qmax)
{
    return bad_A_margin(A, point_box(x), Qmax);
}

/// min over the rows of ||y . x'|| over the box: lower end certified, upper end at the center.
inline CertifiedReal bad_seq_margin(const std::vector<IntVec>& seq, const Box& x)
{
    if (seq.empty()) throw ContractViolation("bad_seq_margin needs a nonempty sequence");
    bool first = true;
    Rational lo, hi;
    for (const auto& y : seq) {
        if (y.size() != x.center.size()) throw ContractViolation("row length differs from the point dimension");
        Rational v = 0;
        for (std::size_t i = 0; i < y.size(); ++i) v += Rational(Integer(static_cast<long>(y[i]))) * x.center[i];
        Rational d = dist_to_int(v);
        auto r = dist_to_int_range(CertifiedReal::enclose(v - x.half * Rational(l1_norm(y)), v + x.half * Rational(l1_norm(y))));
        if (first || r.lo() < lo) lo = r.lo();
        if (first || d < hi) hi = d;
        first = false;
    }
    return CertifiedReal::enclose(lo, hi);
}

inline CertifiedReal bad_seq_margin(const std::vector<IntVec>& seq, const std::vector<Rational>& x)
{
    return bad_seq_margin(seq, point_box(x));
}

// --------------------------------------------------- re-verification

struct LeafCheck {
    std::size_t leaves = 0;
    std::size_t rows = 0;
    std::size_t failures = 0;
    Rational min_distance; // smallest lower bound of ||y . x'|| over leaves and rows
};

/// Re-scans every stored leaf against every family row with |y|_2 < k^depth.
inline LeafCheck reverify_leaves(const SurvivorTree& t)
{
    LeafCheck out;
    const Integer limit = pow_int(Integer(t.k), 2UL * static_cast<unsigned long>(t.depth));
    std::vector<IntVec> rows;
    for (const auto& r : t.family.rows)
        if (norm2_squared(r.y) < limit) rows.push_back(r.y);
    out.rows = rows.size();
    out.leaves = t.levels.back().size();
    bool first = true;
    for (std::size_t i = 0; i < out.leaves; ++i) {
        Box b = t.box(t.depth, i);
        for (const auto& y : rows) {
            Rational lo = bad_seq_margin({y}, b).lo();
            if (lo <= 0) ++out.failures;
            if (first || lo < out.min_distance) out.min_distance = lo;
            first = false;
        }
    }
    return out;
}

// ---------------------------------------------------- inclusion constant

/// c^(m/n + 1) / (9 n^2 (2m)^(m/n)).
inline CertifiedReal inclusion_constant(const Rational& c, int n, int m)
{
    if (c <= 0 || c > Rational(1, 2)) throw ContractViolation("inclusion_constant needs 0 < c <= 1/2");
    if (n < 1 || m < 1) throw ContractViolation("n and m must be >= 1");
    const auto [num, den] = detail::reduced(m, n);
    CertifiedReal cp = pow_rational(CertifiedReal(c), num, den);
    CertifiedReal tp = pow_rational(CertifiedReal(Rational(2 * m)), num, den);
    return cp * CertifiedReal(c) / (CertifiedReal(Rational(9 * n * n)) * tp);
}

/// The constant the chain actually delivers: half of inclusion_constant.
inline CertifiedReal provable_inclusion_constant(const Rational& c, int n, int m)
{
    return CertifiedReal::scale(inclusion_constant(c, n, m), Rational(1, 2));
}

class NoWindow : public Error {
public:
    NoWindow(Rational need, std::uint64_t have)
        : Error("no processed row brackets the window; c is too large for this q"), required(std::move(need)),
          available(have)
    {
    }
    Rational required;      // W^n, the n-th power of the window bound
    std::uint64_t available; // largest sup-norm of a processed row
};

class ChainStepFailed : public CertificateFailure {
public:
    ChainStepFailed(std::string s, const IntVec& qq)
        : CertificateFailure("inclusion chain step failed: " + s), step(std::move(s)), q(qq)
    {
    }
    std::string step;
    IntVec q;
};

/// Rows certified against x, in increasing sup-norm, and the norm of the row after the last.
struct ChainInput {
    std::vector<IntVec> ys;
    std::uint64_t next_norm = 0;
};

struct ChainReport {
    IntVec q;
    Rational c;
    std::size_t window = 0; // index bracketing W
    std::size_t used = 0;   // index whose steps certified
    IntVec y;
    Rational window_pow; // W^n = (9n)^n (2m/c)^m |q|^m
    CertifiedReal residue; // ||A^T y||
    bool identity = false;
    bool triv = false;
    bool step10 = false;
    bool final = false;
    Rational derived; // certified lower bound on ||Aq - x'|| over the box
    CertifiedReal target; // inclusion_constant(c) |q|^(-m/n)
    CertifiedReal provable_target;
    Rational direct; // oracle lower bound of ||Aq - x'|| over the box
};

inline ChainReport replay_inclusion_chain(const LinearForm& A, const ChainInput& in, const Box& x, const Rational& c,
                                          const IntVec& q, unsigned ceiling = default_precision_ceiling)
{
    const int n = A.rows();
    const int m = A.cols();
    if (static_cast<int>(q.size()) != m) throw ContractViolation("q has the wrong length");
    if (in.ys.empty()) throw ContractViolation("chain needs at least one row");
    const std::uint64_t qn = inf_norm(q);
    if (qn == 0) throw ContractViolation("q must be nonzero");
    ChainReport rep;
    rep.q = q;
    rep.c = c;
    const Rational Q(Integer(static_cast<unsigned long>(qn)));
    rep.window_pow = pow_int(Rational(9 * n), n) * pow_int(Rational(2 * m) / c, m) * pow_int(Q, m);
    auto npow = [n](std::uint64_t v) { return pow_int(Rational(Integer(static_cast<unsigned long>(v))), n); };
    // window: |y_i|^n <= W^n < |y_(i+1)|^n
    std::optional<std::size_t> win;
    for (std::size_t i = 0; i < in.ys.size(); ++i) {
        std::uint64_t next = i + 1 < in.ys.size() ? inf_norm(in.ys[i + 1]) : in.next_norm;
        if (npow(inf_norm(in.ys[i])) <= rep.window_pow && next != 0 && rep.window_pow < npow(next)) {
            win = i;
            break;
        }
    }
    if (!win) throw NoWindow(rep.window_pow, inf_norm(in.ys.back()));
    rep.window = *win;
    const Rational mq = Rational(m) * Q;
    const auto [num, den] = detail::reduced(m, n);
    const CertifiedReal qpow = pow_rational(CertifiedReal(Q), num, den);
    rep.target = inclusion_constant(c, n, m) / qpow;
    rep.provable_target = provable_inclusion_constant(c, n, m) / qpow;
    rep.direct = detail::box_residual_lower(A, q, x);

    // Runs every step for row j; returns the failing step, empty on success.
    auto attempt = [&](std::size_t j, ChainReport& r) -> std::string {
        r.used = j;
        r.y = in.ys[j];
        const IntVec& y = r.y;
        // y.x = q.(A^T y) - y.(Aq - x), checked exactly on the midpoint matrix
        Rational lhs = 0, qa = 0, yr = 0;
        for (int i = 0; i < n; ++i) lhs += Rational(static_cast<long>(y[i])) * x.center[i];
        for (int jj = 0; jj < m; ++jj) {
            Rational col = 0;
            for (int i = 0; i < n; ++i) col += A.at(i, jj).midpoint() * Rational(static_cast<long>(y[i]));
            qa += Rational(static_cast<long>(q[jj])) * col;
        }
        for (int i = 0; i < n; ++i) {
            Rational row = -x.center[i];
            for (int jj = 0; jj < m; ++jj) row += A.at(i, jj).midpoint() * Rational(static_cast<long>(q[jj]));
            yr += Rational(static_cast<long>(y[i])) * row;
        }
        r.identity = lhs - (qa - yr) == 0;
        if (!r.identity) return "identity";
        r.triv = bad_seq_margin({y}, x).lo() >= c;
        if (!r.triv) return "||y.x|| >= c";
        r.residue = with_refinement(A, ceiling, [&](const LinearForm& f) { return transpose_residue(f, y); });
        r.step10 = mq * r.residue.hi() <= c / 2;
        if (!r.step10) return "m|q| ||A^T y|| <= c/2";
        r.derived = (c - mq * r.residue.hi()) / (Rational(n) * Rational(Integer(static_cast<unsigned long>(inf_norm(y)))));
        if (r.direct < r.derived) return "oracle below the derived bound";
        r.final = r.derived >= r.target.hi();
        if (!r.final) return "||Aq - x|| > inclusion_constant(c) |q|^(-m/n)";
        return {};
    };
    std::string failed = attempt(*win, rep);
    if (failed.empty()) return rep;
    // the window row proves only half the constant when |y| is close to W;
    // an earlier certified row with a small enough residue may still close the chain
    for (std::size_t j = *win; j-- > 0;) {
        ChainReport alt = rep;
        if (attempt(j, alt).empty()) return alt;
    }
    throw ChainStepFailed(failed, q);
}

// ------------------------------------------------ one-dimensional oracles

namespace detail {

inline LinearForm scalar_form(const EntrySpec& alpha) { return LinearForm(1, 1, {alpha}); }

} // namespace detail

/// min over 1 <= q <= Qmax of q ||q alpha - x||.
inline CertifiedReal kim_liminf_proxy(const EntrySpec& alpha, const Box& x, std::int64_t Qmax)
{
    if (Qmax < 1) throw ContractViolation("Qmax must be >= 1");
    auto A = detail::scalar_form(alpha);
    auto each = [&](auto&& f) {
        IntVec q{0};
        for (std::int64_t s = 1; s <= Qmax; ++s) {
            q[0] = s;
            f(std::span<const std::int64_t>(q), s);
        }
    };
    auto w = [](std::span<const std::int64_t> q) { return static_cast<Units>(q[0]); };
    auto wexact = [](const IntVec& q) { return CertifiedReal(Rational(static_cast<long>(q[0]))); };
    return detail::scan_margin(A, x, Qmax, each, w, wexact).margin;
}

inline CertifiedReal kim_liminf_proxy(const EntrySpec& alpha, const Rational& x, std::int64_t Qmax)
{
    return kim_liminf_proxy(alpha, point_box({x}), Qmax);
}

/// min of q_i ||q_i alpha|| over best-approximation denominators in [sqrt(Qmax), Qmax].
/// The tail window drops the early terms, which sit below the liminf.
inline CertifiedReal markoff_estimate(const EntrySpec& alpha, std::int64_t Qmax)
{
    if (Qmax < 4) throw ContractViolation("markoff_estimate needs Qmax >= 4");
    auto seq = compute_best_approx(detail::scalar_form(alpha), Qmax);
    const auto lo = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(Qmax)));
    std::optional<CertifiedReal> best;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq.norm(i) < lo) continue;
        CertifiedReal v = CertifiedReal::scale(seq.items[i].r, Rational(static_cast<long>(seq.norm(i))));
        if (!best || v.hi() < best->hi()) best = v;
    }
    if (!best) throw ContractViolation("no best approximation in the tail window");
    return *best;
}

/// C = sqrt(1 - 4 lambda^2) / 4.
inline CertifiedReal khintchine_C(const CertifiedReal& lambda, unsigned bits = 256)
{
    if (lambda.lo() < 0) throw ContractViolation("lambda must be >= 0");
    CertifiedReal rad = CertifiedReal(Rational(1)) - CertifiedReal(Rational(4)) * lambda * lambda;
    if (rad.hi() < 0) throw ContractViolation("khintchine_C needs lambda <= 1/2");
    if (rad.lo() < 0) rad = CertifiedReal::enclose(Rational(0), rad.hi());
    return CertifiedReal::scale(sqrt(rad, bits), Rational(1, 4));
}

/// Approximation law psi(q).
struct Law {
    enum class Kind { khintchine, hurwitz, table } kind = Kind::hurwitz;
    Rational param; // C for khintchine, epsilon for hurwitz
    std::vector<std::pair<std::int64_t, Rational>> table; // (q0, psi) steps, increasing q0

    static Law khintchine(Rational C) { return Law{Kind::khintchine, std::move(C), {}}; }
    static Law hurwitz(Rational eps) { return Law{Kind::hurwitz, std::move(eps), {}}; }
    static Law from_table(std::vector<std::pair<std::int64_t, Rational>> t)
    {
        if (t.empty()) throw ContractViolation("empty psi table");
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        return Law{Kind::table, Rational(0), std::move(t)};
    }

    CertifiedReal operator()(std::int64_t q, unsigned bits = 128) const
    {
        switch (kind) {
        case Kind::khintchine:
            return CertifiedReal(Rational(param / q));
        case Kind::hurwitz:
            return CertifiedReal(Rational((1 + param) / q)) / sqrt(CertifiedReal(Rational(5)), bits);
        case Kind::table:
            break;
        }
        Rational v = 0;
        for (const auto& [q0, p] : table)
            if (q0 <= q) v = p;
        return CertifiedReal(v);
    }
};

/// Parses two whitespace-separated columns "q psi" per line; '#' starts a comment.
inline Law parse_psi_table(const std::string& text)
{
    std::vector<std::pair<std::int64_t, Rational>> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::size_t a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        std::size_t b = line.find_first_of(" \t", a);
        if (b == std::string::npos) throw ParseError("psi table line needs two columns: " + line);
        std::size_t c = line.find_first_not_of(" \t", b);
        std::size_t d = line.find_last_not_of(" \t\r");
        if (c == std::string::npos) throw ParseError("psi table line needs two columns: " + line);
        Rational q0 = parse_rational(line.substr(a, b - a));
        if (q0.get_den() != 1 || q0 < 1) throw ParseError("psi table q must be a positive integer");
        rows.emplace_back(q0.get_num().get_si(), parse_rational(line.substr(c, d - c + 1)));
    }
    return Law::from_table(std::move(rows));
}

/// Number of 1 <= q <= Qmax with ||q alpha - x|| < psi(q).
inline std::uint64_t count_solutions(const EntrySpec& alpha, const Rational& x, const Law& law, std::int64_t Qmax,
                                     unsigned ceiling = default_precision_ceiling)
{
    if (Qmax < 1) throw ContractViolation("Qmax must be >= 1");
    auto A = detail::scalar_form(alpha);
    detail::ScanSetup st{FixedForm(A), {to_fixed(CertifiedReal(x))}, 0};
    const long double sqrt5 = std::sqrt(5.0L);
    std::vector<std::pair<std::int64_t, long double>> steps;
    for (const auto& [q0, p] : law.table) steps.emplace_back(q0, static_cast<long double>(p.get_d()));
    std::size_t step = 0;
    long double table_psi = 0;
    std::uint64_t count = 0;
    IntVec q{0};
    for (std::int64_t s = 1; s <= Qmax; ++s) {
        q[0] = s;
        Units lo, hi;
        detail::fixed_bounds(st, q, lo, hi);
        long double psi;
        if (law.kind == Law::Kind::table) {
            while (step < steps.size() && steps[step].first <= s) table_psi = steps[step++].second;
            psi = table_psi;
        } else if (law.kind == Law::Kind::khintchine) {
            psi = static_cast<long double>(law.param.get_d()) / s;
        } else {
            psi = (1 + static_cast<long double>(law.param.get_d())) / (sqrt5 * s);
        }
        const Units p = psi * two64;
        if (hi < p * (1 - 1e-9L)) {
            ++count;
            continue;
        }
        if (std::max<Units>(lo, 0) > p * (1 + 1e-9L)) continue;
        // borderline: decide exactly
        bool hit = with_refinement(A, ceiling, [&](const LinearForm& f) {
            auto v = badapprox::apply(f, q);
            CertifiedReal d = dist_to_int_range(v[0] - CertifiedReal(x));
            return decide(less(d, law(s, f.bits())), "count_solutions comparison");
        });
        if (hit) ++count;
    }
    return count;
}

/// Searches x = s alpha + t (mod 1) with |s|, |t| <= bound; heuristic, never certified.
struct Degenerate {
    std::int64_t s = 0;
    std::int64_t t = 0;
    double gap = 0;
};

inline std::optional<Degenerate> detect_degenerate(const EntrySpec& alpha, const Rational& x, std::int64_t bound = 1000,
                                                   double tol = 1e-12)
{
    const double a = alpha.value(128).to_double();
    const double xv = x.get_d();
    std::optional<Degenerate> best;
    for (std::int64_t s = -bound; s <= bound; ++s) {
        double v = s * a - xv;
        double t = std::round(v);
        if (std::abs(t) > static_cast<double>(bound)) continue;
        double gap = std::abs(v - t);
        if (gap < tol && (!best || gap < best->gap)) best = Degenerate{s, static_cast<std::int64_t>(-t), gap};
    }
    return best;
}

} // namespace badapprox
