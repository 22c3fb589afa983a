#pragma once

// Cantor-type construction: a tree of nested boxes avoiding neighbourhoods of
// the hyperplanes {x : y_i . x = p}.
//
// Level m nodes are sup-norm boxes of half-side h_m = theta k^-m, theta = 1/(2k).
// Their centers are integer multiples of h_m, so every center is stored as an
// integer numerator over D_m = 2 k^(m+1) and all pruning decisions are exact.
// A row y with k^(L-1) <= |y|_2 < k^L belongs to bin L and is handled when the
// level-L children are generated: a child is removed iff
//   |y . c - p| <= 2 h_L |y|_2   or   |y . c - p| <= h_L |y|_1,
// the second clause keeping the child's own node box off the hyperplane.

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>
#include <vector>

#include "badapprox/best_approx.hpp"
#include "badapprox/fractal.hpp"
#include "badapprox/lacunary.hpp"

namespace badapprox {

struct ResonantRow {
    IntVec y;
    std::size_t index = 0; // position in the source sequence
    Integer beta2;         // |y|_2^2
    Integer l1;            // |y|_1
};

struct ResonantFamily {
    int n = 1;
    std::vector<ResonantRow> rows;
    bool lacunary = false;
    std::uint64_t next_norm = 0; // sup-norm of the element after the last row, 0 if unknown
};

inline ResonantRow make_row(IntVec y, std::size_t index)
{
    ResonantRow r;
    r.beta2 = norm2_squared(y);
    r.l1 = l1_norm(y);
    r.y = std::move(y);
    r.index = index;
    return r;
}

inline ResonantFamily make_family(const PhiSubseq& p)
{
    if (p.rows.size() != p.phi.size()) throw ContractViolation("subsequence has no rows attached");
    ResonantFamily f;
    f.n = p.n;
    f.lacunary = true;
    for (std::size_t i = 0; i < p.size(); ++i) f.rows.push_back(make_row(p.rows[i], p.phi[i]));
    return f;
}

inline ResonantFamily make_family(const BestApproxSeq& seq)
{
    ResonantFamily f;
    f.n = seq.form.rows();
    for (std::size_t i = 0; i < seq.size(); ++i) f.rows.push_back(make_row(seq.y(i), i));
    return f;
}

inline ResonantFamily make_family(int n, const std::vector<IntVec>& rows)
{
    ResonantFamily f;
    f.n = n;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<int>(rows[i].size()) != n) throw ContractViolation("row length differs from n");
        f.rows.push_back(make_row(rows[i], i));
    }
    return f;
}

/// Bin level L >= 1 with k^(L-1) <= |y|_2 < k^L.
inline int bin_level(const Integer& beta2, long k)
{
    const Integer k2 = Integer(k) * k;
    Integer bound = k2;
    int L = 1;
    while (beta2 >= bound) {
        bound *= k2;
        ++L;
    }
    return L;
}

class Extinction : public Error {
public:
    explicit Extinction(int lvl)
        : Error("every child was pruned at level " + std::to_string(lvl) + "; try a larger k"), level(lvl)
    {
    }
    int level;
};

struct TreeNode {
    std::vector<Integer> num; // center = num / D_level
    std::size_t parent = 0;
};

struct LevelAudit {
    int level = 0; // level of the children
    std::size_t parents = 0;
    std::size_t parents_expanded = 0;
    std::size_t children_per_node = 0;
    std::uint64_t children = 0;
    std::uint64_t pruned = 0;
    std::uint64_t survivors = 0;
    std::size_t stored = 0;
    double survivors_estimated = 0;
    std::uint64_t pruned_max_per_node = 0;
    std::vector<std::size_t> bin; // rows in this level's bin
    std::vector<std::uint64_t> omega_max; // per bin row: most children one hyperplane removed
    std::uint64_t hyperplanes_per_node_max = 0; // distinct p hitting one node, over rows
};

struct TreeOptions {
    std::size_t node_budget = 4096; // parents expanded and survivors stored per level
    unsigned threads = 1;
};

struct SurvivorTree {
    Support support;
    ResonantFamily family;
    long k = 0;
    Rational theta;
    int depth = 0;
    std::vector<std::vector<TreeNode>> levels;
    std::vector<LevelAudit> audit; // audit[m] describes levels[m + 1]
    TreeOptions options;

    Integer denominator(int level) const { return 2 * pow_int(Integer(k), static_cast<unsigned long>(level + 1)); }
    Box box(int level, std::size_t i) const
    {
        Box b;
        Integer d = denominator(level);
        for (const auto& v : levels[level][i].num) b.center.push_back(ratio(v, d));
        b.half = Rational(1, d);
        return b;
    }
    bool truncated() const
    {
        for (const auto& a : audit)
            if (a.parents_expanded < a.parents || a.stored < a.survivors) return true;
        return false;
    }
};

namespace detail {

struct Expansion {
    std::vector<std::vector<Integer>> kept;
    std::uint64_t pruned = 0;
    std::vector<std::uint64_t> omega; // per bin row
    std::uint64_t hyperplanes = 0;
};

struct LevelPlan {
    Integer den; // D of the children
    std::vector<std::vector<Integer>> offsets; // in units of 1/den
    std::vector<const ResonantRow*> rows;
    std::vector<std::vector<Integer>> row_offsets; // y . offset, per row and child
};

inline Expansion expand(const TreeNode& parent, long k, int n, const LevelPlan& plan)
{
    Expansion out;
    const std::size_t R = plan.rows.size();
    out.omega.assign(R, 0);
    std::vector<Integer> base(R);
    for (std::size_t r = 0; r < R; ++r) {
        Integer v = 0;
        for (int i = 0; i < n; ++i) v += Integer(static_cast<long>(plan.rows[r]->y[i])) * parent.num[i];
        base[r] = v * k;
    }
    std::vector<std::map<Integer, std::uint64_t>> hits(R);
    Integer v, q, rem, e;
    for (std::size_t c = 0; c < plan.offsets.size(); ++c) {
        bool removed = false;
        for (std::size_t r = 0; r < R; ++r) {
            v = base[r] + plan.row_offsets[r][c];
            mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), v.get_mpz_t(), plan.den.get_mpz_t());
            if (2 * rem > plan.den) {
                e = plan.den - rem;
                q += 1;
            } else {
                e = rem;
            }
            // h = 1 / den: remove iff e <= 2 |y|_2 or e <= |y|_1
            if (e * e <= 4 * plan.rows[r]->beta2 || e <= plan.rows[r]->l1) {
                removed = true;
                ++hits[r][q];
            }
        }
        if (removed) {
            ++out.pruned;
            continue;
        }
        std::vector<Integer> num(n);
        for (int i = 0; i < n; ++i) num[i] = parent.num[i] * k + plan.offsets[c][i];
        out.kept.push_back(std::move(num));
    }
    for (std::size_t r = 0; r < R; ++r) {
        out.hyperplanes = std::max<std::uint64_t>(out.hyperplanes, hits[r].size());
        for (const auto& [p, count] : hits[r]) out.omega[r] = std::max(out.omega[r], count);
    }
    return out;
}

inline std::vector<Expansion> expand_all(const std::vector<TreeNode>& parents, std::size_t count, long k, int n,
                                         const LevelPlan& plan, unsigned threads)
{
    std::vector<Expansion> out(count);
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) out[i] = expand(parents[i], k, n, plan);
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t T = std::min<std::size_t>(threads, count);
    for (std::size_t t = 0; t < T; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += T) out[i] = expand(parents[i], k, n, plan);
        });
    for (auto& th : pool) th.join();
    return out;
}

} // namespace detail

inline SurvivorTree build_tree(const ResonantFamily& family, const Support& s, long k, int depth,
                               const TreeOptions& opts = {})
{
    if (family.n != s.n) throw ContractViolation("family and support dimensions differ");
    if (depth < 1) throw ContractViolation("depth must be >= 1");
    if (opts.node_budget < 1) throw ContractViolation("node budget must be >= 1");
    SurvivorTree t;
    t.support = s;
    t.family = family;
    t.k = k;
    t.theta = Rational(1, 2 * k);
    t.depth = depth;
    t.options = opts;
    const int n = s.n;

    Box root = root_node(s, k);
    TreeNode r0;
    for (const auto& c : root.center) {
        Rational u = c * Rational(t.denominator(0));
        if (u.get_den() != 1) throw ContractViolation("root center off the level-0 grid");
        r0.num.push_back(u.get_num());
    }
    t.levels.push_back({r0});

    std::vector<int> bins;
    for (const auto& row : family.rows) bins.push_back(bin_level(row.beta2, k));

    double estimate = 1;
    for (int m = 0; m < depth; ++m) {
        auto pattern = child_pattern(s, k, m, t.theta);
        detail::LevelPlan plan;
        plan.den = t.denominator(m + 1);
        for (const auto& off : pattern.offsets) {
            std::vector<Integer> u(n);
            for (int i = 0; i < n; ++i) {
                Rational w = off[i] * Rational(plan.den);
                if (w.get_den() != 1) throw ContractViolation("child offset off the grid");
                u[i] = w.get_num();
            }
            plan.offsets.push_back(std::move(u));
        }
        LevelAudit a;
        a.level = m + 1;
        for (std::size_t i = 0; i < family.rows.size(); ++i)
            if (bins[i] == m + 1) {
                a.bin.push_back(i);
                plan.rows.push_back(&family.rows[i]);
                std::vector<Integer> yo;
                for (const auto& off : plan.offsets) {
                    Integer v = 0;
                    for (int j = 0; j < n; ++j) v += Integer(static_cast<long>(family.rows[i].y[j])) * off[j];
                    yo.push_back(v);
                }
                plan.row_offsets.push_back(std::move(yo));
            }
        a.omega_max.assign(a.bin.size(), 0);
        a.children_per_node = plan.offsets.size();

        const auto& parents = t.levels[m];
        a.parents = parents.size();
        std::vector<TreeNode> next;
        std::size_t done = 0;
        // expand in chunks so that the stored survivors stop at the budget
        while (done < parents.size() && done < opts.node_budget && next.size() < opts.node_budget) {
            std::size_t chunk = std::min(parents.size(), opts.node_budget) - done;
            chunk = std::min<std::size_t>(chunk, std::max(1u, opts.threads) * 16);
            auto parts = detail::expand_all(std::vector<TreeNode>(parents.begin() + done, parents.begin() + done + chunk),
                                            chunk, k, n, plan, opts.threads);
            for (std::size_t i = 0; i < parts.size(); ++i) {
                auto& e = parts[i];
                a.children += plan.offsets.size();
                a.pruned += e.pruned;
                a.survivors += e.kept.size();
                a.pruned_max_per_node = std::max(a.pruned_max_per_node, e.pruned);
                a.hyperplanes_per_node_max = std::max(a.hyperplanes_per_node_max, e.hyperplanes);
                for (std::size_t r = 0; r < e.omega.size(); ++r) a.omega_max[r] = std::max(a.omega_max[r], e.omega[r]);
                for (auto& num : e.kept) {
                    if (next.size() >= opts.node_budget) break;
                    next.push_back(TreeNode{std::move(num), done + i});
                }
            }
            done += chunk;
        }
        a.parents_expanded = done;
        a.stored = next.size();
        if (a.survivors == 0) throw Extinction(m + 1);
        estimate *= static_cast<double>(a.survivors) / static_cast<double>(done);
        a.survivors_estimated = estimate;
        t.audit.push_back(std::move(a));
        t.levels.push_back(std::move(next));
    }
    return t;
}

/// Rows of the family handled by the tree (|y|_2 < k^depth).
inline std::vector<std::size_t> processed_rows(const SurvivorTree& t)
{
    std::vector<std::size_t> out;
    for (const auto& a : t.audit) out.insert(out.end(), a.bin.begin(), a.bin.end());
    std::sort(out.begin(), out.end());
    return out;
}

// ------------------------------------------------------------ extraction

struct PointCertificate {
    Box x;
    Rational c_seq; // certified: ||y_i . x'|| >= c_seq for every processed i and every x' in x
    CertifiedReal c_badA;
    long k = 0;
    Rational theta;
    int depth = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> entries; // matrix entry specs, row-major
    int n = 1;
    int m = 1;
    std::vector<std::size_t> rows;    // processed family rows
    std::vector<std::size_t> indices; // their positions in the source sequence
    std::vector<IntVec> ys;
    std::vector<std::size_t> path; // node index at each level, root first
};

/// Lower end of ||y . x'|| over the sup-norm box, exact.
inline Rational box_distance_lower(const IntVec& y, const Box& b)
{
    Rational v = 0;
    for (std::size_t i = 0; i < y.size(); ++i) v += Rational(Integer(static_cast<long>(y[i]))) * b.center[i];
    Rational lo = dist_to_int(v) - b.half * Rational(l1_norm(y));
    return lo > 0 ? lo : Rational(0);
}

inline PointCertificate extract_point(const SurvivorTree& t)
{
    if (t.levels.size() != static_cast<std::size_t>(t.depth) + 1 || t.levels.back().empty())
        throw ContractViolation("tree has no leaf at the final depth");
    PointCertificate c;
    c.k = t.k;
    c.theta = t.theta;
    c.depth = t.depth;
    c.n = t.support.n;
    c.x = t.box(t.depth, 0);
    c.path.assign(t.depth + 1, 0);
    for (int lvl = t.depth; lvl > 0; --lvl) c.path[lvl - 1] = t.levels[lvl][c.path[lvl]].parent;
    c.rows = processed_rows(t);
    const bool none = c.rows.empty();
    if (none)
        for (std::size_t i = 0; i < t.family.rows.size(); ++i) c.rows.push_back(i);
    if (c.rows.empty()) throw ContractViolation("family has no rows");
    bool first = true;
    for (auto r : c.rows) {
        const auto& row = t.family.rows[r];
        c.indices.push_back(row.index);
        c.ys.push_back(row.y);
        Rational lo = box_distance_lower(row.y, c.x);
        if (first || lo < c.c_seq) c.c_seq = lo;
        first = false;
    }
    if (c.c_seq <= 0 && !none) throw CertificateFailure("a processed hyperplane meets the final box");
    if (c.c_seq <= 0) throw CertificateFailure("the chosen box meets a hyperplane of the family");
    return c;
}

// ----------------------------------------------------------------- audit

struct LevelBounds {
    int level = 0;
    std::size_t upsilon = 0;
    bool upsilon_ok = true;     // (9n)^(upsilon-1) <= n k^2
    std::vector<std::uint64_t> omega_bound;
    bool omega_ok = true;
    bool half_rule = true; // pruned <= children / 2
    double kappa1 = 0;
    double kappa2 = 0;
    bool unique_hyperplane = true;
};

struct AuditReport {
    bool lacunary = false;
    double upsilon_bound = 0; // 1 + log(sqrt(n) k) / log sqrt(9n), display only
    std::vector<LevelBounds> levels;
    double kappa1 = 0;
    double kappa2 = 0; // max over levels
    double kappa_fit = 0; // max omega / k^(delta - alpha)
    bool upsilon_ok = true;
    bool omega_ok = true;
    bool regime = true; // kappa2 < kappa1
    bool half_rule = true;
};

namespace detail {

/// Bound on the children one hyperplane neighbourhood can meet, by packing.
inline std::uint64_t omega_packing_bound(const Support& s, long k, int level, const ResonantRow& row)
{
    const int n = s.n;
    const Rational h = node_half(k, level); // child node half-side
    Rational spacing;
    long line;
    if (s.kind == SupportKind::cube) {
        spacing = 4 * h;
        line = k / 2;
    } else {
        spacing = 2 * h;
        line = k;
    }
    std::int64_t big = 0;
    for (auto v : row.y) big = std::max<std::int64_t>(big, v < 0 ? -v : v);
    const Rational yj(Integer(static_cast<long>(big)));
    // X = 2 * 2h|y|_2 / (|y_j| spacing), compared through its square
    Rational x2 = Rational(16) * h * h * Rational(row.beta2) / (yj * yj * spacing * spacing);
    Integer fl = floor_of(x2), root;
    mpz_sqrt(root.get_mpz_t(), fl.get_mpz_t());
    Integer f1 = floor_of(Rational(2) * h * Rational(row.l1) / (yj * spacing));
    Integer per_line = std::max(root, f1) + 1;
    Integer lines = pow_int(Integer(line), static_cast<unsigned long>(n - 1));
    Integer total = per_line * lines;
    return total.fits_ulong_p() ? total.get_ui() : ~std::uint64_t{0};
}

} // namespace detail

inline AuditReport audit_bounds(const SurvivorTree& t, double alpha_hat = -1)
{
    AuditReport rep;
    const auto& s = t.support;
    const int n = s.n;
    const double kd = std::pow(static_cast<double>(t.k), s.delta.to_double());
    if (alpha_hat < 0) alpha_hat = s.kind == SupportKind::cube ? 1.0 : s.delta.to_double();
    rep.lacunary = t.family.lacunary;
    rep.upsilon_bound = 1 + std::log(std::sqrt(static_cast<double>(n)) * t.k) / std::log(std::sqrt(9.0 * n));
    const Integer cap = Integer(n) * Integer(t.k) * Integer(t.k);
    std::uint64_t omega_top = 0;
    for (const auto& a : t.audit) {
        LevelBounds b;
        b.level = a.level;
        b.upsilon = a.bin.size();
        if (b.upsilon >= 1) b.upsilon_ok = pow_int(Integer(9 * n), b.upsilon - 1) <= cap;
        for (std::size_t r = 0; r < a.bin.size(); ++r) {
            auto bound = detail::omega_packing_bound(s, t.k, a.level, t.family.rows[a.bin[r]]);
            b.omega_bound.push_back(bound);
            b.omega_ok = b.omega_ok && a.omega_max[r] <= bound;
            omega_top = std::max(omega_top, a.omega_max[r]);
        }
        b.half_rule = 2 * a.pruned <= a.children;
        b.kappa1 = static_cast<double>(a.children_per_node) / kd;
        b.kappa2 = static_cast<double>(a.pruned_max_per_node) / kd;
        b.unique_hyperplane = a.hyperplanes_per_node_max <= 1;
        rep.upsilon_ok = rep.upsilon_ok && b.upsilon_ok;
        rep.omega_ok = rep.omega_ok && b.omega_ok;
        rep.half_rule = rep.half_rule && b.half_rule;
        rep.kappa1 = b.kappa1;
        rep.kappa2 = std::max(rep.kappa2, b.kappa2);
        rep.levels.push_back(std::move(b));
    }
    rep.regime = rep.kappa2 < rep.kappa1;
    rep.kappa_fit = static_cast<double>(omega_top) / std::pow(static_cast<double>(t.k), s.delta.to_double() - alpha_hat);
    return rep;
}

// ------------------------------------------------------- box dimension

struct BoxDimension {
    double estimate = 0;
    std::vector<double> counts; // survivors per level, extrapolated past the budget
};

inline BoxDimension box_dimension(const SurvivorTree& t)
{
    if (t.depth < 3) throw ContractViolation("box_dimension needs depth >= 3");
    BoxDimension out;
    out.counts.push_back(1);
    for (const auto& a : t.audit) out.counts.push_back(a.survivors_estimated);
    std::vector<double> xs, ys;
    const double lk = std::log(static_cast<double>(t.k));
    for (std::size_t m = 0; m < out.counts.size(); ++m) {
        xs.push_back(static_cast<double>(m) * lk);
        ys.push_back(std::log(out.counts[m]));
    }
    double slope = 0, icept = 0, err = 0;
    detail::least_squares(xs, ys, slope, icept, err);
    out.estimate = slope;
    return out;
}

// ----------------------------------------------------------- choosing k

/// Smallest support-compatible k >= 16.
inline long initial_k(const Support& s)
{
    if (s.kind == SupportKind::cube) return 16;
    long k = s.base;
    while (k < 16) k *= s.base;
    return k;
}

inline long next_k(const Support& s, long k) { return s.kind == SupportKind::cube ? 2 * k : k * s.base; }

/// Grows k until a depth-3 trial tree survives.
inline long adaptive_k(const ResonantFamily& family, const Support& s, const TreeOptions& opts = {}, int tries = 8)
{
    long k = initial_k(s);
    for (int i = 0; i < tries; ++i, k = next_k(s, k)) {
        try {
            build_tree(family, s, k, 3, opts);
            return k;
        } catch (const Extinction&) {
        }
    }
    throw Extinction(3);
}

} // namespace badapprox
