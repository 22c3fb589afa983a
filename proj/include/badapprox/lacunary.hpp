#pragma once

// Lacunary subsequences y_{phi(1)}, y_{phi(2)}, ... of a best-approximation
// sequence with, for i >= 2,
//   |y_{phi(i)}| >= sqrt(9n) |y_{phi(i-1)}|   and   |y_{phi(i-1)+1}| >= |y_{phi(i)}| / 9n.
// Indices are 0-based throughout; phi[0] = 0.

#include <cstdint>
#include <span>
#include <vector>

#include "badapprox/best_approx.hpp"

namespace badapprox {

struct BLStep {
    std::size_t i = 0; // position in phi (>= 1)
    Integer growth_lhs; // |y_phi(i)|^2
    Integer growth_rhs; // 9n |y_phi(i-1)|^2
    Integer window_lhs; // 9n |y_phi(i-1)+1|
    Integer window_rhs; // |y_phi(i)|
    bool holds() const { return growth_lhs >= growth_rhs && window_lhs >= window_rhs; }
};

struct PhiSubseq {
    int n = 1;
    std::vector<std::uint64_t> base_norms; // |y_j| for the whole base sequence
    std::vector<std::size_t> phi;
    std::vector<IntVec> rows; // y_phi(i), empty when built from a norm profile
    std::vector<BLStep> steps;

    std::size_t size() const { return phi.size(); }
    std::uint64_t norm(std::size_t i) const { return base_norms[phi[i]]; }
};

class TruncationTooShort : public Error {
public:
    explicit TruncationTooShort(PhiSubseq best)
        : Error("no certified extension of the subsequence exists within the computed prefix"),
          longest(std::move(best))
    {
    }
    PhiSubseq longest;
};

namespace detail {

inline BLStep bl_step(int n, std::span<const std::uint64_t> norms, std::size_t i, std::size_t prev, std::size_t cur)
{
    const Integer nine_n = 9 * n;
    Integer a(static_cast<unsigned long>(norms[prev]));
    Integer b(static_cast<unsigned long>(norms[cur]));
    Integer succ(static_cast<unsigned long>(norms[prev + 1]));
    return BLStep{i, b * b, nine_n * a * a, nine_n * succ, b};
}

inline void fill_steps(PhiSubseq& p)
{
    p.steps.clear();
    for (std::size_t i = 1; i < p.phi.size(); ++i) p.steps.push_back(bl_step(p.n, p.base_norms, i, p.phi[i - 1], p.phi[i]));
}

} // namespace detail

/// Depth-first search for phi on a profile of sup-norms (strictly increasing).
inline PhiSubseq extract_bl(std::span<const std::uint64_t> norms, int n)
{
    if (norms.empty()) throw ContractViolation("extract_bl needs a nonempty sequence");
    if (n < 1) throw ContractViolation("extract_bl needs n >= 1");
    const std::size_t len = norms.size();
    const Integer nine_n = 9 * n;
    auto sq = [](std::uint64_t v) {
        Integer z(static_cast<unsigned long>(v));
        return Integer(z * z);
    };
    auto reaches = [&](std::size_t a, std::size_t j) { return sq(norms[j]) >= nine_n * sq(norms[a]); };

    std::vector<char> dead(len, 0);
    std::vector<std::size_t> chain{0}, longest{0};

    // candidates for the successor of anchor a, largest first
    auto candidates = [&](std::size_t a) {
        std::vector<std::size_t> out;
        if (a + 1 >= len) return out;
        Integer cap = nine_n * Integer(static_cast<unsigned long>(norms[a + 1]));
        for (std::size_t j = len; j-- > a + 1;)
            if (reaches(a, j) && Integer(static_cast<unsigned long>(norms[j])) <= cap && !dead[j]) out.push_back(j);
        return out;
    };
    auto complete_at = [&](std::size_t a) {
        for (std::size_t j = a + 1; j < len; ++j)
            if (reaches(a, j)) return false;
        return true;
    };

    // explicit stack of (anchor, remaining candidates)
    std::vector<std::vector<std::size_t>> pending{candidates(0)};
    bool found = complete_at(0);
    while (!found && !pending.empty()) {
        auto& top = pending.back();
        if (top.empty()) {
            dead[chain.back()] = 1;
            chain.pop_back();
            pending.pop_back();
            continue;
        }
        std::size_t j = top.front();
        top.erase(top.begin());
        chain.push_back(j);
        if (chain.size() > longest.size()) longest = chain;
        if (complete_at(j)) {
            found = true;
            break;
        }
        pending.push_back(candidates(j));
    }

    PhiSubseq out;
    out.n = n;
    out.base_norms.assign(norms.begin(), norms.end());
    out.phi = found ? chain : longest;
    detail::fill_steps(out);
    if (!found) throw TruncationTooShort(std::move(out));
    return out;
}

inline PhiSubseq extract_bl(const BestApproxSeq& seq)
{
    std::vector<std::uint64_t> norms;
    for (std::size_t i = 0; i < seq.size(); ++i) norms.push_back(seq.norm(i));
    auto attach = [&](PhiSubseq& p) {
        p.rows.clear();
        for (auto j : p.phi) p.rows.push_back(seq.y(j));
    };
    try {
        PhiSubseq p = extract_bl(norms, seq.form.rows());
        attach(p);
        return p;
    } catch (TruncationTooShort& e) {
        attach(e.longest);
        throw;
    }
}

/// Re-checks every step in exact integer arithmetic.
inline bool verify_bl(const PhiSubseq& p)
{
    if (p.phi.empty() || p.phi[0] != 0) return false;
    for (std::size_t i = 1; i < p.phi.size(); ++i) {
        if (p.phi[i] <= p.phi[i - 1] || p.phi[i] >= p.base_norms.size()) return false;
        if (!detail::bl_step(p.n, p.base_norms, i, p.phi[i - 1], p.phi[i]).holds()) return false;
    }
    return true;
}

/// Smallest consecutive ratio |y_phi(i)| / |y_phi(i-1)|, exact; certified >= sqrt(9n).
inline CertifiedReal check_lacunary(const PhiSubseq& p)
{
    if (p.size() < 2) throw ContractViolation("check_lacunary needs at least two elements");
    Rational best;
    for (std::size_t i = 1; i < p.size(); ++i) {
        Rational r = ratio(Integer(static_cast<unsigned long>(p.norm(i))), Integer(static_cast<unsigned long>(p.norm(i - 1))));
        if (i == 1 || r < best) best = r;
    }
    if (best * best < 9 * p.n) throw CertificateFailure("lacunary ratio below sqrt(9n)");
    return CertifiedReal(best);
}

/// Dirichlet verdicts of the base sequence restricted to phi(i) with a successor.
inline std::vector<DirichletVerdict> inherited_dirichlet(const PhiSubseq& p, const std::vector<DirichletVerdict>& base)
{
    std::vector<DirichletVerdict> out;
    for (auto j : p.phi)
        if (j < base.size()) out.push_back(base[j]);
    return out;
}

} // namespace badapprox
