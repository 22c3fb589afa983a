#include <catch_amalgamated.hpp>

#include "badapprox/ktv_engine.hpp"

using namespace badapprox;

namespace {

const PhiSubseq& golden_phi()
{
    static PhiSubseq p = [] {
        auto seq = compute_best_approx(LinearForm(1, 1, {EntrySpec::parse("const:golden")}), 100000000);
        return extract_bl(seq);
    }();
    return p;
}

bool inside(const Box& inner, const Box& outer)
{
    for (std::size_t i = 0; i < inner.center.size(); ++i) {
        if (inner.center[i] - inner.half < outer.center[i] - outer.half) return false;
        if (inner.center[i] + inner.half > outer.center[i] + outer.half) return false;
    }
    return true;
}

bool disjoint(const Box& a, const Box& b)
{
    for (std::size_t i = 0; i < a.center.size(); ++i) {
        Rational g = a.center[i] - b.center[i];
        if (g < 0) g = -g;
        if (g >= a.half + b.half) return true;
    }
    return false;
}

} // namespace

TEST_CASE("bins are exact")
{
    CHECK(bin_level(Integer(1), 16) == 1);
    CHECK(bin_level(Integer(255), 16) == 1);
    CHECK(bin_level(Integer(256), 16) == 2);
    CHECK(bin_level(Integer(65535), 16) == 2);
    CHECK(bin_level(Integer(65536), 16) == 3);
}

TEST_CASE("unpruned trees")
{
    ResonantFamily none;
    auto t = build_tree(none, make_cube(1), 16, 3);
    REQUIRE(t.levels.size() == 4);
    CHECK(t.levels[1].size() == 8);
    CHECK(t.levels[2].size() == 64);
    CHECK(t.audit[2].survivors_estimated == Catch::Approx(512));
    CHECK(box_dimension(t).estimate == Catch::Approx(0.75));

    ResonantFamily none2;
    auto c = build_tree(none2, make_cantor(), 27, 3);
    CHECK(std::abs(box_dimension(c).estimate - std::log(2.0) / std::log(3.0)) < 1e-9);

    auto wide = build_tree(none, make_cube(1), 1L << 20, 3, TreeOptions{256, 1});
    CHECK(std::abs(box_dimension(wide).estimate - 1.0) < 0.05);
    CHECK(wide.truncated());
    CHECK_THROWS_AS(box_dimension(build_tree(none, make_cube(1), 16, 2)), ContractViolation);
}

TEST_CASE("nesting and disjointness")
{
    auto fam = make_family(golden_phi());
    for (const auto& s : {make_cube(1), make_cantor()}) {
        long k = initial_k(s);
        auto t = build_tree(fam, s, k, 3);
        for (int lvl = 1; lvl <= 3; ++lvl) {
            const auto& nodes = t.levels[lvl];
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                Box b = t.box(lvl, i);
                Box parent = t.box(lvl - 1, nodes[i].parent);
                CHECK(inside(b, parent));
                CHECK(b.half == node_half(k, lvl));
                if (i + 1 < nodes.size()) CHECK(disjoint(b, t.box(lvl, i + 1)));
            }
        }
    }
}

TEST_CASE("golden family on cube(1), k = 32, depth 6")
{
    auto fam = make_family(golden_phi());
    auto t = build_tree(fam, make_cube(1), 32, 6);
    for (const auto& a : t.audit) CHECK(a.survivors >= 1);

    // independent re-scan of every stored leaf against every row with |y|_2 < k^D
    Integer limit = pow_int(Integer(32), 12);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < t.levels[6].size(); ++i) {
        Box leaf = t.box(6, i);
        for (const auto& row : fam.rows)
            if (row.beta2 < limit) {
                CHECK(box_distance_lower(row.y, leaf) > 0);
                ++checked;
            }
    }
    CHECK(checked > 0);

    auto cert = extract_point(t);
    CHECK(cert.c_seq > 0);
    CHECK(cert.x.half == node_half(32, 6));
    CHECK(cert.rows == processed_rows(t));
    for (const auto& y : cert.ys) {
        Rational v = Rational(Integer(static_cast<long>(y[0]))) * cert.x.center[0];
        CHECK(dist_to_int(v) >= cert.c_seq);
    }

    auto rep = audit_bounds(t);
    CHECK(rep.lacunary);
    CHECK(rep.upsilon_ok);
    CHECK(rep.omega_ok);
    CHECK(rep.regime);
    for (const auto& lv : rep.levels)
        for (auto b : lv.omega_bound) CHECK(b == 2);
}

TEST_CASE("determinism")
{
    auto fam = make_family(golden_phi());
    auto a = build_tree(fam, make_cube(1), 16, 5);
    auto b = build_tree(fam, make_cube(1), 16, 5);
    REQUIRE(a.levels.size() == b.levels.size());
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
        REQUIRE(a.levels[l].size() == b.levels[l].size());
        for (std::size_t i = 0; i < a.levels[l].size(); ++i) CHECK(a.levels[l][i].num == b.levels[l][i].num);
    }
    auto c = build_tree(fam, make_cube(1), 16, 5, TreeOptions{4096, 3});
    CHECK(extract_point(c).x.center == extract_point(a).x.center);
}

TEST_CASE("extinction and adaptive k")
{
    // k = 2 leaves one child per node, and y = 1 removes it
    auto fam = make_family(1, {IntVec{1}});
    try {
        build_tree(fam, make_cube(1), 2, 2);
        FAIL("expected Extinction");
    } catch (const Extinction& e) {
        CHECK(e.level == 1);
    }
    CHECK(adaptive_k(make_family(golden_phi()), make_cube(1)) == 16);
    CHECK(adaptive_k(make_family(golden_phi()), make_cantor()) == 27);
}

TEST_CASE("audit formulas")
{
    // n = 1, lambda = 3, k = 81: 1 + log 81 / log 3 = 5, and 9^4 = 81^2 sits on the boundary
    SurvivorTree t;
    t.k = 81;
    t.support = make_cube(1);
    CHECK(audit_bounds(t).upsilon_bound == Catch::Approx(5.0));
    CHECK(pow_int(Integer(9), 4) <= Integer(81) * 81);

    // a raw non-lacunary family: every element of the golden sequence
    auto seq = compute_best_approx(LinearForm(1, 1, {EntrySpec::parse("const:golden")}), 100000);
    auto raw = build_tree(make_family(seq), make_cube(1), 16, 3);
    auto rep = audit_bounds(raw);
    CHECK_FALSE(rep.lacunary);
    CHECK_FALSE(rep.upsilon_ok);
}

TEST_CASE("two-dimensional supports")
{
    auto seq = compute_best_approx(LinearForm(2, 1, {EntrySpec::parse("const:sqrt2"), EntrySpec::parse("const:sqrt3")}), 400);
    auto fam = make_family(extract_bl(seq));
    for (const auto& s : {make_cube(2), make_carpet()}) {
        long k = adaptive_k(fam, s);
        auto t = build_tree(fam, s, k, 3);
        auto cert = extract_point(t);
        CHECK(cert.c_seq > 0);
        auto rep = audit_bounds(t);
        INFO(s.name << " k " << k << " kappa2 " << rep.kappa2 << " kappa1 " << rep.kappa1);
        CHECK(rep.upsilon_ok);
        CHECK(rep.omega_ok);
        CHECK(rep.regime);
        for (const auto& y : cert.ys) CHECK(box_distance_lower(y, cert.x) >= cert.c_seq);
    }
}
