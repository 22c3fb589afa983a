#include <catch_amalgamated.hpp>

#include <cmath>

#include "badapprox/verifier.hpp"

using namespace badapprox;

namespace {

const EntrySpec golden = EntrySpec::parse("const:golden");

LinearForm golden_form() { return LinearForm(1, 1, {golden}); }

double brute_margin(double a, double x, long Q, bool both_signs)
{
    double best = 1e9;
    for (long q = both_signs ? -Q : 1; q <= Q; ++q) {
        if (q == 0) continue;
        long double v = static_cast<long double>(q) * a - x;
        long double d = std::fabs(v - std::round(v));
        best = std::min<double>(best, static_cast<double>(d * std::labs(q)));
    }
    return best;
}

Rational approx(double v) { return ratio(Integer(static_cast<long>(std::llround(v * 1e15))), Integer(1000000000000000L)); }

} // namespace

TEST_CASE("bad_A_margin")
{
    auto g = golden_form();
    auto rep = bad_A_margin(g, std::vector<Rational>{Rational(0)}, 100000);
    CHECK(rep.margin.lo() > 0);
    double phi = (1 + std::sqrt(5.0)) / 2;
    CHECK(rep.margin.to_double() == Catch::Approx(brute_margin(phi, 0, 100000, true)).epsilon(1e-9));
    CHECK(rep.shell_minima.size() == 100000);
    for (std::size_t s = 1; s < rep.shell_minima.size(); ++s) CHECK(rep.shell_minima[s] <= rep.shell_minima[s - 1]);

    // x on a resonant point: q = 2 gives 2 * 2/7 - 4/7 = 0
    auto r = LinearForm::rational(1, 1, {Rational(2, 7)});
    auto hit = bad_A_margin(r, std::vector<Rational>{Rational(4, 7)}, 20);
    CHECK(hit.margin.lo() == 0);
    CHECK(std::abs(hit.argmin_q[0]) % 7 == 2);

    auto half = LinearForm::rational(1, 1, {Rational(1, 2)});
    auto h = bad_A_margin(half, std::vector<Rational>{Rational(1, 4)}, 50);
    CHECK(h.margin.lo() == Rational(1, 4));
    CHECK(h.margin.exact());

    // random points in two dimensions agree with a double-precision brute force
    auto two = LinearForm(2, 1, {EntrySpec::parse("const:sqrt2"), EntrySpec::parse("const:sqrt3")});
    std::vector<Rational> x{Rational(1, 3), Rational(2, 5)};
    auto m2 = bad_A_margin(two, x, 2000);
    double best = 1e9;
    for (long q = -2000; q <= 2000; ++q) {
        if (q == 0) continue;
        double d = 0;
        for (double a : {std::sqrt(2.0) * q - 1.0 / 3, std::sqrt(3.0) * q - 0.4}) d = std::max(d, std::fabs(a - std::round(a)));
        best = std::min(best, d * std::sqrt(static_cast<double>(std::labs(q))));
    }
    CHECK(m2.margin.to_double() == Catch::Approx(best).epsilon(1e-7));

    // monotone in Qmax
    auto small = bad_A_margin(two, x, 500);
    CHECK(m2.margin.lo() <= small.margin.lo());
    CHECK_THROWS_AS(bad_A_margin(g, std::vector<Rational>{Rational(0)}, 0), ContractViolation);
}

TEST_CASE("bad_seq_margin")
{
    std::vector<IntVec> seq{{1}, {3}, {13}, {55}};
    CHECK(bad_seq_margin(seq, std::vector<Rational>{Rational(0)}).lo() == 0);
    CHECK(bad_seq_margin(seq, std::vector<Rational>{Rational(1, 2)}).lo() == Rational(1, 2));
    Box b{{Rational(1, 2)}, Rational(1, 1000)};
    CHECK(bad_seq_margin(seq, b).lo() == Rational(1, 2) - Rational(11, 200));
    CHECK_THROWS_AS(bad_seq_margin({}, b), ContractViolation);
}

TEST_CASE("inclusion_constant")
{
    auto a = inclusion_constant(Rational(1, 100), 1, 1);
    CHECK(a.exact());
    CHECK(a.lo() == Rational(1, 180000));
    auto b = inclusion_constant(Rational(1, 100), 2, 1);
    CHECK(b.to_double() == Catch::Approx(1.9642e-5).epsilon(1e-4));
    CHECK(b.width() < Rational(1, 1000000000L) / 1000);
    CHECK(inclusion_constant(Rational(1, 200), 2, 1).hi() < b.lo());
    CHECK(provable_inclusion_constant(Rational(1, 100), 1, 1).lo() == Rational(1, 360000));
    CHECK(inclusion_constant(Rational(1, 10), 2, 2).exact());
    CHECK_THROWS_AS(inclusion_constant(Rational(0), 1, 1), ContractViolation);
}

TEST_CASE("replay_inclusion_chain on a hand chain")
{
    auto g = golden_form();
    ChainInput in{{{1}, {3}, {13}, {55}, {4181}}, 0};
    Box x = point_box({Rational(1, 2)});
    Rational c(1, 20);

    auto r = replay_inclusion_chain(g, in, x, c, IntVec{1});
    CHECK(r.window_pow == 360);
    CHECK(r.y == IntVec{55});
    CHECK(r.used == r.window);
    CHECK(r.identity);
    CHECK(r.triv);
    CHECK(r.step10);
    CHECK(r.final);
    CHECK(r.direct >= r.derived);

    // q = 4: window 9 (2/0.05) 4 = 1440 still lands on 55, and 4 ||55 phi|| > c/2
    try {
        replay_inclusion_chain(g, in, x, c, IntVec{4});
        FAIL("expected ChainStepFailed");
    } catch (const ChainStepFailed& e) {
        CHECK(e.step.find("c/2") != std::string::npos);
    }
    CHECK_THROWS_AS(replay_inclusion_chain(g, in, x, c, IntVec{1000}), NoWindow);
    CHECK_THROWS_AS(replay_inclusion_chain(g, in, point_box({Rational(1, 3)}), Rational(1, 2), IntVec{1}), ChainStepFailed);
}

TEST_CASE("engine point end to end")
{
    auto seq = compute_best_approx(golden_form(), 100000000);
    auto phi = extract_bl(seq);
    auto t = build_tree(make_family(phi), make_cube(1), 16, 7);
    auto leaves = reverify_leaves(t);
    CHECK(leaves.failures == 0);
    CHECK(leaves.rows > 0);

    auto cert = extract_point(t);
    CHECK(bad_seq_margin(cert.ys, cert.x).lo() >= cert.c_seq);
    auto K = inclusion_constant(cert.c_seq, 1, 1);
    auto rep = bad_A_margin(golden_form(), cert.x, 10000);
    CHECK(rep.margin.lo() >= K.hi());

    ChainInput in{cert.ys, 0};
    std::size_t last = cert.rows.back();
    if (last + 1 < t.family.rows.size()) in.next_norm = inf_norm(t.family.rows[last + 1].y);
    std::size_t ok = 0;
    for (long q = -1000; q <= 1000; ++q) {
        if (q == 0) continue;
        auto r = replay_inclusion_chain(golden_form(), in, cert.x, cert.c_seq, IntVec{q});
        ok += r.final;
    }
    CHECK(ok == 2000);
}

TEST_CASE("kim proxy")
{
    // q = 1 gives 1 * ||phi|| = 0.381966..., below the liminf 1/sqrt(5)
    auto p = kim_liminf_proxy(golden, Rational(0), 100000);
    double phi = (1 + std::sqrt(5.0)) / 2;
    CHECK(p.to_double() == Catch::Approx(brute_margin(phi, 0, 100000, false)).epsilon(1e-9));
    CHECK(p.lo() > Rational(9549, 25000));

    // x = alpha: q = 1 lands within the rational approximation error
    Rational xa = golden.value(256).midpoint();
    CHECK(kim_liminf_proxy(golden, xa, 1000).hi() < Rational(1, 1000000000));

    auto r = kim_liminf_proxy(golden, Rational(3, 10), 100000);
    CHECK(r.to_double() == Catch::Approx(brute_margin(phi, 0.3, 100000, false)).epsilon(1e-4));
}

TEST_CASE("classical constants")
{
    auto mk = markoff_estimate(golden, 1000000);
    CHECK(std::abs(mk.to_double() - 0.447214) < 1e-3);
    CHECK(mk.lo() >= Rational(447, 1000));

    auto c0 = khintchine_C(CertifiedReal(Rational(0)));
    CHECK(c0.exact());
    CHECK(c0.lo() == Rational(1, 4));
    CHECK(khintchine_C(CertifiedReal(Rational(44721, 100000))).to_double() == Catch::Approx(0.11180).epsilon(1e-3));
    CHECK_THROWS_AS(khintchine_C(CertifiedReal(Rational(3, 5))), ContractViolation);
}

TEST_CASE("count_solutions")
{
    auto law = Law::hurwitz(Rational(1, 100));
    std::uint64_t prev = 0;
    for (std::int64_t Q : {1000, 10000, 100000}) {
        auto c = count_solutions(golden, Rational(3, 10), law, Q);
        CHECK(c > prev);
        prev = c;
    }
    // Minkowski: ||q alpha - x|| < 1/(4q) for x = 0 counts every convergent past the first few
    auto mk = count_solutions(golden, Rational(0), Law::khintchine(Rational(1, 4)), 100000);
    double phi = (1 + std::sqrt(5.0)) / 2;
    std::uint64_t brute = 0;
    for (long q = 1; q <= 100000; ++q) {
        long double v = q * static_cast<long double>(phi);
        if (std::fabs(v - std::round(v)) < 0.25L / q) ++brute;
    }
    CHECK(mk == brute);

    auto t = parse_psi_table("# q psi\n1 1/10\n100 1/1000\n");
    CHECK(t(50).lo() == Rational(1, 10));
    CHECK(t(100).lo() == Rational(1, 1000));
    CHECK(count_solutions(golden, Rational(0), t, 50) ==
          count_solutions(golden, Rational(0), Law::khintchine(Rational(0)), 1) + [&] {
              std::uint64_t n = 0;
              for (long q = 1; q <= 50; ++q) {
                  long double v = q * static_cast<long double>(phi);
                  if (std::fabs(v - std::round(v)) < 0.1L) ++n;
              }
              return n;
          }());
    CHECK_THROWS_AS(parse_psi_table("7\n"), ParseError);
}

TEST_CASE("degenerate points")
{
    Rational x = golden.value(256).midpoint() * 2 - 1;
    auto d = detect_degenerate(golden, x);
    REQUIRE(d);
    CHECK(d->s == 2);
    CHECK(d->t == -1);
    CHECK_FALSE(detect_degenerate(golden, approx(0.123456789)));
}
