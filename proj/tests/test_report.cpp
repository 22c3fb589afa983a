#include <catch_amalgamated.hpp>

#include "badapprox/report.hpp"

using namespace badapprox;

#ifndef GOLDEN_DIR
#define GOLDEN_DIR "tests/golden"
#endif

namespace {

std::string golden(const char* name) { return std::string(GOLDEN_DIR) + "/" + name; }

const ConstructResult& golden_run()
{
    static ConstructResult r = [] {
        RunConfig cfg;
        cfg.matrix_file = golden("golden_matrix.json");
        cfg.depth = 5;
        cfg.shell_bound = 10000000;
        cfg.qmax = 2000;
        cfg.replay_bound = 300;
        return run_construct(cfg, parse_matrix(read_json_file(cfg.matrix_file)), make_cube(1));
    }();
    return r;
}

} // namespace

TEST_CASE("matrix specs round-trip")
{
    auto j = read_json_file(golden("rational_matrix.json"));
    auto s = parse_matrix(j);
    CHECK(s.n == 2);
    CHECK(s.entries[1].rational() == Rational(2, 7));
    auto back = parse_matrix(to_json(s));
    CHECK(back.entries == s.entries);

    auto c = parse_matrix(read_json_file(golden("sqrt2_sqrt3_matrix.json")));
    CHECK(c.entries[0].to_string() == "const:sqrt2:128");
    CHECK(parse_matrix(to_json(c)).entries == c.entries);

    // a long rational survives bit for bit
    Json big{{"n", 1}, {"m", 1}, {"entries", {"123456789012345678901234567890/987654321098765432109876543211"}}};
    CHECK(to_json(parse_matrix(big))["entries"][0] == big["entries"][0]);

    CHECK_THROWS_AS(parse_matrix(Json{{"n", 2}, {"m", 1}, {"entries", {"1/2"}}}), ParseError);
    CHECK_THROWS_AS(parse_matrix(Json{{"n", 1}, {"entries", {"1/2"}}}), ParseError);
    CHECK_THROWS_AS(parse_matrix(Json{{"n", 1}, {"m", 1}, {"entries", {"const:nope"}}}), ParseError);
}

TEST_CASE("support specs")
{
    auto cantor = parse_support(read_json_file(golden("cantor_support.json")));
    CHECK(cantor.map_count() == 2);
    CHECK(cantor.delta.lo() == make_cantor().delta.lo());
    auto again = parse_support(to_json(cantor));
    CHECK(again.digits == cantor.digits);
    CHECK(load_support(golden("carpet_support.json")).map_count() == 8);
    CHECK(load_support(golden("cube2_support.json")).n == 2);
    CHECK(load_support("cube1").n == 1);
    CHECK_THROWS_AS(parse_support(Json{{"kind", "sphere"}}), ParseError);
    CHECK_THROWS_AS(load_support("nowhere"), ParseError);
}

TEST_CASE("run config")
{
    auto cfg = config_from_json(read_json_file(golden("golden_run.json")));
    CHECK(cfg.k == 0);
    CHECK(cfg.depth == 6);
    CHECK(cfg.shell_bound == 100000000);
    CHECK(to_json(config_from_json(to_json(cfg))) == to_json(cfg));

    RunConfig bad;
    bad.matrix_file = golden("golden_matrix.json");
    bad.depth = 0;
    CHECK_THROWS_AS(validate(bad), ContractViolation);
    bad.depth = 3;
    bad.k = 1;
    CHECK_THROWS_AS(validate(bad), ContractViolation);
    bad.k = 16;
    CHECK_NOTHROW(validate(bad));
    bad.matrix_file = "missing.json";
    CHECK_THROWS_AS(validate(bad), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json{{"k_policy", "sometimes"}}), ParseError);
}

TEST_CASE("construct report")
{
    const auto& r = golden_run();
    REQUIRE(r.ok);
    const auto& rep = r.report;
    CHECK(rep["status"] == "certified");
    CHECK(rep["tool"]["version"] == tool_version);
    CHECK(rep["config"]["seed"] == 1);
    CHECK(rep["precision"]["ceiling"].get<unsigned>() >= 64);
    CHECK(parse_rational(rep["certificate"]["c_seq"].get<std::string>()) > 0);
    CHECK(rep["verification"]["replay"]["certified"] == 600);

    // every certified number is a rational string
    CHECK(rep["certificate"]["c_badA"]["lo"].is_string());
    CHECK(rep["verification"]["bad_A_margin"]["margin"]["lo"].is_string());

    CHECK(survivors_csv(r.tree).rfind("level,children,pruned,survivors,stored,survivors_estimated\n0,1,0,1,1,1\n", 0) == 0);
    CHECK(margin_csv(r.margin).rfind("shell,running_min\n1,", 0) == 0);
    CHECK(render_summary(rep).find("status      certified") != std::string::npos);
    CHECK(survivors_json(r.tree)["levels"].size() == 6);
}

TEST_CASE("identical configs give identical bytes")
{
    RunConfig cfg;
    cfg.matrix_file = golden("golden_matrix.json");
    cfg.depth = 4;
    cfg.shell_bound = 1000000;
    cfg.qmax = 500;
    cfg.replay_bound = 50;
    auto spec = parse_matrix(read_json_file(cfg.matrix_file));
    auto a = run_construct(cfg, spec, make_cantor());
    auto b = run_construct(cfg, spec, make_cantor());
    CHECK(a.report.dump(2) == b.report.dump(2));
}

TEST_CASE("verify_report")
{
    const auto& r = golden_run();
    CHECK(verify_report(r.report).summary["status"] == "verified");

    Json tampered = r.report;
    tampered["certificate"]["x"]["center"][0] = "1/4";
    CHECK_THROWS_AS(verify_report(tampered), CertificateFailure);

    Json inflated = r.report;
    Rational c = parse_rational(inflated["certificate"]["c_seq"].get<std::string>());
    inflated["certificate"]["c_seq"] = to_string(c * 2);
    CHECK_THROWS_AS(verify_report(inflated), CertificateFailure);

    Json wrongK = r.report;
    wrongK["certificate"]["c_badA"]["hi"] = "1/1000";
    CHECK_THROWS_AS(verify_report(wrongK), CertificateFailure);

    Json broken = r.report;
    broken["certificate"].erase("ys");
    CHECK_THROWS_AS(verify_report(broken), ParseError);

    // the stored golden report still verifies, and its tampered twin does not
    CHECK(verify_report(read_json_file(golden("golden_report.json"))).summary["status"] == "verified");
    CHECK_THROWS_AS(verify_report(read_json_file(golden("tampered_report.json"))), CertificateFailure);
}

TEST_CASE("estimate tables")
{
    auto s = make_cantor();
    auto a = estimate_ahlfors(s, 500, 3);
    auto d = estimate_decay(s, 200, 3);
    auto j = estimate_json(s, a, d);
    CHECK(j["seed"] == 3);
    CHECK(j["samples"] == 500);
    CHECK(j["display"]["delta_hat"].get<double>() == a.delta_hat);
    CHECK(ahlfors_csv(a).rfind("radius,measure\n", 0) == 0);
    CHECK(decay_csv(d).rfind("log_ratio,max_fraction,count\n", 0) == 0);
}
