#pragma once

// Run configuration, file formats, pipelines and report documents.
//
// Certified numbers are written as rational strings; floats appear only
// under "display" keys. Key order is fixed, so equal runs give equal bytes.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "badapprox/ktv_engine.hpp"
#include "badapprox/verifier.hpp"

namespace badapprox {

inline constexpr const char* tool_version = "0.3.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------- helpers

namespace detail {

inline Json int_vec(const IntVec& v)
{
    Json a = Json::array();
    for (auto x : v) a.push_back(x);
    return a;
}

inline IntVec to_int_vec(const Json& j)
{
    IntVec v;
    for (const auto& x : j) v.push_back(x.get<std::int64_t>());
    return v;
}

inline Json rationals(const std::vector<Rational>& v)
{
    Json a = Json::array();
    for (const auto& x : v) a.push_back(to_string(x));
    return a;
}

inline std::vector<Rational> to_rationals(const Json& j)
{
    std::vector<Rational> v;
    for (const auto& x : j) v.push_back(parse_rational(x.get<std::string>()));
    return v;
}

inline Json interval(const CertifiedReal& x)
{
    return Json{{"lo", to_string(x.lo())}, {"hi", to_string(x.hi())}};
}

inline CertifiedReal to_interval(const Json& j)
{
    return CertifiedReal::enclose(parse_rational(j.at("lo").get<std::string>()),
                                  parse_rational(j.at("hi").get<std::string>()));
}

inline const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field: ") + key);
    return j.at(key);
}

} // namespace detail

inline Json read_json_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open " + p.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

inline void write_json_file(const std::filesystem::path& p, const Json& j) { write_text_file(p, j.dump(2) + "\n"); }

// ---------------------------------------------------------- matrix files

/// {"n": 2, "m": 1, "entries": ["const:sqrt2", "1/3"]}, row-major.
struct MatrixSpec {
    int n = 1;
    int m = 1;
    std::vector<EntrySpec> entries;

    LinearForm form() const { return LinearForm(n, m, entries); }
};

inline MatrixSpec parse_matrix(const Json& j)
{
    MatrixSpec s;
    try {
        s.n = detail::field(j, "n").get<int>();
        s.m = detail::field(j, "m").get<int>();
        for (const auto& e : detail::field(j, "entries")) s.entries.push_back(EntrySpec::parse(e.get<std::string>()));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("matrix spec: ") + e.what());
    }
    if (s.n < 1 || s.m < 1) throw ParseError("matrix spec: n and m must be positive");
    if (s.entries.size() != static_cast<std::size_t>(s.n) * s.m)
        throw ParseError("matrix spec: expected n*m entries");
    return s;
}

inline Json to_json(const MatrixSpec& s)
{
    Json e = Json::array();
    for (const auto& x : s.entries) e.push_back(x.to_string());
    return Json{{"n", s.n}, {"m", s.m}, {"entries", e}};
}

// --------------------------------------------------------- support files

/// {"kind": "cube", "n": 2}, {"kind": "preset", "name": "carpet"} or
/// {"kind": "ifs", "n": 1, "name": "...", "maps": [{"ratio": "1/3", "translation": ["0"]}, ...]}.
inline Support parse_support(const Json& j)
{
    try {
        const auto kind = detail::field(j, "kind").get<std::string>();
        if (kind == "cube") return make_cube(detail::field(j, "n").get<int>());
        if (kind == "preset") return make_support(detail::field(j, "name").get<std::string>());
        if (kind == "ifs") {
            std::vector<SimilarityMap> maps;
            for (const auto& f : detail::field(j, "maps"))
                maps.push_back({parse_rational(detail::field(f, "ratio").get<std::string>()),
                                detail::to_rationals(detail::field(f, "translation"))});
            return make_ifs(detail::field(j, "n").get<int>(), std::move(maps), j.value("name", std::string("ifs")));
        }
        throw ParseError("support spec: unknown kind " + kind);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("support spec: ") + e.what());
    }
}

inline Json to_json(const Support& s)
{
    if (s.kind == SupportKind::cube) return Json{{"kind", "cube"}, {"n", s.n}};
    Json maps = Json::array();
    for (const auto& f : s.maps)
        maps.push_back(Json{{"ratio", to_string(f.ratio)}, {"translation", detail::rationals(f.translation)}});
    return Json{{"kind", "ifs"}, {"n", s.n}, {"name", s.name}, {"maps", maps}};
}

/// A file path, or a preset name (cube1, cube2, cantor, carpet).
inline Support load_support(const std::string& what)
{
    if (std::filesystem::exists(what)) return parse_support(read_json_file(what));
    return make_support(what);
}

// -------------------------------------------------------------- RunConfig

struct RunConfig {
    std::string matrix_file;
    std::string support_file = "cube1";
    long k = 0; // 0: adaptive
    int depth = 6;
    std::int64_t shell_bound = 1000000;
    std::int64_t qmax = 10000;
    std::int64_t replay_bound = 1000;
    unsigned precision_ceiling = precision_ceiling_from_env();
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::size_t node_budget = 4096;
    unsigned threads = 1;
    std::size_t samples = 10000;
};

inline Json to_json(const RunConfig& c)
{
    return Json{{"matrix_file", c.matrix_file},
                {"support_file", c.support_file},
                {"k_policy", c.k == 0 ? Json("adaptive") : Json(c.k)},
                {"depth", c.depth},
                {"shell_bound", c.shell_bound},
                {"qmax", c.qmax},
                {"replay_bound", c.replay_bound},
                {"precision_ceiling", c.precision_ceiling},
                {"seed", c.seed},
                {"output_dir", c.output_dir},
                {"node_budget", c.node_budget},
                {"threads", c.threads},
                {"samples", c.samples}};
}

inline RunConfig config_from_json(const Json& j)
{
    RunConfig c;
    try {
        c.matrix_file = j.value("matrix_file", c.matrix_file);
        c.support_file = j.value("support_file", c.support_file);
        if (j.contains("k_policy")) {
            const auto& k = j.at("k_policy");
            if (k.is_string()) {
                if (k.get<std::string>() != "adaptive") throw ParseError("k_policy must be \"adaptive\" or an integer");
                c.k = 0;
            } else {
                c.k = k.get<long>();
            }
        }
        c.depth = j.value("depth", c.depth);
        c.shell_bound = j.value("shell_bound", c.shell_bound);
        c.qmax = j.value("qmax", c.qmax);
        c.replay_bound = j.value("replay_bound", c.replay_bound);
        c.precision_ceiling = j.value("precision_ceiling", c.precision_ceiling);
        c.seed = j.value("seed", c.seed);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.node_budget = j.value("node_budget", c.node_budget);
        c.threads = j.value("threads", c.threads);
        c.samples = j.value("samples", c.samples);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return c;
}

/// Config errors as ContractViolation; `need_matrix` for the pipelines that read one.
inline void validate(const RunConfig& c, bool need_matrix = true)
{
    if (need_matrix && !std::filesystem::exists(c.matrix_file))
        throw ContractViolation("matrix file not found: " + c.matrix_file);
    if (c.k < 0 || c.k == 1) throw ContractViolation("k must be >= 2 (or adaptive)");
    if (c.depth < 1) throw ContractViolation("depth must be positive");
    if (c.shell_bound < 1 || c.qmax < 1 || c.replay_bound < 1)
        throw ContractViolation("shell_bound, qmax and replay_bound must be positive");
    if (c.precision_ceiling < 64) throw ContractViolation("precision ceiling must be >= 64 bits");
    if (c.node_budget < 1 || c.samples < 1) throw ContractViolation("node_budget and samples must be positive");
}

// ------------------------------------------------------- section writers

inline Json best_approx_json(const BestApproxSeq& seq, const std::vector<DirichletVerdict>& dir)
{
    Json items = Json::array();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        Json it{{"i", i}, {"y", detail::int_vec(seq.y(i))}, {"norm", seq.norm(i)}, {"r", detail::interval(seq.items[i].r)}};
        if (i < dir.size()) it["dirichlet"] = dir[i].holds;
        it["display"] = {{"r", seq.items[i].r.to_double()}};
        items.push_back(it);
    }
    Json ties = Json::array();
    for (const auto& t : seq.ties)
        ties.push_back({{"shell", t.shell}, {"kept", detail::int_vec(t.kept)}, {"dropped", detail::int_vec(t.dropped)}});
    bool all = std::all_of(dir.begin(), dir.end(), [](const DirichletVerdict& v) { return v.holds; });
    return Json{{"shell_bound", seq.shell_bound},
                {"bits", seq.form.bits()},
                {"count", seq.size()},
                {"dirichlet_all", all},
                {"items", items},
                {"ties", ties}};
}

inline Json lacunary_json(const PhiSubseq& p)
{
    Json idx = Json::array(), rows = Json::array(), steps = Json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
        idx.push_back(p.phi[i]);
        if (i < p.rows.size()) rows.push_back(detail::int_vec(p.rows[i]));
    }
    for (const auto& s : p.steps)
        steps.push_back({{"i", s.i},
                         {"growth", {s.growth_lhs.get_str(), s.growth_rhs.get_str()}},
                         {"window", {s.window_lhs.get_str(), s.window_rhs.get_str()}},
                         {"holds", s.holds()}});
    Json out{{"n", p.n}, {"phi", idx}, {"rows", rows}, {"steps", steps}, {"verified", verify_bl(p)}};
    if (p.size() >= 2) {
        auto r = check_lacunary(p);
        out["min_ratio"] = to_string(r.lo());
        out["display"] = {{"min_ratio", r.to_double()}, {"sqrt_9n", std::sqrt(9.0 * p.n)}};
    }
    return out;
}

inline Json tree_json(const SurvivorTree& t, const AuditReport& audit)
{
    Json levels = Json::array();
    for (std::size_t i = 0; i < t.audit.size(); ++i) {
        const auto& a = t.audit[i];
        Json lv{{"level", a.level},
                {"parents", a.parents},
                {"parents_expanded", a.parents_expanded},
                {"children_per_node", a.children_per_node},
                {"children", a.children},
                {"pruned", a.pruned},
                {"survivors", a.survivors},
                {"stored", a.stored},
                {"pruned_max_per_node", a.pruned_max_per_node},
                {"bin", a.bin},
                {"omega_max", a.omega_max}};
        if (i < audit.levels.size()) {
            const auto& b = audit.levels[i];
            lv["upsilon"] = b.upsilon;
            lv["upsilon_ok"] = b.upsilon_ok;
            lv["omega_bound"] = b.omega_bound;
            lv["omega_ok"] = b.omega_ok;
            lv["half_rule"] = b.half_rule;
            lv["unique_hyperplane"] = b.unique_hyperplane;
            lv["display"] = {{"survivors_estimated", a.survivors_estimated}, {"kappa1", b.kappa1}, {"kappa2", b.kappa2}};
        }
        levels.push_back(lv);
    }
    return Json{{"k", t.k},
                {"theta", to_string(t.theta)},
                {"depth", t.depth},
                {"node_budget", t.options.node_budget},
                {"truncated", t.truncated()},
                {"family_rows", t.family.rows.size()},
                {"lacunary", t.family.lacunary},
                {"levels", levels},
                {"audit",
                 {{"upsilon_ok", audit.upsilon_ok},
                  {"omega_ok", audit.omega_ok},
                  {"regime", audit.regime},
                  {"half_rule", audit.half_rule},
                  {"display",
                   {{"upsilon_bound", audit.upsilon_bound},
                    {"kappa1", audit.kappa1},
                    {"kappa2", audit.kappa2},
                    {"kappa_fit", audit.kappa_fit}}}}}};
}

/// Per-level survivor centers, for the tree export file.
inline Json survivors_json(const SurvivorTree& t)
{
    Json levels = Json::array();
    for (int l = 0; l <= t.depth; ++l) {
        Json nodes = Json::array();
        const Integer d = t.denominator(l);
        for (const auto& node : t.levels[l]) {
            Json c = Json::array();
            for (const auto& v : node.num) c.push_back(to_string(ratio(v, d)));
            nodes.push_back({{"center", c}, {"parent", node.parent}});
        }
        levels.push_back({{"level", l}, {"half", to_string(node_half(t.k, l))}, {"nodes", nodes}});
    }
    return Json{{"k", t.k}, {"levels", levels}};
}

inline Json certificate_json(const PointCertificate& c, std::uint64_t next_norm)
{
    Json ys = Json::array();
    for (const auto& y : c.ys) ys.push_back(detail::int_vec(y));
    return Json{{"n", c.n},
                {"m", c.m},
                {"entries", c.entries},
                {"x", {{"center", detail::rationals(c.x.center)}, {"half", to_string(c.x.half)}}},
                {"c_seq", to_string(c.c_seq)},
                {"c_badA", detail::interval(c.c_badA)},
                {"k", c.k},
                {"theta", to_string(c.theta)},
                {"depth", c.depth},
                {"seed", c.seed},
                {"rows", c.rows},
                {"indices", c.indices},
                {"ys", ys},
                {"next_norm", next_norm},
                {"path", c.path},
                {"display", {{"c_seq", c.c_seq.get_d()}, {"c_badA", c.c_badA.to_double()}}}};
}

// ------------------------------------------------------------ chain replay

struct ReplaySummary {
    std::int64_t bound = 0;
    std::uint64_t tested = 0;
    std::uint64_t certified = 0;
    std::uint64_t fallback = 0; // certified by a row before the window
    std::uint64_t no_window = 0;
    std::vector<std::pair<IntVec, std::string>> failures; // first few
    Rational worst_slack; // min over q of derived / target.hi, display only
    bool ok() const { return tested > 0 && certified == tested; }
};

inline ReplaySummary replay_all(const LinearForm& A, const ChainInput& in, const Box& x, const Rational& c,
                                std::int64_t bound, unsigned ceiling)
{
    ReplaySummary out;
    out.bound = bound;
    bool first = true;
    for (std::int64_t s = 1; s <= bound; ++s)
        for_each_in_shell(A.cols(), s, [&](std::span<const std::int64_t> qs) {
            IntVec q(qs.begin(), qs.end());
            ++out.tested;
            try {
                auto r = replay_inclusion_chain(A, in, x, c, q, ceiling);
                ++out.certified;
                if (r.used != r.window) ++out.fallback;
                Rational slack = r.derived / r.target.hi();
                if (first || slack < out.worst_slack) out.worst_slack = slack;
                first = false;
            } catch (const NoWindow& e) {
                ++out.no_window;
                if (out.failures.size() < 8) out.failures.emplace_back(q, e.what());
            } catch (const ChainStepFailed& e) {
                if (out.failures.size() < 8) out.failures.emplace_back(q, e.step);
            }
        });
    return out;
}

inline Json to_json(const ReplaySummary& r)
{
    Json f = Json::array();
    for (const auto& [q, why] : r.failures) f.push_back({{"q", detail::int_vec(q)}, {"step", why}});
    return Json{{"bound", r.bound},
                {"tested", r.tested},
                {"certified", r.certified},
                {"fallback", r.fallback},
                {"no_window", r.no_window},
                {"failures", f},
                {"ok", r.ok()},
                {"display", {{"worst_slack", r.worst_slack.get_d()}}}};
}

// --------------------------------------------------------------- pipeline

struct ConstructResult {
    Json report;
    bool ok = false;
    SurvivorTree tree;
    PointCertificate cert;
    MarginReport margin;
    std::vector<std::string> failed; // names of certified checks that failed
};

inline std::uint64_t next_row_norm(const SurvivorTree& t, const PointCertificate& c)
{
    if (c.rows.empty()) return t.family.rows.empty() ? 0 : inf_norm(t.family.rows.front().y);
    std::size_t last = c.rows.back();
    return last + 1 < t.family.rows.size() ? inf_norm(t.family.rows[last + 1].y) : 0;
}

/// Best approximations, lacunary subsequence, survivor tree, point, re-verification, inclusion.
/// Module errors propagate; failed certified checks are listed and clear `ok`.
inline ConstructResult run_construct(const RunConfig& cfg, const MatrixSpec& spec, const Support& s,
                                     std::ostream* log = nullptr)
{
    auto note = [&](const std::string& msg) {
        if (log) *log << msg << std::endl;
    };
    if (s.n != spec.n) throw ContractViolation("support dimension does not match the matrix rows");
    ConstructResult res;
    const LinearForm A = spec.form();

    note("best approximations to shell " + std::to_string(cfg.shell_bound));
    BestApproxOptions bo;
    bo.ceiling = cfg.precision_ceiling;
    bo.threads = cfg.threads;
    auto seq = compute_best_approx(A, cfg.shell_bound, bo);
    auto dir = seq.size() >= 2 ? check_dirichlet(seq, ExponentPolicy::dirichlet, cfg.precision_ceiling)
                               : std::vector<DirichletVerdict>{};
    auto phi = extract_bl(seq);
    auto family = make_family(phi);

    TreeOptions topt{cfg.node_budget, cfg.threads};
    const long k = cfg.k ? cfg.k : adaptive_k(family, s, topt);
    note("survivor tree, k = " + std::to_string(k) + ", depth " + std::to_string(cfg.depth));
    res.tree = build_tree(family, s, k, cfg.depth, topt);
    const auto audit = audit_bounds(res.tree);

    res.cert = extract_point(res.tree);
    res.cert.seed = cfg.seed;
    res.cert.n = spec.n;
    res.cert.m = spec.m;
    res.cert.entries.clear();
    for (const auto& e : spec.entries) res.cert.entries.push_back(e.to_string());
    res.cert.c_badA = inclusion_constant(res.cert.c_seq, spec.n, spec.m);

    note("re-verification");
    auto leaves = reverify_leaves(res.tree);
    auto seq_margin = bad_seq_margin(res.cert.ys, res.cert.x);
    res.margin = bad_A_margin(A, res.cert.x, cfg.qmax);
    const bool leaves_ok = leaves.failures == 0;
    const bool seq_ok = seq_margin.lo() >= res.cert.c_seq;
    const bool margin_ok = res.margin.margin.lo() >= res.cert.c_badA.hi();

    note("inclusion chain for |q| <= " + std::to_string(cfg.replay_bound));
    const std::uint64_t next = next_row_norm(res.tree, res.cert);
    ChainInput in{res.cert.ys, next};
    auto replay = replay_all(A, in, res.cert.x, res.cert.c_seq, cfg.replay_bound, cfg.precision_ceiling);

    if (!leaves_ok) res.failed.push_back("leaves");
    if (!seq_ok) res.failed.push_back("bad_seq_margin");
    if (!margin_ok) res.failed.push_back("bad_A_margin");
    if (!replay.ok()) res.failed.push_back("inclusion_chain");
    res.ok = res.failed.empty();

    Json verification{
        {"leaves", {{"leaves", leaves.leaves}, {"rows", leaves.rows}, {"failures", leaves.failures},
                    {"min_distance", to_string(leaves.min_distance)}}},
        {"bad_seq_margin", detail::interval(seq_margin)},
        {"bad_seq_ok", seq_ok},
        {"bad_A_margin",
         {{"qmax", cfg.qmax}, {"margin", detail::interval(res.margin.margin)}, {"argmin_q", detail::int_vec(res.margin.argmin_q)}}},
        {"bad_A_ok", margin_ok},
        {"inclusion_constant", detail::interval(res.cert.c_badA)},
        {"provable_inclusion_constant", detail::interval(provable_inclusion_constant(res.cert.c_seq, spec.n, spec.m))},
        {"replay", to_json(replay)},
        {"display", {{"bad_A_margin", res.margin.margin.to_double()}, {"bad_seq_margin", seq_margin.to_double()}}}};

    Json dim;
    if (cfg.depth >= 3) {
        auto bd = box_dimension(res.tree);
        dim = {{"estimate", bd.estimate}, {"counts", bd.counts}};
    }

    Json rep;
    rep["tool"] = {{"name", "badapprox"}, {"version", tool_version}};
    rep["config"] = to_json(cfg);
    rep["precision"] = {{"entry_bits", A.bits()}, {"ceiling", cfg.precision_ceiling}};
    rep["matrix"] = to_json(spec);
    rep["support"] = to_json(s);
    rep["support"]["delta"] = detail::interval(s.delta);
    rep["best_approx"] = best_approx_json(seq, dir);
    rep["lacunary"] = lacunary_json(phi);
    rep["tree"] = tree_json(res.tree, audit);
    rep["certificate"] = certificate_json(res.cert, next);
    rep["verification"] = verification;
    rep["display"] = {{"box_dimension", dim}, {"support_delta", s.delta.to_double()}};
    rep["status"] = res.ok ? "certified" : "failed";
    rep["failed_checks"] = res.failed;
    res.report = std::move(rep);
    return res;
}

// ---------------------------------------------------------------- verify

struct VerifyResult {
    Json summary;
};

/// Re-validates the certificate of a construct report from the report alone.
/// Throws CertificateFailure on the first failing check.
inline VerifyResult verify_report(const Json& report, std::ostream* log = nullptr)
{
    auto note = [&](const std::string& msg) {
        if (log) *log << msg << std::endl;
    };
    const Json& c = detail::field(report, "certificate");
    const Json& cfg = detail::field(report, "config");
    MatrixSpec spec;
    Box x;
    Rational c_seq;
    CertifiedReal stored;
    std::vector<IntVec> ys;
    std::uint64_t next = 0;
    std::int64_t qmax = 0, bound = 0;
    unsigned ceiling = 0;
    try {
        spec = parse_matrix(detail::field(report, "matrix"));
        x.center = detail::to_rationals(c.at("x").at("center"));
        x.half = parse_rational(c.at("x").at("half").get<std::string>());
        c_seq = parse_rational(c.at("c_seq").get<std::string>());
        stored = detail::to_interval(c.at("c_badA"));
        for (const auto& y : c.at("ys")) ys.push_back(detail::to_int_vec(y));
        next = c.at("next_norm").get<std::uint64_t>();
        qmax = cfg.at("qmax").get<std::int64_t>();
        bound = cfg.at("replay_bound").get<std::int64_t>();
        ceiling = cfg.at("precision_ceiling").get<unsigned>();
    } catch (const Json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    if (static_cast<int>(x.center.size()) != spec.n) throw CertificateFailure("point has the wrong dimension");
    for (const auto& y : ys)
        if (static_cast<int>(y.size()) != spec.n) throw CertificateFailure("row has the wrong dimension");
    if (ys.empty()) throw CertificateFailure("certificate has no rows");
    for (const auto& v : x.center)
        if (v - x.half < 0 || v + x.half > 1) throw CertificateFailure("point box leaves the unit cube");
    if (c_seq <= 0) throw CertificateFailure("c_seq is not positive");
    const LinearForm A = spec.form();

    note("bad_seq_margin over " + std::to_string(ys.size()) + " rows");
    auto sm = bad_seq_margin(ys, x);
    if (sm.lo() < c_seq) throw CertificateFailure("bad_seq_margin " + to_string(sm.lo()) + " is below c_seq " + to_string(c_seq));

    auto K = inclusion_constant(c_seq, spec.n, spec.m);
    if (!(K.lo() == stored.lo() && K.hi() == stored.hi()))
        throw CertificateFailure("stored inclusion constant does not match c_seq");

    note("bad_A_margin to Qmax " + std::to_string(qmax));
    auto margin = bad_A_margin(A, x, qmax);
    if (margin.margin.lo() < K.hi()) throw CertificateFailure("bad_A_margin is below the inclusion constant");

    note("inclusion chain for |q| <= " + std::to_string(bound));
    auto replay = replay_all(A, ChainInput{ys, next}, x, c_seq, bound, ceiling);
    if (!replay.ok()) {
        std::string why = replay.failures.empty() ? "no q tested" : replay.failures.front().second;
        throw CertificateFailure("inclusion chain failed for " + std::to_string(replay.tested - replay.certified) +
                                 " q: " + why);
    }
    VerifyResult out;
    out.summary = Json{{"status", "verified"},
                       {"bad_seq_margin", detail::interval(sm)},
                       {"bad_A_margin", detail::interval(margin.margin)},
                       {"inclusion_constant", detail::interval(K)},
                       {"replay", to_json(replay)}};
    return out;
}

// ------------------------------------------------------------- CSV tables

inline std::string survivors_csv(const SurvivorTree& t)
{
    std::ostringstream os;
    os << "level,children,pruned,survivors,stored,survivors_estimated\n";
    os << "0,1,0,1,1,1\n";
    for (const auto& a : t.audit)
        os << a.level << ',' << a.children << ',' << a.pruned << ',' << a.survivors << ',' << a.stored << ','
           << std::setprecision(17) << a.survivors_estimated << '\n';
    return os.str();
}

/// Running minimum of |q|^(m/n) ||Aq - x|| after each shell.
inline std::string margin_csv(const MarginReport& r)
{
    std::ostringstream os;
    os << "shell,running_min\n" << std::setprecision(17);
    for (std::size_t s = 0; s < r.shell_minima.size(); ++s) os << s + 1 << ',' << r.shell_minima[s] << '\n';
    return os.str();
}

inline std::string ahlfors_csv(const AhlforsEstimate& e)
{
    std::ostringstream os;
    os << "radius,measure\n" << std::setprecision(17);
    for (auto [r, mu] : e.points) os << r << ',' << mu << '\n';
    return os.str();
}

inline std::string decay_csv(const DecayEstimate& e)
{
    std::ostringstream os;
    os << "log_ratio,max_fraction,count\n" << std::setprecision(17);
    for (const auto& b : e.bins) os << b.log_ratio << ',' << b.max_fraction << ',' << b.count << '\n';
    return os.str();
}

/// Regularity and decay estimates for one support.
inline Json estimate_json(const Support& s, const AhlforsEstimate& a, const DecayEstimate& d)
{
    return Json{{"support", to_json(s)},
                {"delta", detail::interval(s.delta)},
                {"delta_above_codim", s.delta_above_codim},
                {"seed", a.seed},
                {"samples", a.samples},
                {"display",
                 {{"delta", s.delta.to_double()},
                  {"delta_hat", a.delta_hat},
                  {"delta_err", a.delta_err},
                  {"a_hat", a.a_hat},
                  {"b_hat", a.b_hat},
                  {"alpha_hat", d.alpha_hat},
                  {"C_hat", d.C_hat},
                  {"decay_samples", d.samples}}}};
}

// ---------------------------------------------------------------- summary

/// Plain-text rendering of a construct report.
inline std::string render_summary(const Json& r)
{
    std::ostringstream os;
    const auto& c = r.at("certificate");
    const auto& v = r.at("verification");
    const auto& t = r.at("tree");
    os << "badapprox " << r.at("tool").at("version").get<std::string>() << "\n";
    os << "matrix      " << r.at("matrix").at("n") << "x" << r.at("matrix").at("m") << " " << r.at("matrix").at("entries").dump()
       << "\n";
    const auto& sup = r.at("support");
    os << "support     " << (sup.contains("name") ? sup.at("name").get<std::string>() : "cube" + sup.at("n").dump())
       << ", delta ~ " << r.at("display").at("support_delta").get<double>() << "\n";
    os << "base seq    " << r.at("best_approx").at("count") << " items to shell " << r.at("best_approx").at("shell_bound")
       << ", lacunary " << r.at("lacunary").at("phi").size() << " rows\n";
    os << "tree        k = " << t.at("k") << ", depth " << t.at("depth") << (t.at("truncated").get<bool>() ? " (budgeted)" : "")
       << "\n";
    os << "  level  children    pruned  survivors\n";
    for (const auto& lv : t.at("levels"))
        os << "  " << std::setw(5) << lv.at("level").get<int>() << std::setw(10) << lv.at("children").get<std::uint64_t>()
           << std::setw(10) << lv.at("pruned").get<std::uint64_t>() << std::setw(11)
           << lv.at("survivors").get<std::uint64_t>() << "\n";
    const auto& au = t.at("audit");
    os << "audit       upsilon " << (au.at("upsilon_ok").get<bool>() ? "ok" : "VIOLATED") << ", omega "
       << (au.at("omega_ok").get<bool>() ? "ok" : "VIOLATED") << ", kappa2 < kappa1 "
       << (au.at("regime").get<bool>() ? "yes" : "no") << "\n";
    os << "point       center " << c.at("x").at("center").dump() << " half " << c.at("x").at("half").get<std::string>() << "\n";
    os << "c_seq       " << c.at("c_seq").get<std::string>() << " (~" << c.at("display").at("c_seq").get<double>() << ")\n";
    os << "c(x)        " << c.at("display").at("c_badA").get<double>() << "\n";
    os << "margin      Qmax " << v.at("bad_A_margin").at("qmax") << ": ~" << v.at("display").at("bad_A_margin").get<double>()
       << (v.at("bad_A_ok").get<bool>() ? " >= c(x)" : " BELOW c(x)") << "\n";
    const auto& rp = v.at("replay");
    os << "chain       " << rp.at("certified") << "/" << rp.at("tested") << " q certified (|q| <= " << rp.at("bound") << ")\n";
    os << "status      " << r.at("status").get<std::string>() << "\n";
    return os.str();
}

} // namespace badapprox
