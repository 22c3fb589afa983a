// badapprox: command-line driver.
//
// Exit status: 0 on success, 1 when a certified check fails, 2 on usage,
// configuration or module errors.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "badapprox/badapprox.hpp"

namespace fs = std::filesystem;
using namespace badapprox;

namespace {

struct Flags {
    std::string config_file;
    std::string k_policy;
};

// flags shared by the pipeline subcommands; they override a --config file
void add_run_flags(CLI::App* app, RunConfig& cfg, Flags& fl)
{
    app->add_option("--config", fl.config_file, "run configuration (JSON)");
    app->add_option("--matrix", cfg.matrix_file, "matrix spec file");
    app->add_option("--support", cfg.support_file, "support spec file or preset (cube1, cube2, cantor, carpet)");
    app->add_option("--k", fl.k_policy, "branching parameter, or 'adaptive'");
    app->add_option("--depth", cfg.depth, "tree depth");
    app->add_option("--shell-bound", cfg.shell_bound, "largest shell for best approximations");
    app->add_option("--qmax", cfg.qmax, "largest |q| for the margin scan");
    app->add_option("--replay-bound", cfg.replay_bound, "largest |q| for the inclusion chain");
    app->add_option("--precision-ceiling", cfg.precision_ceiling, "precision ceiling in bits");
    app->add_option("--seed", cfg.seed, "seed for sampling");
    app->add_option("--out", cfg.output_dir, "output directory");
    app->add_option("--node-budget", cfg.node_budget, "stored nodes per level");
    app->add_option("--threads", cfg.threads, "worker threads");
    app->add_option("--samples", cfg.samples, "estimator samples");
}

// merges: defaults < config file < explicit flags
RunConfig resolve(const CLI::App* app, const RunConfig& flags, const Flags& fl)
{
    RunConfig cfg;
    if (!fl.config_file.empty()) {
        cfg = config_from_json(read_json_file(fl.config_file));
        // relative input paths in a config file resolve against its directory
        const fs::path base = fs::path(fl.config_file).parent_path();
        for (auto* p : {&cfg.matrix_file, &cfg.support_file})
            if (!p->empty() && fs::path(*p).is_relative() && !fs::exists(*p) && fs::exists(base / *p))
                *p = (base / *p).string();
    }
    auto given = [&](const char* name) { return app->get_option(name)->count() > 0; };
    if (given("--matrix")) cfg.matrix_file = flags.matrix_file;
    if (given("--support")) cfg.support_file = flags.support_file;
    if (given("--depth")) cfg.depth = flags.depth;
    if (given("--shell-bound")) cfg.shell_bound = flags.shell_bound;
    if (given("--qmax")) cfg.qmax = flags.qmax;
    if (given("--replay-bound")) cfg.replay_bound = flags.replay_bound;
    if (given("--precision-ceiling")) cfg.precision_ceiling = flags.precision_ceiling;
    if (given("--seed")) cfg.seed = flags.seed;
    if (given("--out")) cfg.output_dir = flags.output_dir;
    if (given("--node-budget")) cfg.node_budget = flags.node_budget;
    if (given("--threads")) cfg.threads = flags.threads;
    if (given("--samples")) cfg.samples = flags.samples;
    if (given("--k")) {
        if (fl.k_policy == "adaptive")
            cfg.k = 0;
        else
            try {
                cfg.k = std::stol(fl.k_policy);
            } catch (const std::exception&) {
                throw ContractViolation("--k must be an integer or 'adaptive'");
            }
    }
    return cfg;
}

MatrixSpec load_matrix(const RunConfig& cfg) { return parse_matrix(read_json_file(cfg.matrix_file)); }

BestApproxSeq base_sequence(const RunConfig& cfg, const MatrixSpec& spec)
{
    BestApproxOptions bo;
    bo.ceiling = cfg.precision_ceiling;
    bo.threads = cfg.threads;
    return compute_best_approx(spec.form(), cfg.shell_bound, bo);
}

int cmd_best_approx(const RunConfig& cfg)
{
    validate(cfg);
    auto spec = load_matrix(cfg);
    auto seq = base_sequence(cfg, spec);
    auto dir = seq.size() >= 2 ? check_dirichlet(seq, ExponentPolicy::dirichlet, cfg.precision_ceiling)
                               : std::vector<DirichletVerdict>{};
    Json doc{{"tool", {{"name", "badapprox"}, {"version", tool_version}}},
             {"config", to_json(cfg)},
             {"matrix", to_json(spec)},
             {"best_approx", best_approx_json(seq, dir)}};
    write_json_file(fs::path(cfg.output_dir) / "best_approx.json", doc);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        std::cout << i << "  |y| = " << seq.norm(i) << "  ||A^T y|| ~ " << seq.items[i].r.to_double();
        if (i < dir.size()) std::cout << (dir[i].holds ? "" : "  dirichlet FAILS");
        std::cout << "\n";
    }
    bool ok = doc["best_approx"]["dirichlet_all"].get<bool>();
    return ok ? 0 : 1;
}

int cmd_lacunary(const RunConfig& cfg)
{
    validate(cfg);
    auto spec = load_matrix(cfg);
    auto seq = base_sequence(cfg, spec);
    auto phi = extract_bl(seq);
    Json doc{{"tool", {{"name", "badapprox"}, {"version", tool_version}}},
             {"config", to_json(cfg)},
             {"matrix", to_json(spec)},
             {"lacunary", lacunary_json(phi)}};
    write_json_file(fs::path(cfg.output_dir) / "lacunary.json", doc);
    for (std::size_t i = 0; i < phi.size(); ++i)
        std::cout << "phi(" << i << ") = " << phi.phi[i] << "  |y| = " << phi.norm(i) << "\n";
    if (phi.size() >= 2) std::cout << "min ratio ~ " << check_lacunary(phi).to_double() << "\n";
    return verify_bl(phi) ? 0 : 1;
}

int cmd_construct(const RunConfig& cfg)
{
    validate(cfg);
    auto spec = load_matrix(cfg);
    auto sup = load_support(cfg.support_file);
    auto res = run_construct(cfg, spec, sup, &std::cerr);
    const fs::path out(cfg.output_dir);
    write_json_file(out / "report.json", res.report);
    write_json_file(out / "tree.json", survivors_json(res.tree));
    write_text_file(out / "survivors.csv", survivors_csv(res.tree));
    write_text_file(out / "margin.csv", margin_csv(res.margin));
    std::cout << render_summary(res.report);
    return res.ok ? 0 : 1;
}

int cmd_verify(const std::string& path)
{
    auto report = read_json_file(path);
    auto v = verify_report(report, &std::cerr);
    std::cout << v.summary.dump(2) << "\n";
    return 0;
}

int cmd_estimate(const RunConfig& cfg, std::size_t decay_samples)
{
    validate(cfg, false);
    auto sup = load_support(cfg.support_file);
    auto a = estimate_ahlfors(sup, cfg.samples, cfg.seed);
    auto d = estimate_decay(sup, decay_samples, cfg.seed);
    auto doc = estimate_json(sup, a, d);
    doc["config"] = to_json(cfg);
    const fs::path out(cfg.output_dir);
    write_json_file(out / "estimate.json", doc);
    write_text_file(out / "regularity.csv", ahlfors_csv(a));
    write_text_file(out / "decay.csv", decay_csv(d));
    std::cout << "delta      " << sup.delta.to_double() << (sup.delta.exact() ? " (exact)" : "") << "\n";
    std::cout << "delta_hat  " << a.delta_hat << " +- " << a.delta_err << "\n";
    std::cout << "a_hat      " << a.a_hat << "\n";
    std::cout << "b_hat      " << a.b_hat << "\n";
    std::cout << "alpha_hat  " << d.alpha_hat << "\n";
    std::cout << "C_hat      " << d.C_hat << "\n";
    std::cout << "delta > n - 1: " << (sup.delta_above_codim ? "yes" : "no") << "\n";
    return 0;
}

int cmd_report(const std::string& path, const std::string& out)
{
    auto text = render_summary(read_json_file(path));
    if (!out.empty()) write_text_file(out, text);
    std::cout << text;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Construct and certify twisted badly approximable points"};
    app.require_subcommand(1);

    RunConfig flags;
    Flags fl;
    auto* ba = app.add_subcommand("best-approx", "best approximation sequence of a matrix");
    add_run_flags(ba, flags, fl);
    auto* lac = app.add_subcommand("lacunary", "lacunary subsequence and its certificates");
    add_run_flags(lac, flags, fl);
    auto* con = app.add_subcommand("construct", "full pipeline: point, certificate, report");
    add_run_flags(con, flags, fl);
    auto* est = app.add_subcommand("estimate", "regularity and decay estimates of a support");
    add_run_flags(est, flags, fl);
    std::size_t decay_samples = 1000;
    est->add_option("--decay-samples", decay_samples, "samples for the decay fit");

    std::string report_path, summary_out;
    auto* ver = app.add_subcommand("verify", "re-validate a stored certificate");
    ver->add_option("report", report_path, "report.json from construct")->required();
    auto* rep = app.add_subcommand("report", "human-readable summary of a report");
    rep->add_option("report", report_path, "report.json from construct")->required();
    rep->add_option("--out", summary_out, "also write the summary here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ba) return cmd_best_approx(resolve(ba, flags, fl));
        if (*lac) return cmd_lacunary(resolve(lac, flags, fl));
        if (*con) return cmd_construct(resolve(con, flags, fl));
        if (*est) return cmd_estimate(resolve(est, flags, fl), decay_samples);
        if (*ver) return cmd_verify(report_path);
        if (*rep) return cmd_report(report_path, summary_out);
    } catch (const CertificateFailure& e) {
        std::cerr << "CertificateFailure: " << e.what() << "\n";
        return 1;
    } catch (const RankDeficientError& e) {
        std::cerr << "RankDeficient: " << e.what() << "\n";
        return 2;
    } catch (const Undecided& e) {
        std::cerr << "Undecided: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
