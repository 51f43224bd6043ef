#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pflab/errors.hpp"
#include "pflab/runner.hpp"

namespace {

using namespace pflab;

// 0 ok, 1 assertion failure, 2 bad input, 3 numerical failure
int report(const RunManifest& m) {
    for (const Assertion& a : m.assertions)
        if (!a.ok) fmt::print(stderr, "FAIL {}: {}\n", a.name, a.detail);
    fmt::print("{} {} ({} assertions)\n", m.ok() ? "ok" : "FAILED", m.run_dir.string(), m.assertions.size());
    return m.ok() ? 0 : 1;
}

ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) throw ParseError(fmt::format("cannot read config '{}'", path));
    std::stringstream ss;
    ss << is.rdbuf();
    const std::filesystem::path p(path);
    return parse_config_string(ss.str(), p.parent_path().empty() ? "." : p.parent_path(), overrides);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-field experiment runner"};
    app.require_subcommand(1);

    std::string config, run_dir, trace, axis;
    std::vector<std::string> sets;
    bool force = false, analyze_after = false;
    AnalyzeOverrides ov;
    DeGiorgiLemmaArgs dg;
    double alpha = 1.0, zeta = 1.0;

    auto* sim = app.add_subcommand("simulate", "run the dynamics and persist the trajectory");
    sim->add_option("config", config, "INI config")->required()->check(CLI::ExistingFile);
    sim->add_option("--set", sets, "override section.key=value");
    sim->add_flag("--force", force, "replace an existing run directory");

    auto* eq = app.add_subcommand("equilibrium", "solve the stationary problem from the configured seeds");
    eq->add_option("config", config, "INI config")->required()->check(CLI::ExistingFile);
    eq->add_option("--set", sets, "override section.key=value");
    eq->add_flag("--force", force, "replace an existing run directory");

    auto* an = app.add_subcommand("analyze", "analysis battery on a simulate output");
    an->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    an->add_option("--M", ov.M, "good-time thresholds")->delimiter(',');
    an->add_option("--delta", ov.delta, "level-set thresholds")->delimiter(',');

    auto* sw = app.add_subcommand("sweep", "one run per value of a config key");
    sw->add_option("config", config, "INI config")->required()->check(CLI::ExistingFile);
    sw->add_option("--axis", axis, "section.key=v1,v2,...")->required();
    sw->add_flag("--analyze", analyze_after, "analyze each run");

    auto* lem = app.add_subcommand("lemmas", "standalone lemma checks");
    lem->require_subcommand(1);
    auto* ld = lem->add_subcommand("degiorgi", "geometric recursion threshold and bounds");
    ld->add_option("--C", dg.C)->required();
    ld->add_option("--b", dg.b)->required();
    ld->add_option("--eps", dg.eps)->required();
    ld->add_option("--y0", dg.y0)->required();
    ld->add_option("--n", dg.n, "iterations");
    auto* li = lem->add_subcommand("integrability", "right-tail integrability of a trace");
    li->add_option("trace", trace, "CSV t,z[,mask]")->required()->check(CLI::ExistingFile);
    li->add_option("--alpha", alpha, "exponent alpha~")->required();
    li->add_option("--zeta", zeta, "constant zeta")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // usage errors share the config-error status
    }

    try {
        if (*sim) return report(cmd_simulate(load(config, sets), force));
        if (*eq) return report(cmd_equilibrium(load(config, sets), force));
        if (*an) return report(cmd_analyze(run_dir, ov));
        if (*sw) {
            int rc = 0;
            for (const RunManifest& m : cmd_sweep(config, axis, analyze_after)) rc = std::max(rc, report(m));
            return rc;
        }
        if (*ld) {
            std::cout << cmd_lemmas_degiorgi(dg) << "\n";
            return 0;
        }
        if (*li) {
            bool holds = false;
            std::cout << cmd_lemmas_integrability(trace, alpha, zeta, &holds) << "\n";
            return holds ? 0 : 1;
        }
    } catch (const ConditionNotMet& e) {
        fmt::print(stderr, "condition not met: {}\n", e.what());
        return 1;
    } catch (const ParseError& e) {
        fmt::print(stderr, "parse error: {}\n", e.what());
        return 2;
    } catch (const ValidationError& e) {
        fmt::print(stderr, "invalid input: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 3;
    }
    return 0;
}
