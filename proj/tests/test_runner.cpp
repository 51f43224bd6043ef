#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pflab/errors.hpp"
#include "pflab/runner.hpp"
#include <fmt/format.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <set>

using namespace pflab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path config_dir() {
    const char* d = std::getenv("PFLAB_CONFIG_DIR");
    return d ? fs::path(d) : fs::path(PFLAB_TEST_CONFIG_DIR);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class RunnerTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / fmt_name(info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
        setenv("PFLAB_OUTPUT_ROOT", root_.c_str(), 1);
    }
    void TearDown() override {
        unsetenv("PFLAB_OUTPUT_ROOT");
        fs::remove_all(root_);
    }
    static std::string fmt_name(const std::string& n) { return "pflab_runner_" + n + "_" + std::to_string(::getpid()); }

    // The shipped AC config, shortened.
    ExperimentConfig short_ac(const std::string& name = "ac") const {
        const fs::path p = config_dir() / "ac_1d.ini";
        return parse_config_string(slurp(p), p.parent_path(),
                                   {"time.t_max=2", "grid.nx=32", "output.name=" + name});
    }

    fs::path root_;
};

bool all_ok(const RunManifest& m) {
    for (const Assertion& a : m.assertions)
        if (!a.ok) {
            ADD_FAILURE() << a.name << ": " << a.detail;
            return false;
        }
    return true;
}

}  // namespace

TEST_F(RunnerTest, SimulateWritesEverythingItLists) {
    const RunManifest m = cmd_simulate(short_ac());
    EXPECT_TRUE(all_ok(m));
    EXPECT_TRUE(m.ok());
    const json man = json::parse(slurp(m.run_dir / "manifest.json"));
    EXPECT_EQ(man["schema"], kRunSchema);
    EXPECT_EQ(man["config_digest"].get<std::string>().size(), 64u);
    std::set<std::string> listed;
    for (const auto& f : man["files"]) listed.insert(f.get<std::string>());
    for (const auto& e : fs::recursive_directory_iterator(m.run_dir)) {
        if (!e.is_regular_file()) continue;
        EXPECT_TRUE(listed.count(fs::relative(e.path(), m.run_dir).generic_string()))
            << fs::relative(e.path(), m.run_dir);
    }
    for (const std::string& f : listed) EXPECT_TRUE(fs::exists(m.run_dir / f)) << f;
    const std::string head = slurp(m.run_dir / "diagnostics.csv").substr(0, 40);
    EXPECT_EQ(head.rfind("t,mass,energy,", 0), 0u) << head;
}

TEST_F(RunnerTest, RefusesToOverwrite) {
    const ExperimentConfig c = short_ac();
    cmd_simulate(c);
    EXPECT_THROW(cmd_simulate(c), ValidationError);
    EXPECT_NO_THROW(cmd_simulate(c, true));
}

TEST_F(RunnerTest, RunsAreBitReproducible) {
    const RunManifest a = cmd_simulate(short_ac("a"));
    const RunManifest b = cmd_simulate(short_ac("b"));
    EXPECT_EQ(slurp(a.run_dir / "diagnostics.csv"), slurp(b.run_dir / "diagnostics.csv"));
}

TEST_F(RunnerTest, TrajectoryRoundTrip) {
    const ExperimentConfig c = short_ac();
    const RunManifest m = cmd_simulate(c);
    const Model model(c.model, c.grid);
    const Trajectory direct = run(model, initial_field(c), c.t_max, c.stepper, c.initial.seed);
    const Trajectory loaded = load_trajectory(m.run_dir, model);
    ASSERT_EQ(loaded.samples.size(), direct.samples.size());
    ASSERT_EQ(loaded.snapshots.size(), direct.snapshots.size());
    for (std::size_t k = 0; k < direct.samples.size(); ++k) {
        EXPECT_EQ(loaded.samples[k].t, direct.samples[k].t);
        EXPECT_EQ(loaded.samples[k].energy, direct.samples[k].energy);
    }
    EXPECT_EQ(loaded.snapshots.back().phi.data(), direct.snapshots.back().phi.data());
    EXPECT_TRUE(loaded.complete);
}

TEST_F(RunnerTest, CheckTrajectoryFlagsTampering) {
    const ExperimentConfig c = short_ac();
    const Model model(c.model, c.grid);
    Trajectory t = run(model, initial_field(c), c.t_max, c.stepper, c.initial.seed);
    for (const Assertion& a : check_trajectory(t)) EXPECT_TRUE(a.ok) << a.name;
    t.samples.back().mass += 1e-6;
    bool flagged = false;
    for (const Assertion& a : check_trajectory(t))
        if (a.name.rfind("mass", 0) == 0 && !a.ok) flagged = true;
    EXPECT_TRUE(flagged);
}

TEST_F(RunnerTest, AnalyzeExtendsManifest) {
    const RunManifest m = cmd_simulate(parse_config_string(
        slurp(config_dir() / "ac_1d.ini"), config_dir(), {"time.t_max=20", "grid.nx=32", "output.name=an"}));
    AnalyzeOverrides ov;
    ov.M = {1.0};
    const RunManifest a = cmd_analyze(m.run_dir, ov);
    const json report = json::parse(slurp(m.run_dir / "analysis.json"));
    ASSERT_EQ(report["good_times"].size(), 1u);
    EXPECT_TRUE(report["good_times"][0]["ok"].get<bool>());
    EXPECT_TRUE(fs::exists(m.run_dir / "levelset.csv"));
    EXPECT_TRUE(fs::exists(m.run_dir / "degiorgi.csv"));
    const json man = json::parse(slurp(m.run_dir / "manifest.json"));
    EXPECT_NE(man["command"].get<std::string>().find("analyze"), std::string::npos);
    bool has_good = false;
    for (const auto& x : man["assertions"]) has_good |= x["name"] == "good_time_bound_M=1";
    EXPECT_TRUE(has_good);
    EXPECT_GT(a.assertions.size(), m.assertions.size());
}

TEST_F(RunnerTest, EquilibriumSidecars) {
    const RunManifest m = cmd_equilibrium(short_ac("eq"));
    EXPECT_TRUE(all_ok(m));
    for (const char* tag : {"eq_0", "eq_1"}) {
        const json s = json::parse(slurp(m.run_dir / "equilibria" / (std::string(tag) + ".json")));
        for (const char* key : {"mu_inf", "residual", "delta", "k", "seed_id", "newton_iters", "energy"})
            EXPECT_TRUE(s.contains(key)) << tag << " " << key;
        EXPECT_NEAR(s["k"].get<double>(), 0.1, 1e-15);
        EXPECT_GT(s["delta"].get<double>(), 0.0);
    }
}

TEST_F(RunnerTest, DeGiorgiLemma) {
    DeGiorgiLemmaArgs a{1.0, 2.0, 1.0, 0.25, 4};
    const json j = json::parse(cmd_lemmas_degiorgi(a));
    EXPECT_DOUBLE_EQ(j["threshold"].get<double>(), 0.5);
    ASSERT_EQ(j["bounds"].size(), 5u);
    EXPECT_DOUBLE_EQ(j["bounds"][2]["bound"].get<double>(), 0.125);
    a.y0 = 0.6;
    EXPECT_THROW(cmd_lemmas_degiorgi(a), ConditionNotMet);
}

TEST_F(RunnerTest, IntegrabilityTrace) {
    const fs::path trace = root_ / "trace.csv";
    {
        std::ofstream os(trace);
        os << "t,z\n";
        for (int i = 0; i <= 3000; ++i) os << fmt::format("{:.17g},{:.17g}\n", i * 0.01, std::exp(-i * 0.01));
    }
    bool holds = false;
    const json j = json::parse(cmd_lemmas_integrability(trace, 1.5, 1.0, &holds));
    EXPECT_TRUE(holds);
    EXPECT_NEAR(j["integral"].get<double>(), 1.0, 1e-4);
    EXPECT_THROW(cmd_lemmas_integrability(root_ / "missing.csv", 1.5, 1.0), ParseError);
}

TEST_F(RunnerTest, SweepIsolatesRuns) {
    const fs::path cfg = root_ / "base.ini";
    {
        std::ofstream os(cfg);
        os << slurp(config_dir() / "ac_1d.ini") << "\n";
    }
    std::string text = slurp(cfg);
    text.replace(text.find("t_max = 50"), 10, "t_max = 1");
    text.replace(text.find("nx = 128"), 8, "nx = 32");
    std::ofstream(cfg) << text;

    const auto runs = cmd_sweep(cfg, "model.gamma=0.001,0.002");
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_NE(runs[0].run_dir, runs[1].run_dir);
    EXPECT_NE(runs[0].config_digest, runs[1].config_digest);
    for (const auto& r : runs) EXPECT_TRUE(r.ok());
    EXPECT_TRUE(fs::exists(root_ / "ac_1d__sweep.json"));
    EXPECT_THROW(cmd_sweep(cfg, "model.gamma=0.003,0.003"), ValidationError);
    EXPECT_THROW(cmd_sweep(cfg, "model.gamma=0.001"), ValidationError);  // already exists
    EXPECT_FALSE(fs::exists(root_ / "ac_1d__model.gamma=0.003"));
}

TEST_F(RunnerTest, CliExitCodes) {
    const char* env = std::getenv("PFLAB_CLI");
    const std::string cli = env ? env : PFLAB_TEST_CLI;
    if (!fs::exists(cli)) GTEST_SKIP() << "no CLI at " << cli;
    auto status = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    EXPECT_EQ(status("lemmas degiorgi --C 1 --b 2 --eps 1 --y0 0.25"), 0);
    EXPECT_EQ(status("lemmas degiorgi --C 1 --b 2 --eps 1 --y0 0.6"), 1);
    EXPECT_EQ(status("simulate " + (root_ / "nope.ini").string()), 2);
    const fs::path bad = root_ / "bad.ini";
    std::ofstream(bad) << "[grid]\nnx = 8\nwobble = 1\n";
    EXPECT_EQ(status("simulate " + bad.string()), 2);
    const std::string ok = "simulate " + (config_dir() / "ac_1d.ini").string() +
                           " --set time.t_max=0.5 --set grid.nx=16 --set output.name=cli";
    EXPECT_EQ(status(ok), 0);
    EXPECT_TRUE(fs::exists(root_ / "cli" / "manifest.json"));
    EXPECT_EQ(status(ok), 2);  // run directory exists
    EXPECT_EQ(status(ok + " --force"), 0);
}
