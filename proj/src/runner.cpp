#include "pflab/runner.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pflab/analysis.hpp"
#include "pflab/errors.hpp"
#include "pflab/field_io.hpp"
#include "pflab/stationary.hpp"

namespace pflab {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string now_utc() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                    std::chrono::system_clock::now())));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw Error(fmt::format("cannot write '{}'", path.string()));
    os << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(fmt::format("cannot read '{}'", path.string()));
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void prepare_dir(const fs::path& dir, bool overwrite) {
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!overwrite)
            throw ValidationError(fmt::format("output directory '{}' already exists (use --force)", dir.string()));
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

json manifest_json(const RunManifest& m) {
    json a = json::array();
    for (const Assertion& x : m.assertions) a.push_back({{"name", x.name}, {"ok", x.ok}, {"detail", x.detail}});
    return {{"schema", kRunSchema},     {"command", m.command},   {"code_version", PFLAB_VERSION},
            {"config_digest", m.config_digest}, {"started", m.started}, {"finished", m.finished},
            {"files", m.files},         {"assertions", a},        {"ok", m.ok()}};
}

RunManifest manifest_from_json(const json& j, const fs::path& run_dir) {
    RunManifest m;
    m.run_dir = run_dir;
    m.command = j.value("command", "");
    m.config_digest = j.value("config_digest", "");
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.files = j.value("files", std::vector<std::string>{});
    for (const json& a : j.value("assertions", json::array()))
        m.assertions.push_back({a.value("name", ""), a.value("ok", false), a.value("detail", "")});
    return m;
}

void write_manifest(RunManifest& m) {
    m.finished = now_utc();
    if (std::find(m.files.begin(), m.files.end(), "manifest.json") == m.files.end()) m.files.push_back("manifest.json");
    write_text(m.run_dir / "manifest.json", manifest_json(m).dump(2) + "\n");
}

void merge_assertions(std::vector<Assertion>& into, const std::vector<Assertion>& add) {
    for (const Assertion& a : add) {
        auto it = std::find_if(into.begin(), into.end(), [&](const Assertion& b) { return b.name == a.name; });
        if (it != into.end())
            *it = a;
        else
            into.push_back(a);
    }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

bool RunManifest::ok() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.ok; });
}

fs::path output_root(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("PFLAB_OUTPUT_ROOT"); env && *env) return fs::path(env);
    return fs::path(cfg.output_dir);
}

// ---------------------------------------------------------------------------
// Diagnostics CSV

static const char* kColumns = "t,mass,energy,dissipation,grad_mu_l2,mu_fluct_l2,phi_min,phi_max,sep_margin,dt,newton_iters";

void write_diagnostics_csv(const fs::path& path, const std::vector<Sample>& samples) {
    std::ofstream os(path);
    if (!os) throw Error(fmt::format("cannot write '{}'", path.string()));
    os << kColumns << "\n";
    for (const Sample& s : samples)
        os << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", s.t,
                          s.mass, s.energy, s.dissipation, s.grad_mu_l2, s.mu_fluct_l2, s.phi_min, s.phi_max,
                          s.sep_margin, s.dt, s.newton_iters);
}

std::vector<Sample> read_diagnostics_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(fmt::format("cannot read '{}'", path.string()));
    std::string line;
    std::getline(is, line);
    if (line != kColumns) throw ParseError(fmt::format("{}: unexpected header '{}'", path.string(), line));
    std::vector<Sample> out;
    for (int no = 2; std::getline(is, line); ++no) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError(fmt::format("{}:{}: bad value '{}'", path.string(), no, cell));
            }
        }
        if (v.size() != 11) throw ParseError(fmt::format("{}:{}: expected 11 columns", path.string(), no));
        Sample s;
        s.t = v[0];
        s.mass = v[1];
        s.energy = v[2];
        s.dissipation = v[3];
        s.grad_mu_l2 = v[4];
        s.mu_fluct_l2 = v[5];
        s.phi_min = v[6];
        s.phi_max = v[7];
        s.sep_margin = v[8];
        s.dt = v[9];
        s.newton_iters = static_cast<int>(v[10]);
        out.push_back(s);
    }
    return out;
}

std::vector<Assertion> check_trajectory(const Trajectory& traj) {
    const auto& s = traj.samples;
    double drift = 0.0, step_drift = 0.0, worst_energy = -INFINITY, worst_cumulative = -INFINITY;
    bool bounds = true, finite = true;
    double cumulative = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        drift = std::max(drift, std::abs(s[k].mass - s[0].mass));
        bounds = bounds && s[k].phi_min > -1.0 && s[k].phi_max < 1.0;
        finite = finite && std::isfinite(s[k].energy) && std::isfinite(s[k].mass) && std::isfinite(s[k].phi_min) &&
                 std::isfinite(s[k].phi_max) && std::isfinite(s[k].dissipation);
        if (k == 0) continue;
        step_drift = std::max(step_drift, std::abs(s[k].mass - s[k - 1].mass));
        worst_energy = std::max(worst_energy, s[k].energy + s[k].dt * s[k].dissipation - s[k - 1].energy);
        cumulative += s[k].dt * s[k].dissipation;
        worst_cumulative =
            std::max(worst_cumulative, s[k].energy + cumulative - s[0].energy - static_cast<double>(k) * traj.info.tol_E);
    }
    std::vector<Assertion> out;
    out.push_back({"mass_conservation", drift <= 1e-10, fmt::format("max drift {:.3e}", drift)});
    out.push_back({"mass_per_step", step_drift <= 1e-14, fmt::format("max per-step drift {:.3e}", step_drift)});
    out.push_back({"energy_inequality", s.size() < 2 || worst_energy <= traj.info.tol_E,
                   fmt::format("max E+ + dt D - E = {:.3e}", worst_energy)});
    out.push_back({"energy_cumulative", s.size() < 2 || worst_cumulative <= 0.0,
                   fmt::format("max excess {:.3e}", worst_cumulative)});
    out.push_back({"strict_bounds", bounds, bounds ? "" : "phi reached +-1"});
    out.push_back({"finite", finite, finite ? "" : "non-finite diagnostics"});
    out.push_back({"complete", traj.complete, traj.failure});
    return out;
}

// ---------------------------------------------------------------------------
// simulate

RunManifest cmd_simulate(const ExperimentConfig& cfg, bool overwrite) {
    RunManifest man;
    man.command = "simulate";
    man.started = now_utc();
    man.config_digest = config_digest(cfg);
    man.run_dir = output_root(cfg) / cfg.name;
    prepare_dir(man.run_dir, overwrite);
    write_text(man.run_dir / "config.ini", emit_config(cfg));
    man.files.push_back("config.ini");

    const Model model(cfg.model, cfg.grid);
    const Field phi0 = initial_field(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const Trajectory traj = run(model, phi0, cfg.t_max, cfg.stepper, cfg.initial.seed);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_diagnostics_csv(man.run_dir / "diagnostics.csv", traj.samples);
    man.files.push_back("diagnostics.csv");
    fs::create_directories(man.run_dir / "snapshots");
    std::string index = "step,t,file\n";
    for (const Snapshot& sn : traj.snapshots) {
        const std::string name = fmt::format("snap_{}.dat", sn.step);
        write_field(man.run_dir / "snapshots" / name, sn.phi);
        man.files.push_back("snapshots/" + name);
        index += fmt::format("{},{:.17g},{}\n", sn.step, sn.t, name);
    }
    write_text(man.run_dir / "snapshots" / "index.csv", index);
    man.files.push_back("snapshots/index.csv");

    const Sample& last = traj.samples.back();
    json summary = {{"schema", kRunSchema},
                    {"config_digest", man.config_digest},
                    {"model_digest", traj.info.model_digest},
                    {"preset", traj.info.preset},
                    {"seed", traj.info.seed},
                    {"wall_time_s", wall},
                    {"t_end", last.t},
                    {"accepted", traj.counters.accepted},
                    {"rejected_newton", traj.counters.rejected_newton},
                    {"rejected_bounds", traj.counters.rejected_bounds},
                    {"rejected_energy", traj.counters.rejected_energy},
                    {"complete", traj.complete},
                    {"reached_steady_state", traj.reached_steady_state},
                    {"failure", traj.failure},
                    {"final",
                     {{"energy", last.energy},
                      {"mass", last.mass},
                      {"dissipation", last.dissipation},
                      {"grad_mu_l2", last.grad_mu_l2},
                      {"mu_fluct_l2", last.mu_fluct_l2},
                      {"sep_margin", last.sep_margin}}}};
    write_text(man.run_dir / "summary.json", summary.dump(2) + "\n");
    man.files.push_back("summary.json");

    man.assertions = check_trajectory(traj);
    write_manifest(man);
    return man;
}

Trajectory load_trajectory(const fs::path& run_dir, const Model& model) {
    Trajectory traj;
    traj.grid = model.grid();
    traj.samples = read_diagnostics_csv(run_dir / "diagnostics.csv");
    if (traj.samples.empty()) throw InsufficientSnapshots("run directory has no diagnostics");

    const json summary = json::parse(read_text(run_dir / "summary.json"));
    const ExperimentConfig cfg = parse_config(run_dir / "config.ini");
    traj.info = trajectory_info(model, cfg.stepper, summary.value("seed", std::uint64_t{0}));
    traj.complete = summary.value("complete", true);
    traj.reached_steady_state = summary.value("reached_steady_state", false);
    traj.failure = summary.value("failure", "");
    traj.counters.accepted = summary.value("accepted", std::int64_t{0});

    std::istringstream index(read_text(run_dir / "snapshots" / "index.csv"));
    std::string line;
    std::getline(index, line);
    while (std::getline(index, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string step, t, file;
        std::getline(ss, step, ',');
        std::getline(ss, t, ',');
        std::getline(ss, file, ',');
        Field phi = read_field(run_dir / "snapshots" / file);
        if (phi.grid() != model.grid()) throw ShapeMismatch("snapshot grid differs from the run's grid");
        traj.snapshots.push_back({std::stoll(step), std::stod(t), std::move(phi)});
    }
    if (traj.snapshots.empty()) throw InsufficientSnapshots("run directory has no snapshots");
    return traj;
}

// ---------------------------------------------------------------------------
// analyze

RunManifest cmd_analyze(const fs::path& run_dir, const AnalyzeOverrides& ov) {
    if (!fs::exists(run_dir / "manifest.json"))
        throw ValidationError(fmt::format("'{}' is not a completed run directory", run_dir.string()));
    RunManifest man = manifest_from_json(json::parse(read_text(run_dir / "manifest.json")), run_dir);
    const std::string started = now_utc();

    const ExperimentConfig cfg = parse_config(run_dir / "config.ini");
    const AnalysisSpec& an = cfg.analysis;
    const Model model(cfg.model, cfg.grid);
    const Trajectory traj = load_trajectory(run_dir, model);
    const std::vector<double> Ms = ov.M.empty() ? an.M : ov.M;
    const std::vector<double> deltas = ov.delta.empty() ? an.delta : ov.delta;
    if (deltas.empty()) throw ValidationError("analyze: need at least one delta");

    std::vector<Assertion> asserts = check_trajectory(traj);
    json report;

    // good times
    json gt = json::array();
    for (double M : Ms) {
        try {
            const GoodTimeSet g = classify_good_times(traj, M, an.T);
            gt.push_back({{"M", M},
                          {"T", an.T},
                          {"bad_measure", g.bad_measure},
                          {"bound", g.bound},
                          {"literal_bound", g.literal_bound},
                          {"ok", g.ok}});
            asserts.push_back({fmt::format("good_time_bound_M={}", M), true,
                               fmt::format("{:.6e} <= {:.6e}", g.bad_measure, g.bound)});
        } catch (const BoundViolation& e) {
            gt.push_back({{"M", M}, {"T", an.T}, {"ok", false}, {"error", e.what()}});
            asserts.push_back({fmt::format("good_time_bound_M={}", M), false, e.what()});
        }
    }
    report["good_times"] = gt;

    // level sets and separation
    std::vector<LevelSetReport> levels;
    for (double d : deltas) levels.push_back(level_set_series(traj, d, an.trailing_fraction));
    {
        std::string csv = "t";
        for (double d : deltas) csv += fmt::format(",measure_delta={}", d);
        csv += "\n";
        for (std::size_t j = 0; j < levels[0].t.size(); ++j) {
            csv += fmt::format("{:.17g}", levels[0].t[j]);
            for (const LevelSetReport& l : levels) csv += fmt::format(",{:.17g}", l.measure[j]);
            csv += "\n";
        }
        write_text(run_dir / "levelset.csv", csv);
    }
    const LevelSetReport& sep = levels[0];
    report["separation"] = {{"delta_star", sep.delta_star},
                            {"T_star", sep.T_star},
                            {"window_start", sep.window_start},
                            {"separated", sep.separated}};

    // De Giorgi on the trailing window, at half the detected separation level
    {
        const double T = an.degiorgi_T > 0.0 ? an.degiorgi_T : traj.snapshots.back().t;
        const double tau = an.degiorgi_tau > 0.0 ? an.degiorgi_tau : T / 6.0;
        const double delta = sep.separated ? std::min(0.49, 0.5 * sep.delta_star) : deltas[0];
        json dg = {{"delta", delta}, {"tau", tau}, {"T", T}};
        try {
            const DeGiorgiIterates up = degiorgi_from_trajectory(traj, delta, tau, T, an.degiorgi_n, +1);
            const DeGiorgiIterates dn = degiorgi_from_trajectory(traj, delta, tau, T, an.degiorgi_n, -1);
            std::vector<double> y;
            std::string csv = "n,k_n,t_start,y_plus,y_minus\n";
            for (std::size_t n = 0; n < up.y.size(); ++n) {
                y.push_back(up.y[n] + dn.y[n]);
                csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", n, up.k[n], up.t[n], up.y[n], dn.y[n]);
            }
            write_text(run_dir / "degiorgi.csv", csv);
            dg["y"] = y;
            dg["y_plus"] = up.y;
            dg["y_minus"] = dn.y;
            dg["decays_to_zero"] = up.decays_to_zero && dn.decays_to_zero;
        } catch (const Error& e) {
            dg["error"] = e.what();
            write_text(run_dir / "degiorgi.csv", "n,k_n,t_start,y_plus,y_minus\n");
        }
        report["degiorgi"] = dg;
    }

    // Lojasiewicz fit over the good times of the largest M
    {
        json lj;
        try {
            const GoodTimeSet g = classify_good_times(traj, *std::max_element(Ms.begin(), Ms.end()), an.T);
            LojasiewiczOptions lo;
            lo.window_fraction = an.loj_window;
            if (an.loj_gap_ceiling > 0.0) lo.gap_ceiling = an.loj_gap_ceiling;
            const LojasiewiczFit f = lojasiewicz_fit(traj, g, lo);
            lj = {{"theta", f.theta},           {"C", f.C},
                  {"fit_r2", f.fit_r2},         {"semilog_r2", f.semilog_r2},
                  {"slope", f.slope},           {"decay_rate", f.decay_rate},
                  {"E_inf", f.E_inf},           {"samples", f.used.size()},
                  {"clipped", f.clipped}};
        } catch (const Error& e) {
            lj = {{"theta", nullptr}, {"C", nullptr}, {"fit_r2", nullptr}, {"E_inf", nullptr}, {"error", e.what()}};
        }
        report["lojasiewicz"] = lj;
    }

    // omega-limit
    {
        json om;
        try {
            OmegaLimitOptions oo;
            oo.n_reps = an.omega_reps;
            oo.tol = an.omega_tol;
            oo.trailing_fraction = an.trailing_fraction;
            const OmegaLimitEstimate est = omega_limit_estimate(traj, nullptr, &model, oo);
            om = {{"dispersion", est.dispersion},
                  {"dispersion_hminus1", est.dispersion_hminus1},
                  {"singleton", est.singleton},
                  {"rep_times", est.rep_times}};
            if (est.nearest) {
                om["nearest_eq"] = {{"distance", est.nearest_distance},
                                    {"residual", est.nearest->residual_l2},
                                    {"mu_inf", est.nearest->mu_inf},
                                    {"delta", est.nearest->delta}};
            } else {
                om["nearest_eq"] = nullptr;
                om["polish_error"] = est.polish_error;
            }
        } catch (const Error& e) {
            om = {{"dispersion", nullptr}, {"singleton", false}, {"nearest_eq", nullptr}, {"error", e.what()}};
        }
        report["omega"] = om;
    }

    write_text(run_dir / "analysis.json", report.dump(2) + "\n");
    for (const char* f : {"analysis.json", "levelset.csv", "degiorgi.csv"})
        if (std::find(man.files.begin(), man.files.end(), f) == man.files.end()) man.files.push_back(f);
    merge_assertions(man.assertions, asserts);
    man.command = man.command.find("analyze") == std::string::npos ? man.command + "+analyze" : man.command;
    if (man.started.empty()) man.started = started;
    write_manifest(man);
    return man;
}

// ---------------------------------------------------------------------------
// equilibrium

RunManifest cmd_equilibrium(const ExperimentConfig& cfg, bool overwrite) {
    RunManifest man;
    man.command = "equilibrium";
    man.started = now_utc();
    man.config_digest = config_digest(cfg);
    man.run_dir = output_root(cfg) / cfg.name;
    prepare_dir(man.run_dir, overwrite);
    write_text(man.run_dir / "config.ini", emit_config(cfg));
    man.files.push_back("config.ini");
    fs::create_directories(man.run_dir / "equilibria");

    const Model model(cfg.model, cfg.grid);
    const EquilibriumSpec& es = cfg.equilibrium;
    const double k = es.k ? *es.k : cfg.initial.mean;

    std::vector<Seed> seeds;
    for (const std::string& s : es.seeds) {
        if (s == "constant") seeds.push_back(constant_seed(cfg.grid, k));
        if (s == "tanh") seeds.push_back(tanh_seed(cfg.grid, es.tanh_positions, es.tanh_width, es.tanh_amplitude));
        if (s == "file") seeds.push_back({"file:" + es.file, read_field(es.file)});
    }

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const std::string tag = fmt::format("eq_{}", i);
        try {
            EquilibriumOptions eo;
            eo.tol = es.tol;
            eo.max_iter = es.max_iter;
            eo.seed_id = seeds[i].id;
            const EquilibriumState e = solve_equilibrium(model, k, seeds[i].phi, eo);
            const SeparationReport sr = separation_bound(model, e);
            const Field mu = chemical_potential(model, e.phi);
            const double mult = std::abs(mu.mean() - e.mu_inf);
            const double mass = std::abs(e.phi.mean() - k);
            const double fp = std::max(fixed_point_defect(model, e.phi, 1e-4, cfg.stepper),
                                       fixed_point_defect(model, e.phi, 1e-2, cfg.stepper));

            write_field(man.run_dir / "equilibria" / (tag + ".dat"), e.phi);
            json side = {{"mu_inf", e.mu_inf},       {"residual", e.residual_l2}, {"delta", e.delta},
                         {"k", e.k},                 {"seed_id", e.seed_id},      {"newton_iters", e.newton_iters},
                         {"energy", energy(model, e.phi)}, {"fixed_point_defect", fp}};
            if (sr.has_gradient_bound)
                side["gradient_bound"] = {{"grad_l2", sr.grad_l2}, {"bound", sr.grad_bound},
                                          {"holds", sr.gradient_bound_holds}};
            write_text(man.run_dir / "equilibria" / (tag + ".json"), side.dump(2) + "\n");
            man.files.push_back("equilibria/" + tag + ".dat");
            man.files.push_back("equilibria/" + tag + ".json");

            man.assertions.push_back({tag + ".residual", e.residual_l2 <= es.tol, fmt::format("{:.3e}", e.residual_l2)});
            man.assertions.push_back({tag + ".separation", e.delta > 0.0, fmt::format("delta {:.6g}", e.delta)});
            man.assertions.push_back({tag + ".mass", mass <= 1e-12, fmt::format("{:.3e}", mass)});
            man.assertions.push_back({tag + ".multiplier", mult <= 1e-10, fmt::format("{:.3e}", mult)});
            man.assertions.push_back({tag + ".fixed_point", fp <= 1e-8, fmt::format("{:.3e}", fp)});
            if (sr.has_gradient_bound)
                man.assertions.push_back({tag + ".gradient_bound", sr.gradient_bound_holds,
                                          fmt::format("{:.6g} <= {:.6g}", sr.grad_l2, sr.grad_bound)});
        } catch (const Error& e) {
            man.assertions.push_back({tag + ".solve", false, fmt::format("{}: {}", seeds[i].id, e.what())});
        }
    }
    write_manifest(man);
    return man;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<RunManifest> cmd_sweep(const fs::path& config_path, const std::string& axis, bool analyze) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw ParseError(fmt::format("axis '{}' is not section.key=v1,v2,...", axis));
    const std::string key = axis.substr(0, eq);
    std::vector<std::string> values;
    {
        std::stringstream ss(axis.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ','))
            if (!v.empty()) values.push_back(v);
    }
    if (values.empty()) throw ParseError("sweep axis has no values");

    std::ifstream is(config_path);
    if (!is) throw ParseError(fmt::format("cannot read config '{}'", config_path.string()));
    std::stringstream text;
    text << is.rdbuf();
    const fs::path base = config_path.parent_path().empty() ? fs::path(".") : config_path.parent_path();
    const ExperimentConfig base_cfg = parse_config_string(text.str(), base);

    std::vector<ExperimentConfig> cfgs;
    std::set<fs::path> dirs;
    for (const std::string& v : values) {
        std::string suffix = key + "=" + v;
        for (char& c : suffix)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '=') c = '_';
        ExperimentConfig c =
            parse_config_string(text.str(), base, {key + "=" + v, "output.name=" + base_cfg.name + "__" + suffix});
        const fs::path dir = output_root(c) / c.name;
        if (!dirs.insert(dir).second || fs::exists(dir))
            throw ValidationError(fmt::format("sweep: output directory collision at '{}'", dir.string()));
        cfgs.push_back(std::move(c));
    }

    std::vector<std::future<RunManifest>> jobs;
    for (const ExperimentConfig& c : cfgs) {
        jobs.push_back(std::async(std::launch::async, [c, analyze] {
            try {
                RunManifest m = cmd_simulate(c, false);
                return analyze ? cmd_analyze(m.run_dir) : m;
            } catch (const std::exception& e) {
                RunManifest m;
                m.command = "simulate";
                m.run_dir = output_root(c) / c.name;
                m.config_digest = config_digest(c);
                m.assertions.push_back({"run", false, e.what()});
                return m;
            }
        }));
    }
    std::vector<RunManifest> out;
    json agg = json::array();
    for (auto& j : jobs) {
        out.push_back(j.get());
        agg.push_back({{"run_dir", out.back().run_dir.string()},
                       {"config_digest", out.back().config_digest},
                       {"ok", out.back().ok()}});
    }
    const fs::path root = output_root(base_cfg);
    fs::create_directories(root);
    write_text(root / (base_cfg.name + "__sweep.json"),
               json{{"schema", kRunSchema}, {"axis", axis}, {"runs", agg}}.dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------------------
// lemmas

std::string cmd_lemmas_degiorgi(const DeGiorgiLemmaArgs& a) {
    const double theta = degiorgi_threshold(a.C, a.b, a.eps);
    json table = json::array();
    for (int n = 0; n <= a.n; ++n)
        table.push_back({{"n", n}, {"bound", degiorgi_predict(a.y0, a.C, a.b, a.eps, n)}});
    return json{{"C", a.C}, {"b", a.b}, {"eps", a.eps}, {"y0", a.y0}, {"threshold", theta}, {"bounds", table}}.dump(2);
}

std::string cmd_lemmas_integrability(const fs::path& trace, double alpha_tilde, double zeta, bool* holds) {
    std::ifstream is(trace);
    if (!is) throw ParseError(fmt::format("cannot read trace '{}'", trace.string()));
    std::vector<double> t, z;
    std::vector<bool> mask;
    std::string line;
    for (int no = 1; std::getline(is, line); ++no) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::vector<std::string> cells;
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (cells.size() < 2 || cells.size() > 3)
            throw ParseError(fmt::format("{}:{}: expected t,z[,mask]", trace.string(), no));
        try {
            const double tv = std::stod(cells[0]);
            const double zv = std::stod(cells[1]);
            t.push_back(tv);
            z.push_back(zv);
            mask.push_back(cells.size() == 3 ? std::stod(cells[2]) != 0.0 : true);
        } catch (const std::invalid_argument&) {
            if (!t.empty()) throw ParseError(fmt::format("{}:{}: bad number", trace.string(), no));
        }
    }
    const IntegrabilityReport r = integrability_check(t, z, alpha_tilde, zeta, mask);
    if (holds) *holds = r.hypothesis_holds;
    return json{{"alpha_tilde", r.alpha_tilde},
                {"zeta", r.zeta},
                {"samples", r.t.size()},
                {"Y", r.Y},
                {"hypothesis_holds", r.hypothesis_holds},
                {"first_violation", r.first_violation ? json(*r.first_violation) : json(nullptr)},
                {"integral", r.integral ? nullable(*r.integral) : json(nullptr)}}
        .dump(2);
}

}  // namespace pflab
