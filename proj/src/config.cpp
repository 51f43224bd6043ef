#include "pflab/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pflab/digest.hpp"
#include "pflab/errors.hpp"
#include "pflab/field_io.hpp"

namespace pflab {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"grid", {"nx", "ny", "lx", "ly", "boundary"}},
        {"potential", {"kind", "theta", "theta0", "guard_eps"}},
        {"mobility", {"kind", "m_star", "coeffs", "average"}},
        {"diffusion", {"kind", "a_star", "coeffs"}},
        {"kernel", {"kind", "scale", "support", "strength"}},
        {"model", {"preset", "alpha", "beta", "gamma", "sigma1", "sigma2", "nonlocal_consistency"}},
        {"initial", {"kind", "mean", "amplitude", "mode", "seed", "file"}},
        {"time",
         {"t_max", "dt_init", "dt_min", "dt_max", "newton_tol", "newton_max_iter", "max_backtracks", "tol_E", "growth",
          "clean_steps", "snapshot_every", "steady_threshold", "steady_dwell", "max_steps"}},
        {"analysis",
         {"M", "T", "delta", "trailing_fraction", "degiorgi_T", "degiorgi_tau", "degiorgi_n", "loj_window",
          "loj_gap_ceiling", "omega_reps", "omega_tol"}},
        {"equilibrium", {"seeds", "k", "tol", "max_iter", "tanh_positions", "tanh_width", "tanh_amplitude", "file"}},
        {"output", {"dir", "name"}},
    };
    return s;
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

// Line number of `key` in `section`, or 0 when not found.
int locate(const std::string& text, const std::string& section, const std::string& key) {
    std::istringstream is(text);
    std::string line, current;
    for (int no = 1; std::getline(is, line); ++no) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[') {
            current = trim(t.substr(1, t.find(']') - 1));
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) return no;
    }
    return 0;
}

class Reader {
public:
    Reader(const pt::ptree& tree, const std::string& text) : tree_(tree), text_(text) {}

    bool has(const std::string& sec, const std::string& key) const {
        auto s = tree_.get_child_optional(sec);
        return s && s->get_child_optional(pt::ptree::path_type(key, '\0'));
    }
    bool has_section(const std::string& sec) const { return static_cast<bool>(tree_.get_child_optional(sec)); }

    std::string str(const std::string& sec, const std::string& key, const std::string& def) const {
        if (!has(sec, key)) return def;
        return trim(tree_.get_child(sec).get<std::string>(pt::ptree::path_type(key, '\0')));
    }

    double num(const std::string& sec, const std::string& key, double def) const {
        if (!has(sec, key)) return def;
        const std::string v = str(sec, key, "");
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw fail(sec, key, fmt::format("'{}' is not a number", v));
        }
    }

    long long integer(const std::string& sec, const std::string& key, long long def) const {
        const double d = num(sec, key, static_cast<double>(def));
        if (d != std::floor(d)) throw fail(sec, key, "expected an integer");
        return static_cast<long long>(d);
    }

    bool boolean(const std::string& sec, const std::string& key, bool def) const {
        if (!has(sec, key)) return def;
        std::string v = str(sec, key, "");
        std::transform(v.begin(), v.end(), v.begin(), ::tolower);
        if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "off" || v == "0" || v == "no") return false;
        throw fail(sec, key, fmt::format("'{}' is not a boolean", v));
    }

    std::vector<std::string> words(const std::string& sec, const std::string& key,
                                   const std::vector<std::string>& def) const {
        if (!has(sec, key)) return def;
        std::vector<std::string> out;
        std::string item;
        std::istringstream is(str(sec, key, ""));
        while (std::getline(is, item, ','))
            if (!trim(item).empty()) out.push_back(trim(item));
        return out;
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key, const std::vector<double>& def) const {
        if (!has(sec, key)) return def;
        std::vector<double> out;
        for (const std::string& w : words(sec, key, {})) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(w, &used));
                if (used != w.size()) throw std::invalid_argument(w);
            } catch (const std::exception&) {
                throw fail(sec, key, fmt::format("'{}' is not a number", w));
            }
        }
        return out;
    }

    ParseError fail(const std::string& sec, const std::string& key, const std::string& what) const {
        const int line = locate(text_, sec, key);
        return ParseError(line > 0 ? fmt::format("line {}: [{}] {}: {}", line, sec, key, what)
                                   : fmt::format("[{}] {}: {}", sec, key, what));
    }

private:
    const pt::ptree& tree_;
    const std::string& text_;
};

void check_keys(const pt::ptree& tree, const std::string& text) {
    for (const auto& [sec, child] : tree) {
        const auto it = schema().find(sec);
        if (child.empty() && !child.data().empty())
            throw ParseError(fmt::format("line {}: key '{}' outside any section", locate(text, "", sec), sec));
        if (it == schema().end()) throw ParseError(fmt::format("unknown section [{}]", sec));
        for (const auto& [key, value] : child) {
            (void)value;
            if (!it->second.count(key)) {
                const int line = locate(text, sec, key);
                throw ParseError(fmt::format("line {}: unknown key '{}' in [{}]", line, key, sec));
            }
        }
    }
}

CoefficientKind coefficient_kind(const Reader& r, const std::string& sec) {
    const std::string k = r.str(sec, "kind", "constant");
    if (k == "constant") return CoefficientKind::Constant;
    if (k == "poly" || k == "polynomial") return CoefficientKind::Polynomial;
    throw r.fail(sec, "kind", fmt::format("'{}' is not constant|poly", k));
}

ExperimentConfig build(const pt::ptree& tree, const std::string& text, const fs::path& base_dir) {
    check_keys(tree, text);
    const Reader r(tree, text);
    ExperimentConfig cfg;

    // grid
    {
        const auto nx = r.integer("grid", "nx", 64);
        const double lx = r.num("grid", "lx", 1.0);
        Boundary bc;
        try {
            bc = boundary_from_string(r.str("grid", "boundary", "neumann"));
        } catch (const Error& e) {
            throw r.fail("grid", "boundary", e.what());
        }
        if (r.has("grid", "ny")) {
            cfg.grid = Grid::rect(static_cast<int>(nx), static_cast<int>(r.integer("grid", "ny", 1)), lx,
                                  r.num("grid", "ly", 1.0), bc);
        } else {
            if (r.has("grid", "ly")) throw r.fail("grid", "ly", "ly needs ny");
            cfg.grid = Grid::line(static_cast<int>(nx), lx, bc);
        }
    }

    // model
    ModelConfig& m = cfg.model;
    std::optional<KernelSpec> kernel;
    if (r.has_section("kernel")) {
        KernelSpec k;
        const std::string kind = r.str("kernel", "kind", "gaussian");
        if (kind == "gaussian")
            k.kind = KernelKind::Gaussian;
        else if (kind == "tophat")
            k.kind = KernelKind::Tophat;
        else
            throw r.fail("kernel", "kind", fmt::format("'{}' is not gaussian|tophat", kind));
        k.scale = r.num("kernel", "scale", k.scale);
        k.support = r.num("kernel", "support", k.support);
        k.strength = r.num("kernel", "strength", k.strength);
        kernel = k;
    }
    const std::string preset_name = r.str("model", "preset", "CUSTOM");
    Preset preset;
    try {
        preset = preset_from_string(preset_name);
    } catch (const Error& e) {
        throw r.fail("model", "preset", e.what());
    }
    switch (preset) {
        case Preset::ChNonlinear: m = ModelConfig::ch_nonlinear(); break;
        case Preset::ConservedAc: m = ModelConfig::conserved_ac(); break;
        case Preset::NonlocalCh:
            if (!kernel) throw ValidationError("model: preset NONLOCAL_CH requires a [kernel] section");
            m = ModelConfig::nonlocal_ch(*kernel);
            break;
        case Preset::Custom: break;
    }
    m.alpha = r.num("model", "alpha", m.alpha);
    m.beta = r.num("model", "beta", m.beta);
    m.gamma = r.num("model", "gamma", m.gamma);
    m.sigma1 = static_cast<int>(r.integer("model", "sigma1", m.sigma1));
    m.sigma2 = static_cast<int>(r.integer("model", "sigma2", m.sigma2));
    m.nonlocal_consistency = r.boolean("model", "nonlocal_consistency", m.nonlocal_consistency);
    m.kernel = kernel;

    const std::string pk = r.str("potential", "kind", "logarithmic");
    if (pk != "logarithmic") throw r.fail("potential", "kind", "only 'logarithmic' can be configured from a file");
    m.potential.theta = r.num("potential", "theta", m.potential.theta);
    m.potential.theta0 = r.num("potential", "theta0", m.potential.theta0);
    m.potential.guard_eps = r.num("potential", "guard_eps", m.potential.guard_eps);

    m.mobility.kind = coefficient_kind(r, "mobility");
    m.mobility.m_star = r.num("mobility", "m_star", m.mobility.m_star);
    m.mobility.coeffs = r.numbers("mobility", "coeffs", {});
    const std::string avg = r.str("mobility", "average", "arithmetic");
    if (avg == "arithmetic")
        m.mobility_average = FaceAverage::Arithmetic;
    else if (avg == "harmonic")
        m.mobility_average = FaceAverage::Harmonic;
    else
        throw r.fail("mobility", "average", fmt::format("'{}' is not arithmetic|harmonic", avg));

    m.diffusion.kind = coefficient_kind(r, "diffusion");
    m.diffusion.a_star = r.num("diffusion", "a_star", m.diffusion.a_star);
    m.diffusion.coeffs = r.numbers("diffusion", "coeffs", {});
    validate(m);

    // initial data
    InitialSpec& in = cfg.initial;
    const std::string ik = r.str("initial", "kind", "constant");
    if (ik == "constant")
        in.kind = InitialKind::Constant;
    else if (ik == "cosine" || ik == "cosine-perturbation")
        in.kind = InitialKind::Cosine;
    else if (ik == "random" || ik == "random-admissible")
        in.kind = InitialKind::Random;
    else if (ik == "file")
        in.kind = InitialKind::File;
    else
        throw r.fail("initial", "kind", fmt::format("'{}' is not constant|cosine|random|file", ik));
    in.mean = r.num("initial", "mean", 0.0);
    in.amplitude = r.num("initial", "amplitude", 0.0);
    in.mode = static_cast<int>(r.integer("initial", "mode", 1));
    in.seed = static_cast<std::uint64_t>(r.integer("initial", "seed", 0));
    if (r.has("initial", "file")) in.file = fs::absolute(base_dir / r.str("initial", "file", "")).lexically_normal();
    if (!(std::abs(in.mean) < 1.0))
        throw ValidationError(fmt::format("initial: admissible mean requires |k| < 1, got k = {}", in.mean));
    if (in.amplitude < 0.0) throw ValidationError("initial: amplitude must be >= 0");
    if (in.kind != InitialKind::Constant && in.kind != InitialKind::File &&
        !(std::abs(in.mean) + in.amplitude < 1.0 - m.potential.guard_eps))
        throw ValidationError("initial: |k| + amplitude must stay below 1 so that |phi0| < 1");
    if (in.kind == InitialKind::File) {
        if (in.file.empty()) throw ValidationError("initial: kind = file needs a file");
        if (!fs::exists(in.file)) throw ValidationError(fmt::format("initial: file '{}' does not exist", in.file));
    }
    if (in.mode < 1) throw ValidationError("initial: mode must be >= 1");

    // time
    StepperConfig& st = cfg.stepper;
    cfg.t_max = r.num("time", "t_max", cfg.t_max);
    st.dt_init = r.num("time", "dt_init", st.dt_init);
    st.dt_min = r.num("time", "dt_min", st.dt_min);
    st.dt_max = r.num("time", "dt_max", st.dt_max);
    st.newton_tol = r.num("time", "newton_tol", st.newton_tol);
    st.newton_max_iter = static_cast<int>(r.integer("time", "newton_max_iter", st.newton_max_iter));
    st.max_backtracks = static_cast<int>(r.integer("time", "max_backtracks", st.max_backtracks));
    st.tol_E = r.num("time", "tol_E", st.tol_E);
    st.growth = r.num("time", "growth", st.growth);
    st.clean_steps_before_growth = static_cast<int>(r.integer("time", "clean_steps", st.clean_steps_before_growth));
    st.snapshot_every = static_cast<int>(r.integer("time", "snapshot_every", st.snapshot_every));
    st.steady_threshold = r.num("time", "steady_threshold", st.steady_threshold);
    st.steady_dwell = static_cast<int>(r.integer("time", "steady_dwell", st.steady_dwell));
    st.max_steps = r.integer("time", "max_steps", st.max_steps);
    st.validate();
    if (!(cfg.t_max > 0.0)) throw ValidationError("time: t_max must be > 0");

    // analysis
    AnalysisSpec& an = cfg.analysis;
    an.M = r.numbers("analysis", "M", an.M);
    an.T = r.num("analysis", "T", an.T);
    an.delta = r.numbers("analysis", "delta", an.delta);
    an.trailing_fraction = r.num("analysis", "trailing_fraction", an.trailing_fraction);
    an.degiorgi_T = r.num("analysis", "degiorgi_T", an.degiorgi_T);
    an.degiorgi_tau = r.num("analysis", "degiorgi_tau", an.degiorgi_tau);
    an.degiorgi_n = static_cast<int>(r.integer("analysis", "degiorgi_n", an.degiorgi_n));
    an.loj_window = r.num("analysis", "loj_window", an.loj_window);
    an.loj_gap_ceiling = r.num("analysis", "loj_gap_ceiling", an.loj_gap_ceiling);
    an.omega_reps = static_cast<int>(r.integer("analysis", "omega_reps", an.omega_reps));
    an.omega_tol = r.num("analysis", "omega_tol", an.omega_tol);
    if (an.M.empty()) throw ValidationError("analysis: M list must not be empty");
    for (double v : an.M)
        if (!(v > 0.0)) throw ValidationError("analysis: every M must be > 0");
    for (double v : an.delta)
        if (!(v > 0.0 && v < 1.0)) throw ValidationError("analysis: every delta must lie in (0, 1)");
    if (!(an.trailing_fraction > 0.0 && an.trailing_fraction <= 1.0))
        throw ValidationError("analysis: trailing_fraction must lie in (0, 1]");
    if (!(an.loj_window > 0.0 && an.loj_window <= 1.0))
        throw ValidationError("analysis: loj_window must lie in (0, 1]");
    if (an.degiorgi_n < 0 || an.omega_reps < 2) throw ValidationError("analysis: bad iteration counts");

    // equilibrium
    EquilibriumSpec& eq = cfg.equilibrium;
    eq.seeds = r.words("equilibrium", "seeds", eq.seeds);
    if (r.has("equilibrium", "k")) eq.k = r.num("equilibrium", "k", 0.0);
    eq.tol = r.num("equilibrium", "tol", eq.tol);
    eq.max_iter = static_cast<int>(r.integer("equilibrium", "max_iter", eq.max_iter));
    eq.tanh_positions = r.numbers("equilibrium", "tanh_positions", eq.tanh_positions);
    eq.tanh_width = r.num("equilibrium", "tanh_width", eq.tanh_width);
    eq.tanh_amplitude = r.num("equilibrium", "tanh_amplitude", eq.tanh_amplitude);
    if (r.has("equilibrium", "file"))
        eq.file = fs::absolute(base_dir / r.str("equilibrium", "file", "")).lexically_normal();
    for (const std::string& s : eq.seeds)
        if (s != "constant" && s != "tanh" && s != "file")
            throw r.fail("equilibrium", "seeds", fmt::format("'{}' is not constant|tanh|file", s));
    if (std::count(eq.seeds.begin(), eq.seeds.end(), "file") && !fs::exists(eq.file))
        throw ValidationError(fmt::format("equilibrium: seed file '{}' does not exist", eq.file));
    if (eq.k && !(std::abs(*eq.k) < 1.0)) throw ValidationError("equilibrium: admissible mean requires |k| < 1");

    cfg.output_dir = r.str("output", "dir", cfg.output_dir);
    cfg.name = r.str("output", "name", cfg.name);
    if (cfg.name.empty() || cfg.name.find('/') != std::string::npos)
        throw ValidationError("output: name must be a non-empty single path component");
    return cfg;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
    return out;
}

}  // namespace

ExperimentConfig parse_config_string(const std::string& text, const fs::path& base_dir,
                                     const std::vector<std::string>& overrides) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(fmt::format("line {}: {}", e.line(), e.message()));
    }
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ParseError(fmt::format("override '{}' is not section.key=value", o));
        const std::string sec = trim(o.substr(0, dot));
        const std::string key = trim(o.substr(dot + 1, eq - dot - 1));
        tree.put_child(pt::ptree::path_type(sec + '\0' + key, '\0'), pt::ptree(trim(o.substr(eq + 1))));
    }
    return build(tree, text, base_dir);
}

ExperimentConfig parse_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError(fmt::format("cannot read config '{}'", path.string()));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_string(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

std::string emit_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::map<std::string, std::string>> out;
    const Grid& g = cfg.grid;
    out["grid"]["nx"] = std::to_string(g.n(0));
    out["grid"]["lx"] = num(g.length(0));
    if (g.dim() == 2) {
        out["grid"]["ny"] = std::to_string(g.n(1));
        out["grid"]["ly"] = num(g.length(1));
    }
    out["grid"]["boundary"] = to_string(g.boundary());

    const ModelConfig& m = cfg.model;
    out["model"]["preset"] = to_string(m.preset);
    out["model"]["alpha"] = num(m.alpha);
    out["model"]["beta"] = num(m.beta);
    out["model"]["gamma"] = num(m.gamma);
    out["model"]["sigma1"] = std::to_string(m.sigma1);
    out["model"]["sigma2"] = std::to_string(m.sigma2);
    out["model"]["nonlocal_consistency"] = m.nonlocal_consistency ? "true" : "false";
    out["potential"]["kind"] = "logarithmic";
    out["potential"]["theta"] = num(m.potential.theta);
    out["potential"]["theta0"] = num(m.potential.theta0);
    out["potential"]["guard_eps"] = num(m.potential.guard_eps);
    auto coeff = [&](const std::string& sec, CoefficientKind k, const std::vector<double>& c) {
        out[sec]["kind"] = k == CoefficientKind::Constant ? "constant" : "poly";
        if (!c.empty()) out[sec]["coeffs"] = join(c);
    };
    coeff("mobility", m.mobility.kind, m.mobility.coeffs);
    out["mobility"]["m_star"] = num(m.mobility.m_star);
    out["mobility"]["average"] = m.mobility_average == FaceAverage::Arithmetic ? "arithmetic" : "harmonic";
    coeff("diffusion", m.diffusion.kind, m.diffusion.coeffs);
    out["diffusion"]["a_star"] = num(m.diffusion.a_star);
    if (m.kernel) {
        out["kernel"]["kind"] = m.kernel->kind == KernelKind::Gaussian ? "gaussian" : "tophat";
        out["kernel"]["scale"] = num(m.kernel->scale);
        out["kernel"]["support"] = num(m.kernel->support);
        out["kernel"]["strength"] = num(m.kernel->strength);
    }

    const InitialSpec& in = cfg.initial;
    static const char* kinds[] = {"constant", "cosine", "random", "file"};
    out["initial"]["kind"] = kinds[static_cast<int>(in.kind)];
    out["initial"]["mean"] = num(in.mean);
    out["initial"]["amplitude"] = num(in.amplitude);
    out["initial"]["mode"] = std::to_string(in.mode);
    out["initial"]["seed"] = std::to_string(in.seed);
    if (!in.file.empty()) out["initial"]["file"] = in.file;

    const StepperConfig& st = cfg.stepper;
    out["time"]["t_max"] = num(cfg.t_max);
    out["time"]["dt_init"] = num(st.dt_init);
    out["time"]["dt_min"] = num(st.dt_min);
    out["time"]["dt_max"] = num(st.dt_max);
    out["time"]["newton_tol"] = num(st.newton_tol);
    out["time"]["newton_max_iter"] = std::to_string(st.newton_max_iter);
    out["time"]["max_backtracks"] = std::to_string(st.max_backtracks);
    out["time"]["tol_E"] = num(st.tol_E);
    out["time"]["growth"] = num(st.growth);
    out["time"]["clean_steps"] = std::to_string(st.clean_steps_before_growth);
    out["time"]["snapshot_every"] = std::to_string(st.snapshot_every);
    out["time"]["steady_threshold"] = num(st.steady_threshold);
    out["time"]["steady_dwell"] = std::to_string(st.steady_dwell);
    out["time"]["max_steps"] = std::to_string(st.max_steps);

    const AnalysisSpec& an = cfg.analysis;
    out["analysis"]["M"] = join(an.M);
    out["analysis"]["T"] = num(an.T);
    out["analysis"]["delta"] = join(an.delta);
    out["analysis"]["trailing_fraction"] = num(an.trailing_fraction);
    out["analysis"]["degiorgi_T"] = num(an.degiorgi_T);
    out["analysis"]["degiorgi_tau"] = num(an.degiorgi_tau);
    out["analysis"]["degiorgi_n"] = std::to_string(an.degiorgi_n);
    out["analysis"]["loj_window"] = num(an.loj_window);
    out["analysis"]["loj_gap_ceiling"] = num(an.loj_gap_ceiling);
    out["analysis"]["omega_reps"] = std::to_string(an.omega_reps);
    out["analysis"]["omega_tol"] = num(an.omega_tol);

    const EquilibriumSpec& eq = cfg.equilibrium;
    std::string seeds;
    for (std::size_t i = 0; i < eq.seeds.size(); ++i) seeds += (i ? ", " : "") + eq.seeds[i];
    out["equilibrium"]["seeds"] = seeds;
    if (eq.k) out["equilibrium"]["k"] = num(*eq.k);
    out["equilibrium"]["tol"] = num(eq.tol);
    out["equilibrium"]["max_iter"] = std::to_string(eq.max_iter);
    out["equilibrium"]["tanh_positions"] = join(eq.tanh_positions);
    out["equilibrium"]["tanh_width"] = num(eq.tanh_width);
    out["equilibrium"]["tanh_amplitude"] = num(eq.tanh_amplitude);
    if (!eq.file.empty()) out["equilibrium"]["file"] = eq.file;

    out["output"]["dir"] = cfg.output_dir;
    out["output"]["name"] = cfg.name;

    std::string text;
    for (const auto& [sec, keys] : out) {
        text += fmt::format("[{}]\n", sec);
        for (const auto& [k, v] : keys) text += fmt::format("{} = {}\n", k, v);
        text += "\n";
    }
    return text;
}

std::string config_digest(const ExperimentConfig& cfg) { return sha256_hex(emit_config(cfg)); }

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(splitmix64(seed, counter) >> 11) * 0x1.0p-53;
}

Field initial_field(const ExperimentConfig& cfg) {
    const Grid& g = cfg.grid;
    const InitialSpec& in = cfg.initial;
    Field phi(g, in.mean);
    switch (in.kind) {
        case InitialKind::Constant: break;
        case InitialKind::Cosine:
            for (int j = 0; j < g.n(1); ++j)
                for (int i = 0; i < g.n(0); ++i)
                    phi[g.index(i, j)] +=
                        in.amplitude * std::cos(in.mode * M_PI * g.center(0, i) / g.length(0));
            break;
        case InitialKind::Random: {
            Field xi(g);
            for (std::size_t k = 0; k < xi.size(); ++k) xi[k] = 2.0 * uniform01(in.seed, k) - 1.0;
            xi += -xi.mean();
            const double scale = xi.max_abs();
            for (std::size_t k = 0; k < xi.size(); ++k)
                phi[k] += scale > 0.0 ? in.amplitude * xi[k] / scale : 0.0;
            break;
        }
        case InitialKind::File: {
            Field f = read_field(in.file);
            if (f.grid() != g) throw ShapeMismatch("initial: file grid differs from [grid]");
            phi = std::move(f);
            break;
        }
    }
    if (!phi.all_finite() || !(phi.max_abs() < 1.0 - cfg.model.potential.guard_eps))
        throw ValidationError("initial: phi0 must satisfy |phi0| < 1");
    return phi;
}

}  // namespace pflab
