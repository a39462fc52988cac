#include "cdyn/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "cdyn/error.hpp"
#include "cdyn/io.hpp"

namespace cdyn {

const char* to_string(Method m) {
    switch (m) {
        case Method::Conformal: return "cp";
        case Method::Dropout: return "dropout";
        case Method::Ensemble: return "ensemble";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    if (name == "cp") return Method::Conformal;
    if (name == "dropout") return Method::Dropout;
    if (name == "ensemble") return Method::Ensemble;
    fail(ErrorKind::Config, "unknown method '" + name + "' (expected cp, dropout or ensemble)");
}

const char* to_string(ModelKind k) { return k == ModelKind::Surrogate ? "surrogate" : "oracle"; }

void ExperimentConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorKind::Config, what);
    };
    sim.validate();
    schedule.validate();
    check(n_traj >= 20, "sim: n_traj must be >= 20");
    check(train.window >= 1, "train: window must be >= 1");
    check(train.batch_size >= 1, "train: batch_size must be >= 1");
    check(train.resolved_cutoff(sim.grid) <= sim.grid / 2 - 1, "train: cutoff must be <= grid/2 - 1");
    check(alpha > 0.0 && alpha < 1.0, "uq: alpha must be in (0, 1)");
    check(dropout_p >= 0.0 && dropout_p < 1.0, "uq: dropout_p must be in [0, 1)");
    check(mc_passes >= 1, "uq: mc_passes must be >= 1");
    check(horizon >= 2, "uq: horizon must be >= 2");
    check(train.window + horizon <= sim.frames_per_traj, "uq: window + horizon exceeds frames_per_traj");
    check(n_grid >= 3, "uq: n_grid must be >= 3");
    check(model == ModelKind::Surrogate || sim.solver == Solver::Diffusion,
          "uq: model = oracle requires solver = diffusion");
}

namespace {

struct Line {
    std::string value;
    int line;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

class Assigner {
public:
    Assigner(std::string source) : source_(std::move(source)) {}

    void set(const std::string& key, const Line& v) {
        const auto it = setters_.find(key);
        if (it == setters_.end()) error(v.line, "unknown key '" + key + "'");
        try {
            it->second(v.value);
        } catch (const Error& e) {
            error(v.line, e.what());
        } catch (const std::exception&) {
            error(v.line, "invalid value '" + v.value + "' for " + key);
        }
    }

    template <typename T>
    void bind(const std::string& key, T& target) {
        setters_[key] = [&target, key](const std::string& text) {
            std::size_t used = 0;
            if constexpr (std::is_same_v<T, double>) {
                target = std::stod(text, &used);
            } else {
                if (!text.empty() && text.front() == '-') throw std::invalid_argument(key);
                target = static_cast<T>(std::stoull(text, &used));
            }
            if (used != text.size()) throw std::invalid_argument(key);
        };
    }

    void bind_fn(const std::string& key, std::function<void(const std::string&)> fn) { setters_[key] = std::move(fn); }

    [[noreturn]] void error(int line, const std::string& what) const {
        fail(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + what);
    }

private:
    std::string source_;
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

ZRule parse_z_rule(const std::string& s) {
    if (s == "tabulated") return ZRule::Tabulated;
    if (s == "exact") return ZRule::Exact;
    fail(ErrorKind::Config, "unknown z_rule '" + s + "' (expected tabulated or exact)");
}

StdConvention parse_std(const std::string& s) {
    if (s == "population") return StdConvention::Population;
    if (s == "sample") return StdConvention::Sample;
    fail(ErrorKind::Config, "unknown std convention '" + s + "' (expected population or sample)");
}

ModelKind parse_model(const std::string& s) {
    if (s == "surrogate") return ModelKind::Surrogate;
    if (s == "oracle") return ModelKind::Oracle;
    fail(ErrorKind::Config, "unknown model '" + s + "' (expected surrogate or oracle)");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    ExperimentConfig cfg;
    Assigner a(source);
    a.bind_fn("sim.solver", [&](const std::string& v) { cfg.sim.solver = parse_solver(v); });
    a.bind("sim.grid", cfg.sim.grid);
    a.bind("sim.nu", cfg.sim.nu);
    a.bind("sim.dt", cfg.sim.dt);
    a.bind("sim.frames_per_traj", cfg.sim.frames_per_traj);
    a.bind("sim.substeps", cfg.sim.substeps);
    a.bind("sim.forcing_amplitude", cfg.sim.forcing_amplitude);
    a.bind("sim.spectrum_slope", cfg.sim.spectrum_slope);
    a.bind("sim.n_traj", cfg.n_traj);
    a.bind("train.eta_max", cfg.schedule.eta_max);
    a.bind("train.eta_min", cfg.schedule.eta_min);
    a.bind("train.steps_per_cycle", cfg.schedule.steps_per_cycle);
    a.bind("train.cycles", cfg.schedule.cycles);
    a.bind("train.window", cfg.train.window);
    a.bind("train.cutoff", cfg.train.cutoff);
    a.bind("train.batch_size", cfg.train.batch_size);
    a.bind("uq.alpha", cfg.alpha);
    a.bind("uq.dropout_p", cfg.dropout_p);
    a.bind("uq.mc_passes", cfg.mc_passes);
    a.bind("uq.horizon", cfg.horizon);
    a.bind_fn("uq.quantile_mode", [&](const std::string& v) { cfg.quantile_mode = parse_quantile_mode(v); });
    a.bind_fn("uq.z_rule", [&](const std::string& v) { cfg.z_rule = parse_z_rule(v); });
    a.bind_fn("uq.std", [&](const std::string& v) { cfg.std_convention = parse_std(v); });
    a.bind("uq.n_grid", cfg.n_grid);
    a.bind_fn("uq.model", [&](const std::string& v) { cfg.model = parse_model(v); });
    a.bind("run.seed", cfg.seed);
    a.bind_fn("run.out", [&](const std::string& v) { cfg.out = v; });

    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(std::string_view(raw).substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') a.error(line, "malformed section header");
            section = trim(std::string_view(s).substr(1, s.size() - 2));
            if (section != "sim" && section != "train" && section != "uq" && section != "run")
                a.error(line, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) a.error(line, "expected key = value");
        if (section.empty()) a.error(line, "key outside of a [section]");
        a.set(section + "." + trim(std::string_view(s).substr(0, eq)), {trim(std::string_view(s).substr(eq + 1)), line});
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("cannot read config: ") + e.what());
    }
    return parse_config(text, path.string());
}

std::string canonical_section(const ExperimentConfig& cfg, std::string_view section) {
    std::ostringstream os;
    os << '[' << section << "]\n";
    if (section == "sim") {
        os << "solver = " << to_string(cfg.sim.solver) << '\n'
           << "grid = " << cfg.sim.grid << '\n'
           << "nu = " << format_sci(cfg.sim.nu) << '\n'
           << "dt = " << format_sci(cfg.sim.dt) << '\n'
           << "frames_per_traj = " << cfg.sim.frames_per_traj << '\n'
           << "substeps = " << cfg.sim.substeps << '\n'
           << "forcing_amplitude = " << format_sci(cfg.sim.forcing_amplitude) << '\n'
           << "spectrum_slope = " << format_sci(cfg.sim.spectrum_slope) << '\n'
           << "n_traj = " << cfg.n_traj << '\n';
    } else if (section == "train") {
        os << "eta_max = " << format_sci(cfg.schedule.eta_max) << '\n'
           << "eta_min = " << format_sci(cfg.schedule.eta_min) << '\n'
           << "steps_per_cycle = " << cfg.schedule.steps_per_cycle << '\n'
           << "cycles = " << cfg.schedule.cycles << '\n'
           << "window = " << cfg.train.window << '\n'
           << "cutoff = " << cfg.train.resolved_cutoff(cfg.sim.grid) << '\n'
           << "batch_size = " << cfg.train.batch_size << '\n';
    } else if (section == "uq") {
        os << "alpha = " << format_sci(cfg.alpha) << '\n'
           << "dropout_p = " << format_sci(cfg.dropout_p) << '\n'
           << "mc_passes = " << cfg.mc_passes << '\n'
           << "horizon = " << cfg.horizon << '\n'
           << "quantile_mode = " << to_string(cfg.quantile_mode) << '\n'
           << "z_rule = " << (cfg.z_rule == ZRule::Tabulated ? "tabulated" : "exact") << '\n'
           << "std = " << (cfg.std_convention == StdConvention::Population ? "population" : "sample") << '\n'
           << "n_grid = " << cfg.n_grid << '\n'
           << "model = " << to_string(cfg.model) << '\n';
    } else if (section == "run") {
        os << "seed = " << cfg.seed << '\n';
    } else {
        fail(ErrorKind::Invalid, "unknown config section " + std::string(section));
    }
    return os.str();
}

std::string canonical_config(const ExperimentConfig& cfg) {
    return canonical_section(cfg, "sim") + '\n' + canonical_section(cfg, "train") + '\n' +
           canonical_section(cfg, "uq") + '\n' + canonical_section(cfg, "run");
}

std::string content_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cdyn
