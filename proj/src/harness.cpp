#include "cdyn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

#include "cdyn/baselines.hpp"
#include "cdyn/error.hpp"
#include "cdyn/io.hpp"
#include "cdyn/parallel.hpp"
#include "cdyn/plots.hpp"
#include "cdyn/rng.hpp"

namespace cdyn {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kTrainStream = 0x7a11;
constexpr std::uint64_t kDropoutStream = 0xd209;

template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
}

SimConfig sim_for(const ExperimentConfig& cfg) {
    SimConfig sim = cfg.sim;
    sim.seed = cfg.seed;
    return sim;
}

std::vector<Trajectory> pick(std::span<const Trajectory> data, const std::vector<std::size_t>& idx) {
    std::vector<Trajectory> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(data[i]);
    return out;
}

// Writes into a sibling temp directory and renames, so an interrupted run
// never leaves a half-written cache entry behind.
template <typename Save>
void store_atomically(const fs::path& dir, Save&& save) {
    const fs::path tmp = dir.string() + ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    save(tmp);
    fs::remove_all(dir, ec);
    fs::rename(tmp, dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot move " + tmp.string() + " to " + dir.string() + ": " + ec.message());
}

std::vector<Trajectory> rotated(std::span<const Trajectory> ts) {
    std::vector<Trajectory> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(rot90(t));
    return out;
}

RolloutModel point_model(const ExperimentConfig& cfg, const SnapshotSet* snapshots) {
    if (cfg.model == ModelKind::Oracle)
        return rollout_model(diffusion_oracle(cfg.sim.nu, cfg.sim.dt, cfg.sim.substeps));
    require(snapshots && !snapshots->snapshots.empty(), "surrogate model requires trained snapshots");
    return rollout_model(snapshots->snapshots.back());
}

std::string fmt4(double v) { return format_fixed(v, 4); }

}  // namespace

fs::path cache_dir(const ExperimentConfig& cfg) { return cfg.out / "cache"; }

std::string dataset_key(const ExperimentConfig& cfg) {
    return content_hash(canonical_section(cfg, "sim") + canonical_section(cfg, "run"));
}

std::string snapshot_key(const ExperimentConfig& cfg) {
    return content_hash(canonical_section(cfg, "sim") + canonical_section(cfg, "train") +
                        canonical_section(cfg, "run"));
}

std::vector<Trajectory> obtain_dataset(const ExperimentConfig& cfg, const fs::path& cache) {
    const SimConfig sim = sim_for(cfg);
    if (cache.empty()) return generate_dataset(sim, cfg.n_traj);
    const fs::path dir = cache / ("dataset-" + dataset_key(cfg));
    if (fs::exists(dir / "manifest.txt")) {
        auto data = load_dataset(dir);
        if (data.size() != cfg.n_traj) fail(ErrorKind::Io, "cached dataset " + dir.string() + " has wrong size");
        return data;
    }
    auto data = generate_dataset(sim, cfg.n_traj);
    store_atomically(dir, [&](const fs::path& tmp) { save_dataset(tmp, sim, data); });
    return data;
}

SnapshotSet obtain_snapshots(const ExperimentConfig& cfg, std::span<const Trajectory> data,
                             const DatasetSplits& splits, const fs::path& cache) {
    const auto train = [&] {
        const auto subset = pick(data, splits.train);
        return train_snapshots(subset, cfg.train, cfg.schedule, derive_seed(cfg.seed, kTrainStream));
    };
    if (cache.empty()) return train();
    const fs::path dir = cache / ("snapshots-" + snapshot_key(cfg));
    if (fs::exists(dir / "manifest.txt")) return load_snapshots(dir);
    auto set = train();
    store_atomically(dir, [&](const fs::path& tmp) { save_snapshots(tmp, set); });
    return set;
}

Evaluation evaluate(const ExperimentConfig& cfg, Method method, const SnapshotSet* snapshots,
                    std::span<const Trajectory> cal, std::span<const Trajectory> test) {
    cfg.validate();
    require(!test.empty(), "evaluate: empty test set");
    if (method != Method::Conformal && cfg.model == ModelKind::Oracle)
        fail(ErrorKind::Config, std::string("method ") + to_string(method) + " requires model = surrogate");
    const std::size_t W = cfg.window();
    const std::size_t H = cfg.horizon;

    Evaluation ev;
    ev.row.method = to_string(method);
    ev.row.model = to_string(cfg.model);

    RolloutModel model;
    if (method == Method::Conformal) {
        model = point_model(cfg, snapshots);
        require(!cal.empty(), "evaluate: empty calibration set");
        const ScoreTable cal_scores = compute_scores(model, cal, W, H);
        ev.radius = radius_from_scores(cal_scores, cfg.alpha, cfg.quantile_mode);
        ev.test_scores = compute_scores(model, test, W, H);
        ev.coverage = coverage_from_scores(ev.test_scores, *ev.radius);
    }

    if (method != Method::Conformal) require(snapshots && !snapshots->snapshots.empty(), "sampling methods require snapshots");

    std::vector<UncertaintyForecast> forecasts(test.size());
    const std::uint64_t dropout_seed = derive_seed(cfg.seed, kDropoutStream);
    parallel_for(test.size(), [&](std::size_t j) {
        const auto window = std::span<const Field>(test[j].frames).first(W);
        switch (method) {
            case Method::Conformal:
                forecasts[j] = cp_forecast(model, window, *ev.radius, cfg.z_rule);
                break;
            case Method::Dropout:
                forecasts[j] = mc_dropout_forecast(snapshots->snapshots.back(), window, H, cfg.dropout_p,
                                                   cfg.mc_passes, derive_seed(dropout_seed, j), cfg.std_convention);
                break;
            case Method::Ensemble:
                forecasts[j] = ensemble_forecast(*snapshots, window, H, cfg.std_convention);
                break;
        }
    });
    ev.steps.assign(H, {});
    const double cells = static_cast<double>(cfg.sim.grid * cfg.sim.grid) * static_cast<double>(test.size());
    for (std::size_t j = 0; j < test.size(); ++j) {
        const auto truth = std::span<const Field>(test[j].frames).subspan(W, H);
        append_forecast(ev.flat, forecasts[j], truth);
        for (std::size_t h = 0; h < H; ++h) {
            const auto& mu = forecasts[j].mean[h].values();
            const auto& y = truth[h].values();
            for (std::size_t c = 0; c < mu.size(); ++c) {
                ev.steps[h].mean_abs += std::abs(mu[c]) / cells;
                ev.steps[h].mean_sigma += forecasts[j].sigma_at(h, c) / cells;
                ev.steps[h].mae += std::abs(mu[c] - y[c]) / cells;
            }
        }
    }

    ev.row.mae = mae(ev.flat);
    ev.row.rmse = rmse(ev.flat);
    ev.row.sharpness = sharpness(ev.flat);
    ev.curve = calibration_curve(ev.flat, cfg.n_grid);
    ev.row.ma = miscalibration_area(ev.curve);

    const std::size_t half = ev.flat.size() / 2;
    const FlatPrediction fit = ev.flat.slice(0, half);
    const FlatPrediction holdout = ev.flat.slice(half, ev.flat.size());
    const Recalibrator recal = fit_recalibrator(calibration_curve(fit, cfg.n_grid));
    ev.recalibrated = calibration_curve(holdout, cfg.n_grid, &recal);
    ev.row.ra = miscalibration_area(ev.recalibrated);

    ev.panel = std::move(forecasts.front());
    const auto truth0 = std::span<const Field>(test.front().frames).subspan(W, H);
    ev.panel_truth.assign(truth0.begin(), truth0.end());
    return ev;
}

std::string report_csv(std::span<const MetricRow> rows) {
    std::string s = "method,model,MAE,RMSE,Sharpness,MA,RA\n";
    for (const auto& r : rows)
        s += r.method + ',' + r.model + ',' + fmt4(r.mae) + ',' + fmt4(r.rmse) + ',' + fmt4(r.sharpness) + ',' +
             fmt4(r.ma) + ',' + fmt4(r.ra) + '\n';
    return s;
}

void write_evaluation(const fs::path& dir, const ExperimentConfig& cfg, const Evaluation& ev) {
    fs::create_directories(dir);
    write_text(dir / "config.ini", canonical_config(cfg));
    write_text(dir / "report.csv", report_csv(std::span(&ev.row, 1)));

    std::string steps = "step,mean_abs,mean_sigma,mae\n";
    for (std::size_t h = 0; h < ev.steps.size(); ++h)
        steps += std::to_string(h + 1) + ',' + format_sci(ev.steps[h].mean_abs) + ',' +
                 format_sci(ev.steps[h].mean_sigma) + ',' + format_sci(ev.steps[h].mae) + '\n';
    write_text(dir / "sigma_by_step.csv", steps);

    std::string cal = "expected,observed\n";
    for (std::size_t i = 0; i < ev.curve.expected.size(); ++i)
        cal += format_sci(ev.curve.expected[i]) + ',' + format_sci(ev.curve.observed[i]) + '\n';
    write_text(dir / "calibration.csv", cal);

    std::string recal = "expected,observed\n";
    for (std::size_t i = 0; i < ev.recalibrated.expected.size(); ++i)
        recal += format_sci(ev.recalibrated.expected[i]) + ',' + format_sci(ev.recalibrated.observed[i]) + '\n';
    write_text(dir / "recalibration.csv", recal);

    // Evenly spaced subsample of the points ordered by truth.
    const std::size_t n = ev.flat.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ev.flat.y[a] < ev.flat.y[b]; });
    const std::size_t shown = std::min<std::size_t>(n, 200);
    const double z = gaussian_z(cfg.alpha, cfg.z_rule);
    std::string iv = "rank,y,mu,lower,upper\n";
    for (std::size_t k = 0; k < shown; ++k) {
        const std::size_t r = shown > 1 ? k * (n - 1) / (shown - 1) : 0;
        const std::size_t i = order[r];
        iv += std::to_string(r) + ',' + format_sci(ev.flat.y[i]) + ',' + format_sci(ev.flat.mu[i]) + ',' +
              format_sci(ev.flat.mu[i] - z * ev.flat.sigma[i]) + ',' + format_sci(ev.flat.mu[i] + z * ev.flat.sigma[i]) +
              '\n';
    }
    write_text(dir / "intervals.csv", iv);

    if (ev.radius) {
        write_text(dir / "radius.csv", radius_csv(*ev.radius, cfg.z_rule));
        std::string cov = "horizon_step,coverage\n";
        for (std::size_t h = 0; h < ev.coverage.size(); ++h)
            cov += std::to_string(h + 1) + ',' + format_sci(ev.coverage[h]) + '\n';
        write_text(dir / "coverage.csv", cov);
    }

    const double frame_dt = cfg.sim.frame_dt();
    std::vector<Field> sigma;
    for (std::size_t h = 0; h < ev.panel.horizon(); ++h) sigma.push_back(ev.panel.sigma_field(h));
    save_trajectory(dir / "forecast_mean.cdyn", Trajectory{ev.panel.mean, frame_dt});
    save_trajectory(dir / "forecast_sigma.cdyn", Trajectory{sigma, frame_dt});
    save_trajectory(dir / "truth.cdyn", Trajectory{ev.panel_truth, frame_dt});
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const std::string& id) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.txt")
            files.push_back(fs::relative(entry.path(), dir));
    std::sort(files.begin(), files.end());

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    std::ostringstream os;
    os << "run_id = " << id << '\n'
       << "config_hash = " << content_hash(canonical_config(cfg)) << '\n'
       << "seed = " << cfg.seed << '\n'
       << "created = " << stamp << '\n'
       << "\n[files]\n";
    for (const auto& f : files) {
        const auto bytes = read_file(dir / f);
        os << f.generic_string() << " = " << bytes.size() << ' '
           << content_hash(std::string_view(bytes.data(), bytes.size())) << '\n';
    }
    write_text(dir / "manifest.txt", os.str());
}

std::string run_id(const ExperimentConfig& cfg, const std::string& kind) {
    return kind + "-s" + std::to_string(cfg.seed) + "-" + content_hash(canonical_config(cfg)).substr(0, 8);
}

namespace {

struct Prepared {
    std::vector<Trajectory> data;
    DatasetSplits splits;
    std::optional<SnapshotSet> snapshots;
};

Prepared prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    Prepared p;
    const fs::path cache = cache_dir(cfg);
    p.data = staged("generate", [&] { return obtain_dataset(cfg, cache); });
    p.splits = staged("split", [&] { return make_splits(cfg.n_traj, cfg.seed); });
    if (cfg.model == ModelKind::Surrogate)
        p.snapshots = staged("train", [&] { return obtain_snapshots(cfg, p.data, p.splits, cache); });
    return p;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, Method method) {
    const Prepared p = prepare(cfg);
    const auto cal = pick(p.data, p.splits.cal);
    const auto test = pick(p.data, p.splits.test);
    RunResult r;
    r.eval = staged("evaluate", [&] { return evaluate(cfg, method, p.snapshots ? &*p.snapshots : nullptr, cal, test); });
    const std::string id = run_id(cfg, to_string(method));
    r.dir = cfg.out / id;
    staged("write", [&] {
        write_evaluation(r.dir, cfg, r.eval);
        emit_plots(r.dir);
        write_manifest(r.dir, cfg, id);
    });
    return r;
}

SymmetryResult run_symmetry(const ExperimentConfig& cfg) {
    const Prepared p = prepare(cfg);
    const auto cal = pick(p.data, p.splits.cal);
    const auto test = pick(p.data, p.splits.test);
    const SnapshotSet* snaps = p.snapshots ? &*p.snapshots : nullptr;

    SymmetryResult r;
    r.unrotated = staged("evaluate", [&] { return evaluate(cfg, Method::Conformal, snaps, cal, test); });
    r.rotated = staged("evaluate rot90",
                       [&] { return evaluate(cfg, Method::Conformal, snaps, rotated(cal), rotated(test)); });
    r.unrotated.row.method = "cp";
    r.rotated.row.method = "cp-rot90";
    const MetricRow& a = r.unrotated.row;
    const MetricRow& b = r.rotated.row;
    r.delta = {"delta", a.model, b.mae - a.mae, b.rmse - a.rmse, b.sharpness - a.sharpness, b.ma - a.ma, b.ra - a.ra};

    const std::string id = run_id(cfg, "symmetry");
    r.dir = cfg.out / id;
    staged("write", [&] {
        write_evaluation(r.dir / "unrotated", cfg, r.unrotated);
        write_evaluation(r.dir / "rotated", cfg, r.rotated);
        emit_plots(r.dir / "unrotated");
        emit_plots(r.dir / "rotated");
        const MetricRow rows[] = {a, b};
        write_text(r.dir / "report.csv", report_csv(rows));
        std::string d = "metric,delta\n";
        d += "MAE," + format_sci(r.delta.mae) + '\n';
        d += "RMSE," + format_sci(r.delta.rmse) + '\n';
        d += "Sharpness," + format_sci(r.delta.sharpness) + '\n';
        d += "MA," + format_sci(r.delta.ma) + '\n';
        d += "RA," + format_sci(r.delta.ra) + '\n';
        std::string q = "horizon_step,Q_unrotated,Q_rotated,delta\n";
        for (std::size_t h = 0; h < r.unrotated.radius->horizon(); ++h) {
            const double qa = r.unrotated.radius->q[h], qb = r.rotated.radius->q[h];
            q += std::to_string(h + 1) + ',' + format_sci(qa) + ',' + format_sci(qb) + ',' + format_sci(qb - qa) + '\n';
        }
        write_text(r.dir / "deltas.csv", d);
        write_text(r.dir / "radius_deltas.csv", q);
        write_manifest(r.dir, cfg, id);
    });
    return r;
}

std::string summarize_reports(const fs::path& out) {
    if (!fs::is_directory(out)) fail(ErrorKind::Io, "no such output directory: " + out.string());
    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(out))
        if (entry.is_directory() && fs::exists(entry.path() / "report.csv")) runs.push_back(entry.path());
    std::sort(runs.begin(), runs.end());
    std::string table = "run_id,method,model,MAE,RMSE,Sharpness,MA,RA\n";
    for (const auto& dir : runs) {
        std::istringstream in(read_text(dir / "report.csv"));
        std::string line;
        if (!std::getline(in, line) || line.rfind("method,", 0) != 0)
            fail(ErrorKind::Io, "corrupt report: " + (dir / "report.csv").string());
        while (std::getline(in, line))
            if (!line.empty()) table += dir.filename().string() + ',' + line + '\n';
    }
    return table;
}

}  // namespace cdyn
