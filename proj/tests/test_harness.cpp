#include <doctest.h>

#include <filesystem>
#include <string>

#include "cdyn/error.hpp"
#include "cdyn/harness.hpp"
#include "cdyn/io.hpp"
#include "cdyn/plots.hpp"

using namespace cdyn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "cdyn-test-harness" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ErrorKind kind_of(const std::function<void()>& body) {
    try {
        body();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no cdyn::Error thrown");
    return ErrorKind::Invalid;
}

ExperimentConfig small_diffusion(ModelKind model) {
    ExperimentConfig cfg;
    cfg.sim.solver = Solver::Diffusion;
    cfg.sim.grid = 16;
    cfg.sim.nu = 0.05;
    cfg.n_traj = 40;
    cfg.model = model;
    cfg.mc_passes = 20;
    return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("empty text gives the defaults") {
        const auto cfg = parse_config("");
        CHECK(cfg.n_traj == 1200);
        CHECK(cfg.alpha == 0.05);
        CHECK(cfg.schedule.cycles == 6);
        CHECK(cfg.mc_passes == 100);
        CHECK(cfg.window() == 10);
        CHECK(cfg.horizon == 10);
        CHECK(cfg.quantile_mode == QuantileMode::SplitQuantile);
    }
    SUBCASE("sections, comments and whitespace") {
        const auto cfg = parse_config(
            "# comment\n[sim]\n  solver = diffusion  \nnu=0.2 # trailing\n\n[uq]\nalpha = 0.1\n"
            "quantile_mode = paper-max\nmodel = oracle\n[run]\nseed = 7\nout = somewhere\n");
        CHECK(cfg.sim.solver == Solver::Diffusion);
        CHECK(cfg.sim.nu == 0.2);
        CHECK(cfg.alpha == 0.1);
        CHECK(cfg.quantile_mode == QuantileMode::PaperMax);
        CHECK(cfg.model == ModelKind::Oracle);
        CHECK(cfg.seed == 7);
        CHECK(cfg.out == fs::path("somewhere"));
    }
    SUBCASE("errors are config errors with a line number") {
        try {
            parse_config("[sim]\ngrid = 32\nbogus = 1\n", "x.ini");
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::Config);
            CHECK(std::string(e.what()).find("x.ini:3") != std::string::npos);
        }
        CHECK(kind_of([] { parse_config("[nope]\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("grid = 32\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\ngrid\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\ngrid = -32\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\nnu = 1e-3x\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\nsolver = spectral\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim\n"); }) == ErrorKind::Config);
    }
    SUBCASE("invariants are enforced") {
        CHECK(kind_of([] { parse_config("[uq]\nalpha = 0\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[uq]\nalpha = 1\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[uq]\nmodel = oracle\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\nn_traj = 19\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[sim]\nnu = 0\n"); }) == ErrorKind::Config);
        CHECK(kind_of([] { parse_config("[uq]\nhorizon = 25\n"); }) == ErrorKind::Config);
    }
    SUBCASE("missing file is a config error") {
        CHECK(kind_of([] { load_config("/nonexistent/cdyn.ini"); }) == ErrorKind::Config);
    }
}

TEST_CASE("canonical config round trips") {
    auto cfg = parse_config("[sim]\nsolver = diffusion\nnu = 0.125\n[train]\ncutoff = 5\n[uq]\nz_rule = exact\n");
    const std::string text = canonical_config(cfg);
    CHECK(canonical_config(parse_config(text)) == text);
    cfg.seed = 3;
    CHECK(canonical_config(cfg) != text);
}

TEST_CASE("content hash is 64-bit FNV-1a") {
    CHECK(content_hash("") == "cbf29ce484222325");
    CHECK(content_hash("a") == "af63dc4c8601ec8c");
    CHECK(content_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("cache keys track only their sections") {
    ExperimentConfig a, b;
    b.alpha = 0.1;
    CHECK(dataset_key(a) == dataset_key(b));
    CHECK(snapshot_key(a) == snapshot_key(b));
    b.schedule.cycles = 5;
    CHECK(dataset_key(a) == dataset_key(b));
    CHECK(snapshot_key(a) != snapshot_key(b));
    b.seed = 1;
    CHECK(dataset_key(a) != dataset_key(b));
}

TEST_CASE("method names") {
    CHECK(parse_method("cp") == Method::Conformal);
    CHECK(parse_method("dropout") == Method::Dropout);
    CHECK(parse_method("ensemble") == Method::Ensemble);
    CHECK(kind_of([] { parse_method("bayes"); }) == ErrorKind::Config);
    CHECK(std::string(to_string(Method::Ensemble)) == "ensemble");
}

TEST_CASE("report csv layout") {
    const MetricRow rows[] = {{"cp", "surrogate", 0.12344, 1.0, 2.5, 0.25, 0.00015}};
    CHECK(report_csv(rows) == "method,model,MAE,RMSE,Sharpness,MA,RA\ncp,surrogate,0.1234,1.0000,2.5000,0.2500,0.0001\n");
}

TEST_CASE("oracle conformal evaluation is exact") {
    const auto cfg = small_diffusion(ModelKind::Oracle);
    const auto data = obtain_dataset(cfg, {});
    const auto cal = std::span<const Trajectory>(data).first(10);
    const auto test = std::span<const Trajectory>(data).last(10);
    const Evaluation ev = evaluate(cfg, Method::Conformal, nullptr, cal, test);
    CHECK(ev.row.mae == 0.0);
    CHECK(ev.row.rmse == 0.0);
    CHECK(ev.row.sharpness == doctest::Approx(kSigmaFloor).epsilon(1e-9));
    for (double q : ev.radius->q) CHECK(q == 0.0);
    for (double c : ev.coverage) CHECK(c == 1.0);
    CHECK(ev.row.ma == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ev.steps.size() == cfg.horizon);
    CHECK(kind_of([&] { evaluate(cfg, Method::Dropout, nullptr, cal, test); }) == ErrorKind::Config);
}

TEST_CASE("dataset and snapshots are cached by content hash") {
    const fs::path dir = scratch("cache");
    auto cfg = small_diffusion(ModelKind::Surrogate);
    cfg.schedule.steps_per_cycle = 10;
    const auto first = obtain_dataset(cfg, dir);
    CHECK(fs::exists(dir / ("dataset-" + dataset_key(cfg)) / "manifest.txt"));
    const auto again = obtain_dataset(cfg, dir);
    REQUIRE(again.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) CHECK(again[i].frames == first[i].frames);

    const auto splits = make_splits(cfg.n_traj, cfg.seed);
    const auto s1 = obtain_snapshots(cfg, first, splits, dir);
    const auto s2 = obtain_snapshots(cfg, first, splits, dir);
    REQUIRE(s1.snapshots.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(s1.snapshots[i] == s2.snapshots[i]);
}

TEST_CASE("run_experiment writes a complete, reproducible run directory") {
    const fs::path out = scratch("runs");
    auto cfg = small_diffusion(ModelKind::Surrogate);
    cfg.schedule.steps_per_cycle = 20;
    cfg.out = out;
    const RunResult r = run_experiment(cfg, Method::Ensemble);
    for (const char* name : {"report.csv", "sigma_by_step.csv", "calibration.csv", "recalibration.csv", "intervals.csv",
                             "forecast_mean.cdyn", "forecast_sigma.cdyn", "truth.cdyn", "calibration.svg",
                             "recalibration.svg", "intervals.svg", "panels.svg", "manifest.txt", "config.ini"})
        CHECK_MESSAGE(fs::exists(r.dir / name), name);
    CHECK(!fs::exists(r.dir / "radius.csv"));

    const std::string manifest = read_text(r.dir / "manifest.txt");
    CHECK(manifest.find("config_hash = " + content_hash(canonical_config(cfg))) != std::string::npos);
    CHECK(manifest.find("seed = 0") != std::string::npos);
    CHECK(manifest.find("panels.svg = ") != std::string::npos);

    const auto report = read_file(r.dir / "report.csv");
    const auto svg = read_file(r.dir / "panels.svg");
    emit_plots(r.dir);
    CHECK(read_file(r.dir / "panels.svg") == svg);
    const RunResult again = run_experiment(cfg, Method::Ensemble);
    CHECK(read_file(again.dir / "report.csv") == report);

    const RunResult cp = run_experiment(cfg, Method::Conformal);
    CHECK(fs::exists(cp.dir / "radius.csv"));
    CHECK(fs::exists(cp.dir / "coverage.csv"));
    const std::string table = summarize_reports(out);
    CHECK(table.find(cp.dir.filename().string() + ",cp,surrogate,") != std::string::npos);
    CHECK(table.find(r.dir.filename().string() + ",ensemble,surrogate,") != std::string::npos);
}

TEST_CASE("emit_plots reports missing and corrupt inputs") {
    const fs::path empty = scratch("empty");
    try {
        emit_plots(empty);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
        CHECK(std::string(e.what()).find("calibration.csv") != std::string::npos);
    }
    write_text(empty / "calibration.csv", "expected,observed\n0,abc\n");
    try {
        emit_plots(empty);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
        CHECK(std::string(e.what()).find("corrupt") != std::string::npos);
    }
}

TEST_CASE("symmetry run detects a non-equivariant surrogate") {
    auto cfg = small_diffusion(ModelKind::Surrogate);
    cfg.schedule.steps_per_cycle = 20;
    cfg.out = scratch("symmetry");
    const SymmetryResult r = run_symmetry(cfg);
    double gap = 0.0;
    for (std::size_t h = 0; h < cfg.horizon; ++h)
        for (std::size_t i = 0; i < r.unrotated.test_scores.n_cal(); ++i)
            gap = std::max(gap, std::abs(r.unrotated.test_scores.steps[h][i] - r.rotated.test_scores.steps[h][i]));
    CHECK(gap > 1e-10);
    CHECK(r.delta.mae == r.rotated.row.mae - r.unrotated.row.mae);
    CHECK(fs::exists(r.dir / "deltas.csv"));
    CHECK(fs::exists(r.dir / "unrotated" / "panels.svg"));
    CHECK(fs::exists(r.dir / "rotated" / "panels.svg"));
}

TEST_CASE("errors carry the failing stage") {
    auto cfg = small_diffusion(ModelKind::Surrogate);
    cfg.out = scratch("stage");
    fs::create_directories(cache_dir(cfg) / ("dataset-" + dataset_key(cfg)));
    write_text(cache_dir(cfg) / ("dataset-" + dataset_key(cfg)) / "manifest.txt", "n_traj=40\n");
    try {
        run_experiment(cfg, Method::Conformal);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
        CHECK(std::string(e.what()).rfind("generate: ", 0) == 0);
    }
}
