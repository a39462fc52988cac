// Command-line front end for the experiment harness.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "cdyn/error.hpp"
#include "cdyn/harness.hpp"
#include "cdyn/io.hpp"
#include "cdyn/plots.hpp"

namespace {

int exit_code(cdyn::ErrorKind kind) {
    switch (kind) {
        case cdyn::ErrorKind::Config: return 2;
        case cdyn::ErrorKind::Numeric: return 3;
        case cdyn::ErrorKind::Io: return 4;
        case cdyn::ErrorKind::Invalid: return 2;
    }
    return 1;
}

struct Options {
    std::string config;
    std::string method = "cp";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string run;
};

cdyn::ExperimentConfig resolve(const Options& o) {
    cdyn::ExperimentConfig cfg = o.config.empty() ? cdyn::ExperimentConfig{} : cdyn::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.out = o.out;
    cfg.validate();
    return cfg;
}

void print_rows(std::span<const cdyn::MetricRow> rows) { std::cout << cdyn::report_csv(rows); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cdyn: uncertainty quantification for autoregressive field forecasters"};
    app.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config (key = value under [section] headers)");
        sub->add_option("--seed", o.seed, "overrides [run] seed");
        sub->add_option("--out", o.out, "output root (default: [run] out, else ./runs)");
    };
    auto* generate = app.add_subcommand("generate", "simulate (or load cached) trajectories");
    auto* train = app.add_subcommand("train", "train (or load cached) snapshot surrogates");
    auto* eval = app.add_subcommand("eval", "run one uncertainty method end to end");
    auto* symmetry = app.add_subcommand("symmetry", "conformal run on unrotated vs rot90 calibration and test data");
    auto* plot = app.add_subcommand("plot", "re-render the SVGs of a run directory");
    auto* report = app.add_subcommand("report", "collect every run's report.csv under --out");
    for (auto* sub : {generate, train, eval, symmetry, report}) common(sub);
    eval->add_option("--method", o.method, "cp, dropout or ensemble")->check(CLI::IsMember({"cp", "dropout", "ensemble"}));
    plot->add_option("run", o.run, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*generate) {
            const auto cfg = resolve(o);
            const auto data = cdyn::obtain_dataset(cfg, cdyn::cache_dir(cfg));
            std::cout << "dataset " << (cdyn::cache_dir(cfg) / ("dataset-" + cdyn::dataset_key(cfg))).string() << " ("
                      << data.size() << " trajectories)\n";
        } else if (*train) {
            const auto cfg = resolve(o);
            const auto data = cdyn::obtain_dataset(cfg, cdyn::cache_dir(cfg));
            const auto splits = cdyn::make_splits(cfg.n_traj, cfg.seed);
            const auto set = cdyn::obtain_snapshots(cfg, data, splits, cdyn::cache_dir(cfg));
            std::cout << "snapshots " << (cdyn::cache_dir(cfg) / ("snapshots-" + cdyn::snapshot_key(cfg))).string()
                      << '\n';
            for (std::size_t c = 0; c < set.log.size(); ++c)
                std::cout << "cycle " << c + 1 << " loss " << cdyn::format_sci(set.log[c].loss_start) << " -> "
                          << cdyn::format_sci(set.log[c].loss_end) << '\n';
        } else if (*eval) {
            const auto cfg = resolve(o);
            const auto r = cdyn::run_experiment(cfg, cdyn::parse_method(o.method));
            print_rows(std::span(&r.eval.row, 1));
            std::cout << "artifacts " << r.dir.string() << '\n';
        } else if (*symmetry) {
            const auto cfg = resolve(o);
            const auto r = cdyn::run_symmetry(cfg);
            const cdyn::MetricRow rows[] = {r.unrotated.row, r.rotated.row};
            print_rows(rows);
            std::cout << "delta MAE " << cdyn::format_sci(r.delta.mae) << " RMSE " << cdyn::format_sci(r.delta.rmse)
                      << " Sharpness " << cdyn::format_sci(r.delta.sharpness) << '\n'
                      << "artifacts " << r.dir.string() << '\n';
        } else if (*plot) {
            for (const auto& p : cdyn::emit_plots(o.run)) std::cout << p.string() << '\n';
        } else if (*report) {
            const auto cfg = resolve(o);
            const std::string table = cdyn::summarize_reports(cfg.out);
            cdyn::write_text(cfg.out / "summary.csv", table);
            std::cout << table;
        }
    } catch (const cdyn::Error& e) {
        std::cerr << "cdyn: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "cdyn: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
