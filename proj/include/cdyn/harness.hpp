#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdyn/config.hpp"
#include "cdyn/metrics.hpp"

namespace cdyn {

/// One row of the metric report.
struct MetricRow {
    std::string method;
    std::string model;
    double mae = 0.0;
    double rmse = 0.0;
    double sharpness = 0.0;
    double ma = 0.0;
    double ra = 0.0;
};

/// Per horizon step: mean |forecast mean|, mean sigma, mean |error|.
struct StepSummary {
    double mean_abs = 0.0;
    double mean_sigma = 0.0;
    double mae = 0.0;
};

struct Evaluation {
    MetricRow row;
    std::optional<ConformalRadius> radius;  // conformal only
    ScoreTable test_scores;                 // conformal only
    std::vector<double> coverage;           // conformal only
    FlatPrediction flat;
    CalibrationCurve curve;
    CalibrationCurve recalibrated;  // second half, levels remapped by the first-half fit
    std::vector<StepSummary> steps;
    UncertaintyForecast panel;  // first test trajectory
    std::vector<Field> panel_truth;
};

/// Dataset for cfg: loaded from <cache>/dataset-<hash> or generated and stored.
/// An empty cache path disables caching.
std::vector<Trajectory> obtain_dataset(const ExperimentConfig& cfg, const std::filesystem::path& cache);

/// Snapshots trained on the train split, cached like the dataset.
SnapshotSet obtain_snapshots(const ExperimentConfig& cfg, std::span<const Trajectory> data,
                             const DatasetSplits& splits, const std::filesystem::path& cache);

std::filesystem::path cache_dir(const ExperimentConfig& cfg);
std::string dataset_key(const ExperimentConfig& cfg);
std::string snapshot_key(const ExperimentConfig& cfg);

/// Calibrates on `cal` (conformal only) and evaluates on `test`. `snapshots` may
/// be null for the oracle model.
Evaluation evaluate(const ExperimentConfig& cfg, Method method, const SnapshotSet* snapshots,
                    std::span<const Trajectory> cal, std::span<const Trajectory> test);

/// report.csv body: header plus one line per row, metrics at 4 decimals.
std::string report_csv(std::span<const MetricRow> rows);

/// Writes every artifact of one evaluation into dir (no manifest, no plots).
void write_evaluation(const std::filesystem::path& dir, const ExperimentConfig& cfg, const Evaluation& ev);

/// Writes manifest.txt listing config hash, seed and every file in dir.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const std::string& run_id);

std::string run_id(const ExperimentConfig& cfg, const std::string& kind);

struct RunResult {
    std::filesystem::path dir;
    Evaluation eval;
};

/// Full pipeline for one method; artifacts under cfg.out / run_id.
RunResult run_experiment(const ExperimentConfig& cfg, Method method);

struct SymmetryResult {
    std::filesystem::path dir;
    Evaluation unrotated;
    Evaluation rotated;
    MetricRow delta;  // rotated - unrotated
};

/// Conformal evaluation on the unrotated and the rot90 calibration + test sets.
SymmetryResult run_symmetry(const ExperimentConfig& cfg);

/// Gathers every <out>/*/report.csv into one table, sorted by run id.
std::string summarize_reports(const std::filesystem::path& out);

}  // namespace cdyn
