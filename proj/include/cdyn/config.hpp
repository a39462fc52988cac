#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cdyn/baselines.hpp"
#include "cdyn/conformal.hpp"
#include "cdyn/normal.hpp"
#include "cdyn/sim.hpp"
#include "cdyn/surrogate.hpp"

namespace cdyn {

enum class Method { Conformal, Dropout, Ensemble };

const char* to_string(Method m);
Method parse_method(const std::string& name);

/// Forecaster evaluated by the harness: the trained surrogate, or the exact
/// diffusion propagator (diffusion datasets only; conformal method only).
enum class ModelKind { Surrogate, Oracle };

const char* to_string(ModelKind k);

struct ExperimentConfig {
    SimConfig sim;
    std::size_t n_traj = 1200;

    TrainSchedule schedule;  // schedule.cycles is the ensemble size M
    TrainConfig train;

    double alpha = 0.05;
    double dropout_p = 0.05;
    std::size_t mc_passes = 100;
    std::size_t horizon = 10;
    QuantileMode quantile_mode = QuantileMode::SplitQuantile;
    ZRule z_rule = ZRule::Tabulated;
    StdConvention std_convention = StdConvention::Population;
    std::size_t n_grid = 101;
    ModelKind model = ModelKind::Surrogate;

    std::uint64_t seed = 0;
    std::filesystem::path out = "runs";

    std::size_t window() const noexcept { return train.window; }
    void validate() const;
};

/// Parses "key = value" lines grouped by [section] headers. '#' starts a
/// comment. Unknown sections or keys are config errors.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical rendering of one section ("sim", "train", "uq", "run") or of the
/// whole config; feeds the cache keys and the run manifest.
std::string canonical_section(const ExperimentConfig& cfg, std::string_view section);
std::string canonical_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string content_hash(std::string_view text);

}  // namespace cdyn
