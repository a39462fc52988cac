#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cdyn/field.hpp"
#include "cdyn/spectral.hpp"

namespace cdyn {

/// Cosine-annealed learning rate, restarted every cycle.
struct TrainSchedule {
    double eta_max = 0.01;
    double eta_min = 0.0001;
    std::size_t steps_per_cycle = 100;  // T
    std::size_t cycles = 6;             // snapshots saved, one per cycle

    void validate() const;
};

/// eta_min + (eta_max - eta_min)(1 + cos(pi t / T)) / 2 for t in [0, T].
double lr_at(const TrainSchedule& schedule, std::size_t t);

/// Linear one-step forecaster acting independently on each Fourier mode:
///   u_hat_{n+1}(k) = sum_w c(k, w) u_hat_{n-W+1+w}(k)
/// Window position w = 0 is the oldest frame. Modes with
/// max(|kx|, |ky|) > cutoff carry zero weight.
class SurrogateModel {
public:
    SurrogateModel() = default;
    SurrogateModel(std::size_t grid, std::size_t window, std::size_t cutoff);

    /// Copies the newest input frame on every retained mode.
    static SurrogateModel persistence(std::size_t grid, std::size_t window, std::size_t cutoff);

    std::size_t grid() const noexcept { return grid_; }
    std::size_t window() const noexcept { return window_; }
    std::size_t cutoff() const noexcept { return cutoff_; }

    bool retained(std::size_t row, std::size_t col) const;
    /// Flat mode indices (row * grid + col) of retained modes, ascending.
    const std::vector<std::size_t>& retained_modes() const noexcept { return modes_; }

    cplx coeff(std::size_t mode, std::size_t w) const { return coeffs_[mode * window_ + w]; }
    cplx& coeff(std::size_t mode, std::size_t w) { return coeffs_[mode * window_ + w]; }
    std::span<const cplx> coeffs() const noexcept { return coeffs_; }
    std::span<cplx> coeffs() noexcept { return coeffs_; }

    /// Projects onto c(-k) = conj(c(k)) so real inputs give real forecasts.
    void enforce_symmetry();

    friend bool operator==(const SurrogateModel&, const SurrogateModel&) = default;

private:
    std::size_t grid_ = 0;
    std::size_t window_ = 0;
    std::size_t cutoff_ = 0;
    std::vector<std::size_t> modes_;
    std::vector<cplx> coeffs_;  // grid * grid * window
};

/// Deterministic one-step forecast from the last W frames (oldest first).
Field predict(const SurrogateModel& model, std::span<const Field> window);

/// Forecast with each mode's contribution kept with probability 1 - p and
/// survivors scaled by 1 / (1 - p). Conjugate modes share one draw.
Field predict_dropout(const SurrogateModel& model, std::span<const Field> window, double p, std::uint64_t seed);

/// Spectral-space forecast. `mode_scale`, when non-empty, multiplies each
/// retained mode's contribution (indexed like retained_modes()).
SpectralField predict_spectral(const SurrogateModel& model, std::span<const SpectralField> window,
                               std::span<const double> mode_scale = {});

/// Dropout multipliers (0 or 1/(1-p)) per retained mode.
std::vector<double> dropout_mask(const SurrogateModel& model, double p, std::uint64_t seed);

/// Any one-step forecaster: receives the last W frames, returns the next.
using OneStepModel = std::function<Field(std::span<const Field>)>;

OneStepModel as_one_step(SurrogateModel model);

/// Exact heat-equation propagator over one frame interval, as a forecaster.
/// Applies `substeps` exact steps of length dt to the newest frame.
OneStepModel diffusion_oracle(double nu, double dt, std::size_t substeps);

/// Autoregressive forecast: each prediction is appended and the window slides.
std::vector<Field> rollout(const OneStepModel& model, std::span<const Field> init_window, std::size_t horizon);

struct RolloutMode {
    bool dropout = false;
    double p = 0.0;
    std::uint64_t seed = 0;

    static RolloutMode deterministic() { return {}; }
    static RolloutMode with_dropout(double p, std::uint64_t seed) { return {true, p, seed}; }
};

/// Surrogate rollout; in dropout mode step h draws its mask from (seed, h).
std::vector<Field> rollout(const SurrogateModel& model, std::span<const Field> init_window, std::size_t horizon,
                           RolloutMode mode = RolloutMode::deterministic());

/// Multi-step forecaster: (initial window, horizon) -> horizon frames.
using RolloutModel = std::function<std::vector<Field>(std::span<const Field>, std::size_t)>;

RolloutModel rollout_model(SurrogateModel model);
RolloutModel rollout_model(OneStepModel model);

struct TrainConfig {
    std::size_t window = 10;
    std::size_t cutoff = 0;  // 0 selects grid / 4
    std::size_t batch_size = 16;

    std::size_t resolved_cutoff(std::size_t grid) const { return cutoff ? cutoff : grid / 4; }
};

/// Normalized training objective at the start and end of one cycle.
struct CycleLog {
    double loss_start = 0.0;
    double loss_end = 0.0;
};

/// Models saved at the end of each annealing cycle.
struct SnapshotSet {
    std::vector<SurrogateModel> snapshots;
    std::vector<CycleLog> log;
};

/// Mini-batch gradient descent on the per-mode squared one-step error, each
/// mode's term divided by that mode's mean window energy. Starts from the
/// persistence model; reshuffles (window, target) pairs every cycle.
SnapshotSet train_snapshots(std::span<const Trajectory> data, const TrainConfig& cfg,
                            const TrainSchedule& schedule, std::uint64_t seed);

/// Closed-form per-mode ridge regression. lambda = 0 with a rank-deficient
/// mode is a Numeric error.
SurrogateModel fit_ridge(std::span<const Trajectory> data, const TrainConfig& cfg, double lambda);

/// Mean squared physical-space one-step error over every (window, target) pair.
double one_step_mse(const OneStepModel& model, std::span<const Trajectory> data, std::size_t window);

/// "CDYM" model container.
std::vector<char> encode_model(const SurrogateModel& model);
SurrogateModel decode_model(std::vector<char> bytes, const std::string& source = "<memory>");
void save_model(const std::filesystem::path& path, const SurrogateModel& model);
SurrogateModel load_model(const std::filesystem::path& path);

/// Directory of snapshot_NN.cdym files plus manifest.txt.
void save_snapshots(const std::filesystem::path& dir, const SnapshotSet& set);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

}  // namespace cdyn
