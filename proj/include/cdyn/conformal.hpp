#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cdyn/field.hpp"
#include "cdyn/normal.hpp"
#include "cdyn/surrogate.hpp"

namespace cdyn {

enum class QuantileMode {
    PaperMax,       // Q = max of the calibration scores
    SplitQuantile,  // Q = ceil((n+1)(1-alpha))-th smallest score
};

const char* to_string(QuantileMode mode);
QuantileMode parse_quantile_mode(const std::string& name);

/// Calibration scores, one list per horizon step, all of length n_cal.
struct ScoreTable {
    std::vector<std::vector<double>> steps;

    std::size_t horizon() const noexcept { return steps.size(); }
    std::size_t n_cal() const noexcept { return steps.empty() ? 0 : steps.front().size(); }
    void validate() const;
};

/// Per-step conformal radius Q^(h).
struct ConformalRadius {
    std::vector<double> q;
    double alpha = 0.05;
    QuantileMode mode = QuantileMode::SplitQuantile;
    std::size_t n_cal = 0;

    std::size_t horizon() const noexcept { return q.size(); }
};

/// Per-step mean and standard deviation. Sigma is a scalar per step for
/// conformal forecasts and a per-cell field for sampling methods.
struct UncertaintyForecast {
    std::string method;
    std::vector<Field> mean;
    std::variant<std::vector<double>, std::vector<Field>> sigma;

    std::size_t horizon() const noexcept { return mean.size(); }
    double sigma_at(std::size_t step, std::size_t cell) const;
    Field sigma_field(std::size_t step) const;
    void validate() const;
};

/// Nonconformity score ||truth - pred||_2.
double score(const Field& pred, const Field& truth);

/// Q from one step's scores under the chosen rule.
double conformal_quantile(std::span<const double> scores, double alpha, QuantileMode mode);

/// Rolls the model out from frames [0, W) of each trajectory and scores steps
/// 1..horizon against frames [W, W + horizon).
ScoreTable compute_scores(const RolloutModel& model, std::span<const Trajectory> trajectories, std::size_t window,
                          std::size_t horizon);

ConformalRadius radius_from_scores(const ScoreTable& scores, double alpha, QuantileMode mode);

ConformalRadius calibrate(const RolloutModel& model, std::span<const Trajectory> cal, std::size_t window,
                          double alpha, std::size_t horizon, QuantileMode mode = QuantileMode::SplitQuantile);

/// Deterministic rollout with sigma^(h) = Q^(h) / z broadcast over the grid.
UncertaintyForecast cp_forecast(const RolloutModel& model, std::span<const Field> window,
                                const ConformalRadius& radius, ZRule rule = ZRule::Tabulated);

/// Fraction of trajectories whose step-h score is within Q^(h), per step.
std::vector<double> empirical_coverage(const RolloutModel& model, const ConformalRadius& radius,
                                       std::span<const Trajectory> test, std::size_t window);

std::vector<double> coverage_from_scores(const ScoreTable& scores, const ConformalRadius& radius);

/// CSV with columns horizon_step,n_cal,alpha,mode,Q,sigma.
std::string radius_csv(const ConformalRadius& radius, ZRule rule = ZRule::Tabulated);

}  // namespace cdyn
