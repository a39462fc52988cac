#include "cdyn/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdyn/error.hpp"
#include "cdyn/io.hpp"
#include "cdyn/parallel.hpp"

namespace cdyn {

const char* to_string(QuantileMode mode) {
    return mode == QuantileMode::PaperMax ? "paper-max" : "split-quantile";
}

QuantileMode parse_quantile_mode(const std::string& name) {
    if (name == "paper-max") return QuantileMode::PaperMax;
    if (name == "split-quantile") return QuantileMode::SplitQuantile;
    fail(ErrorKind::Config, "unknown quantile mode '" + name + "' (expected paper-max or split-quantile)");
}

void ScoreTable::validate() const {
    require(!steps.empty(), "score table is empty");
    for (const auto& s : steps) {
        require(s.size() == n_cal(), "score table steps differ in length");
        for (double v : s) require(std::isfinite(v) && v >= 0.0, "score table holds a negative or non-finite score");
    }
}

double UncertaintyForecast::sigma_at(std::size_t step, std::size_t cell) const {
    if (const auto* scalar = std::get_if<std::vector<double>>(&sigma)) return (*scalar)[step];
    return std::get<std::vector<Field>>(sigma)[step].values()[cell];
}

Field UncertaintyForecast::sigma_field(std::size_t step) const {
    if (const auto* fields = std::get_if<std::vector<Field>>(&sigma)) return (*fields)[step];
    Field f(mean.at(step).size());
    for (double& v : f.values()) v = std::get<std::vector<double>>(sigma)[step];
    return f;
}

void UncertaintyForecast::validate() const {
    const std::size_t n = std::visit([](const auto& v) { return v.size(); }, sigma);
    require(n == mean.size(), "forecast sigma and mean horizons differ");
    for (std::size_t h = 0; h < n; ++h)
        for (std::size_t c = 0; c < mean[h].cell_count(); ++c)
            require(sigma_at(h, c) >= 0.0, "forecast sigma is negative");
}

double score(const Field& pred, const Field& truth) { return l2_dist(truth, pred); }

double conformal_quantile(std::span<const double> scores, double alpha, QuantileMode mode) {
    require(!scores.empty(), "conformal_quantile: no calibration scores");
    require(alpha > 0.0 && alpha < 1.0, "conformal_quantile: alpha must be in (0, 1)");
    if (mode == QuantileMode::PaperMax) return *std::max_element(scores.begin(), scores.end());

    const std::size_t n = scores.size();
    const auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n + 1) * (1.0 - alpha) - 1e-12));
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    if (k > n) return sorted.back();
    return sorted[std::max<std::size_t>(k, 1) - 1];
}

ScoreTable compute_scores(const RolloutModel& model, std::span<const Trajectory> trajectories, std::size_t window,
                          std::size_t horizon) {
    require(!trajectories.empty(), "conformal: empty trajectory set");
    require(horizon >= 1, "conformal: horizon must be >= 1");
    for (const auto& t : trajectories)
        require(t.frames.size() >= window + horizon,
                "conformal: horizon " + std::to_string(horizon) + " exceeds trajectory length " +
                    std::to_string(t.frames.size()) + " minus window " + std::to_string(window));

    std::vector<std::vector<double>> per_traj(trajectories.size());
    parallel_for(trajectories.size(), [&](std::size_t i) {
        const auto& frames = trajectories[i].frames;
        const auto pred = model(std::span<const Field>(frames).first(window), horizon);
        per_traj[i].resize(horizon);
        for (std::size_t h = 0; h < horizon; ++h) per_traj[i][h] = score(pred[h], frames[window + h]);
    });

    ScoreTable table;
    table.steps.assign(horizon, std::vector<double>(trajectories.size()));
    for (std::size_t i = 0; i < trajectories.size(); ++i)
        for (std::size_t h = 0; h < horizon; ++h) table.steps[h][i] = per_traj[i][h];
    return table;
}

ConformalRadius radius_from_scores(const ScoreTable& scores, double alpha, QuantileMode mode) {
    scores.validate();
    ConformalRadius r{.q = {}, .alpha = alpha, .mode = mode, .n_cal = scores.n_cal()};
    for (const auto& step : scores.steps) r.q.push_back(conformal_quantile(step, alpha, mode));
    return r;
}

ConformalRadius calibrate(const RolloutModel& model, std::span<const Trajectory> cal, std::size_t window,
                          double alpha, std::size_t horizon, QuantileMode mode) {
    require(!cal.empty(), "calibrate: empty calibration set");
    require(alpha > 0.0 && alpha < 1.0, "calibrate: alpha must be in (0, 1)");
    return radius_from_scores(compute_scores(model, cal, window, horizon), alpha, mode);
}

UncertaintyForecast cp_forecast(const RolloutModel& model, std::span<const Field> window,
                                const ConformalRadius& radius, ZRule rule) {
    require(radius.horizon() >= 1, "cp_forecast: radius has no horizon steps");
    UncertaintyForecast out;
    out.method = "cp";
    out.mean = model(window, radius.horizon());
    require(out.mean.size() == radius.horizon(), "cp_forecast: horizon mismatch between model and radius");
    const double z = gaussian_z(radius.alpha, rule);
    std::vector<double> sigma;
    for (double q : radius.q) sigma.push_back(q / z);
    out.sigma = std::move(sigma);
    return out;
}

std::vector<double> coverage_from_scores(const ScoreTable& scores, const ConformalRadius& radius) {
    require(scores.horizon() == radius.horizon(), "coverage: horizon mismatch");
    std::vector<double> out;
    for (std::size_t h = 0; h < scores.horizon(); ++h) {
        const auto& s = scores.steps[h];
        const auto inside = std::count_if(s.begin(), s.end(), [&](double v) { return v <= radius.q[h]; });
        out.push_back(static_cast<double>(inside) / static_cast<double>(s.size()));
    }
    return out;
}

std::vector<double> empirical_coverage(const RolloutModel& model, const ConformalRadius& radius,
                                       std::span<const Trajectory> test, std::size_t window) {
    return coverage_from_scores(compute_scores(model, test, window, radius.horizon()), radius);
}

std::string radius_csv(const ConformalRadius& radius, ZRule rule) {
    const double z = gaussian_z(radius.alpha, rule);
    std::ostringstream os;
    os << "horizon_step,n_cal,alpha,mode,Q,sigma\n";
    for (std::size_t h = 0; h < radius.horizon(); ++h) {
        os << h + 1 << ',' << radius.n_cal << ',' << format_sci(radius.alpha) << ',' << to_string(radius.mode) << ','
           << format_sci(radius.q[h]) << ',' << format_sci(radius.q[h] / z) << '\n';
    }
    return os.str();
}

}  // namespace cdyn
