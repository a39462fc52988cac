#include "cdyn/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "cdyn/error.hpp"
#include "cdyn/parallel.hpp"

namespace cdyn {

UncertaintyForecast summarize_samples(const std::vector<std::vector<Field>>& samples, std::string method,
                                      StdConvention convention) {
    require(!samples.empty(), "summarize_samples: no samples");
    const std::size_t n = samples.size();
    const std::size_t horizon = samples.front().size();
    for (const auto& s : samples) require(s.size() == horizon, "summarize_samples: ragged horizons");

    UncertaintyForecast out;
    out.method = std::move(method);
    std::vector<Field> sigma;
    std::vector<double> column(n);
    for (std::size_t h = 0; h < horizon; ++h) {
        const std::size_t grid = samples.front()[h].size();
        Field mean(grid), sd(grid);
        for (std::size_t c = 0; c < grid * grid; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                require(samples[i][h].size() == grid, "summarize_samples: grid size mismatch");
                column[i] = samples[i][h].values()[c];
            }
            std::sort(column.begin(), column.end());
            if (column.front() == column.back()) {
                mean.values()[c] = column.front();
                continue;  // sd stays exactly 0
            }
            double sum = 0.0;
            for (double v : column) sum += v;
            const double mu = sum / static_cast<double>(n);
            double ss = 0.0;
            for (double v : column) ss += (v - mu) * (v - mu);
            const double denom = convention == StdConvention::Population ? static_cast<double>(n)
                                                                         : static_cast<double>(n - 1);
            mean.values()[c] = mu;
            sd.values()[c] = std::sqrt(ss / denom);
        }
        out.mean.push_back(std::move(mean));
        sigma.push_back(std::move(sd));
    }
    out.sigma = std::move(sigma);
    return out;
}

UncertaintyForecast ensemble_forecast(const SnapshotSet& snapshots, std::span<const Field> window,
                                      std::size_t horizon, StdConvention convention) {
    require(!snapshots.snapshots.empty(), "ensemble_forecast: empty snapshot set");
    std::vector<std::vector<Field>> samples(snapshots.snapshots.size());
    parallel_for(samples.size(), [&](std::size_t i) { samples[i] = rollout(snapshots.snapshots[i], window, horizon); });
    return summarize_samples(samples, "ensemble", convention);
}

UncertaintyForecast mc_dropout_forecast(const SurrogateModel& model, std::span<const Field> window,
                                        std::size_t horizon, double p, std::size_t passes, std::uint64_t seed,
                                        StdConvention convention) {
    require(passes >= 1, "mc_dropout_forecast: need at least one pass");
    require(p >= 0.0 && p < 1.0, "mc_dropout_forecast: dropout rate must be in [0, 1)");
    std::vector<std::vector<Field>> samples(passes);
    parallel_for(passes, [&](std::size_t i) {
        samples[i] = rollout(model, window, horizon, RolloutMode::with_dropout(p, seed + i));
    });
    return summarize_samples(samples, "dropout", convention);
}

}  // namespace cdyn
