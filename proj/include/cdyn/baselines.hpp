#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdyn/conformal.hpp"
#include "cdyn/surrogate.hpp"

namespace cdyn {

enum class StdConvention {
    Population,  // divide by N
    Sample,      // divide by N - 1 (zero when N = 1)
};

/// samples[i][h]: member or pass i at horizon step h. Per cell the values are
/// reduced in sorted order, so the result is invariant under permuting members.
UncertaintyForecast summarize_samples(const std::vector<std::vector<Field>>& samples, std::string method,
                                      StdConvention convention = StdConvention::Population);

/// Each snapshot rolls out on its own predictions; per-cell mean and std.
UncertaintyForecast ensemble_forecast(const SnapshotSet& snapshots, std::span<const Field> window,
                                      std::size_t horizon, StdConvention convention = StdConvention::Population);

/// N dropout rollouts, pass i seeded with seed + i.
UncertaintyForecast mc_dropout_forecast(const SurrogateModel& model, std::span<const Field> window,
                                        std::size_t horizon, double p = 0.05, std::size_t passes = 100,
                                        std::uint64_t seed = 0,
                                        StdConvention convention = StdConvention::Population);

}  // namespace cdyn
