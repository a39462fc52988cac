#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cdyn/conformal.hpp"
#include "cdyn/field.hpp"

namespace cdyn {

inline constexpr double kSigmaFloor = 1e-12;

/// Parallel arrays over every evaluated scalar: predicted mean, predicted
/// standard deviation (floored) and truth.
struct FlatPrediction {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> y;

    std::size_t size() const noexcept { return y.size(); }
    void validate() const;
    /// Points [begin, end).
    FlatPrediction slice(std::size_t begin, std::size_t end) const;
};

/// Appends every cell of every horizon step of `forecast` against `truth`.
void append_forecast(FlatPrediction& fp, const UncertaintyForecast& forecast, std::span<const Field> truth,
                     double sigma_floor = kSigmaFloor);

double mae(const FlatPrediction& fp);
double rmse(const FlatPrediction& fp);
/// Mean predictive standard deviation; never reads the truths.
double sharpness(const FlatPrediction& fp);

/// Observed vs expected cumulative probability.
struct CalibrationCurve {
    std::vector<double> expected;
    std::vector<double> observed;

    void validate() const;
};

/// n equispaced levels on [0, 1], endpoints included.
std::vector<double> probability_grid(std::size_t n);

/// Monotone piecewise-linear map of quantile levels on [0, 1].
class Recalibrator {
public:
    Recalibrator() = default;
    Recalibrator(std::vector<double> x, std::vector<double> y);

    double operator()(double p) const;
    const std::vector<double>& knots_x() const noexcept { return x_; }
    const std::vector<double>& knots_y() const noexcept { return y_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

/// observed(p) = fraction of points with y <= mu + sigma Phi^-1(level(p)),
/// where level is the identity or the given recalibration map.
CalibrationCurve calibration_curve(const FlatPrediction& fp, std::size_t n_grid = 101,
                                   const Recalibrator* recal = nullptr);

/// Trapezoidal integral of |observed - expected| over expected.
double miscalibration_area(const CalibrationCurve& curve);

/// Weighted least-squares non-decreasing fit (pool adjacent violators).
std::vector<double> pava(std::span<const double> ys, std::span<const double> weights);
std::vector<double> pava(std::span<const double> ys);

/// Isotonic regression of expected on observed: maps a requested level to the
/// level whose observed frequency matches it. Clamped to 0 -> 0, 1 -> 1.
Recalibrator fit_recalibrator(const CalibrationCurve& curve);

/// Fits on fp_fit's curve, returns the miscalibration area of fp_holdout's
/// recalibrated curve.
double recalibration_area(const FlatPrediction& fp_fit, const FlatPrediction& fp_holdout,
                          std::size_t n_grid = 101);

}  // namespace cdyn
