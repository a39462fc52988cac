#include "cdyn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "cdyn/error.hpp"
#include "cdyn/normal.hpp"

namespace cdyn {

void FlatPrediction::validate() const {
    require(!y.empty(), "flat prediction is empty");
    require(mu.size() == y.size() && sigma.size() == y.size(), "flat prediction arrays differ in length");
}

FlatPrediction FlatPrediction::slice(std::size_t begin, std::size_t end) const {
    require(begin <= end && end <= size(), "flat prediction slice out of range");
    auto cut = [&](const std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                                   v.begin() + static_cast<std::ptrdiff_t>(end));
    };
    return {cut(mu), cut(sigma), cut(y)};
}

void append_forecast(FlatPrediction& fp, const UncertaintyForecast& forecast, std::span<const Field> truth,
                     double sigma_floor) {
    require(truth.size() == forecast.horizon(), "append_forecast: truth horizon mismatch");
    for (std::size_t h = 0; h < forecast.horizon(); ++h) {
        const auto& mean = forecast.mean[h];
        require(truth[h].size() == mean.size(), "append_forecast: grid mismatch");
        for (std::size_t c = 0; c < mean.cell_count(); ++c) {
            fp.mu.push_back(mean.values()[c]);
            fp.sigma.push_back(std::max(forecast.sigma_at(h, c), sigma_floor));
            fp.y.push_back(truth[h].values()[c]);
        }
    }
}

double mae(const FlatPrediction& fp) {
    fp.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < fp.size(); ++i) s += std::abs(fp.y[i] - fp.mu[i]);
    return s / static_cast<double>(fp.size());
}

double rmse(const FlatPrediction& fp) {
    fp.validate();
    double s = 0.0;
    for (std::size_t i = 0; i < fp.size(); ++i) s += (fp.y[i] - fp.mu[i]) * (fp.y[i] - fp.mu[i]);
    return std::sqrt(s / static_cast<double>(fp.size()));
}

double sharpness(const FlatPrediction& fp) {
    require(!fp.sigma.empty(), "sharpness: empty input");
    double s = 0.0;
    for (double v : fp.sigma) s += v;
    return s / static_cast<double>(fp.sigma.size());
}

void CalibrationCurve::validate() const {
    require(expected.size() == observed.size() && expected.size() >= 2, "calibration curve: bad lengths");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        require(i == 0 || expected[i] > expected[i - 1], "calibration curve: expected not strictly increasing");
        require(observed[i] >= 0.0 && observed[i] <= 1.0, "calibration curve: observed outside [0, 1]");
    }
}

std::vector<double> probability_grid(std::size_t n) {
    require(n >= 3, "probability grid needs at least 3 points");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

Recalibrator::Recalibrator(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    require(x_.size() == y_.size() && x_.size() >= 2, "recalibrator: need at least two knots");
    for (std::size_t i = 1; i < x_.size(); ++i)
        require(x_[i] > x_[i - 1] && y_[i] >= y_[i - 1], "recalibrator: knots must be monotone");
}

double Recalibrator::operator()(double p) const {
    if (x_.empty()) return p;
    p = std::clamp(p, 0.0, 1.0);
    if (p <= x_.front()) return y_.front();
    if (p >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), p);
    const std::size_t hi = static_cast<std::size_t>(it - x_.begin());
    const std::size_t lo = hi - 1;
    const double t = (p - x_[lo]) / (x_[hi] - x_[lo]);
    return y_[lo] + t * (y_[hi] - y_[lo]);
}

CalibrationCurve calibration_curve(const FlatPrediction& fp, std::size_t n_grid, const Recalibrator* recal) {
    fp.validate();
    CalibrationCurve curve;
    curve.expected = probability_grid(n_grid);
    curve.observed.resize(n_grid);
    const double n = static_cast<double>(fp.size());
    for (std::size_t g = 0; g < n_grid; ++g) {
        const double p = curve.expected[g];
        if (g == 0 || g + 1 == n_grid) {
            curve.observed[g] = g == 0 ? 0.0 : 1.0;
            continue;
        }
        const double level = recal ? (*recal)(p) : p;
        if (level <= 0.0 || level >= 1.0) {
            curve.observed[g] = level <= 0.0 ? 0.0 : 1.0;
            continue;
        }
        const double z = normal_quantile(level);
        std::size_t below = 0;
        for (std::size_t i = 0; i < fp.size(); ++i) below += fp.y[i] <= fp.mu[i] + fp.sigma[i] * z;
        curve.observed[g] = static_cast<double>(below) / n;
    }
    return curve;
}

double miscalibration_area(const CalibrationCurve& curve) {
    curve.validate();
    double area = 0.0;
    for (std::size_t i = 1; i < curve.expected.size(); ++i) {
        const double a = std::abs(curve.observed[i - 1] - curve.expected[i - 1]);
        const double b = std::abs(curve.observed[i] - curve.expected[i]);
        area += 0.5 * (a + b) * (curve.expected[i] - curve.expected[i - 1]);
    }
    return area;
}

std::vector<double> pava(std::span<const double> ys, std::span<const double> weights) {
    require(!ys.empty(), "pava: empty input");
    require(ys.size() == weights.size(), "pava: ys and weights differ in length");
    for (double w : weights) require(w > 0.0, "pava: weights must be positive");

    struct Block {
        double value;
        double weight;
        std::size_t count;
    };
    std::vector<Block> stack;
    stack.reserve(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) {
        stack.push_back({ys[i], weights[i], 1});
        while (stack.size() > 1 && stack[stack.size() - 2].value > stack.back().value) {
            const Block top = stack.back();
            stack.pop_back();
            Block& prev = stack.back();
            const double w = prev.weight + top.weight;
            prev.value = (prev.weight * prev.value + top.weight * top.value) / w;
            prev.weight = w;
            prev.count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(ys.size());
    for (const auto& b : stack) out.insert(out.end(), b.count, b.value);
    return out;
}

std::vector<double> pava(std::span<const double> ys) {
    const std::vector<double> ones(ys.size(), 1.0);
    return pava(ys, ones);
}

Recalibrator fit_recalibrator(const CalibrationCurve& curve) {
    curve.validate();
    // Order by observed level, pooling ties into one weighted point.
    std::vector<std::size_t> order(curve.expected.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return curve.observed[a] < curve.observed[b]; });
    std::vector<double> xs, ys, ws;
    for (std::size_t idx : order) {
        const double x = curve.observed[idx], y = curve.expected[idx];
        if (!xs.empty() && xs.back() == x) {
            ys.back() = (ys.back() * ws.back() + y) / (ws.back() + 1.0);
            ws.back() += 1.0;
        } else {
            xs.push_back(x);
            ys.push_back(y);
            ws.push_back(1.0);
        }
    }
    std::vector<double> fitted = pava(ys, ws);

    // clamp endpoints: level 0 -> 0, level 1 -> 1
    if (xs.front() > 0.0) {
        xs.insert(xs.begin(), 0.0);
        fitted.insert(fitted.begin(), 0.0);
    } else {
        fitted.front() = 0.0;
    }
    if (xs.back() < 1.0) {
        xs.push_back(1.0);
        fitted.push_back(1.0);
    } else {
        fitted.back() = 1.0;
    }
    for (double& v : fitted) v = std::clamp(v, 0.0, 1.0);
    return {std::move(xs), std::move(fitted)};
}

double recalibration_area(const FlatPrediction& fp_fit, const FlatPrediction& fp_holdout, std::size_t n_grid) {
    const Recalibrator recal = fit_recalibrator(calibration_curve(fp_fit, n_grid));
    return miscalibration_area(calibration_curve(fp_holdout, n_grid, &recal));
}

}  // namespace cdyn
