#include <doctest.h>

#include <cmath>
#include <limits>

#include "cdyn/error.hpp"
#include "cdyn/metrics.hpp"
#include "cdyn/normal.hpp"
#include "oracles.hpp"

using namespace cdyn;

namespace {

FlatPrediction gaussian_data(std::size_t n, double true_scale, double predicted_scale, std::uint64_t seed) {
    Rng rng(seed);
    FlatPrediction fp;
    for (std::size_t i = 0; i < n; ++i) {
        const double mu = rng.normal();
        fp.mu.push_back(mu);
        fp.sigma.push_back(predicted_scale);
        fp.y.push_back(mu + true_scale * rng.normal());
    }
    return fp;
}

}  // namespace

TEST_CASE("mae and rmse") {
    FlatPrediction fp{{1, 2}, {1, 1}, {1, 2}};
    CHECK(mae(fp) == 0.0);
    CHECK(rmse(fp) == 0.0);
    fp.y = {2, 3};
    CHECK(mae(fp) == 1.0);
    CHECK(rmse(fp) == 1.0);
    fp.y = {1, 4};
    CHECK(mae(fp) == 1.0);
    CHECK(std::abs(rmse(fp) - std::sqrt(2.0)) < 1e-15);
    CHECK_THROWS_AS(mae(FlatPrediction{}), Error);
    CHECK_THROWS_AS(rmse(FlatPrediction{}), Error);
}

TEST_CASE("sharpness reads only sigma") {
    FlatPrediction fp{{0, 0, 0}, {0.5, 0.5, 0.5}, {1, 2, 3}};
    CHECK(sharpness(fp) == 0.5);
    FlatPrediction two{{0, 0}, {0.0, 1.0}, {0, 0}};
    CHECK(sharpness(two) == 0.5);

    auto g = gaussian_data(1000, 1.0, 0.7, 3);
    const double before = sharpness(g);
    for (double& v : g.y) v = v * 3.0 + 1.0;
    CHECK(sharpness(g) == before);
    CHECK_THROWS_AS(sharpness(FlatPrediction{}), Error);
}

TEST_CASE("append_forecast flattens with a sigma floor") {
    UncertaintyForecast f;
    f.mean = {Field(4), Field(4)};
    f.sigma = std::vector<double>{0.0, 2.0};
    const std::vector<Field> truth{Field(4), Field(4)};
    FlatPrediction fp;
    append_forecast(fp, f, truth);
    CHECK(fp.size() == 32);
    CHECK(fp.sigma[0] == kSigmaFloor);
    CHECK(fp.sigma[31] == 2.0);
}

TEST_CASE("calibration curve of matched Gaussian data is the diagonal") {
    const auto fp = gaussian_data(100000, 1.3, 1.3, 5);
    const auto curve = calibration_curve(fp, 101);
    double worst = 0.0;
    for (std::size_t i = 0; i < 101; ++i) worst = std::max(worst, std::abs(curve.observed[i] - curve.expected[i]));
    CHECK(worst < 0.01);
    CHECK(curve.observed.front() == 0.0);
    CHECK(curve.observed.back() == 1.0);
    for (std::size_t i = 1; i < 101; ++i) CHECK(curve.observed[i] >= curve.observed[i - 1]);
}

TEST_CASE("sigma inflated tenfold follows Phi(10 Phi^-1(p))") {
    const auto fp = gaussian_data(100000, 0.1, 1.0, 6);
    const auto curve = calibration_curve(fp, 101);
    for (std::size_t i = 1; i < 100; ++i) {
        const double p = curve.expected[i];
        const double expected_obs = oracle::phi(10.0 * oracle::phi_inv_bisect(p));
        CHECK(std::abs(curve.observed[i] - expected_obs) < 0.01);
        if (p < 0.45) CHECK(curve.observed[i] < p);
        if (p > 0.55) CHECK(curve.observed[i] > p);
    }
}

TEST_CASE("zero residuals make the curve jump at p = 0.5") {
    FlatPrediction fp{{1, 2, 3}, {0.3, 0.3, 0.3}, {1, 2, 3}};
    const auto curve = calibration_curve(fp, 101);
    for (std::size_t i = 0; i < 101; ++i) CHECK(curve.observed[i] == (i >= 50 ? 1.0 : 0.0));
}

TEST_CASE("miscalibration area") {
    CalibrationCurve diag{probability_grid(101), probability_grid(101)};
    CHECK(miscalibration_area(diag) == 0.0);

    CalibrationCurve ones{probability_grid(101), std::vector<double>(101, 1.0)};
    ones.observed[0] = 0.0;
    CHECK(std::abs(miscalibration_area(ones) - 0.5) < 1e-2);

    // refinement oracle: the same monotone curve integrated on 10^4 points
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = 0.2 + 3.0 * rng.uniform();
        auto curve_at = [a](double p) { return std::pow(p, a); };
        CalibrationCurve c{probability_grid(101), {}};
        for (double p : c.expected) c.observed.push_back(curve_at(p));
        double fine = 0.0;
        const int m = 10000;
        for (int i = 0; i < m; ++i) {
            const double p = (i + 0.5) / m;
            fine += std::abs(curve_at(p) - p) / m;
        }
        CHECK(std::abs(miscalibration_area(c) - fine) < 1e-3);
        CHECK(miscalibration_area(c) >= 0.0);
        CHECK(miscalibration_area(c) <= 1.0);
    }
}

TEST_CASE("pava examples") {
    CHECK(pava(std::vector<double>{1, 2, 2, 5}) == std::vector<double>{1, 2, 2, 5});
    const auto a = pava(std::vector<double>{1, 3, 2});
    CHECK(a == oracle::brute_force_isotonic({1, 3, 2}, {1, 1, 1}));
    CHECK(a == std::vector<double>{1, 2.5, 2.5});
    CHECK(pava(std::vector<double>{3, 2, 1}) == std::vector<double>{2, 2, 2});
    CHECK_THROWS_AS(pava(std::vector<double>{1, 2}, std::vector<double>{1, 0}), Error);
    CHECK_THROWS_AS(pava(std::vector<double>{1, 2}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(pava(std::vector<double>{}), Error);
}

TEST_CASE("pava matches exhaustive search and preserves the weighted mean") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(8);
        std::vector<double> y(n), w(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = rng.normal(), w[i] = 0.1 + rng.uniform();
        const auto fit = pava(y, w);
        const auto ref = oracle::brute_force_isotonic(y, w);
        double sw = 0, swy = 0, swf = 0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(fit[i] - ref[i]) < 1e-9);
            if (i) CHECK(fit[i] >= fit[i - 1]);
            sw += w[i], swy += w[i] * y[i], swf += w[i] * fit[i];
        }
        CHECK(std::abs(swy / sw - swf / sw) < 1e-12);
    }
}

TEST_CASE("recalibrator of a calibrated curve is near identity") {
    CalibrationCurve diag{probability_grid(101), probability_grid(101)};
    const auto r = fit_recalibrator(diag);
    for (double p = 0.0; p <= 1.0; p += 0.001) CHECK(std::abs(r(p) - p) < 0.01);
    CHECK(r(0.0) == 0.0);
    CHECK(r(1.0) == 1.0);
}

TEST_CASE("recalibration shrinks the miscalibration area") {
    for (double scale : {0.3, 0.8, 2.0, 5.0}) {
        const auto fp = gaussian_data(20000, 1.0, scale, 9);
        const double ma = miscalibration_area(calibration_curve(fp, 101));
        const double ra = recalibration_area(fp, fp, 101);
        CHECK(ra <= ma);
        const auto r = fit_recalibrator(calibration_curve(fp, 101));
        for (std::size_t i = 1; i < r.knots_y().size(); ++i) CHECK(r.knots_y()[i] >= r.knots_y()[i - 1]);
    }
}

TEST_CASE("held-out recalibration area on Gaussian data") {
    const auto fp = gaussian_data(100000, 1.0, 1.0, 10);
    CHECK(recalibration_area(fp.slice(0, 50000), fp.slice(50000, 100000)) < 0.01);
    CHECK(recalibration_area(fp, fp) < 0.01);

    const auto wide = gaussian_data(100000, 1.0, 2.5, 11);
    const double ra = recalibration_area(wide.slice(0, 50000), wide.slice(50000, 100000));
    MESSAGE("overwide sigma: MA " << miscalibration_area(calibration_curve(wide)) << " RA " << ra);
    CHECK(ra < 0.02);
}
