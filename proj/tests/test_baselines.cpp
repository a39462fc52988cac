#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cdyn/baselines.hpp"
#include "cdyn/error.hpp"
#include "oracles.hpp"

using namespace cdyn;

namespace {

std::vector<std::vector<Field>> random_stack(std::size_t members, std::size_t horizon, std::uint64_t seed) {
    std::vector<std::vector<Field>> s(members);
    for (std::size_t i = 0; i < members; ++i)
        for (std::size_t h = 0; h < horizon; ++h) s[i].push_back(oracle::random_field(8, seed * 1000 + i * 10 + h));
    return s;
}

SurrogateModel random_model(std::size_t n, std::size_t w, std::uint64_t seed) {
    SurrogateModel m(n, w, n / 4);
    Rng rng(seed);
    for (std::size_t mode : m.retained_modes())
        for (std::size_t i = 0; i < w; ++i) m.coeff(mode, i) = {rng.normal() * 0.4, rng.normal() * 0.4};
    m.enforce_symmetry();
    return m;
}

}  // namespace

TEST_CASE("identical members give zero spread") {
    const auto member = random_stack(1, 3, 1).front();
    const std::vector<std::vector<Field>> stack(4, member);
    const auto f = summarize_samples(stack, "ensemble");
    for (std::size_t h = 0; h < 3; ++h) {
        CHECK(f.mean[h] == member[h]);
        CHECK(f.sigma_field(h) == Field(8));
    }
}

TEST_CASE("two members 0 and 2 give mean 1 and population sigma 1") {
    Field zero(4), two(4);
    for (double& v : two.values()) v = 2.0;
    const auto f = summarize_samples({{zero}, {two}}, "ensemble");
    CHECK(f.mean[0].values()[0] == 1.0);
    CHECK(f.sigma_at(0, 0) == 1.0);
    const auto s = summarize_samples({{zero}, {two}}, "ensemble", StdConvention::Sample);
    CHECK(std::abs(s.sigma_at(0, 0) - std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("stack statistics match a two-pass loop oracle") {
    const auto stack = random_stack(7, 2, 3);
    const auto f = summarize_samples(stack, "ensemble");
    for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t c = 0; c < 64; ++c) {
            double sum = 0.0;
            for (const auto& m : stack) sum += m[h].values()[c];
            const double mean = sum / 7.0;
            double ss = 0.0;
            for (const auto& m : stack) ss += std::pow(m[h].values()[c] - mean, 2);
            CHECK(std::abs(f.mean[h].values()[c] - mean) < 1e-12);
            CHECK(std::abs(f.sigma_at(h, c) - std::sqrt(ss / 7.0)) < 1e-12);
        }
}

TEST_CASE("member order does not change the reduction") {
    auto stack = random_stack(9, 2, 4);
    const auto a = summarize_samples(stack, "x");
    std::reverse(stack.begin(), stack.end());
    std::rotate(stack.begin(), stack.begin() + 4, stack.end());
    const auto b = summarize_samples(stack, "x");
    for (std::size_t h = 0; h < 2; ++h) {
        CHECK(a.mean[h] == b.mean[h]);
        CHECK(a.sigma_field(h) == b.sigma_field(h));
    }
}

TEST_CASE("ensemble mean is linear and sigma vanishes only where members agree") {
    auto stack = random_stack(5, 1, 5);
    for (auto& m : stack) m[0](0, 0) = 0.25;  // agreement at one cell
    const auto base = summarize_samples(stack, "x");
    auto scaled = stack;
    for (auto& m : scaled) m[0] *= 3.0;
    const auto s = summarize_samples(scaled, "x");
    CHECK(oracle::max_abs_diff(s.mean[0], 3.0 * base.mean[0]) < 1e-12);
    CHECK(base.sigma_at(0, 0) == 0.0);
    for (std::size_t c = 1; c < 64; ++c) CHECK(base.sigma_at(0, c) > 0.0);
}

TEST_CASE("ensemble_forecast over snapshots") {
    const auto model = random_model(16, 2, 6);
    std::vector<Field> window{oracle::random_field(16, 7), oracle::random_field(16, 8)};
    SnapshotSet same{{model, model, model}, {}};
    const auto f = ensemble_forecast(same, window, 4);
    const auto single = rollout(model, window, 4);
    for (std::size_t h = 0; h < 4; ++h) {
        CHECK(f.mean[h] == single[h]);
        CHECK(f.sigma_field(h) == Field(16));
    }
    CHECK_THROWS_AS(ensemble_forecast(SnapshotSet{}, window, 4), Error);
}

TEST_CASE("mc dropout forecast contract") {
    const auto model = random_model(16, 2, 9);
    std::vector<Field> window{oracle::random_field(16, 10), oracle::random_field(16, 11)};
    const auto p0 = mc_dropout_forecast(model, window, 3, 0.0, 20, 1);
    for (std::size_t h = 0; h < 3; ++h) CHECK(p0.sigma_field(h) == Field(16));
    const auto n1 = mc_dropout_forecast(model, window, 3, 0.3, 1, 1);
    for (std::size_t h = 0; h < 3; ++h) CHECK(n1.sigma_field(h) == Field(16));
    const auto a = mc_dropout_forecast(model, window, 3, 0.05, 100, 42);
    const auto b = mc_dropout_forecast(model, window, 3, 0.05, 100, 42);
    for (std::size_t h = 0; h < 3; ++h) {
        CHECK(a.mean[h] == b.mean[h]);
        CHECK(a.sigma_field(h) == b.sigma_field(h));
    }
    CHECK(a.method == "dropout");
    double total = 0.0;
    for (std::size_t c = 0; c < 256; ++c) total += a.sigma_at(2, c);
    CHECK(total > 0.0);
    CHECK_THROWS_AS(mc_dropout_forecast(model, window, 3, 1.0, 10, 0), Error);
    CHECK_THROWS_AS(mc_dropout_forecast(model, window, 3, 0.1, 0, 0), Error);
}
