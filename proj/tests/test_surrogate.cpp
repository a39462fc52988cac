#include <doctest.h>

#include <cmath>
#include <vector>

#include "cdyn/error.hpp"
#include "cdyn/sim.hpp"
#include "cdyn/surrogate.hpp"
#include "oracles.hpp"

using namespace cdyn;

namespace {

std::vector<Field> random_window(std::size_t n, std::size_t w, std::uint64_t seed) {
    std::vector<Field> out;
    for (std::size_t i = 0; i < w; ++i) out.push_back(oracle::random_field(n, seed * 100 + i));
    return out;
}

SurrogateModel random_model(std::size_t n, std::size_t w, std::size_t k, std::uint64_t seed) {
    SurrogateModel m(n, w, k);
    Rng rng(seed);
    for (std::size_t mode : m.retained_modes())
        for (std::size_t i = 0; i < w; ++i) m.coeff(mode, i) = {rng.normal() * 0.3, rng.normal() * 0.3};
    m.enforce_symmetry();
    return m;
}

SimConfig diffusion_config() {
    SimConfig cfg;
    cfg.solver = Solver::Diffusion;
    cfg.grid = 16;
    cfg.nu = 0.05;
    cfg.dt = 0.02;
    cfg.substeps = 5;
    cfg.frames_per_traj = 20;
    cfg.seed = 3;
    return cfg;
}

double rms(std::span<const Trajectory> data, std::size_t window) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& t : data)
        for (std::size_t i = window; i < t.frames.size(); ++i)
            for (double v : t.frames[i].values()) s += v * v, ++n;
    return std::sqrt(s / double(n));
}

}  // namespace

TEST_CASE("cosine schedule values") {
    const TrainSchedule s;
    CHECK(lr_at(s, 0) == 0.01);
    CHECK(lr_at(s, 100) == 0.0001);
    CHECK(std::abs(lr_at(s, 50) - 0.00505) < 1e-15);
    for (std::size_t t = 0; t < 100; ++t) CHECK(lr_at(s, t + 1) <= lr_at(s, t));
    CHECK_THROWS_AS(lr_at(s, 101), Error);
}

TEST_CASE("schedule validation") {
    TrainSchedule s;
    s.eta_min = 0.02;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.steps_per_cycle = 1;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("predict: zero window, linearity, per-mode oracle") {
    const auto model = random_model(16, 3, 4, 1);
    const std::vector<Field> zeros(3, Field(16));
    CHECK(predict(model, zeros) == Field(16));

    auto win = random_window(16, 3, 2);
    const Field base = predict(model, win);
    auto scaled = win;
    for (auto& f : scaled) f *= 2.5;
    CHECK(oracle::max_abs_diff(predict(model, scaled), 2.5 * base) < 1e-10);

    // naive oracle: direct DFT of each frame, per-mode scalar multiply-add, direct inverse
    std::vector<std::vector<oracle::cplx>> hats;
    for (const auto& f : win) hats.push_back(oracle::naive_dft(f));
    std::vector<oracle::cplx> out(256);
    for (std::size_t mode = 0; mode < 256; ++mode) {
        if (!model.retained(mode / 16, mode % 16)) continue;
        for (std::size_t w = 0; w < 3; ++w) out[mode] += model.coeff(mode, w) * hats[w][mode];
    }
    CHECK(oracle::max_abs_diff(base, oracle::naive_idft(out, 16)) < 1e-10);

    CHECK_THROWS_AS(predict(model, std::span<const Field>(win).first(2)), Error);
}

TEST_CASE("predictions stay real after symmetry enforcement") {
    auto model = random_model(16, 2, 7, 5);
    const auto win = random_window(16, 2, 6);
    std::vector<SpectralField> hat;
    for (const auto& f : win) hat.push_back(fft2(f));
    CHECK(max_imag_residue(predict_spectral(model, hat)) < 1e-10);
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        CHECK(max_imag_residue(predict_spectral(model, hat, dropout_mask(model, 0.3, seed))) < 1e-10);
}

TEST_CASE("dropout prediction contract") {
    const auto model = random_model(16, 3, 4, 7);
    const auto win = random_window(16, 3, 8);
    for (std::uint64_t seed : {0u, 1u, 99u}) CHECK(predict_dropout(model, win, 0.0, seed) == predict(model, win));
    CHECK(predict_dropout(model, win, 0.2, 4) == predict_dropout(model, win, 0.2, 4));
    CHECK(!(predict_dropout(model, win, 0.2, 4) == predict_dropout(model, win, 0.2, 5)));
    CHECK_THROWS_AS(predict_dropout(model, win, 1.0, 0), Error);
    CHECK_THROWS_AS(predict_dropout(model, win, -0.1, 0), Error);

    const auto mask = dropout_mask(model, 0.5, 11);
    for (double v : mask) CHECK((v == 0.0 || v == 2.0));
}

TEST_CASE("dropout mean over 10^4 seeds is within 3 standard errors per mode") {
    const auto model = random_model(16, 3, 4, 9);
    const auto win = random_window(16, 3, 10);
    std::vector<SpectralField> hat;
    for (const auto& f : win) hat.push_back(fft2(f));
    const auto exact = predict_spectral(model, hat);
    const double p = 0.05;
    const std::size_t passes = 10000;
    std::vector<oracle::cplx> sum(256);
    std::vector<double> sumsq(256, 0.0);
    for (std::size_t s = 0; s < passes; ++s) {
        const auto out = fft2(predict_dropout(model, win, p, s));
        for (std::size_t m = 0; m < 256; ++m) {
            sum[m] += out.coeffs()[m];
            sumsq[m] += std::norm(out.coeffs()[m]);
        }
    }
    std::size_t checked = 0;
    for (std::size_t m = 0; m < 256; ++m) {
        if (!model.retained(m / 16, m % 16) || std::abs(exact.coeffs()[m]) < 1e-9) continue;
        const oracle::cplx mean = sum[m] / double(passes);
        const double var = sumsq[m] / double(passes) - std::norm(mean);
        const double se = std::sqrt(var / double(passes));
        CHECK(std::abs(mean - exact.coeffs()[m]) <= 3.0 * se);
        ++checked;
    }
    CHECK(checked > 50);
}

TEST_CASE("rollout contract") {
    const auto model = random_model(16, 2, 4, 12);
    const auto win = random_window(16, 2, 13);
    const auto one = rollout(model, win, 1);
    REQUIRE(one.size() == 1);
    CHECK(oracle::max_abs_diff(one[0], predict(model, win)) < 1e-12);

    const auto generic = rollout(as_one_step(model), win, 4);
    const auto spectral = rollout(model, win, 4);
    REQUIRE(generic.size() == 4);
    for (std::size_t h = 0; h < 4; ++h) CHECK(oracle::max_abs_diff(generic[h], spectral[h]) < 1e-10);

    const auto ten = rollout(SurrogateModel::persistence(16, 10, 4), random_window(16, 10, 14), 10);
    CHECK(ten.size() == 10);

    const auto d1 = rollout(model, win, 5, RolloutMode::with_dropout(0.1, 3));
    const auto d2 = rollout(model, win, 5, RolloutMode::with_dropout(0.1, 3));
    CHECK(d1 == d2);
    CHECK_THROWS_AS(rollout(model, win, 0), Error);
}

TEST_CASE("oracle propagator rollout reproduces the solver trajectory") {
    const auto cfg = diffusion_config();
    const auto traj = generate_trajectory(cfg, 0);
    const auto oracle_model = diffusion_oracle(cfg.nu, cfg.dt, cfg.substeps);
    const auto pred = rollout(oracle_model, std::span<const Field>(traj.frames).first(10), 10);
    for (std::size_t h = 0; h < 10; ++h) CHECK(oracle::max_abs_diff(pred[h], traj.frames[10 + h]) < 1e-10);
}

TEST_CASE("ridge recovers the analytic diffusion propagator") {
    const auto cfg = diffusion_config();
    const auto data = generate_dataset(cfg, 6);
    TrainConfig tc;
    tc.window = 1;
    tc.cutoff = 7;
    const auto model = fit_ridge(data, tc, 1e-12);
    std::size_t checked = 0;
    for (std::size_t mode : model.retained_modes()) {
        if (mode == 0) continue;  // the zero mode carries no energy
        const long ky = wavenumber(mode / 16, 16), kx = wavenumber(mode % 16, 16);
        const double expected = std::exp(-cfg.nu * double(kx * kx + ky * ky) * cfg.frame_dt());
        CHECK(std::abs(model.coeff(mode, 0) - cplx(expected, 0)) < 1e-8);
        ++checked;
    }
    CHECK(checked == 224);

    const auto big = fit_ridge(data, tc, 1e30);
    for (const auto& c : big.coeffs()) CHECK(std::abs(c) < 1e-6);

    CHECK_THROWS_AS(fit_ridge(data, tc, 0.0), Error);  // zero mode is empty
}

TEST_CASE("snapshot training: count, determinism, per-cycle descent") {
    const auto cfg = diffusion_config();
    const auto data = generate_dataset(cfg, 8);
    TrainConfig tc;
    tc.window = 3;
    const TrainSchedule schedule;
    const auto a = train_snapshots(data, tc, schedule, 17);
    const auto b = train_snapshots(data, tc, schedule, 17);
    REQUIRE(a.snapshots.size() == 6);
    CHECK(a.snapshots == b.snapshots);
    for (const auto& log : a.log) CHECK(log.loss_end <= log.loss_start);
    for (const auto& s : a.snapshots) {
        CHECK(s.grid() == 16);
        CHECK(s.window() == 3);
        CHECK(s.cutoff() == 4);
    }
    const auto c = train_snapshots(data, tc, schedule, 18);
    CHECK(!(c.snapshots.back() == a.snapshots.back()));
}

TEST_CASE("single-cycle training reaches the ridge solution's accuracy") {
    const auto cfg = diffusion_config();
    const auto data = generate_dataset(cfg, 12);
    const std::span<const Trajectory> train(data.data(), 10), val(data.data() + 10, 2);
    TrainConfig tc;
    tc.window = 10;
    tc.cutoff = 7;
    TrainSchedule schedule;
    schedule.cycles = 1;
    schedule.steps_per_cycle = 1000;
    const auto set = train_snapshots(train, tc, schedule, 1);
    REQUIRE(set.snapshots.size() == 1);
    const double rmse = std::sqrt(one_step_mse(as_one_step(set.snapshots[0]), val, 10));
    CHECK(rmse < 0.1 * rms(val, 10));

    tc.window = 1;
    const auto ridge = fit_ridge(train, tc, 1e-12);
    const double ridge_rmse = std::sqrt(one_step_mse(as_one_step(ridge), val, 1));
    CHECK(ridge_rmse < 0.1 * rms(val, 1));
}

TEST_CASE("ridge fit beats every snapshot on its own training loss") {
    const auto cfg = diffusion_config();
    const auto data = generate_dataset(cfg, 8);
    TrainConfig tc;
    tc.window = 2;
    const auto set = train_snapshots(data, tc, TrainSchedule{}, 2);
    const auto ridge = fit_ridge(data, tc, 1e-9);
    const double ridge_mse = one_step_mse(as_one_step(ridge), data, 2);
    for (const auto& s : set.snapshots) CHECK(ridge_mse <= one_step_mse(as_one_step(s), data, 2));
}

TEST_CASE("training rejects unusable data") {
    TrainConfig tc;
    CHECK_THROWS_AS(train_snapshots({}, tc, TrainSchedule{}, 0), Error);
    const auto cfg = diffusion_config();
    auto data = generate_dataset(cfg, 1);
    data[0].frames.resize(10);
    CHECK_THROWS_AS(train_snapshots(data, tc, TrainSchedule{}, 0), Error);
}

TEST_CASE("model container round trip") {
    const auto m = random_model(16, 3, 4, 21);
    CHECK(decode_model(encode_model(m)) == m);
    auto bytes = encode_model(m);
    bytes.resize(bytes.size() - 8);
    CHECK_THROWS_AS(decode_model(bytes), Error);
}
