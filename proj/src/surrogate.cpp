#include "cdyn/surrogate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "cdyn/error.hpp"
#include "cdyn/io.hpp"
#include "cdyn/rng.hpp"
#include "cdyn/sim.hpp"

namespace cdyn {

void TrainSchedule::validate() const {
    if (!(eta_max > eta_min && eta_min > 0.0)) fail(ErrorKind::Config, "schedule: need eta_max > eta_min > 0");
    if (steps_per_cycle < 2) fail(ErrorKind::Config, "schedule: steps_per_cycle must be >= 2");
    if (cycles < 1) fail(ErrorKind::Config, "schedule: cycles must be >= 1");
}

double lr_at(const TrainSchedule& schedule, std::size_t t) {
    require(t <= schedule.steps_per_cycle, "lr_at: t outside [0, T]");
    const double phase = static_cast<double>(t) / static_cast<double>(schedule.steps_per_cycle);
    return schedule.eta_min +
           0.5 * (schedule.eta_max - schedule.eta_min) * (1.0 + std::cos(phase * std::numbers::pi));
}

// ---------------------------------------------------------------------------
// model

SurrogateModel::SurrogateModel(std::size_t grid, std::size_t window, std::size_t cutoff)
    : grid_(grid), window_(window), cutoff_(cutoff), coeffs_(grid * grid * window) {
    require(grid >= 4 && is_power_of_two(grid), "surrogate: grid must be a power of two >= 4");
    require(window >= 1, "surrogate: window must be >= 1");
    require(cutoff <= grid / 2 - 1, "surrogate: cutoff must be <= grid/2 - 1");
    for (std::size_t r = 0; r < grid; ++r)
        for (std::size_t c = 0; c < grid; ++c)
            if (retained(r, c)) modes_.push_back(r * grid + c);
}

SurrogateModel SurrogateModel::persistence(std::size_t grid, std::size_t window, std::size_t cutoff) {
    SurrogateModel m(grid, window, cutoff);
    for (std::size_t mode : m.modes_) m.coeff(mode, window - 1) = 1.0;
    return m;
}

bool SurrogateModel::retained(std::size_t row, std::size_t col) const {
    const auto k = static_cast<long>(cutoff_);
    return std::abs(wavenumber(row, grid_)) <= k && std::abs(wavenumber(col, grid_)) <= k;
}

void SurrogateModel::enforce_symmetry() {
    for (std::size_t mode : modes_) {
        const std::size_t mirror =
            mirror_index(mode / grid_, grid_) * grid_ + mirror_index(mode % grid_, grid_);
        if (mirror < mode) continue;
        for (std::size_t w = 0; w < window_; ++w) {
            if (mirror == mode) {
                coeff(mode, w) = coeff(mode, w).real();
                continue;
            }
            const cplx avg = 0.5 * (coeff(mode, w) + std::conj(coeff(mirror, w)));
            coeff(mode, w) = avg;
            coeff(mirror, w) = std::conj(avg);
        }
    }
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

void check_window(const SurrogateModel& model, std::size_t count, std::size_t grid) {
    require(count == model.window(), "surrogate: window has " + std::to_string(count) + " frames, model expects " +
                                         std::to_string(model.window()));
    require(grid == model.grid(), "surrogate: window grid size does not match model");
}

std::vector<SpectralField> transform_window(const SurrogateModel& model, std::span<const Field> window) {
    std::vector<SpectralField> out;
    out.reserve(window.size());
    for (const auto& f : window) {
        check_window(model, window.size(), f.size());
        out.push_back(fft2(f));
    }
    if (window.empty()) check_window(model, 0, model.grid());
    return out;
}

}  // namespace

SpectralField predict_spectral(const SurrogateModel& model, std::span<const SpectralField> window,
                               std::span<const double> mode_scale) {
    require(window.size() == model.window(), "surrogate: window length mismatch");
    const auto& modes = model.retained_modes();
    require(mode_scale.empty() || mode_scale.size() == modes.size(), "surrogate: mask length mismatch");
    SpectralField out(model.grid());
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const std::size_t mode = modes[m];
        cplx acc{};
        for (std::size_t w = 0; w < model.window(); ++w) acc += model.coeff(mode, w) * window[w].coeffs()[mode];
        if (!mode_scale.empty()) acc *= mode_scale[m];
        out.coeffs()[mode] = acc;
    }
    return out;
}

Field predict(const SurrogateModel& model, std::span<const Field> window) {
    const auto hat = transform_window(model, window);
    return ifft2(predict_spectral(model, hat));
}

std::vector<double> dropout_mask(const SurrogateModel& model, double p, std::uint64_t seed) {
    require(p >= 0.0 && p < 1.0, "dropout rate must be in [0, 1)");
    const auto& modes = model.retained_modes();
    const std::size_t n = model.grid();
    std::vector<double> mask(modes.size(), 1.0);
    if (p == 0.0) return mask;

    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> by_mode(n * n, 0.0);
    Rng rng(seed);
    for (std::size_t mode : modes) {
        const std::size_t mirror = mirror_index(mode / n, n) * n + mirror_index(mode % n, n);
        if (mirror < mode) continue;
        const double v = rng.uniform() < p ? 0.0 : keep_scale;
        by_mode[mode] = v;
        by_mode[mirror] = v;
    }
    for (std::size_t m = 0; m < modes.size(); ++m) mask[m] = by_mode[modes[m]];
    return mask;
}

Field predict_dropout(const SurrogateModel& model, std::span<const Field> window, double p, std::uint64_t seed) {
    const auto mask = dropout_mask(model, p, seed);
    const auto hat = transform_window(model, window);
    return ifft2(predict_spectral(model, hat, mask));
}

OneStepModel as_one_step(SurrogateModel model) {
    return [m = std::move(model)](std::span<const Field> window) { return predict(m, window); };
}

OneStepModel diffusion_oracle(double nu, double dt, std::size_t substeps) {
    return [=](std::span<const Field> window) {
        require(!window.empty(), "diffusion oracle: empty window");
        Field f = window.back();
        for (std::size_t s = 0; s < substeps; ++s) f = step_diffusion_exact(f, nu, dt);
        return f;
    };
}

std::vector<Field> rollout(const OneStepModel& model, std::span<const Field> init_window, std::size_t horizon) {
    require(horizon >= 1, "rollout: horizon must be >= 1");
    require(!init_window.empty(), "rollout: empty initial window");
    std::vector<Field> buffer(init_window.begin(), init_window.end());
    const std::size_t w = init_window.size();
    std::vector<Field> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        Field next = model(std::span<const Field>(buffer).subspan(buffer.size() - w));
        buffer.push_back(next);
        out.push_back(std::move(next));
    }
    return out;
}

std::vector<Field> rollout(const SurrogateModel& model, std::span<const Field> init_window, std::size_t horizon,
                           RolloutMode mode) {
    require(horizon >= 1, "rollout: horizon must be >= 1");
    std::vector<SpectralField> hat = transform_window(model, init_window);
    std::vector<Field> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        const std::span<const SpectralField> win(hat.data() + h, model.window());
        Field next = mode.dropout
                         ? ifft2(predict_spectral(model, win, dropout_mask(model, mode.p, derive_seed(mode.seed, h))))
                         : ifft2(predict_spectral(model, win));
        hat.push_back(fft2(next));
        out.push_back(std::move(next));
    }
    return out;
}

RolloutModel rollout_model(SurrogateModel model) {
    return [m = std::move(model)](std::span<const Field> window, std::size_t horizon) {
        return rollout(m, window, horizon);
    };
}

RolloutModel rollout_model(OneStepModel model) {
    return [m = std::move(model)](std::span<const Field> window, std::size_t horizon) {
        return rollout(m, window, horizon);
    };
}

// ---------------------------------------------------------------------------
// training

namespace {

/// Retained-mode coefficients of every frame, plus the (trajectory, start) list
/// of training pairs.
struct ModeData {
    std::size_t n_modes = 0;
    std::vector<std::vector<std::vector<cplx>>> frames;  // [traj][frame][mode]
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    const cplx* frame(std::size_t traj, std::size_t idx) const { return frames[traj][idx].data(); }
};

ModeData collect(std::span<const Trajectory> data, const SurrogateModel& shape) {
    require(!data.empty(), "training: empty data");
    ModeData md;
    const auto& modes = shape.retained_modes();
    md.n_modes = modes.size();
    md.frames.resize(data.size());
    for (std::size_t t = 0; t < data.size(); ++t) {
        const auto& traj = data[t];
        require(traj.grid_size() == shape.grid(), "training: trajectory grid does not match configuration");
        require(traj.frames.size() > shape.window(),
                "training: trajectory " + std::to_string(t) + " too short for one (window, target) pair");
        for (const auto& f : traj.frames) {
            const SpectralField s = fft2(f);
            std::vector<cplx> sel(modes.size());
            for (std::size_t m = 0; m < modes.size(); ++m) sel[m] = s.coeffs()[modes[m]];
            md.frames[t].push_back(std::move(sel));
        }
        for (std::size_t start = 0; start + shape.window() < traj.frames.size(); ++start)
            md.pairs.emplace_back(t, start);
    }
    return md;
}

std::size_t infer_grid(std::span<const Trajectory> data) {
    require(!data.empty(), "training: empty data");
    return data.front().grid_size();
}

double normalized_loss(const SurrogateModel& model, const ModeData& md, const std::vector<double>& energy) {
    const auto& modes = model.retained_modes();
    const std::size_t W = model.window();
    double total = 0.0;
    for (const auto& [t, start] : md.pairs) {
        const cplx* target = md.frame(t, start + W);
        for (std::size_t m = 0; m < md.n_modes; ++m) {
            if (energy[m] <= 0.0) continue;
            cplx pred{};
            for (std::size_t w = 0; w < W; ++w) pred += model.coeff(modes[m], w) * md.frame(t, start + w)[m];
            total += std::norm(target[m] - pred) / energy[m];
        }
    }
    return total / static_cast<double>(md.pairs.size());
}

}  // namespace

SnapshotSet train_snapshots(std::span<const Trajectory> data, const TrainConfig& cfg,
                            const TrainSchedule& schedule, std::uint64_t seed) {
    schedule.validate();
    require(cfg.batch_size >= 1, "training: batch_size must be >= 1");
    const std::size_t grid = infer_grid(data);
    SurrogateModel model = SurrogateModel::persistence(grid, cfg.window, cfg.resolved_cutoff(grid));
    const ModeData md = collect(data, model);
    const auto& modes = model.retained_modes();
    const std::size_t W = cfg.window;

    std::vector<double> energy(md.n_modes, 0.0);
    for (const auto& [t, start] : md.pairs)
        for (std::size_t w = 0; w < W; ++w)
            for (std::size_t m = 0; m < md.n_modes; ++m) energy[m] += std::norm(md.frame(t, start + w)[m]);
    for (double& e : energy) e /= static_cast<double>(md.pairs.size());

    Rng rng(derive_seed(seed, 0x7a41));
    auto order = md.pairs;
    std::vector<cplx> grad(md.n_modes * W);
    SnapshotSet out;

    for (std::size_t cycle = 0; cycle < schedule.cycles; ++cycle) {
        rng.shuffle(order.begin(), order.end());
        CycleLog log;
        log.loss_start = normalized_loss(model, md, energy);
        std::size_t cursor = 0;
        for (std::size_t step = 0; step < schedule.steps_per_cycle; ++step) {
            // lr_at(t + 1) so the final step of a cycle runs at eta_min
            const double lr = lr_at(schedule, step + 1);
            std::fill(grad.begin(), grad.end(), cplx{});
            for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                const auto& [t, start] = order[cursor];
                cursor = (cursor + 1) % order.size();
                const cplx* target = md.frame(t, start + W);
                for (std::size_t m = 0; m < md.n_modes; ++m) {
                    if (energy[m] <= 0.0) continue;
                    cplx pred{};
                    for (std::size_t w = 0; w < W; ++w) pred += model.coeff(modes[m], w) * md.frame(t, start + w)[m];
                    const cplx resid = target[m] - pred;
                    for (std::size_t w = 0; w < W; ++w)
                        grad[m * W + w] -= std::conj(md.frame(t, start + w)[m]) * resid / energy[m];
                }
            }
            const double scale = 2.0 / static_cast<double>(cfg.batch_size);
            for (std::size_t m = 0; m < md.n_modes; ++m)
                for (std::size_t w = 0; w < W; ++w) model.coeff(modes[m], w) -= lr * scale * grad[m * W + w];
            model.enforce_symmetry();
            for (const cplx& c : model.coeffs()) {
                if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
                    fail(ErrorKind::Numeric, "training diverged at cycle " + std::to_string(cycle) + ", step " +
                                                 std::to_string(step));
                }
            }
        }
        log.loss_end = normalized_loss(model, md, energy);
        if (!std::isfinite(log.loss_end))
            fail(ErrorKind::Numeric, "training loss is NaN at end of cycle " + std::to_string(cycle));
        out.snapshots.push_back(model);
        out.log.push_back(log);
    }
    return out;
}

SurrogateModel fit_ridge(std::span<const Trajectory> data, const TrainConfig& cfg, double lambda) {
    require(lambda >= 0.0, "fit_ridge: lambda must be >= 0");
    const std::size_t grid = infer_grid(data);
    SurrogateModel model(grid, cfg.window, cfg.resolved_cutoff(grid));
    const ModeData md = collect(data, model);
    const auto& modes = model.retained_modes();
    const auto W = static_cast<Eigen::Index>(cfg.window);

    std::vector<Eigen::MatrixXcd> grams(md.n_modes, Eigen::MatrixXcd::Zero(W, W));
    std::vector<Eigen::VectorXcd> rhss(md.n_modes, Eigen::VectorXcd::Zero(W));
    Eigen::VectorXcd x(W);
    double scale = 0.0;
    for (std::size_t m = 0; m < md.n_modes; ++m) {
        for (const auto& [t, start] : md.pairs) {
            for (Eigen::Index w = 0; w < W; ++w) x[w] = md.frame(t, start + static_cast<std::size_t>(w))[m];
            grams[m].noalias() += x.conjugate() * x.transpose();
            rhss[m].noalias() += x.conjugate() * md.frame(t, start + cfg.window)[m];
        }
        scale = std::max(scale, grams[m].diagonal().real().maxCoeff());
    }

    for (std::size_t m = 0; m < md.n_modes; ++m) {
        Eigen::MatrixXcd gram = grams[m];
        gram.diagonal().array() += lambda;
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
        // pivots below 1e-14 of the largest data energy count as zero
        const double largest_pivot = lu.maxPivot();
        const bool singular = lambda == 0.0 && (largest_pivot <= 1e-14 * scale || !lu.isInvertible());
        if (singular) {
            const std::size_t mode = modes[m];
            fail(ErrorKind::Numeric, "fit_ridge: singular normal equations at mode (" +
                                         std::to_string(wavenumber(mode % grid, grid)) + ", " +
                                         std::to_string(wavenumber(mode / grid, grid)) + ")");
        }
        const Eigen::VectorXcd c = lu.solve(rhss[m]);
        for (Eigen::Index w = 0; w < W; ++w) model.coeff(modes[m], static_cast<std::size_t>(w)) = c[w];
    }
    model.enforce_symmetry();
    return model;
}

double one_step_mse(const OneStepModel& model, std::span<const Trajectory> data, std::size_t window) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& traj : data) {
        for (std::size_t start = 0; start + window < traj.frames.size(); ++start) {
            const Field pred = model(std::span<const Field>(traj.frames).subspan(start, window));
            const double d = l2_dist(pred, traj.frames[start + window]);
            total += d * d;
            count += pred.cell_count();
        }
    }
    require(count > 0, "one_step_mse: no (window, target) pairs");
    return total / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// persistence

std::vector<char> encode_model(const SurrogateModel& model) {
    ByteWriter w;
    w.magic("CDYM");
    w.u32(kContainerVersion);
    w.u32(static_cast<std::uint32_t>(model.grid()));
    w.u32(static_cast<std::uint32_t>(model.window()));
    w.u32(static_cast<std::uint32_t>(model.cutoff()));
    const auto c = model.coeffs();
    w.f64s(std::span<const double>(reinterpret_cast<const double*>(c.data()), 2 * c.size()));
    return w.bytes();
}

SurrogateModel decode_model(std::vector<char> bytes, const std::string& source) {
    ByteReader r(std::move(bytes), source);
    r.expect_magic("CDYM");
    if (r.u32() != kContainerVersion) fail(ErrorKind::Io, source + ": unsupported model version");
    const std::size_t grid = r.u32();
    const std::size_t window = r.u32();
    const std::size_t cutoff = r.u32();
    if (grid < 4 || !is_power_of_two(grid) || window < 1 || cutoff > grid / 2 - 1)
        fail(ErrorKind::Io, source + ": invalid model header");
    SurrogateModel m(grid, window, cutoff);
    auto c = m.coeffs();
    r.f64s(std::span<double>(reinterpret_cast<double*>(c.data()), 2 * c.size()));
    if (!r.at_end()) fail(ErrorKind::Io, source + ": trailing bytes in model file");
    return m;
}

void save_model(const std::filesystem::path& path, const SurrogateModel& model) {
    write_file(path, encode_model(model));
}

SurrogateModel load_model(const std::filesystem::path& path) {
    return decode_model(read_file(path), path.string());
}

namespace {

std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%02zu.cdym", i);
    return dir / name;
}

}  // namespace

void save_snapshots(const std::filesystem::path& dir, const SnapshotSet& set) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    manifest << "snapshots=" << set.snapshots.size() << '\n';
    for (std::size_t i = 0; i < set.snapshots.size(); ++i) {
        save_model(snapshot_path(dir, i), set.snapshots[i]);
        if (i < set.log.size())
            manifest << "cycle_" << i << "_loss=" << format_sci(set.log[i].loss_start) << ','
                     << format_sci(set.log[i].loss_end) << '\n';
    }
    write_text(dir / "manifest.txt", manifest.str());
}

SnapshotSet load_snapshots(const std::filesystem::path& dir) {
    const auto manifest = read_text(dir / "manifest.txt");
    if (manifest.rfind("snapshots=", 0) != 0)
        fail(ErrorKind::Io, (dir / "manifest.txt").string() + ": missing snapshot count");
    const std::size_t n = std::stoul(manifest.substr(10));
    SnapshotSet set;
    for (std::size_t i = 0; i < n; ++i) set.snapshots.push_back(load_model(snapshot_path(dir, i)));
    return set;
}

}  // namespace cdyn
