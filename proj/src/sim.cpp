#include "cdyn/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "cdyn/error.hpp"
#include "cdyn/io.hpp"
#include "cdyn/parallel.hpp"
#include "cdyn/rng.hpp"

namespace cdyn {

const char* to_string(Solver s) { return s == Solver::NavierStokes ? "ns" : "diffusion"; }

Solver parse_solver(const std::string& name) {
    if (name == "ns") return Solver::NavierStokes;
    if (name == "diffusion") return Solver::Diffusion;
    fail(ErrorKind::Config, "unknown solver '" + name + "' (expected ns or diffusion)");
}

void SimConfig::validate() const {
    auto check = [](bool ok, const std::string& what) {
        if (!ok) fail(ErrorKind::Config, "sim: " + what);
    };
    check(grid >= 4 && is_power_of_two(grid), "grid must be a power of two >= 4");
    check(nu > 0.0, "nu must be positive");
    check(dt > 0.0, "dt must be positive");
    check(frames_per_traj >= 20, "frames_per_traj must be >= 20");
    check(substeps >= 1, "substeps must be >= 1");
    check(spectrum_slope >= 0.0, "spectrum_slope must be nonnegative");
}

namespace {

double k_squared(std::size_t row, std::size_t col, std::size_t n) {
    const double ky = static_cast<double>(wavenumber(row, n));
    const double kx = static_cast<double>(wavenumber(col, n));
    return kx * kx + ky * ky;
}

}  // namespace

Field grf_init(const SimConfig& cfg, std::uint64_t traj_index) {
    const std::size_t n = cfg.grid;
    Rng rng(derive_seed(cfg.seed, traj_index));
    Field noise(n);
    for (double& v : noise.values()) v = rng.normal();

    // Filter white noise (E|W_k|^2 = n^2) by a_k with sum_k a_k^2 = n^2 so the
    // expected mean square of the result is one.
    double total_power = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (r || c) total_power += std::pow(k_squared(r, c, n), -0.5 * cfg.spectrum_slope);

    SpectralField s = fft2(noise);
    const double norm = static_cast<double>(n * n) / total_power;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            if (!r && !c) {
                s(r, c) = 0.0;
                continue;
            }
            const double power = std::pow(k_squared(r, c, n), -0.5 * cfg.spectrum_slope);
            s(r, c) *= std::sqrt(norm * power);
        }
    }
    return ifft2(s);
}

Field step_diffusion_exact(const Field& f, double nu, double dt) {
    const std::size_t n = f.size();
    SpectralField s = fft2(f);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) s(r, c) *= std::exp(-nu * k_squared(r, c, n) * dt);
    return ifft2(s);
}

Field ns_forcing(std::size_t grid, double amplitude) {
    Field f(grid);
    const double h = 2.0 * std::numbers::pi / static_cast<double>(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        for (std::size_t j = 0; j < grid; ++j) {
            const double phase = h * static_cast<double>(i + j);
            f(i, j) = amplitude * (std::sin(phase) + std::cos(phase));
        }
    }
    return f;
}

NsStepper::NsStepper(const SimConfig& cfg)
    : n_(cfg.grid), nu_(cfg.nu), dt_(cfg.dt), k2_(cfg.grid * cfg.grid), keep_(cfg.grid * cfg.grid) {
    cfg.validate();
    forcing_hat_ = fft2(ns_forcing(n_, cfg.forcing_amplitude));
    forcing_hat_(0, 0) = 0.0;  // zero-mean forcing, exactly
    const long cutoff = static_cast<long>(n_) / 3;
    for (std::size_t r = 0; r < n_; ++r) {
        for (std::size_t c = 0; c < n_; ++c) {
            k2_[r * n_ + c] = k_squared(r, c, n_);
            keep_[r * n_ + c] = std::abs(wavenumber(r, n_)) <= cutoff && std::abs(wavenumber(c, n_)) <= cutoff;
        }
    }
    keep_[0] = 0;  // the advection term has zero mean
    const double kmax2 = 2.0 * std::pow(static_cast<double>(n_ / 2), 2);
    if (nu_ * kmax2 * dt_ > 2.5)
        fail(ErrorKind::Numeric, "ns: viscous stability limit exceeded (nu k_max^2 dt > 2.5)");
}

SpectralField NsStepper::rhs(const SpectralField& w, double* max_speed) const {
    const std::size_t n = n_;
    const cplx I{0.0, 1.0};
    // Pack two real fields per complex inverse transform.
    SpectralField vel(n), grad(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double ky = static_cast<double>(wavenumber(r, n));
        for (std::size_t c = 0; c < n; ++c) {
            const double kx = static_cast<double>(wavenumber(c, n));
            const std::size_t idx = r * n + c;
            const cplx psi = k2_[idx] > 0.0 ? w(r, c) / k2_[idx] : cplx{};
            const cplx u = I * ky * psi;
            const cplx v = -I * kx * psi;
            vel(r, c) = u + I * v;
            grad(r, c) = I * kx * w(r, c) + I * (I * ky * w(r, c));
        }
    }
    const auto uv = ifft2_complex(vel);
    const auto wxy = ifft2_complex(grad);

    Field advect(n);
    auto a = advect.values();
    double speed = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double u = uv[i].real(), v = uv[i].imag();
        a[i] = -(u * wxy[i].real() + v * wxy[i].imag());
        speed = std::max({speed, std::abs(u), std::abs(v)});
    }
    if (max_speed) *max_speed = speed;

    SpectralField out = fft2(advect);
    for (std::size_t idx = 0; idx < n * n; ++idx) {
        const cplx nonlinear = keep_[idx] ? out.coeffs()[idx] : cplx{};
        out.coeffs()[idx] = nonlinear - nu_ * k2_[idx] * w.coeffs()[idx] + forcing_hat_.coeffs()[idx];
    }
    return out;
}

double NsStepper::cfl(const SpectralField& omega_hat) const {
    double speed = 0.0;
    rhs(omega_hat, &speed);
    return speed * dt_ * static_cast<double>(n_) / (2.0 * std::numbers::pi);
}

void NsStepper::step(SpectralField& w) const {
    require(w.size() == n_, "ns: state size does not match stepper grid");
    const std::size_t m = n_ * n_;
    auto axpy = [m](const SpectralField& base, const SpectralField& dir, double h) {
        SpectralField out = base;
        for (std::size_t i = 0; i < m; ++i) out.coeffs()[i] += h * dir.coeffs()[i];
        return out;
    };

    double speed = 0.0;
    const SpectralField k1 = rhs(w, &speed);
    const double cfl = speed * dt_ * static_cast<double>(n_) / (2.0 * std::numbers::pi);
    if (!std::isfinite(cfl)) fail(ErrorKind::Numeric, "ns: non-finite velocity (blow-up)");
    if (cfl > 1.0) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "ns: CFL violation (%.3g > 1), reduce dt", cfl);
        fail(ErrorKind::Numeric, buf);
    }
    const SpectralField k2 = rhs(axpy(w, k1, 0.5 * dt_), nullptr);
    const SpectralField k3 = rhs(axpy(w, k2, 0.5 * dt_), nullptr);
    const SpectralField k4 = rhs(axpy(w, k3, dt_), nullptr);
    for (std::size_t i = 0; i < m; ++i) {
        w.coeffs()[i] += (dt_ / 6.0) * (k1.coeffs()[i] + 2.0 * k2.coeffs()[i] + 2.0 * k3.coeffs()[i] +
                                        k4.coeffs()[i]);
        if (!std::isfinite(w.coeffs()[i].real()) || !std::isfinite(w.coeffs()[i].imag()))
            fail(ErrorKind::Numeric, "ns: NaN detected (blow-up)");
    }
}

Field step_ns(const Field& omega, const SimConfig& cfg) {
    SimConfig local = cfg;
    local.grid = omega.size();
    NsStepper stepper(local);
    SpectralField w = fft2(omega);
    stepper.step(w);
    return ifft2(w);
}

Trajectory generate_trajectory(const SimConfig& cfg, std::uint64_t traj_index) {
    cfg.validate();
    Trajectory t;
    t.dt = cfg.frame_dt();
    t.frames.reserve(cfg.frames_per_traj);
    t.frames.push_back(grf_init(cfg, traj_index));

    if (cfg.solver == Solver::Diffusion) {
        Field f = t.frames.front();
        for (std::size_t k = 1; k < cfg.frames_per_traj; ++k) {
            for (std::size_t s = 0; s < cfg.substeps; ++s) f = step_diffusion_exact(f, cfg.nu, cfg.dt);
            t.frames.push_back(f);
        }
        return t;
    }

    const NsStepper stepper(cfg);
    SpectralField w = fft2(t.frames.front());
    for (std::size_t k = 1; k < cfg.frames_per_traj; ++k) {
        for (std::size_t s = 0; s < cfg.substeps; ++s) stepper.step(w);
        t.frames.push_back(ifft2(w));
    }
    return t;
}

std::vector<Trajectory> generate_dataset(const SimConfig& cfg, std::size_t n_traj) {
    cfg.validate();
    std::vector<Trajectory> out(n_traj);
    parallel_for(n_traj, [&](std::size_t i) { out[i] = generate_trajectory(cfg, i); });
    return out;
}

std::string sim_manifest(const SimConfig& cfg, std::size_t n_traj) {
    std::ostringstream os;
    os << "solver=" << to_string(cfg.solver) << '\n'
       << "grid=" << cfg.grid << '\n'
       << "nu=" << format_sci(cfg.nu) << '\n'
       << "dt=" << format_sci(cfg.dt) << '\n'
       << "frames_per_traj=" << cfg.frames_per_traj << '\n'
       << "substeps=" << cfg.substeps << '\n'
       << "forcing_amplitude=" << format_sci(cfg.forcing_amplitude) << '\n'
       << "spectrum_slope=" << format_sci(cfg.spectrum_slope) << '\n'
       << "seed=" << cfg.seed << '\n'
       << "n_traj=" << n_traj << '\n';
    return os.str();
}

namespace {

std::filesystem::path traj_path(const std::filesystem::path& dir, std::size_t i) {
    char name[32];
    std::snprintf(name, sizeof name, "traj_%05zu.cdyn", i);
    return dir / name;
}

}  // namespace

void save_dataset(const std::filesystem::path& dir, const SimConfig& cfg, const std::vector<Trajectory>& data) {
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < data.size(); ++i) save_trajectory(traj_path(dir, i), data[i]);
    write_text(dir / "manifest.txt", sim_manifest(cfg, data.size()));
}

std::vector<Trajectory> load_dataset(const std::filesystem::path& dir) {
    const auto manifest = read_text(dir / "manifest.txt");
    const auto pos = manifest.find("n_traj=");
    if (pos == std::string::npos) fail(ErrorKind::Io, (dir / "manifest.txt").string() + ": missing n_traj");
    const std::size_t n = std::stoul(manifest.substr(pos + 7));
    std::vector<Trajectory> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = load_trajectory(traj_path(dir, i));
    return out;
}

}  // namespace cdyn
