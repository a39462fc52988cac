#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdyn/field.hpp"
#include "cdyn/spectral.hpp"

namespace cdyn {

enum class Solver { NavierStokes, Diffusion };

const char* to_string(Solver s);
Solver parse_solver(const std::string& name);

/// Data-generation settings. The domain is the periodic square [0, 2pi)^2, so
/// wavenumbers are integers. Defaults are desk-scale choices.
struct SimConfig {
    std::size_t grid = 32;
    double nu = 1e-3;
    double dt = 1e-2;
    std::size_t frames_per_traj = 30;
    std::size_t substeps = 10;  // solver steps between recorded frames
    double forcing_amplitude = 0.1;
    double spectrum_slope = 4.0;
    std::uint64_t seed = 0;
    Solver solver = Solver::NavierStokes;

    void validate() const;
    double frame_dt() const { return dt * static_cast<double>(substeps); }
};

/// Zero-mean Gaussian random field with power spectrum |k|^-slope, unit
/// expected mean-square, seeded by (cfg.seed, traj_index).
Field grf_init(const SimConfig& cfg, std::uint64_t traj_index);

/// Exact heat-equation step: every mode scaled by exp(-nu |k|^2 dt).
Field step_diffusion_exact(const Field& f, double nu, double dt);

/// Steady forcing A (sin(x + y) + cos(x + y)) sampled on the grid.
Field ns_forcing(std::size_t grid, double amplitude);

/// Pseudo-spectral RK4 integrator for the 2D vorticity equation
///   d(omega)/dt + u . grad(omega) = nu lap(omega) + f
/// with 2/3-rule dealiasing of the advection term. State is kept in spectral
/// space between steps.
class NsStepper {
public:
    explicit NsStepper(const SimConfig& cfg);

    /// One RK4 step in place. Throws Numeric on CFL violation or blow-up.
    void step(SpectralField& omega_hat) const;

    /// Advective CFL number max(|u|,|v|) dt / dx of a state.
    double cfl(const SpectralField& omega_hat) const;

private:
    SpectralField rhs(const SpectralField& omega_hat, double* max_speed) const;

    std::size_t n_;
    double nu_;
    double dt_;
    SpectralField forcing_hat_;
    std::vector<double> k2_;
    std::vector<char> keep_;  // dealiasing mask
};

/// One RK4 step of the vorticity equation, Field in and out.
Field step_ns(const Field& omega, const SimConfig& cfg);

Trajectory generate_trajectory(const SimConfig& cfg, std::uint64_t traj_index);

/// n_traj trajectories in index order; generation runs in parallel.
std::vector<Trajectory> generate_dataset(const SimConfig& cfg, std::size_t n_traj);

/// key=value provenance record.
std::string sim_manifest(const SimConfig& cfg, std::size_t n_traj);

/// Writes traj_NNNNN.cdyn files plus manifest.txt into dir.
void save_dataset(const std::filesystem::path& dir, const SimConfig& cfg,
                  const std::vector<Trajectory>& data);
std::vector<Trajectory> load_dataset(const std::filesystem::path& dir);

}  // namespace cdyn
