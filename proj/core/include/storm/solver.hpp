#ifndef STORM_SOLVER_HPP
#define STORM_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "storm/field.hpp"
#include "storm/mat.hpp"
#include "storm/noise.hpp"

namespace storm {

struct SolverConfig {
  double dt = 1e-3;
  double t_final = 1.0;
  std::string scheme = "exp-euler";
  int modes = 0;  // M; must match the initial field and noise spec
  std::uint64_t seed = 0;
  std::vector<double> snapshot_times;

  void validate() const;  // dt in (0, T], snapshot times on the dt grid
};

struct Trajectory {
  SolverConfig config;
  std::vector<std::pair<double, SpectralField>> snapshots;
  std::uint64_t stream_key = 0;  // realized-noise manifest
};

// called once per accepted step with the increment that drove it; lets the
// particle oracle consume the identical realization
using StepHook = std::function<void(int step, const NoiseIncrement&)>;

// P_t = exp(t L / 2), L = div(A grad); per-mode factor exp(-t 4 pi^2 k.Ak / 2).
// Rejects non-SPD A.
SpectralField heat_semigroup_apply(const SpectralField& u, const SymMat& A, double t);

// multiplier path used by the integrators; accepts semidefinite A (an empty
// noise spec has A = 0 and the semigroup degenerates to the identity)
SpectralField apply_heat_multiplier(const SpectralField& u, const SymMat& A, double t);

// One exponential-Euler step of the Ito-form transport equation:
// u' = P_dt [u + transport_term(u, dW)]. Left-point increment, mean exact.
SpectralField spde_step(const SpectralField& u, const NoiseSpec& spec, double dt,
                        RngStream& rng);

// Full transport integration. The initial field is dealiased once so the
// 2/3-rule product stays exact along the trajectory. Deterministic given
// (config.seed, config, spec). Throws on non-finite states.
Trajectory simulate_transport(const SpectralField& u0, const NoiseSpec& spec,
                              const SolverConfig& config, const StepHook& hook = {});

// Limiting stochastic heat equation du = 1/2 Lap u dt + (-Lap)^{1/2} dXi,
// realized as exact per-mode OU updates on the dealiased mode set
// |k|_inf <= M/3 (k = 0 stays constant). noise_scale = 0 gives pure decay.
Trajectory simulate_she(const SpectralField& u0, const SolverConfig& config,
                        double noise_scale = 1.0);

// | (P^A_t - P^I_t) u0 |_{H^{-kappa}} with both semigroups carrying the 1/2
// factor; exact spectral sum
double deterministic_error_w(const SpectralField& u0, const SymMat& A, double t,
                             double kappa);

// trajectory store: <dir>/config.json, <dir>/manifest.json and
// <dir>/fields/snap_NNNN.stlf
void save_trajectory(const std::string& dir, const Trajectory& traj,
                     const NoiseSpec& spec);
Trajectory load_trajectory(const std::string& dir);

}  // namespace storm

#endif
