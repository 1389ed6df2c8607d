#ifndef STORM_FLOW_HPP
#define STORM_FLOW_HPP

#include <string>
#include <vector>

#include "storm/field.hpp"
#include "storm/mat.hpp"
#include "storm/noise.hpp"

namespace storm {

// Particle cloud on [0,1)^d. Positions are stored wrapped; displacement
// statistics come from the unwrapped accumulators so wrap jumps never leak
// into diffusivity estimates.
struct ParticleCloud {
  int dim = 2;
  std::vector<Vec3> pos;
  std::vector<Vec3> disp;  // accumulated unwrapped displacement

  std::size_t count() const { return pos.size(); }

  static ParticleCloud uniform_iid(int dim, std::size_t count, RngStream& rng);
  // one particle per jittered subcell, per_axis^d particles
  static ParticleCloud stratified(int dim, int per_axis, RngStream& rng);
};

// Stratonovich Heun step for dX = -o dW(X) on the shared realization:
// X~ = X - dW(X); X' = X - (dW(X) + dW(X~)) / 2
void heun_flow_step(ParticleCloud& cloud, const NoiseIncrement& inc);

std::vector<double> eval_at_points(const TrigPoly& f, const std::vector<Vec3>& pts);

// Monte Carlo weak pairing (u_t, phi) = (u_0, phi o X_t):
// mean over particles of u0(x_i(0)) phi(x_i(t)). u0_at_start holds u0
// evaluated at the cloud's initial positions.
double weak_pairing(const std::vector<double>& u0_at_start, const ParticleCloud& cloud,
                    const TrigPoly& phi);

struct UniformityReport {
  struct ModeStat {
    Mode k;
    double abs_coeff;  // |(1/P) sum exp(-2 pi i k.X_j)|
    double band;       // 3 / sqrt(P)
    bool pass;
  };
  std::vector<ModeStat> modes;   // half-lattice modes with |k|^2 <= 16
  std::array<double, 3> ks_stat{};  // per-axis Kolmogorov-Smirnov vs uniform
  bool all_pass = false;

  std::string to_json() const;
};

// measure-preservation test; requires at least 10^3 particles
UniformityReport uniformity_test(const ParticleCloud& cloud);

struct CrossCovariance {
  int dim = 2;
  std::array<std::array<double, 3>, 3> mean{};    // empirical Cov[dW(x), dW(y)] / dt
  std::array<std::array<double, 3>, 3> stderr_{};
};

// empirical d x d cross covariance of increments at two points against the
// exact kernel Q(x, y)
CrossCovariance pair_decorrelation(const NoiseSpec& spec, const Vec3& x, const Vec3& y,
                                   int samples, double dt, std::uint64_t seed);

// CSV snapshot: header "step,particle_id,x1..xd", one row per particle
void append_cloud_csv(std::string& csv, int step, const ParticleCloud& cloud);

}  // namespace storm

#endif
