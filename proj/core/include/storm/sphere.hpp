#ifndef STORM_SPHERE_HPP
#define STORM_SPHERE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "storm/field.hpp"
#include "storm/rng.hpp"

namespace storm {

// Degree-radial multiplier family on S^2. The divergence-free basis fields
// are Psi_lm = (l(l+1))^{-1/2} n x grad Y_lm over the real orthonormal
// spherical harmonics; all divergence-free fields on S^2 are of this form.
struct SphereNoiseSpec {
  int l_max = 0;
  std::vector<double> theta;  // theta[l], l >= 1; theta[0] unused

  double theta_of(int l) const { return theta[l]; }
  // sum_l theta_l^2 (2l+1); equals 8 pi exactly after unit-c normalization
  double l2_mass() const;
  // scales theta so that A = I (c = 1)
  SphereNoiseSpec& normalize_unit_c();
};

// c with A(x) = Q(x,x) = c I on the tangent plane:
// c = sum_l theta_l^2 (2l+1) / (8 pi)
double sphere_diagonal_covariance(const SphereNoiseSpec& spec);

// number of basis fields through degree l_max: sum_{l=1}^{L} (2l+1)
std::size_t sphere_basis_count(int l_max);

// real orthonormal spherical harmonic values at a unit vector, canonical
// (l, m, type) order: for each l >= 1, m = 0 first, then (cos, sin) pairs
// for m = 1..l. Degree l = 0 is excluded (no divergence-free field).
std::vector<double> real_harmonics_at(int l_max, const Vec3& n);

// tangent basis fields Psi in the same canonical order; each is
// perpendicular to n to machine precision
std::vector<Vec3> psi_basis_at(int l_max, const Vec3& n);

// One sampled increment: a fixed gaussian draw per basis field, so every
// evaluation point sees the same realization.
struct SphereIncrement {
  int l_max = 0;
  double dt = 0.0;
  std::vector<double> coeff;  // theta_l sqrt(dt) xi, canonical order

  Vec3 evaluate(const Vec3& n) const;
};

SphereIncrement sphere_sample_increment(const SphereNoiseSpec& spec, double dt,
                                        RngStream& rng);
std::vector<Vec3> sphere_sample_increment_at_points(const SphereNoiseSpec& spec,
                                                    double dt,
                                                    const std::vector<Vec3>& points,
                                                    RngStream& rng);

// exact kernel Q(x, y) = sum theta_l^2 Psi(x) (x) Psi(y) by direct summation
std::array<std::array<double, 3>, 3> sphere_kernel_exact(const SphereNoiseSpec& spec,
                                                         const Vec3& x, const Vec3& y);

// Stratonovich Heun in the tangent plane followed by the exponential map;
// outputs stay unit vectors (renormalized each step)
void sphere_flow_step(std::vector<Vec3>& points, const SphereIncrement& inc);

// uniform points on S^2
std::vector<Vec3> sphere_uniform_points(std::size_t count, RngStream& rng);

struct SphereUniformityReport {
  struct Stat {
    int l, m, type;     // type 0: m=0; 1: cos; 2: sin
    double abs_mean;    // |(1/P) sum y_lm(X_i)|
    double band;        // 3 / sqrt(4 pi P)
    bool pass;
  };
  std::vector<Stat> stats;
  bool all_pass = false;
  std::string to_json() const;
};

// spherical-harmonic moment test of measure preservation, degrees l <= l_max
SphereUniformityReport sphere_uniformity_test(const std::vector<Vec3>& points,
                                              int l_max = 3);

}  // namespace storm

#endif
