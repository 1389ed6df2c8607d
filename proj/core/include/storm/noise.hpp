#ifndef STORM_NOISE_HPP
#define STORM_NOISE_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "storm/field.hpp"
#include "storm/mat.hpp"
#include "storm/rng.hpp"

namespace storm {

// thrown when a multiplier family does not fit inside the dealiased mode set
struct tail_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Divergence-free transport noise on T^d built from a radial multiplier
// table theta_k. Modes are stored over the half lattice (first nonzero
// component positive) in canonical iteration order; the k and -k
// contributions are implied. theta_{-k} = theta_k by construction.
struct NoiseSpec {
  int dim = 2;
  int modes = 0;          // grid resolution M this spec is built for
  std::string family;     // "cutoff" | "mollified" | "custom"
  double param = 0.0;     // N_cut or h
  bool normalized = false;
  bool include_harmonic = false;
  double theta0 = 0.0;    // weight of the constant (harmonic) component

  struct ModeTheta {
    Mode k;
    double theta;
  };
  std::vector<ModeTheta> half_modes;

  double max_theta() const;
  std::string to_json() const;
  static NoiseSpec from_json(const std::string& text);
};

struct CovarianceDiagnostics {
  SymMat A;          // Q(x,x), constant in x on the torus
  double trace_q = 0.0;
  double hs_norm = 0.0;
  double op_norm = 0.0;
};

// One sampled Q-Wiener increment. Holds the per-mode complex amplitudes of
// the realization so grid assembly and off-grid point evaluation use the
// same draws exactly.
struct NoiseIncrement {
  int dim = 2;
  int modes = 0;
  double dt = 0.0;
  Vec3 harmonic{0.0, 0.0, 0.0};
  struct ModeAmp {
    Mode k;
    std::array<cplx, 3> a;  // amplitude of e^{2 pi i k.x}; conj at -k implied
  };
  std::vector<ModeAmp> amps;

  SpectralVectorField as_field() const;
  Vec3 evaluate(const Vec3& x) const;  // direct trig summation, x in [0,1)^d
};

// orthonormal basis of k-perp via the Householder reflection taking the
// last axis to k/|k|; k along the last axis uses the identity frame
std::vector<Vec3> perp_basis(const Mode& k, int dim);

// spectral-shell cutoff family: theta constant on 0 < |k| <= n_cut,
// normalized (when requested) so that A = I exactly
NoiseSpec cutoff_family(int dim, int n_cut, bool normalize, int modes);

// heat-kernel-mollified family:
// theta_k = (4 pi h^2)^{d/4} sqrt(d/(d-1)) exp(-2 pi^2 h^2 |k|^2),
// harmonic component included with theta_0 of the same formula.
// Throws tail_error when the discarded spectral mass above the dealias cut
// exceeds 1e-10 of the total.
NoiseSpec mollified_family(int dim, double h, int modes);

// radial spec from an explicit (|k|^2, theta) table; every lattice mode with
// |k_i| <= kmax_inf and matching |k|^2 is included
NoiseSpec radial_spec(int dim, int modes, int kmax_inf,
                      const std::vector<std::pair<int, double>>& shell_thetas,
                      double theta0 = 0.0);

// same modes with every theta multiplied by factor (Q scales by factor^2)
NoiseSpec scale_amplitude(NoiseSpec spec, double factor);

// exact finite sums: A = sum_k theta_k^2 P_k (+ theta_0^2 I),
// trace Q = (d-1) sum theta_k^2 (+ d theta_0^2),
// hs^2 = (d-1) sum theta_k^4 (+ d theta_0^4), op = max theta_k^2
CovarianceDiagnostics diagonal_covariance(const NoiseSpec& spec);

NoiseIncrement sample_increment(const NoiseSpec& spec, double dt, RngStream& rng);

// exact covariance kernel Q(x,y) as a function of r = x - y
SymMat kernel_exact(const NoiseSpec& spec, const Vec3& r);

// (X, Q X) for a vector field given in spectral form; modes outside the
// spec are annihilated by Q
double q_quadratic_form(const NoiseSpec& spec, const SpectralVectorField& X);

// Quadratic-variation rate of the test-function pairing:
// d<(u,phi)>/dt = (u grad(phi), Q (u grad(phi))), computed alias-free.
// mask_gradient applies the 2/3 mask to grad(phi) first, which reproduces
// the discrete scheme's quadratic variation exactly.
double pairing_qv_rate(const NoiseSpec& spec, const SpectralField& u,
                       const SpectralField& phi, bool mask_gradient);

}  // namespace storm

#endif
