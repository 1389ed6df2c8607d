#ifndef STORM_FIELD_HPP
#define STORM_FIELD_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "storm/rng.hpp"

namespace storm {

using cplx = std::complex<double>;
using Mode = std::array<int, 3>;   // integer wavevector, unused axes zero
using Vec3 = std::array<double, 3>;

inline double mode_norm2(const Mode& k) {
  return double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2];
}
// Laplacian eigenvalue on the period-1 torus
inline double laplacian_eig(const Mode& k) {
  return 4.0 * M_PI * M_PI * mode_norm2(k);
}
// half-lattice membership: first nonzero component positive
inline bool is_positive_half(const Mode& k) {
  for (int i = 0; i < 3; ++i) {
    if (k[i] > 0) return true;
    if (k[i] < 0) return false;
  }
  return false;  // zero vector belongs to neither half
}

// Real scalar field on T^d (d = 2, 3), period-1 torus, stored as complex
// Fourier coefficients over the orthonormal exponential basis
// e_k(x) = exp(2 pi i k.x). Hermitian symmetry c(-k) = conj(c(k)) keeps the
// field real; Nyquist rows are zeroed on construction and kept zero.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(int dim, int modes);

  int dim() const { return dim_; }
  int modes() const { return modes_; }
  std::size_t size() const { return c_.size(); }
  // largest representable |k_i| (Nyquist excluded)
  int kmax() const { return modes_ / 2 - 1; }

  cplx coeff(const Mode& k) const { return c_[flat(k)]; }
  cplx coeff(int k1, int k2, int k3 = 0) const { return c_[flat({k1, k2, k3})]; }
  // sets c(k) = v and c(-k) = conj(v)
  void set_coeff(const Mode& k, cplx v);
  void set_coeff(int k1, int k2, cplx v) { set_coeff({k1, k2, 0}, v); }
  void set_coeff(int k1, int k2, int k3, cplx v) { set_coeff({k1, k2, k3}, v); }

  cplx& raw(std::size_t flat_idx) { return c_[flat_idx]; }
  const cplx& raw(std::size_t flat_idx) const { return c_[flat_idx]; }
  std::size_t flat(const Mode& k) const;
  Mode mode_of(std::size_t flat_idx) const;
  bool is_nyquist(const Mode& k) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);

  double l2_norm() const;
  bool is_hermitian(double tol = 1e-12) const;
  bool all_finite() const;
  void zero_nyquist();
  // zero all modes with any |k_i| > modes/3 (2/3-rule mask)
  void dealias();

  // physical-space grid values at x_j = j/M (backward transform)
  std::vector<double> to_grid() const;
  static SpectralField from_grid(int dim, int modes, const std::vector<double>& g);

  // truncated white noise: iid unit-variance coefficients on |k|_inf <= kmax_inf,
  // Hermitian-paired, drawn in canonical lattice order
  static SpectralField white_noise(int dim, int modes, int kmax_inf, RngStream& rng);

 private:
  int dim_ = 0;
  int modes_ = 0;
  std::vector<cplx> c_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);

// d-component vector field, one SpectralField per component
struct SpectralVectorField {
  SpectralVectorField() = default;
  SpectralVectorField(int dim, int modes);

  int dim = 0;
  int modes = 0;
  std::array<SpectralField, 3> comp;
  bool divergence_free = false;  // asserted by constructors that guarantee it

  double max_divergence() const;  // max_k |sum_i 2 pi k_i c_i(k)|
};

// ---- fields-module operations ----

// Bessel-potential Sobolev norm: (sum_k (1 + 4 pi^2 |k|^2)^s |c_k|^2)^(1/2).
// Throws std::invalid_argument on non-finite coefficients.
double sobolev_norm(const SpectralField& u, double s);

// L^2 pairing (u, v) = sum_k u_k conj(v_k); real for Hermitian fields
double field_inner(const SpectralField& u, const SpectralField& v);

SpectralVectorField gradient(const SpectralField& u);
SpectralField divergence(const SpectralVectorField& X);

// Dealiased pseudo-spectral div(u X) for divergence-free X.
// The k = 0 coefficient of the result is exactly zero.
SpectralField transport_term(const SpectralField& u, const SpectralVectorField& X);

// Pointwise product computed on the shared grid. Exact (no aliasing) as long
// as the supports satisfy kmax(a) + kmax(b) < M/2; throws otherwise.
SpectralField product_unaliased(const SpectralField& a, const SpectralField& b);

// largest |k_i| carrying a nonzero coefficient
int support_kmax(const SpectralField& u);

// max over snapshot pairs of |u_ti - u_tj|_{H^s} / |ti - tj|^alpha.
// Snapshots are downsampled evenly to at most grid_cap before the
// all-pairs maximum (O(n^2) cost bound).
double holder_norm_estimate(const std::vector<std::pair<double, SpectralField>>& snaps,
                            double alpha, double s, std::size_t grid_cap = 200);

// Compact evaluator for fields with few active modes (trig polynomials).
struct TrigPoly {
  int dim = 2;
  double c0 = 0.0;
  std::vector<std::pair<Mode, cplx>> half;  // half-lattice modes only

  static TrigPoly from_field(const SpectralField& u, double drop_tol = 0.0);
  double operator()(const Vec3& x) const;
  double max_abs(int oversample = 8) const;  // sup-norm proxy on a fine grid
};

// ---- snapshot files ----
// binary: magic "STLF", u32 version, u32 d, u32 M, then row-major
// complex64 (float32 re, float32 im) coefficients
void save_field(const std::string& path, const SpectralField& u);
SpectralField load_field(const std::string& path);
// JSON debug dump: mode list with re/im pairs (nonzero modes only)
std::string field_debug_json(const SpectralField& u);

}  // namespace storm

#endif
