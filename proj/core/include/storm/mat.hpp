#ifndef STORM_MAT_HPP
#define STORM_MAT_HPP

#include <array>

namespace storm {

// Dense symmetric d x d matrix, d = 2 or 3. Unused rows/columns stay zero.
struct SymMat {
  int dim = 2;
  std::array<std::array<double, 3>, 3> a{};

  static SymMat identity(int dim, double scale = 1.0);
  static SymMat zero(int dim);

  double& operator()(int i, int j) { return a[i][j]; }
  double operator()(int i, int j) const { return a[i][j]; }

  SymMat& add_scaled(const SymMat& m, double s);
  // A += s * (I - v v^T / |v|^2), the projector onto v-perp.
  SymMat& add_perp_projector(const std::array<double, 3>& v, double s);

  double trace() const;
  double frobenius_norm() const;
  // quadratic form v^T A v
  double quad(const std::array<double, 3>& v) const;

  // eigenvalues in ascending order (Jacobi sweeps; exact enough for d<=3)
  std::array<double, 3> eigenvalues() const;
  double op_norm() const;   // max |eigenvalue|
  double min_eig() const;
  bool is_spd(double tol = 0.0) const;
};

SymMat operator-(const SymMat& x, const SymMat& y);

}  // namespace storm

#endif
