#include "storm/mat.hpp"

#include <cmath>
#include <stdexcept>

namespace storm {

SymMat SymMat::identity(int dim, double scale) {
  SymMat m = zero(dim);
  for (int i = 0; i < dim; ++i) m.a[i][i] = scale;
  return m;
}

SymMat SymMat::zero(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("SymMat: dim must be 2 or 3");
  SymMat m;
  m.dim = dim;
  return m;
}

SymMat& SymMat::add_scaled(const SymMat& m, double s) {
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a[i][j] += s * m.a[i][j];
  return *this;
}

SymMat& SymMat::add_perp_projector(const std::array<double, 3>& v, double s) {
  double n2 = 0.0;
  for (int i = 0; i < dim; ++i) n2 += v[i] * v[i];
  if (n2 == 0.0) {  // v = 0: the perp space is everything
    for (int i = 0; i < dim; ++i) a[i][i] += s;
    return *this;
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      a[i][j] += s * ((i == j ? 1.0 : 0.0) - v[i] * v[j] / n2);
  return *this;
}

double SymMat::trace() const {
  double t = 0.0;
  for (int i = 0; i < dim; ++i) t += a[i][i];
  return t;
}

double SymMat::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += a[i][j] * a[i][j];
  return std::sqrt(s);
}

double SymMat::quad(const std::array<double, 3>& v) const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += v[i] * a[i][j] * v[j];
  return s;
}

std::array<double, 3> SymMat::eigenvalues() const {
  // cyclic Jacobi on a copy; converges to machine precision in a few sweeps
  std::array<std::array<double, 3>, 3> m = a;
  const int n = dim;
  for (int sweep = 0; sweep < 32; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-300) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (m[p][q] == 0.0) continue;
        const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m[k][p], mkq = m[k][q];
          m[k][p] = c * mkp - s * mkq;
          m[k][q] = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m[p][k], mqk = m[q][k];
          m[p][k] = c * mpk - s * mqk;
          m[q][k] = s * mpk + c * mqk;
        }
      }
  }
  std::array<double, 3> ev{m[0][0], m[1][1], n == 3 ? m[2][2] : 0.0};
  // ascending order over the first n entries
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (ev[j] < ev[i]) std::swap(ev[i], ev[j]);
  return ev;
}

double SymMat::op_norm() const {
  const auto ev = eigenvalues();
  double m = 0.0;
  for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(ev[i]));
  return m;
}

double SymMat::min_eig() const {
  const auto ev = eigenvalues();
  double m = ev[0];
  for (int i = 1; i < dim; ++i) m = std::min(m, ev[i]);
  return m;
}

bool SymMat::is_spd(double tol) const {
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      if (std::abs(a[i][j] - a[j][i]) > 1e-12) return false;
  return min_eig() > tol;
}

SymMat operator-(const SymMat& x, const SymMat& y) {
  SymMat r = x;
  r.add_scaled(y, -1.0);
  return r;
}

}  // namespace storm
