#include "storm/sphere.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "json.hpp"

namespace storm {

namespace {

struct CVec {
  cplx x{0, 0}, y{0, 0}, z{0, 0};
};

// Regular solid harmonics R_lm = r^l Y_lm (orthonormal complex Y_lm) and
// their ambient gradients, evaluated as polynomials in (x,y,z). Polynomial
// recurrences keep the evaluation smooth at the poles. m >= 0 only;
// R_{l,-m} = (-1)^m conj(R_lm).
struct SolidHarmonics {
  int l_max;
  std::vector<cplx> val;   // indexed by tri(l) + m
  std::vector<CVec> grad;

  static std::size_t tri(int l) { return std::size_t(l) * (l + 1) / 2; }
  std::size_t at(int l, int m) const { return tri(l) + m; }

  SolidHarmonics(int lmax, const Vec3& n) : l_max(lmax) {
    const std::size_t total = tri(lmax + 1);
    val.assign(total, cplx{0, 0});
    grad.assign(total, CVec{});
    const double X = n[0], Y = n[1], Z = n[2];
    const double r2 = X * X + Y * Y + Z * Z;
    const cplx xy{X, Y};  // x + iy

    val[at(0, 0)] = cplx{1.0 / std::sqrt(4.0 * M_PI), 0.0};

    // diagonal: R_mm = -sqrt((2m+1)/(2m)) (x+iy) R_{m-1,m-1}
    for (int m = 1; m <= l_max; ++m) {
      const double c = -std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      const cplx v = val[at(m - 1, m - 1)];
      const CVec g = grad[at(m - 1, m - 1)];
      val[at(m, m)] = c * xy * v;
      grad[at(m, m)].x = c * (v + xy * g.x);
      grad[at(m, m)].y = c * (cplx{0, 1} * v + xy * g.y);
      grad[at(m, m)].z = c * xy * g.z;
    }
    // vertical: R_{m+1,m} = sqrt(2m+3) z R_{mm}
    for (int m = 0; m < l_max; ++m) {
      const double c = std::sqrt(2.0 * m + 3.0);
      const cplx v = val[at(m, m)];
      const CVec g = grad[at(m, m)];
      val[at(m + 1, m)] = c * Z * v;
      grad[at(m + 1, m)].x = c * Z * g.x;
      grad[at(m + 1, m)].y = c * Z * g.y;
      grad[at(m + 1, m)].z = c * (v + Z * g.z);
    }
    // R_lm = a (z R_{l-1,m} + b r^2 R_{l-2,m})
    for (int l = 2; l <= l_max; ++l)
      for (int m = 0; m <= l - 2; ++m) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = -std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) /
                                    (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        const cplx v1 = val[at(l - 1, m)];
        const CVec g1 = grad[at(l - 1, m)];
        const cplx v2 = val[at(l - 2, m)];
        const CVec g2 = grad[at(l - 2, m)];
        val[at(l, m)] = a * (Z * v1 + b * r2 * v2);
        grad[at(l, m)].x = a * (Z * g1.x + b * (2.0 * X * v2 + r2 * g2.x));
        grad[at(l, m)].y = a * (Z * g1.y + b * (2.0 * Y * v2 + r2 * g2.y));
        grad[at(l, m)].z = a * (v1 + Z * g1.z + b * (2.0 * Z * v2 + r2 * g2.z));
      }
  }
};

const double kSqrt2 = std::sqrt(2.0);

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

void check_unit(const Vec3& n) {
  const double r = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
  if (std::abs(r - 1.0) > 1e-9)
    throw std::invalid_argument("sphere: point is not a unit vector");
}

}  // namespace

double SphereNoiseSpec::l2_mass() const {
  double s = 0.0;
  for (int l = 1; l <= l_max; ++l) s += theta[l] * theta[l] * (2.0 * l + 1.0);
  return s;
}

SphereNoiseSpec& SphereNoiseSpec::normalize_unit_c() {
  const double mass = l2_mass();
  if (mass <= 0.0) throw std::invalid_argument("SphereNoiseSpec: empty spec");
  const double scale = std::sqrt(8.0 * M_PI / mass);
  for (auto& t : theta) t *= scale;
  return *this;
}

double sphere_diagonal_covariance(const SphereNoiseSpec& spec) {
  return spec.l2_mass() / (8.0 * M_PI);
}

std::size_t sphere_basis_count(int l_max) {
  return std::size_t(l_max) * (l_max + 2);  // sum_{l=1}^{L} (2l+1)
}

std::vector<double> real_harmonics_at(int l_max, const Vec3& n) {
  check_unit(n);
  const SolidHarmonics sh(l_max, n);
  std::vector<double> out;
  out.reserve(sphere_basis_count(l_max));
  for (int l = 1; l <= l_max; ++l) {
    out.push_back(sh.val[sh.at(l, 0)].real());
    for (int m = 1; m <= l; ++m) {
      const cplx v = sh.val[sh.at(l, m)];
      out.push_back(kSqrt2 * v.real());
      out.push_back(kSqrt2 * v.imag());
    }
  }
  return out;
}

std::vector<Vec3> psi_basis_at(int l_max, const Vec3& n) {
  check_unit(n);
  const SolidHarmonics sh(l_max, n);
  std::vector<Vec3> out;
  out.reserve(sphere_basis_count(l_max));
  for (int l = 1; l <= l_max; ++l) {
    const double scale = 1.0 / std::sqrt(double(l) * (l + 1.0));
    auto push = [&](const Vec3& g) { out.push_back(cross(n, g)); };
    {
      const CVec g = sh.grad[sh.at(l, 0)];
      push({scale * g.x.real(), scale * g.y.real(), scale * g.z.real()});
    }
    for (int m = 1; m <= l; ++m) {
      const CVec g = sh.grad[sh.at(l, m)];
      push({kSqrt2 * scale * g.x.real(), kSqrt2 * scale * g.y.real(),
            kSqrt2 * scale * g.z.real()});
      push({kSqrt2 * scale * g.x.imag(), kSqrt2 * scale * g.y.imag(),
            kSqrt2 * scale * g.z.imag()});
    }
  }
  return out;
}

SphereIncrement sphere_sample_increment(const SphereNoiseSpec& spec, double dt,
                                        RngStream& rng) {
  if (dt <= 0.0) throw std::invalid_argument("sphere_sample_increment: dt > 0 required");
  SphereIncrement inc;
  inc.l_max = spec.l_max;
  inc.dt = dt;
  inc.coeff.reserve(sphere_basis_count(spec.l_max));
  const double sdt = std::sqrt(dt);
  for (int l = 1; l <= spec.l_max; ++l) {
    const int fields = 2 * l + 1;
    for (int f = 0; f < fields; ++f)
      inc.coeff.push_back(spec.theta_of(l) * sdt * rng.gaussian());
  }
  return inc;
}

Vec3 SphereIncrement::evaluate(const Vec3& n) const {
  const std::vector<Vec3> psi = psi_basis_at(l_max, n);
  Vec3 w{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < psi.size(); ++i)
    for (int d = 0; d < 3; ++d) w[d] += coeff[i] * psi[i][d];
  return w;
}

std::vector<Vec3> sphere_sample_increment_at_points(const SphereNoiseSpec& spec,
                                                    double dt,
                                                    const std::vector<Vec3>& points,
                                                    RngStream& rng) {
  const SphereIncrement inc = sphere_sample_increment(spec, dt, rng);
  std::vector<Vec3> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = inc.evaluate(points[i]);
  return out;
}

std::array<std::array<double, 3>, 3> sphere_kernel_exact(const SphereNoiseSpec& spec,
                                                         const Vec3& x, const Vec3& y) {
  const std::vector<Vec3> px = psi_basis_at(spec.l_max, x);
  const std::vector<Vec3> py = psi_basis_at(spec.l_max, y);
  std::array<std::array<double, 3>, 3> q{};
  std::size_t idx = 0;
  for (int l = 1; l <= spec.l_max; ++l) {
    const double t2 = spec.theta_of(l) * spec.theta_of(l);
    for (int f = 0; f < 2 * l + 1; ++f, ++idx)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) q[i][j] += t2 * px[idx][i] * py[idx][j];
  }
  return q;
}

namespace {
Vec3 exp_map(const Vec3& x, const Vec3& v) {
  const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (nv == 0.0) return x;
  const double c = std::cos(nv), s = std::sin(nv) / nv;
  Vec3 out{c * x[0] + s * v[0], c * x[1] + s * v[1], c * x[2] + s * v[2]};
  const double r = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2]);
  for (int i = 0; i < 3; ++i) out[i] /= r;
  return out;
}
}  // namespace

void sphere_flow_step(std::vector<Vec3>& points, const SphereIncrement& inc) {
  for (auto& x : points) {
    const Vec3 w1 = inc.evaluate(x);
    const Vec3 mid = exp_map(x, {-w1[0], -w1[1], -w1[2]});
    Vec3 w2 = inc.evaluate(mid);
    // bring the midpoint evaluation back to the tangent plane at x
    const double r = w2[0] * x[0] + w2[1] * x[1] + w2[2] * x[2];
    for (int i = 0; i < 3; ++i) w2[i] -= r * x[i];
    const Vec3 step{-0.5 * (w1[0] + w2[0]), -0.5 * (w1[1] + w2[1]),
                    -0.5 * (w1[2] + w2[2])};
    x = exp_map(x, step);
  }
}

std::vector<Vec3> sphere_uniform_points(std::size_t count, RngStream& rng) {
  std::vector<Vec3> pts(count);
  for (auto& p : pts) {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * M_PI * rng.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    p = {s * std::cos(phi), s * std::sin(phi), z};
  }
  return pts;
}

SphereUniformityReport sphere_uniformity_test(const std::vector<Vec3>& points,
                                              int l_max) {
  if (points.size() < 1000)
    throw std::invalid_argument("sphere_uniformity_test: need at least 10^3 points");
  const std::size_t nb = sphere_basis_count(l_max);
  std::vector<double> acc(nb, 0.0);
  for (const auto& p : points) {
    const std::vector<double> y = real_harmonics_at(l_max, p);
    for (std::size_t i = 0; i < nb; ++i) acc[i] += y[i];
  }
  const double band = 3.0 / std::sqrt(4.0 * M_PI * double(points.size()));
  SphereUniformityReport rep;
  rep.all_pass = true;
  std::size_t idx = 0;
  for (int l = 1; l <= l_max; ++l) {
    auto add = [&](int m, int type) {
      const double a = std::abs(acc[idx++] / double(points.size()));
      const bool pass = a <= band;
      rep.all_pass = rep.all_pass && pass;
      rep.stats.push_back({l, m, type, a, band, pass});
    };
    add(0, 0);
    for (int m = 1; m <= l; ++m) {
      add(m, 1);
      add(m, 2);
    }
  }
  return rep;
}

std::string SphereUniformityReport::to_json() const {
  nlohmann::json j;
  j["all_pass"] = all_pass;
  auto& arr = j["stats"] = nlohmann::json::array();
  for (const auto& s : stats)
    arr.push_back({{"l", s.l},
                   {"m", s.m},
                   {"type", s.type},
                   {"abs_mean", s.abs_mean},
                   {"band", s.band},
                   {"pass", s.pass}});
  return j.dump(2);
}

}  // namespace storm
