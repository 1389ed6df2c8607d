#include "doctest.h"

#include <cmath>

#include "storm/noise.hpp"
#include "storm/stats.hpp"

using namespace storm;

namespace {

// independent projector-sum oracle for A over an explicit mode list
SymMat projector_sum(int dim, const std::vector<Mode>& modes, double theta) {
  SymMat a = SymMat::zero(dim);
  for (const auto& k : modes)
    a.add_perp_projector({double(k[0]), double(k[1]), double(k[2])}, theta * theta);
  return a;
}

double mollified_theta(int dim, double h, double k2) {
  return std::pow(4.0 * M_PI * h * h, dim / 4.0) * std::sqrt(double(dim) / (dim - 1)) *
         std::exp(-2.0 * M_PI * M_PI * h * h * k2);
}

}  // namespace

TEST_CASE("cutoff family: 4-mode shell gives A = 2I, normalization divides it out") {
  const NoiseSpec raw = cutoff_family(2, 1, false, 16);
  CHECK(raw.half_modes.size() == 2);  // (1,0), (0,1) on the half lattice

  const std::vector<Mode> full{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  const SymMat oracle = projector_sum(2, full, 1.0);
  const CovarianceDiagnostics d = diagonal_covariance(raw);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(d.A(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-14));
  CHECK(d.A(0, 0) == doctest::Approx(2.0));

  CHECK(d.trace_q == doctest::Approx(4.0));
  CHECK(d.hs_norm == doctest::Approx(2.0));
  CHECK(d.op_norm == doctest::Approx(1.0));

  const NoiseSpec norm = cutoff_family(2, 1, true, 16);
  const CovarianceDiagnostics dn = diagonal_covariance(norm);
  CHECK(dn.A(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(dn.A(0, 1)) < 1e-14);
  for (const auto& e : norm.half_modes)
    CHECK(e.theta == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(dn.A.trace() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cutoff family: d = 3 unit shell gives A = 4I") {
  const NoiseSpec spec = cutoff_family(3, 1, false, 16);
  std::vector<Mode> full;
  for (int s : {-1, 1}) {
    full.push_back({s, 0, 0});
    full.push_back({0, s, 0});
    full.push_back({0, 0, s});
  }
  const SymMat oracle = projector_sum(3, full, 1.0);
  const CovarianceDiagnostics d = diagonal_covariance(spec);
  for (int i = 0; i < 3; ++i) {
    CHECK(d.A(i, i) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(d.A(i, i) == doctest::Approx(oracle(i, i)).epsilon(1e-14));
  }
  // 6 (d-1)/d = 4
  CHECK(d.A(0, 0) == doctest::Approx(6.0 * (3.0 - 1.0) / 3.0));
}

TEST_CASE("full radial shells give A proportional to the identity") {
  for (int dim : {2, 3}) {
    const NoiseSpec spec = cutoff_family(dim, 3, false, 24);
    const CovarianceDiagnostics d = diagonal_covariance(spec);
    const double c = d.A(0, 0);
    for (int i = 0; i < dim; ++i) {
      CHECK(std::abs(d.A(i, i) - c) < 1e-12 * c);
      for (int j = i + 1; j < dim; ++j) CHECK(std::abs(d.A(i, j)) < 1e-12 * c);
    }
  }
}

TEST_CASE("mollified family: multiplier values and operator norm bound") {
  const int M = 64;
  const double h = 0.2;
  for (int dim : {2, 3}) {
    const NoiseSpec spec = mollified_family(dim, h, M);
    CHECK(spec.include_harmonic);
    CHECK(spec.theta0 == doctest::Approx(mollified_theta(dim, h, 0.0)).epsilon(1e-13));
    for (const auto& e : spec.half_modes) {
      const double expect = mollified_theta(dim, h, mode_norm2(e.k));
      CHECK(e.theta == doctest::Approx(expect).epsilon(1e-12));
    }
    const CovarianceDiagnostics d = diagonal_covariance(spec);
    // op norm bound (4 pi)^{d/2} d/(d-1) h^d, attained at k = 0
    const double bound = std::pow(4.0 * M_PI, dim / 2.0) * dim / (dim - 1.0) *
                         std::pow(h, dim);
    CHECK(d.op_norm <= bound * (1.0 + 1e-12));
    CHECK(d.op_norm == doctest::Approx(bound).epsilon(1e-12));
  }
}

TEST_CASE("mollified family: |A^h - I| <= C h^2 with finite fitted C, monotone") {
  const int M = 128;
  const std::vector<double> hs{0.4, 0.28, 0.2, 0.14, 0.1};
  double prev = 1e300, cmax = 0.0;
  for (double h : hs) {
    const CovarianceDiagnostics d = diagonal_covariance(mollified_family(2, h, M));
    const double err = (d.A - SymMat::identity(2)).op_norm();
    CHECK(err < prev);
    prev = err;
    cmax = std::max(cmax, err / (h * h));
  }
  CHECK(cmax < 50.0);
  CHECK(std::isfinite(cmax));
}

TEST_CASE("mollified family rejects insufficient resolution") {
  CHECK_THROWS_AS(mollified_family(2, 0.01, 32), tail_error);
  CHECK_NOTHROW(mollified_family(2, 0.1, 64));
  CHECK_THROWS_AS(mollified_family(2, -1.0, 64), std::invalid_argument);
}

TEST_CASE("hs norm of the mollified family matches a brute-force lattice sum") {
  const int M = 96;
  const double h = 0.12;
  for (int dim : {2, 3}) {
    const CovarianceDiagnostics d = diagonal_covariance(mollified_family(dim, h, M));
    // independent enumeration of theta^4 over the same box
    const int K = M / 3;
    double t4 = 0.0;
    const int k3 = dim == 3 ? K : 0;
    for (int a = -K; a <= K; ++a)
      for (int b = -K; b <= K; ++b)
        for (int c = -k3; c <= k3; ++c) {
          const double th = mollified_theta(dim, h, double(a) * a + b * b + c * c);
          if (a == 0 && b == 0 && c == 0)
            t4 += dim * th * th * th * th;
          else
            t4 += (dim - 1) * th * th * th * th;
        }
    CHECK(d.hs_norm == doctest::Approx(std::sqrt(t4)).epsilon(1e-11));
  }
}

TEST_CASE("diagnostics satisfy the operator/HS/trace inequality chain") {
  std::vector<NoiseSpec> specs;
  specs.push_back(cutoff_family(2, 4, true, 32));
  specs.push_back(cutoff_family(3, 2, false, 16));
  specs.push_back(mollified_family(2, 0.15, 64));
  specs.push_back(mollified_family(3, 0.25, 48));
  specs.push_back(radial_spec(2, 32, 4, {{1, 0.7}, {4, 0.2}}, 0.3));
  for (const auto& s : specs) {
    const CovarianceDiagnostics d = diagonal_covariance(s);
    CHECK(d.op_norm <= d.hs_norm * (1.0 + 1e-12));
    CHECK(d.hs_norm <= std::sqrt(d.op_norm * d.trace_q) * (1.0 + 1e-12));
  }
}

TEST_CASE("proper scaling invariants along the mollified sequence") {
  const int M = 128;
  const std::vector<double> hs{0.4, 0.28, 0.2, 0.14, 0.1};
  double prev_a = 1e300, prev_hs = 1e300;
  for (double h : hs) {
    const CovarianceDiagnostics d = diagonal_covariance(mollified_family(2, h, M));
    const double a_err = (d.A - SymMat::identity(2)).op_norm();
    CHECK(a_err < prev_a);
    CHECK(d.hs_norm < prev_hs);
    prev_a = a_err;
    prev_hs = d.hs_norm;
  }
}

TEST_CASE("scaling exponents: op slope d, hs slope d/2 on an asymptotic grid") {
  // the exact-sum slope reaches its asymptote only once the theta^4 lattice
  // sum is integral-dominated, h well below 0.1
  const int M = 256;
  const std::vector<double> hs{0.04, 0.028, 0.02, 0.014, 0.01};
  std::vector<RatePoint> op_pts, hs_pts;
  for (double h : hs) {
    const CovarianceDiagnostics d = diagonal_covariance(mollified_family(2, h, M));
    op_pts.push_back({h, d.op_norm, 0.0});
    hs_pts.push_back({h, d.hs_norm, 0.0});
  }
  const RateFit op_fit = rate_fit(op_pts);
  const RateFit hs_fit = rate_fit(hs_pts);
  CHECK(op_fit.slope == doctest::Approx(2.0).epsilon(0.025));   // d
  CHECK(hs_fit.slope == doctest::Approx(1.0).epsilon(0.05));    // d/2
}

TEST_CASE("sampled increments are divergence-free and couple grid and points") {
  const NoiseSpec spec = mollified_family(2, 0.2, 48);
  RngStream rng(99);
  const NoiseIncrement inc = sample_increment(spec, 0.01, rng);
  const SpectralVectorField W = inc.as_field();
  CHECK(W.divergence_free);
  CHECK(W.max_divergence() < 1e-12);

  // grid values equal direct evaluation at grid points
  const int M = spec.modes;
  const std::vector<double> g0 = W.comp[0].to_grid();
  const std::vector<double> g1 = W.comp[1].to_grid();
  double worst = 0.0;
  for (int i = 0; i < M; i += 7)
    for (int j = 0; j < M; j += 5) {
      const Vec3 w = inc.evaluate({double(i) / M, double(j) / M, 0.0});
      worst = std::max(worst, std::abs(w[0] - g0[i * M + j]));
      worst = std::max(worst, std::abs(w[1] - g1[i * M + j]));
    }
  CHECK(worst < 1e-10);

  CHECK_THROWS_AS(inc.evaluate({1.5, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("constant-mode-only spec translates every point identically") {
  const NoiseSpec spec = radial_spec(2, 16, 1, {}, 0.8);
  RngStream rng(5);
  const NoiseIncrement inc = sample_increment(spec, 0.04, rng);
  const Vec3 a = inc.evaluate({0.1, 0.2, 0.0});
  const Vec3 b = inc.evaluate({0.7, 0.9, 0.0});
  CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-15));
}

TEST_CASE("increment pairings: basis variance dt theta^2, gradients killed") {
  const int M = 32;
  const NoiseSpec spec = cutoff_family(2, 2, true, M);
  const double dt = 0.3;
  const double theta = spec.half_modes.front().theta;
  const Mode k0 = spec.half_modes.front().k;

  // sigma = e_k^a sqrt2 cos(2 pi k.x) as a spectral vector field
  const auto basis = perp_basis(k0, 2);
  SpectralVectorField sigma(2, M);
  for (int i = 0; i < 2; ++i)
    sigma.comp[i].set_coeff(k0, cplx{basis[0][i] / std::sqrt(2.0), 0.0});

  SpectralField phi(2, M);
  phi.set_coeff(1, 1, cplx{0.3, -0.5});
  phi.set_coeff(2, 0, cplx{0.2, 0.1});
  const SpectralVectorField gphi = gradient(phi);

  RngStream rng(2718);
  const int S = 20000;
  double acc = 0.0, acc2 = 0.0, worst_grad = 0.0;
  for (int s = 0; s < S; ++s) {
    const SpectralVectorField W = sample_increment(spec, dt, rng).as_field();
    double pair = 0.0, gpair = 0.0;
    for (int i = 0; i < 2; ++i) {
      pair += field_inner(W.comp[i], sigma.comp[i]);
      gpair += field_inner(W.comp[i], gphi.comp[i]);
    }
    acc += pair;
    acc2 += pair * pair;
    worst_grad = std::max(worst_grad, std::abs(gpair));
  }
  const double mean = acc / S;
  const double var = acc2 / S - mean * mean;
  const double target = dt * theta * theta;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(var / S));
  CHECK(std::abs(var - target) < 3.0 * target * std::sqrt(2.0 / S) + 1e-12);
  CHECK(worst_grad < 1e-10);  // divergence-free kills gradient pairings
}

TEST_CASE("empirical pointwise covariance matches diagonal_covariance") {
  const NoiseSpec spec = cutoff_family(2, 2, true, 24);
  const CovarianceDiagnostics d = diagonal_covariance(spec);
  const double dt = 1.0;
  RngStream rng(1234);
  const Vec3 x0{0.37, 0.62, 0.0};
  const int S = 100000;
  std::array<std::array<double, 2>, 2> sum{}, sum2{};
  for (int s = 0; s < S; ++s) {
    const NoiseIncrement inc = sample_increment(spec, dt, rng);
    const Vec3 w = inc.evaluate(x0);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double v = w[i] * w[j] / dt;
        sum[i][j] += v;
        sum2[i][j] += v * v;
      }
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double m = sum[i][j] / S;
      const double se = std::sqrt((sum2[i][j] / S - m * m) / S);
      CHECK(std::abs(m - d.A(i, j)) < 3.0 * se + 1e-12);
    }
}

TEST_CASE("two-point kernel: exact sum and empirical covariance agree") {
  const NoiseSpec spec = cutoff_family(2, 1, true, 16);
  const Vec3 x{0.1, 0.4, 0.0}, y{0.6, 0.4, 0.0};  // x - y = (-1/2, 0)
  // explicit 4-term oracle: Q(r) = sum theta^2 P_k cos(2 pi k.r)
  const double t2 = 0.5;  // normalized: theta^2 = 1/2
  SymMat oracle = SymMat::zero(2);
  oracle.add_perp_projector({1, 0, 0}, 2.0 * t2 * std::cos(2.0 * M_PI * -0.5));
  oracle.add_perp_projector({0, 1, 0}, 2.0 * t2 * std::cos(0.0));
  const SymMat got = kernel_exact(spec, {-0.5, 0.0, 0.0});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(got(i, j) == doctest::Approx(oracle(i, j)).epsilon(1e-13));

  RngStream rng(777);
  const int S = 60000;
  const double dt = 1.0;
  std::array<std::array<double, 2>, 2> sum{}, sum2{};
  for (int s = 0; s < S; ++s) {
    const NoiseIncrement inc = sample_increment(spec, dt, rng);
    const Vec3 wx = inc.evaluate(x), wy = inc.evaluate(y);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double v = wx[i] * wy[j] / dt;
        sum[i][j] += v;
        sum2[i][j] += v * v;
      }
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double m = sum[i][j] / S;
      const double se = std::sqrt((sum2[i][j] / S - m * m) / S);
      CHECK(std::abs(m - got(i, j)) < 3.0 * se + 1e-12);
    }
}

TEST_CASE("mollified kernel decorrelates at fixed separation as h decreases") {
  const Vec3 r{0.3, 0.0, 0.0};
  double prev = 1e300;
  double first = 0.0, last = 0.0;
  for (double h : {0.3, 0.25, 0.2, 0.15, 0.1}) {
    const NoiseSpec spec = mollified_family(2, h, 96);
    const SymMat q = kernel_exact(spec, r);
    const double n = q.frobenius_norm();
    CHECK(n < prev);
    prev = n;
    if (first == 0.0) first = n;
    last = n;
  }
  // the harmonic component never decorrelates, so the floor is theta_0^2 ~ h^d
  // on top of the exp(-|r|^2 / 4 h^2)-order decay of the nonconstant modes
  CHECK(last < 0.2 * first);
}

TEST_CASE("spec JSON round trip") {
  for (const NoiseSpec& spec :
       {cutoff_family(2, 3, true, 32), mollified_family(3, 0.3, 24),
        radial_spec(2, 32, 3, {{1, 0.5}, {2, 0.25}}, 0.1)}) {
    const std::string j = spec.to_json();
    const NoiseSpec back = NoiseSpec::from_json(j);
    REQUIRE(back.half_modes.size() == spec.half_modes.size());
    CHECK(back.dim == spec.dim);
    CHECK(back.modes == spec.modes);
    CHECK(back.include_harmonic == spec.include_harmonic);
    CHECK(back.theta0 == doctest::Approx(spec.theta0).epsilon(1e-12));
    for (std::size_t i = 0; i < spec.half_modes.size(); ++i) {
      CHECK(back.half_modes[i].k == spec.half_modes[i].k);
      CHECK(back.half_modes[i].theta ==
            doctest::Approx(spec.half_modes[i].theta).epsilon(1e-12));
    }
  }
}

TEST_CASE("perp basis is orthonormal and perpendicular to k") {
  for (int dim : {2, 3}) {
    for (const Mode k : {Mode{1, 0, 0}, Mode{0, 0, 1}, Mode{0, 1, 0}, Mode{2, -3, 1},
                         Mode{-4, 1, 2}, Mode{5, 5, 0}}) {
      if (dim == 2 && k[2] != 0) continue;
      const Mode kk = dim == 2 ? Mode{k[0], k[1], 0} : k;
      if (mode_norm2(kk) == 0) continue;
      const auto basis = perp_basis(kk, dim);
      REQUIRE(int(basis.size()) == dim - 1);
      for (std::size_t a = 0; a < basis.size(); ++a) {
        double dot_k = 0.0, nrm = 0.0;
        for (int i = 0; i < dim; ++i) {
          dot_k += basis[a][i] * kk[i];
          nrm += basis[a][i] * basis[a][i];
        }
        CHECK(std::abs(dot_k) < 1e-12);
        CHECK(nrm == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t b = a + 1; b < basis.size(); ++b) {
          double dot = 0.0;
          for (int i = 0; i < dim; ++i) dot += basis[a][i] * basis[b][i];
          CHECK(std::abs(dot) < 1e-12);
        }
      }
    }
  }
}
