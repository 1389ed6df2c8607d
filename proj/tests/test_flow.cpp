#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "storm/flow.hpp"
#include "storm/solver.hpp"

using namespace storm;

TEST_CASE("zero-theta noise leaves the cloud unchanged") {
  const NoiseSpec empty = radial_spec(2, 16, 2, {});
  RngStream rng(1);
  ParticleCloud cloud = ParticleCloud::uniform_iid(2, 50, rng);
  const auto before = cloud.pos;
  heun_flow_step(cloud, sample_increment(empty, 0.01, rng));
  for (std::size_t i = 0; i < cloud.count(); ++i) {
    CHECK(cloud.pos[i][0] == before[i][0]);
    CHECK(cloud.pos[i][1] == before[i][1]);
  }
}

TEST_CASE("constant-mode noise is a rigid translation") {
  const NoiseSpec spec = radial_spec(2, 16, 1, {}, 0.7);
  RngStream rng(3);
  ParticleCloud cloud = ParticleCloud::uniform_iid(2, 40, rng);
  const auto before = cloud.pos;
  for (int s = 0; s < 5; ++s) heun_flow_step(cloud, sample_increment(spec, 0.02, rng));
  // all displacement accumulators identical, pairwise wrapped distances kept
  for (std::size_t i = 1; i < cloud.count(); ++i) {
    CHECK(cloud.disp[i][0] == doctest::Approx(cloud.disp[0][0]).epsilon(1e-15));
    CHECK(cloud.disp[i][1] == doctest::Approx(cloud.disp[0][1]).epsilon(1e-15));
  }
  auto wrapped_dist = [](const Vec3& a, const Vec3& b) {
    double d2 = 0.0;
    for (int i = 0; i < 2; ++i) {
      double d = std::abs(a[i] - b[i]);
      d = std::min(d, 1.0 - d);
      d2 += d * d;
    }
    return std::sqrt(d2);
  };
  for (std::size_t i = 1; i < 10; ++i)
    CHECK(wrapped_dist(cloud.pos[0], cloud.pos[i]) ==
          doctest::Approx(wrapped_dist(before[0], before[i])).epsilon(1e-10));
}

TEST_CASE("single-particle diffusivity approaches trace A") {
  const NoiseSpec spec = cutoff_family(2, 1, true, 16);
  const double tr_a = diagonal_covariance(spec).A.trace();  // = 2
  const double dt = 2e-4, T = 0.02;
  const int steps = int(T / dt + 0.5), R = 24, P = 150;
  std::vector<double> means;
  for (int r = 0; r < R; ++r) {
    RngStream rng(hash64({50, std::uint64_t(r)}));
    ParticleCloud cloud = ParticleCloud::uniform_iid(2, P, rng);
    for (int s = 0; s < steps; ++s)
      heun_flow_step(cloud, sample_increment(spec, dt, rng));
    double acc = 0.0;
    for (const auto& d : cloud.disp) acc += d[0] * d[0] + d[1] * d[1];
    means.push_back(acc / P / T);
  }
  double m = 0, s2 = 0;
  for (double v : means) m += v;
  m /= R;
  for (double v : means) s2 += (v - m) * (v - m);
  const double se = std::sqrt(s2 / (R - 1.0) / R);
  CHECK(std::abs(m - tr_a) < 3.0 * se + 0.05 * tr_a);  // 3 sigma + O(dt) slack
}

TEST_CASE("weak pairing at t = 0 is plain Monte Carlo quadrature") {
  const int M = 32;
  SpectralField u0(2, M), phi(2, M);
  u0.set_coeff(1, 0, cplx{1.0 / std::sqrt(2.0), 0.0});
  u0.set_coeff(2, 1, cplx{0.2, -0.3});
  phi.set_coeff(1, 0, cplx{1.0 / std::sqrt(2.0), 0.0});
  const TrigPoly pu = TrigPoly::from_field(u0);
  const TrigPoly pphi = TrigPoly::from_field(phi);
  const double exact = field_inner(u0, phi);

  RngStream rng(9);
  ParticleCloud cloud = ParticleCloud::uniform_iid(2, 40000, rng);
  const std::vector<double> u0v = eval_at_points(pu, cloud.pos);
  const double est = weak_pairing(u0v, cloud, pphi);
  double sd = 0.0;
  for (std::size_t i = 0; i < cloud.count(); ++i) {
    const double v = u0v[i] * pphi(cloud.pos[i]) - exact;
    sd += v * v;
  }
  sd = std::sqrt(sd / cloud.count());
  CHECK(std::abs(est - exact) < 3.0 * sd / std::sqrt(double(cloud.count())));

  // phi = 1: estimator of the mean of u0
  SpectralField one(2, M);
  one.set_coeff(0, 0, 1.0);
  const double mean_est = weak_pairing(u0v, cloud, TrigPoly::from_field(one));
  CHECK(std::abs(mean_est - 0.0) < 3.0 / std::sqrt(double(cloud.count())));
}

TEST_CASE("stratified initialization reduces quadrature variance") {
  const int M = 16;
  SpectralField u0(2, M);
  u0.set_coeff(1, 1, cplx{0.5, 0.2});
  const TrigPoly p = TrigPoly::from_field(u0);
  const double exact = field_inner(u0, u0);
  const int R = 40;
  double var_iid = 0.0, var_strat = 0.0;
  for (int r = 0; r < R; ++r) {
    RngStream r1(hash64({60, std::uint64_t(r)})), r2(hash64({61, std::uint64_t(r)}));
    ParticleCloud iid = ParticleCloud::uniform_iid(2, 1024, r1);
    ParticleCloud strat = ParticleCloud::stratified(2, 32, r2);
    const double a = weak_pairing(eval_at_points(p, iid.pos), iid, p);
    const double b = weak_pairing(eval_at_points(p, strat.pos), strat, p);
    var_iid += (a - exact) * (a - exact);
    var_strat += (b - exact) * (b - exact);
  }
  CHECK(var_strat < 0.5 * var_iid);
}

TEST_CASE("cross-oracle: field pairing vs particle pairing on one realization") {
  // the field scheme carries the Ito increment at the left point while the
  // particles integrate Stratonovich-Heun: their pathwise gap at fixed dt
  // scales with the noise amplitude squared, so the check runs at A = 0.1 I
  const int M = 32;
  const double dt = 1e-3, T = 0.05;
  const NoiseSpec spec = scale_amplitude(cutoff_family(2, 2, true, M), std::sqrt(0.1));
  SpectralField u0(2, M), phi(2, M);
  u0.set_coeff(1, 0, cplx{1.0 / std::sqrt(2.0), 0.0});
  phi.set_coeff(1, 0, cplx{1.0 / std::sqrt(2.0), 0.0});
  const TrigPoly pu = TrigPoly::from_field(u0);
  const TrigPoly pphi = TrigPoly::from_field(phi);

  for (std::uint64_t seed : {11ull, 12ull}) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_final = T;
    cfg.modes = M;
    cfg.seed = seed;
    cfg.snapshot_times = {T};

    RngStream cloud_rng(hash64({seed, 0xc1}));
    ParticleCloud cloud = ParticleCloud::stratified(2, 100, cloud_rng);
    const std::vector<double> u0v = eval_at_points(pu, cloud.pos);

    const Trajectory traj = simulate_transport(
        u0, spec, cfg,
        [&](int, const NoiseIncrement& inc) { heun_flow_step(cloud, inc); });
    const double field_pair = field_inner(traj.snapshots.back().second, phi);
    const double particle_pair = weak_pairing(u0v, cloud, pphi);
    CHECK(std::abs(field_pair - particle_pair) <= 0.03 * std::abs(field_pair));
  }
}

TEST_CASE("uniformity test: null pass rates, point mass fails, flow preserves") {
  // fresh uniform clouds: >= 99% of per-mode statistics inside the 3 sigma band
  int total = 0, passed = 0;
  for (int s = 0; s < 20; ++s) {
    RngStream rng(hash64({70, std::uint64_t(s)}));
    const ParticleCloud cloud = ParticleCloud::uniform_iid(2, 2000, rng);
    const UniformityReport rep = uniformity_test(cloud);
    for (const auto& m : rep.modes) {
      ++total;
      passed += m.pass ? 1 : 0;
    }
    for (int d = 0; d < 2; ++d) CHECK(rep.ks_stat[d] < 2.2 / std::sqrt(2000.0));
  }
  CHECK(double(passed) / total >= 0.99);

  // a point mass fails every mode statistic
  ParticleCloud degenerate;
  degenerate.dim = 2;
  degenerate.pos.assign(2000, Vec3{0.25, 0.5, 0.0});
  degenerate.disp.assign(2000, Vec3{0, 0, 0});
  const UniformityReport bad = uniformity_test(degenerate);
  for (const auto& m : bad.modes) CHECK_FALSE(m.pass);

  // evolved clouds pass at the same rate (measure preservation)
  const NoiseSpec spec = cutoff_family(2, 2, true, 16);
  int etotal = 0, epassed = 0;
  for (int s = 0; s < 12; ++s) {
    RngStream rng(hash64({71, std::uint64_t(s)}));
    ParticleCloud cloud = ParticleCloud::uniform_iid(2, 1200, rng);
    for (int i = 0; i < 250; ++i)
      heun_flow_step(cloud, sample_increment(spec, 1e-3, rng));
    const UniformityReport rep = uniformity_test(cloud);
    for (const auto& m : rep.modes) {
      ++etotal;
      epassed += m.pass ? 1 : 0;
    }
  }
  CHECK(double(epassed) / etotal >= 0.98);

  ParticleCloud tiny;
  tiny.dim = 2;
  tiny.pos.assign(10, Vec3{0, 0, 0});
  tiny.disp.assign(10, Vec3{0, 0, 0});
  CHECK_THROWS_AS(uniformity_test(tiny), std::invalid_argument);
}

TEST_CASE("pair decorrelation: diagonal recovers A, two-point kernel matches") {
  const NoiseSpec spec = cutoff_family(2, 1, true, 16);
  const CovarianceDiagnostics d = diagonal_covariance(spec);
  const Vec3 x{0.2, 0.8, 0.0};

  const CrossCovariance same = pair_decorrelation(spec, x, x, 40000, 0.5, 17);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(same.mean[i][j] - d.A(i, j)) < 3.0 * same.stderr_[i][j] + 1e-12);

  const Vec3 y{0.7, 0.8, 0.0};  // x - y = (-1/2, 0)
  const SymMat q = kernel_exact(spec, {-0.5, 0.0, 0.0});
  const CrossCovariance cross = pair_decorrelation(spec, x, y, 60000, 0.5, 18);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(cross.mean[i][j] - q(i, j)) < 3.0 * cross.stderr_[i][j] + 1e-12);
}

TEST_CASE("single-particle increments are Gaussian with covariance dt A") {
  const NoiseSpec spec = cutoff_family(2, 2, true, 16);
  const SymMat A = diagonal_covariance(spec).A;
  const double dt = 1e-3;
  const int S = 10000;
  RngStream rng(23);
  ParticleCloud cloud;
  cloud.dim = 2;
  cloud.pos.assign(1, Vec3{0.3, 0.6, 0.0});
  cloud.disp.assign(1, Vec3{0, 0, 0});
  std::vector<double> xs, ys;
  Vec3 prev = cloud.disp[0];
  for (int s = 0; s < S; ++s) {
    heun_flow_step(cloud, sample_increment(spec, dt, rng));
    xs.push_back((cloud.disp[0][0] - prev[0]) / std::sqrt(dt));
    ys.push_back((cloud.disp[0][1] - prev[1]) / std::sqrt(dt));
    prev = cloud.disp[0];
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0, s2 = 0, s4 = 0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) {
      s2 += (x - m) * (x - m);
      s4 += std::pow(x - m, 4);
    }
    s2 /= v.size();
    s4 /= v.size();
    return std::array<double, 3>{m, s2, s4 / (s2 * s2)};
  };
  const auto mx = moments(xs), my = moments(ys);
  const double se_var = A(0, 0) * std::sqrt(2.0 / S);
  CHECK(std::abs(mx[0]) < 3.0 * std::sqrt(A(0, 0) / S));
  CHECK(std::abs(mx[1] - A(0, 0)) < 3.0 * se_var + 0.02 * A(0, 0));
  CHECK(std::abs(my[1] - A(1, 1)) < 3.0 * se_var + 0.02 * A(1, 1));
  // excess kurtosis zero within 3 sigma plus O(dt) slack
  CHECK(std::abs(mx[2] - 3.0) < 3.0 * std::sqrt(24.0 / S) + 0.05);
  CHECK(std::abs(my[2] - 3.0) < 3.0 * std::sqrt(24.0 / S) + 0.05);
}

TEST_CASE("cloud csv export") {
  RngStream rng(2);
  const ParticleCloud cloud = ParticleCloud::uniform_iid(2, 3, rng);
  std::string csv;
  append_cloud_csv(csv, 0, cloud);
  append_cloud_csv(csv, 1, cloud);
  CHECK(csv.rfind("step,particle_id,x1,x2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
