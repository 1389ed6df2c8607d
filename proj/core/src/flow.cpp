#include "storm/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace storm {

namespace {
double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // guard against -1e-17 rounding to 1.0
  return r;
}
}  // namespace

ParticleCloud ParticleCloud::uniform_iid(int dim, std::size_t count, RngStream& rng) {
  if (count < 1) throw std::invalid_argument("ParticleCloud: count >= 1 required");
  ParticleCloud c;
  c.dim = dim;
  c.pos.resize(count, Vec3{0, 0, 0});
  c.disp.resize(count, Vec3{0, 0, 0});
  for (auto& p : c.pos)
    for (int i = 0; i < dim; ++i) p[i] = rng.uniform();
  return c;
}

ParticleCloud ParticleCloud::stratified(int dim, int per_axis, RngStream& rng) {
  if (per_axis < 1) throw std::invalid_argument("ParticleCloud: per_axis >= 1");
  ParticleCloud c;
  c.dim = dim;
  const std::size_t n = dim == 3 ? std::size_t(per_axis) * per_axis * per_axis
                                 : std::size_t(per_axis) * per_axis;
  c.pos.resize(n, Vec3{0, 0, 0});
  c.disp.resize(n, Vec3{0, 0, 0});
  const double w = 1.0 / per_axis;
  std::size_t idx = 0;
  const int kmax = dim == 3 ? per_axis : 1;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j)
      for (int k = 0; k < kmax; ++k) {
        Vec3 p{(i + rng.uniform()) * w, (j + rng.uniform()) * w,
               dim == 3 ? (k + rng.uniform()) * w : 0.0};
        c.pos[idx++] = p;
      }
  return c;
}

void heun_flow_step(ParticleCloud& cloud, const NoiseIncrement& inc) {
  if (cloud.dim != inc.dim) throw std::invalid_argument("heun_flow_step: dim mismatch");
  const std::size_t n = cloud.count();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 w1 = inc.evaluate(cloud.pos[i]);
    Vec3 mid = cloud.pos[i];
    for (int d = 0; d < cloud.dim; ++d) mid[d] = wrap01(mid[d] - w1[d]);
    const Vec3 w2 = inc.evaluate(mid);
    for (int d = 0; d < cloud.dim; ++d) {
      const double step = -0.5 * (w1[d] + w2[d]);
      cloud.disp[i][d] += step;
      cloud.pos[i][d] = wrap01(cloud.pos[i][d] + step);
    }
  }
}

std::vector<double> eval_at_points(const TrigPoly& f, const std::vector<Vec3>& pts) {
  std::vector<double> v(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) v[i] = f(pts[i]);
  return v;
}

double weak_pairing(const std::vector<double>& u0_at_start, const ParticleCloud& cloud,
                    const TrigPoly& phi) {
  if (u0_at_start.size() != cloud.count())
    throw std::invalid_argument("weak_pairing: value/particle count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < cloud.count(); ++i)
    acc += u0_at_start[i] * phi(cloud.pos[i]);
  return acc / double(cloud.count());
}

UniformityReport uniformity_test(const ParticleCloud& cloud) {
  const std::size_t P = cloud.count();
  if (P < 1000) throw std::invalid_argument("uniformity_test: need at least 10^3 particles");
  UniformityReport rep;
  rep.all_pass = true;
  const double band = 3.0 / std::sqrt(double(P));
  const int k3max = cloud.dim == 3 ? 4 : 0;
  for (int k1 = -4; k1 <= 4; ++k1)
    for (int k2 = -4; k2 <= 4; ++k2)
      for (int k3 = -k3max; k3 <= k3max; ++k3) {
        const Mode k{k1, k2, k3};
        if (!is_positive_half(k) || mode_norm2(k) > 16.0) continue;
        cplx acc{0.0, 0.0};
        for (const auto& p : cloud.pos) {
          const double ph = -2.0 * M_PI * (k[0] * p[0] + k[1] * p[1] + k[2] * p[2]);
          acc += cplx{std::cos(ph), std::sin(ph)};
        }
        const double a = std::abs(acc) / double(P);
        const bool pass = a <= band;
        rep.all_pass = rep.all_pass && pass;
        rep.modes.push_back({k, a, band, pass});
      }
  // per-axis Kolmogorov-Smirnov against the uniform law
  std::vector<double> coord(P);
  for (int d = 0; d < cloud.dim; ++d) {
    for (std::size_t i = 0; i < P; ++i) coord[i] = cloud.pos[i][d];
    std::sort(coord.begin(), coord.end());
    double worst = 0.0;
    for (std::size_t i = 0; i < P; ++i) {
      worst = std::max(worst, std::abs((double(i) + 1.0) / P - coord[i]));
      worst = std::max(worst, std::abs(coord[i] - double(i) / P));
    }
    rep.ks_stat[d] = worst;
  }
  return rep;
}

std::string UniformityReport::to_json() const {
  nlohmann::json j;
  j["all_pass"] = all_pass;
  auto& arr = j["modes"] = nlohmann::json::array();
  for (const auto& m : modes)
    arr.push_back({{"k", {m.k[0], m.k[1], m.k[2]}},
                   {"abs_coeff", m.abs_coeff},
                   {"band", m.band},
                   {"pass", m.pass}});
  j["ks_stat"] = {ks_stat[0], ks_stat[1], ks_stat[2]};
  return j.dump(2);
}

CrossCovariance pair_decorrelation(const NoiseSpec& spec, const Vec3& x, const Vec3& y,
                                   int samples, double dt, std::uint64_t seed) {
  bool same = true;
  for (int i = 0; i < 3; ++i) same = same && x[i] == y[i];
  // x == y is allowed and recovers A; distinct points probe decorrelation
  CrossCovariance out;
  out.dim = spec.dim;
  RngStream rng(hash64({seed, 0x70616972ULL}));  // "pair"
  std::array<std::array<double, 3>, 3> sum{}, sumsq{};
  for (int s = 0; s < samples; ++s) {
    const NoiseIncrement inc = sample_increment(spec, dt, rng);
    const Vec3 wx = inc.evaluate(x);
    const Vec3 wy = same ? wx : inc.evaluate(y);
    for (int i = 0; i < spec.dim; ++i)
      for (int j = 0; j < spec.dim; ++j) {
        const double v = wx[i] * wy[j] / dt;
        sum[i][j] += v;
        sumsq[i][j] += v * v;
      }
  }
  for (int i = 0; i < spec.dim; ++i)
    for (int j = 0; j < spec.dim; ++j) {
      const double m = sum[i][j] / samples;
      const double var = std::max(0.0, sumsq[i][j] / samples - m * m);
      out.mean[i][j] = m;
      out.stderr_[i][j] = std::sqrt(var / samples);
    }
  return out;
}

void append_cloud_csv(std::string& csv, int step, const ParticleCloud& cloud) {
  if (csv.empty()) {
    csv = "step,particle_id";
    for (int d = 0; d < cloud.dim; ++d) csv += ",x" + std::to_string(d + 1);
    csv += "\n";
  }
  char line[160];
  for (std::size_t i = 0; i < cloud.count(); ++i) {
    if (cloud.dim == 2)
      std::snprintf(line, sizeof(line), "%d,%zu,%.17g,%.17g\n", step, i,
                    cloud.pos[i][0], cloud.pos[i][1]);
    else
      std::snprintf(line, sizeof(line), "%d,%zu,%.17g,%.17g,%.17g\n", step, i,
                    cloud.pos[i][0], cloud.pos[i][1], cloud.pos[i][2]);
    csv += line;
  }
}

}  // namespace storm
