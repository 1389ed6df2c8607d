#include "storm/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"

namespace storm {

MomentEstimate mean_stderr(const std::vector<double>& samples) {
  MomentEstimate e;
  e.n = int(samples.size());
  if (e.n == 0) return e;
  double s = 0.0;
  for (double v : samples) s += v;
  e.mean = s / e.n;
  if (e.n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.mean) * (v - e.mean);
    e.stderr_ = std::sqrt(ss / (double(e.n) * (e.n - 1)));
  }
  return e;
}

RateFit rate_fit(const std::vector<RatePoint>& pts) {
  if (pts.size() < 4) throw std::invalid_argument("rate_fit: need at least 4 points");
  for (const auto& p : pts) {
    if (p.param <= 0.0 || p.estimate <= 0.0)
      throw std::invalid_argument("rate_fit: params and estimates must be positive");
    if (p.estimate < 2.0 * p.stderr_)
      throw underpowered_error("rate_fit: estimate below 2x its stderr at param " +
                               std::to_string(p.param));
  }
  const std::size_t n = pts.size();
  std::vector<double> x(n), y(n), w(n);
  bool all_exact = true;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::log(pts[i].param);
    y[i] = std::log(pts[i].estimate);
    const double slog = pts[i].stderr_ / pts[i].estimate;  // delta method
    if (slog > 0.0) all_exact = false;
    w[i] = 1.0 / std::max(slog * slog, 1e-24);
  }
  if (all_exact) for (auto& wi : w) wi = 1.0;

  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * x[i];
    swy += w[i] * y[i];
  }
  const double xb = swx / sw, yb = swy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w[i] * (x[i] - xb) * (x[i] - xb);
    sxy += w[i] * (x[i] - xb) * (y[i] - yb);
  }
  if (sxx <= 0.0) throw std::invalid_argument("rate_fit: degenerate abscissae");

  RateFit f;
  f.points_used = int(n);
  f.slope = sxy / sxx;
  f.intercept = yb - f.slope * xb;
  if (all_exact) {
    // no measurement errors given: standard error from residual scatter
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      rss += r * r;
    }
    f.slope_se = n > 2 ? std::sqrt(rss / (double(n) - 2.0) / sxx) : 0.0;
  } else {
    f.slope_se = std::sqrt(1.0 / sxx);
  }
  f.ci95_half = 1.96 * f.slope_se;
  return f;
}

EnsembleSummary ensemble_run(const std::string& experiment_id,
                             const std::vector<double>& params, int replicas,
                             std::uint64_t master_seed, int threads,
                             const ReplicaSampler& sampler, bool fit_rates) {
  if (replicas < 2) throw std::invalid_argument("ensemble_run: need at least 2 replicas");
  if (params.empty()) throw std::invalid_argument("ensemble_run: empty parameter grid");
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t id_hash = hash64({std::hash<std::string>{}(experiment_id)});

  const std::size_t total = params.size() * std::size_t(replicas);
  std::vector<double> samples = run_replicas<double>(total, threads, [&](std::size_t i) {
    const std::size_t p = i / replicas;
    const std::size_t r = i % replicas;
    const std::uint64_t seed = hash64({master_seed, id_hash, p, r});
    try {
      return sampler(p, r, seed);
    } catch (const std::exception& ex) {
      throw std::runtime_error("ensemble_run: replica failed (seed " +
                               std::to_string(seed) + "): " + ex.what());
    }
  });

  EnsembleSummary out;
  out.experiment_id = experiment_id;
  out.master_seed = master_seed;
  out.replicas = replicas;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<double> block(samples.begin() + p * replicas,
                              samples.begin() + (p + 1) * replicas);
    out.points.push_back({params[p], mean_stderr(block)});
  }

  if (fit_rates) {
    std::vector<RatePoint> usable;
    for (const auto& pt : out.points) {
      if (pt.estimate.mean <= 0.0) continue;
      if (pt.estimate.stderr_ > 0.5 * pt.estimate.mean) continue;  // noise-dominated
      usable.push_back({pt.param, pt.estimate.mean, pt.estimate.stderr_});
    }
    if (usable.size() >= 4) {
      out.fit = rate_fit(usable);
      out.fit_valid = true;
    }
  }
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string EnsembleSummary::to_json() const {
  nlohmann::json j;
  j["experiment_id"] = experiment_id;
  j["master_seed"] = master_seed;
  j["replicas"] = replicas;
  auto& arr = j["points"] = nlohmann::json::array();
  for (const auto& p : points)
    arr.push_back({{"param", p.param},
                   {"estimate", p.estimate.mean},
                   {"stderr", p.estimate.stderr_},
                   {"n", p.estimate.n}});
  if (fit_valid)
    j["fit"] = {{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"slope_se", fit.slope_se},
                {"ci95_half", fit.ci95_half},
                {"points_used", fit.points_used}};
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

std::string EnsembleSummary::csv() const {
  std::string s = "param,estimate,stderr,replicas\n";
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%d\n", p.param,
                  p.estimate.mean, p.estimate.stderr_, p.estimate.n);
    s += line;
  }
  return s;
}

std::string EnsembleSummary::xy_data() const {
  std::string s = "x,y,yerr\n";
  char line[128];
  for (const auto& p : points) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", p.param,
                  p.estimate.mean, p.estimate.stderr_);
    s += line;
  }
  return s;
}

double grad_quadratic(const SymMat& A, const SpectralField& phi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double n = std::norm(phi.raw(i));
    if (n == 0.0) continue;
    const Mode k = phi.mode_of(i);
    const Vec3 kv{double(k[0]), double(k[1]), double(k[2])};
    acc += 4.0 * M_PI * M_PI * A.quad(kv) * n;
  }
  return acc;
}

namespace {

struct ChaosEntry {
  Mode k;
  Vec3 e;
  double t2;
};

// full-lattice decomposition K = sum theta^2 (g x conj(g)),
// g(x) = (e . grad phi)(x) exp(2 pi i k.x)
std::vector<ChaosEntry> chaos_entries(const NoiseSpec& spec) {
  std::vector<ChaosEntry> list;
  for (const auto& m : spec.half_modes) {
    const auto basis = perp_basis(m.k, spec.dim);
    const Mode neg{-m.k[0], -m.k[1], -m.k[2]};
    for (const auto& e : basis) {
      list.push_back({m.k, e, m.theta * m.theta});
      list.push_back({neg, e, m.theta * m.theta});  // P_{-k} = P_k
    }
  }
  if (spec.include_harmonic) {
    for (int i = 0; i < spec.dim; ++i) {
      Vec3 e{0, 0, 0};
      e[i] = 1.0;
      list.push_back({Mode{0, 0, 0}, e, spec.theta0 * spec.theta0});
    }
  }
  return list;
}

std::vector<std::pair<Mode, cplx>> active_modes_full(const SpectralField& u) {
  std::vector<std::pair<Mode, cplx>> out;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.raw(i) != cplx{0.0, 0.0}) out.emplace_back(u.mode_of(i), u.raw(i));
  return out;
}

}  // namespace

double chaos_hs_norm_sq(const NoiseSpec& spec, const SpectralField& phi) {
  const auto entries = chaos_entries(spec);
  const auto phim = active_modes_full(phi);
  const int degp = support_kmax(phi);

  // index entries by wavevector for windowed pair lookup
  std::map<Mode, std::vector<std::size_t>> by_mode;
  for (std::size_t i = 0; i < entries.size(); ++i) by_mode[entries[i].k].push_back(i);

  auto grad_dot = [&](const Vec3& e, const Mode& p, cplx coeff) -> cplx {
    const double edp = e[0] * p[0] + e[1] * p[1] + e[2] * p[2];
    return cplx{0.0, 2.0 * M_PI * edp} * coeff;
  };

  double acc = 0.0;
  const int win = 2 * degp;
  for (const auto& ea : entries) {
    for (int q1 = -win; q1 <= win; ++q1)
      for (int q2 = -win; q2 <= win; ++q2)
        for (int q3 = (spec.dim == 3 ? -win : 0); q3 <= (spec.dim == 3 ? win : 0); ++q3) {
          const Mode kb{ea.k[0] + q1, ea.k[1] + q2, ea.k[2] + q3};
          const auto it = by_mode.find(kb);
          if (it == by_mode.end()) continue;
          for (std::size_t bi : it->second) {
            const auto& eb = entries[bi];
            // (g_a, g_b) = sum_p psi_a(p) psi_b(q - p), q = k_b - k_a
            const Mode q{eb.k[0] - ea.k[0], eb.k[1] - ea.k[1], eb.k[2] - ea.k[2]};
            cplx ip{0.0, 0.0};
            for (const auto& [p, cp] : phim) {
              const Mode r{q[0] - p[0], q[1] - p[1], q[2] - p[2]};
              // psi_b coefficient at r: find phi coefficient at r
              cplx cr{0.0, 0.0};
              bool found = false;
              for (const auto& [p2, cp2] : phim)
                if (p2 == r) {
                  cr = cp2;
                  found = true;
                  break;
                }
              if (!found) continue;
              ip += grad_dot(ea.e, p, cp) * grad_dot(eb.e, r, cr);
            }
            acc += ea.t2 * eb.t2 * std::norm(ip);
          }
        }
  }
  return acc;
}

ChaosPairingResult chaos_pairing(const NoiseSpec& spec, const SpectralField& phi,
                                 int samples, std::uint64_t master_seed, int threads) {
  if (samples < 2) throw std::invalid_argument("chaos_pairing: need at least 2 samples");
  const int M = spec.modes;
  const int kmax = M / 3;
  const int degp = support_kmax(phi);

  // truncation check: HS mass of kernel entries reaching beyond the white
  // noise cut must be negligible
  double t4_total = 0.0, t4_edge = 0.0;
  for (const auto& m : spec.half_modes) {
    const double t4 = std::pow(m.theta, 4);
    t4_total += t4;
    int kinf = 0;
    for (int i = 0; i < spec.dim; ++i) kinf = std::max(kinf, std::abs(m.k[i]));
    if (kinf > kmax - degp) t4_edge += t4;
  }
  if (t4_total > 0.0 && std::sqrt(t4_edge / t4_total) > 1e-8)
    throw std::runtime_error("chaos_pairing: truncation too coarse for this spec");

  const std::uint64_t id = hash64({master_seed, 0x6368616f73ULL});  // "chaos"
  std::vector<double> vals = run_replicas<double>(samples, threads, [&](std::size_t s) {
    RngStream rng(hash64({id, s}));
    const SpectralField eta = SpectralField::white_noise(spec.dim, M, kmax, rng);
    SpectralVectorField g = gradient(phi);
    SpectralVectorField F(spec.dim, M);
    for (int i = 0; i < spec.dim; ++i) F.comp[i] = product_unaliased(eta, g.comp[i]);
    return q_quadratic_form(spec, F);
  });

  ChaosPairingResult out;
  out.samples = samples;
  const MomentEstimate m = mean_stderr(vals);
  out.estimate_mean = m.mean;
  out.mean_se = m.stderr_;
  double m2 = 0.0, m4 = 0.0;
  for (double v : vals) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= samples;
  m4 /= samples;
  out.empirical_var = m2 * double(samples) / (samples - 1);
  out.var_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / samples);
  out.target = grad_quadratic(diagonal_covariance(spec).A, phi);
  out.hs_norm_sq = chaos_hs_norm_sq(spec, phi);
  return out;
}

void ModeSeriesEnsemble::add_trajectory(const Trajectory& traj) {
  if (traj.snapshots.size() < 2)
    throw std::invalid_argument("ModeSeriesEnsemble: need at least 2 snapshots");
  if (dt_snap == 0.0)
    dt_snap = traj.snapshots[1].first - traj.snapshots[0].first;
  std::vector<std::vector<cplx>> per_mode(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    per_mode[m].reserve(traj.snapshots.size());
    for (const auto& [t, u] : traj.snapshots) per_mode[m].push_back(u.coeff(modes[m]));
  }
  data.push_back(std::move(per_mode));
}

LawCompareReport she_law_compare(const ModeSeriesEnsemble& a,
                                 const ModeSeriesEnsemble& b, int max_lag) {
  if (a.modes != b.modes)
    throw std::invalid_argument("she_law_compare: mismatched mode sets");
  if (a.data.empty() || b.data.empty())
    throw std::invalid_argument("she_law_compare: empty ensembles");
  if (std::abs(a.dt_snap - b.dt_snap) > 1e-12)
    throw std::invalid_argument("she_law_compare: mismatched snapshot grids");

  // Sample autocorrelation with time-matched normalization
  // rho(l) = sum Re z_{j+l} conj(z_j) / sqrt(sum |z_j|^2 sum |z_{j+l}|^2),
  // which stays calibrated when the scheme loses total variance slowly.
  auto analyze = [&](const ModeSeriesEnsemble& ens, std::size_t m, double lam,
                     double& var, double& disc) {
    double c0 = 0.0;
    std::size_t n0 = 0;
    for (const auto& rep : ens.data)
      for (const cplx& z : rep[m]) {
        c0 += std::norm(z);
        ++n0;
      }
    var = c0 / double(n0);
    disc = 0.0;
    for (int l = 1; l <= max_lag; ++l) {
      double cl = 0.0, nlo = 0.0, nhi = 0.0;
      for (const auto& rep : ens.data) {
        const auto& z = rep[m];
        for (std::size_t j = 0; j + l < z.size(); ++j) {
          cl += (z[j + l] * std::conj(z[j])).real();
          nlo += std::norm(z[j]);
          nhi += std::norm(z[j + l]);
        }
      }
      const double rho = cl / std::sqrt(nlo * nhi);
      const double target = std::exp(-0.5 * lam * l * ens.dt_snap);
      disc = std::max(disc, std::abs(rho - target));
    }
  };

  LawCompareReport rep;
  rep.lags = max_lag;
  for (std::size_t m = 0; m < a.modes.size(); ++m) {
    LawCompareReport::PerMode pm;
    pm.k = a.modes[m];
    const double lam = laplacian_eig(pm.k);
    analyze(a, m, lam, pm.var_a, pm.disc_a);
    analyze(b, m, lam, pm.var_b, pm.disc_b);
    rep.modes.push_back(pm);
  }
  return rep;
}

const LawCompareReport::PerMode& LawCompareReport::mode(const Mode& k) const {
  for (const auto& m : modes)
    if (m.k == k) return m;
  throw std::invalid_argument("LawCompareReport: mode not present");
}

std::string LawCompareReport::to_json() const {
  nlohmann::json j;
  j["lags"] = lags;
  auto& arr = j["modes"] = nlohmann::json::array();
  for (const auto& m : modes)
    arr.push_back({{"k", {m.k[0], m.k[1], m.k[2]}},
                   {"var_a", m.var_a},
                   {"var_b", m.var_b},
                   {"disc_a", m.disc_a},
                   {"disc_b", m.disc_b}});
  return j.dump(2);
}

WeakBoundResult weak_bound_check(const SpectralField& u0, const SpectralField& phi,
                                 const NoiseSpec& spec, double t, double dt,
                                 int replicas, std::uint64_t master_seed, int threads) {
  const CovarianceDiagnostics diag = diagonal_covariance(spec);
  const SpectralField pu0 = apply_heat_multiplier(u0, diag.A, t);

  const std::uint64_t id = hash64({master_seed, 0x77626f756e64ULL});  // "wbound"
  std::vector<double> sq = run_replicas<double>(replicas, threads, [&](std::size_t r) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_final = t;
    cfg.modes = u0.modes();
    cfg.seed = hash64({id, r});
    cfg.snapshot_times = {t};
    const Trajectory traj = simulate_transport(u0, spec, cfg);
    const double p = field_inner(traj.snapshots.back().second - pu0, phi);
    return p * p;
  });

  WeakBoundResult out;
  const MomentEstimate m = mean_stderr(sq);
  out.lhs = m.mean;
  out.lhs_se = m.stderr_;
  const double sup = TrigPoly::from_field(u0).max_abs();
  out.bound = diag.op_norm == 0.0
                  ? 0.0
                  : 0.5 / diag.A.min_eig() * diag.op_norm * sup * sup *
                        field_inner(phi, phi);
  const double rel = out.lhs > 0.0 ? out.lhs_se / out.lhs : 0.0;
  out.pass = out.lhs <= out.bound * (1.0 + 3.0 * rel);
  out.margin = out.lhs > 0.0 ? out.bound / out.lhs
                             : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace storm
