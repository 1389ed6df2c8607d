#include "experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "config.hpp"
#include "storm/flow.hpp"
#include "storm/solver.hpp"
#include "storm/sphere.hpp"
#include "storm/stats.hpp"
#include "storm/version.hpp"

namespace storm::cli {

namespace {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// collects artifacts and writes the manifest with content hashes
struct ArtifactWriter {
  fs::path dir;
  json files = json::array();

  explicit ArtifactWriter(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }
  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write artifact " + p.string());
    files.push_back({{"path", name},
                     {"bytes", content.size()},
                     {"fnv64", fnv1a64(content)}});
  }
  void finalize(const json& config, std::uint64_t seed) {
    json man;
    man["version"] = kVersion;
    man["kind"] = config.at("kind");
    man["seed"] = seed;
    man["config_hash"] = fnv1a64(config.dump());
    man["files"] = files;
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    f << man.dump(2) << "\n";
  }
};

struct CheckCollector {
  bool enabled;
  bool all_pass = true;
  json entries = json::array();

  void add(const std::string& name, bool pass, const std::string& detail) {
    if (!enabled) return;
    all_pass = all_pass && pass;
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    entries.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
  }
  int exit_code() const { return enabled && !all_pass ? 2 : 0; }
};

int resolve_threads(const RunOptions& opts) {
  if (opts.threads > 0) return opts.threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

std::uint64_t resolve_seed(const json& cfg, const RunOptions& opts) {
  if (opts.has_seed_override) return opts.seed_override;
  if (!cfg.contains("seed")) throw ConfigError("/: missing required key 'seed'");
  if (!cfg["seed"].is_number_unsigned() && !cfg["seed"].is_number_integer())
    throw ConfigError("/seed: expected an integer");
  return cfg["seed"].get<std::uint64_t>();
}

// ---------------------------------------------------------------- simulate

int run_simulate(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/",
             {"kind", "seed", "dim", "modes", "family", "initial", "dt", "t_final"},
             {"replicas", "snapshot_times", "checks", "save_fields", "out_dir"});
  const int dim = get_int(cfg, "/", "dim");
  const int modes = get_int(cfg, "/", "modes");
  const double dt = get_num(cfg, "/", "dt");
  const double t_final = get_num(cfg, "/", "t_final");
  const int replicas = cfg.value("replicas", 1);
  const std::uint64_t seed = resolve_seed(cfg, opts);
  const NoiseSpec spec = parse_family(cfg["family"], dim, modes, "/family");
  const InitialSpec init = parse_initial(cfg["initial"], "/initial");

  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {}, {"l2_drift_max", "regularity"});
  const bool want_reg = checks.contains("regularity");
  double reg_kappa = 0.5, reg_tol = 0.2, lag_dt = 0.0;
  int n_lags = 5;
  if (want_reg) {
    check_keys(checks["regularity"], "/checks/regularity", {"kappa", "lag_dt", "n_lags"},
               {"tol"});
    reg_kappa = get_num(checks["regularity"], "/checks/regularity", "kappa");
    lag_dt = get_num(checks["regularity"], "/checks/regularity", "lag_dt");
    n_lags = get_int(checks["regularity"], "/checks/regularity", "n_lags");
    reg_tol = checks["regularity"].value("tol", 0.2);
  }

  SolverConfig base;
  base.dt = dt;
  base.t_final = t_final;
  base.modes = modes;
  if (cfg.contains("snapshot_times"))
    base.snapshot_times = cfg["snapshot_times"].get<std::vector<double>>();
  else if (want_reg)
    for (double t = 0.0; t <= t_final * (1 + 1e-12); t += lag_dt)
      base.snapshot_times.push_back(t);
  else
    base.snapshot_times = {0.0, t_final};
  std::sort(base.snapshot_times.begin(), base.snapshot_times.end());
  base.validate();

  struct RepResult {
    std::uint64_t seed = 0;
    std::uint64_t stream_key = 0;
    double l2_init = 0, l2_final = 0;
    std::vector<double> lag_msd;         // mean-square increment per dyadic lag
    std::vector<SpectralField> snaps;    // kept only for the saved trajectory
  };
  const double s_exp = -0.5 * dim - reg_kappa;
  const int threads = resolve_threads(opts);
  std::vector<RepResult> results = run_replicas<RepResult>(
      replicas, threads, [&](std::size_t r) {
        SolverConfig c = base;
        c.seed = hash64({seed, 0x73696dULL, r});  // "sim"
        const SpectralField u0 = build_initial(init, dim, modes, c.seed);
        const Trajectory traj = simulate_transport(u0, spec, c);
        RepResult out;
        out.seed = c.seed;
        out.stream_key = traj.stream_key;
        out.l2_init = traj.snapshots.front().second.l2_norm();
        out.l2_final = traj.snapshots.back().second.l2_norm();
        if (want_reg) {
          for (int li = 0; li < n_lags; ++li) {
            const int lag = 1 << li;
            double acc = 0.0;
            int n = 0;
            for (std::size_t j = 0; j + lag < traj.snapshots.size(); ++j) {
              const double d = sobolev_norm(
                  traj.snapshots[j + lag].second - traj.snapshots[j].second, s_exp);
              acc += d * d;
              ++n;
            }
            out.lag_msd.push_back(acc / n);
          }
        }
        if (r == 0 && cfg.value("save_fields", false))
          for (auto& [t, u] : traj.snapshots) out.snaps.push_back(u);
        return out;
      });

  ArtifactWriter art(opts.out_dir);
  std::string csv = "replica,seed,l2_initial,l2_final,rel_drift\n";
  double worst_drift = 0.0;
  for (int r = 0; r < replicas; ++r) {
    const double drift =
        std::abs(results[r].l2_final - results[r].l2_init) / results[r].l2_init;
    worst_drift = std::max(worst_drift, drift);
    csv += std::to_string(r) + "," + std::to_string(results[r].seed) + "," +
           fmt(results[r].l2_init) + "," + fmt(results[r].l2_final) + "," +
           fmt(drift) + "\n";
  }
  art.write("results.csv", csv);

  CheckCollector cc{opts.check};
  json report;
  report["worst_rel_drift"] = worst_drift;

  if (checks.contains("l2_drift_max")) {
    const double tol = checks["l2_drift_max"].get<double>();
    cc.add("l2_conservation", worst_drift <= tol,
           "worst |d|u||/|u0| = " + fmt(worst_drift) + " vs " + fmt(tol));
  }

  if (want_reg) {
    // E|u_{t+l} - u_t|^2 in H^{-d/2-kappa} over dyadic lags
    std::vector<RatePoint> pts;
    std::string msd_csv = "lag,msd,stderr\n";
    for (int li = 0; li < n_lags; ++li) {
      const int lag = 1 << li;
      std::vector<double> per_rep;
      for (const auto& res : results) per_rep.push_back(res.lag_msd[li]);
      const MomentEstimate m = mean_stderr(per_rep);
      pts.push_back({lag * lag_dt, m.mean, m.stderr_});
      msd_csv += fmt(lag * lag_dt) + "," + fmt(m.mean) + "," + fmt(m.stderr_) + "\n";
    }
    art.write("msd.csv", msd_csv);
    const RateFit fit = rate_fit(pts);
    report["regularity_slope"] = fit.slope;
    report["regularity_slope_se"] = fit.slope_se;
    cc.add("time_regularity_exponent", std::abs(fit.slope - reg_kappa) <= reg_tol,
           "slope " + fmt(fit.slope) + " vs kappa " + fmt(reg_kappa) + " +- " +
               fmt(reg_tol));
  }

  if (cfg.value("save_fields", false) && !results.empty()) {
    Trajectory t0;
    t0.config = base;
    t0.config.seed = results[0].seed;
    t0.stream_key = results[0].stream_key;
    for (std::size_t i = 0; i < results[0].snaps.size() && i < base.snapshot_times.size();
         ++i)
      t0.snapshots.emplace_back(base.snapshot_times[i], results[0].snaps[i]);
    save_trajectory((art.dir / "trajectory").string(), t0, spec);
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.write("spec.json", spec.to_json() + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// --------------------------------------------------------------- sweep-rate

int run_sweep_rate(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/", {"kind", "seed", "dim", "modes", "h_grid"},
             {"replicas", "u0", "kappa", "t_final", "dt_base", "weak_bound", "checks",
              "out_dir"});
  const int dim = get_int(cfg, "/", "dim");
  const int modes = get_int(cfg, "/", "modes");
  const std::vector<double> h_grid = cfg.at("h_grid").get<std::vector<double>>();
  if (h_grid.size() < 4) throw ConfigError("/h_grid: need at least 4 points");
  const int replicas = cfg.value("replicas", 0);
  const std::uint64_t seed = resolve_seed(cfg, opts);
  const int threads = resolve_threads(opts);

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json report;

  // exact diagnostics (no Monte Carlo)
  std::string diag_csv = "h,op_norm,hs_norm,a_err\n";
  std::vector<RatePoint> op_pts, hs_pts, a_pts;
  for (double h : h_grid) {
    const CovarianceDiagnostics d = diagonal_covariance(mollified_family(dim, h, modes));
    const double a_err = (d.A - SymMat::identity(dim)).op_norm();
    diag_csv += fmt(h) + "," + fmt(d.op_norm) + "," + fmt(d.hs_norm) + "," +
                fmt(a_err) + "\n";
    op_pts.push_back({h, d.op_norm, 0.0});
    hs_pts.push_back({h, d.hs_norm, 0.0});
    a_pts.push_back({h, a_err, 0.0});
  }
  art.write("diagnostics.csv", diag_csv);
  const RateFit op_fit = rate_fit(op_pts);
  const RateFit hs_fit = rate_fit(hs_pts);
  const RateFit a_fit = rate_fit(a_pts);
  report["op_slope"] = op_fit.slope;
  report["hs_slope"] = hs_fit.slope;
  report["a_err_slope"] = a_fit.slope;

  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {},
             {"op_slope", "hs_slope", "a_err_slope_min", "rate_slope_min", "weak_bound"});
  auto slope_check = [&](const char* name, const RateFit& fit, const json& spec_pair) {
    const double target = spec_pair.at(0).get<double>();
    const double tol = spec_pair.at(1).get<double>();
    cc.add(name, std::abs(fit.slope - target) <= tol,
           "slope " + fmt(fit.slope) + " vs " + fmt(target) + " +- " + fmt(tol));
  };
  if (checks.contains("op_slope")) slope_check("op_norm_slope", op_fit, checks["op_slope"]);
  if (checks.contains("hs_slope")) slope_check("hs_norm_slope", hs_fit, checks["hs_slope"]);
  if (checks.contains("a_err_slope_min"))
    cc.add("a_identity_slope", a_fit.slope >= checks["a_err_slope_min"].get<double>(),
           "slope " + fmt(a_fit.slope) + " vs min " +
               fmt(checks["a_err_slope_min"].get<double>()));

  // Monte Carlo rate of E|v_T|_{H^{-d/2-kappa}} over the h grid
  if (replicas > 0) {
    if (!cfg.contains("u0")) throw ConfigError("/u0: required when replicas > 0");
    const double kappa = cfg.value("kappa", 0.5);
    const double t_final = get_num(cfg, "/", "t_final");
    const double dt_base = cfg.value("dt_base", 1e-3);
    const SpectralField u0 = parse_trig_field(cfg["u0"], dim, modes, "/u0");
    const double s_exp = -0.5 * dim - kappa;

    const EnsembleSummary ens = ensemble_run(
        "sweep-rate", h_grid, replicas, seed, threads,
        [&](std::size_t p, std::size_t, std::uint64_t rep_seed) {
          const double h = h_grid[p];
          const NoiseSpec spec = mollified_family(dim, h, modes);
          SolverConfig c;
          c.dt = dt_base * std::min(1.0, h);
          // land t_final on the dt grid exactly
          const int n = std::max(1, int(std::lround(t_final / c.dt)));
          c.dt = t_final / n;
          c.t_final = t_final;
          c.modes = modes;
          c.seed = rep_seed;
          c.snapshot_times = {t_final};
          const Trajectory traj = simulate_transport(u0, spec, c);
          const SpectralField pu0 =
              apply_heat_multiplier(u0, diagonal_covariance(spec).A, t_final);
          return sobolev_norm(traj.snapshots.back().second - pu0, s_exp);
        });
    art.write("rates.csv", ens.csv());
    art.write("rates_xy.csv", ens.xy_data());
    art.write("rates_summary.json", ens.to_json() + "\n");
    if (ens.fit_valid) report["rate_slope"] = ens.fit.slope;
    if (checks.contains("rate_slope_min")) {
      const double mn = checks["rate_slope_min"].get<double>();
      cc.add("l2_rate_slope", ens.fit_valid && ens.fit.slope >= mn,
             ens.fit_valid ? "slope " + fmt(ens.fit.slope) + " vs min " + fmt(mn)
                           : "fit unavailable");
    }
  }

  // weak pairing bound over the same h grid plus any extra fixed specs
  if (cfg.contains("weak_bound")) {
    const json& wb = cfg["weak_bound"];
    check_keys(wb, "/weak_bound", {"phi", "t", "dt", "replicas"},
               {"u0", "extra_families"});
    const SpectralField phi = parse_trig_field(wb["phi"], dim, modes, "/weak_bound/phi");
    const SpectralField wu0 =
        wb.contains("u0") ? parse_trig_field(wb["u0"], dim, modes, "/weak_bound/u0")
                          : parse_trig_field(cfg.at("u0"), dim, modes, "/u0");
    std::string wb_csv = "point,lhs,lhs_se,bound,pass\n";
    bool all = true;
    std::size_t idx = 0;
    auto run_point = [&](const NoiseSpec& spec, const std::string& name) {
      const WeakBoundResult r = weak_bound_check(
          wu0, phi, spec, wb["t"].get<double>(), wb["dt"].get<double>(),
          wb["replicas"].get<int>(), hash64({seed, 0x7762ULL, idx++}), threads);
      all = all && r.pass;
      wb_csv += name + "," + fmt(r.lhs) + "," + fmt(r.lhs_se) + "," + fmt(r.bound) +
                "," + (r.pass ? "1" : "0") + "\n";
    };
    for (double h : h_grid) run_point(mollified_family(dim, h, modes), "h=" + fmt(h));
    if (wb.contains("extra_families"))
      for (std::size_t i = 0; i < wb["extra_families"].size(); ++i)
        run_point(parse_family(wb["extra_families"][i], dim, modes,
                               "/weak_bound/extra_families/" + std::to_string(i)),
                  "extra_" + std::to_string(i));
    art.write("weak_bound.csv", wb_csv);
    if (checks.value("weak_bound", false))
      cc.add("weak_pairing_bound", all, all ? "all points inside the bound"
                                            : "bound violated at some point");
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// -------------------------------------------------------------- she-compare

int run_she_compare(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/",
             {"kind", "seed", "dim", "modes", "levels", "dt", "t_final", "snap_dt",
              "replicas", "wn_kmax", "tracked", "max_lag"},
             {"checks", "out_dir"});
  const int dim = get_int(cfg, "/", "dim");
  const int modes = get_int(cfg, "/", "modes");
  const double dt = get_num(cfg, "/", "dt");
  const double t_final = get_num(cfg, "/", "t_final");
  const double snap_dt = get_num(cfg, "/", "snap_dt");
  const int replicas = get_int(cfg, "/", "replicas");
  const int wn_kmax = get_int(cfg, "/", "wn_kmax");
  const int max_lag = get_int(cfg, "/", "max_lag");
  const std::uint64_t seed = resolve_seed(cfg, opts);
  const int threads = resolve_threads(opts);

  std::vector<Mode> tracked;
  for (const auto& kj : cfg.at("tracked")) {
    Mode k{0, 0, 0};
    for (int d = 0; d < dim; ++d) k[d] = kj.at(d).get<int>();
    tracked.push_back(k);
  }

  std::vector<double> snap_times;
  for (double t = 0.0; t <= t_final * (1 + 1e-12); t += snap_dt) snap_times.push_back(t);

  auto run_ensemble = [&](const NoiseSpec* spec, std::uint64_t tag) {
    ModeSeriesEnsemble ens;
    ens.dim = dim;
    ens.modes = tracked;
    std::vector<std::vector<std::vector<cplx>>> rows =
        run_replicas<std::vector<std::vector<cplx>>>(
            replicas, threads, [&](std::size_t r) {
              SolverConfig c;
              c.dt = dt;
              c.t_final = t_final;
              c.modes = modes;
              c.seed = hash64({seed, tag, r});
              c.snapshot_times = snap_times;
              const SpectralField u0 =
                  build_initial(InitialSpec{true, wn_kmax, {}}, dim, modes,
                                hash64({seed, tag, r, 0x7530ULL}));
              const Trajectory traj =
                  spec ? simulate_transport(u0, *spec, c) : simulate_she(u0, c);
              std::vector<std::vector<cplx>> series(tracked.size());
              for (std::size_t m = 0; m < tracked.size(); ++m)
                for (const auto& [t, u] : traj.snapshots)
                  series[m].push_back(u.coeff(tracked[m]));
              return series;
            });
    ens.dt_snap = snap_dt;
    ens.data = std::move(rows);
    return ens;
  };

  const ModeSeriesEnsemble she = run_ensemble(nullptr, 0x736865ULL);

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json report;
  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {},
             {"stationarity_sigma", "nonincreasing", "band_factor", "reference_mode"});

  Mode ref{1, 0, 0};
  if (checks.contains("reference_mode"))
    for (int d = 0; d < dim; ++d) ref[d] = checks["reference_mode"].at(d).get<int>();

  std::vector<double> ref_disc;
  double ref_band = 0.0;
  std::string var_csv = "level,k1,k2,variance,stderr\n";
  std::string ac_csv = "level,k1,k2,lag_time,rho,target\n";

  for (std::size_t lv = 0; lv < cfg.at("levels").size(); ++lv) {
    const NoiseSpec spec = parse_family(cfg["levels"][lv], dim, modes,
                                        "/levels/" + std::to_string(lv));
    const ModeSeriesEnsemble trans = run_ensemble(&spec, hash64({0x7472ULL, lv}));
    const LawCompareReport rep = she_law_compare(trans, she, max_lag);

    for (std::size_t m = 0; m < tracked.size(); ++m) {
      // stationarity is probed at the final time; replica spread gives the se
      std::vector<double> per_rep;
      for (const auto& row : trans.data) per_rep.push_back(std::norm(row[m].back()));
      const MomentEstimate est = mean_stderr(per_rep);
      var_csv += std::to_string(lv) + "," + std::to_string(tracked[m][0]) + "," +
                 std::to_string(tracked[m][1]) + "," + fmt(est.mean) + "," +
                 fmt(est.stderr_) + "\n";
      if (checks.contains("stationarity_sigma")) {
        const double ns = checks["stationarity_sigma"].get<double>();
        const bool ok = std::abs(est.mean - 1.0) <= ns * est.stderr_;
        cc.add("stationary_variance_l" + std::to_string(lv) + "_k" +
                   std::to_string(tracked[m][0]) + std::to_string(tracked[m][1]),
               ok, "var " + fmt(est.mean) + " +- " + fmt(est.stderr_));
      }
    }

    // autocorrelation curves for the reference mode
    for (std::size_t m = 0; m < tracked.size(); ++m) {
      const double lam = laplacian_eig(tracked[m]);
      double c0 = 0.0;
      std::size_t n0 = 0;
      for (const auto& row : trans.data)
        for (const cplx& z : row[m]) {
          c0 += std::norm(z);
          ++n0;
        }
      c0 /= double(n0);
      for (int l = 1; l <= max_lag; ++l) {
        double cl = 0.0;
        std::size_t nl = 0;
        for (const auto& row : trans.data)
          for (std::size_t j = 0; j + l < row[m].size(); ++j) {
            cl += (row[m][j + l] * std::conj(row[m][j])).real();
            ++nl;
          }
        ac_csv += std::to_string(lv) + "," + std::to_string(tracked[m][0]) + "," +
                  std::to_string(tracked[m][1]) + "," + fmt(l * snap_dt) + "," +
                  fmt(cl / nl / c0) + "," + fmt(std::exp(-0.5 * lam * l * snap_dt)) +
                  "\n";
      }
    }

    const auto& pm = rep.mode(ref);
    ref_disc.push_back(pm.disc_a);
    ref_band = pm.disc_b;  // SHE self-comparison noise, common across levels
    report["level_" + std::to_string(lv)] = {{"disc_transport", pm.disc_a},
                                             {"disc_she", pm.disc_b}};
  }
  art.write("variance.csv", var_csv);
  art.write("autocorr.csv", ac_csv);

  if (checks.value("nonincreasing", false)) {
    bool mono = true;
    for (std::size_t i = 1; i < ref_disc.size(); ++i)
      mono = mono && ref_disc[i] <= ref_disc[i - 1] + ref_band;
    std::string detail = "disc:";
    for (double d : ref_disc) detail += " " + fmt(d);
    detail += " (band " + fmt(ref_band) + ")";
    cc.add("autocorr_discrepancy_nonincreasing", mono, detail);
  }
  if (checks.contains("band_factor")) {
    const double bf = checks["band_factor"].get<double>();
    const bool ok = !ref_disc.empty() && ref_disc.back() <= bf * ref_band;
    cc.add("final_level_within_band", ok,
           "final disc " + fmt(ref_disc.empty() ? 0.0 : ref_disc.back()) + " vs " +
               fmt(bf) + " x band " + fmt(ref_band));
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// --------------------------------------------------------------- flow-check

int run_flow_check(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/",
             {"kind", "seed", "dim", "modes", "family", "u0", "phi", "dt", "t_final",
              "particles_per_axis", "seeds"},
             {"checks", "out_dir"});
  const int dim = get_int(cfg, "/", "dim");
  const int modes = get_int(cfg, "/", "modes");
  const double dt = get_num(cfg, "/", "dt");
  const double t_final = get_num(cfg, "/", "t_final");
  const int per_axis = get_int(cfg, "/", "particles_per_axis");
  const int seeds = get_int(cfg, "/", "seeds");
  const std::uint64_t seed = resolve_seed(cfg, opts);
  const int threads = resolve_threads(opts);
  const NoiseSpec spec = parse_family(cfg["family"], dim, modes, "/family");
  const SpectralField u0 = parse_trig_field(cfg["u0"], dim, modes, "/u0");
  const SpectralField phi = parse_trig_field(cfg["phi"], dim, modes, "/phi");
  const TrigPoly pu = TrigPoly::from_field(u0);
  const TrigPoly pphi = TrigPoly::from_field(phi);

  struct SeedResult {
    double field_pair, particle_pair;
    UniformityReport uni;
  };
  std::vector<SeedResult> results = run_replicas<SeedResult>(
      seeds, threads, [&](std::size_t s) {
        SolverConfig c;
        c.dt = dt;
        c.t_final = t_final;
        c.modes = modes;
        c.seed = hash64({seed, 0x666c6fULL, s});  // "flo"
        c.snapshot_times = {t_final};
        RngStream crng(hash64({c.seed, 0xc1ULL}));
        ParticleCloud cloud = ParticleCloud::stratified(dim, per_axis, crng);
        const std::vector<double> u0v = eval_at_points(pu, cloud.pos);
        const Trajectory traj = simulate_transport(
            u0, spec, c,
            [&](int, const NoiseIncrement& inc) { heun_flow_step(cloud, inc); });
        SeedResult out;
        out.field_pair = field_inner(traj.snapshots.back().second, phi);
        out.particle_pair = weak_pairing(u0v, cloud, pphi);
        out.uni = uniformity_test(cloud);
        return out;
      });

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {}, {"pairing_rel_tol", "uniformity_rate_min"});

  std::string csv = "seed_index,field_pairing,particle_pairing,rel_diff\n";
  double worst = 0.0;
  int uni_total = 0, uni_passed = 0;
  for (int s = 0; s < seeds; ++s) {
    const double rel = std::abs(results[s].field_pair - results[s].particle_pair) /
                       std::abs(results[s].field_pair);
    worst = std::max(worst, rel);
    csv += std::to_string(s) + "," + fmt(results[s].field_pair) + "," +
           fmt(results[s].particle_pair) + "," + fmt(rel) + "\n";
    for (const auto& m : results[s].uni.modes) {
      ++uni_total;
      uni_passed += m.pass ? 1 : 0;
    }
  }
  art.write("pairings.csv", csv);
  art.write("uniformity.json", results.front().uni.to_json() + "\n");

  json report;
  report["worst_rel_diff"] = worst;
  report["uniformity_pass_rate"] = double(uni_passed) / uni_total;

  if (checks.contains("pairing_rel_tol")) {
    const double tol = checks["pairing_rel_tol"].get<double>();
    cc.add("cross_oracle_pairing", worst <= tol,
           "worst rel diff " + fmt(worst) + " vs " + fmt(tol));
  }
  if (checks.contains("uniformity_rate_min")) {
    const double mn = checks["uniformity_rate_min"].get<double>();
    const double rate = double(uni_passed) / uni_total;
    cc.add("measure_preservation", rate >= mn,
           "mode-test pass rate " + fmt(rate) + " vs min " + fmt(mn));
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// --------------------------------------------------------------- chaos-pair

int run_chaos_pair(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/", {"kind", "seed", "dim", "modes", "phi", "samples", "h_grid"},
             {"checks", "out_dir"});
  const int dim = get_int(cfg, "/", "dim");
  const int modes = get_int(cfg, "/", "modes");
  const int samples = get_int(cfg, "/", "samples");
  const std::vector<double> h_grid = cfg.at("h_grid").get<std::vector<double>>();
  const std::uint64_t seed = resolve_seed(cfg, opts);
  const int threads = resolve_threads(opts);
  const SpectralField phi = parse_trig_field(cfg["phi"], dim, modes, "/phi");

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {}, {"mean_sigma", "var_factor", "var_slope"});

  std::string csv = "h,mean,mean_se,target,var,var_se,hs_sq\n";
  std::vector<RatePoint> var_pts;
  bool mean_ok = true, var_ok = true;
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    const NoiseSpec spec = mollified_family(dim, h_grid[i], modes);
    const ChaosPairingResult r =
        chaos_pairing(spec, phi, samples, hash64({seed, i}), threads);
    csv += fmt(h_grid[i]) + "," + fmt(r.estimate_mean) + "," + fmt(r.mean_se) + "," +
           fmt(r.target) + "," + fmt(r.empirical_var) + "," + fmt(r.var_se) + "," +
           fmt(r.hs_norm_sq) + "\n";
    var_pts.push_back({h_grid[i], r.empirical_var, r.var_se});
    if (checks.contains("mean_sigma"))
      mean_ok = mean_ok && std::abs(r.estimate_mean - r.target) <=
                               checks["mean_sigma"].get<double>() * r.mean_se;
    if (checks.contains("var_factor"))
      var_ok = var_ok && r.empirical_var <=
                             2.0 * r.hs_norm_sq * checks["var_factor"].get<double>() +
                                 3.0 * r.var_se;
  }
  art.write("chaos.csv", csv);

  json report;
  if (checks.contains("mean_sigma"))
    cc.add("chaos_mean_matches_generator", mean_ok,
           mean_ok ? "all means within band" : "mean outside band at some h");
  if (checks.contains("var_factor"))
    cc.add("chaos_variance_hs_bound", var_ok,
           var_ok ? "all variances inside 2|K|_HS^2 bound"
                  : "variance bound violated at some h");
  if (checks.contains("var_slope") && var_pts.size() >= 4) {
    const RateFit fit = rate_fit(var_pts);
    report["var_slope"] = fit.slope;
    const double target = checks["var_slope"].at(0).get<double>();
    const double tol = checks["var_slope"].at(1).get<double>();
    cc.add("chaos_variance_slope", std::abs(fit.slope - target) <= tol,
           "slope " + fmt(fit.slope) + " vs " + fmt(target) + " +- " + fmt(tol));
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// ------------------------------------------------------------- sphere-check

int run_sphere_check(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/", {"kind", "seed", "l_max", "theta", "dt", "t_final", "particles"},
             {"normalize_c", "samples_a", "checks", "out_dir"});
  const int l_max = get_int(cfg, "/", "l_max");
  const double dt = get_num(cfg, "/", "dt");
  const double t_final = get_num(cfg, "/", "t_final");
  const int particles = get_int(cfg, "/", "particles");
  const int samples_a = cfg.value("samples_a", 30000);
  const std::uint64_t seed = resolve_seed(cfg, opts);

  SphereNoiseSpec spec;
  spec.l_max = l_max;
  spec.theta.assign(l_max + 1, 0.0);
  const auto& tj = cfg.at("theta");
  if (!tj.is_array() || int(tj.size()) != l_max)
    throw ConfigError("/theta: expected an array of length l_max");
  for (int l = 1; l <= l_max; ++l) spec.theta[l] = tj[l - 1].get<double>();
  if (cfg.value("normalize_c", true)) spec.normalize_unit_c();
  const double c = sphere_diagonal_covariance(spec);

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {},
             {"c_unit", "empirical_a_sigma", "uniformity_rate_min", "uniformity_lmax"});
  json report;
  report["c"] = c;
  report["l2_mass"] = spec.l2_mass();

  if (checks.value("c_unit", false))
    cc.add("sphere_c_normalization",
           std::abs(spec.l2_mass() - 8.0 * M_PI) < 1e-12 * 8.0 * M_PI,
           "sum theta_l^2 (2l+1) = " + fmt(spec.l2_mass()) + " vs 8 pi");

  // empirical A at the north pole and two random points
  std::string acsv = "point,entry,empirical,stderr,target\n";
  bool a_ok = true;
  {
    RngStream prng(hash64({seed, 0x7074ULL}));
    std::vector<Vec3> pts = sphere_uniform_points(2, prng);
    pts.insert(pts.begin(), Vec3{0.0, 0.0, 1.0});
    const double ns = checks.value("empirical_a_sigma", 3.0);
    RngStream rng(hash64({seed, 0x6173ULL}));
    for (std::size_t p = 0; p < pts.size(); ++p) {
      // tangent frame
      Vec3 t1 = std::abs(pts[p][2]) < 0.9 ? Vec3{-pts[p][1], pts[p][0], 0.0}
                                          : Vec3{1.0, 0.0, 0.0};
      double dp = t1[0] * pts[p][0] + t1[1] * pts[p][1] + t1[2] * pts[p][2];
      for (int i = 0; i < 3; ++i) t1[i] -= dp * pts[p][i];
      double nn = std::sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]);
      for (auto& v : t1) v /= nn;
      const Vec3 t2{pts[p][1] * t1[2] - pts[p][2] * t1[1],
                    pts[p][2] * t1[0] - pts[p][0] * t1[2],
                    pts[p][0] * t1[1] - pts[p][1] * t1[0]};
      std::array<std::array<double, 2>, 2> sum{}, sum2{};
      for (int s = 0; s < samples_a; ++s) {
        const SphereIncrement inc = sphere_sample_increment(spec, 1.0, rng);
        const Vec3 w = inc.evaluate(pts[p]);
        const double v[2] = {w[0] * t1[0] + w[1] * t1[1] + w[2] * t1[2],
                             w[0] * t2[0] + w[1] * t2[1] + w[2] * t2[2]};
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            sum[i][j] += v[i] * v[j];
            sum2[i][j] += v[i] * v[j] * v[i] * v[j];
          }
      }
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double m = sum[i][j] / samples_a;
          const double se =
              std::sqrt(std::max(0.0, sum2[i][j] / samples_a - m * m) / samples_a);
          const double target = i == j ? c : 0.0;
          a_ok = a_ok && std::abs(m - target) <= ns * se + 1e-12;
          acsv += std::to_string(p) + "," + std::to_string(i) + std::to_string(j) +
                  "," + fmt(m) + "," + fmt(se) + "," + fmt(target) + "\n";
        }
    }
  }
  art.write("empirical_a.csv", acsv);
  if (checks.contains("empirical_a_sigma"))
    cc.add("sphere_empirical_A", a_ok,
           a_ok ? "A = c I at all test points" : "A deviates at some point");

  // flow to t_final, then spherical-harmonic uniformity moments
  {
    RngStream rng(hash64({seed, 0x756eULL}));
    std::vector<Vec3> pts = sphere_uniform_points(particles, rng);
    const int steps = int(std::lround(t_final / dt));
    for (int s = 0; s < steps; ++s)
      sphere_flow_step(pts, sphere_sample_increment(spec, dt, rng));
    const SphereUniformityReport rep =
        sphere_uniformity_test(pts, checks.value("uniformity_lmax", 3));
    art.write("uniformity.json", rep.to_json() + "\n");
    int total = 0, passed = 0;
    for (const auto& st : rep.stats) {
      ++total;
      passed += st.pass ? 1 : 0;
    }
    report["uniformity_pass_rate"] = double(passed) / total;
    if (checks.contains("uniformity_rate_min")) {
      const double mn = checks["uniformity_rate_min"].get<double>();
      cc.add("sphere_uniformity", double(passed) / total >= mn,
             "pass rate " + fmt(double(passed) / total) + " vs min " + fmt(mn));
    }
  }

  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

// ----------------------------------------------------------- leray-diagonal

int run_leray(const json& cfg, const RunOptions& opts) {
  check_keys(cfg, "/", {"kind", "seed", "dims", "h_grid", "modes"},
             {"checks", "out_dir"});
  const std::vector<int> dims = cfg.at("dims").get<std::vector<int>>();
  const std::vector<double> h_grid = cfg.at("h_grid").get<std::vector<double>>();
  const int modes = get_int(cfg, "/", "modes");
  const std::uint64_t seed = resolve_seed(cfg, opts);

  ArtifactWriter art(opts.out_dir);
  CheckCollector cc{opts.check};
  json checks = cfg.value("checks", json::object());
  check_keys(checks, "/checks", {}, {"slope_tol"});
  json report;

  std::string csv = "d,h,err,leading\n";
  for (int d : dims) {
    std::vector<RatePoint> pts;
    double cmax = 0.0;
    for (double h : h_grid) {
      const int kcut = modes / 3;
      // tail check for the lattice sum
      const double edge = std::exp(-4.0 * M_PI * M_PI * h * h * kcut * kcut) *
                          std::pow(2.0 * kcut + 1.0, d);
      if (edge > 1e-12)
        throw ConfigError("/h_grid: resolution tail too large at h = " + fmt(h));
      // a_{h^2} = I + sum_{k != 0} exp(-4 pi^2 |k|^2 h^2) P_k, exact sum
      SymMat a = SymMat::identity(d);
      const int k3 = d == 3 ? kcut : 0;
      for (int k1 = -kcut; k1 <= kcut; ++k1)
        for (int k2 = -kcut; k2 <= kcut; ++k2)
          for (int kz = -k3; kz <= k3; ++kz) {
            if (k1 == 0 && k2 == 0 && kz == 0) continue;
            const double k2n = double(k1) * k1 + double(k2) * k2 + double(kz) * kz;
            a.add_perp_projector({double(k1), double(k2), double(kz)},
                                 std::exp(-4.0 * M_PI * M_PI * k2n * h * h));
          }
      const double leading =
          std::pow(4.0 * M_PI * h * h, -d / 2.0) * (d - 1.0) / d;
      const double err = (a - SymMat::identity(d, leading)).op_norm();
      csv += std::to_string(d) + "," + fmt(h) + "," + fmt(err) + "," + fmt(leading) +
             "\n";
      pts.push_back({h, err, 0.0});
      cmax = std::max(cmax, err / (std::pow(h, -double(d) + 2.0) + 1.0));
    }
    const RateFit fit = rate_fit(pts);
    report["d" + std::to_string(d)] = {{"slope", fit.slope}, {"fitted_C", cmax}};
    if (checks.contains("slope_tol")) {
      const double tol = checks["slope_tol"].get<double>();
      const double min_slope = -double(d) + 2.0 - tol;
      cc.add("leray_diagonal_d" + std::to_string(d),
             fit.slope >= min_slope && std::isfinite(cmax),
             "slope " + fmt(fit.slope) + " vs min " + fmt(min_slope) + ", C = " +
                 fmt(cmax));
    }
  }
  art.write("leray.csv", csv);
  report["checks"] = cc.entries;
  art.write("report.json", report.dump(2) + "\n");
  art.finalize(cfg, seed);
  return cc.exit_code();
}

}  // namespace

int run_config(const json& config, const RunOptions& opts) {
  if (!config.is_object()) throw ConfigError("/: config must be a JSON object");
  if (!config.contains("kind")) throw ConfigError("/: missing required key 'kind'");
  const std::string kind = config["kind"].get<std::string>();
  if (kind == "simulate") return run_simulate(config, opts);
  if (kind == "sweep-rate") return run_sweep_rate(config, opts);
  if (kind == "she-compare") return run_she_compare(config, opts);
  if (kind == "flow-check") return run_flow_check(config, opts);
  if (kind == "chaos-pair") return run_chaos_pair(config, opts);
  if (kind == "sphere-check") return run_sphere_check(config, opts);
  if (kind == "leray-diagonal") return run_leray(config, opts);
  throw ConfigError("/kind: unknown experiment kind '" + kind + "'");
}

}  // namespace storm::cli
