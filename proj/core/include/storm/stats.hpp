#ifndef STORM_STATS_HPP
#define STORM_STATS_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "storm/field.hpp"
#include "storm/noise.hpp"
#include "storm/solver.hpp"

namespace storm {

struct underpowered_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MomentEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};
MomentEstimate mean_stderr(const std::vector<double>& samples);

// Parallel map over replica indices with slot-stable results: the output is
// independent of how work lands on threads. The first failure is rethrown.
template <typename T, typename F>
std::vector<T> run_replicas(std::size_t n, int threads, F&& fn) {
  std::vector<T> out(n);
  if (threads < 1) threads = 1;
  threads = int(std::min<std::size_t>(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

// ---- log-log rate fits ----

struct RatePoint {
  double param = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double ci95_half = 0.0;
  int points_used = 0;
};

// Weighted least squares on log-log with inverse-variance weights
// (delta method: sigma_log = stderr / estimate). Throws underpowered_error
// when any estimate is below twice its standard error.
RateFit rate_fit(const std::vector<RatePoint>& pts);

// ---- ensemble orchestration ----

struct EnsemblePoint {
  double param = 0.0;
  MomentEstimate estimate;
};

struct EnsembleSummary {
  std::string experiment_id;
  std::uint64_t master_seed = 0;
  int replicas = 0;
  std::vector<EnsemblePoint> points;
  RateFit fit;
  bool fit_valid = false;
  double wall_seconds = 0.0;

  std::string to_json() const;
  std::string csv() const;      // param,estimate,stderr,replicas
  std::string xy_data() const;  // x,y,yerr (plot-ready)
};

using ReplicaSampler =
    std::function<double(std::size_t param_idx, std::size_t replica_idx,
                         std::uint64_t replica_seed)>;

// Runs replicas x parameter points with seeds derived as
// hash64(master_seed, experiment id, param index, replica index).
// Deterministic given the master seed regardless of thread count; any
// replica failure aborts with that replica's seed in the message.
// Points whose stderr exceeds half the estimate are dropped from the fit;
// the fit requires at least 4 surviving points.
EnsembleSummary ensemble_run(const std::string& experiment_id,
                             const std::vector<double>& params, int replicas,
                             std::uint64_t master_seed, int threads,
                             const ReplicaSampler& sampler, bool fit_rates = true);

// ---- second-chaos generator test ----

struct ChaosPairingResult {
  double estimate_mean = 0.0;  // mean of (eta, K eta) over samples
  double mean_se = 0.0;
  double target = 0.0;         // (grad phi, A grad phi), exact
  double empirical_var = 0.0;
  double var_se = 0.0;
  double hs_norm_sq = 0.0;     // |K|_HS^2, exact; variance bound is 2x this
  int samples = 0;
};

// (grad phi, A grad phi) = sum_p 4 pi^2 (p.Ap) |phi_p|^2
double grad_quadratic(const SymMat& A, const SpectralField& phi);

// exact Hilbert-Schmidt norm squared of K(x,y) = grad phi(x).Q(x,y) grad phi(y)
double chaos_hs_norm_sq(const NoiseSpec& spec, const SpectralField& phi);

// Samples (eta, K eta) on truncated white noise eta (|k|_inf <= M/3).
// Throws when the kernel tail above the truncation exceeds 1e-8 of |K|_HS.
ChaosPairingResult chaos_pairing(const NoiseSpec& spec, const SpectralField& phi,
                                 int samples, std::uint64_t master_seed, int threads);

// ---- SHE law comparison ----

struct ModeSeriesEnsemble {
  int dim = 2;
  double dt_snap = 0.0;
  std::vector<Mode> modes;
  std::vector<std::vector<std::vector<cplx>>> data;  // [replica][mode][time]

  void add_trajectory(const Trajectory& traj);
};

struct LawCompareReport {
  struct PerMode {
    Mode k;
    double var_a = 0.0, var_b = 0.0;  // stationary variance (target 1)
    double disc_a = 0.0, disc_b = 0.0;  // max |rho(lag) - exp(-lam lag/2)|
  };
  std::vector<PerMode> modes;
  int lags = 0;
  std::string to_json() const;
  const PerMode& mode(const Mode& k) const;
};

// Compares stationary variance and lag autocorrelation of both ensembles
// against the exact OU law of the limiting stochastic heat equation.
LawCompareReport she_law_compare(const ModeSeriesEnsemble& a,
                                 const ModeSeriesEnsemble& b, int max_lag);

// ---- weak bound ----

struct WeakBoundResult {
  double lhs = 0.0;      // empirical E[(v_t, phi)^2]
  double lhs_se = 0.0;
  double bound = 0.0;    // C(A)/2 |Q|_op |u0|_inf^2 |phi|_L2^2
  bool pass = false;
  double margin = 0.0;   // bound / lhs (inf when lhs = 0)
};

WeakBoundResult weak_bound_check(const SpectralField& u0, const SpectralField& phi,
                                 const NoiseSpec& spec, double t, double dt,
                                 int replicas, std::uint64_t master_seed, int threads);

}  // namespace storm

#endif
