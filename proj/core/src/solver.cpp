#include "storm/solver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "storm/version.hpp"

namespace storm {

namespace {

std::vector<double> heat_factors(int dim, int modes, const SymMat& A, double t) {
  SpectralField probe(dim, modes);  // for index decoding only
  std::vector<double> f(probe.size());
  const double c = 4.0 * M_PI * M_PI * t * 0.5;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Mode k = probe.mode_of(i);
    const Vec3 kv{double(k[0]), double(k[1]), double(k[2])};
    f[i] = std::exp(-c * A.quad(kv));
  }
  return f;
}

int step_count(const SolverConfig& cfg) {
  const double n = cfg.t_final / cfg.dt;
  const long r = std::lround(n);
  if (r < 1 || std::abs(n - double(r)) > 1e-9 * std::max(1.0, n))
    throw std::invalid_argument("SolverConfig: t_final must be a multiple of dt");
  return static_cast<int>(r);
}

// snapshot schedule as step indices (0 = initial state)
std::set<int> snapshot_steps(const SolverConfig& cfg) {
  std::set<int> s;
  for (double t : cfg.snapshot_times) {
    const double n = t / cfg.dt;
    const long r = std::lround(n);
    if (t < -1e-12 || t > cfg.t_final * (1.0 + 1e-12) ||
        std::abs(n - double(r)) > 1e-9 * std::max(1.0, std::abs(n)))
      throw std::invalid_argument("SolverConfig: snapshot time off the dt grid");
    s.insert(static_cast<int>(r));
  }
  return s;
}

}  // namespace

void SolverConfig::validate() const {
  if (dt <= 0.0 || dt > t_final)
    throw std::invalid_argument("SolverConfig: need 0 < dt <= t_final");
  SolverConfig c = *this;
  step_count(c);
  snapshot_steps(c);
}

SpectralField heat_semigroup_apply(const SpectralField& u, const SymMat& A, double t) {
  if (A.dim != u.dim() || !A.is_spd())
    throw std::invalid_argument("heat_semigroup_apply: A must be SPD of matching dim");
  return apply_heat_multiplier(u, A, t);
}

SpectralField apply_heat_multiplier(const SpectralField& u, const SymMat& A, double t) {
  if (t < 0.0) throw std::invalid_argument("heat multiplier: t must be >= 0");
  if (t == 0.0) return u;
  SpectralField out = u;
  const auto f = heat_factors(u.dim(), u.modes(), A, t);
  for (std::size_t i = 0; i < out.size(); ++i) out.raw(i) *= f[i];
  return out;
}

SpectralField spde_step(const SpectralField& u, const NoiseSpec& spec, double dt,
                        RngStream& rng) {
  if (spec.modes != u.modes() || spec.dim != u.dim())
    throw std::invalid_argument("spde_step: spec/field resolution mismatch");
  const NoiseIncrement dw = sample_increment(spec, dt, rng);
  const SpectralField adv = transport_term(u, dw.as_field());
  // A from the spec is PSD by construction (zero for an empty spec)
  const SymMat A = diagonal_covariance(spec).A;
  SpectralField next = apply_heat_multiplier(u + adv, A, dt);
  if (!next.all_finite()) throw std::runtime_error("spde_step: non-finite state");
  return next;
}

Trajectory simulate_transport(const SpectralField& u0, const NoiseSpec& spec,
                              const SolverConfig& config, const StepHook& hook) {
  config.validate();
  if (config.modes != 0 && config.modes != u0.modes())
    throw std::invalid_argument("simulate_transport: config.modes mismatch");
  if (spec.modes != u0.modes() || spec.dim != u0.dim())
    throw std::invalid_argument("simulate_transport: spec/field resolution mismatch");

  const int n = step_count(config);
  const auto snaps = snapshot_steps(config);
  const SymMat A = diagonal_covariance(spec).A;
  const auto decay = heat_factors(u0.dim(), u0.modes(), A, config.dt);

  Trajectory traj;
  traj.config = config;
  traj.stream_key = hash64({config.seed, 0x7472616e73ULL});  // "trans"
  RngStream rng(traj.stream_key);

  SpectralField u = u0;
  u.zero_nyquist();
  u.dealias();
  if (snaps.count(0)) traj.snapshots.emplace_back(0.0, u);

  for (int s = 1; s <= n; ++s) {
    const NoiseIncrement dw = sample_increment(spec, config.dt, rng);
    if (hook) hook(s - 1, dw);
    const SpectralField adv = transport_term(u, dw.as_field());
    u += adv;
    for (std::size_t i = 0; i < u.size(); ++i) u.raw(i) *= decay[i];
    if (!u.all_finite())
      throw std::runtime_error("simulate_transport: non-finite state at step " +
                               std::to_string(s));
    if (snaps.count(s)) traj.snapshots.emplace_back(s * config.dt, u);
  }
  return traj;
}

Trajectory simulate_she(const SpectralField& u0, const SolverConfig& config,
                        double noise_scale) {
  config.validate();
  const int n = step_count(config);
  const auto snaps = snapshot_steps(config);
  const int M = u0.modes();
  const int kcut = M / 3;
  const int k3max = u0.dim() == 3 ? kcut : 0;

  Trajectory traj;
  traj.config = config;
  traj.stream_key = hash64({config.seed, 0x736865ULL});  // "she"
  RngStream rng(traj.stream_key);

  SpectralField u = u0;
  u.zero_nyquist();
  u.dealias();
  if (snaps.count(0)) traj.snapshots.emplace_back(0.0, u);

  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int s = 1; s <= n; ++s) {
    for (int k1 = -kcut; k1 <= kcut; ++k1)
      for (int k2 = -kcut; k2 <= kcut; ++k2)
        for (int k3 = -k3max; k3 <= k3max; ++k3) {
          const Mode k{k1, k2, k3};
          if (!is_positive_half(k)) continue;
          const double lam = laplacian_eig(k);
          const double decay = std::exp(-0.5 * lam * config.dt);
          const double vol = std::sqrt(1.0 - decay * decay);  // 1 - e^{-lam dt}
          const cplx eta = cplx{rng.gaussian(), rng.gaussian()} * inv_sqrt2;
          u.set_coeff(k, decay * u.coeff(k) + noise_scale * vol * eta);
        }
    if (snaps.count(s)) traj.snapshots.emplace_back(s * config.dt, u);
  }
  return traj;
}

double deterministic_error_w(const SpectralField& u0, const SymMat& A, double t,
                             double kappa) {
  if (!A.is_spd()) throw std::invalid_argument("deterministic_error_w: A must be SPD");
  double acc = 0.0;
  const double c = 4.0 * M_PI * M_PI * t * 0.5;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const double n = std::norm(u0.raw(i));
    if (n == 0.0) continue;
    const Mode k = u0.mode_of(i);
    const Vec3 kv{double(k[0]), double(k[1]), double(k[2])};
    const double diff = std::exp(-c * A.quad(kv)) - std::exp(-c * mode_norm2(k));
    acc += std::pow(1.0 + laplacian_eig(k), -kappa) * diff * diff * n;
  }
  return std::sqrt(acc);
}

void save_trajectory(const std::string& dir, const Trajectory& traj,
                     const NoiseSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "fields");

  nlohmann::json cfg;
  cfg["dt"] = traj.config.dt;
  cfg["t_final"] = traj.config.t_final;
  cfg["scheme"] = traj.config.scheme;
  cfg["modes"] = traj.config.modes;
  cfg["seed"] = traj.config.seed;
  cfg["snapshot_times"] = traj.config.snapshot_times;
  std::ofstream(fs::path(dir) / "config.json") << cfg.dump(2) << "\n";

  nlohmann::json man;
  man["version"] = kVersion;
  man["seed"] = traj.config.seed;
  man["stream_key"] = traj.stream_key;
  const std::string spec_json = spec.to_json();
  man["spec_hash"] = hash64({std::hash<std::string>{}(spec_json)});
  auto& files = man["snapshots"] = nlohmann::json::array();
  char name[32];
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    std::snprintf(name, sizeof(name), "snap_%04zu.stlf", i);
    save_field((fs::path(dir) / "fields" / name).string(), traj.snapshots[i].second);
    files.push_back({{"t", traj.snapshots[i].first}, {"file", std::string("fields/") + name}});
  }
  std::ofstream(fs::path(dir) / "manifest.json") << man.dump(2) << "\n";
  std::ofstream(fs::path(dir) / "spec.json") << spec_json << "\n";
}

Trajectory load_trajectory(const std::string& dir) {
  namespace fs = std::filesystem;
  Trajectory traj;
  {
    std::ifstream f(fs::path(dir) / "config.json");
    if (!f) throw std::runtime_error("load_trajectory: missing config.json");
    nlohmann::json cfg = nlohmann::json::parse(f);
    traj.config.dt = cfg.at("dt");
    traj.config.t_final = cfg.at("t_final");
    traj.config.scheme = cfg.at("scheme");
    traj.config.modes = cfg.at("modes");
    traj.config.seed = cfg.at("seed");
    traj.config.snapshot_times = cfg.at("snapshot_times").get<std::vector<double>>();
  }
  std::ifstream f(fs::path(dir) / "manifest.json");
  if (!f) throw std::runtime_error("load_trajectory: missing manifest.json");
  nlohmann::json man = nlohmann::json::parse(f);
  traj.stream_key = man.at("stream_key");
  for (const auto& e : man.at("snapshots"))
    traj.snapshots.emplace_back(
        e.at("t").get<double>(),
        load_field((fs::path(dir) / e.at("file").get<std::string>()).string()));
  return traj;
}

}  // namespace storm
