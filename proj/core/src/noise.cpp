#include "storm/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"

namespace storm {

namespace {

double norm3(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

// canonical half-lattice enumeration: k1 outer, k3 inner, |k_i| <= kbound
template <typename F>
void for_each_half_mode(int dim, int kbound, F&& f) {
  const int k3b = dim == 3 ? kbound : 0;
  for (int k1 = -kbound; k1 <= kbound; ++k1)
    for (int k2 = -kbound; k2 <= kbound; ++k2)
      for (int k3 = -k3b; k3 <= k3b; ++k3) {
        const Mode k{k1, k2, k3};
        if (is_positive_half(k)) f(k);
      }
}

double gaussian_axis_sum(double a, int kbound) {
  // sum_{|n| <= kbound} exp(-a n^2); kbound < 0 means the full sum over Z
  double s = 1.0;
  for (int n = 1;; ++n) {
    const double term = std::exp(-a * double(n) * double(n));
    if (kbound >= 0 && n > kbound) break;
    if (term < 1e-320) break;
    s += 2.0 * term;
  }
  return s;
}

}  // namespace

double NoiseSpec::max_theta() const {
  double m = include_harmonic ? theta0 : 0.0;
  for (const auto& e : half_modes) m = std::max(m, e.theta);
  return m;
}

std::vector<Vec3> perp_basis(const Mode& k, int dim) {
  std::vector<Vec3> basis;
  const double kn = std::sqrt(mode_norm2(k));
  Vec3 khat{k[0] / kn, k[1] / kn, k[2] / kn};
  const int last = dim - 1;

  bool along_last = true;
  for (int i = 0; i < dim; ++i)
    if (i != last && k[i] != 0) along_last = false;

  for (int a = 0; a < dim - 1; ++a) {
    Vec3 e{0.0, 0.0, 0.0};
    if (along_last) {
      e[a] = 1.0;  // identity frame when k is parallel to the last axis
    } else {
      // Householder reflection H = I - 2 w w^T / |w|^2 with w = e_last - khat
      Vec3 w{-khat[0], -khat[1], -khat[2]};
      w[last] += 1.0;
      double w2 = 0.0;
      for (int i = 0; i < dim; ++i) w2 += w[i] * w[i];
      for (int i = 0; i < dim; ++i)
        e[i] = (i == a ? 1.0 : 0.0) - 2.0 * w[i] * w[a] / w2;
    }
    // re-orthogonalize against khat so the spectral divergence vanishes to
    // far below the 1e-12 assertion level
    double proj = 0.0;
    for (int i = 0; i < dim; ++i) proj += e[i] * khat[i];
    for (int i = 0; i < dim; ++i) e[i] -= proj * khat[i];
    const double n = norm3(e);
    for (int i = 0; i < dim; ++i) e[i] /= n;
    basis.push_back(e);
  }
  return basis;
}

NoiseSpec cutoff_family(int dim, int n_cut, bool normalize, int modes) {
  if (n_cut < 1) throw std::invalid_argument("cutoff_family: n_cut >= 1 required");
  if (n_cut > modes / 3)
    throw std::invalid_argument("cutoff_family: n_cut exceeds dealias range M/3");
  NoiseSpec spec;
  spec.dim = dim;
  spec.modes = modes;
  spec.family = "cutoff";
  spec.param = n_cut;
  spec.normalized = normalize;
  spec.include_harmonic = false;
  for_each_half_mode(dim, n_cut, [&](const Mode& k) {
    if (mode_norm2(k) <= double(n_cut) * n_cut)
      spec.half_modes.push_back({k, 1.0});
  });
  if (spec.half_modes.empty()) throw std::invalid_argument("cutoff_family: empty shell set");
  if (normalize) {
    const CovarianceDiagnostics diag = diagonal_covariance(spec);
    const double c = diag.A.trace() / dim;
    const double scale = 1.0 / std::sqrt(c);
    for (auto& e : spec.half_modes) e.theta *= scale;
  }
  return spec;
}

NoiseSpec mollified_family(int dim, double h, int modes) {
  if (h <= 0.0) throw std::invalid_argument("mollified_family: h must be positive");
  const int kcut = modes / 3;
  const double a = 4.0 * M_PI * M_PI * h * h;  // theta^2 decay rate per |k|^2
  const double kept_axis = gaussian_axis_sum(a, kcut);
  const double full_axis = gaussian_axis_sum(a, -1);
  const double tail = 1.0 - std::pow(kept_axis / full_axis, dim);
  if (tail > 1e-10)
    throw tail_error("mollified_family: truncation tail " + std::to_string(tail) +
                     " exceeds 1e-10 at M = " + std::to_string(modes) +
                     ", h = " + std::to_string(h));

  const double pref = std::pow(4.0 * M_PI * h * h, dim / 4.0) *
                      std::sqrt(double(dim) / (dim - 1));
  NoiseSpec spec;
  spec.dim = dim;
  spec.modes = modes;
  spec.family = "mollified";
  spec.param = h;
  spec.include_harmonic = true;
  spec.theta0 = pref;
  for_each_half_mode(dim, kcut, [&](const Mode& k) {
    spec.half_modes.push_back(
        {k, pref * std::exp(-2.0 * M_PI * M_PI * h * h * mode_norm2(k))});
  });
  return spec;
}

NoiseSpec radial_spec(int dim, int modes, int kmax_inf,
                      const std::vector<std::pair<int, double>>& shell_thetas,
                      double theta0) {
  std::map<int, double> table(shell_thetas.begin(), shell_thetas.end());
  NoiseSpec spec;
  spec.dim = dim;
  spec.modes = modes;
  spec.family = "custom";
  spec.include_harmonic = theta0 > 0.0;
  spec.theta0 = theta0;
  for_each_half_mode(dim, kmax_inf, [&](const Mode& k) {
    const auto it = table.find(int(mode_norm2(k)));
    if (it != table.end() && it->second > 0.0)
      spec.half_modes.push_back({k, it->second});
  });
  return spec;
}

NoiseSpec scale_amplitude(NoiseSpec spec, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("scale_amplitude: factor must be positive");
  for (auto& e : spec.half_modes) e.theta *= factor;
  spec.theta0 *= factor;
  spec.family = "custom";
  spec.normalized = false;
  return spec;
}

CovarianceDiagnostics diagonal_covariance(const NoiseSpec& spec) {
  const int d = spec.dim;
  CovarianceDiagnostics out;
  out.A = SymMat::zero(d);
  double sum_t2 = 0.0, sum_t4 = 0.0, max_t2 = 0.0;
  for (const auto& e : spec.half_modes) {
    const double t2 = e.theta * e.theta;
    const Vec3 kv{double(e.k[0]), double(e.k[1]), double(e.k[2])};
    out.A.add_perp_projector(kv, 2.0 * t2);  // k and -k contributions
    sum_t2 += 2.0 * t2;
    sum_t4 += 2.0 * t2 * t2;
    max_t2 = std::max(max_t2, t2);
  }
  double h2 = 0.0;
  if (spec.include_harmonic) {
    h2 = spec.theta0 * spec.theta0;
    for (int i = 0; i < d; ++i) out.A(i, i) += h2;
    max_t2 = std::max(max_t2, h2);
  }
  out.trace_q = (d - 1) * sum_t2 + d * h2;
  out.hs_norm = std::sqrt((d - 1) * sum_t4 + d * h2 * h2);
  out.op_norm = max_t2;
  return out;
}

NoiseIncrement sample_increment(const NoiseSpec& spec, double dt, RngStream& rng) {
  if (dt <= 0.0) throw std::invalid_argument("sample_increment: dt must be positive");
  NoiseIncrement inc;
  inc.dim = spec.dim;
  inc.modes = spec.modes;
  inc.dt = dt;
  const double sdt = std::sqrt(dt);
  if (spec.include_harmonic) {
    for (int i = 0; i < spec.dim; ++i)
      inc.harmonic[i] = spec.theta0 * sdt * rng.gaussian();
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  inc.amps.reserve(spec.half_modes.size());
  for (const auto& e : spec.half_modes) {
    const auto basis = perp_basis(e.k, spec.dim);
    NoiseIncrement::ModeAmp ma;
    ma.k = e.k;
    ma.a = {cplx{0, 0}, cplx{0, 0}, cplx{0, 0}};
    for (const auto& ev : basis) {
      const double gc = rng.gaussian();
      const double gs = rng.gaussian();
      // sqrt(2) cos / sqrt(2) sin pair in complex form
      const cplx z = cplx{gc, -gs} * inv_sqrt2 * e.theta * sdt;
      for (int i = 0; i < spec.dim; ++i) ma.a[i] += ev[i] * z;
    }
    inc.amps.push_back(ma);
  }
  return inc;
}

SpectralVectorField NoiseIncrement::as_field() const {
  SpectralVectorField W(dim, modes);
  for (int i = 0; i < dim; ++i)
    W.comp[i].set_coeff({0, 0, 0}, harmonic[i]);
  for (const auto& ma : amps)
    for (int i = 0; i < dim; ++i) W.comp[i].set_coeff(ma.k, ma.a[i]);
  W.divergence_free = true;
  return W;
}

Vec3 NoiseIncrement::evaluate(const Vec3& x) const {
  for (int i = 0; i < dim; ++i)
    if (x[i] < 0.0 || x[i] >= 1.0)
      throw std::invalid_argument("NoiseIncrement::evaluate: point outside [0,1)^d");
  Vec3 w = harmonic;
  for (const auto& ma : amps) {
    const double ph = 2.0 * M_PI * (ma.k[0] * x[0] + ma.k[1] * x[1] + ma.k[2] * x[2]);
    const double c = std::cos(ph), s = std::sin(ph);
    for (int i = 0; i < dim; ++i)
      w[i] += 2.0 * (ma.a[i].real() * c - ma.a[i].imag() * s);
  }
  return w;
}

SymMat kernel_exact(const NoiseSpec& spec, const Vec3& r) {
  SymMat q = SymMat::zero(spec.dim);
  if (spec.include_harmonic) {
    const double t2 = spec.theta0 * spec.theta0;
    for (int i = 0; i < spec.dim; ++i) q(i, i) += t2;
  }
  for (const auto& e : spec.half_modes) {
    const double ph = 2.0 * M_PI * (e.k[0] * r[0] + e.k[1] * r[1] + e.k[2] * r[2]);
    const Vec3 kv{double(e.k[0]), double(e.k[1]), double(e.k[2])};
    q.add_perp_projector(kv, 2.0 * e.theta * e.theta * std::cos(ph));
  }
  return q;
}

double q_quadratic_form(const NoiseSpec& spec, const SpectralVectorField& X) {
  if (X.dim != spec.dim) throw std::invalid_argument("q_quadratic_form: dim mismatch");
  double acc = 0.0;
  if (spec.include_harmonic) {
    const double t2 = spec.theta0 * spec.theta0;
    for (int i = 0; i < spec.dim; ++i) acc += t2 * std::norm(X.comp[i].coeff(0, 0, 0));
  }
  for (const auto& e : spec.half_modes) {
    std::array<cplx, 3> v{};
    for (int i = 0; i < spec.dim; ++i) v[i] = X.comp[i].coeff(e.k);
    const double k2 = mode_norm2(e.k);
    cplx kdot{0.0, 0.0};
    double v2 = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
      kdot += double(e.k[i]) * v[i];
      v2 += std::norm(v[i]);
    }
    const double proj2 = v2 - std::norm(kdot) / k2;  // |P_k v|^2
    acc += 2.0 * e.theta * e.theta * proj2;
  }
  return acc;
}

double pairing_qv_rate(const NoiseSpec& spec, const SpectralField& u,
                       const SpectralField& phi, bool mask_gradient) {
  SpectralVectorField g = gradient(phi);
  if (mask_gradient)
    for (int i = 0; i < g.dim; ++i) g.comp[i].dealias();
  SpectralVectorField F(u.dim(), u.modes());
  for (int i = 0; i < g.dim; ++i) F.comp[i] = product_unaliased(u, g.comp[i]);
  return q_quadratic_form(spec, F);
}

std::string NoiseSpec::to_json() const {
  // radial table keyed by |k|^2; all built-in families are radial
  std::map<int, double> table;
  for (const auto& e : half_modes) {
    const int k2 = int(mode_norm2(e.k));
    auto it = table.find(k2);
    if (it == table.end()) {
      table[k2] = e.theta;
    } else if (std::abs(it->second - e.theta) > 1e-12 * std::max(1.0, it->second)) {
      throw std::runtime_error("NoiseSpec::to_json: spec is not radial");
    }
  }
  nlohmann::json j;
  j["dim"] = dim;
  j["M"] = modes;
  j["family"] = family;
  if (family == "cutoff") j["params"] = {{"N_cut", int(param)}};
  else if (family == "mollified") j["params"] = {{"h", param}};
  else j["params"] = nlohmann::json::object();
  j["normalize"] = normalized;
  j["include_harmonic"] = include_harmonic;
  if (include_harmonic) j["theta0"] = theta0;
  auto& arr = j["theta_table"] = nlohmann::json::array();
  for (const auto& [k2, th] : table) arr.push_back({{"k2", k2}, {"theta", th}});
  return j.dump(2);
}

NoiseSpec NoiseSpec::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int dim = j.at("dim").get<int>();
  const int M = j.at("M").get<int>();
  const std::string family = j.at("family").get<std::string>();
  if (family == "cutoff")
    return cutoff_family(dim, j.at("params").at("N_cut").get<int>(),
                         j.at("normalize").get<bool>(), M);
  if (family == "mollified")
    return mollified_family(dim, j.at("params").at("h").get<double>(), M);
  // custom: rebuild from the radial table over the dealiased box
  std::vector<std::pair<int, double>> shells;
  for (const auto& e : j.at("theta_table"))
    shells.emplace_back(e.at("k2").get<int>(), e.at("theta").get<double>());
  const double theta0 =
      j.value("include_harmonic", false) ? j.value("theta0", 0.0) : 0.0;
  return radial_spec(dim, M, M / 3, shells, theta0);
}

}  // namespace storm
