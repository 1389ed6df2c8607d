#include "storm/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>

#include "json.hpp"

namespace storm {

namespace {

std::size_t cube_size(int dim, int M) {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(M);
  return n;
}

int wrap(int k, int M) {
  int r = k % M;
  return r < 0 ? r + M : r;
}

int freq_of_index(int i, int M) { return i <= M / 2 - 1 ? i : i - M; }

// FFTW plans are created once per (dim, M, sign) under a lock; execution on
// caller-owned buffers via fftw_execute_dft is thread-safe.
struct PlanKey {
  int dim, M, sign;
  bool operator<(const PlanKey& o) const {
    return std::tie(dim, M, sign) < std::tie(o.dim, o.M, o.sign);
  }
};

fftw_plan acquire_plan(int dim, int M, int sign) {
  static std::map<PlanKey, fftw_plan> plans;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const PlanKey key{dim, M, sign};
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  const std::size_t n = cube_size(dim, M);
  fftw_complex* a = fftw_alloc_complex(n);
  fftw_complex* b = fftw_alloc_complex(n);
  int dims[3] = {M, M, M};
  fftw_plan p = fftw_plan_dft(dim, dims, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(a);
  fftw_free(b);
  plans.emplace(key, p);
  return p;
}

void run_fft(int dim, int M, int sign, const cplx* in, cplx* out) {
  fftw_plan p = acquire_plan(dim, M, sign);
  fftw_execute_dft(p,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

SpectralField::SpectralField(int dim, int modes) : dim_(dim), modes_(modes) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("SpectralField: dim must be 2 or 3");
  if (modes < 4 || modes % 2 != 0)
    throw std::invalid_argument("SpectralField: modes must be even and >= 4");
  c_.assign(cube_size(dim, modes), cplx{0.0, 0.0});
}

std::size_t SpectralField::flat(const Mode& k) const {
  std::size_t idx = wrap(k[0], modes_);
  for (int i = 1; i < dim_; ++i) idx = idx * modes_ + wrap(k[i], modes_);
  return idx;
}

Mode SpectralField::mode_of(std::size_t flat_idx) const {
  Mode k{0, 0, 0};
  for (int i = dim_ - 1; i >= 0; --i) {
    k[i] = freq_of_index(static_cast<int>(flat_idx % modes_), modes_);
    flat_idx /= modes_;
  }
  return k;
}

bool SpectralField::is_nyquist(const Mode& k) const {
  for (int i = 0; i < dim_; ++i)
    if (wrap(k[i], modes_) == modes_ / 2) return true;
  return false;
}

void SpectralField::set_coeff(const Mode& k, cplx v) {
  for (int i = 0; i < dim_; ++i)
    if (std::abs(k[i]) > kmax())
      throw std::invalid_argument("set_coeff: mode outside resolution");
  Mode mk{-k[0], -k[1], -k[2]};
  c_[flat(k)] = v;
  c_[flat(mk)] = std::conj(v);
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (o.dim_ != dim_ || o.modes_ != modes_)
    throw std::invalid_argument("field +=: resolution mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (o.dim_ != dim_ || o.modes_ != modes_)
    throw std::invalid_argument("field -=: resolution mismatch");
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }

double SpectralField::l2_norm() const {
  double s = 0.0;
  for (const auto& v : c_) s += std::norm(v);
  return std::sqrt(s);
}

bool SpectralField::is_hermitian(double tol) const {
  for (std::size_t i = 0; i < c_.size(); ++i) {
    const Mode k = mode_of(i);
    const Mode mk{-k[0], -k[1], -k[2]};
    if (std::abs(c_[i] - std::conj(c_[flat(mk)])) > tol) return false;
  }
  return true;
}

bool SpectralField::all_finite() const {
  for (const auto& v : c_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

void SpectralField::zero_nyquist() {
  for (std::size_t i = 0; i < c_.size(); ++i)
    if (is_nyquist(mode_of(i))) c_[i] = 0.0;
}

void SpectralField::dealias() {
  const int kcut = modes_ / 3;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    const Mode k = mode_of(i);
    for (int d = 0; d < dim_; ++d)
      if (std::abs(k[d]) > kcut) {
        c_[i] = 0.0;
        break;
      }
  }
}

std::vector<double> SpectralField::to_grid() const {
  std::vector<cplx> out(c_.size());
  run_fft(dim_, modes_, FFTW_BACKWARD, c_.data(), out.data());
  std::vector<double> g(c_.size());
  for (std::size_t i = 0; i < out.size(); ++i) g[i] = out[i].real();
  return g;
}

SpectralField SpectralField::from_grid(int dim, int modes, const std::vector<double>& g) {
  if (g.size() != cube_size(dim, modes))
    throw std::invalid_argument("from_grid: size mismatch");
  std::vector<cplx> in(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) in[i] = g[i];
  SpectralField u(dim, modes);
  run_fft(dim, modes, FFTW_FORWARD, in.data(), &u.raw(0));
  const double scale = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u.raw(i) *= scale;
  u.zero_nyquist();
  return u;
}

SpectralField SpectralField::white_noise(int dim, int modes, int kmax_inf, RngStream& rng) {
  SpectralField u(dim, modes);
  if (kmax_inf > u.kmax()) throw std::invalid_argument("white_noise: kmax exceeds resolution");
  u.set_coeff({0, 0, 0}, rng.gaussian());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const int K = kmax_inf;
  const int k3max = dim == 3 ? K : 0;
  for (int k1 = -K; k1 <= K; ++k1)
    for (int k2 = -K; k2 <= K; ++k2)
      for (int k3 = -k3max; k3 <= k3max; ++k3) {
        const Mode k{k1, k2, k3};
        if (!is_positive_half(k)) continue;
        const double a = rng.gaussian();
        const double b = rng.gaussian();
        u.set_coeff(k, cplx{a, -b} * inv_sqrt2);
      }
  return u;
}

SpectralVectorField::SpectralVectorField(int dim_, int modes_) : dim(dim_), modes(modes_) {
  for (int i = 0; i < dim; ++i) comp[i] = SpectralField(dim, modes);
}

double SpectralVectorField::max_divergence() const {
  double worst = 0.0;
  const std::size_t n = comp[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    const Mode k = comp[0].mode_of(i);
    cplx div{0.0, 0.0};
    for (int d = 0; d < dim; ++d)
      div += cplx{0.0, 2.0 * M_PI * k[d]} * comp[d].raw(i);
    worst = std::max(worst, std::abs(div));
  }
  return worst;
}

double sobolev_norm(const SpectralField& u, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx v = u.raw(i);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("sobolev_norm: non-finite coefficient");
    const double n = std::norm(v);
    if (n == 0.0) continue;
    acc += std::pow(1.0 + laplacian_eig(u.mode_of(i)), s) * n;
  }
  return std::sqrt(acc);
}

double field_inner(const SpectralField& u, const SpectralField& v) {
  if (u.dim() != v.dim() || u.modes() != v.modes())
    throw std::invalid_argument("field_inner: resolution mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += (u.raw(i) * std::conj(v.raw(i))).real();
  return s;
}

SpectralVectorField gradient(const SpectralField& u) {
  SpectralVectorField g(u.dim(), u.modes());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Mode k = u.mode_of(i);
    for (int d = 0; d < u.dim(); ++d)
      g.comp[d].raw(i) = cplx{0.0, 2.0 * M_PI * k[d]} * u.raw(i);
  }
  return g;
}

SpectralField divergence(const SpectralVectorField& X) {
  SpectralField div(X.dim, X.modes);
  for (std::size_t i = 0; i < div.size(); ++i) {
    const Mode k = div.mode_of(i);
    cplx s{0.0, 0.0};
    for (int d = 0; d < X.dim; ++d)
      s += cplx{0.0, 2.0 * M_PI * k[d]} * X.comp[d].raw(i);
    div.raw(i) = s;
  }
  return div;
}

SpectralField transport_term(const SpectralField& u, const SpectralVectorField& X) {
  if (u.dim() != X.dim || u.modes() != X.modes)
    throw std::invalid_argument("transport_term: resolution mismatch");
  const int dim = u.dim();
  const int M = u.modes();
  const std::vector<double> gu = u.to_grid();
  SpectralField out(dim, M);
  std::vector<double> prod(gu.size());
  for (int d = 0; d < dim; ++d) {
    const std::vector<double> gx = X.comp[d].to_grid();
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = gu[i] * gx[i];
    const SpectralField p = SpectralField::from_grid(dim, M, prod);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Mode k = out.mode_of(i);
      out.raw(i) += cplx{0.0, 2.0 * M_PI * k[d]} * p.raw(i);
    }
  }
  out.dealias();
  out.raw(out.flat({0, 0, 0})) = 0.0;
  return out;
}

int support_kmax(const SpectralField& u) {
  int kb = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.raw(i) == cplx{0.0, 0.0}) continue;
    const Mode k = u.mode_of(i);
    for (int d = 0; d < u.dim(); ++d) kb = std::max(kb, std::abs(k[d]));
  }
  return kb;
}

SpectralField product_unaliased(const SpectralField& a, const SpectralField& b) {
  if (a.dim() != b.dim() || a.modes() != b.modes())
    throw std::invalid_argument("product_unaliased: resolution mismatch");
  if (support_kmax(a) + support_kmax(b) > a.modes() / 2 - 1)
    throw std::invalid_argument("product_unaliased: combined support would alias");
  const std::vector<double> ga = a.to_grid();
  const std::vector<double> gb = b.to_grid();
  std::vector<double> prod(ga.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = ga[i] * gb[i];
  return SpectralField::from_grid(a.dim(), a.modes(), prod);
}

double holder_norm_estimate(const std::vector<std::pair<double, SpectralField>>& snaps,
                            double alpha, double s, std::size_t grid_cap) {
  if (snaps.size() < 2)
    throw std::invalid_argument("holder_norm_estimate: need at least 2 snapshots");
  for (std::size_t i = 1; i < snaps.size(); ++i)
    if (snaps[i].first <= snaps[i - 1].first)
      throw std::invalid_argument("holder_norm_estimate: times must be increasing");

  std::vector<std::size_t> idx;
  const std::size_t n = snaps.size();
  if (n <= grid_cap) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  } else {
    idx.resize(grid_cap);
    for (std::size_t j = 0; j < grid_cap; ++j)
      idx[j] = (j * (n - 1)) / (grid_cap - 1);
  }

  double best = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      const auto& [ta, ua] = snaps[idx[a]];
      const auto& [tb, ub] = snaps[idx[b]];
      const double r = sobolev_norm(ub - ua, s) / std::pow(tb - ta, alpha);
      best = std::max(best, r);
    }
  return best;
}

TrigPoly TrigPoly::from_field(const SpectralField& u, double drop_tol) {
  TrigPoly p;
  p.dim = u.dim();
  p.c0 = u.coeff(0, 0, 0).real();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Mode k = u.mode_of(i);
    if (!is_positive_half(k)) continue;
    const cplx c = u.raw(i);
    if (std::abs(c) > drop_tol) p.half.emplace_back(k, c);
  }
  return p;
}

double TrigPoly::operator()(const Vec3& x) const {
  double v = c0;
  for (const auto& [k, c] : half) {
    const double ph = 2.0 * M_PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
    v += 2.0 * (c.real() * std::cos(ph) - c.imag() * std::sin(ph));
  }
  return v;
}

double TrigPoly::max_abs(int oversample) const {
  int kb = 1;
  for (const auto& [k, c] : half)
    for (int i = 0; i < 3; ++i) kb = std::max(kb, std::abs(k[i]));
  const int G = oversample * (kb + 1);
  double best = 0.0;
  Vec3 x{0.0, 0.0, 0.0};
  const int g3 = dim == 3 ? G : 1;
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j)
      for (int l = 0; l < g3; ++l) {
        x = {double(i) / G, double(j) / G, double(l) / G};
        best = std::max(best, std::abs((*this)(x)));
      }
  return best;
}

void save_field(const std::string& path, const SpectralField& u) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_field: cannot open " + path);
  const char magic[4] = {'S', 'T', 'L', 'F'};
  const std::uint32_t version = 1, d = u.dim(), M = u.modes();
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&d), 4);
  f.write(reinterpret_cast<const char*>(&M), 4);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const float re = static_cast<float>(u.raw(i).real());
    const float im = static_cast<float>(u.raw(i).imag());
    f.write(reinterpret_cast<const char*>(&re), 4);
    f.write(reinterpret_cast<const char*>(&im), 4);
  }
  if (!f) throw std::runtime_error("save_field: write failed on " + path);
}

SpectralField load_field(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_field: cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, d = 0, M = 0;
  f.read(magic, 4);
  if (std::memcmp(magic, "STLF", 4) != 0)
    throw std::runtime_error("load_field: bad magic in " + path);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&d), 4);
  f.read(reinterpret_cast<char*>(&M), 4);
  if (version != 1) throw std::runtime_error("load_field: unsupported version");
  SpectralField u(static_cast<int>(d), static_cast<int>(M));
  for (std::size_t i = 0; i < u.size(); ++i) {
    float re = 0, im = 0;
    f.read(reinterpret_cast<char*>(&re), 4);
    f.read(reinterpret_cast<char*>(&im), 4);
    u.raw(i) = cplx{re, im};
  }
  if (!f) throw std::runtime_error("load_field: truncated file " + path);
  return u;
}

std::string field_debug_json(const SpectralField& u) {
  nlohmann::json j;
  j["dim"] = u.dim();
  j["modes"] = u.modes();
  auto& list = j["coeffs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const cplx c = u.raw(i);
    if (c == cplx{0.0, 0.0}) continue;
    const Mode k = u.mode_of(i);
    nlohmann::json e;
    e["k"] = std::vector<int>(k.begin(), k.begin() + u.dim());
    e["re"] = c.real();
    e["im"] = c.imag();
    list.push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace storm
