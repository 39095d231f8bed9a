#include "qlnf/lattice.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace qlnf {

namespace {

bool smooth_size(int n) {
  for (int p : {2, 3, 5, 7}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

struct PlanKey {
  int d, M, sign;
  bool operator<(const PlanKey& o) const {
    return std::tie(d, M, sign) < std::tie(o.d, o.M, o.sign);
  }
};

std::mutex plan_mutex;
std::map<PlanKey, fftw_plan> plans;

fftw_plan get_plan(int d, int M, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  PlanKey key{d, M, sign};
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  int n[3] = {M, M, M};
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= M;
  auto* buf = fftw_alloc_complex(total);
  fftw_plan p = fftw_plan_dft(d, n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(buf);
  plans[key] = p;
  return p;
}

void fft_inplace(cvec& g, const FrequencyLattice& lat, int sign) {
  fftw_plan p = get_plan(lat.d, lat.M, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(g.data());
  fftw_execute_dft(p, ptr, ptr);
}

double norm_factor(int d) { return std::pow(2.0 * kPi, 0.5 * d); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double hashed_uniform(std::uint64_t seed, const IVec& k, std::uint64_t stream) {
  std::uint64_t h = splitmix(seed ^ splitmix(stream + 0x51ed27ULL));
  for (int j = 0; j < 3; ++j)
    h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(k[j]) + 0x10000));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

int padded_grid_size(int K) {
  int M = 4 * (2 * K + 1);
  if (M % 2) ++M;
  while (!smooth_size(M)) M += 2;
  return M;
}

FrequencyLattice::FrequencyLattice(int d_, int K_, int M_) : d(d_), K(K_), M(M_) {
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  if (K < 0) throw std::invalid_argument("cutoff K must be nonnegative");
  if (M == 0) M = padded_grid_size(K);
  if (M % 2 != 0 || M < 2 * (2 * K + 1))
    throw std::invalid_argument("grid size M must be even and >= 2(2K+1)");
}

std::size_t FrequencyLattice::size() const {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= side();
  return n;
}

std::size_t FrequencyLattice::grid_size() const {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= M;
  return n;
}

bool FrequencyLattice::contains(const IVec& k) const {
  for (int j = 0; j < d; ++j)
    if (k[j] < -K || k[j] > K) return false;
  return true;
}

std::size_t FrequencyLattice::index(const IVec& k) const {
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) idx = idx * side() + static_cast<std::size_t>(k[j] + K);
  return idx;
}

IVec FrequencyLattice::freq(std::size_t idx) const {
  IVec k{0, 0, 0};
  for (int j = d - 1; j >= 0; --j) {
    k[j] = static_cast<int>(idx % side()) - K;
    idx /= side();
  }
  return k;
}

std::size_t FrequencyLattice::grid_index(const IVec& k) const {
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) {
    int w = ((k[j] % M) + M) % M;
    idx = idx * M + static_cast<std::size_t>(w);
  }
  return idx;
}

IVec FrequencyLattice::grid_freq(std::size_t gidx) const {
  IVec k{0, 0, 0};
  for (int j = d - 1; j >= 0; --j) {
    int w = static_cast<int>(gidx % M);
    k[j] = w > M / 2 ? w - M : w;
    gidx /= M;
  }
  return k;
}

int norm2(const IVec& k, int d) {
  int s = 0;
  for (int j = 0; j < d; ++j) s += k[j] * k[j];
  return s;
}

double bracket(const IVec& k, int d) { return std::sqrt(1.0 + norm2(k, d)); }

double bracket(const RVec& xi, int d) {
  double s = 1.0;
  for (int j = 0; j < d; ++j) s += xi[j] * xi[j];
  return std::sqrt(s);
}

FourierField::FourierField(const FrequencyLattice& lat, bool real)
    : lat_(lat), real_(real), c_(lat.size(), cplx(0.0)) {}

FourierField FourierField::conj() const {
  FourierField out(lat_, real_);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    IVec k = lat_.freq(i);
    out[lat_.index(neg(k))] = std::conj(c_[i]);
  }
  return out;
}

FourierField& FourierField::operator+=(const FourierField& o) {
  require_same_lattice(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  real_ = real_ && o.real_;
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& o) {
  require_same_lattice(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  real_ = real_ && o.real_;
  return *this;
}

FourierField& FourierField::operator*=(cplx a) {
  for (auto& x : c_) x *= a;
  if (a.imag() != 0.0) real_ = false;
  return *this;
}

double FourierField::max_abs() const {
  double m = 0.0;
  for (auto& x : c_) m = std::max(m, std::abs(x));
  return m;
}

double FourierField::reality_defect() const {
  double m = max_abs();
  if (m == 0.0) return 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < c_.size(); ++i) {
    IVec k = lat_.freq(i);
    e = std::max(e, std::abs(c_[i] - std::conj(c_[lat_.index(neg(k))])));
  }
  return e / m;
}

FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
FourierField operator*(cplx s, FourierField a) { return a *= s; }

double PairState::invariant_defect() const {
  FourierField c = plus.conj();
  double m = std::max(plus.max_abs(), minus.max_abs());
  if (m == 0.0) return 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) e = std::max(e, std::abs(c[i] - minus[i]));
  return e / m;
}

void require_same_lattice(const FourierField& a, const FourierField& b) {
  if (a.lattice() != b.lattice()) throw std::invalid_argument("lattice mismatch");
}

double sobolev_norm(const FourierField& f, double s) {
  const auto& lat = f.lattice();
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double w = std::pow(1.0 + norm2(lat.freq(i), lat.d), s);
    acc += w * std::norm(f[i]);
  }
  return std::sqrt(acc);
}

cplx l2_inner(const FourierField& u, const FourierField& v) {
  require_same_lattice(u, v);
  cplx acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * std::conj(v[i]);
  return acc;
}

cplx l2_inner(const PairState& U, const PairState& V) {
  return l2_inner(U.plus, V.plus) + l2_inner(U.minus, V.minus);
}

cvec to_grid(const FourierField& f) {
  const auto& lat = f.lattice();
  cvec g(lat.grid_size(), cplx(0.0));
  double c = 1.0 / norm_factor(lat.d);
  for (std::size_t i = 0; i < f.size(); ++i) g[lat.grid_index(lat.freq(i))] = c * f[i];
  fft_inplace(g, lat, FFTW_BACKWARD);
  return g;
}

cvec grid_to_plain(const cvec& g, const FrequencyLattice& lat) {
  cvec c = g;
  fft_inplace(c, lat, FFTW_FORWARD);
  double s = 1.0 / static_cast<double>(lat.grid_size());
  for (auto& x : c) x *= s;
  return c;
}

cvec plain_to_grid(const cvec& c, const FrequencyLattice& lat) {
  cvec g = c;
  fft_inplace(g, lat, FFTW_BACKWARD);
  return g;
}

FourierField from_grid(const cvec& g, const FrequencyLattice& lat, bool real) {
  cvec c = grid_to_plain(g, lat);
  FourierField f(lat, real);
  double s = norm_factor(lat.d);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = s * c[lat.grid_index(lat.freq(i))];
  return f;
}

cvec grid_derivative(const cvec& g, const FrequencyLattice& lat, int j) {
  cvec c = grid_to_plain(g, lat);
  for (std::size_t i = 0; i < c.size(); ++i) {
    IVec q = lat.grid_freq(i);
    // Nyquist mode carries no derivative information on a real grid.
    double kj = (2 * std::abs(q[j]) == lat.M) ? 0.0 : static_cast<double>(q[j]);
    c[i] *= cplx(0.0, kj);
  }
  return plain_to_grid(c, lat);
}

cvec grid_laplacian(const cvec& g, const FrequencyLattice& lat) {
  cvec c = grid_to_plain(g, lat);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= -static_cast<double>(norm2(lat.grid_freq(i), lat.d));
  return plain_to_grid(c, lat);
}

double grid_mean(const cvec& g) {
  double s = 0.0;
  for (auto& x : g) s += x.real();
  return s / static_cast<double>(g.size());
}

FourierField pointwise_product(const std::vector<FourierField>& fs) {
  if (fs.empty()) throw std::invalid_argument("empty product");
  if (fs.size() > 7) throw std::invalid_argument("product degree exceeds dealiasing limit 7");
  const auto& lat = fs[0].lattice();
  for (auto& f : fs) require_same_lattice(fs[0], f);
  if (static_cast<int>(fs.size()) * lat.K + lat.K >= lat.M && lat.K > 0)
    throw std::invalid_argument("grid too small for product degree");
  cvec g = to_grid(fs[0]);
  bool real = fs[0].reality();
  for (std::size_t n = 1; n < fs.size(); ++n) {
    cvec h = to_grid(fs[n]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= h[i];
    real = real && fs[n].reality();
  }
  return from_grid(g, lat, real);
}

FourierField direct_product(const FourierField& a, const FourierField& b) {
  require_same_lattice(a, b);
  const auto& lat = a.lattice();
  FourierField out(lat, a.reality() && b.reality());
  double c = 1.0 / norm_factor(lat.d);
  for (std::size_t i = 0; i < out.size(); ++i) {
    IVec k = lat.freq(i);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      IVec p = lat.freq(j);
      IVec q = sub(k, p);
      if (lat.contains(q)) acc += a[j] * b[lat.index(q)];
    }
    out[i] = c * acc;
  }
  return out;
}

FourierField random_field(const FrequencyLattice& lat, std::uint64_t seed, double decay, bool real) {
  FourierField f(lat, real);
  for (std::size_t i = 0; i < f.size(); ++i) {
    IVec k = lat.freq(i);
    double a = (0.5 + hashed_uniform(seed, k, 1)) * std::pow(bracket(k, lat.d), -decay);
    f[i] = std::polar(a, 2.0 * kPi * hashed_uniform(seed, k, 2));
  }
  if (real) {
    FourierField c = f.conj();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 * (f[i] + c[i]);
    f.set_reality(true);
  }
  return f;
}

FourierField single_mode(const FrequencyLattice& lat, const IVec& k, cplx amp) {
  FourierField f(lat);
  f.at(k) = amp * norm_factor(lat.d);
  return f;
}

}  // namespace qlnf
