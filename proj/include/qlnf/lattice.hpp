#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlnf {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using IVec = std::array<int, 3>;
using RVec = std::array<double, 3>;

constexpr double kPi = 3.14159265358979323846;

// Truncated frequency box |k_j| <= K in Z^d plus the padded physical grid.
struct FrequencyLattice {
  int d = 1;
  int K = 0;
  int M = 0;

  FrequencyLattice() = default;
  FrequencyLattice(int d, int K, int M = 0);

  int side() const { return 2 * K + 1; }
  std::size_t size() const;
  std::size_t grid_size() const;

  bool contains(const IVec& k) const;
  std::size_t index(const IVec& k) const;
  IVec freq(std::size_t idx) const;

  // Position of frequency k on the padded FFT grid (wrapped mod M).
  std::size_t grid_index(const IVec& k) const;
  // Signed wavenumber of FFT grid index (per axis, in (-M/2, M/2]).
  IVec grid_freq(std::size_t gidx) const;

  bool operator==(const FrequencyLattice& o) const {
    return d == o.d && K == o.K && M == o.M;
  }
  bool operator!=(const FrequencyLattice& o) const { return !(*this == o); }
};

// Even FFT-friendly size >= 4(2K+1).
int padded_grid_size(int K);

int norm2(const IVec& k, int d);
double bracket(const IVec& k, int d);      // <k> = sqrt(1+|k|^2)
double bracket(const RVec& xi, int d);

inline IVec add(const IVec& a, const IVec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline IVec sub(const IVec& a, const IVec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline IVec neg(const IVec& a) { return {-a[0], -a[1], -a[2]}; }

// Coefficients in the convention u(x) = (2pi)^{-d/2} sum_k uhat(k) e^{ik.x}.
class FourierField {
 public:
  FourierField() = default;
  explicit FourierField(const FrequencyLattice& lat, bool real = false);

  const FrequencyLattice& lattice() const { return lat_; }
  bool reality() const { return real_; }
  void set_reality(bool r) { real_ = r; }

  cplx& operator[](std::size_t i) { return c_[i]; }
  const cplx& operator[](std::size_t i) const { return c_[i]; }
  cplx& at(const IVec& k) { return c_[lat_.index(k)]; }
  cplx at(const IVec& k) const { return lat_.contains(k) ? c_[lat_.index(k)] : cplx(0.0); }

  cvec& data() { return c_; }
  const cvec& data() const { return c_; }
  std::size_t size() const { return c_.size(); }

  // Coefficients of the complex conjugate function: conj(uhat(-k)).
  FourierField conj() const;

  FourierField& operator+=(const FourierField& o);
  FourierField& operator-=(const FourierField& o);
  FourierField& operator*=(cplx a);

  double max_abs() const;
  // Largest |uhat(k) - conj(uhat(-k))| relative to max_abs.
  double reality_defect() const;

 private:
  FrequencyLattice lat_;
  bool real_ = false;
  cvec c_;
};

FourierField operator+(FourierField a, const FourierField& b);
FourierField operator-(FourierField a, const FourierField& b);
FourierField operator*(cplx s, FourierField a);

// U = (u, ubar) with minus(k) = conj(plus(-k)).
struct PairState {
  FourierField plus;
  FourierField minus;

  PairState() = default;
  explicit PairState(const FourierField& u) : plus(u), minus(u.conj()) {}
  PairState(FourierField p, FourierField m) : plus(std::move(p)), minus(std::move(m)) {}

  double invariant_defect() const;
};

void require_same_lattice(const FourierField& a, const FourierField& b);

double sobolev_norm(const FourierField& f, double s);
cplx l2_inner(const FourierField& u, const FourierField& v);
cplx l2_inner(const PairState& U, const PairState& V);

// Fourier multiplier by a function of the integer frequency.
template <class F>
FourierField multiplier(const FourierField& f, F&& m) {
  FourierField out(f.lattice(), f.reality());
  const auto& lat = f.lattice();
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = m(lat.freq(i)) * f[i];
  return out;
}

// Physical samples on the padded M^d grid.
cvec to_grid(const FourierField& f);
// Full padded spectrum in the plain convention g(x) = sum_q c(q) e^{iq.x}.
cvec grid_to_plain(const cvec& g, const FrequencyLattice& lat);
cvec plain_to_grid(const cvec& c, const FrequencyLattice& lat);
// Truncated (2pi)^{-d/2}-normalized coefficients of a grid function.
FourierField from_grid(const cvec& g, const FrequencyLattice& lat, bool real = false);

// Spectral partial derivative d/dx_j of a grid function (all padded modes kept).
cvec grid_derivative(const cvec& g, const FrequencyLattice& lat, int j);
cvec grid_laplacian(const cvec& g, const FrequencyLattice& lat);
double grid_mean(const cvec& g);

// Dealiased product of up to seven fields, truncated to the lattice.
FourierField pointwise_product(const std::vector<FourierField>& fs);
// Reference O(K^{2d}) convolution of two fields.
FourierField direct_product(const FourierField& a, const FourierField& b);

// Deterministic uniform [0,1) draw attached to (seed, k, stream).
double hashed_uniform(std::uint64_t seed, const IVec& k, std::uint64_t stream = 0);

// Smooth random field: coefficients ~ <k>^{-decay} with seeded phases; the draw
// at each k does not depend on K, so sweeps over K are nested.
FourierField random_field(const FrequencyLattice& lat, std::uint64_t seed, double decay,
                          bool real = false);
FourierField single_mode(const FrequencyLattice& lat, const IVec& k, cplx amp = 1.0);

}  // namespace qlnf
