#include "qlnf/kg.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qlnf/trilinear.hpp"

namespace qlnf {

namespace {

const double kSqrt2 = std::sqrt(2.0);

double lam_r(const RVec& xi, int d, double m) {
  double s = m;
  for (int i = 0; i < d; ++i) s += xi[i] * xi[i];
  return std::sqrt(s);
}

// d^der P evaluated on grid samples of the variables.
cvec poly_eval(const std::vector<Monomial>& P, const std::vector<cvec>& y, const std::array<int, 4>& der) {
  const std::size_t G = y[0].size();
  cvec out(G, 0.0);
  for (const auto& mono : P) {
    double c = mono.coef;
    std::array<int, 4> p{};
    bool zero = false;
    for (std::size_t i = 0; i < 4; ++i) {
      if (der[i] > mono.e[i]) {
        zero = true;
        break;
      }
      for (int r = 0; r < der[i]; ++r) c *= mono.e[i] - r;
      p[i] = mono.e[i] - der[i];
    }
    if (zero || c == 0.0) continue;
    for (std::size_t g = 0; g < G; ++g) {
      double v = c;
      for (std::size_t i = 0; i < y.size(); ++i)
        for (int r = 0; r < p[i]; ++r) v *= y[i][g].real();
      out[g] += v;
    }
  }
  return out;
}

std::vector<Monomial> g_monomials(const std::array<double, 5>& G) {
  std::vector<Monomial> out;
  for (int b = 0; b <= 4; ++b)
    if (G[b] != 0.0) out.push_back({G[b], {4 - b, b, 0, 0}});
  return out;
}

FourierField lam_pow(const FourierField& f, double p, const KgConfig& cfg) {
  return multiplier(f, [&](const IVec& k) { return cplx(std::pow(kg_lambda(k, cfg), p)); });
}

std::vector<cvec> f_vars(const FourierField& psi) {
  const auto& lat = psi.lattice();
  std::vector<cvec> y{to_grid(psi)};
  for (int j = 0; j < lat.d; ++j) y.push_back(grid_derivative(y[0], lat, j));
  return y;
}

std::vector<cvec> g_vars(const FourierField& psi, const KgConfig& cfg) {
  return {to_grid(psi), to_grid(lam_pow(psi, 0.5, cfg))};
}

FourierField psi_of(const PairState& U, const KgConfig& cfg) {
  return inverse_complex_transform(U, cfg.mass).first;
}

std::vector<cvec> second_derivatives(const std::vector<Monomial>& F, const std::vector<cvec>& y, int d) {
  std::vector<cvec> out;
  for (int j = 1; j <= d; ++j)
    for (int k = 1; k <= d; ++k) {
      std::array<int, 4> der{};
      der[j] += 1;
      der[k] += 1;
      out.push_back(poly_eval(F, y, der));
    }
  return out;
}

double a2t_at(const std::vector<cvec>& Fjk, std::size_t g, const RVec& xi, int d, double m) {
  double s = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) s += Fjk[j * d + k][g].real() * xi[j] * xi[k];
  const double l = lam_r(xi, d, m);
  return s / (2.0 * l * l);
}

struct Order1Point {
  double lam, a2p, s1, s1m1, s2;
};

Order1Point order1_point(double a) {
  Order1Point p;
  p.lam = std::sqrt(1.0 + 2.0 * a);
  const double den = 1.0 + a + p.lam;
  const double q = 2.0 * p.lam * den;
  p.a2p = 2.0 * a / (p.lam + 1.0);
  p.s1 = den / std::sqrt(q);
  p.s1m1 = (a * a / q) / (p.s1 + 1.0);
  p.s2 = -a / std::sqrt(q);
  return p;
}

Symbol order1_symbol(const FrequencyLattice& lat, const std::vector<cvec>& Fjk, double m, double order,
                     double (*pick)(const Order1Point&)) {
  const int d = lat.d;
  return Symbol::general(
      lat, order,
      [Fjk, m, d, pick](const RVec& xi, cvec& out) {
        for (std::size_t g = 0; g < out.size(); ++g) out[g] += pick(order1_point(a2t_at(Fjk, g, xi, d, m)));
      },
      true);
}

double l2(const FourierField& f) { return std::sqrt(l2_inner(f, f).real()); }

}  // namespace

std::vector<Monomial> default_F(int d) {
  std::vector<Monomial> out;
  for (int j = 1; j <= d; ++j) {
    Monomial m{1.0, {2, 0, 0, 0}};
    m.e[j] = 4;
    out.push_back(m);
  }
  for (int j = 1; j <= d; ++j)
    for (int k = j + 1; k <= d; ++k) {
      Monomial m{2.0, {2, 0, 0, 0}};
      m.e[j] = 2;
      m.e[k] = 2;
      out.push_back(m);
    }
  return out;
}

KgConfig kg_default(int d, int K) {
  KgConfig c;
  c.d = d;
  c.K = K;
  c.F = default_F(d);
  return c;
}

KgConfig kg_semilinear(int d, int K) {
  KgConfig c;
  c.d = d;
  c.K = K;
  c.F.clear();
  c.G = {0.25, 0.0, 0.0, 0.0, 0.0};
  c.semilinear = true;
  return c;
}

void validate(const KgConfig& cfg) {
  if (cfg.d < 1 || cfg.d > 3 || cfg.K < 1) throw std::invalid_argument("bad KG lattice");
  if (cfg.mass < 1.0 || cfg.mass > 2.0) throw std::invalid_argument("mass must lie in [1, 2]");
  for (const auto& m : cfg.F) {
    int deg = 0;
    for (int i = 0; i < 4; ++i) {
      if (m.e[i] < 0) throw std::invalid_argument("negative exponent in F");
      if (i > cfg.d && m.e[i] != 0) throw std::invalid_argument("F uses a gradient slot beyond d");
      deg += m.e[i];
    }
    if (m.coef != 0.0 && deg < 6) throw std::invalid_argument("F must vanish to order >= 6 at 0");
    if (m.coef != 0.0 && deg > 8) throw std::invalid_argument("F degree exceeds the dealiasing limit 8");
  }
  if (cfg.semilinear) {
    if (!cfg.F.empty()) throw std::invalid_argument("semilinear mode requires F = 0");
    for (int b = 1; b <= 4; ++b)
      if (cfg.G[b] != 0.0) throw std::invalid_argument("semilinear mode requires G independent of y1");
  }
}

double kg_lambda(const IVec& k, const KgConfig& cfg) { return lambda_kg(k, cfg.mass, cfg.d); }

double kg_lambda_max(const KgConfig& cfg) {
  return std::sqrt(static_cast<double>(cfg.K) * cfg.K * cfg.d + cfg.mass);
}

PairState complex_transform(const FourierField& psi, const FourierField& phi, double mass) {
  require_same_lattice(psi, phi);
  const auto& lat = psi.lattice();
  FourierField u(lat);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double l = lambda_kg(lat.freq(i), mass, lat.d);
    u[i] = (std::sqrt(l) * psi[i] + cplx(0.0, 1.0) / std::sqrt(l) * phi[i]) / kSqrt2;
  }
  return PairState(u);
}

std::pair<FourierField, FourierField> inverse_complex_transform(const PairState& U, double mass) {
  const auto& lat = U.plus.lattice();
  FourierField psi(lat, true), phi(lat, true);
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double l = lambda_kg(lat.freq(i), mass, lat.d);
    psi[i] = (U.plus[i] + U.minus[i]) / (std::sqrt(l) * kSqrt2);
    phi[i] = cplx(0.0, -1.0) * std::sqrt(l) * (U.plus[i] - U.minus[i]) / kSqrt2;
  }
  return {psi, phi};
}

FourierField kg_f(const FourierField& psi, const KgConfig& cfg) {
  const auto& lat = psi.lattice();
  if (cfg.F.empty()) return FourierField(lat, true);
  auto y = f_vars(psi);
  cvec f = poly_eval(cfg.F, y, {1, 0, 0, 0});
  for (int j = 1; j <= lat.d; ++j) {
    std::array<int, 4> der{};
    der[j] = 1;
    cvec dj = grid_derivative(poly_eval(cfg.F, y, der), lat, j - 1);
    for (std::size_t g = 0; g < f.size(); ++g) f[g] -= dj[g];
  }
  return from_grid(f, lat, true);
}

FourierField kg_g(const FourierField& psi, const KgConfig& cfg) {
  const auto& lat = psi.lattice();
  auto G = g_monomials(cfg.G);
  if (G.empty()) return FourierField(lat, true);
  auto y = g_vars(psi, cfg);
  FourierField g0 = from_grid(poly_eval(G, y, {1, 0, 0, 0}), lat, true);
  FourierField g1 = from_grid(poly_eval(G, y, {0, 1, 0, 0}), lat, true);
  return g0 + lam_pow(g1, 0.5, cfg);
}

std::pair<FourierField, FourierField> kg_rhs(const FourierField& psi, const FourierField& phi,
                                             const KgConfig& cfg) {
  FourierField dphi = lam_pow(psi, 2.0, cfg);
  if (cfg.nonlinear) dphi += kg_f(psi, cfg) + kg_g(psi, cfg);
  dphi *= cplx(-1.0);
  dphi.set_reality(true);
  return {phi, dphi};
}

FourierField kg_nonlinear(const FourierField& u, const KgConfig& cfg) {
  const auto& lat = u.lattice();
  if (!cfg.nonlinear) return FourierField(lat);
  FourierField psi = psi_of(PairState(u), cfg);
  FourierField n = lam_pow(kg_f(psi, cfg) + kg_g(psi, cfg), -0.5, cfg);
  n *= cplx(0.0, -1.0 / kSqrt2);
  n.set_reality(false);
  return n;
}

PairState kg_rhs_complex(const PairState& U, const KgConfig& cfg) {
  FourierField p = kg_nonlinear(U.plus, cfg);
  const auto& lat = p.lattice();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += cplx(0.0, -kg_lambda(lat.freq(i), cfg)) * U.plus[i];
  return PairState(p);
}

PairState kg_cubic_field(const PairState& U, const KgConfig& cfg) {
  FourierField n = lam_pow(kg_g(psi_of(U, cfg), cfg), -0.5, cfg);
  n *= cplx(0.0, -1.0 / kSqrt2);
  n.set_reality(false);
  return PairState(n);
}

double kg_hamiltonian(const FourierField& psi, const FourierField& phi, const KgConfig& cfg) {
  const auto& lat = psi.lattice();
  double quad = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double l = kg_lambda(lat.freq(i), cfg);
    quad += 0.5 * std::norm(phi[i]) + 0.5 * l * l * std::norm(psi[i]);
  }
  if (!cfg.nonlinear) return quad;
  double pot = 0.0;
  if (!cfg.F.empty()) pot += grid_mean(poly_eval(cfg.F, f_vars(psi), {0, 0, 0, 0}));
  auto G = g_monomials(cfg.G);
  if (!G.empty()) pot += grid_mean(poly_eval(G, g_vars(psi, cfg), {0, 0, 0, 0}));
  return quad + std::pow(2.0 * kPi, lat.d) * pot;
}

double kg_hamiltonian(const PairState& U, const KgConfig& cfg) {
  auto [psi, phi] = inverse_complex_transform(U, cfg.mass);
  return kg_hamiltonian(psi, phi, cfg);
}

KgParalinear kg_paralinear_symbols(const PairState& U, const KgConfig& cfg) {
  const auto& lat = U.plus.lattice();
  const int d = lat.d;
  const double m = cfg.mass;
  FourierField psi = psi_of(U, cfg);
  KgParalinear P;

  if (!cfg.F.empty()) {
    P.Fjk = second_derivatives(cfg.F, f_vars(psi), d);
  } else {
    P.Fjk.assign(d * d, cvec(lat.grid_size(), 0.0));
  }
  P.a2 = Symbol(lat, 2.0);
  P.a2t = Symbol(lat, 0.0);
  Symbol a2l(lat, 1.0);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      const cvec& c = P.Fjk[j * d + k];
      P.a2.add_term(c, [j, k](const RVec& xi) { return cplx(xi[j] * xi[k]); });
      P.a2t.add_term(c, [j, k, d, m](const RVec& xi) {
        const double l = lam_r(xi, d, m);
        return cplx(xi[j] * xi[k] / (2.0 * l * l));
      });
      a2l.add_term(c, [j, k, d, m](const RVec& xi) { return cplx(xi[j] * xi[k] / (2.0 * lam_r(xi, d, m))); });
    }
  P.a2.set_real(true);
  P.a2t.set_real(true);
  a2l.set_real(true);
  P.A1 = SymbolMatrix{a2l, a2l};

  const GeneratorSpec gs = kg_generator_spec(cfg);
  auto y = g_vars(psi, cfg);
  const std::size_t G = y[0].size();
  P.a0 = Symbol(lat, cfg.semilinear ? -1.0 : 0.0);
  for (int e = 0; e < 3; ++e) {
    const double c0 = gs.c0[e], c1 = gs.c1[e], c2 = gs.c2[e];
    if (c0 == 0.0 && c1 == 0.0 && c2 == 0.0) continue;
    cvec x(G);
    for (std::size_t g = 0; g < G; ++g) x[g] = std::pow(y[0][g].real(), 2 - e) * std::pow(y[1][g].real(), e);
    P.a0.add_term(x, [c0, c1, c2, d, m](const RVec& xi) {
      const double l = lam_r(xi, d, m);
      return cplx(c0 + c1 / std::sqrt(l) + c2 / l);
    });
  }
  P.a0.set_real(true);
  P.A0 = SymbolMatrix{P.a0, P.a0};

  P.X4 = kg_cubic_field(U, cfg);
  FourierField q3 = P.X4.plus;
  FourierField t0 = weyl_quantize(P.a0, U.plus, cfg.eps) + weyl_quantize(P.a0, U.minus, cfg.eps);
  q3 += cplx(0.0, 1.0) * t0;
  P.Q3 = PairState(q3);

  FourierField asm_p = weyl_quantize(a2l, U.plus, cfg.eps) + weyl_quantize(a2l, U.minus, cfg.eps);
  for (std::size_t i = 0; i < asm_p.size(); ++i) asm_p[i] += kg_lambda(lat.freq(i), cfg) * U.plus[i];
  asm_p *= cplx(0.0, -1.0);
  asm_p += P.X4.plus;
  P.assembled = PairState(asm_p);
  P.residual = PairState(kg_rhs_complex(U, cfg).plus - asm_p);
  return P;
}

KgDiag1 kg_diag_order1(const PairState& U, const KgConfig& cfg) {
  const auto& lat = U.plus.lattice();
  const int d = lat.d;
  const double hs = sobolev_norm(U.plus, cfg.s);
  if (hs > kSmallnessLimit)
    throw std::domain_error("amplitude outside the smallness regime: ||u||_{H^s} = " + std::to_string(hs));
  FourierField psi = psi_of(U, cfg);
  std::vector<cvec> Fjk;
  if (!cfg.F.empty())
    Fjk = second_derivatives(cfg.F, f_vars(psi), d);
  else
    Fjk.assign(d * d, cvec(lat.grid_size(), 0.0));
  const double m = cfg.mass;

  KgDiag1 D;
  D.lambda = order1_symbol(lat, Fjk, m, 0.0, [](const Order1Point& p) { return p.lam; });
  D.a2p = order1_symbol(lat, Fjk, m, 0.0, [](const Order1Point& p) { return p.a2p; });
  D.s1 = order1_symbol(lat, Fjk, m, 0.0, [](const Order1Point& p) { return p.s1; });
  D.s1m1 = order1_symbol(lat, Fjk, m, 0.0, [](const Order1Point& p) { return p.s1m1; });
  D.s2 = order1_symbol(lat, Fjk, m, 0.0, [](const Order1Point& p) { return p.s2; });
  D.S = SymbolMatrix{D.s1, D.s2};
  D.Sinv = SymbolMatrix{D.s1, D.s2.scaled(-1.0)};

  const std::size_t G = lat.grid_size();
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const IVec k = lat.freq(i);
    const RVec xi{double(k[0]), double(k[1]), double(k[2])};
    for (std::size_t g = 0; g < G; ++g) {
      const double a = a2t_at(Fjk, g, xi, d, m);
      const Order1Point p = order1_point(a);
      const double m00 = 1.0 + a, m01 = a, m10 = -a, m11 = -(1.0 + a);
      const double t00 = m00 * p.s1 + m01 * p.s2, t01 = m00 * p.s2 + m01 * p.s1;
      const double t10 = m10 * p.s1 + m11 * p.s2, t11 = m10 * p.s2 + m11 * p.s1;
      const double r00 = p.s1 * t00 - p.s2 * t10, r01 = p.s1 * t01 - p.s2 * t11;
      const double r10 = -p.s2 * t00 + p.s1 * t10, r11 = -p.s2 * t01 + p.s1 * t11;
      const double e =
          std::max({std::abs(r00 - p.lam), std::abs(r01), std::abs(r10), std::abs(r11 + p.lam)});
      D.conjugation_defect = std::max(D.conjugation_defect, e);
      D.determinant_defect = std::max(D.determinant_defect, std::abs(p.s1 * p.s1 - p.s2 * p.s2 - 1.0));
    }
  }
  return D;
}

PairState phi_kg_correction(const KgDiag1& D, const PairState& U, double eps) {
  FourierField p = weyl_quantize(D.s1m1, U.plus, eps);
  FourierField q = weyl_quantize(D.s2, U.minus, eps);
  p -= q;
  return PairState(p);
}

PairState apply_phi_kg(const KgDiag1& D, const PairState& U, double eps) {
  return PairState(U.plus + phi_kg_correction(D, U, eps).plus);
}

GeneratorSpec kg_generator_spec(const KgConfig& cfg) {
  GeneratorSpec g;
  g.model = "kg";
  g.mass = cfg.mass;
  g.eps = cfg.eps;
  for (int b = 0; b <= 4; ++b) {
    const double gb = cfg.G[b];
    if (gb == 0.0) continue;
    if (cfg.semilinear) {
      if (b <= 2) g.c2[b] += 0.5 * gb * (4 - b) * (3 - b);
      continue;
    }
    if (b >= 2) g.c0[b - 2] += 0.5 * gb * b * (b - 1);
    if (b >= 1 && b <= 3) g.c1[b - 1] += gb * b * (4 - b);
  }
  return g;
}

KgDiag0 kg_diag_order0(const PairState& W, const KgConfig& cfg) {
  KgDiag0 D;
  D.gen = kg_generator_spec(cfg);
  D.Z = generator_transform(D.gen, W, cfg.s);
  return D;
}

KgOffdiag kg_offdiag_coupling(const KgConfig& cfg, const FourierField& w, int N) {
  const auto& lat = w.lattice();
  if (lat.d != 1) throw std::invalid_argument("offdiag coupling probe is one-dimensional");
  if (N > lat.K) throw std::invalid_argument("probe mode outside the lattice");
  const GeneratorSpec gs = kg_generator_spec(cfg);
  auto lam = tabulate(lat, [&](const IVec& k) { return kg_lambda(k, cfg); });
  FieldFn x4 = [&](const PairState& U) { return kg_cubic_field(U, cfg); };
  FieldFn zc = [&](const PairState& U) { return z_cubic_field(gs, lam, x4, U); };

  const double amp = l2(w);
  PairState W(w), V(single_mode(lat, {N, 0, 0}, amp / std::sqrt(2.0 * kPi)));
  auto polar = [&](const FieldFn& F) {
    PairState p = F(PairState(w + V.plus)), q = F(PairState(w - V.plus)), r = F(V);
    FourierField out = p.plus - q.plus;
    out *= cplx(0.5);
    out -= r.plus;
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (lat.freq(i)[0] < 0) s += std::norm(out[i]);
    return std::sqrt(s) / (l2(V.plus) * amp * amp);
  };
  return {polar(x4), polar(zc)};
}

KgState step(const KgState& st, const KgConfig& cfg) {
  const double lmax = kg_lambda_max(cfg);
  if (cfg.dt <= 0.0 || cfg.dt > 0.5 / lmax * (1.0 + 1e-12))
    throw std::invalid_argument("CFL violation: dt must be in (0, 0.5/Lambda_max]");
  const auto& lat = st.U.plus.lattice();
  auto lam = tabulate(lat, [&](const IVec& k) { return kg_lambda(k, cfg); });
  FourierField u =
      ifrk4_step(st.U.plus, cfg.dt, lam, [&](const FourierField& v) { return kg_nonlinear(v, cfg); });
  return KgState{st.t + cfg.dt, PairState(u)};
}

}  // namespace qlnf
