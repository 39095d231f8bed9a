#include "qlnf/nls.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qlnf {

namespace {

cvec grid_conj(const cvec& g) {
  cvec r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = std::conj(g[i]);
  return r;
}

double xi2(const RVec& xi, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) s += xi[j] * xi[j];
  return s;
}

Symbol::XiFn xi_sq(int d) {
  return [d](const RVec& xi) { return cplx(xi2(xi, d)); };
}

Symbol::XiFn xi_comp(int j) {
  return [j](const RVec& xi) { return cplx(xi[j]); };
}

}  // namespace

void validate(const NlsConfig& cfg) {
  if (cfg.h_kind != "tau_squared")
    throw std::invalid_argument("unsupported h: only tau_squared is built in (got '" + cfg.h_kind + "')");
  if (cfg.d < 1 || cfg.d > 3 || cfg.K < 1) throw std::invalid_argument("bad NLS lattice");
  if (cfg.V.enabled && cfg.V.d != cfg.d) throw std::invalid_argument("potential dimension mismatch");
  if (cfg.V.enabled && cfg.V.K < cfg.K) throw std::invalid_argument("potential table smaller than lattice");
}

double nls_dispersion(const IVec& k, const NlsConfig& cfg) {
  return static_cast<double>(norm2(k, cfg.d)) + cfg.V(k);
}

double nls_lambda_max(const NlsConfig& cfg) {
  return static_cast<double>(cfg.K) * cfg.K * cfg.d + cfg.V.max_abs();
}

FourierField nls_nonlinear(const FourierField& u, const NlsConfig& cfg) {
  const auto& lat = u.lattice();
  if (!cfg.nonlinear) return FourierField(lat);
  cvec g = to_grid(u);
  const std::size_t G = g.size();
  cvec h(G), tau(G);
  for (std::size_t i = 0; i < G; ++i) {
    tau[i] = std::norm(g[i]);
    h[i] = tau[i] * tau[i];
  }
  cvec lap = grid_laplacian(h, lat);
  cvec term(G);
  for (std::size_t i = 0; i < G; ++i) term[i] = (lap[i] * 2.0 * tau[i] - tau[i]) * g[i];
  FourierField n = from_grid(term, lat);
  n *= cplx(0.0, 1.0);
  return n;
}

PairState nls_rhs(const PairState& U, const NlsConfig& cfg) {
  FourierField p = nls_nonlinear(U.plus, cfg);
  const auto& lat = p.lattice();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += cplx(0.0, -nls_dispersion(lat.freq(i), cfg)) * U.plus[i];
  return PairState(p);
}

double nls_hamiltonian(const PairState& U, const NlsConfig& cfg) {
  const FourierField& u = U.plus;
  const auto& lat = u.lattice();
  double quad = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) quad += nls_dispersion(lat.freq(i), cfg) * std::norm(u[i]);
  if (!cfg.nonlinear) return quad;
  cvec g = to_grid(u);
  const std::size_t G = g.size();
  cvec h(G), dens(G, cplx(0.0));
  for (std::size_t i = 0; i < G; ++i) h[i] = std::norm(g[i]) * std::norm(g[i]);
  for (int j = 0; j < lat.d; ++j) {
    cvec dh = grid_derivative(h, lat, j);
    for (std::size_t i = 0; i < G; ++i) dens[i] += std::norm(dh[i]);
  }
  for (std::size_t i = 0; i < G; ++i) dens[i] = 0.5 * (dens[i] + h[i]);
  return quad + std::pow(2.0 * kPi, lat.d) * grid_mean(dens);
}

double nls_mass(const PairState& U) {
  double m = 0.0;
  for (std::size_t i = 0; i < U.plus.size(); ++i) m += std::norm(U.plus[i]);
  return m;
}

NlsParalinear nls_paralinear_symbols(const PairState& U, const NlsConfig& cfg) {
  const FourierField& u = U.plus;
  const auto& lat = u.lattice();
  const int d = lat.d;
  cvec g = to_grid(u);
  const std::size_t G = g.size();

  NlsParalinear P;
  P.a2_samples.resize(G);
  P.b2_samples.resize(G);
  cvec hp2(G), cubic(G);
  for (std::size_t i = 0; i < G; ++i) {
    double tau = std::norm(g[i]);
    double hp = 2.0 * tau;
    hp2[i] = hp * hp;
    P.a2_samples[i] = hp * hp * tau;
    P.b2_samples[i] = hp * hp * g[i] * g[i];
    cubic[i] = tau * g[i];
  }
  P.a2 = Symbol::function(lat, P.a2_samples, true);
  P.b2 = Symbol::function(lat, P.b2_samples);
  P.a1 = Symbol(lat, 1.0);
  P.a1.set_real(true);
  for (int j = 0; j < d; ++j) {
    cvec dg = grid_derivative(g, lat, j);
    cvec c(G);
    for (std::size_t i = 0; i < G; ++i) c[i] = hp2[i] * std::imag(g[i] * std::conj(dg[i]));
    P.a1_samples.push_back(c);
    P.a1.add_term(c, xi_comp(j));
  }
  P.A2 = SymbolMatrix{P.a2, P.b2};

  FourierField x4 = from_grid(cubic, lat);
  x4 *= cplx(0.0, -1.0);
  P.X4 = PairState(x4);

  Symbol a2xi(lat, 2.0), b2xi(lat, 2.0);
  a2xi.add_term(P.a2_samples, xi_sq(d));
  a2xi.set_real(true);
  b2xi.add_term(P.b2_samples, xi_sq(d));
  FourierField asm_p = weyl_quantize(a2xi, u, cfg.eps);
  asm_p += weyl_quantize(b2xi, U.minus, cfg.eps);
  asm_p += weyl_quantize(P.a1, u, cfg.eps);
  for (std::size_t i = 0; i < u.size(); ++i) asm_p[i] += nls_dispersion(lat.freq(i), cfg) * u[i];
  asm_p *= cplx(0.0, -1.0);
  asm_p += x4;
  P.assembled = PairState(asm_p);

  PairState rhs = nls_rhs(U, cfg);
  P.residual = PairState(rhs.plus - asm_p);
  return P;
}

NlsDiag2 diag_order2(const PairState& U, const NlsConfig& cfg) {
  const FourierField& u = U.plus;
  const auto& lat = u.lattice();
  const int d = lat.d;
  const double hs = sobolev_norm(u, cfg.s);
  if (hs > kSmallnessLimit)
    throw std::domain_error("amplitude outside the smallness regime: ||u||_{H^s} = " + std::to_string(hs));
  cvec g = to_grid(u);
  const std::size_t G = g.size();

  NlsDiag2 D;
  D.lambda.resize(G);
  D.a2p.resize(G);
  D.s1.resize(G);
  D.s1m1.resize(G);
  D.s2.resize(G);
  cvec a2(G), b2(G);
  for (std::size_t i = 0; i < G; ++i) {
    double tau = std::norm(g[i]);
    double hp = 2.0 * tau;
    a2[i] = hp * hp * tau;
    b2[i] = hp * hp * g[i] * g[i];
    double a = a2[i].real();
    double lam = std::sqrt(1.0 + 2.0 * a);
    double den = 1.0 + a + lam;
    double q = 2.0 * lam * den;
    double s1sq_m1 = a * a / q;  // (1+a2)^2 - lambda^2 = a2^2
    double s1 = std::sqrt(1.0 + s1sq_m1);
    D.lambda[i] = lam;
    D.a2p[i] = 2.0 * a / (lam + 1.0);
    D.s1[i] = s1;
    D.s1m1[i] = s1sq_m1 / (s1 + 1.0);
    D.s2[i] = -b2[i] / std::sqrt(q);

    // pointwise algebra checks
    cplx m00 = 1.0 + a, m01 = b2[i], m10 = -std::conj(b2[i]), m11 = -(1.0 + a);
    cplx S00 = s1, S01 = D.s2[i], S10 = std::conj(D.s2[i]), S11 = s1;
    cplx I00 = s1, I01 = -D.s2[i], I10 = -std::conj(D.s2[i]), I11 = s1;
    cplx t00 = m00 * S00 + m01 * S10, t01 = m00 * S01 + m01 * S11;
    cplx t10 = m10 * S00 + m11 * S10, t11 = m10 * S01 + m11 * S11;
    cplx r00 = I00 * t00 + I01 * t10, r01 = I00 * t01 + I01 * t11;
    cplx r10 = I10 * t00 + I11 * t10, r11 = I10 * t01 + I11 * t11;
    double e = std::max({std::abs(r00 - lam), std::abs(r01), std::abs(r10), std::abs(r11 + lam)});
    D.conjugation_defect = std::max(D.conjugation_defect, e);
    D.determinant_defect = std::max(D.determinant_defect, std::abs(s1 * s1 - std::norm(D.s2[i]) - 1.0));
  }

  cvec s2c = grid_conj(D.s2);
  for (int j = 0; j < d; ++j) {
    cvec dg = grid_derivative(g, lat, j);
    cvec ds1 = grid_derivative(D.s1m1, lat, j);
    cvec ds2c = grid_derivative(s2c, lat, j);
    cvec c(G);
    for (std::size_t i = 0; i < G; ++i) {
      cplx t = D.s2[i] * std::conj(b2[i]) * ds1[i] + (D.s1[i] * b2[i] + D.s2[i] * (1.0 + a2[i])) * ds2c[i];
      double tau = std::norm(g[i]);
      double a1 = 4.0 * tau * tau * std::imag(g[i] * std::conj(dg[i]));
      c[i] = a1 + 2.0 * t.imag();
    }
    D.a1p.push_back(c);
  }

  D.S = SymbolMatrix{Symbol::function(lat, D.s1, true), Symbol::function(lat, D.s2)};
  cvec ms2(G);
  for (std::size_t i = 0; i < G; ++i) ms2[i] = -D.s2[i];
  D.Sinv = SymbolMatrix{Symbol::function(lat, D.s1, true), Symbol::function(lat, ms2)};
  return D;
}

FourierField nls_offdiag_action(const NlsDiag2& D, const PairState& U, const FourierField& wbar,
                                const NlsConfig& cfg) {
  const auto& lat = U.plus.lattice();
  const int d = lat.d;
  NlsParalinear P = nls_paralinear_symbols(U, cfg);
  Symbol top = Symbol::multiplier(lat, xi_sq(d), 2.0);
  top.add_term(P.a2_samples, xi_sq(d));
  top.set_real(true);
  Symbol off(lat, 2.0);
  off.add_term(P.b2_samples, xi_sq(d));
  SymbolMatrix M{top, off};

  PairState V(FourierField(lat), wbar);
  PairState x = matrix_quantize(D.S, V, cfg.eps);
  x = matrix_quantize(M, x, cfg.eps);
  x.minus *= cplx(-1.0);
  x = matrix_quantize(D.Sinv, x, cfg.eps);
  return x.plus;
}

PairState phi_nls_correction(const NlsDiag2& D, const PairState& U, double eps) {
  const auto& lat = U.plus.lattice();
  cvec ms2(D.s2.size());
  for (std::size_t i = 0; i < ms2.size(); ++i) ms2[i] = -D.s2[i];
  FourierField p = weyl_quantize(Symbol::function(lat, D.s1m1, true), U.plus, eps);
  p += weyl_quantize(Symbol::function(lat, ms2), U.minus, eps);
  return PairState(p);
}

PairState apply_phi_nls(const NlsDiag2& D, const PairState& U, double eps) {
  PairState c = phi_nls_correction(D, U, eps);
  return PairState(U.plus + c.plus);
}

namespace {

Symbol ln_minus_top_symbol(const FrequencyLattice& lat, const NlsDiag2& D, double n) {
  const int d = lat.d;
  cvec a2p = D.a2p;
  std::vector<cvec> a1p = D.a1p;
  Symbol s = Symbol::general(
      lat, 2.0 * n,
      [a2p, a1p, d, n](const RVec& xi, cvec& out) {
        double r2 = xi2(xi, d);
        if (r2 == 0.0) return;
        double top = std::pow(r2, n);
        for (std::size_t g = 0; g < out.size(); ++g) {
          double sig = a2p[g].real() * r2;
          for (int j = 0; j < d; ++j) sig += a1p[j][g].real() * xi[j];
          out[g] += top * std::expm1(n * std::log1p(sig / r2));
        }
      },
      true);
  return s;
}

}  // namespace

FourierField nls_energy_correction(const FourierField& z, const NlsDiag2& D, const NlsConfig& cfg) {
  return weyl_quantize(ln_minus_top_symbol(z.lattice(), D, cfg.n()), z, cfg.eps);
}

EnergyVariable energy_variable(const PairState& Z, const NlsDiag2& D, const NlsConfig& cfg) {
  const auto& lat = Z.plus.lattice();
  const int d = lat.d;
  const double n = cfg.n();
  EnergyVariable E;
  E.Sigma = Symbol(lat, 2.0);
  E.Sigma.add_term(D.a2p, xi_sq(d));
  for (int j = 0; j < d; ++j) E.Sigma.add_term(D.a1p[j], xi_comp(j));
  E.Sigma.set_real(true);
  E.L = Symbol::multiplier(lat, xi_sq(d), 2.0) + E.Sigma;
  E.L.set_real(true);
  E.Ln_minus_top = ln_minus_top_symbol(lat, D, n);
  E.zn = multiplier(Z.plus, [&](const IVec& k) { return cplx(std::pow(double(norm2(k, d)), n)); });
  E.zn += weyl_quantize(E.Ln_minus_top, Z.plus, cfg.eps);
  return E;
}

NlsState step(const NlsState& st, const NlsConfig& cfg) {
  const double lmax = nls_lambda_max(cfg);
  if (cfg.dt <= 0.0 || cfg.dt > 0.5 / lmax * (1.0 + 1e-12))
    throw std::invalid_argument("CFL violation: dt must be in (0, 0.5/Lambda_max]");
  const auto& lat = st.U.plus.lattice();
  auto lam = tabulate(lat, [&](const IVec& k) { return nls_dispersion(k, cfg); });
  FourierField u = ifrk4_step(st.U.plus, cfg.dt, lam, [&](const FourierField& v) { return nls_nonlinear(v, cfg); });
  return NlsState{st.t + cfg.dt, PairState(u)};
}

}  // namespace qlnf
