#include "qlnf/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace qlnf {

namespace {

const cplx kI(0.0, 1.0);

double l2(const FourierField& f) { return std::sqrt(std::max(0.0, l2_inner(f, f).real())); }

double scale_d(int d) { return std::pow(2.0 * kPi, -d); }

std::string triple_str(const IVec& xi, const IVec& eta, const IVec& zeta, int d) {
  std::ostringstream os;
  auto one = [&](const IVec& k) {
    os << "(";
    for (int a = 0; a < d; ++a) os << (a ? "," : "") << k[a];
    os << ")";
  };
  os << "xi=";
  one(xi);
  os << " eta=";
  one(eta);
  os << " zeta=";
  one(zeta);
  return os.str();
}

// Visits every (xi, eta, zeta) with xi, eta, zeta and xi - eta - zeta in the lattice.
template <class F>
void for_each_triple(const FrequencyLattice& lat, F&& f) {
  const std::size_t N = lat.size();
  for (std::size_t a = 0; a < N; ++a) {
    const IVec xi = lat.freq(a);
    for (std::size_t b = 0; b < N; ++b) {
      const IVec eta = lat.freq(b);
      const IVec r = sub(xi, eta);
      for (std::size_t c = 0; c < N; ++c) {
        const IVec zeta = lat.freq(c);
        const IVec p = sub(r, zeta);
        if (!lat.contains(p)) continue;
        f(a, b, c, lat.index(p), xi, eta, zeta, p);
      }
    }
  }
}

FourierField weight(const FourierField& f, const std::function<double(const IVec&)>& w) {
  return multiplier(f, [&](const IVec& k) { return cplx(w(k)); });
}

KernelFn gauge_q(const CubicField& X) {
  auto it = X.kernels.find(Signs{1, -1, 1});
  if (it == X.kernels.end()) return [](const IVec&, const IVec&, const IVec&) { return cplx(0.0); };
  return it->second.q;
}

FourierField times_lambda(const FourierField& f, const std::vector<double>& lam, cplx c) {
  FourierField out = f;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c * lam[i];
  return out;
}

// Richardson-extrapolated central difference of F at h = 0.
FourierField richardson(const std::function<FourierField(double)>& F, double h) {
  FourierField d1 = F(h) - F(-h);
  d1 *= cplx(1.0 / (2.0 * h));
  FourierField d2 = F(0.5 * h) - F(-0.5 * h);
  d2 *= cplx(1.0 / h);
  FourierField out = d2;
  out *= cplx(4.0 / 3.0);
  d1 *= cplx(1.0 / 3.0);
  out -= d1;
  return out;
}

// Step for state-space differences along v: a relative perturbation of 1e-3.
double fd_step(const FourierField& u, const FourierField& v) {
  const double nv = l2(v);
  return nv > 0.0 ? 1e-3 * l2(u) / nv : 0.0;
}

double second_largest(double a, double b, double c) {
  double v[3] = {a, b, c};
  std::sort(v, v + 3);
  return v[1];
}

}  // namespace

FourierField TabulatedKernel::apply(const FourierField& a, const FourierField& b, const FourierField& e) const {
  FourierField out(lat);
  for (const auto& en : entries) out[en.xi] += en.c * a[en.p] * b[en.eta] * e[en.zeta];
  out *= cplx(scale_d(lat.d));
  return out;
}

cplx TabulatedKernel::form(const FourierField& a, const FourierField& b, const FourierField& e,
                           const FourierField& f) const {
  std::vector<std::size_t> neg_idx(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) neg_idx[i] = lat.index(neg(lat.freq(i)));
  cplx acc = 0.0;
  for (const auto& en : entries) acc += en.c * a[en.p] * b[en.eta] * e[en.zeta] * f[neg_idx[en.xi]];
  return acc * scale_d(lat.d);
}

TabulatedKernel tabulate_kernel(const KernelFn& q, const FrequencyLattice& lat, const TripleFilter& keep) {
  TabulatedKernel T;
  T.lat = lat;
  for_each_triple(lat, [&](std::size_t a, std::size_t b, std::size_t c, std::size_t p, const IVec& xi,
                           const IVec& eta, const IVec& zeta, const IVec&) {
    if (keep && !keep(xi, eta, zeta)) return;
    const cplx v = q(xi, eta, zeta);
    if (v == cplx(0.0)) return;
    T.entries.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(p),
                         static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c), v});
  });
  return T;
}

TabulatedKernel tabulate_resonant(const KernelFn& q, const FrequencyLattice& lat) {
  const int d = lat.d;
  const std::size_t N = lat.size();
  std::map<int, std::vector<std::size_t>> shells;
  for (std::size_t i = 0; i < N; ++i) shells[norm2(lat.freq(i), d)].push_back(i);

  TabulatedKernel T;
  T.lat = lat;
  auto push = [&](std::size_t a, std::size_t p, std::size_t b, std::size_t c) {
    const cplx v = q(lat.freq(a), lat.freq(b), lat.freq(c));
    if (v != cplx(0.0))
      T.entries.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(p),
                           static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c), v});
  };
  for (std::size_t a = 0; a < N; ++a) {
    const IVec xi = lat.freq(a);
    const int nx = norm2(xi, d);
    // |xi| = |zeta|, |eta| = |xi - eta - zeta|
    for (std::size_t c : shells[nx]) {
      const IVec r = sub(xi, lat.freq(c));
      for (std::size_t b = 0; b < N; ++b) {
        const IVec eta = lat.freq(b);
        const IVec p = sub(r, eta);
        if (!lat.contains(p) || norm2(p, d) != norm2(eta, d)) continue;
        push(a, lat.index(p), b, c);
      }
    }
    // |xi| = |xi - eta - zeta|, |eta| = |zeta|, not already counted
    for (std::size_t pi : shells[nx]) {
      const IVec r = sub(xi, lat.freq(pi));
      for (std::size_t b = 0; b < N; ++b) {
        const IVec eta = lat.freq(b);
        const IVec zeta = sub(r, eta);
        if (!lat.contains(zeta)) continue;
        const int ne = norm2(eta, d), nz = norm2(zeta, d);
        if (nz != ne) continue;
        if (nz == nx) continue;  // then |eta| = |p| too: first family
        push(a, pi, b, lat.index(zeta));
      }
    }
  }
  return T;
}

void validate_quartic(const QuarticHamiltonian& H, double tol) {
  const int d = H.lat.d;
  for_each_triple(H.lat, [&](std::size_t, std::size_t, std::size_t, std::size_t, const IVec& xi, const IVec& eta,
                             const IVec& zeta, const IVec& p) {
    const cplx h = H.h4(xi, eta, zeta);
    const double t = tol * std::max(1.0, std::abs(h));
    auto fail = [&](const char* rule) {
      throw std::invalid_argument(std::string("quartic coefficient symmetry '") + rule + "' violated at " +
                                  triple_str(xi, eta, zeta, d));
    };
    if (std::abs(h - H.h4(neg(eta), neg(xi), zeta)) > t) fail("h(xi,eta,zeta) = h(-eta,-xi,zeta)");
    if (std::abs(h - H.h4(xi, eta, p)) > t) fail("h(xi,eta,zeta) = h(xi,eta,xi-eta-zeta)");
    if (std::abs(h - std::conj(H.h4(zeta, add(zeta, sub(eta, xi)), xi))) > t)
      fail("h(xi,eta,zeta) = conj h(zeta,zeta+eta-xi,xi)");
  });
}

double quartic_value(const QuarticHamiltonian& H, const FourierField& u) {
  const auto& lat = u.lattice();
  const FourierField ub = u.conj();
  cplx acc = 0.0;
  for_each_triple(lat, [&](std::size_t a, std::size_t b, std::size_t c, std::size_t p, const IVec& xi,
                           const IVec& eta, const IVec& zeta, const IVec&) {
    (void)a;
    acc += H.h4(xi, eta, zeta) * u[p] * ub[b] * u[c] * ub.at(neg(xi));
  });
  return (acc * scale_d(lat.d)).real();
}

bool CubicField::gauge_invariant() const {
  for (const auto& [s, k] : kernels)
    if (s != Signs{1, -1, 1}) return false;
  return true;
}

FourierField CubicField::apply(const FourierField& u) const {
  FourierField out(u.lattice());
  const FourierField ub = u.conj();
  for (const auto& [s, k] : kernels)
    out += apply_trilinear(k, s[0] > 0 ? u : ub, s[1] > 0 ? u : ub, s[2] > 0 ? u : ub);
  return out;
}

FourierField QuadraticField::apply(const FourierField& u) const {
  return multiplier(u, [&](const IVec& k) { return cplx(0.0, -lambda(k)); });
}

CubicField hamiltonian_vector_field(const QuarticHamiltonian& H) {
  validate_quartic(H);
  CubicField X;
  X.lat = H.lat;
  auto h4 = H.h4;
  X.kernels[Signs{1, -1, 1}] = TrilinearKernel{
      [h4](const IVec& xi, const IVec& eta, const IVec& zeta) { return cplx(0.0, -2.0) * h4(xi, eta, zeta); }, 0.0,
      0.0};
  return X;
}

QuadraticField hamiltonian_vector_field(std::function<double(const IVec&)> lambda) {
  return QuadraticField{std::move(lambda)};
}

CubicField poisson_bracket_commutator(const CubicField& G, const QuadraticField& H) {
  CubicField out;
  out.lat = G.lat;
  const int d = G.lat.d;
  auto lam = H.lambda;
  for (const auto& [s, k] : G.kernels) {
    auto q = k.q;
    Signs sg = s;
    (void)d;
    out.kernels[s] = TrilinearKernel{[q, sg, lam](const IVec& xi, const IVec& eta, const IVec& zeta) {
                                       const IVec p = sub(sub(xi, eta), zeta);
                                       const double w = sg[0] * lam(p) + sg[1] * lam(eta) + sg[2] * lam(zeta) - lam(xi);
                                       return cplx(0.0, -w) * q(xi, eta, zeta);
                                     },
                                     k.m, k.mu};
  }
  return out;
}

CubicField poisson_bracket_commutator(const QuadraticField& G, const CubicField& H) {
  CubicField out = poisson_bracket_commutator(H, G);
  for (auto& [s, k] : out.kernels) {
    auto q = k.q;
    k.q = [q](const IVec& a, const IVec& b, const IVec& c) { return -q(a, b, c); };
  }
  return out;
}

CubicField poisson_bracket_commutator(const QuadraticField&, const QuadraticField&) { return CubicField{}; }

CubicField poisson_bracket_commutator(const CubicField&, const CubicField&) {
  throw std::invalid_argument("commutator of two cubic fields is degree five: unsupported");
}

std::pair<CubicField, CubicField> resonant_projection(const CubicField& X) {
  CubicField res, perp;
  res.lat = perp.lat = X.lat;
  const int d = X.lat.d;
  for (const auto& [s, k] : X.kernels) {
    if (s != Signs{1, -1, 1}) {
      perp.kernels[s] = k;
      continue;
    }
    auto q = k.q;
    res.kernels[s] = TrilinearKernel{[q, d](const IVec& a, const IVec& b, const IVec& c) {
                                       return is_resonant(a, b, c, d) ? q(a, b, c) : cplx(0.0);
                                     },
                                     k.m, k.mu};
    perp.kernels[s] = TrilinearKernel{[q, d](const IVec& a, const IVec& b, const IVec& c) {
                                        return is_resonant(a, b, c, d) ? cplx(0.0) : q(a, b, c);
                                      },
                                      k.m, k.mu};
  }
  return {res, perp};
}

CubicField nls_z_field(const NlsConfig& cfg) {
  const FrequencyLattice lat = cfg.lattice();
  const int d = lat.d;
  GeneratorSpec g;
  g.model = "nls";
  g.eps = cfg.eps;
  const PotentialTable V = cfg.V;
  CubicField X;
  X.lat = lat;
  X.kernels[Signs{1, -1, 1}] = TrilinearKernel{
      [g, lat, V, d](const IVec& xi, const IVec& eta, const IVec& zeta) {
        const IVec p = sub(sub(xi, eta), zeta);
        const cplx beta = 0.5 * (nls_generator_kernel(g, lat, xi, eta, zeta) + nls_generator_kernel(g, lat, xi, eta, p));
        return cplx(0.0, -1.0) - kI * omega_nls(xi, eta, zeta, V, d) * beta;
      },
      0.0, 0.0};
  return X;
}

double para_cutoff(const IVec& xi, const IVec& zeta, int d, double eps) {
  return cutoff_chi(std::sqrt(static_cast<double>(norm2(sub(xi, zeta), d))) / bracket(add(xi, zeta), d), eps);
}

TrilinearKernel b1_kernel(int d, double eps) {
  return TrilinearKernel{[d, eps](const IVec& xi, const IVec& eta, const IVec& zeta) {
                           if (is_resonant(xi, eta, zeta, d)) return cplx(0.0);
                           return cplx(0.0, -2.0 * para_cutoff(xi, zeta, d, eps));
                         },
                         0.0, 0.0};
}

std::map<std::string, double> CancellationReport::as_map() const {
  return {{"resonant_sobolev", resonant_sobolev},
          {"superaction", superaction},
          {"b1_energy", b1_energy},
          {"b1_antisymmetry", b1_antisymmetry},
          {"F_symmetrization", F_symmetrization}};
}

bool CancellationReport::pass(double tol) const {
  for (const auto& [k, v] : as_map())
    if (!(std::abs(v) <= tol)) return false;
  return true;
}

CancellationReport cancellation_suite(const CubicField& X, const FourierField& z, const FourierField& zn, double n,
                                      double eps) {
  const auto& lat = z.lattice();
  const int d = lat.d;
  const KernelFn f = gauge_q(X);
  CancellationReport rep;

  const TabulatedKernel S = tabulate_resonant(f, lat);
  const FourierField xr = S.apply(z, z.conj(), z);
  auto rel = [](const FourierField& a, const FourierField& b) {
    const double s = l2(a) * l2(b);
    return s > 0.0 ? l2_inner(a, b).real() / s : 0.0;
  };
  auto bracket_n = [&](const IVec& k) { return std::pow(bracket(k, d), n); };
  auto top_n = [&](const IVec& k) { return std::pow(static_cast<double>(norm2(k, d)), n); };
  rep.resonant_sobolev = rel(weight(xr, bracket_n), weight(z, bracket_n));
  rep.superaction = rel(weight(xr, top_n), weight(z, top_n));
  rep.b1_energy = rel(apply_trilinear(b1_kernel(d, eps), z, z.conj(), zn), zn);

  const TrilinearKernel b1 = b1_kernel(d, eps);
  for_each_triple(lat, [&](std::size_t, std::size_t, std::size_t, std::size_t, const IVec& xi, const IVec& eta,
                           const IVec& zeta, const IVec&) {
    const cplx v = b1.q(xi, eta, zeta) + std::conj(b1.q(zeta, add(zeta, sub(eta, xi)), xi));
    rep.b1_antisymmetry = std::max(rep.b1_antisymmetry, std::abs(v));
  });

  auto F = [&](const IVec& xi, const IVec& eta, const IVec& zeta) {
    return f(xi, eta, zeta) + f(xi, eta, sub(sub(xi, eta), zeta));
  };
  for (const auto& e : S.entries) {
    const IVec xi = lat.freq(e.xi), eta = lat.freq(e.eta), zeta = lat.freq(e.zeta), p = lat.freq(e.p);
    if (norm2(xi, d) != norm2(zeta, d) || norm2(eta, d) != norm2(p, d)) continue;
    const cplx v = F(xi, eta, zeta) + std::conj(F(zeta, add(zeta, sub(eta, xi)), xi));
    rep.F_symmetrization = std::max(rep.F_symmetrization, std::abs(v));
  }
  return rep;
}

double resonant_pairing_bruteforce(const CubicField& X, const FourierField& z, double n) {
  const auto& lat = z.lattice();
  const int d = lat.d;
  const KernelFn f = gauge_q(X);
  const FourierField zb = z.conj();
  cplx acc = 0.0;
  for_each_triple(lat, [&](std::size_t a, std::size_t b, std::size_t c, std::size_t p, const IVec& xi,
                           const IVec& eta, const IVec& zeta, const IVec&) {
    if (!is_resonant(xi, eta, zeta, d)) return;
    acc += std::pow(bracket(xi, d), 2.0 * n) * f(xi, eta, zeta) * z[p] * zb[b] * z[c] * std::conj(z[a]);
  });
  return (acc * scale_d(d)).real();
}

std::map<int, double> super_actions(const FourierField& z) {
  const auto& lat = z.lattice();
  std::map<int, double> I;
  for (std::size_t i = 0; i < z.size(); ++i) I[norm2(lat.freq(i), lat.d)] += std::norm(z[i]);
  return I;
}

SuperActionReport resonant_flow_superactions(const CubicField& X, const FourierField& z0, double dt, double T) {
  const TabulatedKernel S = tabulate_resonant(gauge_q(X), z0.lattice());
  auto rhs = [&](const FourierField& z) { return S.apply(z, z.conj(), z); };
  auto axpy = [](const FourierField& a, double h, const FourierField& b) {
    FourierField o = a;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += h * b[i];
    return o;
  };
  const auto I0 = super_actions(z0);
  SuperActionReport rep;
  rep.resonant_triples = S.entries.size();
  for (const auto& [p, v] : I0)
    if (v > 0.0) ++rep.shells;
  FourierField z = z0;
  const int steps = static_cast<int>(std::llround(T / dt));
  for (int s = 0; s < steps; ++s) {
    FourierField k1 = rhs(z), k2 = rhs(axpy(z, 0.5 * dt, k1)), k3 = rhs(axpy(z, 0.5 * dt, k2)),
                 k4 = rhs(axpy(z, dt, k3));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (const auto& [p, v] : super_actions(z)) {
      const double v0 = I0.at(p);
      if (v0 > 0.0) rep.max_relative_drift = std::max(rep.max_relative_drift, std::abs(v - v0) / v0);
    }
  }
  return rep;
}

TrilinearKernel build_B2_kernel(const CubicField& X, double n, double eps) {
  const KernelFn f = gauge_q(X);
  const int d = X.lat.d;
  return TrilinearKernel{[f, n, eps, d](const IVec& xi, const IVec& eta, const IVec& zeta) {
                           if (is_resonant(xi, eta, zeta, d)) return cplx(0.0);
                           const IVec p = sub(sub(xi, eta), zeta);
                           const double wx = std::pow(static_cast<double>(norm2(xi, d)), n);
                           const double wz = std::pow(static_cast<double>(norm2(zeta, d)), n);
                           const double cz = para_cutoff(xi, zeta, d, eps), cp = para_cutoff(xi, p, d, eps);
                           const cplx c2 = cplx(0.0, -2.0 * cz) * (wx - wz);
                           const cplx c3 = wx * (f(xi, eta, zeta) + kI * (cz + cp));
                           return c2 + c3;
                         },
                         1.0, 4.0};
}

TrilinearKernel build_B2_kernel(const NlsConfig& cfg) { return build_B2_kernel(nls_z_field(cfg), cfg.n(), cfg.eps); }

EnvelopeReport b2_envelope_scan(NlsConfig cfg, std::vector<int> Ks) {
  EnvelopeReport rep;
  rep.Ks = Ks;
  const double n = cfg.n();
  for (int K : Ks) {
    cfg.K = K;
    const FrequencyLattice lat = cfg.lattice();
    const int d = lat.d;
    const TrilinearKernel b2 = build_B2_kernel(cfg);
    double worst = 0.0;
    for_each_triple(lat, [&](std::size_t, std::size_t, std::size_t, std::size_t, const IVec& xi, const IVec& eta,
                             const IVec& zeta, const IVec& p) {
      const cplx v = b2.q(xi, eta, zeta);
      if (v == cplx(0.0)) return;
      const double np = std::sqrt(double(norm2(p, d))), ne = std::sqrt(double(norm2(eta, d))),
                   nz = std::sqrt(double(norm2(zeta, d)));
      const double max1 = std::max({bracket(p, d), bracket(eta, d), bracket(zeta, d)});
      const double m2 = std::sqrt(1.0 + std::pow(second_largest(np, ne, nz), 2));
      const double env = std::pow(bracket(xi, d), 2.0 * n) * std::pow(m2, 4) / max1;
      worst = std::max(worst, std::abs(v) / env);
    });
    rep.ratios.push_back(worst);
  }
  for (std::size_t i = 1; i < rep.ratios.size(); ++i) {
    const double growth = std::log(rep.ratios[i] / rep.ratios[i - 1]) / std::log(double(Ks[i]) / Ks[i - 1]);
    if (std::pow(2.0, growth) >= 1.5) rep.bounded = false;
  }
  return rep;
}

double split_omega(const IVec& xi, const IVec& eta, const IVec& zeta, const SplitParams& p, int d) {
  if (p.model == "nls") return omega_nls(xi, eta, zeta, p.V, d);
  if (p.model == "kg") return omega_kg(xi, eta, zeta, p.signs, p.mass, d);
  throw std::invalid_argument("model must be nls or kg");
}

NormalFormSplit normal_form_split(const TrilinearKernel& kernel, const FrequencyLattice& lat, int N,
                                  const SplitParams& p) {
  if (N < 1) throw std::invalid_argument("threshold N must be >= 1");
  const int d = lat.d;
  const bool kg = p.model == "kg";
  if (!kg && p.model != "nls") throw std::invalid_argument("model must be nls or kg");
  auto resonant = [kg, p, d](const IVec& a, const IVec& b, const IVec& c) {
    return kg ? is_resonant_signed(a, b, c, p.signs, d) : is_resonant(a, b, c, d);
  };
  const long long N2 = N == kNoThreshold ? -1 : static_cast<long long>(N) * N;
  auto low = [N2, d](const IVec& a, const IVec& b, const IVec& c) {
    if (N2 < 0) return true;
    const IVec q = sub(sub(a, b), c);
    return std::max({norm2(q, d), norm2(b, d), norm2(c, d)}) <= N2;
  };

  for_each_triple(lat, [&](std::size_t, std::size_t, std::size_t, std::size_t, const IVec& xi, const IVec& eta,
                           const IVec& zeta, const IVec&) {
    const cplx v = kernel.q(xi, eta, zeta);
    if (resonant(xi, eta, zeta)) {
      if (std::abs(v) > p.zero_tol)
        throw std::invalid_argument("kernel does not vanish on the resonant set at " + triple_str(xi, eta, zeta, d));
      return;
    }
    if (!low(xi, eta, zeta)) return;
    if (std::abs(split_omega(xi, eta, zeta, p, d)) <= p.zero_tol)
      throw std::domain_error("zero divisor off the resonant set at " + triple_str(xi, eta, zeta, d));
  });

  NormalFormSplit S;
  S.N = N;
  auto q = kernel.q;
  S.b1 = TrilinearKernel{[q, low](const IVec& a, const IVec& b, const IVec& c) {
                           return low(a, b, c) ? q(a, b, c) : cplx(0.0);
                         },
                         kernel.m, kernel.mu};
  S.b2 = TrilinearKernel{[q, low](const IVec& a, const IVec& b, const IVec& c) {
                           return low(a, b, c) ? cplx(0.0) : q(a, b, c);
                         },
                         kernel.m, kernel.mu};
  S.t_lo = TrilinearKernel{[q, low, resonant, p, d](const IVec& a, const IVec& b, const IVec& c) {
                             if (!low(a, b, c) || resonant(a, b, c)) return cplx(0.0);
                             return -q(a, b, c) / (kI * split_omega(a, b, c, p, d));
                           },
                           kernel.m, kernel.mu};
  return S;
}

IbpReport ibp_identity_check(const NlsConfig& cfg, const FourierField& z0, int N, double T, int steps) {
  if (steps < 2 || steps % 2) throw std::invalid_argument("steps must be even");
  const FrequencyLattice lat = cfg.lattice();
  const int d = lat.d;
  const double n = cfg.n();
  const TrilinearKernel b2 = build_B2_kernel(cfg);
  auto wn = [n, d](const IVec& k) { return std::pow(static_cast<double>(norm2(k, d)), n); };
  // Quartic kernel of B(t) = 2 Re(B2(z), |D|^{2n} z) in the (z, zbar, z, zbar) form.
  KernelFn kfull = [&](const IVec& xi, const IVec& eta, const IVec& zeta) {
    return wn(xi) * b2.q(xi, eta, zeta) + std::conj(wn(zeta) * b2.q(zeta, add(zeta, sub(eta, xi)), xi));
  };
  SplitParams sp;
  sp.V = cfg.V;
  TrilinearKernel kq{kfull, 0.0, 0.0};
  // the resonant part of kfull vanishes, so the split only needs the low block
  const NormalFormSplit S = normal_form_split(kq, lat, N, sp);
  const TabulatedKernel K1 = tabulate_kernel(S.b1.q, lat), Tt = tabulate_kernel(S.t_lo.q, lat);
  const TabulatedKernel X3 = tabulate_kernel(gauge_q(nls_z_field(cfg)), lat);

  auto lam = tabulate(lat, [&](const IVec& k) { return nls_dispersion(k, cfg); });
  auto R = [&](const FourierField& z) { return X3.apply(z, z.conj(), z); };
  auto b1_val = [&](const FourierField& z) {
    const FourierField zb = z.conj();
    return K1.form(z, zb, z, zb);
  };
  auto slots = [&](const FourierField& z) {
    const FourierField zb = z.conj(), r = R(z), rb = r.conj();
    return Tt.form(r, zb, z, zb) + Tt.form(z, rb, z, zb) + Tt.form(z, zb, r, zb) + Tt.form(z, zb, z, rb);
  };
  auto Q = [&](const FourierField& z) {
    const FourierField zb = z.conj();
    return Tt.form(z, zb, z, zb);
  };

  const double h = T / steps;
  FourierField z = z0;
  cplx int_b1 = 0.0, int_slots = 0.0;
  const cplx q0 = Q(z0);
  for (int s = 0; s <= steps; ++s) {
    const double w = (s == 0 || s == steps) ? 1.0 : (s % 2 ? 4.0 : 2.0);
    int_b1 += w * b1_val(z);
    int_slots += w * slots(z);
    if (s < steps) z = ifrk4_step(z, h, lam, R);
  }
  int_b1 *= h / 3.0;
  int_slots *= h / 3.0;
  const cplx rhs = Q(z) - q0 - int_slots;
  IbpReport rep;
  rep.lhs = int_b1.real();
  rep.rhs = rhs.real();
  rep.residual = std::abs(int_b1 - rhs);
  rep.scale = std::abs(int_b1) + std::abs(Q(z)) + std::abs(q0) + std::abs(int_slots);
  return rep;
}

EnergyTerms nls_energy_terms(const NlsState& st, const NlsConfig& cfg, const TabulatedKernel* b2) {
  const PairState& U = st.U;
  const auto& lat = U.plus.lattice();
  const int d = lat.d;
  const double n = cfg.n();
  GeneratorSpec g;
  g.model = "nls";
  g.eps = cfg.eps;
  const auto lam = tabulate(lat, [&](const IVec& k) { return nls_dispersion(k, cfg); });
  auto top = [&](const FourierField& f) {
    return multiplier(f, [&](const IVec& k) { return cplx(std::pow(static_cast<double>(norm2(k, d)), n)); });
  };

  EnergyTerms E;
  E.t = st.t;
  if (!cfg.nonlinear) {
    // every transform is the identity; the flow preserves ||z_n||
    const FourierField zn = top(U.plus);
    E.norm2 = l2_inner(zn, zn).real();
    return E;
  }

  const NlsDiag2 D2 = diag_order2(U, cfg);
  const PairState dphi = phi_nls_correction(D2, U, cfg.eps);
  const PairState W(U.plus + dphi.plus);
  const PairState Z = generator_transform(g, W, cfg.s);
  const FourierField& z = Z.plus;
  const FourierField zn = energy_variable(Z, D2, cfg).zn;
  const FourierField Udot = nls_rhs(U, cfg).plus;
  const double h = fd_step(U.plus, Udot);

  FourierField ddphi(lat), dc(lat);
  if (h > 0.0) {
    ddphi = richardson(
        [&](double t) {
          const PairState Ut(U.plus + cplx(t) * Udot);
          return phi_nls_correction(diag_order2(Ut, cfg), Ut, cfg.eps).plus;
        },
        h);
    dc = richardson(
        [&](double t) { return nls_energy_correction(z, diag_order2(PairState(U.plus + cplx(t) * Udot), cfg), cfg); },
        h);
  }
  const FourierField Wdot = Udot + ddphi;
  // z' + i Lambda z, assembled from pieces that are each small.
  FourierField R = nls_nonlinear(U.plus, cfg) + ddphi + times_lambda(dphi.plus, lam, kI);
  R += generator_tangent(g, W, PairState(Wdot)).plus;
  R += times_lambda(generator_field(g, W).plus, lam, kI);

  auto Tc = [&](const FourierField& v) { return nls_energy_correction(v, D2, cfg); };
  FourierField comm = Tc(times_lambda(z, lam, 1.0)) - times_lambda(Tc(z), lam, 1.0);
  comm *= cplx(0.0, -1.0);
  const FourierField zn_dot_small = top(R) + Tc(R) + dc + comm;

  E.norm2 = l2_inner(zn, zn).real();
  E.D = 2.0 * l2_inner(zn_dot_small, zn).real();
  TabulatedKernel local;
  if (!b2) {
    local = tabulate_kernel(build_B2_kernel(cfg).q, lat);
    b2 = &local;
  }
  E.B = 2.0 * l2_inner(b2->apply(z, z.conj(), z), top(z)).real();
  return E;
}

EnergyTerms kg_energy_terms(const KgState& st, const KgConfig& cfg) {
  const PairState& U = st.U;
  const auto& lat = U.plus.lattice();
  const double n = cfg.n();
  const GeneratorSpec g = kg_generator_spec(cfg);
  const auto lam = tabulate(lat, [&](const IVec& k) { return kg_lambda(k, cfg); });
  auto weight_n = [&](const FourierField& f) {
    FourierField o = f;
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= std::pow(lam[i], n);
    return o;
  };

  EnergyTerms E;
  E.t = st.t;
  if (!cfg.nonlinear) {
    const FourierField zn = weight_n(U.plus);
    E.norm2 = l2_inner(zn, zn).real();
    return E;
  }

  const KgDiag1 D1 = kg_diag_order1(U, cfg);
  const PairState dphi = phi_kg_correction(D1, U, cfg.eps);
  const PairState W(U.plus + dphi.plus);
  const PairState Z = generator_transform(g, W, cfg.s);
  const FourierField zn = weight_n(Z.plus);
  const FourierField Udot = kg_rhs_complex(U, cfg).plus;
  const double h = fd_step(U.plus, Udot);

  FourierField ddphi(lat);
  if (h > 0.0)
    ddphi = richardson(
        [&](double t) {
          const PairState Ut(U.plus + cplx(t) * Udot);
          return phi_kg_correction(kg_diag_order1(Ut, cfg), Ut, cfg.eps).plus;
        },
        h);
  const FourierField Wdot = Udot + ddphi;
  FourierField R = kg_nonlinear(U.plus, cfg) + ddphi + times_lambda(dphi.plus, lam, kI);
  R += generator_tangent(g, W, PairState(Wdot)).plus;
  R += times_lambda(generator_field(g, W).plus, lam, kI);

  FieldFn x4 = [&](const PairState& V) { return kg_cubic_field(V, cfg); };
  const FourierField X3 = z_cubic_field(g, lam, x4, Z).plus;

  E.norm2 = l2_inner(zn, zn).real();
  E.D = 2.0 * l2_inner(weight_n(R), zn).real();
  E.B = 2.0 * l2_inner(weight_n(X3), zn).real();
  return E;
}

std::string EnergyLedger::csv(const std::string& header_comment) const {
  std::ostringstream os;
  if (!header_comment.empty()) os << header_comment;
  os << "t,d_norm2_dt,B,B_gt5,closure_residual\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.d_norm2_dt, r.B, r.B_gt5, r.closure);
    os << buf;
  }
  return os.str();
}

namespace {

template <class State, class Terms>
EnergyLedger ledger_from(const std::vector<State>& snaps, double dt, Terms&& terms) {
  if (snaps.size() < 3) throw std::invalid_argument("ledger needs at least three snapshots");
  const double h = snaps[1].t - snaps[0].t;
  if (!(h > 0.0)) throw std::invalid_argument("snapshot times must increase");
  for (std::size_t i = 1; i < snaps.size(); ++i)
    if (std::abs(snaps[i].t - snaps[i - 1].t - h) > 1e-9 * h)
      throw std::invalid_argument("snapshots must be equally spaced");
  if (h > 10.0 * dt * (1.0 + 1e-12)) throw std::invalid_argument("snapshot spacing exceeds 10 dt");
  std::vector<EnergyTerms> E;
  for (const auto& s : snaps) E.push_back(terms(s));
  EnergyLedger L;
  L.dt_out = h;
  for (std::size_t i = 1; i + 1 < E.size(); ++i) {
    LedgerRow r;
    r.t = E[i].t;
    r.d_norm2_dt = (E[i + 1].norm2 - E[i - 1].norm2) / (2.0 * h);
    r.B = E[i].B;
    r.B_gt5 = E[i].D - E[i].B;
    r.closure = r.d_norm2_dt - (r.B + r.B_gt5);
    L.rows.push_back(r);
  }
  return L;
}

}  // namespace

EnergyLedger energy_decomposition(const std::vector<NlsState>& snaps, const NlsConfig& cfg) {
  TabulatedKernel b2;
  if (!snaps.empty()) b2 = tabulate_kernel(build_B2_kernel(cfg).q, snaps.front().U.plus.lattice());
  return ledger_from(snaps, cfg.dt, [&](const NlsState& s) { return nls_energy_terms(s, cfg, &b2); });
}

EnergyLedger energy_decomposition(const std::vector<KgState>& snaps, const KgConfig& cfg) {
  return ledger_from(snaps, cfg.dt, [&](const KgState& s) { return kg_energy_terms(s, cfg); });
}

}  // namespace qlnf
