#include "qlnf/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace qlnf {

namespace {

bool is_kg(const GeneratorSpec& g) {
  if (g.model == "kg") return true;
  if (g.model == "nls") return false;
  throw std::invalid_argument("generator model must be nls or kg");
}

double lam_kg(double k2, double m) { return std::sqrt(k2 + m); }

double norm2r(const RVec& x, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += x[i] * x[i];
  return s;
}

// beta(p1, p2, mu) without the outer chi_W and the inner cutoffs.
double beta_core(const GeneratorSpec& g, const IVec& p1, const IVec& p2, const RVec& mu, int d) {
  if (!is_kg(g)) {
    double m2 = norm2r(mu, d);
    return m2 > 0 ? 1.0 / (2.0 * m2) : 0.0;
  }
  const double l1 = lam_kg(norm2(p1, d), g.mass), l2 = lam_kg(norm2(p2, d), g.mass);
  const double lm = lam_kg(norm2r(mu, d), g.mass);
  const double wt[3] = {1.0, 0.5 * (std::sqrt(l1) + std::sqrt(l2)), std::sqrt(l1 * l2)};
  double acc = 0;
  for (int e = 0; e < 3; ++e) acc += (g.c0[e] + g.c1[e] / std::sqrt(lm) + g.c2[e] / lm) * wt[e];
  return 0.5 / std::sqrt(l1 * l2) * acc / (2.0 * lm);
}

struct Enumerated {
  cplx q;
  cvec gA, gB;       // dQ/dA(p) and dQ/dwbar(m)
};

Enumerated enumerate(const GeneratorSpec& g, const PairState& W, bool grad) {
  const auto& lat = W.plus.lattice();
  const int d = lat.d, K = lat.K;
  const std::size_t N = lat.size();
  const bool kg = is_kg(g);

  cvec A(N), B(N);
  for (std::size_t i = 0; i < N; ++i) {
    A[i] = kg ? W.plus[i] + W.minus[i] : W.plus[i];
    B[i] = W.minus[i];
  }

  // Inner cutoffs chi(|p|/<mu>) indexed by (j+k, p); the sum box has side 4K+1.
  const int ss = 4 * K + 1;
  std::size_t nsum = 1;
  for (int a = 0; a < d; ++a) nsum *= ss;
  auto sum_index = [&](const IVec& s) {
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) idx = idx * ss + static_cast<std::size_t>(s[a] + 2 * K);
    return idx;
  };
  std::vector<double> chiS(nsum * N, -1.0);
  auto inner = [&](const IVec& s, std::size_t sidx, std::size_t pidx) {
    double& c = chiS[sidx * N + pidx];
    if (c < 0) {
      RVec mu{0.5 * s[0], 0.5 * s[1], 0.5 * s[2]};
      IVec p = lat.freq(pidx);
      c = cutoff_chi(std::sqrt(static_cast<double>(norm2(p, d))) / bracket(mu, d), g.eps);
    }
    return c;
  };

  Enumerated out;
  if (grad) {
    out.gA.assign(N, 0.0);
    out.gB.assign(N, 0.0);
  }
  cplx Q = 0;
  for (std::size_t jj = 0; jj < N; ++jj) {
    const IVec j = lat.freq(jj);
    const IVec mj = neg(j);
    const std::size_t mjj = lat.index(mj);
    for (std::size_t kk = 0; kk < N; ++kk) {
      const IVec k = lat.freq(kk);
      const IVec q = sub(j, k), s = add(j, k);
      // <j+k> in the cutoff is the bracket of the sum frequency, as in the quantization.
      const double cw = cutoff_chi(std::sqrt(static_cast<double>(norm2(q, d))) / bracket(s, d), g.eps);
      if (cw == 0.0) continue;
      const RVec mu{0.5 * s[0], 0.5 * s[1], 0.5 * s[2]};
      const std::size_t sidx = sum_index(s);
      const cplx bb = B[kk] * B[mjj];
      for (std::size_t p1i = 0; p1i < N; ++p1i) {
        const IVec p1 = lat.freq(p1i);
        const IVec p2 = sub(q, p1);
        if (!lat.contains(p2)) continue;
        const std::size_t p2i = lat.index(p2);
        const double c1 = inner(s, sidx, p1i);
        if (c1 == 0.0) continue;
        const double c2 = inner(s, sidx, p2i);
        if (c2 == 0.0) continue;
        const double kap = cw * c1 * c2 * beta_core(g, p1, p2, mu, d);
        if (kap == 0.0) continue;
        const cplx aa = A[p1i] * A[p2i];
        Q += kap * aa * bb;
        if (grad) {
          out.gA[p1i] += kap * A[p2i] * bb;
          out.gA[p2i] += kap * A[p1i] * bb;
          out.gB[kk] += kap * aa * B[mjj];
          out.gB[mjj] += kap * aa * B[kk];
        }
      }
    }
  }
  const double scale = std::pow(2.0 * kPi, -d);
  out.q = Q * scale;
  if (grad)
    for (std::size_t i = 0; i < N; ++i) out.gA[i] *= scale, out.gB[i] *= scale;
  return out;
}

double l2norm(const PairState& U) { return std::sqrt(std::max(0.0, l2_inner(U.plus, U.plus).real())); }

PairState axpy(const PairState& a, double t, const PairState& b) {
  FourierField p = a.plus, m = a.minus;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += t * b.plus[i], m[i] += t * b.minus[i];
  return {p, m};
}

}  // namespace

double generator_kappa(const GeneratorSpec& g, const IVec& j, const IVec& k, const IVec& p1, int d) {
  const IVec q = sub(j, k), s = add(j, k), p2 = sub(q, p1);
  const RVec mu{0.5 * s[0], 0.5 * s[1], 0.5 * s[2]};
  const double bm = bracket(mu, d);
  const double cw = cutoff_chi(std::sqrt(static_cast<double>(norm2(q, d))) / bracket(s, d), g.eps);
  const double c1 = cutoff_chi(std::sqrt(static_cast<double>(norm2(p1, d))) / bm, g.eps);
  const double c2 = cutoff_chi(std::sqrt(static_cast<double>(norm2(p2, d))) / bm, g.eps);
  if (cw * c1 * c2 == 0.0) return 0.0;
  return cw * c1 * c2 * beta_core(g, p1, p2, mu, d);
}

double generator_hamiltonian(const GeneratorSpec& g, const PairState& W) {
  return (cplx(0, 1) * enumerate(g, W, false).q).real();
}

PairState generator_field(const GeneratorSpec& g, const PairState& W) {
  const auto& lat = W.plus.lattice();
  Enumerated e = enumerate(g, W, true);
  const bool kg = is_kg(g);
  FourierField plus(lat, W.plus.reality());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const std::size_t mi = lat.index(neg(lat.freq(i)));
    const cplx gWbar = kg ? e.gB[mi] + e.gA[mi] : e.gB[mi];
    plus[i] = 0.5 * gWbar - 0.5 * std::conj(e.gA[i]);
  }
  return PairState(plus);
}

PairState generator_tangent(const GeneratorSpec& g, const PairState& W, const PairState& V) {
  const double nv = l2norm(V);
  if (nv == 0.0) return PairState(FourierField(W.plus.lattice()));
  const double nw = l2norm(W);
  const double t = nw > 0 ? nw / nv : 1.0;
  PairState xp = generator_field(g, axpy(W, t, V));
  PairState xm = generator_field(g, axpy(W, -t, V));
  PairState xv = generator_field(g, V);
  FourierField out(W.plus.lattice(), W.plus.reality());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (0.5 * (xp.plus[i] - xm.plus[i]) - t * t * t * xv.plus[i]) / t;
  return PairState(out);
}

cplx nls_generator_kernel(const GeneratorSpec& g, const FrequencyLattice& lat, const IVec& xi,
                          const IVec& eta, const IVec& zeta) {
  const int d = lat.d;
  auto kap = [&](const IVec& j, const IVec& k, const IVec& p1) {
    const IVec p2 = sub(sub(j, k), p1);
    if (!lat.contains(j) || !lat.contains(k) || !lat.contains(p1) || !lat.contains(p2)) return 0.0;
    return generator_kappa(g, j, k, p1, d);
  };
  const double v = 0.5 * kap(xi, eta, zeta) + 0.5 * kap(neg(eta), neg(xi), zeta) -
                   kap(zeta, sub(add(eta, zeta), xi), xi);
  return v;
}

Symbol nls_generator_symbol(const GeneratorSpec& g, const FourierField& w) {
  const auto& lat = w.lattice();
  const double eps = g.eps;
  const int d = lat.d;
  return Symbol::general(
      lat, 0.0,
      [w, eps, d](const RVec& xi, cvec& out) {
        const double x2 = norm2r(xi, d);
        if (x2 == 0.0) return;
        const double bx = bracket(xi, d);
        FourierField sw = multiplier(w, [&](const IVec& p) {
          return cplx(cutoff_chi(std::sqrt(static_cast<double>(norm2(p, d))) / bx, eps));
        });
        cvec gr = to_grid(sw);
        for (std::size_t i = 0; i < gr.size(); ++i) out[i] += gr[i] * gr[i] / (2.0 * x2);
      },
      false);
}

PairState generator_transform(const GeneratorSpec& g, const PairState& W, double s, double limit) {
  const double n = sobolev_norm(W.plus, s);
  if (n > limit)
    throw std::domain_error("amplitude outside the smallness regime: ||w||_{H^s} = " + std::to_string(n));
  PairState X = generator_field(g, W);
  return {W.plus + X.plus, W.minus + X.minus};
}

PairState generator_inverse(const GeneratorSpec& g, const PairState& Z) {
  PairState X = generator_field(g, Z);
  return {Z.plus - X.plus, Z.minus - X.minus};
}

PairState z_cubic_field(const GeneratorSpec& g, const std::vector<double>& lambda, const FieldFn& x4,
                        const PairState& Z) {
  FourierField lz = Z.plus;
  for (std::size_t i = 0; i < lz.size(); ++i) lz[i] *= cplx(0.0, -lambda[i]);
  PairState dx = generator_tangent(g, Z, PairState(lz));
  PairState x = generator_field(g, Z);
  FourierField out = x4(Z).plus + dx.plus;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += cplx(0.0, lambda[i]) * x.plus[i];
  return PairState(out);
}

}  // namespace qlnf
