#include "doctest.h"
#include "qlnf/generator.hpp"
#include "qlnf/nls.hpp"

#include <cmath>

using namespace qlnf;

namespace {

double l2(const FourierField& f) { return std::sqrt(l2_inner(f, f).real()); }

double max_diff(const FourierField& a, const FourierField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

NlsConfig sweep_config(int K = 16) {
  NlsConfig c;
  c.K = K;
  c.s = 4.0;
  return c;
}

const std::vector<double> kEps = {1e-1, 3e-2, 1e-2};

}  // namespace

TEST_CASE("nls rhs zero and constant states") {
  NlsConfig c;
  auto lat = c.lattice();
  CHECK(nls_rhs(PairState(FourierField(lat)), c).plus.max_abs() == 0.0);

  const cplx cst(0.3, -0.2);
  FourierField u(lat);
  u.at({0, 0, 0}) = cst * std::sqrt(2.0 * kPi);
  auto r = nls_rhs(PairState(u), c);
  cplx expect = cplx(0, -1) * std::norm(cst) * cst * std::sqrt(2.0 * kPi);
  CHECK(std::abs(r.plus.at({0, 0, 0}) - expect) <= 1e-15);
  CHECK(r.plus.max_abs() == doctest::Approx(std::abs(expect)).epsilon(1e-12));
}

TEST_CASE("nls nonlinear part is cubic at small amplitude") {
  NlsConfig c = sweep_config();
  auto u0 = initial_profile(c.lattice(), 5, c.s, 1.0);
  std::vector<double> eps = {1e-1, 1e-2, 1e-3}, n;
  for (double e : eps) n.push_back(l2(nls_nonlinear(cplx(e) * u0, c)));
  CHECK(fit_loglog(eps, n).slope == doctest::Approx(3.0).epsilon(0.1 / 3.0));
}

TEST_CASE("nls hamiltonian closed forms") {
  NlsConfig c;
  auto lat = c.lattice();
  CHECK(nls_hamiltonian(PairState(FourierField(lat)), c) == 0.0);
  auto u = single_mode(lat, {1, 0, 0});
  CHECK(nls_hamiltonian(PairState(u), c) == doctest::Approx(3.0 * kPi).epsilon(1e-13));
}

TEST_CASE("nls rhs is the hamiltonian vector field") {
  for (bool pot : {false, true}) {
    NlsConfig c;
    c.K = 8;
    if (pot) c.V = build_potential(3, 2, 1, c.K);
    auto lat = c.lattice();
    PairState U(initial_profile(lat, 2, 1.0, 0.8));
    FourierField v = random_field(lat, 7, 1.5);
    auto X = nls_rhs(U, c);
    const double h = 1e-5;
    double fd = (nls_hamiltonian(PairState(U.plus + cplx(h) * v), c) -
                 nls_hamiltonian(PairState(U.plus - cplx(h) * v), c)) /
                (2 * h);
    double an = 2.0 * l2_inner(cplx(0, 1) * X.plus, v).real();
    CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));
  }
}

TEST_CASE("nls dispersion with potential") {
  NlsConfig c;
  c.K = 8;
  c.V = build_potential(11, 3, 1, 8);
  for (int k = -8; k <= 8; ++k) {
    IVec q{k, 0, 0};
    CHECK(nls_dispersion(q, c) == k * k + c.V(q));
    CHECK(nls_dispersion(q, c) == nls_dispersion(neg(q), c));
  }
  c.h_kind = "sqrt";
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

TEST_CASE("nls paralinear symbols") {
  NlsConfig c = sweep_config(8);
  auto lat = c.lattice();
  auto P0 = nls_paralinear_symbols(PairState(FourierField(lat)), c);
  CHECK(P0.residual.plus.max_abs() == 0.0);

  const double cr = 0.4;
  auto u = single_mode(lat, {0, 0, 0}, cr);
  auto P = nls_paralinear_symbols(PairState(u), c);
  const double c6 = 4.0 * std::pow(cr, 6);
  for (std::size_t i = 0; i < P.a2_samples.size(); i += 17) {
    CHECK(std::abs(P.a2_samples[i] - c6) <= 1e-14);
    CHECK(std::abs(P.b2_samples[i] - c6) <= 1e-14);
    CHECK(std::abs(P.a1_samples[0][i]) <= 1e-15);
  }
}

TEST_CASE("nls paralinearization residual is degree seven") {
  for (int d : {1, 2}) {
    NlsConfig c = sweep_config(d == 1 ? 16 : 6);
    c.d = d;
    auto u0 = initial_profile(c.lattice(), 9, c.s, 1.0);
    // In d = 2 the residual reaches rounding level below 3e-2.
    const std::vector<double> eps = d == 1 ? kEps : std::vector<double>{2e-1, 1e-1, 5e-2};
    std::vector<double> r;
    for (double e : eps) r.push_back(sobolev_norm(nls_paralinear_symbols(PairState(cplx(e) * u0), c).residual.plus, c.s));
    CHECK(fit_loglog(eps, r).slope >= 6.5);
  }
}

TEST_CASE("nls order-two diagonalization algebra") {
  NlsConfig c;
  c.K = 16;
  auto lat = c.lattice();
  auto D0 = diag_order2(PairState(FourierField(lat)), c);
  for (std::size_t i = 0; i < D0.s1.size(); ++i) {
    CHECK(D0.lambda[i] == cplx(1.0));
    CHECK(D0.s2[i] == cplx(0.0));
  }
  for (std::uint64_t seed : {1, 2, 3}) {
    PairState U(initial_profile(lat, seed, c.s, 0.15));
    auto D = diag_order2(U, c);
    CHECK(D.determinant_defect <= 1e-12);
    CHECK(D.conjugation_defect <= 1e-12);
  }
  PairState big(initial_profile(lat, 1, c.s, 0.5));
  CHECK_THROWS_AS(diag_order2(big, c), std::domain_error);
}

TEST_CASE("nls diagonalization residuals scale") {
  NlsConfig c = sweep_config();
  auto lat = c.lattice();
  auto u0 = initial_profile(lat, 4, c.s, 1.0);
  auto w = random_field(lat, 21, 2.0);
  std::vector<double> phi, off;
  for (double e : kEps) {
    PairState U(cplx(e) * u0);
    auto D = diag_order2(U, c);
    phi.push_back(l2(phi_nls_correction(D, U, c.eps).plus));
    off.push_back(l2(nls_offdiag_action(D, U, w.conj(), c)));
  }
  CHECK(fit_loglog(kEps, phi).slope >= 5.5);
  CHECK(fit_loglog(kEps, off).slope >= 5.5);
}

TEST_CASE("nls energy variable") {
  NlsConfig c;
  c.K = 16;
  auto lat = c.lattice();
  auto z = random_field(lat, 8, 0.0);

  auto D0 = diag_order2(PairState(FourierField(lat)), c);
  auto E0 = energy_variable(PairState(z), D0, c);
  auto top = multiplier(z, [&](const IVec& k) { return cplx(std::pow(double(norm2(k, 1)), c.n())); });
  CHECK(max_diff(E0.zn, top) == 0.0);

  PairState U(initial_profile(lat, 3, c.s, 0.1));
  auto D = diag_order2(U, c);
  auto E = energy_variable(PairState(z), D, c);
  double ratio = (l2(z) + l2(E.zn)) / sobolev_norm(z, c.s);
  CHECK(ratio >= 0.5);
  CHECK(ratio <= 2.0);
  CHECK(std::abs(l2_inner(E.zn, z).imag()) <= 1e-12 * l2(E.zn) * l2(z));
  CHECK(E.L.realness_defect(8) <= 1e-13);
  CHECK(E.Sigma.realness_defect(8) <= 1e-13);
}

TEST_CASE("nls generator") {
  NlsConfig c;
  c.K = 12;
  auto lat = c.lattice();
  GeneratorSpec g;
  PairState W0{FourierField(lat)};
  CHECK(generator_transform(g, W0, c.s).plus.max_abs() == 0.0);

  // The inner truncation at |xi| = 2 keeps only the zero mode.
  auto b = nls_generator_symbol(g, single_mode(lat, {0, 0, 0}, cplx(0.1, 0.05)));
  cvec gr = to_grid(single_mode(lat, {0, 0, 0}, cplx(0.1, 0.05))), bs = b.samples({2.0, 0.0, 0.0});
  double e = 0.0;
  for (std::size_t i = 0; i < gr.size(); ++i) e = std::max(e, std::abs(bs[i] - gr[i] * gr[i] / 8.0));
  CHECK(e <= 1e-15);

  auto w = initial_profile(lat, 6, 4.0, 0.1);
  // Wirtinger gradient against the Hamiltonian.
  PairState W(w);
  auto X = generator_field(g, W);
  auto v = random_field(lat, 13, 2.0);
  const double h = 1e-4;
  double fd = (generator_hamiltonian(g, PairState(w + cplx(h) * v)) -
               generator_hamiltonian(g, PairState(w - cplx(h) * v))) /
              (2 * h);
  double an = 2.0 * l2_inner(cplx(0, 1) * X.plus, v).real();
  CHECK(std::abs(fd - an) <= 1e-6 * std::abs(an));

  // Closed-form kernel.
  FourierField y(lat);
  for (std::size_t a = 0; a < lat.size(); ++a) {
    const IVec xi = lat.freq(a);
    cplx s = 0.0;
    for (std::size_t bi = 0; bi < lat.size(); ++bi)
      for (std::size_t ci = 0; ci < lat.size(); ++ci) {
        const IVec eta = lat.freq(bi), zeta = lat.freq(ci);
        const IVec r = sub(sub(xi, eta), zeta);
        if (!lat.contains(r)) continue;
        s += nls_generator_kernel(g, lat, xi, eta, zeta) * W.plus.at(r) * W.minus.at(eta) * W.plus.at(zeta);
      }
    y[a] = s / (2.0 * kPi);
  }
  CHECK(max_diff(y, X.plus) <= 1e-12 * X.plus.max_abs());

  // Approximate inverse.
  auto u0 = initial_profile(lat, 6, 4.0, 1.0);
  std::vector<double> eps = {1e-1, 3e-2, 1e-2}, r;
  for (double ep : eps) {
    PairState We(cplx(ep) * u0);
    PairState Z = generator_transform(g, We, 4.0);
    r.push_back(sobolev_norm(We.plus - generator_inverse(g, Z).plus, 4.0));
  }
  CHECK(fit_loglog(eps, r).slope >= 4.5);
  CHECK_THROWS_AS(generator_transform(g, PairState(cplx(0.5) * u0), 4.0), std::domain_error);
}

TEST_CASE("nls linear flow is exact") {
  NlsConfig c;
  c.K = 8;
  c.nonlinear = false;
  c.dt = 0.5 / nls_lambda_max(c);
  auto lat = c.lattice();
  NlsState st{0.0, PairState(single_mode(lat, {3, 0, 0}))};
  const int n = static_cast<int>(std::round(1.0 / c.dt));
  for (int i = 0; i < n; ++i) st = step(st, c);
  auto expect = single_mode(lat, {3, 0, 0}, std::polar(1.0, -9.0 * st.t));
  CHECK(max_diff(st.U.plus, expect) <= 1e-10);
}

TEST_CASE("nls integrator order and CFL") {
  NlsConfig c;
  c.K = 8;
  auto lat = c.lattice();
  auto u0 = initial_profile(lat, 1, 1.0, 1.5);
  const double dt0 = 0.5 / nls_lambda_max(c), T = 0.5;
  auto run = [&](double dt) {
    NlsConfig cc = c;
    cc.dt = dt;
    NlsState s{0.0, PairState(u0)};
    const int n = static_cast<int>(std::round(T / dt));
    for (int i = 0; i < n; ++i) s = step(s, cc);
    return s.U.plus;
  };
  auto ref = run(dt0 / 32);
  std::vector<double> dts = {dt0, dt0 / 2, dt0 / 4}, err;
  for (double dt : dts) err.push_back(max_diff(run(dt), ref));
  CHECK(fit_loglog(dts, err).slope == doctest::Approx(4.0).epsilon(0.05));

  NlsConfig bad = c;
  bad.dt = 2.0 * dt0;
  NlsState s{0.0, PairState(u0)};
  CHECK_THROWS_WITH(step(s, bad), doctest::Contains("CFL"));
}

TEST_CASE("nls hamiltonian and mass conservation") {
  NlsConfig c;
  c.K = 32;
  c.dt = 0.5 / nls_lambda_max(c);
  auto lat = c.lattice();
  NlsState st{0.0, PairState(initial_profile(lat, 1, c.s, 0.05))};
  const double H0 = nls_hamiltonian(st.U, c), M0 = nls_mass(st.U);
  const int n = static_cast<int>(std::round(10.0 / c.dt));
  for (int i = 0; i < n; ++i) st = step(st, c);
  CHECK(std::abs(nls_hamiltonian(st.U, c) - H0) <= 1e-8 * std::abs(H0));
  CHECK(std::abs(nls_mass(st.U) - M0) <= 1e-10 * M0);
}
