#include "doctest.h"
#include "qlnf/normal_form.hpp"

#include <cmath>

using namespace qlnf;

namespace {

double l2(const FourierField& f) { return std::sqrt(l2_inner(f, f).real()); }

double max_diff(const FourierField& a, const FourierField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

// A real coefficient depending only on the four shells; satisfies all the quartic symmetries.
QuarticHamiltonian shell_hamiltonian(const FrequencyLattice& lat) {
  const int d = lat.d;
  return {lat, [d](const IVec& xi, const IVec& eta, const IVec& zeta) {
            const IVec p = sub(sub(xi, eta), zeta);
            const int s = norm2(xi, d) + norm2(eta, d) + norm2(zeta, d) + norm2(p, d);
            return cplx(1.0 / (1.0 + s) + 0.25 * std::cos(0.3 * s));
          }};
}

QuarticHamiltonian half_quartic(const FrequencyLattice& lat) {
  return {lat, [](const IVec&, const IVec&, const IVec&) { return cplx(0.5); }};
}

}  // namespace

TEST_CASE("hamiltonian field of the quartic nls energy") {
  FrequencyLattice lat(1, 8);
  auto u = random_field(lat, 4, 1.0);
  CubicField X = hamiltonian_vector_field(half_quartic(lat));
  FourierField direct = pointwise_product({u, u.conj(), u});
  direct *= cplx(0.0, -1.0);
  CHECK(max_diff(X.apply(u), direct) <= 1e-12 * direct.max_abs());

  QuarticHamiltonian zero{lat, [](const IVec&, const IVec&, const IVec&) { return cplx(0.0); }};
  CHECK(hamiltonian_vector_field(zero).apply(u).max_abs() == 0.0);
}

TEST_CASE("hamiltonian pairing identity") {
  for (int d : {1, 2}) {
    FrequencyLattice lat(d, d == 1 ? 8 : 3);
    QuarticHamiltonian H = shell_hamiltonian(lat);
    CubicField X = hamiltonian_vector_field(H);
    auto u = random_field(lat, 11, 1.0), v = random_field(lat, 12, 1.0);
    // Richardson on the central difference is exact for a quartic.
    auto cd = [&](double t) { return (quartic_value(H, u + cplx(t) * v) - quartic_value(H, u - cplx(t) * v)) / (2 * t); };
    const double fd = (4.0 * cd(0.05) - cd(0.1)) / 3.0;
    const double an = 2.0 * l2_inner(cplx(0.0, 1.0) * X.apply(u), v).real();
    CHECK(std::abs(fd - an) <= 1e-10 * std::abs(an));
  }
}

TEST_CASE("quadratic hamiltonian field") {
  FrequencyLattice lat(2, 4);
  auto X = hamiltonian_vector_field([](const IVec& k) { return double(norm2(k, 2)); });
  auto z = single_mode(lat, {2, 1, 0}, 0.3);
  auto y = X.apply(z);
  CHECK(y.at({2, 1, 0}) == cplx(0.0, -5.0) * z.at({2, 1, 0}));
  CHECK(max_diff(y, cplx(0.0, -5.0) * z) == 0.0);
}

TEST_CASE("quartic symmetry validation names the triple") {
  FrequencyLattice lat(1, 3);
  QuarticHamiltonian bad{lat, [](const IVec& xi, const IVec&, const IVec&) { return cplx(xi[0]); }};
  try {
    validate_quartic(bad);
    FAIL("expected a symmetry violation");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("xi=(") != std::string::npos);
  }
  CHECK_NOTHROW(validate_quartic(shell_hamiltonian(lat)));

  // The normal-form field of the nls equation is Hamiltonian: h4 = i f / 2.
  NlsConfig c;
  c.K = 6;
  CubicField Xz = nls_z_field(c);
  auto f = Xz.kernels.at(Signs{1, -1, 1}).q;
  CHECK_NOTHROW(validate_quartic({c.lattice(), [f](const IVec& a, const IVec& b, const IVec& z) {
                                    return cplx(0.0, 0.5) * f(a, b, z);
                                  }},
                                 1e-12));
}

TEST_CASE("commutator with the quadratic field") {
  NlsConfig c;
  c.K = 6;
  auto lat = c.lattice();
  GeneratorSpec g;
  CubicField XB;
  XB.lat = lat;
  XB.kernels[Signs{1, -1, 1}] = TrilinearKernel{
      [&](const IVec& a, const IVec& b, const IVec& z) { return nls_generator_kernel(g, lat, a, b, z); }, 0.0, 0.0};
  auto lamf = [&](const IVec& k) { return nls_dispersion(k, c); };
  QuadraticField X2 = hamiltonian_vector_field(lamf);
  CubicField C = poisson_bracket_commutator(XB, X2);

  // coefficient-wise: the generator kernel times -i omega
  auto q = C.kernels.at(Signs{1, -1, 1}).q;
  for (const IVec& xi : {IVec{2, 0, 0}, IVec{-3, 0, 0}, IVec{5, 0, 0}})
    for (const IVec& eta : {IVec{1, 0, 0}, IVec{-2, 0, 0}})
      for (const IVec& zeta : {IVec{0, 0, 0}, IVec{3, 0, 0}}) {
        const cplx expect = cplx(0.0, -omega_nls(xi, eta, zeta, c.V, 1)) * nls_generator_kernel(g, lat, xi, eta, zeta);
        CHECK(std::abs(q(xi, eta, zeta) - expect) <= 1e-15 * (1.0 + std::abs(expect)));
      }

  // against dX_B[X_H] - dX_H[X_B] on a random field
  auto w = random_field(lat, 21, 1.0);
  auto lam = tabulate(lat, lamf);
  FourierField lw = w;
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] *= cplx(0.0, -lam[i]);
  FourierField ref = generator_tangent(g, PairState(w), PairState(lw)).plus;
  FourierField xb = generator_field(g, PairState(w)).plus;
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += cplx(0.0, lam[i]) * xb[i];
  CHECK(max_diff(C.apply(w), ref) <= 1e-11 * ref.max_abs());

  // swapping the arguments negates; quadratic pairs commute; two cubic fields are refused
  CHECK(max_diff(poisson_bracket_commutator(X2, XB).apply(w), cplx(-1.0) * C.apply(w)) == 0.0);
  CHECK(poisson_bracket_commutator(X2, X2).apply(w).max_abs() == 0.0);
  CHECK_THROWS_AS(poisson_bracket_commutator(XB, XB), std::invalid_argument);
}

TEST_CASE("resonant projection") {
  FrequencyLattice lat(1, 12);
  CubicField X = hamiltonian_vector_field(shell_hamiltonian(lat));
  auto [res, perp] = resonant_projection(X);
  auto u = random_field(lat, 2, 1.0);
  CHECK(max_diff(res.apply(u) + perp.apply(u), X.apply(u)) <= 1e-14 * X.apply(u).max_abs());

  // gauge field on a single mode: the only triple is resonant
  auto e = single_mode(lat, {3, 0, 0}, 0.5);
  CHECK(max_diff(res.apply(e), X.apply(e)) == 0.0);
  CHECK(perp.apply(e).max_abs() == 0.0);
  // a (+,+,+) kernel outputs at 3j, which carries no resonant part
  CubicField P;
  P.lat = lat;
  P.kernels[Signs{1, 1, 1}] = TrilinearKernel{[](const IVec&, const IVec&, const IVec&) { return cplx(1.0); }, 0, 0};
  auto [pr, pp] = resonant_projection(P);
  auto e1 = single_mode(lat, {2, 0, 0}, 0.5);
  CHECK(pr.apply(e1).max_abs() == 0.0);
  CHECK(std::abs(pp.apply(e1).at({6, 0, 0})) > 0.0);

  // zero mode only: fully resonant
  auto z0 = single_mode(lat, {0, 0, 0}, 0.7);
  CHECK(max_diff(res.apply(z0), X.apply(z0)) == 0.0);

  // kernel supported off the resonant set
  CubicField O;
  O.lat = lat;
  O.kernels[Signs{1, -1, 1}] = TrilinearKernel{
      [](const IVec& a, const IVec& b, const IVec& c) { return is_resonant(a, b, c, 1) ? cplx(0.0) : cplx(1.0); }, 0,
      0};
  CHECK(resonant_projection(O).first.apply(u).max_abs() == 0.0);

  // sparse resonant table agrees with the dense projection
  auto S = tabulate_resonant(res.kernels.at(Signs{1, -1, 1}).q, lat);
  CHECK(max_diff(S.apply(u, u.conj(), u), res.apply(u)) <= 1e-14 * res.apply(u).max_abs());
}

TEST_CASE("cancellation suite") {
  for (int d : {1, 2}) {
    NlsConfig c;
    c.d = d;
    c.K = d == 1 ? 16 : 8;
    c.V = build_potential(5, 2, d, c.K);
    auto lat = c.lattice();
    auto z = random_field(lat, 3, 2.0);
    z *= cplx(0.1);
    auto zn = random_field(lat, 8, 3.0);
    CancellationReport r = cancellation_suite(nls_z_field(c), z, zn, c.n(), c.eps);
    CHECK(r.pass(1e-12));
    CancellationReport h = cancellation_suite(hamiltonian_vector_field(shell_hamiltonian(lat)), z, zn, c.n(), c.eps);
    CHECK(h.pass(1e-12));
  }
  FrequencyLattice lat(1, 8);
  FourierField zero(lat);
  auto r0 = cancellation_suite(hamiltonian_vector_field(half_quartic(lat)), zero, zero, 5.0);
  for (auto& [k, v] : r0.as_map()) CHECK(v == 0.0);
}

TEST_CASE("two-shell brute force pairing vanishes") {
  FrequencyLattice lat(2, 4);
  FourierField z(lat);
  for (const IVec& k : {IVec{1, 0, 0}, IVec{0, -1, 0}, IVec{1, 1, 0}, IVec{-1, 1, 0}, IVec{0, 2, 0}, IVec{-2, 0, 0}})
    z.at(k) = cplx(0.3 + 0.1 * k[0], 0.2 - 0.05 * k[1]);
  CubicField X = hamiltonian_vector_field(shell_hamiltonian(lat));
  const double brute = resonant_pairing_bruteforce(X, z, 2.0);
  // scale: the same sum with absolute values
  double scale = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) scale += std::norm(z[i]);
  scale = scale * scale * std::pow(bracket(IVec{2, 0, 0}, 2), 4.0);
  CHECK(std::abs(brute) <= 1e-13 * scale);
}

TEST_CASE("super actions under the resonant flow") {
  FrequencyLattice lat(2, 5);
  auto z = random_field(lat, 7, 0.0);
  z *= cplx(0.3);
  auto r = resonant_flow_superactions(hamiltonian_vector_field(shell_hamiltonian(lat)), z, 1e-3, 0.2);
  CHECK(r.shells > 5);
  CHECK(r.max_relative_drift <= 1e-8);
  CHECK(super_actions(z).size() == static_cast<std::size_t>(r.shells));
}

TEST_CASE("B2 kernel") {
  NlsConfig c;
  c.K = 8;
  auto lat = c.lattice();
  CubicField X = nls_z_field(c);
  TrilinearKernel b2 = build_B2_kernel(c);
  auto f = X.kernels.at(Signs{1, -1, 1}).q;
  const double n = c.n();
  for (std::size_t a = 0; a < lat.size(); ++a)
    for (std::size_t b = 0; b < lat.size(); ++b) {
      const IVec xi = lat.freq(a), eta = lat.freq(b);
      // xi = zeta: only the symmetric c3 part survives
      if (!is_resonant(xi, eta, xi, 1)) {
        const IVec p = neg(eta);
        const cplx c3 = std::pow(double(norm2(xi, 1)), n) *
                        (f(xi, eta, xi) + cplx(0.0, para_cutoff(xi, xi, 1, c.eps) + para_cutoff(xi, p, 1, c.eps)));
        CHECK(std::abs(b2.q(xi, eta, xi) - c3) <= 1e-12 * (1.0 + std::abs(c3)));
      }
      for (std::size_t e = 0; e < lat.size(); ++e) {
        const IVec zeta = lat.freq(e);
        if (is_resonant(xi, eta, zeta, 1)) CHECK(b2.q(xi, eta, zeta) == cplx(0.0));
      }
    }
  EnvelopeReport env = b2_envelope_scan(c, {4, 8});
  CHECK(env.bounded);
}

TEST_CASE("normal form split") {
  FrequencyLattice lat(1, 8);
  TrilinearKernel k{[](const IVec& a, const IVec& b, const IVec& c) {
                      if (is_resonant(a, b, c, 1)) return cplx(0.0);
                      return cplx(1.0 + a[0], 0.5 * b[0] - c[0]);
                    },
                    0, 0};
  SplitParams sp;
  NormalFormSplit all = normal_form_split(k, lat, kNoThreshold, sp);
  NormalFormSplit S = normal_form_split(k, lat, 3, sp);
  for (std::size_t a = 0; a < lat.size(); ++a)
    for (std::size_t b = 0; b < lat.size(); ++b)
      for (std::size_t c = 0; c < lat.size(); ++c) {
        const IVec xi = lat.freq(a), eta = lat.freq(b), zeta = lat.freq(c);
        CHECK(all.b2.q(xi, eta, zeta) == cplx(0.0));
        CHECK(all.b1.q(xi, eta, zeta) == k.q(xi, eta, zeta));
        CHECK(S.b1.q(xi, eta, zeta) + S.b2.q(xi, eta, zeta) == k.q(xi, eta, zeta));
        CHECK(std::isfinite(std::abs(S.t_lo.q(xi, eta, zeta))));
      }
  const IVec xi{2, 0, 0}, eta{0, 0, 0}, zeta{1, 0, 0};
  CHECK(split_omega(xi, eta, zeta, sp, 1) == -2.0);
  const cplx t = S.t_lo.q(xi, eta, zeta);
  CHECK(std::abs(t - cplx(0.0, -0.5) * S.b1.q(xi, eta, zeta)) <= 1e-15 * std::abs(t));

  TrilinearKernel on_r{[](const IVec&, const IVec&, const IVec&) { return cplx(1.0); }, 0, 0};
  CHECK_THROWS_AS(normal_form_split(on_r, lat, 3, sp), std::invalid_argument);
  CHECK_THROWS_AS(normal_form_split(k, lat, 0, sp), std::invalid_argument);

  // a table that cancels the dispersion makes every divisor vanish
  SplitParams flat = sp;
  flat.V = build_potential(1, 2, 1, 8);
  for (std::size_t i = 0; i < flat.V.values.size(); ++i) {
    const int q = static_cast<int>(i) - 8;
    flat.V.values[i] = -double(q * q);
  }
  CHECK_THROWS_AS(normal_form_split(k, lat, 3, flat), std::domain_error);
}

TEST_CASE("integration by parts identity") {
  NlsConfig c;
  c.K = 6;
  c.s = 4.0;
  auto z0 = initial_profile(c.lattice(), 9, c.s, 0.3);
  IbpReport r = ibp_identity_check(c, z0, 3, 0.02, 64);
  CHECK(r.scale > 0.0);
  CHECK(r.residual <= 1e-8 * r.scale);
}

TEST_CASE("energy ledger terms") {
  NlsConfig c;
  c.K = 32;
  c.s = 4.0;
  auto lat = c.lattice();
  auto b2 = tabulate_kernel(build_B2_kernel(c).q, lat);
  EnergyTerms z = nls_energy_terms(NlsState{0.0, PairState(FourierField(lat))}, c, &b2);
  CHECK(z.norm2 == 0.0);
  CHECK(z.D == 0.0);
  CHECK(z.B == 0.0);

  auto u0 = initial_profile(lat, 1, c.s, 1.0);
  const std::vector<double> eps = {1e-1, 1e-2, 1e-3};
  std::vector<double> B, G, KB, KG;
  KgConfig k = kg_default(1, 32);
  k.s = 4.0;
  for (double e : eps) {
    EnergyTerms t = nls_energy_terms(NlsState{0.0, PairState(cplx(e) * u0)}, c, &b2);
    B.push_back(t.B);
    G.push_back(t.D - t.B);
    EnergyTerms s = kg_energy_terms(KgState{0.0, PairState(cplx(e) * u0)}, k);
    KB.push_back(s.B);
    KG.push_back(s.D - s.B);
  }
  CHECK(fit_loglog(eps, B).slope == doctest::Approx(4.0).epsilon(0.05));
  CHECK(fit_loglog(eps, G).slope >= 5.5);
  CHECK(fit_loglog(eps, KB).slope == doctest::Approx(4.0).epsilon(0.05));
  CHECK(fit_loglog(eps, KG).slope >= 5.5);
}

TEST_CASE("energy ledger along trajectories") {
  NlsConfig c;
  c.K = 32;
  c.s = 4.0;
  c.dt = 0.5 / nls_lambda_max(c);
  auto lat = c.lattice();
  NlsState st{0.0, PairState(initial_profile(lat, 1, c.s, 0.1))};
  std::vector<NlsState> traj{st};
  for (int i = 0; i < 16; ++i) traj.push_back(st = step(st, c));
  auto ledger_at = [&](int m) {
    return energy_decomposition(std::vector<NlsState>{traj[8 - m], traj[8], traj[8 + m]}, c).rows.at(0);
  };
  LedgerRow r8 = ledger_at(8), r4 = ledger_at(4), r2 = ledger_at(2);
  CHECK(r8.t == r2.t);
  CHECK(std::abs(r8.closure) >= 3.5 * std::abs(r4.closure));
  CHECK(std::abs(r4.closure) >= 3.5 * std::abs(r2.closure));
  CHECK(std::abs(r2.closure) <= 1e-4 * std::abs(r2.B));

  CHECK_THROWS_AS(energy_decomposition(std::vector<NlsState>{traj[0], traj[1]}, c), std::invalid_argument);
  NlsConfig fine = c;
  fine.dt = c.dt / 2;
  CHECK_THROWS_AS(energy_decomposition(std::vector<NlsState>{traj[0], traj[8], traj[16]}, fine), std::invalid_argument);

  // identical ledgers on rerun
  std::vector<NlsState> snaps{traj[0], traj[2], traj[4], traj[6]};
  CHECK(energy_decomposition(snaps, c).csv("# x\n") == energy_decomposition(snaps, c).csv("# x\n"));

  // linear regime: the norm of z_n is conserved
  NlsConfig lin = c;
  lin.nonlinear = false;
  lin.V = build_potential(3, 2, 1, 32);
  lin.dt = 0.5 / nls_lambda_max(lin);
  NlsState ls{0.0, PairState(initial_profile(lat, 1, c.s, 0.1))};
  std::vector<NlsState> lt{ls};
  for (int i = 0; i < 4; ++i) lt.push_back(ls = step(ls, lin));
  for (const auto& row : energy_decomposition(lt, lin).rows) {
    CHECK(std::abs(row.d_norm2_dt) <= 1e-10 * nls_energy_terms(lt[0], lin).norm2);
    CHECK(row.B == 0.0);
    CHECK(row.B_gt5 == 0.0);
  }
}

TEST_CASE("kg energy ledger closes") {
  KgConfig k = kg_default(1, 32);
  k.s = 4.0;
  k.dt = 0.5 / kg_lambda_max(k);
  KgState st{0.0, PairState(initial_profile(k.lattice(), 1, k.s, 0.1))};
  std::vector<KgState> traj{st};
  for (int i = 0; i < 8; ++i) traj.push_back(st = step(st, k));
  auto a = energy_decomposition(std::vector<KgState>{traj[0], traj[4], traj[8]}, k).rows.at(0);
  auto b = energy_decomposition(std::vector<KgState>{traj[2], traj[4], traj[6]}, k).rows.at(0);
  CHECK(std::abs(a.closure) >= 3.5 * std::abs(b.closure));
}
