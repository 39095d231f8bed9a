#include "doctest.h"
#include "qlnf/trilinear.hpp"

#include <cmath>

using namespace qlnf;

TEST_CASE("apply trilinear against pointwise product") {
  for (int d = 1; d <= 2; ++d) {
    FrequencyLattice lat(d, d == 1 ? 8 : 4);
    auto u1 = random_field(lat, 1, 1.0), u2 = random_field(lat, 2, 1.0), u3 = random_field(lat, 3, 1.0);
    TrilinearKernel one{[](const IVec&, const IVec&, const IVec&) { return cplx(1.0); }};
    auto q = apply_trilinear(one, u1, u2, u3);
    auto p = pointwise_product({u1, u2, u3});
    double e = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) e = std::max(e, std::abs(q[i] - p[i]));
    CHECK(e <= 1e-12 * p.max_abs());

    TrilinearKernel zero{[](const IVec&, const IVec&, const IVec&) { return cplx(0.0); }};
    CHECK(apply_trilinear(zero, u1, u2, u3).max_abs() == 0.0);
  }
}

TEST_CASE("apply trilinear diagonal selector") {
  FrequencyLattice lat(1, 6);
  auto u = random_field(lat, 4, 0.5);
  auto e = single_mode(lat, {2, 0, 0});
  TrilinearKernel sel{[](const IVec& xi, const IVec&, const IVec& z) { return xi == z ? cplx(1.0) : cplx(0.0); }};
  auto q = apply_trilinear(sel, u, u, e);
  for (std::size_t i = 0; i < q.size(); ++i)
    if (std::abs(q[i]) > 1e-14) CHECK(lat.freq(i)[0] == 2);
}

TEST_CASE("apply trilinear cap") {
  FrequencyLattice lat(2, 17);
  FourierField u(lat);
  TrilinearKernel one{[](const IVec&, const IVec&, const IVec&) { return cplx(1.0); }};
  CHECK_THROWS_WITH(apply_trilinear(one, u, u, u), doctest::Contains("K <= 16"));
}

TEST_CASE("trilinear bound probe") {
  TrilinearKernel one{[](const IVec&, const IVec&, const IVec&) { return cplx(1.0); }};
  auto r = trilinear_bound_probe(one, 2.0, 0.0, 0.0);
  CHECK(r.bounded);
  TrilinearKernel zero{[](const IVec&, const IVec&, const IVec&) { return cplx(0.0); }};
  auto z = trilinear_bound_probe(zero, 2.0, 0.0, 0.0);
  for (double v : z.ratios) CHECK(v == 0.0);
  // one derivative too many: max1 growth
  TrilinearKernel bad{[](const IVec& xi, const IVec& eta, const IVec& zeta) {
    IVec a = sub(sub(xi, eta), zeta);
    double m1 = std::max({std::abs(a[0]), std::abs(eta[0]), std::abs(zeta[0])});
    return cplx(1.0 + m1);
  }};
  auto b = trilinear_bound_probe(bad, 2.0, 0.0, 0.0);
  CHECK_FALSE(b.bounded);
  CHECK(b.growth_per_doubling > 1.6);
}

TEST_CASE("resonant set examples") {
  CHECK(is_resonant({3, 4, 0}, {7, -2, 0}, {3, 4, 0}, 2));
  CHECK(is_resonant({3, 4, 0}, {1, 3, 0}, {5, 0, 0}, 2));
  CHECK_FALSE(is_resonant({2, 0, 0}, {0, 0, 0}, {1, 0, 0}, 2));
  CHECK(is_resonant_signed({3, 4, 0}, {1, 3, 0}, {5, 0, 0}, {1, -1, 1}, 2));
}

TEST_CASE("resonance is invariant under the index symmetry") {
  FrequencyLattice lat(2, 3);
  for (std::size_t a = 0; a < lat.size(); ++a)
    for (std::size_t b = 0; b < lat.size(); b += 3)
      for (std::size_t c = 0; c < lat.size(); c += 2) {
        IVec xi = lat.freq(a), eta = lat.freq(b), zeta = lat.freq(c);
        IVec eta2 = sub(add(zeta, eta), xi);
        CHECK(is_resonant(xi, eta, zeta, 2) == is_resonant(zeta, eta2, xi, 2));
        for (int s1 : {1, -1})
          for (int s2 : {1, -1})
            for (int s3 : {1, -1})
              if (s1 == 1 && s2 == -1 && s3 == 1)
                CHECK(is_resonant_signed(xi, eta, zeta, {s1, s2, s3}, 2) == is_resonant(xi, eta, zeta, 2));
      }
}

TEST_CASE("nls phase") {
  auto V0 = PotentialTable::zero(1);
  CHECK(omega_nls({2, 0, 0}, {0, 0, 0}, {1, 0, 0}, V0, 1) == -2.0);
  auto V = build_potential(5, 3, 2, 6);
  for (int t = 0; t < 20; ++t) {
    IVec xi{t % 5 - 2, t % 3 - 1, 0}, eta{(7 * t) % 5 - 2, (3 * t) % 7 - 3, 0};
    CHECK(std::abs(omega_nls(xi, eta, xi, V, 2)) < 1e-15);
    IVec zeta{(5 * t) % 3 - 1, t % 2, 0};
    IVec eta2 = sub(add(zeta, eta), xi);
    CHECK(std::abs(omega_nls(xi, eta, zeta, V, 2) + omega_nls(zeta, eta2, xi, V, 2)) < 1e-14);
  }
  // d=1: vanishes exactly on the paired configurations
  for (int xi = -8; xi <= 8; ++xi)
    for (int eta = -8; eta <= 8; ++eta)
      for (int zeta = -8; zeta <= 8; ++zeta) {
        double w = omega_nls({xi, 0, 0}, {eta, 0, 0}, {zeta, 0, 0}, V0, 1);
        int a = xi - eta - zeta;
        bool paired = (xi == zeta && a == -eta) || (a == xi && eta == -zeta);
        CHECK((w == 0.0) == paired);
      }
}

TEST_CASE("kg phase") {
  CHECK(omega_kg({0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 1, 1}, 1.0, 1) == doctest::Approx(2.0));
  CHECK(omega_kg({4, 0, 0}, {3, 0, 0}, {4, 0, 0}, {1, -1, 1}, 1.3, 1) == 0.0);
  CHECK(omega_kg({3, 4, 0}, {1, 3, 0}, {5, 0, 0}, {1, -1, 1}, 1.5, 2) == 0.0);
  CHECK(std::abs(omega_kg({3, 4, 0}, {1, 3, 0}, {4, 0, 0}, {1, -1, 1}, 1.5, 2)) > 0.1);
  // shell-paired triples have zero phase for the gauge signs
  FrequencyLattice lat(2, 4);
  for (std::size_t a = 0; a < lat.size(); ++a)
    for (std::size_t b = 0; b < lat.size(); ++b)
      for (std::size_t c = 0; c < lat.size(); c += 3) {
        IVec xi = lat.freq(a), eta = lat.freq(b), zeta = lat.freq(c);
        if (is_resonant(xi, eta, zeta, 2)) CHECK(std::abs(omega_kg(xi, eta, zeta, {1, -1, 1}, 1.5, 2)) <= 1e-12);
      }
  for (int n = 0; n < 30; ++n) CHECK(lambda_kg({n, 0, 0}, 1.7, 1) > lambda_kg({n, 0, 0}, 1.3, 1));
}

TEST_CASE("divisor scan nls d=1") {
  ScanParams p;
  p.V = PotentialTable::zero(1);
  auto r = divisor_scan(1, 32, "nls", p);
  CHECK(r.has_data);
  CHECK(r.min_abs_omega == 2.0);
  CHECK(r.N0 == 0.0);
  CHECK(r.gamma == 2.0);
  CHECK(r.exact_zero == 0);
  auto e = divisor_scan(1, 0, "nls", p);
  CHECK_FALSE(e.has_data);
}

TEST_CASE("divisor scan nls d=2 with potential") {
  for (std::uint64_t seed : {1, 2}) {
    for (int K : {3, 6}) {
      ScanParams p;
      p.V = build_potential(seed, 3, 2, K);
      auto r = divisor_scan(2, K, "nls", p);
      CHECK(r.has_data);
      CHECK(r.gamma > 0.0);
    }
  }
}

TEST_CASE("divisor scan kg small") {
  ScanParams p;
  p.mass = 1.5;
  auto r = divisor_scan(2, 5, "kg", p);
  CHECK(r.has_data);
  CHECK(r.gamma > 0.0);
  CHECK(r.exact_zero == 0);
  CHECK(r.worst.size() == 10);
  CHECK(std::abs(r.worst[0].omega) == doctest::Approx(r.min_abs_omega));
}

TEST_CASE("taylor surrogate") {
  CHECK(kg_taylor_g(10, 0, 0, 1.5) == 0.0L);
  auto c0 = taylor_error_check({7, 0, 0}, {7, 0, 0}, 1.0, 1);
  CHECK(c0.error == 0.0);
  auto c = taylor_error_check({100, 0, 0}, {99, 0, 0}, 1.0, 1);
  CHECK(c.error <= 10.0 / std::pow(100.0, 4));
  CHECK_THROWS(taylor_error_check({10, 0, 0}, {11, 0, 0}, 1.0, 1));
  CHECK_THROWS(taylor_error_check({16, 0, 0}, {10, 0, 0}, 1.0, 1));
}

TEST_CASE("bad mass measure") {
  auto q = find_crossing_quadruple(2, 40);
  CHECK(mass_phase(q, 1.0) * mass_phase(q, 2.0) < 0.0);
  CHECK(bad_mass_measure(q, 0.0, 10000, 3).bad == 0);
  CHECK(bad_mass_measure(q, 10.0, 10000, 3).fraction == 1.0);
  double span = std::abs(mass_phase(q, 2.0) - mass_phase(q, 1.0));
  auto a = bad_mass_measure(q, 0.1 * span, 10000, 4);
  auto b = bad_mass_measure(q, 0.05 * span, 10000, 4);
  CHECK(a.fraction > 0.0);
  double ratio = b.fraction / a.fraction;
  CHECK(ratio > 0.4);
  CHECK(ratio < 0.6);
  CHECK(a.lo <= a.fraction);
  CHECK(a.hi >= a.fraction);
}
