#include "doctest.h"
#include "qlnf/lattice.hpp"

#include <cmath>

using namespace qlnf;

TEST_CASE("sobolev norm of simple fields") {
  FrequencyLattice lat(1, 8);
  FourierField z(lat);
  CHECK(sobolev_norm(z, 3.0) == 0.0);

  auto f = single_mode(lat, {3, 0, 0});
  CHECK(sobolev_norm(f, 2.0) == doctest::Approx(10.0 * std::sqrt(2 * kPi)).epsilon(1e-14));
  CHECK(sobolev_norm(f, 2.0) == doctest::Approx(25.0663).epsilon(1e-5));

  auto g = single_mode(lat, {1, 0, 0}) + single_mode(lat, {-1, 0, 0});
  CHECK(sobolev_norm(g, 0.0) == doctest::Approx(std::sqrt(4 * kPi)).epsilon(1e-14));
}

TEST_CASE("l2 inner products") {
  FrequencyLattice lat(1, 6);
  auto e1 = single_mode(lat, {1, 0, 0});
  auto e2 = single_mode(lat, {2, 0, 0});
  CHECK(std::abs(l2_inner(e1, e1) - cplx(2 * kPi)) < 1e-13);
  CHECK(std::abs(l2_inner(e1, e2)) == 0.0);

  FrequencyLattice lat2(2, 5);
  auto u = random_field(lat2, 7, 1.0);
  auto v = random_field(lat2, 8, 1.0);
  double n0 = sobolev_norm(u, 0.0);
  CHECK(std::abs(l2_inner(u, u).real() - n0 * n0) <= 1e-12 * n0 * n0);
  CHECK(std::abs(l2_inner(u, v) - std::conj(l2_inner(v, u))) < 1e-12);
  CHECK_THROWS(l2_inner(u, FourierField(FrequencyLattice(2, 4))));
}

TEST_CASE("grid transforms round trip") {
  for (int d = 1; d <= 3; ++d) {
    FrequencyLattice lat(d, d == 3 ? 3 : 7);
    auto f = random_field(lat, 11 + d, 0.5);
    auto g = from_grid(to_grid(f), lat);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(f[i] - g[i]));
    CHECK(err <= 1e-13 * f.max_abs());
  }
}

TEST_CASE("padded grid size is even and large enough") {
  for (int K : {0, 1, 4, 8, 16, 32, 64}) {
    int M = padded_grid_size(K);
    CHECK(M % 2 == 0);
    CHECK(M >= 4 * (2 * K + 1));
  }
  CHECK_THROWS(FrequencyLattice(4, 2));
  CHECK_THROWS(FrequencyLattice(1, 4, 9));
}

TEST_CASE("pointwise product") {
  FrequencyLattice lat(1, 8);
  auto e1 = single_mode(lat, {1, 0, 0});
  auto e2 = single_mode(lat, {2, 0, 0});
  auto p = pointwise_product({e1, e2});
  auto e3 = single_mode(lat, {3, 0, 0});
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - e3[i]) < 1e-13);

  auto one = single_mode(lat, {0, 0, 0});
  auto f = random_field(lat, 3, 1.0);
  auto q = pointwise_product({one, f});
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(q[i] - f[i]) < 1e-13);

  std::vector<FourierField> eight(8, f);
  CHECK_THROWS(pointwise_product(eight));
}

TEST_CASE("pointwise product matches direct convolution") {
  for (int d = 1; d <= 2; ++d) {
    for (int K : {3, 8}) {
      FrequencyLattice lat(d, K);
      auto a = random_field(lat, 100 + K, 0.7);
      auto b = random_field(lat, 200 + K, 0.7);
      auto p = pointwise_product({a, b});
      auto q = direct_product(a, b);
      double err = 0.0, scale = q.max_abs();
      for (std::size_t i = 0; i < p.size(); ++i) err = std::max(err, std::abs(p[i] - q[i]));
      CHECK(err <= 1e-12 * scale);
    }
  }
}

TEST_CASE("product of f and conj f is real on the grid") {
  FrequencyLattice lat(2, 8);
  auto f = random_field(lat, 5, 1.0);
  auto fc = f.conj();
  cvec g = to_grid(f), h = to_grid(fc);
  double im = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    cplx p = g[i] * h[i];
    im = std::max(im, std::abs(p.imag()));
    mag = std::max(mag, std::abs(p));
  }
  CHECK(im <= 1e-12 * mag);
  auto prod = pointwise_product({f, fc});
  CHECK(prod.reality_defect() < 1e-12);
}

TEST_CASE("pair state invariant and reality") {
  FrequencyLattice lat(2, 4);
  auto u = random_field(lat, 9, 1.0);
  PairState U(u);
  CHECK(U.invariant_defect() == 0.0);
  auto r = random_field(lat, 9, 1.0, true);
  CHECK(r.reality());
  CHECK(r.reality_defect() < 1e-15);
}

TEST_CASE("spectral derivative") {
  FrequencyLattice lat(2, 6);
  auto f = single_mode(lat, {2, -3, 0});
  cvec g = to_grid(f);
  auto dx = from_grid(grid_derivative(g, lat, 0), lat);
  auto dy = from_grid(grid_derivative(g, lat, 1), lat);
  auto lap = from_grid(grid_laplacian(g, lat), lat);
  std::size_t i = lat.index({2, -3, 0});
  CHECK(std::abs(dx[i] - cplx(0, 2) * f[i]) < 1e-12);
  CHECK(std::abs(dy[i] - cplx(0, -3) * f[i]) < 1e-12);
  CHECK(std::abs(lap[i] + 13.0 * f[i]) < 1e-11);
}
