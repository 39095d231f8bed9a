#include "doctest.h"
#include "qlnf/symbol.hpp"

#include <cmath>

using namespace qlnf;

namespace {

double max_diff(const FourierField& a, const FourierField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

Symbol xi_squared(const FrequencyLattice& lat) {
  int d = lat.d;
  return Symbol::multiplier(
      lat,
      [d](const RVec& xi) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += xi[j] * xi[j];
        return cplx(s);
      },
      2.0);
}

// Band-limited test symbol with genuine (x, xi) coupling.
Symbol mixed_symbol(const FrequencyLattice& lat, std::uint64_t seed) {
  auto f1 = random_field(lat, seed, 3.0);
  auto f2 = random_field(lat, seed + 1, 3.0);
  Symbol s(lat, 1.0);
  s.add_term(to_grid(f1), [](const RVec& xi) { return cplx(xi[0], 0.5); });
  s.add_term(to_grid(f2), [](const RVec& xi) { return cplx(1.0 / std::sqrt(1.0 + xi[0] * xi[0]), 0.0); });
  return s;
}

}  // namespace

TEST_CASE("cutoff values") {
  CHECK(cutoff_chi(0.0) == 1.0);
  CHECK(cutoff_chi(0.0, 0.1) == 1.0);
  CHECK(cutoff_chi(1.0 / std::sqrt(2.0), 0.25) == 0.0);
  CHECK(cutoff_chi(0.19, 0.25) == 1.0);
  CHECK_THROWS(cutoff_chi(0.1, 0.5));
  CHECK_THROWS(cutoff_chi(0.1, 0.0));
  double prev = 1.0;
  for (double t = 1.25; t <= 1.6; t += 0.01) {
    double v = chi_profile(t);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    prev = v;
  }
}

TEST_CASE("cutoff joins are flat") {
  CHECK(cutoff_join_defect() < 1e-6);
  set_cutoff_mutation(true);
  CHECK(cutoff_join_defect() > 1e-6);
  set_cutoff_mutation(false);
}

TEST_CASE("weyl quantization reference examples") {
  FrequencyLattice lat(1, 12);
  auto h = single_mode(lat, {2, 0, 0});
  auto out = weyl_quantize(xi_squared(lat), h);
  CHECK(max_diff(out, 4.0 * h) < 1e-13);

  auto e1 = function_symbol(single_mode(lat, {1, 0, 0}));
  auto h10 = single_mode(lat, {10, 0, 0});
  CHECK(max_diff(weyl_quantize(e1, h10), single_mode(lat, {11, 0, 0})) < 1e-12);

  auto one = single_mode(lat, {0, 0, 0});
  CHECK(weyl_quantize(e1, one).max_abs() < 1e-14);
}

TEST_CASE("x-independent symbols act as Fourier multipliers") {
  FrequencyLattice lat(2, 6);
  auto h = random_field(lat, 4, 1.0);
  auto a = xi_squared(lat);
  // route through the general path as well
  Symbol g = Symbol::general(lat, 2.0, [&](const RVec& xi, cvec& out) {
    for (auto& v : out) v += xi[0] * xi[0] + xi[1] * xi[1];
  });
  auto ref = multiplier(h, [](const IVec& k) { return cplx(k[0] * k[0] + k[1] * k[1]); });
  CHECK(max_diff(weyl_quantize(a, h), ref) < 1e-12 * ref.max_abs());
  CHECK(max_diff(weyl_quantize(g, h), ref) < 1e-12 * ref.max_abs());
}

TEST_CASE("adjoint and conjugation rules") {
  for (int d = 1; d <= 2; ++d) {
    FrequencyLattice lat(d, d == 1 ? 12 : 5);
    auto a = mixed_symbol(lat, 20 + d);
    auto h = random_field(lat, 30 + d, 1.0);
    auto v = random_field(lat, 40 + d, 1.0);
    cplx lhs = l2_inner(weyl_quantize(a, h), v);
    cplx rhs = l2_inner(h, weyl_quantize(a.conj(), v));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));

    auto left = weyl_quantize(a, h.conj()).conj();
    auto right = weyl_quantize(a.tilde(), h);
    CHECK(max_diff(left, right) <= 1e-12 * right.max_abs());
  }
}

TEST_CASE("separable and general paths agree") {
  FrequencyLattice lat(1, 10);
  auto a = mixed_symbol(lat, 3);
  Symbol b = Symbol::general(lat, 1.0, [a](const RVec& xi, cvec& out) {
    cvec s = a.samples(xi);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += s[i];
  });
  auto h = random_field(lat, 5, 0.5);
  auto x = weyl_quantize(a, h), y = weyl_quantize(b, h);
  CHECK(max_diff(x, y) <= 1e-12 * x.max_abs());
}

TEST_CASE("symbol seminorm") {
  FrequencyLattice lat(1, 4);
  auto one = Symbol::constant(lat, 1.0);
  for (int s = 0; s <= 2; ++s) CHECK(symbol_seminorm(one, s, 0.0) == doctest::Approx(1.0).epsilon(1e-9));

  double prev = 0.0;
  for (int K : {2, 4, 8}) {
    FrequencyLattice l(1, K);
    double v = symbol_seminorm(xi_squared(l), 0, 2.0);
    CHECK(v < 1.0);
    CHECK(v > prev);
    prev = v;
  }

  auto u = random_field(lat, 6, 2.0);
  auto sym = [&](double lam) {
    cvec g = to_grid(lam * u);
    return Symbol(lat, 1.0).add_term(g, [](const RVec& xi) { return cplx(xi[0]); });
  };
  double n1 = symbol_seminorm(sym(1.0), 1, 1.0), n3 = symbol_seminorm(sym(3.0), 1, 1.0);
  CHECK(n3 == doctest::Approx(3.0 * n1).epsilon(1e-9));
}

TEST_CASE("matrix quantization") {
  FrequencyLattice lat(1, 10);
  auto u = random_field(lat, 8, 1.0);
  PairState U(u);
  auto I = SymbolMatrix::identity(lat);
  auto V = matrix_quantize(I, U);
  CHECK(max_diff(V.plus, U.plus) < 1e-15);
  CHECK(max_diff(V.minus, U.minus) < 1e-15);

  // real a, even-in-xi b: self-adjoint
  auto f = random_field(lat, 9, 3.0, true);
  auto g = random_field(lat, 10, 3.0);
  Symbol a(lat, 2.0), b(lat, 2.0);
  a.add_term(to_grid(f), [](const RVec& xi) { return cplx(1.0 + xi[0] * xi[0]); });
  a.set_real(true);
  b.add_term(to_grid(g), [](const RVec& xi) { return cplx(xi[0] * xi[0]); });
  SymbolMatrix A{a, b};
  CHECK(A.self_adjoint_defect(4) < 1e-13);
  PairState W(random_field(lat, 11, 1.0));
  cplx l = l2_inner(matrix_quantize(A, U), W), r = l2_inner(U, matrix_quantize(A, W));
  CHECK(std::abs(l - r) <= 1e-12 * std::abs(l));

  auto out = matrix_quantize(A, U);
  CHECK(out.invariant_defect() < 1e-12);

  SymbolMatrix B{a, Symbol(lat, 1.0).add_term(to_grid(g), [](const RVec& xi) { return cplx(xi[0]); })};
  CHECK(B.self_adjoint_defect(4) > 1e-3);
}

TEST_CASE("paraproduct remainder") {
  FrequencyLattice lat(1, 8);
  FourierField z(lat);
  CHECK(paraproduct_remainder(z, z, z).max_abs() == 0.0);

  // e^{ix} cubed: all three frequencies equal, so max1 ~ max2 wherever R is nonzero
  auto e = single_mode(lat, {1, 0, 0});
  auto r = paraproduct_remainder(e, e, e);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(r[i]) > 1e-12) CHECK(lat.freq(i)[0] == 3);
  }

  // smoothing: for band-limited f, g and high-frequency h the remainder vanishes
  FrequencyLattice big(1, 32);
  FourierField lo(big), hi(big);
  for (int k = -2; k <= 2; ++k) lo.at({k, 0, 0}) = 1.0 / (1 + k * k);
  for (int k = 24; k <= 30; ++k) hi.at({k, 0, 0}) = 1.0;
  CHECK(paraproduct_remainder(lo, lo, hi).max_abs() < 1e-12);
}

TEST_CASE("paraproduct remainder resolution sweep") {
  // ||R||_{H^{s+rho}} / prod ||.|| bounded as K doubles
  for (double rho : {1.0, 2.0}) {
    std::vector<double> ratios;
    for (int K : {8, 16, 32}) {
      FrequencyLattice lat(1, K);
      auto f = random_field(lat, 1, 4.0), g = random_field(lat, 2, 4.0), h = random_field(lat, 3, 4.0);
      auto r = paraproduct_remainder(f, g, h);
      double s = 1.0;
      ratios.push_back(sobolev_norm(r, s + rho) /
                       (sobolev_norm(f, s + rho) * sobolev_norm(g, s + rho) * sobolev_norm(h, s + rho)));
    }
    double slope = std::log(ratios[2] / ratios[0]) / std::log(4.0);
    CHECK(slope <= 0.2);
  }
}

TEST_CASE("composition of function symbols") {
  // T_a T_b - T_{ab} is bounded across resolutions and the Poisson correction removes the next order
  std::vector<double> ratios;
  for (int K : {8, 16, 32}) {
    FrequencyLattice lat(1, K);
    FourierField fa(lat), fb(lat);
    for (int k = -3; k <= 3; ++k) {
      fa.at({k, 0, 0}) = cplx(1.0 / (1 + k * k), 0.3 * k);
      fb.at({k, 0, 0}) = cplx(0.5 / (1 + std::abs(k)), -0.1 * k);
    }
    auto a = function_symbol(fa), b = function_symbol(fb);
    cvec ga = to_grid(fa), gb = to_grid(fb), gab(ga.size());
    for (std::size_t i = 0; i < ga.size(); ++i) gab[i] = ga[i] * gb[i];
    auto ab = Symbol::function(lat, gab);
    FourierField h(lat);
    for (int k = -K; k <= K; ++k) h.at({k, 0, 0}) = std::polar(std::pow(1.0 + k * k, -0.75), 0.7 * k);
    auto diff = weyl_quantize(a, weyl_quantize(b, h)) - weyl_quantize(ab, h);
    // the composed operator loses intermediate modes beyond K; compare away from the edge
    for (int k = -K; k <= K; ++k)
      if (std::abs(k) > K - 6) diff.at({k, 0, 0}) = 0.0;
    ratios.push_back(sobolev_norm(diff, 3.0) / sobolev_norm(h, 1.0));
  }
  CHECK(ratios[2] <= 1.05 * ratios[1] + 1e-14);

  FrequencyLattice lat(1, 32);
  FourierField fb(lat);
  for (int k = -3; k <= 3; ++k) fb.at({k, 0, 0}) = cplx(1.0 / (1 + k * k), 0.2 * k);
  auto b = function_symbol(fb);
  auto xi1 = Symbol::multiplier(lat, [](const RVec& xi) { return cplx(xi[0]); }, 1.0);
  auto dbx = multiplier(fb, [](const IVec& k) { return cplx(0.0, k[0]); });
  auto pb = function_symbol(dbx).scaled(1.0 / cplx(0.0, 2.0));
  FourierField h(lat);
  for (int k = 12; k <= 28; ++k) h.at({k, 0, 0}) = 1.0 / k;
  auto first = weyl_quantize(xi1, weyl_quantize(b, h)) - weyl_quantize(xi1 * b, h);
  auto second = first - weyl_quantize(pb, h);
  CHECK(sobolev_norm(first, 0.0) > 1e-2);
  CHECK(sobolev_norm(second, 0.0) < 1e-10 * sobolev_norm(first, 0.0));
}
