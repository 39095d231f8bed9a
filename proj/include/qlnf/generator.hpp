#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "qlnf/lattice.hpp"
#include "qlnf/symbol.hpp"

namespace qlnf {

// Transforms refuse states with ||u||_{H^s} above this.
constexpr double kSmallnessLimit = 0.2;

// Order-0 generator B(W) = Re int i (T_b wbar) wbar dx with b(x, xi) quadratic in the
// truncated field S_xi W:
//   nls: b = (S_xi w)^2 / (2 |xi|^2)
//   kg:  b = a0(S_xi W; x, xi) / (2 Lambda_KG(xi)),
//        a0 = sum_e rho_e(xi) psi^{2-e} (Lambda^{1/2} psi)^e,
//        rho_e = c0[e] + c1[e] Lambda^{-1/2}(xi) + c2[e] Lambda^{-1}(xi).
struct GeneratorSpec {
  std::string model = "nls";
  double eps = kDefaultCutoffEps;
  double mass = 1.5;
  std::array<double, 3> c0{}, c1{}, c2{};
};

// Full coefficient of wbar(k) wbar(-j) v(p1) v(j-k-p1) in Q, before the (2pi)^{-d} factor.
double generator_kappa(const GeneratorSpec& g, const IVec& j, const IVec& k, const IVec& p1, int d);

double generator_hamiltonian(const GeneratorSpec& g, const PairState& W);
// X_B = -i J grad B, from the exact Wirtinger gradient of the discrete B.
PairState generator_field(const GeneratorSpec& g, const PairState& W);
// dX_B(W)[V], exact for the cubic X_B (polarization with matched scaling).
PairState generator_tangent(const GeneratorSpec& g, const PairState& W, const PairState& V);

// Closed form of the nls field coefficient: X_B^+(xi) = (2pi)^{-d} sum beta u(xi-eta-zeta) ubar(eta) u(zeta).
// Terms whose frequencies leave the lattice vanish, as in the truncated sum.
cplx nls_generator_kernel(const GeneratorSpec& g, const FrequencyLattice& lat, const IVec& xi,
                          const IVec& eta, const IVec& zeta);

// b(x, xi) as a symbol for a given w (nls only).
Symbol nls_generator_symbol(const GeneratorSpec& g, const FourierField& w);

// Z = W + X_B(W); refuses ||w||_{H^s} > limit.
PairState generator_transform(const GeneratorSpec& g, const PairState& W, double s, double limit = kSmallnessLimit);
// W ~ Z - X_B(Z).
PairState generator_inverse(const GeneratorSpec& g, const PairState& Z);

using FieldFn = std::function<PairState(const PairState&)>;
// Cubic part of the Z-equation: X4(Z) + dX_B(Z)[-i E Lambda Z] + i E Lambda X_B(Z),
// lambda tabulated per lattice index.
PairState z_cubic_field(const GeneratorSpec& g, const std::vector<double>& lambda, const FieldFn& x4,
                        const PairState& Z);

}  // namespace qlnf
