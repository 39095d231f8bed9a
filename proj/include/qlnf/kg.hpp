#pragma once

#include <array>
#include <utility>
#include <vector>

#include "qlnf/generator.hpp"
#include "qlnf/integrator.hpp"
#include "qlnf/lattice.hpp"
#include "qlnf/symbol.hpp"

namespace qlnf {

// coef * y0^e[0] * y1^e[1] * ... ; for F, y0 = psi and y_j = d_j psi.
struct Monomial {
  double coef = 0.0;
  std::array<int, 4> e{};
};

// F = y0^2 (sum_j y_j^2)^2 expanded.
std::vector<Monomial> default_F(int d);

struct KgConfig {
  int d = 1, K = 16;
  double mass = 1.5;
  std::vector<Monomial> F = default_F(1);
  std::array<double, 5> G{0.0, 0.0, 1.0, 0.0, 0.0};  // G = sum_b G[b] y0^{4-b} y1^b
  bool semilinear = false;
  double s = 10.0;
  double dt = 1e-3, t_max = 1.0;
  double eps = kDefaultCutoffEps;
  bool nonlinear = true;

  FrequencyLattice lattice() const { return FrequencyLattice(d, K); }
  double n() const { return s / 2.0; }
};

// Default quasi-linear configuration in dimension d.
KgConfig kg_default(int d, int K);
// F = 0, G = y0^4 / 4.
KgConfig kg_semilinear(int d, int K);

// Degree and valuation checks; throws std::invalid_argument.
void validate(const KgConfig& cfg);

double kg_lambda(const IVec& k, const KgConfig& cfg);
double kg_lambda_max(const KgConfig& cfg);

struct KgRealState {
  double t = 0.0;
  FourierField psi, phi;
};

struct KgState {
  double t = 0.0;
  PairState U;
};

PairState complex_transform(const FourierField& psi, const FourierField& phi, double mass);
std::pair<FourierField, FourierField> inverse_complex_transform(const PairState& U, double mass);

// f(psi) and g(psi) as truncated real fields.
FourierField kg_f(const FourierField& psi, const KgConfig& cfg);
FourierField kg_g(const FourierField& psi, const KgConfig& cfg);

// (psi_t, phi_t).
std::pair<FourierField, FourierField> kg_rhs(const FourierField& psi, const FourierField& phi,
                                             const KgConfig& cfg);
// Plus component of the nonlinear part in complex variables.
FourierField kg_nonlinear(const FourierField& u, const KgConfig& cfg);
PairState kg_rhs_complex(const PairState& U, const KgConfig& cfg);
// Cubic field -i Lambda^{-1/2} g(psi) / sqrt 2.
PairState kg_cubic_field(const PairState& U, const KgConfig& cfg);

double kg_hamiltonian(const FourierField& psi, const FourierField& phi, const KgConfig& cfg);
double kg_hamiltonian(const PairState& U, const KgConfig& cfg);

struct KgParalinear {
  Symbol a2, a2t, a0;
  SymbolMatrix A1, A0;
  std::vector<cvec> Fjk;  // d*d second derivatives of F in the gradient slots
  PairState X4;
  PairState Q3;  // X4 + i T_{a0}(u + ubar)
  PairState assembled, residual;
};

KgParalinear kg_paralinear_symbols(const PairState& U, const KgConfig& cfg);

struct KgDiag1 {
  Symbol lambda, a2p, s1, s1m1, s2;
  SymbolMatrix S, Sinv;
  double conjugation_defect = 0.0;
  double determinant_defect = 0.0;
};

// Throws std::domain_error when ||u||_{H^s} exceeds the smallness limit.
KgDiag1 kg_diag_order1(const PairState& U, const KgConfig& cfg);
PairState phi_kg_correction(const KgDiag1& D, const PairState& U, double eps);
PairState apply_phi_kg(const KgDiag1& D, const PairState& U, double eps);

// a0 = 1/2 G_11 + G_10 Lambda^{-1/2}(xi), or 1/2 G_00 Lambda^{-1}(xi) in semilinear mode.
GeneratorSpec kg_generator_spec(const KgConfig& cfg);

struct KgDiag0 {
  GeneratorSpec gen;
  PairState Z;
};
KgDiag0 kg_diag_order0(const PairState& W, const KgConfig& cfg);

// Coupling of a high mode e^{iNx} into the conjugate slot, before (X4) and after (Z-equation
// cubic field) the order-0 step, for a fixed low-frequency background w (d = 1).
struct KgOffdiag {
  double before = 0.0, after = 0.0;
};
KgOffdiag kg_offdiag_coupling(const KgConfig& cfg, const FourierField& w, int N);

// One integrating-factor RK4 step in complex variables; throws on CFL violation.
KgState step(const KgState& st, const KgConfig& cfg);

}  // namespace qlnf
