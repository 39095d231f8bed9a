#pragma once

#include <string>

#include "qlnf/generator.hpp"
#include "qlnf/integrator.hpp"
#include "qlnf/lattice.hpp"
#include "qlnf/potential.hpp"
#include "qlnf/symbol.hpp"

namespace qlnf {

struct NlsConfig {
  int d = 1, K = 16;
  std::string h_kind = "tau_squared";  // h(t) = t^2, the only built-in
  PotentialTable V = PotentialTable::zero(1);
  double eps = kDefaultCutoffEps;
  double s = 10.0;
  double dt = 1e-3, t_max = 1.0;
  bool nonlinear = true;

  FrequencyLattice lattice() const { return FrequencyLattice(d, K); }
  double n() const { return s / 2.0; }
};

struct NlsState {
  double t = 0.0;
  PairState U;
};

// Throws for anything but the built-in h.
void validate(const NlsConfig& cfg);

// Lambda_NLS(k) = |k|^2 + Vhat(k).
double nls_dispersion(const IVec& k, const NlsConfig& cfg);
double nls_lambda_max(const NlsConfig& cfg);

// Plus component of the nonlinear part only (everything except -i Lambda u).
FourierField nls_nonlinear(const FourierField& u, const NlsConfig& cfg);
PairState nls_rhs(const PairState& U, const NlsConfig& cfg);

double nls_hamiltonian(const PairState& U, const NlsConfig& cfg);
double nls_mass(const PairState& U);

struct NlsParalinear {
  Symbol a2, b2, a1;  // a1 is the first-order symbol a1(x).xi
  SymbolMatrix A2;    // [[a2, b2], [conj b2, a2]] as a matrix of order-0 coefficients
  PairState X4;       // cubic field, second component the conjugate
  PairState assembled;
  PairState residual;
  cvec a2_samples, b2_samples;
  std::vector<cvec> a1_samples;  // one per direction
};

NlsParalinear nls_paralinear_symbols(const PairState& U, const NlsConfig& cfg);

struct NlsDiag2 {
  cvec lambda, a2p, s1, s1m1, s2;  // grid samples; s1m1 = s1 - 1 evaluated stably
  std::vector<cvec> a1p;           // corrected first-order coefficients per direction
  SymbolMatrix Sinv;               // [[s1, -s2], [-conj s2, s1]]
  SymbolMatrix S;

  // Largest |S^{-1} E (1 + A2) S - E diag(lambda)| over the grid, and of s1^2 - |s2|^2 - 1.
  double conjugation_defect = 0.0;
  double determinant_defect = 0.0;
};

// Throws std::domain_error when ||u||_{H^s} > kSmallnessLimit.
NlsDiag2 diag_order2(const PairState& U, const NlsConfig& cfg);
// Plus output of Op(S^{-1}) E Op((1 + A2)|xi|^2) Op(S) applied to (0, w): the off-diagonal action.
FourierField nls_offdiag_action(const NlsDiag2& D, const PairState& U, const FourierField& wbar,
                                const NlsConfig& cfg);
// W = Op(S^{-1}) U, and the small part W - U computed without cancellation.
PairState apply_phi_nls(const NlsDiag2& D, const PairState& U, double eps);
PairState phi_nls_correction(const NlsDiag2& D, const PairState& U, double eps);

struct EnergyVariable {
  Symbol L, Sigma;
  Symbol Ln_minus_top;  // L^n - |xi|^{2n}
  FourierField zn;
};

EnergyVariable energy_variable(const PairState& Z, const NlsDiag2& D, const NlsConfig& cfg);
// T_{L^n - |xi|^{2n}} z for the symbol built from D.
FourierField nls_energy_correction(const FourierField& z, const NlsDiag2& D, const NlsConfig& cfg);

// One integrating-factor RK4 step; throws on CFL violation.
NlsState step(const NlsState& st, const NlsConfig& cfg);

}  // namespace qlnf
