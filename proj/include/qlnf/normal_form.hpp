#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qlnf/kg.hpp"
#include "qlnf/nls.hpp"
#include "qlnf/trilinear.hpp"

namespace qlnf {

constexpr int kNoThreshold = std::numeric_limits<int>::max();

// Coefficient list of a trilinear kernel on one lattice; entries with zero coefficient are dropped.
struct TabulatedKernel {
  struct Entry {
    std::uint32_t xi, p, eta, zeta;  // p = xi - eta - zeta
    cplx c;
  };
  FrequencyLattice lat;
  std::vector<Entry> entries;

  // (2pi)^{-d} sum c a(p) b(eta) e(zeta), output at xi.
  FourierField apply(const FourierField& a, const FourierField& b, const FourierField& e) const;
  // (2pi)^{-d} sum c a(p) b(eta) e(zeta) f(-xi).
  cplx form(const FourierField& a, const FourierField& b, const FourierField& e, const FourierField& f) const;
};

using TripleFilter = std::function<bool(const IVec& xi, const IVec& eta, const IVec& zeta)>;
TabulatedKernel tabulate_kernel(const KernelFn& q, const FrequencyLattice& lat, const TripleFilter& keep = {});
// Only the triples of the resonant set; cheap to build in any dimension.
TabulatedKernel tabulate_resonant(const KernelFn& q, const FrequencyLattice& lat);

// H = (2pi)^{-d} sum h4(xi,eta,zeta) u(xi-eta-zeta) ubar(eta) u(zeta) ubar(-xi).
struct QuarticHamiltonian {
  FrequencyLattice lat;
  KernelFn h4;
};

// Throws std::invalid_argument naming the first lattice triple that breaks a coefficient symmetry.
void validate_quartic(const QuarticHamiltonian& H, double tol = 1e-12);
double quartic_value(const QuarticHamiltonian& H, const FourierField& u);

// X^+(xi) = sum over sign triples (2pi)^{-d} sum f u^{s1}(xi-eta-zeta) u^{s2}(eta) u^{s3}(zeta),
// u^- meaning ubar; the second component is the conjugate.
struct CubicField {
  FrequencyLattice lat;
  std::map<Signs, TrilinearKernel> kernels;

  bool gauge_invariant() const;
  FourierField apply(const FourierField& u) const;
};

// X = -i Lambda u on both components.
struct QuadraticField {
  std::function<double(const IVec&)> lambda;
  FourierField apply(const FourierField& u) const;
};

CubicField hamiltonian_vector_field(const QuarticHamiltonian& H);
QuadraticField hamiltonian_vector_field(std::function<double(const IVec&)> lambda);

// [X_G, X_H] = dX_G[X_H] - dX_H[X_G].
CubicField poisson_bracket_commutator(const CubicField& G, const QuadraticField& H);
CubicField poisson_bracket_commutator(const QuadraticField& G, const CubicField& H);
CubicField poisson_bracket_commutator(const QuadraticField& G, const QuadraticField& H);
// Degree five; throws std::invalid_argument.
CubicField poisson_bracket_commutator(const CubicField& G, const CubicField& H);

// (X_res, X_perp); only the (+,-,+) kernel has a resonant part.
std::pair<CubicField, CubicField> resonant_projection(const CubicField& X);

// Cubic field of the nls equation after the order-0 step: -i |z|^2 z plus the commutator of
// the generator with -i Lambda, symmetrized in the two z slots.
CubicField nls_z_field(const NlsConfig& cfg);
// chi_eps(|xi - zeta| / <xi + zeta>).
double para_cutoff(const IVec& xi, const IVec& zeta, int d, double eps);
// b1 = -2i chi_eps(|xi-zeta|/<xi+zeta>) on the complement of the resonant set.
TrilinearKernel b1_kernel(int d, double eps);

struct CancellationReport {
  // Real parts of the three pairings, each divided by its Cauchy-Schwarz bound.
  double resonant_sobolev = 0.0;
  double superaction = 0.0;
  double b1_energy = 0.0;
  // Largest defects over enumerated triples.
  double b1_antisymmetry = 0.0;
  double F_symmetrization = 0.0;

  std::map<std::string, double> as_map() const;
  bool pass(double tol) const;
};

// X must be a gauge-invariant Hamiltonian field; zn is the energy variable paired with B1.
CancellationReport cancellation_suite(const CubicField& X, const FourierField& z, const FourierField& zn,
                                      double n, double eps = kDefaultCutoffEps);
// Re(<D>^n X_res(z), <D>^n z) by the explicit quadruple sum over all lattice triples.
double resonant_pairing_bruteforce(const CubicField& X, const FourierField& z, double n);

// Super actions I_p = sum_{|j|^2 = p} |z(j)|^2, keyed by p.
std::map<int, double> super_actions(const FourierField& z);
struct SuperActionReport {
  double max_relative_drift = 0.0;
  int shells = 0;
  std::size_t resonant_triples = 0;
};
// Explicit RK4 on dz/dt = X_res(z).
SuperActionReport resonant_flow_superactions(const CubicField& X, const FourierField& z0, double dt, double T);

// b2 = c2 + c3 off the resonant set, c3 written symmetrically in the two z slots.
TrilinearKernel build_B2_kernel(const CubicField& X, double n, double eps);
TrilinearKernel build_B2_kernel(const NlsConfig& cfg);

struct EnvelopeReport {
  std::vector<int> Ks;
  std::vector<double> ratios;  // max |b2| <max1> / (<xi>^{2n} <max2>^4)
  bool bounded = true;
};
EnvelopeReport b2_envelope_scan(NlsConfig cfg, std::vector<int> Ks = {4, 8});

struct SplitParams {
  std::string model = "nls";
  PotentialTable V = PotentialTable::zero(1);
  double mass = 1.5;
  Signs signs{1, -1, 1};
  double zero_tol = 1e-12;
};

struct NormalFormSplit {
  int N = kNoThreshold;
  TrilinearKernel b1, b2, t_lo;
};

double split_omega(const IVec& xi, const IVec& eta, const IVec& zeta, const SplitParams& p, int d);
// Validates the kernel off the resonant set and every divisor of the low block on the lattice.
NormalFormSplit normal_form_split(const TrilinearKernel& kernel, const FrequencyLattice& lat, int N,
                                  const SplitParams& p);

// Integration by parts along the cubic Z-flow z' = -i Lambda z + X(z) (d = 1, small K):
// int_0^T B1 dt = [Q_t]_0^T - int_0^T (four slot terms) dt, with Q_t the quartic form of t_<.
struct IbpReport {
  double lhs = 0.0, rhs = 0.0, residual = 0.0, scale = 0.0;
};
IbpReport ibp_identity_check(const NlsConfig& cfg, const FourierField& z0, int N, double T, int steps);

struct EnergyTerms {
  double t = 0.0;
  double norm2 = 0.0;  // ||z_n||^2
  double D = 0.0;      // exact derivative of ||z_n||^2 along the flow
  double B = 0.0;      // quartic part
};

// b2 may be passed in to avoid re-tabulating the kernel.
EnergyTerms nls_energy_terms(const NlsState& st, const NlsConfig& cfg, const TabulatedKernel* b2 = nullptr);
EnergyTerms kg_energy_terms(const KgState& st, const KgConfig& cfg);

struct LedgerRow {
  double t = 0.0, d_norm2_dt = 0.0, B = 0.0, B_gt5 = 0.0, closure = 0.0;
};
struct EnergyLedger {
  double dt_out = 0.0;
  std::vector<LedgerRow> rows;  // interior snapshots (central differences)
  std::string csv(const std::string& header_comment = "") const;
};

// Equally spaced snapshots with spacing at most 10 dt; throws std::invalid_argument otherwise.
EnergyLedger energy_decomposition(const std::vector<NlsState>& snaps, const NlsConfig& cfg);
EnergyLedger energy_decomposition(const std::vector<KgState>& snaps, const KgConfig& cfg);

}  // namespace qlnf
