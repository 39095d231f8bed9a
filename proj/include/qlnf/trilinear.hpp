#pragma once

#include <functional>
#include <string>

#include "qlnf/lattice.hpp"
#include "qlnf/potential.hpp"

namespace qlnf {

using Signs = std::array<int, 3>;
using KernelFn = std::function<cplx(const IVec& xi, const IVec& eta, const IVec& zeta)>;

// Q^(xi) = (2pi)^{-d} sum_{eta,zeta} q(xi,eta,zeta) u1^(xi-eta-zeta) u2^(eta) u3^(zeta).
struct TrilinearKernel {
  KernelFn q;
  double m = 0.0;   // smoothing order
  double mu = 0.0;  // growth order in max2
};

// Largest K accepted by apply_trilinear for dimension d.
int trilinear_cap(int d);
FourierField apply_trilinear(const TrilinearKernel& Q, const FourierField& u1,
                             const FourierField& u2, const FourierField& u3);

struct BoundProbeReport {
  std::vector<int> Ks;
  std::vector<double> ratios;
  double growth_per_doubling = 0.0;  // geometric mean ratio between consecutive K
  bool bounded = true;
};

// Empirical ||Q(u,u,u)||_{H^{s+m}} / (||u||_{H^s} ||u||_{H^{s0}}^2) over doubling K (d = 1).
BoundProbeReport trilinear_bound_probe(const TrilinearKernel& Q, double s, double m, double mu,
                                       std::vector<int> Ks = {4, 8, 16}, std::uint64_t seed = 1);

bool is_resonant(const IVec& xi, const IVec& eta, const IVec& zeta, int d);
// Shell pairing for sign triples with exactly one minus; reduces to is_resonant for (+,-,+).
bool is_resonant_signed(const IVec& xi, const IVec& eta, const IVec& zeta, const Signs& s, int d);

double lambda_nls(const IVec& k, const PotentialTable& V, int d);
double lambda_kg(const IVec& k, double mass, int d);
double omega_nls(const IVec& xi, const IVec& eta, const IVec& zeta, const PotentialTable& V, int d);
double omega_kg(const IVec& xi, const IVec& eta, const IVec& zeta, const Signs& s, double mass, int d);

struct ResonanceRecord {
  IVec xi{}, eta{}, zeta{};
  Signs signs{1, -1, 1};
  double omega = 0.0;
  double max1 = 0.0, max2 = 0.0;
  bool resonant = false;
};

struct ScanParams {
  double mass = 1.5;
  PotentialTable V;
  int keep_worst = 10;
  double zero_tol = 1e-12;
};

struct ScanBucket {
  int max1_bucket = 0, max2_bucket = 0;
  double min_abs_omega = 0.0;
  long count = 0;
};

struct DivisorReport {
  int d = 1, K = 0;
  std::string model;
  double mass = 0.0;
  bool has_data = false;
  double gamma = 0.0, N0 = 0.0, beta = 0.0;
  double min_abs_omega = 0.0;
  long nonresonant = 0, resonant = 0, exact_zero = 0;
  std::vector<ScanBucket> buckets;
  std::vector<ResonanceRecord> worst;
};

// All frequencies in the Euclidean ball |k| <= K; model "nls" (gauge signs) or "kg" (all signs).
DivisorReport divisor_scan(int d, int K, const std::string& model, const ScanParams& params);
std::string divisor_csv(const DivisorReport& r, const std::string& seed_or_mass, const std::string& header);

// Taylor surrogate for Lambda_k - Lambda_j with x = |j|, y = |j-k|, z = (k-j).j.
long double kg_taylor_g(long double x, long double y, long double z, long double m);

struct TaylorCheck {
  double error = 0.0;
  double envelope = 0.0;  // |j-k|^5 / |j|^4
};
TaylorCheck taylor_error_check(const IVec& j, const IVec& k, double mass, int d);

struct MassQuadruple {
  int d = 2;
  IVec j1{}, j2{}, j3{}, j4{};
  int s3 = 1, s4 = -1;
};

// Lambda_{j3} + s3 s4 Lambda_{j4} + s3 (Lambda_{j1} - Lambda_{j2}) with the last difference
// replaced by its Taylor surrogate.
double mass_phase(const MassQuadruple& q, double mass);
// Small search for a quadruple whose phase changes sign on [1, 2].
MassQuadruple find_crossing_quadruple(int d, int J);

struct MassScanResult {
  MassQuadruple quad;
  double kappa = 0.0;
  long samples = 0, bad = 0;
  double fraction = 0.0, lo = 0.0, hi = 0.0;  // Wilson 95% interval
  std::vector<double> masses;                 // the bad masses (first few)
};

MassScanResult bad_mass_measure(const MassQuadruple& q, double kappa, long samples, std::uint64_t seed);

}  // namespace qlnf
