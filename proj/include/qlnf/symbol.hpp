#pragma once

#include <functional>

#include "qlnf/lattice.hpp"

namespace qlnf {

constexpr double kDefaultCutoffEps = 0.25;

// Smooth step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s);
// chi(t): 1 on [0, 5/4], 0 on [8/5, inf).
double chi_profile(double t);
// chi(|t|/eps); throws unless 0 < eps < 1/2.
double cutoff_chi(double t, double eps = kDefaultCutoffEps);

// Test hook: replaces the transition profile by its mirror image (breaks smoothness).
void set_cutoff_mutation(bool on);

// Largest |finite-difference derivative| of order 1..4 at both joins of the transition.
double cutoff_join_defect(double h = 1e-3);

// a(x, xi) as padded-grid samples in x of closures in xi. A symbol is a sum of
// separable terms x_r(x) g_r(xi) plus optional general closures.
class Symbol {
 public:
  using XiFn = std::function<cplx(const RVec&)>;
  using FillFn = std::function<void(const RVec&, cvec&)>;  // adds a(., xi) into out
  struct Term {
    cvec x;  // empty means the constant 1
    XiFn g;
  };

  Symbol() = default;
  Symbol(const FrequencyLattice& lat, double order) : lat_(lat), order_(order) {}

  static Symbol multiplier(const FrequencyLattice& lat, XiFn g, double order, bool real = true);
  static Symbol constant(const FrequencyLattice& lat, cplx c);
  static Symbol function(const FrequencyLattice& lat, cvec samples, bool real = false);
  static Symbol general(const FrequencyLattice& lat, double order, FillFn f, bool real = false);

  Symbol& add_term(cvec x, XiFn g);
  Symbol& add_general(FillFn f);

  const FrequencyLattice& lattice() const { return lat_; }
  double order() const { return order_; }
  void set_order(double m) { order_ = m; }
  bool real_valued() const { return real_; }
  void set_real(bool r) { real_ = r; }
  bool x_independent() const;
  bool empty() const { return terms_.empty() && general_.empty(); }

  const std::vector<Term>& terms() const { return terms_; }
  const std::vector<FillFn>& generals() const { return general_; }

  cvec samples(const RVec& xi) const;
  cplx eval(std::size_t gidx, const RVec& xi) const;

  // conj(a(x, xi)).
  Symbol conj() const;
  // conj(a(x, -xi)).
  Symbol tilde() const;
  Symbol scaled(cplx c) const;

  friend Symbol operator+(const Symbol& a, const Symbol& b);
  friend Symbol operator-(const Symbol& a, const Symbol& b);
  friend Symbol operator*(const Symbol& a, const Symbol& b);

  // Largest |imag| over sampled (x, xi) relative to the largest |a|.
  double realness_defect(int xi_range) const;

 private:
  FrequencyLattice lat_;
  double order_ = 0.0;
  bool real_ = false;
  std::vector<Term> terms_;
  std::vector<FillFn> general_;
};

// (T_a h)^(j) = sum_k chi_eps(|j-k|/<j+k>) c_a(j-k; (j+k)/2) h^(k), c_a the plain x-coefficients.
FourierField weyl_quantize(const Symbol& a, const FourierField& h, double eps = kDefaultCutoffEps);

// Sampled version of the order-m seminorm with s derivatives.
double symbol_seminorm(const Symbol& a, int s, double m, double fd_step = 1e-3);

// [[a, b], [tilde b, tilde a]] acting on (u, ubar).
struct SymbolMatrix {
  Symbol a;
  Symbol b;
  static SymbolMatrix identity(const FrequencyLattice& lat);
  // a real-valued and b even in xi, checked on samples.
  double self_adjoint_defect(int xi_range) const;
};

PairState matrix_quantize(const SymbolMatrix& A, const PairState& U, double eps = kDefaultCutoffEps);

// fgh - T_{fg}h - T_{gh}f - T_{fh}g at truncation.
FourierField paraproduct_remainder(const FourierField& f, const FourierField& g,
                                   const FourierField& h, double eps = kDefaultCutoffEps);

// Symbol sampled from physical-space products of fields (order 0 function symbol).
Symbol function_symbol(const FourierField& f);

}  // namespace qlnf
