#include "qlnf/symbol.hpp"

#include <algorithm>
#include <cmath>

namespace qlnf {

namespace {

bool g_cutoff_mutation = false;

constexpr double kChiLo = 1.25;
constexpr double kChiHi = 1.6;

std::size_t box_index(const IVec& q, int R, int d) {
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) idx = idx * (2 * R + 1) + static_cast<std::size_t>(q[j] + R);
  return idx;
}

IVec box_freq(std::size_t idx, int R, int d) {
  IVec k{0, 0, 0};
  for (int j = d - 1; j >= 0; --j) {
    k[j] = static_cast<int>(idx % (2 * R + 1)) - R;
    idx /= (2 * R + 1);
  }
  return k;
}

std::size_t box_size(int R, int d) {
  std::size_t n = 1;
  for (int j = 0; j < d; ++j) n *= 2 * R + 1;
  return n;
}

RVec half(const IVec& p) { return {0.5 * p[0], 0.5 * p[1], 0.5 * p[2]}; }

double qnorm(const IVec& q, int d) { return std::sqrt(static_cast<double>(norm2(q, d))); }

}  // namespace

double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return 1.0 / (1.0 + std::exp(1.0 / s - 1.0 / (1.0 - s)));
}

double chi_profile(double t) {
  t = std::abs(t);
  if (t <= kChiLo) return 1.0;
  if (t >= kChiHi) return 0.0;
  double s = (kChiHi - t) / (kChiHi - kChiLo);
  return g_cutoff_mutation ? smooth_step(1.0 - s) : smooth_step(s);
}

double cutoff_chi(double t, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("cutoff eps must lie in (0, 1/2)");
  return chi_profile(std::abs(t) / eps);
}

void set_cutoff_mutation(bool on) { g_cutoff_mutation = on; }

double cutoff_join_defect(double h) {
  // one-sided forward/backward differences starting exactly at each join
  double worst = 0.0;
  auto diff = [&](double t0, double dir, int order) {
    double acc = 0.0, binom = 1.0;
    for (int i = 0; i <= order; ++i) {
      double sign = ((order - i) % 2 == 0) ? 1.0 : -1.0;
      acc += sign * binom * chi_profile(t0 + dir * i * h);
      binom = binom * (order - i) / (i + 1);
    }
    return std::abs(acc) / std::pow(h, order);
  };
  for (int order = 1; order <= 4; ++order) {
    worst = std::max(worst, diff(kChiLo, 1.0, order));
    worst = std::max(worst, diff(kChiHi, -1.0, order));
  }
  return worst;
}

Symbol Symbol::multiplier(const FrequencyLattice& lat, XiFn g, double order, bool real) {
  Symbol s(lat, order);
  s.real_ = real;
  s.terms_.push_back({{}, std::move(g)});
  return s;
}

Symbol Symbol::constant(const FrequencyLattice& lat, cplx c) {
  return multiplier(lat, [c](const RVec&) { return c; }, 0.0, c.imag() == 0.0);
}

Symbol Symbol::function(const FrequencyLattice& lat, cvec samples, bool real) {
  if (samples.size() != lat.grid_size()) throw std::invalid_argument("symbol samples size mismatch");
  Symbol s(lat, 0.0);
  s.real_ = real;
  s.terms_.push_back({std::move(samples), [](const RVec&) { return cplx(1.0); }});
  return s;
}

Symbol Symbol::general(const FrequencyLattice& lat, double order, FillFn f, bool real) {
  Symbol s(lat, order);
  s.real_ = real;
  s.general_.push_back(std::move(f));
  return s;
}

Symbol& Symbol::add_term(cvec x, XiFn g) {
  if (!x.empty() && x.size() != lat_.grid_size()) throw std::invalid_argument("symbol samples size mismatch");
  terms_.push_back({std::move(x), std::move(g)});
  return *this;
}

Symbol& Symbol::add_general(FillFn f) {
  general_.push_back(std::move(f));
  return *this;
}

bool Symbol::x_independent() const {
  if (!general_.empty()) return false;
  for (auto& t : terms_)
    if (!t.x.empty()) return false;
  return true;
}

cvec Symbol::samples(const RVec& xi) const {
  cvec out(lat_.grid_size(), cplx(0.0));
  for (auto& t : terms_) {
    cplx g = t.g(xi);
    if (t.x.empty()) {
      for (auto& v : out) v += g;
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += g * t.x[i];
    }
  }
  for (auto& f : general_) f(xi, out);
  return out;
}

cplx Symbol::eval(std::size_t gidx, const RVec& xi) const {
  cplx acc = 0.0;
  for (auto& t : terms_) acc += t.g(xi) * (t.x.empty() ? cplx(1.0) : t.x[gidx]);
  if (!general_.empty()) {
    cvec out(lat_.grid_size(), cplx(0.0));
    for (auto& f : general_) f(xi, out);
    acc += out[gidx];
  }
  return acc;
}

Symbol Symbol::conj() const {
  Symbol s(lat_, order_);
  s.real_ = real_;
  for (auto& t : terms_) {
    cvec x = t.x;
    for (auto& v : x) v = std::conj(v);
    auto g = t.g;
    s.terms_.push_back({std::move(x), [g](const RVec& xi) { return std::conj(g(xi)); }});
  }
  for (auto& f : general_) {
    s.general_.push_back([f](const RVec& xi, cvec& out) {
      cvec tmp(out.size(), cplx(0.0));
      f(xi, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::conj(tmp[i]);
    });
  }
  return s;
}

Symbol Symbol::tilde() const {
  Symbol s(lat_, order_);
  s.real_ = false;
  for (auto& t : terms_) {
    cvec x = t.x;
    for (auto& v : x) v = std::conj(v);
    auto g = t.g;
    s.terms_.push_back({std::move(x), [g](const RVec& xi) {
                          return std::conj(g({-xi[0], -xi[1], -xi[2]}));
                        }});
  }
  for (auto& f : general_) {
    s.general_.push_back([f](const RVec& xi, cvec& out) {
      cvec tmp(out.size(), cplx(0.0));
      f({-xi[0], -xi[1], -xi[2]}, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::conj(tmp[i]);
    });
  }
  return s;
}

Symbol Symbol::scaled(cplx c) const {
  Symbol s = *this;
  for (auto& t : s.terms_) {
    auto g = t.g;
    t.g = [g, c](const RVec& xi) { return c * g(xi); };
  }
  for (auto& f : s.general_) {
    auto f0 = f;
    f = [f0, c](const RVec& xi, cvec& out) {
      cvec tmp(out.size(), cplx(0.0));
      f0(xi, tmp);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * tmp[i];
    };
  }
  if (c.imag() != 0.0) s.real_ = false;
  return s;
}

Symbol operator+(const Symbol& a, const Symbol& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.lat_ != b.lat_) throw std::invalid_argument("symbol lattice mismatch");
  Symbol s(a.lat_, std::max(a.order_, b.order_));
  s.real_ = a.real_ && b.real_;
  s.terms_ = a.terms_;
  s.terms_.insert(s.terms_.end(), b.terms_.begin(), b.terms_.end());
  s.general_ = a.general_;
  s.general_.insert(s.general_.end(), b.general_.begin(), b.general_.end());
  return s;
}

Symbol operator-(const Symbol& a, const Symbol& b) { return a + b.scaled(-1.0); }

Symbol operator*(const Symbol& a, const Symbol& b) {
  if (a.lat_ != b.lat_) throw std::invalid_argument("symbol lattice mismatch");
  Symbol s(a.lat_, a.order_ + b.order_);
  s.real_ = a.real_ && b.real_;
  if (a.general_.empty() && b.general_.empty()) {
    for (auto& ta : a.terms_) {
      for (auto& tb : b.terms_) {
        cvec x;
        if (ta.x.empty()) {
          x = tb.x;
        } else if (tb.x.empty()) {
          x = ta.x;
        } else {
          x.resize(ta.x.size());
          for (std::size_t i = 0; i < x.size(); ++i) x[i] = ta.x[i] * tb.x[i];
        }
        auto ga = ta.g, gb = tb.g;
        s.terms_.push_back({std::move(x), [ga, gb](const RVec& xi) { return ga(xi) * gb(xi); }});
      }
    }
    return s;
  }
  Symbol sa = a, sb = b;
  s.general_.push_back([sa, sb](const RVec& xi, cvec& out) {
    cvec pa = sa.samples(xi), pb = sb.samples(xi);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += pa[i] * pb[i];
  });
  return s;
}

double Symbol::realness_defect(int xi_range) const {
  double im = 0.0, mag = 0.0;
  int d = lat_.d;
  std::size_t n = box_size(xi_range, d);
  for (std::size_t i = 0; i < n; ++i) {
    IVec p = box_freq(i, xi_range, d);
    cvec s = samples(half(p));
    for (auto& v : s) {
      im = std::max(im, std::abs(v.imag()));
      mag = std::max(mag, std::abs(v));
    }
  }
  return mag == 0.0 ? 0.0 : im / mag;
}

FourierField weyl_quantize(const Symbol& a, const FourierField& h, double eps) {
  const auto& lat = h.lattice();
  if (a.lattice() != lat) throw std::invalid_argument("symbol/field lattice mismatch");
  const int d = lat.d, K = lat.K, R = 2 * K;
  FourierField out(lat);
  const std::size_t N = lat.size();
  const double reach = kChiHi * eps;

  if (a.x_independent()) {
    for (std::size_t i = 0; i < N; ++i) {
      IVec k = lat.freq(i);
      RVec xi{double(k[0]), double(k[1]), double(k[2])};
      cplx v = 0.0;
      for (auto& t : a.terms()) v += t.g(xi);
      out[i] = v * h[i];
    }
    return out;
  }

  const std::size_t PB = box_size(R, d);
  // separable terms: coefficient boxes in q and xi-values at p/2
  std::vector<cvec> C, G;
  for (auto& t : a.terms()) {
    cvec c(PB, cplx(0.0));
    if (t.x.empty()) {
      c[box_index({0, 0, 0}, R, d)] = 1.0;
    } else {
      cvec plain = grid_to_plain(t.x, lat);
      for (std::size_t i = 0; i < PB; ++i) c[i] = plain[lat.grid_index(box_freq(i, R, d))];
    }
    cvec g(PB);
    for (std::size_t i = 0; i < PB; ++i) g[i] = t.g(half(box_freq(i, R, d)));
    C.push_back(std::move(c));
    G.push_back(std::move(g));
  }

  std::vector<IVec> freqs(N);
  for (std::size_t i = 0; i < N; ++i) freqs[i] = lat.freq(i);

  if (!C.empty()) {
    for (std::size_t ji = 0; ji < N; ++ji) {
      const IVec& j = freqs[ji];
      cplx acc = 0.0;
      for (std::size_t ki = 0; ki < N; ++ki) {
        if (h[ki] == cplx(0.0)) continue;
        const IVec& k = freqs[ki];
        IVec q = sub(j, k), p = add(j, k);
        double qn = qnorm(q, d), pb = bracket(p, d);
        if (qn >= reach * pb) continue;
        double w = cutoff_chi(qn / pb, eps);
        std::size_t qi = box_index(q, R, d), pi = box_index(p, R, d);
        cplx s = 0.0;
        for (std::size_t r = 0; r < C.size(); ++r) s += C[r][qi] * G[r][pi];
        acc += w * s * h[ki];
      }
      out[ji] += acc;
    }
  }

  if (!a.generals().empty()) {
    for (std::size_t pi = 0; pi < PB; ++pi) {
      IVec p = box_freq(pi, R, d);
      double pb = bracket(p, d);
      // collect contributing k first to avoid needless transforms
      std::vector<std::size_t> ks;
      for (std::size_t ki = 0; ki < N; ++ki) {
        if (h[ki] == cplx(0.0)) continue;
        IVec j = sub(p, freqs[ki]);
        if (!lat.contains(j)) continue;
        if (qnorm(sub(j, freqs[ki]), d) >= reach * pb) continue;
        ks.push_back(ki);
      }
      if (ks.empty()) continue;
      cvec smp(lat.grid_size(), cplx(0.0));
      for (auto& f : a.generals()) f(half(p), smp);
      cvec plain = grid_to_plain(smp, lat);
      for (std::size_t ki : ks) {
        IVec j = sub(p, freqs[ki]);
        IVec q = sub(j, freqs[ki]);
        double w = cutoff_chi(qnorm(q, d) / pb, eps);
        out[lat.index(j)] += w * plain[lat.grid_index(q)] * h[ki];
      }
    }
  }
  return out;
}

double symbol_seminorm(const Symbol& a, int s, double m, double fd_step) {
  const auto& lat = a.lattice();
  const int d = lat.d;
  // xi-derivative of the samples by nested central differences
  std::function<cvec(const RVec&, IVec)> dxi = [&](const RVec& xi, IVec beta) -> cvec {
    int j = -1;
    for (int t = 0; t < d; ++t)
      if (beta[t] > 0) { j = t; break; }
    if (j < 0) return a.samples(xi);
    beta[j] -= 1;
    RVec xp = xi, xm = xi;
    xp[j] += fd_step;
    xm[j] -= fd_step;
    cvec fp = dxi(xp, beta), fm = dxi(xm, beta);
    for (std::size_t i = 0; i < fp.size(); ++i) fp[i] = (fp[i] - fm[i]) / (2.0 * fd_step);
    return fp;
  };

  // multi-indices with |alpha| + |beta| <= s
  std::vector<std::pair<IVec, IVec>> idx;
  std::vector<IVec> all;
  int R = s;
  for (std::size_t i = 0; i < box_size(R, d); ++i) {
    IVec v = box_freq(i, R, d);
    bool ok = true;
    int tot = 0;
    for (int t = 0; t < d; ++t) {
      if (v[t] < 0) ok = false;
      tot += v[t];
    }
    if (ok && tot <= s) all.push_back(v);
  }
  for (auto& al : all)
    for (auto& be : all) {
      int tot = 0;
      for (int t = 0; t < d; ++t) tot += al[t] + be[t];
      if (tot <= s) idx.push_back({al, be});
    }

  double sup = 0.0;
  int L = 2 * lat.K;
  for (std::size_t i = 0; i < box_size(L, d); ++i) {
    IVec k = box_freq(i, L, d);
    int n2 = norm2(k, d);
    if (4 * n2 <= 1 || n2 > L * L) continue;
    RVec xi{double(k[0]), double(k[1]), double(k[2])};
    double br = bracket(xi, d);
    for (auto& [al, be] : idx) {
      cvec v = dxi(xi, be);
      int nb = 0;
      for (int t = 0; t < d; ++t) {
        for (int r = 0; r < al[t]; ++r) v = grid_derivative(v, lat, t);
        nb += be[t];
      }
      double mx = 0.0;
      for (auto& x : v) mx = std::max(mx, std::abs(x));
      sup = std::max(sup, std::pow(br, -m + nb) * mx);
    }
  }
  return sup;
}

SymbolMatrix SymbolMatrix::identity(const FrequencyLattice& lat) {
  return {Symbol::constant(lat, 1.0), Symbol::constant(lat, 0.0)};
}

double SymbolMatrix::self_adjoint_defect(int xi_range) const {
  const auto& lat = a.lattice();
  int d = lat.d;
  double err = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < box_size(xi_range, d); ++i) {
    IVec p = box_freq(i, xi_range, d);
    RVec xi = half(p), mxi = half(neg(p));
    cvec sa = a.samples(xi), sb = b.samples(xi), sbm = b.samples(mxi);
    for (std::size_t g = 0; g < sa.size(); ++g) {
      err = std::max({err, std::abs(sa[g].imag()), std::abs(sb[g] - sbm[g])});
      mag = std::max({mag, std::abs(sa[g]), std::abs(sb[g])});
    }
  }
  return mag == 0.0 ? 0.0 : err / mag;
}

PairState matrix_quantize(const SymbolMatrix& A, const PairState& U, double eps) {
  require_same_lattice(U.plus, U.minus);
  FourierField p = weyl_quantize(A.a, U.plus, eps);
  FourierField m = weyl_quantize(A.a.tilde(), U.minus, eps);
  if (!A.b.empty()) {
    p += weyl_quantize(A.b, U.minus, eps);
    m += weyl_quantize(A.b.tilde(), U.plus, eps);
  }
  return PairState(std::move(p), std::move(m));
}

Symbol function_symbol(const FourierField& f) {
  return Symbol::function(f.lattice(), to_grid(f), f.reality());
}

FourierField paraproduct_remainder(const FourierField& f, const FourierField& g,
                                   const FourierField& h, double eps) {
  const auto& lat = f.lattice();
  require_same_lattice(f, g);
  require_same_lattice(f, h);
  cvec F = to_grid(f), Gg = to_grid(g), H = to_grid(h);
  auto prod = [&](const cvec& x, const cvec& y) {
    cvec z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
    return z;
  };
  FourierField r = pointwise_product({f, g, h});
  r -= weyl_quantize(Symbol::function(lat, prod(F, Gg)), h, eps);
  r -= weyl_quantize(Symbol::function(lat, prod(Gg, H)), f, eps);
  r -= weyl_quantize(Symbol::function(lat, prod(F, H)), g, eps);
  return r;
}

}  // namespace qlnf
