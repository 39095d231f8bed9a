#include "qlnf/trilinear.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace qlnf {

namespace {

struct Entry {
  IVec k;
  cplx v;
};

std::vector<Entry> nonzeros(const FourierField& f) {
  std::vector<Entry> out;
  const auto& lat = f.lattice();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != cplx(0.0)) out.push_back({lat.freq(i), f[i]});
  return out;
}

std::vector<IVec> ball_points(int d, int K) {
  std::vector<IVec> pts;
  FrequencyLattice lat(d, K, 2 * (2 * K + 1));
  for (std::size_t i = 0; i < lat.size(); ++i) {
    IVec k = lat.freq(i);
    if (norm2(k, d) <= K * K) pts.push_back(k);
  }
  return pts;
}

// Representatives of the ball modulo coordinate permutations and sign changes.
std::vector<IVec> symmetry_reps(int d, int K) {
  std::vector<IVec> reps;
  for (auto& k : ball_points(d, K)) {
    bool canonical = true;
    for (int j = 0; j < d; ++j)
      if (k[j] < 0) canonical = false;
    for (int j = 0; j + 1 < d; ++j)
      if (k[j] < k[j + 1]) canonical = false;
    if (canonical) reps.push_back(k);
  }
  return reps;
}

}  // namespace

int trilinear_cap(int d) { return d == 1 ? 128 : (d == 2 ? 16 : 4); }

FourierField apply_trilinear(const TrilinearKernel& Q, const FourierField& u1,
                             const FourierField& u2, const FourierField& u3) {
  require_same_lattice(u1, u2);
  require_same_lattice(u1, u3);
  const auto& lat = u1.lattice();
  if (lat.K > trilinear_cap(lat.d)) {
    std::ostringstream msg;
    msg << "trilinear enumeration cap exceeded for d=" << lat.d << ": K=" << lat.K
        << ", use K <= " << trilinear_cap(lat.d);
    throw std::invalid_argument(msg.str());
  }
  const double c = std::pow(2.0 * kPi, -lat.d);
  auto n2 = nonzeros(u2), n3 = nonzeros(u3);
  FourierField out(lat);
  for (std::size_t i = 0; i < out.size(); ++i) {
    IVec xi = lat.freq(i);
    cplx acc = 0.0;
    for (auto& e : n2) {
      IVec r = sub(xi, e.k);
      for (auto& z : n3) {
        IVec a = sub(r, z.k);
        if (!lat.contains(a)) continue;
        cplx v1 = u1[lat.index(a)];
        if (v1 == cplx(0.0)) continue;
        acc += Q.q(xi, e.k, z.k) * v1 * e.v * z.v;
      }
    }
    out[i] = c * acc;
  }
  return out;
}

BoundProbeReport trilinear_bound_probe(const TrilinearKernel& Q, double s, double m, double mu,
                                       std::vector<int> Ks, std::uint64_t seed) {
  BoundProbeReport rep;
  rep.Ks = Ks;
  const double s0 = mu + 1.0;
  for (int K : Ks) {
    FrequencyLattice lat(1, K);
    // borderline H^s data so that any loss of derivatives shows up as growth in K
    auto u = random_field(lat, seed, s + 0.5);
    auto q = apply_trilinear(Q, u, u.conj(), u);
    double den = sobolev_norm(u, s) * std::pow(sobolev_norm(u, s0), 2);
    rep.ratios.push_back(den == 0.0 ? 0.0 : sobolev_norm(q, s + m) / den);
  }
  double logsum = 0.0;
  int cnt = 0;
  for (std::size_t i = 1; i < rep.ratios.size(); ++i) {
    if (rep.ratios[i - 1] > 0.0 && rep.ratios[i] > 0.0) {
      logsum += std::log(rep.ratios[i] / rep.ratios[i - 1]) / std::log(double(Ks[i]) / Ks[i - 1]);
      ++cnt;
    }
  }
  rep.growth_per_doubling = cnt ? std::pow(2.0, logsum / cnt) : 1.0;
  rep.bounded = rep.growth_per_doubling < 1.5;
  return rep;
}

bool is_resonant(const IVec& xi, const IVec& eta, const IVec& zeta, int d) {
  IVec a = sub(sub(xi, eta), zeta);
  int nx = norm2(xi, d), ne = norm2(eta, d), nz = norm2(zeta, d), na = norm2(a, d);
  return (nx == nz && ne == na) || (nx == na && ne == nz);
}

bool is_resonant_signed(const IVec& xi, const IVec& eta, const IVec& zeta, const Signs& s, int d) {
  IVec a = sub(sub(xi, eta), zeta);
  int n[3] = {norm2(a, d), norm2(eta, d), norm2(zeta, d)};
  std::vector<int> plus, minus{norm2(xi, d)};
  for (int i = 0; i < 3; ++i) (s[i] > 0 ? plus : minus).push_back(n[i]);
  if (plus.size() != 2) return false;
  std::sort(plus.begin(), plus.end());
  std::sort(minus.begin(), minus.end());
  return plus == minus;
}

double lambda_nls(const IVec& k, const PotentialTable& V, int d) { return norm2(k, d) + V(k); }

double lambda_kg(const IVec& k, double mass, int d) { return std::sqrt(norm2(k, d) + mass); }

double omega_nls(const IVec& xi, const IVec& eta, const IVec& zeta, const PotentialTable& V, int d) {
  IVec a = sub(sub(xi, eta), zeta);
  return lambda_nls(a, V, d) - lambda_nls(eta, V, d) + lambda_nls(zeta, V, d) - lambda_nls(xi, V, d);
}

double omega_kg(const IVec& xi, const IVec& eta, const IVec& zeta, const Signs& s, double mass, int d) {
  IVec a = sub(sub(xi, eta), zeta);
  return s[0] * lambda_kg(a, mass, d) + s[1] * lambda_kg(eta, mass, d) + s[2] * lambda_kg(zeta, mass, d) -
         lambda_kg(xi, mass, d);
}

DivisorReport divisor_scan(int d, int K, const std::string& model, const ScanParams& params) {
  if (model != "nls" && model != "kg") throw std::invalid_argument("model must be nls or kg");
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
  DivisorReport rep;
  rep.d = d;
  rep.K = K;
  rep.model = model;
  rep.mass = params.mass;
  const bool kg = model == "kg";
  const bool symmetric = kg || !params.V.enabled;

  auto pts = ball_points(d, K);
  auto xis = symmetric ? symmetry_reps(d, K) : pts;
  const int K2 = K * K;
  std::vector<double> root(K2 + 1), lam(K2 + 1);
  std::vector<int> ceilroot(K2 + 1);
  for (int n = 0; n <= K2; ++n) {
    root[n] = std::sqrt(double(n));
    ceilroot[n] = static_cast<int>(std::ceil(root[n] - 1e-12));
    lam[n] = kg ? std::sqrt(n + params.mass) : double(n);
  }
  std::vector<double> lampt(pts.size());
  std::vector<int> npt(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    npt[i] = norm2(pts[i], d);
    lampt[i] = kg ? lam[npt[i]] : npt[i] + params.V(pts[i]);
  }
  // index of every box point inside the ball
  const int side = 2 * K + 1;
  std::size_t boxn = 1;
  for (int j = 0; j < d; ++j) boxn *= side;
  std::vector<int> where(boxn, -1);
  auto boxidx = [&](const IVec& k) {
    std::size_t idx = 0;
    for (int j = 0; j < d; ++j) idx = idx * side + static_cast<std::size_t>(k[j] + K);
    return idx;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) where[boxidx(pts[i])] = static_cast<int>(i);

  const int nb = K + 1;
  std::vector<double> bmin(nb * nb, INFINITY);
  std::vector<long> bcount(nb * nb, 0);
  std::vector<ResonanceRecord> worst;

  std::vector<Signs> sign_list;
  if (kg) {
    for (int a : {1, -1})
      for (int b : {1, -1})
        for (int c : {1, -1}) sign_list.push_back({a, b, c});
  } else {
    sign_list.push_back({1, -1, 1});
  }

  auto consider = [&](const ResonanceRecord& r) {
    if (static_cast<int>(worst.size()) < params.keep_worst) {
      worst.push_back(r);
      std::sort(worst.begin(), worst.end(),
                [](auto& x, auto& y) { return std::abs(x.omega) < std::abs(y.omega); });
    } else if (params.keep_worst > 0 && std::abs(r.omega) < std::abs(worst.back().omega)) {
      worst.back() = r;
      std::sort(worst.begin(), worst.end(),
                [](auto& x, auto& y) { return std::abs(x.omega) < std::abs(y.omega); });
    }
  };

  for (const IVec& xi : xis) {
    const int nxi = norm2(xi, d);
    const double lxi = kg ? lam[nxi] : nxi + params.V(xi);
    for (std::size_t ie = 0; ie < pts.size(); ++ie) {
      const IVec r = sub(xi, pts[ie]);
      const int ne = npt[ie];
      for (std::size_t iz = 0; iz < pts.size(); ++iz) {
        const IVec& zeta = pts[iz];
        IVec a = sub(r, zeta);
        bool inside = true;
        for (int j = 0; j < d; ++j)
          if (a[j] < -K || a[j] > K) inside = false;
        if (!inside) continue;
        int ia = where[boxidx(a)];
        if (ia < 0) continue;
        const int na = npt[ia], nz = npt[iz];
        int hi = std::max({na, ne, nz}), lo = std::min({na, ne, nz});
        int mid = na + ne + nz - hi - lo;
        const int b1 = ceilroot[hi], b2 = ceilroot[mid];
        for (const Signs& s : sign_list) {
          bool res;
          if (kg) {
            int pcount = (s[0] > 0) + (s[1] > 0) + (s[2] > 0);
            if (pcount != 2) {
              res = false;
            } else {
              // plus slots {p0, p1} must pair with {xi, minus slot}
              int n3[3] = {na, ne, nz};
              int p0 = -1, p1 = -1, m1 = -1;
              for (int t = 0; t < 3; ++t) {
                if (s[t] < 0) m1 = n3[t];
                else if (p0 < 0) p0 = n3[t];
                else p1 = n3[t];
              }
              res = (p0 == nxi && p1 == m1) || (p1 == nxi && p0 == m1);
            }
          } else {
            res = (nxi == nz && ne == na) || (nxi == na && ne == nz);
          }
          if (res) {
            ++rep.resonant;
            continue;
          }
          double om = s[0] * lampt[ia] + s[1] * lampt[ie] + s[2] * lampt[iz] - lxi;
          double ab = std::abs(om);
          if (ab <= params.zero_tol) {
            ++rep.exact_zero;
          }
          ++rep.nonresonant;
          std::size_t bi = static_cast<std::size_t>(b1) * nb + b2;
          ++bcount[bi];
          if (ab < bmin[bi]) bmin[bi] = ab;
          if (params.keep_worst > 0 &&
              (static_cast<int>(worst.size()) < params.keep_worst || ab < std::abs(worst.back().omega))) {
            ResonanceRecord rec;
            rec.xi = xi;
            rec.eta = pts[ie];
            rec.zeta = zeta;
            rec.signs = s;
            rec.omega = om;
            rec.max1 = root[hi];
            rec.max2 = root[mid];
            rec.resonant = false;
            consider(rec);
          }
        }
      }
    }
  }

  rep.worst = worst;
  std::vector<ScanBucket> buckets;
  double gmin = INFINITY;
  for (int b1 = 0; b1 < nb; ++b1)
    for (int b2 = 0; b2 < nb; ++b2) {
      std::size_t bi = static_cast<std::size_t>(b1) * nb + b2;
      if (bcount[bi] == 0) continue;
      buckets.push_back({b1, b2, bmin[bi], bcount[bi]});
      gmin = std::min(gmin, bmin[bi]);
    }
  rep.buckets = buckets;
  if (buckets.empty()) return rep;
  rep.has_data = true;
  rep.min_abs_omega = gmin;

  // lower envelope: log min|omega| = c - N0 log<max2> - beta log<max1>
  // NLS bound has no max1 factor: fit its envelope over max1 for each max2 bucket
  std::vector<ScanBucket> envelope;
  if (!kg) {
    for (int b2 = 0; b2 < nb; ++b2) {
      ScanBucket e{0, b2, INFINITY, 0};
      for (auto& b : buckets)
        if (b.max2_bucket == b2) {
          e.min_abs_omega = std::min(e.min_abs_omega, b.min_abs_omega);
          e.count += b.count;
        }
      if (e.count > 0) envelope.push_back(e);
    }
  }
  std::vector<const ScanBucket*> fit;
  for (auto& b : kg ? buckets : envelope)
    if (b.min_abs_omega > params.zero_tol) fit.push_back(&b);
  auto br = [](int v) { return std::log(std::sqrt(1.0 + double(v) * v)); };
  auto solve = [&](bool use_n0, bool use_beta) {
    int cols = 1 + use_n0 + use_beta;
    Eigen::MatrixXd A(fit.size(), cols);
    Eigen::VectorXd y(fit.size());
    for (std::size_t i = 0; i < fit.size(); ++i) {
      int c = 0;
      A(i, c++) = 1.0;
      if (use_n0) A(i, c++) = -br(fit[i]->max2_bucket);
      if (use_beta) A(i, c++) = -br(fit[i]->max1_bucket);
      y(i) = std::log(fit[i]->min_abs_omega);
    }
    Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
    double n0 = use_n0 ? x(1) : 0.0;
    double be = use_beta ? x(cols - 1) : 0.0;
    return std::pair<double, double>(n0, be);
  };
  double N0 = 0.0, beta = 0.0;
  if (fit.size() >= 3) {
    auto [n0, be] = solve(true, kg);
    if (n0 < 0.0 && kg) std::tie(n0, be) = solve(false, true);
    if (kg && be < 0.0) std::tie(n0, be) = solve(true, false);
    N0 = std::max(0.0, n0);
    beta = std::max(0.0, be);
  }
  rep.N0 = N0;
  rep.beta = beta;
  double gamma = INFINITY;
  for (auto& b : buckets) {
    double g = b.min_abs_omega * std::exp(N0 * br(b.max2_bucket) + beta * br(b.max1_bucket));
    gamma = std::min(gamma, g);
  }
  rep.gamma = gamma;
  return rep;
}

std::string divisor_csv(const DivisorReport& r, const std::string& seed_or_mass, const std::string& header) {
  std::ostringstream out;
  out.precision(12);
  if (!header.empty()) out << header;
  out << "d,K,model,seed_or_m,max1_bucket,max2_bucket,min_abs_omega,fitted_gamma,fitted_N0,fitted_beta\n";
  if (!r.has_data) {
    out << r.d << ',' << r.K << ',' << r.model << ',' << seed_or_mass << ",,,no data,,,\n";
    return out.str();
  }
  for (auto& b : r.buckets) {
    out << r.d << ',' << r.K << ',' << r.model << ',' << seed_or_mass << ',' << b.max1_bucket << ','
        << b.max2_bucket << ',' << b.min_abs_omega << ',' << r.gamma << ',' << r.N0 << ',' << r.beta << '\n';
  }
  return out.str();
}

long double kg_taylor_g(long double x, long double y, long double z, long double m) {
  long double w = 2 * z + y * y;
  long double t1 = w / (2 * x);
  long double t2 = ((w + m) * (w + m) - m * m) / (8 * x * x * x);
  long double x5 = x * x * x * x * x;
  long double t3 = 3.0L / 48.0L * (8 * z * z * z + 12 * z * z * (y * y + m)) / x5;
  long double t4 = (1.0L / 24.0L) * (15.0L / 16.0L) * 16 * z * z * z * z / (x5 * x * x);
  return t1 - t2 + t3 - t4;
}

TaylorCheck taylor_error_check(const IVec& j, const IVec& k, double mass, int d) {
  int nj = norm2(j, d), nk = norm2(k, d);
  IVec jk = sub(j, k);
  int ny = norm2(jk, d);
  if (nj < nk) throw std::invalid_argument("taylor surrogate needs |j| >= |k|");
  long double x = std::sqrt(static_cast<long double>(nj));
  long double y = std::sqrt(static_cast<long double>(ny));
  if (y > std::sqrt(x) + 1e-12L) throw std::invalid_argument("taylor surrogate needs |j-k| <= |j|^(1/2)");
  long double z = 0;
  for (int t = 0; t < d; ++t) z += static_cast<long double>(k[t] - j[t]) * j[t];
  long double m = mass;
  long double lj = std::sqrt(nj + m), lk = std::sqrt(nk + m);
  long double diff = (static_cast<long double>(nk) - nj) / (lj + lk);  // Lambda_k - Lambda_j
  TaylorCheck c;
  c.error = static_cast<double>(std::fabs(diff - kg_taylor_g(x, y, z, m)));
  c.envelope = nj == 0 ? 0.0 : static_cast<double>(std::pow(y, 5) / std::pow(x, 4));
  return c;
}

double mass_phase(const MassQuadruple& q, double mass) {
  const int d = q.d;
  long double m = mass;
  long double l3 = std::sqrt(norm2(q.j3, d) + m), l4 = std::sqrt(norm2(q.j4, d) + m);
  long double x = std::sqrt(static_cast<long double>(norm2(q.j1, d)));
  long double y = std::sqrt(static_cast<long double>(norm2(sub(q.j1, q.j2), d)));
  long double z = 0;
  for (int t = 0; t < d; ++t) z += static_cast<long double>(q.j2[t] - q.j1[t]) * q.j1[t];
  // Lambda_{j1} - Lambda_{j2} is approximated by -g
  long double f = l3 + q.s3 * q.s4 * l4 - q.s3 * kg_taylor_g(x, y, z, m);
  return static_cast<double>(f);
}

MassQuadruple find_crossing_quadruple(int d, int J) {
  MassQuadruple best;
  best.d = d;
  double best_slope = 0.0;
  for (int s3 : {1, -1})
    for (int s4 : {1, -1}) {
      FrequencyLattice small(d, 2, 10);
      for (std::size_t i3 = 0; i3 < small.size(); ++i3)
        for (std::size_t i4 = 0; i4 < small.size(); ++i4) {
          IVec j3 = small.freq(i3), j4 = small.freq(i4);
          if (norm2(j3, d) == 0 || norm2(j4, d) == 0) continue;
          for (int t = 0; t <= J; ++t) {
            IVec j1{J, d > 1 ? t : 0, 0};
            // j1 - j2 + s3 j3 + s4 j4 = 0
            IVec j2{0, 0, 0};
            for (int c = 0; c < d; ++c) j2[c] = j1[c] + s3 * j3[c] + s4 * j4[c];
            if (norm2(j2, d) > norm2(j1, d)) continue;
            double y2 = norm2(sub(j1, j2), d);
            if (y2 > std::sqrt(double(norm2(j1, d)))) continue;
            MassQuadruple q{d, j1, j2, j3, j4, s3, s4};
            double f1 = mass_phase(q, 1.0), f2 = mass_phase(q, 2.0);
            if (f1 * f2 < 0.0) {
              double slope = std::abs(f2 - f1);
              if (slope > best_slope) {
                best_slope = slope;
                best = q;
              }
            }
          }
          if (d == 1) break;
        }
    }
  if (best_slope == 0.0) throw std::runtime_error("no sign-changing quadruple found");
  return best;
}

MassScanResult bad_mass_measure(const MassQuadruple& q, double kappa, long samples, std::uint64_t seed) {
  if (kappa < 0.0 || samples <= 0) throw std::invalid_argument("kappa must be >= 0 and samples > 0");
  MassScanResult r;
  r.quad = q;
  r.kappa = kappa;
  r.samples = samples;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  for (long i = 0; i < samples; ++i) {
    double m = U(rng);
    if (std::abs(mass_phase(q, m)) <= kappa) {
      ++r.bad;
      if (r.masses.size() < 16) r.masses.push_back(m);
    }
  }
  const double n = static_cast<double>(samples), p = r.bad / n, z = 1.959963984540054;
  double den = 1.0 + z * z / n;
  double center = (p + z * z / (2 * n)) / den;
  double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den;
  r.fraction = p;
  r.lo = std::max(0.0, center - half);
  r.hi = std::min(1.0, center + half);
  return r;
}

}  // namespace qlnf
