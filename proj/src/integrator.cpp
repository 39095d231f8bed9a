#include "qlnf/integrator.hpp"

#include <cmath>

namespace qlnf {

FourierField ifrk4_step(const FourierField& u, double dt, const std::vector<double>& lambda,
                        const NonlinearFn& N) {
  const std::size_t n = u.size();
  cvec half(n);
  for (std::size_t i = 0; i < n; ++i) half[i] = std::polar(1.0, -0.5 * dt * lambda[i]);
  auto prop = [&](const FourierField& f) {
    FourierField g = f;
    for (std::size_t i = 0; i < n; ++i) g[i] *= half[i];
    return g;
  };
  auto axpy = [&](const FourierField& a, double c, const FourierField& b) {
    FourierField r = a;
    for (std::size_t i = 0; i < n; ++i) r[i] += c * b[i];
    return r;
  };

  FourierField k1 = N(u);
  FourierField eu = prop(u);
  FourierField k2 = N(prop(axpy(u, 0.5 * dt, k1)));
  FourierField k3 = N(axpy(eu, 0.5 * dt, k2));
  FourierField k4 = N(axpy(prop(eu), dt, prop(k3)));

  FourierField e2u = prop(eu), e2k1 = prop(prop(k1));
  FourierField mid = prop(k2 + k3);
  FourierField out(u.lattice(), u.reality());
  for (std::size_t i = 0; i < n; ++i)
    out[i] = e2u[i] + dt / 6.0 * (e2k1[i] + 2.0 * mid[i] + k4[i]);
  return out;
}

std::vector<double> tabulate(const FrequencyLattice& lat, const std::function<double(const IVec&)>& f) {
  std::vector<double> v(lat.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(lat.freq(i));
  return v;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_line(lx, ly);
}

FourierField initial_profile(const FrequencyLattice& lat, std::uint64_t seed, double s, double eps,
                             bool real) {
  FourierField f = random_field(lat, seed, s + 2.0, real);
  double n = sobolev_norm(f, s);
  f *= cplx(eps / n);
  return f;
}

}  // namespace qlnf
