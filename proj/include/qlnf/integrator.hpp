#pragma once

#include <functional>

#include "qlnf/lattice.hpp"

namespace qlnf {

using NonlinearFn = std::function<FourierField(const FourierField&)>;

// Lawson RK4 for u' = -i Lambda u + N(u); lambda holds Lambda per lattice index.
FourierField ifrk4_step(const FourierField& u, double dt, const std::vector<double>& lambda,
                        const NonlinearFn& N);

std::vector<double> tabulate(const FrequencyLattice& lat, const std::function<double(const IVec&)>& f);

// Least-squares slope, intercept and R^2 of y against x.
struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Fit of log|y| against log x.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// Smooth seeded profile with coefficients ~ <k>^{-(s+2)}, scaled to H^s norm eps.
FourierField initial_profile(const FrequencyLattice& lat, std::uint64_t seed, double s, double eps,
                             bool real = false);

}  // namespace qlnf
