#include "qlnf/potential.hpp"

#include <algorithm>
#include <cmath>

namespace qlnf {

double PotentialTable::operator()(const IVec& k) const {
  if (!enabled) return 0.0;
  for (int j = 0; j < d; ++j)
    if (k[j] < -K || k[j] > K) throw std::out_of_range("frequency outside tabulated potential");
  std::size_t idx = 0;
  for (int j = 0; j < d; ++j) idx = idx * (2 * K + 1) + static_cast<std::size_t>(k[j] + K);
  return values[idx];
}

double PotentialTable::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

PotentialTable PotentialTable::zero(int d) {
  PotentialTable t;
  t.d = d;
  return t;
}

PotentialTable build_potential(std::uint64_t seed, int m, int d, int K) {
  if (m <= 1) throw std::invalid_argument("potential decay m must be an integer > 1");
  if (d < 1 || d > 3 || K < 0) throw std::invalid_argument("bad potential lattice");
  PotentialTable t;
  t.d = d;
  t.K = K;
  t.m = m;
  t.enabled = true;
  t.seed = seed;
  FrequencyLattice lat(d, K);
  t.values.resize(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    IVec k = lat.freq(i);
    // draw on the lexicographically larger of (k, -k) so that x_k = x_{-k}
    IVec r = std::max(k, neg(k));
    double x = hashed_uniform(seed, r) - 0.5;
    t.values[i] = x / (4.0 * std::pow(bracket(k, d), m));
  }
  return t;
}

}  // namespace qlnf
