#pragma once

#include <cstdint>

#include "qlnf/lattice.hpp"

namespace qlnf {

// Even real potential Vhat(xi) = x_xi / (4 <xi>^m), x_xi uniform in [-1/2, 1/2].
struct PotentialTable {
  int d = 1;
  int K = 0;  // tabulated for |xi_j| <= K
  int m = 2;
  bool enabled = false;
  std::uint64_t seed = 0;
  std::vector<double> values;

  double operator()(const IVec& k) const;
  double max_abs() const;
  static PotentialTable zero(int d);
};

PotentialTable build_potential(std::uint64_t seed, int m, int d, int K);

}  // namespace qlnf
