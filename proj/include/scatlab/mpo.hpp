#pragma once

#include <vector>

#include "scatlab/ising.hpp"

namespace scatlab {

// Matrix product operator with per-site operator-valued matrices w[n][a][b],
// left boundary state 0, right boundary state (right bond - 1) selected on
// entry/exit. Only what Hamiltonian expectation values and the two-site
// ground-state sweeps need.
struct Mpo {
  // w[n][a][b] is a 2x2 operator block; dimensions w[n].size() x w[n][0].size()
  std::vector<std::vector<std::vector<Op1>>> w;

  int length() const { return static_cast<int>(w.size()); }
  int left_dim(int n) const { return static_cast<int>(w[n].size()); }
  int right_dim(int n) const { return static_cast<int>(w[n][0].size()); }
};

Mpo ising_mpo(const IsingCouplings& c);
Mpo mpo_product(const Mpo& a, const Mpo& b);

// <psi| M |psi> (no norm division).
cplx mpo_expectation(const MatrixProductState& psi, const Mpo& m);

}  // namespace scatlab
