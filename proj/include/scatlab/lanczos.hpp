#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace scatlab {

using MatVec = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;

struct LanczosOptions {
  int max_iter = 400;
  double tol = 1e-12;       // Ritz residual tolerance
  int check_every = 8;
  uint64_t seed = 0x5ca71ab5;
  int dense_cutoff = 256;   // assemble and diagonalize exactly below this size
};

// Lowest eigenvalue of a Hermitian operator; optionally its eigenvector and a
// warm-start vector. Full reorthogonalization throughout.
double lanczos_ground(Eigen::Index dim, const MatVec& matvec, Eigen::VectorXcd* eigvec,
                      const LanczosOptions& opts = {},
                      const Eigen::VectorXcd* initial = nullptr);

// Lowest nev eigenvalues (ascending).
std::vector<double> lanczos_lowest(Eigen::Index dim, const MatVec& matvec, int nev,
                                   const LanczosOptions& opts = {});

}  // namespace scatlab
