#pragma once

// Brute-force statevector routines used as independent oracles. Everything
// here works on dense 2^L vectors with site 0 as the most significant bit and
// never touches the tensor-network code paths it is used to check.

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

Mat pauli(char p);  // 'I', 'X', 'Y', 'Z'

// Tensor product of single-site operators placed at `sites` (identity
// elsewhere) on an L-site chain.
Mat embed(int length, const std::vector<std::pair<int, char>>& ops);

// Dense open-boundary Hamiltonian -sum[ Z Z + gx X + gz Z ].
Mat ising_dense(int length, double g_x, double g_z);

// exp(-i H t) |psi> through full diagonalization.
Vec propagate(const Mat& h, const Vec& psi, double t);

// Same, with the Hamiltonian decomposition cached per (length, g_x, g_z).
Vec propagate_ising(int length, double g_x, double g_z, const Vec& psi, double t);

// Ground state via dense diagonalization.
std::pair<double, Vec> ground_state(const Mat& h);

// Apply a 4x4 gate on sites (n, n+1); index convention s1*2+s2.
Vec apply_two_site_gate(const Vec& psi, int length, int n, const Eigen::Matrix4cd& gate);

// Descending eigenvalues of the reduced density matrix of sites [0, cut].
std::vector<double> schmidt_values_sq(const Vec& psi, int length, int cut);

double fidelity(const Vec& a, const Vec& b);

}  // namespace oracle
