#pragma once

#include <vector>

#include "scatlab/mps.hpp"

namespace scatlab {

namespace pauli {
const Op1& I();
const Op1& X();
const Op1& Y();
const Op1& Z();
}  // namespace pauli

struct IsingCouplings {
  double g_x = 1.25;
  double g_z = 0.15;
  int length = 400;
};

void validate(const IsingCouplings& c);

// H_n = -( left_bond * Z_{n-1}Z_n + right_bond * Z_n Z_{n+1} + x * X_n + z * Z_n ).
// Bulk sites carry both bonds at weight 1/2; edge sites only the existing bond,
// so that sum_n H_n reproduces the full open-boundary Hamiltonian exactly.
struct LocalEnergyTerm {
  int site = 0;
  double left_bond = 0.0;
  double right_bond = 0.0;
  double x = 0.0;
  double z = 0.0;
};

std::vector<LocalEnergyTerm> local_energy_terms(const IsingCouplings& c);

// Trotter factors of exp(-i H dt) (or exp(-H dt) for imaginary time) with the
// single-site fields folded into the bond gates. even_bond_gates[i] acts on
// bond 2i, odd_bond_gates[i] on bond 2i+1; the half gates realize dt/2 steps
// of the even sublattice for the symmetric (order 2) splitting.
struct TrotterGateSet {
  double dt = 1.0 / 32.0;
  int order = 2;
  bool imaginary_time = false;
  std::vector<Gate2> even_bond_gates;
  std::vector<Gate2> even_bond_half_gates;
  std::vector<Gate2> odd_bond_gates;
  int lattice_length = 0;

  TrotterGateSet inverse() const;  // adjoint factors; real time only
};

TrotterGateSet build_trotter_gates(const IsingCouplings& c, double dt, int order,
                                   bool imaginary_time = false);

// Raw per-site energies <psi|H_n|psi> (no norm division, imaginary part checked
// to be numerical noise). One measurement sweep, O(L chi^3).
std::vector<double> site_energies(MatrixProductState& state, const IsingCouplings& c);

// Vacuum-subtracted energy density E_n. Values scale with the squared norms of
// the inputs; callers keep both states normalized or interpret accordingly.
std::vector<double> energy_density(MatrixProductState& state,
                                   const std::vector<double>& vacuum_site_energies,
                                   const IsingCouplings& c);
std::vector<double> energy_density(MatrixProductState& state, MatrixProductState& vacuum,
                                   const IsingCouplings& c);

double total_energy(MatrixProductState& state, const IsingCouplings& c);

// <H^2> - <H>^2 on the normalized state.
double energy_variance(MatrixProductState& state, const IsingCouplings& c);

// Dense 2^L x 2^L Hamiltonian for oracle-scale lattices (L <= 14).
Matrix dense_hamiltonian(const IsingCouplings& c, int site_limit = 14);
Matrix dense_local_term(const LocalEnergyTerm& t, int length, int site_limit = 14);

}  // namespace scatlab
