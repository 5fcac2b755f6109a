#include "scatlab/ising.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "scatlab/mpo.hpp"

namespace scatlab {

namespace pauli {

const Op1& I() {
  static const Op1 op = Op1::Identity();
  return op;
}
const Op1& X() {
  static const Op1 op = (Op1() << 0, 1, 1, 0).finished();
  return op;
}
const Op1& Y() {
  static const Op1 op = (Op1() << 0, cplx(0, -1), cplx(0, 1), 0).finished();
  return op;
}
const Op1& Z() {
  static const Op1 op = (Op1() << 1, 0, 0, -1).finished();
  return op;
}

}  // namespace pauli

void validate(const IsingCouplings& c) {
  if (c.length < 4) {
    throw std::invalid_argument("IsingCouplings: length must be >= 4");
  }
}

std::vector<LocalEnergyTerm> local_energy_terms(const IsingCouplings& c) {
  validate(c);
  std::vector<LocalEnergyTerm> terms(c.length);
  for (int n = 0; n < c.length; ++n) {
    auto& t = terms[n];
    t.site = n;
    t.left_bond = (n == 0) ? 0.0 : 0.5;
    t.right_bond = (n == c.length - 1) ? 0.0 : 0.5;
    t.x = c.g_x;
    t.z = c.g_z;
  }
  return terms;
}

namespace {

// Bond Hamiltonian h_b on (n, n+1) with the site fields split between the
// adjacent bonds (edge sites give their full field to the only bond).
Eigen::Matrix4cd bond_hamiltonian(const IsingCouplings& c, int bond) {
  const double wl = (bond == 0) ? 1.0 : 0.5;
  const double wr = (bond == c.length - 2) ? 1.0 : 0.5;
  auto kron = [](const Op1& a, const Op1& b) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return k;
  };
  Eigen::Matrix4cd h = -kron(pauli::Z(), pauli::Z());
  h -= wl * (c.g_x * kron(pauli::X(), pauli::I()) + c.g_z * kron(pauli::Z(), pauli::I()));
  h -= wr * (c.g_x * kron(pauli::I(), pauli::X()) + c.g_z * kron(pauli::I(), pauli::Z()));
  return h;
}

Gate2 exponentiate(const Eigen::Matrix4cd& h, cplx prefactor) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
  Eigen::Vector4cd phases;
  for (int i = 0; i < 4; ++i) phases[i] = std::exp(prefactor * es.eigenvalues()[i]);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TrotterGateSet build_trotter_gates(const IsingCouplings& c, double dt, int order,
                                   bool imaginary_time) {
  validate(c);
  if (dt <= 0.0) {
    throw std::invalid_argument("build_trotter_gates: dt must be positive");
  }
  if (order != 1 && order != 2) {
    throw std::invalid_argument("build_trotter_gates: order must be 1 or 2");
  }
  const cplx pref = imaginary_time ? cplx(-dt, 0.0) : cplx(0.0, -dt);
  TrotterGateSet g;
  g.dt = dt;
  g.order = order;
  g.imaginary_time = imaginary_time;
  g.lattice_length = c.length;
  for (int b = 0; b + 1 < c.length; ++b) {
    const auto h = bond_hamiltonian(c, b);
    if (b % 2 == 0) {
      g.even_bond_gates.push_back(exponentiate(h, pref));
      if (order == 2) g.even_bond_half_gates.push_back(exponentiate(h, pref * 0.5));
    } else {
      g.odd_bond_gates.push_back(exponentiate(h, pref));
    }
  }
  return g;
}

TrotterGateSet TrotterGateSet::inverse() const {
  if (imaginary_time) {
    throw std::runtime_error("TrotterGateSet::inverse: imaginary-time factors are not invertible");
  }
  TrotterGateSet inv = *this;
  for (auto* v : {&inv.even_bond_gates, &inv.even_bond_half_gates, &inv.odd_bond_gates}) {
    for (auto& m : *v) m = m.adjoint().eval();
  }
  return inv;
}

std::vector<double> site_energies(MatrixProductState& state, const IsingCouplings& c) {
  validate(c);
  if (state.length() != c.length) {
    throw std::invalid_argument("site_energies: state length does not match couplings");
  }
  const int L = c.length;
  std::vector<cplx> x(L), z(L), zz(L - 1);
  state.sweep_centers([&](MatrixProductState& psi, int n) {
    x[n] = psi.site_expectation(n, pauli::X());
    z[n] = psi.site_expectation(n, pauli::Z());
    if (n > 0) zz[n - 1] = psi.bond_expectation(n - 1, pauli::Z(), pauli::Z());
  });
  const auto terms = local_energy_terms(c);
  std::vector<double> e(L);
  for (int n = 0; n < L; ++n) {
    cplx v = 0.0;
    const auto& t = terms[n];
    if (t.left_bond != 0.0) v += t.left_bond * zz[n - 1];
    if (t.right_bond != 0.0) v += t.right_bond * zz[n];
    v += t.x * x[n] + t.z * z[n];
    e[n] = -v.real();
  }
  return e;
}

std::vector<double> energy_density(MatrixProductState& state,
                                   const std::vector<double>& vacuum_site_energies,
                                   const IsingCouplings& c) {
  if (static_cast<int>(vacuum_site_energies.size()) != c.length) {
    throw std::invalid_argument("energy_density: vacuum reference length mismatch");
  }
  auto e = site_energies(state, c);
  for (int n = 0; n < c.length; ++n) e[n] -= vacuum_site_energies[n];
  return e;
}

std::vector<double> energy_density(MatrixProductState& state, MatrixProductState& vacuum,
                                   const IsingCouplings& c) {
  return energy_density(state, site_energies(vacuum, c), c);
}

double total_energy(MatrixProductState& state, const IsingCouplings& c) {
  const double n2 = state.norm_sq();
  if (n2 <= 0.0) {
    throw std::runtime_error("total_energy: zero-norm state");
  }
  const auto e = site_energies(state, c);
  double sum = 0.0;
  for (double v : e) sum += v;
  return sum / n2;
}

double energy_variance(MatrixProductState& state, const IsingCouplings& c) {
  const double n2 = state.norm_sq();
  if (n2 <= 0.0) {
    throw std::runtime_error("energy_variance: zero-norm state");
  }
  const auto h = ising_mpo(c);
  const auto h2 = mpo_product(h, h);
  const double eh = mpo_expectation(state, h).real() / n2;
  const double eh2 = mpo_expectation(state, h2).real() / n2;
  return eh2 - eh * eh;
}

Matrix dense_local_term(const LocalEnergyTerm& t, int length, int site_limit) {
  if (length > site_limit) {
    throw std::runtime_error("dense_local_term: length exceeds the oracle limit");
  }
  const auto dim = static_cast<Eigen::Index>(1) << length;
  Matrix h = Matrix::Zero(dim, dim);
  auto add_pauli_string = [&](double coeff, const std::vector<std::pair<int, const Op1*>>& ops) {
    // site 0 is the most significant bit
    for (Eigen::Index col = 0; col < dim; ++col) {
      Eigen::Index row = col;
      cplx amp = coeff;
      bool diagonal = true;
      for (const auto& [site, op] : ops) {
        const int bit = (col >> (length - 1 - site)) & 1;
        // only X and Z appear here; X flips, Z weights
        if (op == &pauli::Z()) {
          amp *= (*op)(bit, bit);
        } else {
          row ^= static_cast<Eigen::Index>(1) << (length - 1 - site);
          amp *= (*op)(1 - bit, bit);
          diagonal = false;
        }
      }
      (void)diagonal;
      h(row, col) += amp;
    }
  };
  const int n = t.site;
  if (t.left_bond != 0.0) {
    add_pauli_string(-t.left_bond, {{n - 1, &pauli::Z()}, {n, &pauli::Z()}});
  }
  if (t.right_bond != 0.0) {
    add_pauli_string(-t.right_bond, {{n, &pauli::Z()}, {n + 1, &pauli::Z()}});
  }
  if (t.x != 0.0) add_pauli_string(-t.x, {{n, &pauli::X()}});
  if (t.z != 0.0) add_pauli_string(-t.z, {{n, &pauli::Z()}});
  return h;
}

Matrix dense_hamiltonian(const IsingCouplings& c, int site_limit) {
  validate(c);
  if (c.length > site_limit) {
    throw std::runtime_error("dense_hamiltonian: length exceeds the oracle limit");
  }
  const auto dim = static_cast<Eigen::Index>(1) << c.length;
  Matrix h = Matrix::Zero(dim, dim);
  for (const auto& t : local_energy_terms(c)) {
    h += dense_local_term(t, c.length, site_limit);
  }
  return h;
}

}  // namespace scatlab
