#include <doctest.h>

#include <random>

#include "oracle/dense_oracle.hpp"
#include "scatlab/ising.hpp"
#include "scatlab/mpo.hpp"

using namespace scatlab;

TEST_CASE("local terms carry half bonds in the bulk and full fields everywhere") {
  IsingCouplings c{0.0, 0.0, 4};
  auto terms = local_energy_terms(c);
  REQUIRE(terms.size() == 4);
  CHECK(terms[0].left_bond == 0.0);
  CHECK(terms[0].right_bond == 0.5);
  CHECK(terms[1].left_bond == 0.5);
  CHECK(terms[1].right_bond == 0.5);
  CHECK(terms[3].left_bond == 0.5);
  CHECK(terms[3].right_bond == 0.0);
  for (const auto& t : terms) {
    CHECK(t.x == 0.0);
    CHECK(t.z == 0.0);
  }
}

TEST_CASE("sum of local terms reproduces the dense Hamiltonian") {
  IsingCouplings c{1.25, 0.15, 8};
  oracle::Mat sum = oracle::Mat::Zero(256, 256);
  for (const auto& t : local_energy_terms(c)) {
    sum += dense_local_term(t, c.length);
  }
  const auto ref = oracle::ising_dense(8, 1.25, 0.15);
  CHECK((sum - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ref - ref.adjoint()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense Hamiltonian from the module matches the oracle for all small L") {
  for (int L = 4; L <= 10; L += 3) {
    IsingCouplings c{1.1, 0.3, L};
    const auto a = dense_hamiltonian(c);
    const auto b = oracle::ising_dense(L, 1.1, 0.3);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("all-up product state energies in the diagonal limit") {
  const int L = 10;
  IsingCouplings c{0.0, 0.15, L};
  auto psi = MatrixProductState::all_up(L);
  CHECK(total_energy(psi, c) == doctest::Approx(-(L - 1) - L * 0.15).epsilon(1e-13));

  IsingCouplings full{1.25, 0.15, L};
  auto psi2 = MatrixProductState::all_up(L);
  CHECK(total_energy(psi2, full) == doctest::Approx(-(L - 1) - L * 0.15).epsilon(1e-13));
}

TEST_CASE("two routes to the total energy agree") {
  std::mt19937_64 rng(7);
  IsingCouplings c{1.25, 0.15, 9};
  auto psi = MatrixProductState::random_state(9, 8, rng);
  const double via_sites = total_energy(psi, c);
  const double via_mpo = mpo_expectation(psi, ising_mpo(c)).real() / psi.norm_sq();
  CHECK(via_sites == doctest::Approx(via_mpo).epsilon(1e-12));

  const auto d = psi.to_dense();
  const auto h = oracle::ising_dense(9, 1.25, 0.15);
  const double dense = (d.adjoint() * (h * d))(0).real() / d.squaredNorm();
  CHECK(via_sites == doctest::Approx(dense).epsilon(1e-11));
}

TEST_CASE("energy density: vacuum subtraction and a single diagonal flip") {
  const int L = 8;
  IsingCouplings c{0.0, 0.15, L};
  auto vac = MatrixProductState::all_up(L);
  auto ref = site_energies(vac, c);

  auto same = MatrixProductState::all_up(L);
  auto zero = energy_density(same, ref, c);
  for (double e : zero) CHECK(e == doctest::Approx(0.0).scale(1.0));

  const int m = 4;
  std::vector<int> bits(L, 0);
  bits[m] = 1;
  auto flipped = MatrixProductState::basis_state(L, bits);
  auto e = energy_density(flipped, ref, c);
  double total = 0.0;
  for (int n = 0; n < L; ++n) {
    total += e[n];
    if (n < m - 1 || n > m + 1) CHECK(std::abs(e[n]) < 1e-13);
  }
  // flipping one interior spin breaks two unit-weight bonds and the field:
  // 4 + 2 g_z (dense cross-check below)
  const auto h = oracle::ising_dense(L, 0.0, 0.15);
  const auto dflip = flipped.to_dense();
  const auto dvac = MatrixProductState::all_up(L).to_dense();
  const double dense_gap =
      ((dflip.adjoint() * (h * dflip))(0) - (dvac.adjoint() * (h * dvac))(0)).real();
  CHECK(total == doctest::Approx(dense_gap).epsilon(1e-13));
  CHECK(total == doctest::Approx(4.0 + 2.0 * 0.15).epsilon(1e-13));
}

TEST_CASE("energy variance vanishes on an eigenstate and not otherwise") {
  const int L = 8;
  IsingCouplings c{1.25, 0.15, L};
  auto up = MatrixProductState::all_up(L);
  CHECK(energy_variance(up, c) > 1e-2);

  IsingCouplings diag{0.0, 0.15, L};
  auto up2 = MatrixProductState::all_up(L);
  CHECK(std::abs(energy_variance(up2, diag)) < 1e-10);
}

TEST_CASE("trotter gates approach the identity as dt -> 0") {
  IsingCouplings c{1.25, 0.15, 6};
  for (double dt : {1e-3, 1e-4}) {
    auto gates = build_trotter_gates(c, dt, 1);
    for (const auto& g : gates.even_bond_gates) {
      CHECK((g - Gate2::Identity()).cwiseAbs().maxCoeff() < 10 * dt);
    }
  }
  CHECK_THROWS_AS(build_trotter_gates(c, -0.1, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_trotter_gates(c, 0.1, 3), std::invalid_argument);
}

TEST_CASE("trotter factors are unitary and invert cleanly") {
  IsingCouplings c{1.25, 0.15, 7};
  auto gates = build_trotter_gates(c, 1.0 / 32, 2);
  auto inv = gates.inverse();
  for (size_t i = 0; i < gates.even_bond_gates.size(); ++i) {
    CHECK((gates.even_bond_gates[i] * inv.even_bond_gates[i] - Gate2::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  auto imag = build_trotter_gates(c, 0.1, 1, true);
  CHECK_THROWS_AS(imag.inverse(), std::runtime_error);
}

TEST_CASE("imaginary-time factors are nonunitary with positive spectrum") {
  IsingCouplings c{1.25, 0.15, 6};
  auto gates = build_trotter_gates(c, 0.05, 1, true);
  Gate2 g = gates.even_bond_gates[1];
  CHECK((g.adjoint() * g - Gate2::Identity()).cwiseAbs().maxCoeff() > 1e-3);
  Eigen::ComplexEigenSolver<Gate2> es(g);
  for (int i = 0; i < 4; ++i) {
    CHECK(es.eigenvalues()[i].real() > 0.0);
    CHECK(std::abs(es.eigenvalues()[i].imag()) < 1e-12);
  }
}
