#include <doctest.h>

#include <random>

#include "oracle/dense_oracle.hpp"
#include "scatlab/dynamics.hpp"

using namespace scatlab;

namespace {

EvolutionSchedule plain_schedule(double t_end, double dt) {
  EvolutionSchedule s;
  s.t_end = t_end;
  s.dt = dt;
  return s;
}

std::vector<double> zero_reference(int length) { return std::vector<double>(length, 0.0); }

// stage with an effectively exact policy, for oracle-equivalence runs
void make_lossless(EvolutionSchedule& s) {
  TruncationPolicy exact;
  exact.cutoff = 0.0;
  s.stages.push_back({0.0, exact});
}

}  // namespace

TEST_CASE("zero steps return the input state") {
  IsingCouplings c{1.25, 0.15, 6};
  std::mt19937_64 rng(3);
  auto psi = MatrixProductState::random_state(6, 8, rng);
  const auto before = psi.to_dense();
  auto gates = build_trotter_gates(c, 1.0 / 32, 2);
  auto records = evolve(psi, gates, plain_schedule(0.0, 1.0 / 32), zero_reference(6), c);
  CHECK(records.empty());
  CHECK((psi.to_dense() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("schedule validation rejects off-grid snapshots and unordered stages") {
  EvolutionSchedule s = plain_schedule(1.0, 1.0 / 32);
  s.snapshot_times = {0.015};  // not a multiple of 1/32
  CHECK_THROWS_AS(validate(s), std::invalid_argument);

  EvolutionSchedule s2 = plain_schedule(1.0, 1.0 / 32);
  s2.stages.push_back({0.5, {}});
  s2.stages.push_back({0.25, {}});
  CHECK_THROWS_AS(validate(s2), std::invalid_argument);

  EvolutionSchedule s3 = plain_schedule(1.0, 1.0 / 32);
  s3.snapshot_times = {2.0};
  CHECK_THROWS_AS(validate(s3), std::invalid_argument);
}

TEST_CASE("order-2 evolution matches the dense propagator") {
  const int L = 10;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[4] = bits[5] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);
  const auto start = psi.to_dense();

  auto gates = build_trotter_gates(c, 1.0 / 32, 2);
  auto sched = plain_schedule(2.0, 1.0 / 32);
  sched.snapshot_times = {1.0, 2.0};
  make_lossless(sched);
  auto records = evolve(psi, gates, sched, zero_reference(L), c);
  REQUIRE(records.size() == 2);

  const auto h = oracle::ising_dense(L, 1.25, 0.15);
  const auto exact = oracle::propagate(h, start, 2.0);
  CHECK(oracle::fidelity(exact, psi.to_dense()) >= 1.0 - 1e-6);
  CHECK(records.back().norm_sq == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("halving dt quarters the state error of the symmetric splitting") {
  const int L = 8;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[3] = 1;
  const auto start = MatrixProductState::basis_state(L, bits).to_dense();
  const auto h = oracle::ising_dense(L, 1.25, 0.15);
  const auto exact = oracle::propagate(h, start, 1.0);

  auto run = [&](double dt) {
    auto psi = MatrixProductState::basis_state(L, bits);
    auto gates = build_trotter_gates(c, dt, 2);
    auto sched = plain_schedule(1.0, dt);
    make_lossless(sched);
    evolve(psi, gates, sched, zero_reference(L), c);
    auto v = psi.to_dense();
    const cplx phase = exact.dot(v);
    v *= std::conj(phase) / std::abs(phase);
    return (v - exact).norm();
  };
  const double coarse = run(1.0 / 8);
  const double fine = run(1.0 / 16);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("first-order splitting is also available and converges") {
  const int L = 6;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[2] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);
  auto gates = build_trotter_gates(c, 1.0 / 64, 1);
  evolve(psi, gates, plain_schedule(0.5, 1.0 / 64), zero_reference(L), c);
  const auto h = oracle::ising_dense(L, 1.25, 0.15);
  const auto ref = oracle::propagate(h, MatrixProductState::basis_state(L, bits).to_dense(), 0.5);
  CHECK(oracle::fidelity(ref, psi.to_dense()) >= 1.0 - 1e-3);
}

TEST_CASE("evolution forward then backward returns the initial state") {
  const int L = 8;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[3] = bits[5] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);
  const auto start = psi.to_dense();
  auto gates = build_trotter_gates(c, 1.0 / 32, 2);
  auto sched = plain_schedule(1.0, 1.0 / 32);
  make_lossless(sched);
  evolve(psi, gates, sched, zero_reference(L), c);
  auto inverse = gates.inverse();
  evolve(psi, inverse, sched, zero_reference(L), c);
  CHECK(oracle::fidelity(start, psi.to_dense()) >= 1.0 - 1e-6);
}

TEST_CASE("energy is conserved without truncation") {
  const int L = 10;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[4] = bits[6] = 1;

  auto drift = [&](double dt) {
    auto psi = MatrixProductState::basis_state(L, bits);
    const double e0 = total_energy(psi, c);
    auto gates = build_trotter_gates(c, dt, 2);
    auto sched = plain_schedule(100.0 * dt, dt);
    make_lossless(sched);
    evolve(psi, gates, sched, zero_reference(L), c);
    return std::abs(total_energy(psi, c) - e0) / std::abs(e0);
  };
  // 100 steps at dt = 1/64: the shadow-Hamiltonian offset stays below 1e-4,
  // and it scales as dt^2
  const double fine = drift(1.0 / 64);
  CHECK(fine <= 1e-4);
  const double coarse = drift(1.0 / 32);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.35));
}

TEST_CASE("snapshots carry norm bookkeeping consistent with discarded weight") {
  const int L = 12;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[5] = bits[6] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);

  auto gates = build_trotter_gates(c, 1.0 / 16, 2);
  auto sched = plain_schedule(4.0, 1.0 / 16);
  sched.snapshot_times = {1.0, 2.0, 3.0, 4.0};
  TruncationPolicy tight;
  tight.max_bond = 3;
  tight.cutoff = 1e-10;
  sched.stages.push_back({0.0, tight});

  auto records = evolve(psi, gates, sched, zero_reference(L), c);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    CHECK(r.max_bond_used <= 3);
    if (r.cumulative_discarded_weight > 1e-6) {
      const double lost = 1.0 - r.norm_sq;
      CHECK(lost == doctest::Approx(r.cumulative_discarded_weight).epsilon(0.10));
    }
  }
  // norm decreases monotonically under truncation
  for (size_t i = 1; i < records.size(); ++i) {
    CHECK(records[i].norm_sq <= records[i - 1].norm_sq + 1e-12);
  }
}

TEST_CASE("staged truncation compresses at the trigger time") {
  const int L = 10;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[4] = bits[5] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);

  auto gates = build_trotter_gates(c, 1.0 / 16, 2);
  auto sched = plain_schedule(2.0, 1.0 / 16);
  sched.snapshot_times = {1.0, 2.0};
  TruncationPolicy wide;
  wide.max_bond = 64;
  wide.cutoff = 1e-12;
  TruncationPolicy narrow;
  narrow.max_bond = 2;
  narrow.cutoff = 1e-12;
  sched.stages.push_back({0.0, wide});
  sched.stages.push_back({1.0, narrow});

  auto records = evolve(psi, gates, sched, zero_reference(L), c);
  REQUIRE(records.size() == 2);
  CHECK(records[1].max_bond_used <= 2);
  CHECK(psi.max_bond_dim() <= 2);
}

TEST_CASE("norm floor violations abort with diagnostics") {
  const int L = 10;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[4] = bits[5] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);
  auto gates = build_trotter_gates(c, 1.0 / 8, 2);
  auto sched = plain_schedule(6.0, 1.0 / 8);
  TruncationPolicy absurd;
  absurd.max_bond = 1;
  absurd.cutoff = 0.0;
  sched.stages.push_back({0.0, absurd});
  sched.norm_floor = 0.9;
  CHECK_THROWS_WITH_AS(
      evolve(psi, gates, sched, zero_reference(L), c),
      doctest::Contains("fell below the floor"), std::runtime_error);
}

TEST_CASE("mirror-symmetric states keep a mirror-symmetric energy density") {
  const int L = 12;
  IsingCouplings c{1.25, 0.15, L};
  std::vector<int> bits(L, 0);
  bits[3] = bits[L - 4] = 1;
  auto psi = MatrixProductState::basis_state(L, bits);
  auto vacref = MatrixProductState::all_up(L);
  auto vac_e = site_energies(vacref, c);

  auto gates = build_trotter_gates(c, 1.0 / 16, 2);
  auto sched = plain_schedule(2.0, 1.0 / 16);
  sched.snapshot_times = {1.0, 2.0};
  auto records = evolve(psi, gates, sched, vac_e, c);
  for (const auto& r : records) {
    for (int n = 0; n < L; ++n) {
      CHECK(std::abs(r.energy_density[n] - r.energy_density[L - 1 - n]) < 5e-3);
    }
  }
}
