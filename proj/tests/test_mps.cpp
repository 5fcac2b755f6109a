#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "oracle/dense_oracle.hpp"
#include "scatlab/mps.hpp"

using namespace scatlab;

namespace {

Gate2 entangling_gate(double angle) {
  // exp(-i angle (XX + 0.5 ZZ)); any two-site entangler works here
  const auto kron = [](const oracle::Mat& a, const oracle::Mat& b) {
    Eigen::Matrix4cd k;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return k;
  };
  Eigen::Matrix4cd h =
      kron(oracle::pauli('X'), oracle::pauli('X')) + 0.5 * kron(oracle::pauli('Z'), oracle::pauli('Z'));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
  Eigen::Vector4cd ph;
  for (int i = 0; i < 4; ++i) ph[i] = std::exp(cplx(0, -angle * es.eigenvalues()[i]));
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// global-phase-insensitive comparison
double aligned_diff(const Vector& a, const Vector& b) {
  const cplx ov = a.dot(b);
  if (std::abs(ov) == 0.0) return std::max(a.norm(), b.norm());
  const cplx phase = ov / std::abs(ov);
  return (a * phase - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("canonicalize keeps the represented state and the norm") {
  std::mt19937_64 rng(11);
  auto psi = MatrixProductState::random_state(8, 16, rng);
  const auto before = psi.to_dense();
  const double norm_before = psi.norm_sq();

  psi.canonicalize(0);
  const auto at0 = psi.to_dense();
  psi.canonicalize(7);
  const auto at7 = psi.to_dense();

  CHECK(max_abs_diff(before, at0) < 1e-12);
  CHECK(max_abs_diff(at0, at7) < 1e-12);
  CHECK(psi.norm_sq() == doctest::Approx(norm_before).epsilon(1e-12));
}

TEST_CASE("canonicalize on a product state is trivial") {
  auto psi = MatrixProductState::basis_state(6, {0, 1, 0, 0, 1, 0});
  const auto before = psi.to_dense();
  psi.canonicalize(3);
  CHECK(psi.canonical_center() == 3);
  CHECK(max_abs_diff(before, psi.to_dense()) < 1e-14);
}

TEST_CASE("canonical form produces left and right isometries") {
  std::mt19937_64 rng(5);
  auto psi = MatrixProductState::random_state(7, 8, rng);
  psi.canonicalize(3);
  for (int n = 0; n < 3; ++n) {
    const auto& t = psi.site(n);
    Matrix e = t.m[0].adjoint() * t.m[0] + t.m[1].adjoint() * t.m[1];
    e.diagonal().array() -= 1.0;
    CHECK(e.cwiseAbs().maxCoeff() < 1e-12);
  }
  for (int n = 4; n < 7; ++n) {
    const auto& t = psi.site(n);
    Matrix e = t.m[0] * t.m[0].adjoint() + t.m[1] * t.m[1].adjoint();
    e.diagonal().array() -= 1.0;
    CHECK(e.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("identity gate leaves the state alone") {
  std::mt19937_64 rng(2);
  auto psi = MatrixProductState::random_state(6, 8, rng);
  const auto before = psi.to_dense();
  auto res = psi.apply_two_site_gate(2, Gate2::Identity(), {});
  CHECK(res.discarded_weight == 0.0);
  CHECK(!res.nonunitary);
  CHECK(max_abs_diff(before, psi.to_dense()) < 1e-12);
}

TEST_CASE("two-site gates match the dense statevector oracle") {
  auto psi = MatrixProductState::basis_state(6, {0, 1, 0, 1, 0, 0});
  auto dense = psi.to_dense();
  const auto g = entangling_gate(0.83);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bond(0, 4);
  TruncationPolicy loose;
  loose.cutoff = 0.0;
  for (int step = 0; step < 12; ++step) {
    const int b = bond(rng);
    psi.apply_two_site_gate(b, g, loose);
    dense = oracle::apply_two_site_gate(dense, 6, b, g);
  }
  CHECK(max_abs_diff(psi.to_dense(), dense) < 1e-12);
}

TEST_CASE("chi=1 truncation discards exactly the smaller Schmidt weight") {
  auto psi = MatrixProductState::basis_state(4, {0, 0, 0, 0});
  const auto g = entangling_gate(0.6);

  // dense branch first: the gate on sites (1,2) creates rank-2 entanglement
  auto dense = oracle::apply_two_site_gate(psi.to_dense(), 4, 1, g);
  const auto lambdas = oracle::schmidt_values_sq(dense, 4, 1);
  REQUIRE(lambdas.size() >= 2);
  REQUIRE(lambdas[1] > 1e-6);

  TruncationPolicy tight;
  tight.max_bond = 1;
  tight.cutoff = 0.0;
  auto res = psi.apply_two_site_gate(1, g, tight);
  double tail = 0.0;
  for (size_t i = 1; i < lambdas.size(); ++i) tail += lambdas[i];
  CHECK(res.discarded_weight == doctest::Approx(tail).epsilon(1e-10));
  CHECK(psi.bond_dim(1) == 1);
}

TEST_CASE("discarded weight is non-increasing in the bond cap") {
  double prev = std::numeric_limits<double>::infinity();
  for (int chi : {1, 2, 3, 4, 6, 8}) {
    std::mt19937_64 fixed(99);
    auto psi = MatrixProductState::random_state(8, 8, fixed);
    TruncationPolicy pol;
    pol.max_bond = chi;
    pol.cutoff = 0.0;
    auto res = psi.apply_two_site_gate(3, entangling_gate(1.1), pol);
    CHECK(res.discarded_weight <= prev + 1e-15);
    prev = res.discarded_weight;
  }
}

TEST_CASE("nonunitary gates are flagged but applied") {
  auto psi = MatrixProductState::basis_state(4, {0, 1, 0, 0});
  Gate2 g = Gate2::Identity() * 0.5;
  auto res = psi.apply_two_site_gate(1, g, {});
  CHECK(res.nonunitary);
  CHECK(psi.norm_sq() == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("schmidt spectrum of a product state is {1}") {
  auto psi = MatrixProductState::basis_state(5, {0, 1, 1, 0, 1});
  auto s = psi.schmidt_spectrum(2);
  REQUIRE(s.chi == 1);
  CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("schmidt spectrum matches dense reduced-density-matrix eigenvalues") {
  std::mt19937_64 rng(23);
  auto psi = MatrixProductState::random_state(10, 12, rng);
  const auto dense = psi.to_dense();
  auto s = psi.schmidt_spectrum(4);
  const auto ref = oracle::schmidt_values_sq(dense, 10, 4);
  REQUIRE(s.chi <= static_cast<int>(ref.size()));
  for (int i = 0; i < s.chi; ++i) {
    CHECK(s.values[i] == doctest::Approx(ref[i]).epsilon(1e-10).scale(1.0));
  }
  double kept = s.sum(), total = 0.0;
  for (double l : ref) total += l;
  CHECK(kept == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("spectrum sums to the squared norm when nothing was truncated") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto psi = MatrixProductState::random_state(9, 10, rng);
    for (int cut = 0; cut < 8; ++cut) {
      CHECK(psi.schmidt_spectrum(cut).sum() == doctest::Approx(psi.norm_sq()).epsilon(1e-10));
    }
  }
}

TEST_CASE("projection keeps the selected weight and preserves orthogonality") {
  std::mt19937_64 rng(41);
  auto psi = MatrixProductState::random_state(8, 8, rng);
  auto spec = psi.schmidt_spectrum(3);
  REQUIRE(spec.chi >= 3);

  SUBCASE("keep-all reproduces the state") {
    std::vector<int> all(spec.chi);
    for (int i = 0; i < spec.chi; ++i) all[i] = i;
    auto proj = psi.project_schmidt_component(3, all);
    CHECK(aligned_diff(psi.to_dense(), proj.to_dense()) < 1e-12);
  }

  SUBCASE("disjoint keep sets are orthogonal and weights add up") {
    auto head = psi.project_schmidt_component(3, {0});
    std::vector<int> rest;
    for (int i = 1; i < spec.chi; ++i) rest.push_back(i);
    auto tail = psi.project_schmidt_component(3, rest);

    CHECK(std::abs(inner_product(head, tail)) < 1e-12);
    CHECK(head.norm_sq() == doctest::Approx(spec.values[0]).epsilon(1e-12));
    CHECK(head.norm_sq() + tail.norm_sq() == doctest::Approx(psi.norm_sq()).epsilon(1e-12));

    const auto sum = (head.to_dense() + tail.to_dense()).eval();
    CHECK(max_abs_diff(sum, psi.to_dense()) < 1e-10);
  }

  SUBCASE("empty keep set yields the zero state") {
    auto zero = psi.project_schmidt_component(3, {});
    CHECK(zero.norm_sq() == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("projection additivity over a three-way partition") {
  std::mt19937_64 rng(43);
  auto psi = MatrixProductState::random_state(10, 16, rng);
  auto spec = psi.schmidt_spectrum(4);
  REQUIRE(spec.chi >= 5);
  std::vector<std::vector<int>> parts{{0}, {1, 2}, {}};
  for (int i = 3; i < spec.chi; ++i) parts[2].push_back(i);
  double total = 0.0;
  for (const auto& p : parts) total += psi.project_schmidt_component(4, p).norm_sq();
  CHECK(total == doctest::Approx(psi.norm_sq()).epsilon(1e-12));
}

TEST_CASE("inner products agree with the dense dot product") {
  std::mt19937_64 rng(51);
  auto a = MatrixProductState::random_state(9, 8, rng);
  auto b = MatrixProductState::random_state(9, 8, rng);
  CHECK(std::abs(inner_product(a, a) - cplx(1.0)) < 1e-12);
  const cplx dense = a.to_dense().dot(b.to_dense());
  const cplx mps = inner_product(a, b);
  CHECK(std::abs(dense - mps) < 1e-12);

  auto up = MatrixProductState::basis_state(4, {0, 0, 0, 0});
  auto other = MatrixProductState::basis_state(4, {0, 1, 0, 0});
  CHECK(std::abs(inner_product(up, other)) == 0.0);
  CHECK_THROWS_AS(inner_product(a, up), std::invalid_argument);
}

TEST_CASE("to_dense bit ordering puts site 0 on the most significant bit") {
  auto up = MatrixProductState::all_up(5);
  auto d = up.to_dense();
  CHECK(std::abs(d[0] - cplx(1.0)) < 1e-15);

  for (int n = 0; n < 5; ++n) {
    std::vector<int> bits(5, 0);
    bits[n] = 1;
    auto flip = MatrixProductState::basis_state(5, bits);
    auto v = flip.to_dense();
    const int idx = 1 << (4 - n);
    CHECK(std::abs(v[idx] - cplx(1.0)) < 1e-15);
    CHECK(v.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-14));
  }

  auto big = MatrixProductState::all_up(20);
  CHECK_THROWS_AS(big.to_dense(), std::runtime_error);
}

TEST_CASE("log-norm bookkeeping survives rescaling") {
  std::mt19937_64 rng(61);
  auto psi = MatrixProductState::random_state(6, 6, rng);
  psi.canonicalize(2);
  auto spec_before = psi.schmidt_spectrum(2);
  psi.normalize_center();  // pulls the scale into the log accumulator
  CHECK(psi.norm_sq() == doctest::Approx(1.0).epsilon(1e-12));
  auto spec_after = psi.schmidt_spectrum(2);
  for (int i = 0; i < spec_before.chi; ++i) {
    CHECK(spec_after.values[i] == doctest::Approx(spec_before.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("snapshot save/load round-trips exactly") {
  std::mt19937_64 rng(71);
  auto psi = MatrixProductState::random_state(7, 8, rng);
  psi.canonicalize(3);
  const std::string path = "test_state.mps";
  psi.save(path);
  auto back = MatrixProductState::load(path);
  CHECK(back.canonical_center() == 3);
  CHECK(max_abs_diff(psi.to_dense(), back.to_dense()) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("structural validation rejects malformed chains") {
  std::vector<SiteTensor> sites(2);
  sites[0].m[0] = Matrix::Ones(1, 2);
  sites[0].m[1] = Matrix::Zero(1, 2);
  sites[1].m[0] = Matrix::Ones(3, 1);  // bond mismatch 2 vs 3
  sites[1].m[1] = Matrix::Zero(3, 1);
  CHECK_THROWS_AS(MatrixProductState(std::move(sites), -1, 0.0), std::runtime_error);
}

TEST_CASE("random gate circuits keep matching the dense oracle") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 3; ++trial) {
    const int L = 5 + 2 * trial;  // 5, 7, 9
    auto psi = MatrixProductState::random_state(L, 6, rng);
    auto dense = psi.to_dense();
    TruncationPolicy loose;
    loose.cutoff = 0.0;
    std::uniform_int_distribution<int> bond(0, L - 2);
    std::uniform_real_distribution<double> angle(0.1, 1.4);
    for (int step = 0; step < 20; ++step) {
      const int b = bond(rng);
      const auto g = entangling_gate(angle(rng));
      psi.apply_two_site_gate(b, g, loose);
      dense = oracle::apply_two_site_gate(dense, L, b, g);
    }
    CHECK(max_abs_diff(psi.to_dense(), dense) < 1e-11);
  }
}

TEST_CASE("compress removes redundant rank without changing the state") {
  std::mt19937_64 rng(91);
  auto psi = MatrixProductState::random_state(8, 4, rng);
  auto padded = psi;
  const auto g = entangling_gate(0.9);
  TruncationPolicy loose;
  loose.cutoff = 0.0;
  padded.apply_two_site_gate(3, g, loose);
  padded.apply_two_site_gate(3, g.adjoint().eval(), loose);
  TruncationPolicy tidy;
  tidy.cutoff = 1e-13;
  const double dropped = padded.compress(tidy);
  CHECK(dropped < 1e-10);
  CHECK(aligned_diff(psi.to_dense(), padded.to_dense()) < 1e-10);
  CHECK(padded.max_bond_dim() <= 5);
}

TEST_CASE("svd kernel contract holds at production sizes") {
  std::mt19937_64 rng(123);
  std::normal_distribution<double> nd;
  for (int n : {40, 300, 600}) {
    Matrix m(n, n / 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n / 2; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    auto r = svd_thin(m);
    // factors reconstruct the input
    CHECK(((r.U * r.s.asDiagonal() * r.Vh) - m).cwiseAbs().maxCoeff() < 1e-11);
    // orthonormal factors
    Matrix uu = r.U.adjoint() * r.U;
    uu.diagonal().array() -= 1.0;
    CHECK(uu.cwiseAbs().maxCoeff() < 1e-12);
    Matrix vv = r.Vh * r.Vh.adjoint();
    vv.diagonal().array() -= 1.0;
    CHECK(vv.cwiseAbs().maxCoeff() < 1e-12);
    // descending order, and reproducible across calls
    for (int i = 1; i < r.s.size(); ++i) CHECK(r.s[i] <= r.s[i - 1] + 1e-14);
    auto r2 = svd_thin(m);
    CHECK((r.s - r2.s).cwiseAbs().maxCoeff() < 1e-10);
  }
}
