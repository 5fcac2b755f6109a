#include "oracle/dense_oracle.hpp"

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <map>
#include <random>
#include <stdexcept>

namespace oracle {

namespace {

// Dense Hermitian eigen-decomposition through the QR-iteration driver (the
// divide-and-conquer zheevd is broken in this platform's LAPACK build).
std::pair<Eigen::VectorXd, Mat> eigh(const Mat& h) {
  Mat a = h;
  Eigen::VectorXd w(h.rows());
  const int info = LAPACKE_zheev(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(a.rows()),
                                 reinterpret_cast<lapack_complex_double*>(a.data()),
                                 static_cast<lapack_int>(a.rows()), w.data());
  if (info != 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    return {es.eigenvalues(), es.eigenvectors()};
  }
  return {w, a};
}

// Bare-bones dense-matrix Lanczos for ground states too large for eigh;
// deliberately separate from the library's iterative solver.
std::pair<double, Vec> dense_lanczos_ground(const Mat& h) {
  const Eigen::Index n = h.rows();
  std::mt19937_64 rng(424242);
  std::normal_distribution<double> nd;
  std::vector<Vec> basis;
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
  v.normalize();
  basis.push_back(v);
  std::vector<double> alpha, beta;
  const int maxit = 220;
  for (int j = 0; j < maxit; ++j) {
    Vec w = h * basis[j];
    if (j > 0) w -= beta[j - 1] * basis[j - 1];
    alpha.push_back(basis[j].dot(w).real());
    w -= alpha[j] * basis[j];
    for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
    const double bnorm = w.norm();
    if (bnorm < 1e-12) break;
    beta.push_back(bnorm);
    basis.push_back(w / bnorm);
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    t(i, i) = alpha[i];
    if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  Vec ground = Vec::Zero(n);
  for (int i = 0; i < m; ++i) ground += es.eigenvectors()(i, 0) * basis[i];
  ground.normalize();
  return {es.eigenvalues()[0], ground};
}

struct CacheKey {
  int length;
  double g_x, g_z;
  bool operator<(const CacheKey& o) const {
    return std::tie(length, g_x, g_z) < std::tie(o.length, o.g_x, o.g_z);
  }
};

// eigh is O(n^3); cache it per Hamiltonian for the propagation tests
std::map<CacheKey, std::pair<Eigen::VectorXd, Mat>>& eigh_cache() {
  static std::map<CacheKey, std::pair<Eigen::VectorXd, Mat>> cache;
  return cache;
}

}  // namespace

Mat pauli(char p) {
  Mat m(2, 2);
  switch (p) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("pauli: unknown label");
  }
  return m;
}

Mat embed(int length, const std::vector<std::pair<int, char>>& ops) {
  Mat out = Mat::Identity(1, 1);
  for (int n = 0; n < length; ++n) {
    Mat site = pauli('I');
    for (const auto& [s, p] : ops) {
      if (s == n) site = pauli(p) * site;
    }
    Mat next(out.rows() * 2, out.cols() * 2);
    for (int i = 0; i < out.rows(); ++i)
      for (int j = 0; j < out.cols(); ++j) next.block(i * 2, j * 2, 2, 2) = out(i, j) * site;
    out = std::move(next);
  }
  return out;
}

Mat ising_dense(int length, double g_x, double g_z) {
  const Eigen::Index dim = Eigen::Index(1) << length;
  Mat h = Mat::Zero(dim, dim);
  for (int n = 0; n + 1 < length; ++n) {
    h -= embed(length, {{n, 'Z'}, {n + 1, 'Z'}});
  }
  for (int n = 0; n < length; ++n) {
    h -= g_x * embed(length, {{n, 'X'}});
    h -= g_z * embed(length, {{n, 'Z'}});
  }
  return h;
}

Vec propagate(const Mat& h, const Vec& psi, double t) {
  const auto [vals, vecs] = eigh(h);
  Vec phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    phases[i] = std::exp(cplx(0.0, -t * vals[i]));
  }
  return vecs * (phases.asDiagonal() * (vecs.adjoint() * psi));
}

Vec propagate_ising(int length, double g_x, double g_z, const Vec& psi, double t) {
  const CacheKey key{length, g_x, g_z};
  auto& cache = eigh_cache();
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, eigh(ising_dense(length, g_x, g_z))).first;
  }
  const auto& [vals, vecs] = it->second;
  Vec phases(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    phases[i] = std::exp(cplx(0.0, -t * vals[i]));
  }
  return vecs * (phases.asDiagonal() * (vecs.adjoint() * psi));
}

std::pair<double, Vec> ground_state(const Mat& h) {
  if (h.rows() > 2048) {
    return dense_lanczos_ground(h);
  }
  const auto [vals, vecs] = eigh(h);
  return {vals[0], vecs.col(0)};
}

Vec apply_two_site_gate(const Vec& psi, int length, int n, const Eigen::Matrix4cd& gate) {
  Vec out = Vec::Zero(psi.size());
  const int shift1 = length - 1 - n;      // bit position of site n
  const int shift2 = length - 2 - n;      // bit position of site n+1
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx) {
    const int s1 = (idx >> shift1) & 1;
    const int s2 = (idx >> shift2) & 1;
    const int in = s1 * 2 + s2;
    for (int outspin = 0; outspin < 4; ++outspin) {
      const cplx g = gate(outspin, in);
      if (g == cplx(0.0)) continue;
      Eigen::Index jdx = idx;
      jdx &= ~((Eigen::Index(1) << shift1) | (Eigen::Index(1) << shift2));
      jdx |= Eigen::Index((outspin >> 1) & 1) << shift1;
      jdx |= Eigen::Index(outspin & 1) << shift2;
      out[jdx] += g * psi[idx];
    }
  }
  return out;
}

std::vector<double> schmidt_values_sq(const Vec& psi, int length, int cut) {
  const Eigen::Index dl = Eigen::Index(1) << (cut + 1);
  const Eigen::Index dr = Eigen::Index(1) << (length - cut - 1);
  Mat m(dl, dr);
  for (Eigen::Index a = 0; a < dl; ++a)
    for (Eigen::Index b = 0; b < dr; ++b) m(a, b) = psi[a * dr + b];
  Mat rho = m * m.adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(rho);
  std::vector<double> vals;
  for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
    vals.push_back(std::max(0.0, es.eigenvalues()[i]));
  }
  return vals;
}

double fidelity(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::norm(a.dot(b)) / (na * na * nb * nb);
}

}  // namespace oracle
