#include "scatlab/lanczos.hpp"

#include <Eigen/Eigenvalues>
#include <complex>
#include <random>
#include <stdexcept>

namespace scatlab {

namespace {

using Eigen::VectorXcd;

Eigen::MatrixXcd assemble_dense(Eigen::Index dim, const MatVec& matvec) {
  Eigen::MatrixXcd h(dim, dim);
  VectorXcd unit = VectorXcd::Zero(dim);
  VectorXcd col(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    unit[i] = 1.0;
    matvec(unit, col);
    h.col(i) = col;
    unit[i] = 0.0;
  }
  return 0.5 * (h + h.adjoint().eval());
}

void reorthogonalize(const std::vector<VectorXcd>& basis, VectorXcd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& v : basis) {
      w -= v.dot(w) * v;
    }
  }
}

struct RitzResult {
  Eigen::VectorXd values;           // ascending
  Eigen::MatrixXd vectors;          // in the Krylov basis
  std::vector<VectorXcd> basis;
};

RitzResult run_lanczos(Eigen::Index dim, const MatVec& matvec, int nev,
                       const LanczosOptions& opts, const VectorXcd* initial) {
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto fill_random = [&](VectorXcd& v) {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = std::complex<double>(nd(rng), nd(rng));
  };

  std::vector<VectorXcd> basis;
  std::vector<double> alpha, beta;

  VectorXcd v(dim);
  if (initial != nullptr && initial->size() == dim && initial->norm() > 1e-14) {
    v = *initial;
  } else {
    fill_random(v);
  }
  v.normalize();
  basis.push_back(v);

  VectorXcd w(dim);
  const int maxit = static_cast<int>(std::min<Eigen::Index>(opts.max_iter, dim));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;

  auto solve_tridiag = [&]() {
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    es.compute(t);
  };

  bool exhausted = false;
  for (int j = 0; j < maxit; ++j) {
    matvec(basis[j], w);
    if (j > 0 && beta[j - 1] != 0.0) w -= beta[j - 1] * basis[j - 1];
    const double a = basis[j].dot(w).real();
    alpha.push_back(a);
    w -= a * basis[j];
    reorthogonalize(basis, w);
    double b = w.norm();
    if (b < 1e-13) {
      // invariant subspace hit: restart with a fresh orthogonal direction
      b = 0.0;
      fill_random(w);
      reorthogonalize(basis, w);
      const double wn = w.norm();
      if (wn < 1e-10 * std::sqrt(static_cast<double>(dim))) {
        exhausted = true;  // Krylov space covers everything reachable
      } else {
        w /= wn;
      }
    } else {
      w /= b;
    }

    const int m = static_cast<int>(alpha.size());
    const bool last = exhausted || (j == maxit - 1) || (m == dim);
    if (m >= nev && (m % opts.check_every == 0 || last)) {
      solve_tridiag();
      bool done = true;
      const double bl = beta.empty() ? 0.0 : b;
      for (int i = 0; i < std::min(nev, m) && done; ++i) {
        const double resid = std::abs(bl * es.eigenvectors()(m - 1, i));
        done = resid <= opts.tol * std::max(1.0, std::abs(es.eigenvalues()[i]));
      }
      if (done || last) {
        return {es.eigenvalues(), es.eigenvectors(), std::move(basis)};
      }
    }
    if (last) break;
    beta.push_back(b);
    basis.push_back(w);
  }
  solve_tridiag();
  return {es.eigenvalues(), es.eigenvectors(), std::move(basis)};
}

}  // namespace

double lanczos_ground(Eigen::Index dim, const MatVec& matvec, Eigen::VectorXcd* eigvec,
                      const LanczosOptions& opts, const Eigen::VectorXcd* initial) {
  if (dim <= 0) throw std::invalid_argument("lanczos_ground: empty space");
  if (dim <= opts.dense_cutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(assemble_dense(dim, matvec));
    if (eigvec != nullptr) *eigvec = es.eigenvectors().col(0);
    return es.eigenvalues()[0];
  }
  auto r = run_lanczos(dim, matvec, 1, opts, initial);
  if (eigvec != nullptr) {
    VectorXcd y = VectorXcd::Zero(dim);
    const int m = static_cast<int>(r.values.size());
    for (int i = 0; i < m && i < static_cast<int>(r.basis.size()); ++i) {
      y += r.vectors(i, 0) * r.basis[i];
    }
    y.normalize();
    *eigvec = y;
  }
  return r.values[0];
}

std::vector<double> lanczos_lowest(Eigen::Index dim, const MatVec& matvec, int nev,
                                   const LanczosOptions& opts) {
  if (dim <= 0) throw std::invalid_argument("lanczos_lowest: empty space");
  nev = static_cast<int>(std::min<Eigen::Index>(nev, dim));
  if (dim <= opts.dense_cutoff) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(assemble_dense(dim, matvec));
    std::vector<double> out(nev);
    for (int i = 0; i < nev; ++i) out[i] = es.eigenvalues()[i];
    return out;
  }
  auto r = run_lanczos(dim, matvec, nev, opts, nullptr);
  std::vector<double> out;
  const int m = static_cast<int>(r.values.size());
  for (int i = 0; i < std::min(nev, m); ++i) out.push_back(r.values[i]);
  return out;
}

}  // namespace scatlab
