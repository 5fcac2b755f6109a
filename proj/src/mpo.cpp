#include "scatlab/mpo.hpp"

#include <stdexcept>

namespace scatlab {

Mpo ising_mpo(const IsingCouplings& c) {
  validate(c);
  const Op1 zero = Op1::Zero();
  const Op1 field = (-c.g_x * pauli::X() - c.g_z * pauli::Z()).eval();
  const Op1 mz = (-pauli::Z()).eval();
  // finite-state machine: 0 = ready, 1 = ZZ in progress, 2 = done
  std::vector<std::vector<Op1>> bulk(3, std::vector<Op1>(3, zero));
  bulk[0][0] = pauli::I();
  bulk[0][1] = mz;
  bulk[0][2] = field;
  bulk[1][2] = pauli::Z();
  bulk[2][2] = pauli::I();

  Mpo m;
  m.w.resize(c.length);
  m.w[0] = {bulk[0]};  // enter in "ready"
  for (int n = 1; n + 1 < c.length; ++n) m.w[n] = bulk;
  m.w[c.length - 1].assign(3, std::vector<Op1>(1, zero));
  for (int a = 0; a < 3; ++a) m.w[c.length - 1][a][0] = bulk[a][2];  // exit in "done"
  return m;
}

Mpo mpo_product(const Mpo& a, const Mpo& b) {
  if (a.length() != b.length()) {
    throw std::invalid_argument("mpo_product: length mismatch");
  }
  Mpo out;
  out.w.resize(a.length());
  for (int n = 0; n < a.length(); ++n) {
    const int al = a.left_dim(n), ar = a.right_dim(n);
    const int bl = b.left_dim(n), br = b.right_dim(n);
    out.w[n].assign(al * bl, std::vector<Op1>(ar * br, Op1::Zero()));
    for (int i = 0; i < al; ++i)
      for (int j = 0; j < ar; ++j)
        for (int p = 0; p < bl; ++p)
          for (int q = 0; q < br; ++q) {
            if (a.w[n][i][j].squaredNorm() == 0.0 || b.w[n][p][q].squaredNorm() == 0.0) continue;
            out.w[n][i * bl + p][j * br + q] = a.w[n][i][j] * b.w[n][p][q];
          }
  }
  return out;
}

cplx mpo_expectation(const MatrixProductState& psi, const Mpo& m) {
  if (psi.length() != m.length()) {
    throw std::invalid_argument("mpo_expectation: length mismatch");
  }
  std::vector<Matrix> env(m.left_dim(0));
  env[0] = Matrix::Identity(1, 1);
  for (size_t a = 1; a < env.size(); ++a) env[a] = Matrix::Zero(1, 1);

  for (int n = 0; n < psi.length(); ++n) {
    const auto& t = psi.site(n);
    const int wl = m.left_dim(n), wr = m.right_dim(n);
    std::vector<Matrix> next(wr, Matrix::Zero(t.right_dim(), t.right_dim()));
    // cache A[s']^dag * env[a] per (a, s')
    for (int a = 0; a < wl; ++a) {
      if (env[a].size() == 0 || env[a].squaredNorm() == 0.0) continue;
      std::array<Matrix, 2> left;
      for (int sp = 0; sp < 2; ++sp) left[sp] = t.m[sp].adjoint() * env[a];
      for (int b = 0; b < wr; ++b) {
        const Op1& op = m.w[n][a][b];
        if (op.squaredNorm() == 0.0) continue;
        for (int sp = 0; sp < 2; ++sp)
          for (int s = 0; s < 2; ++s) {
            if (op(sp, s) != cplx(0.0)) next[b] += op(sp, s) * (left[sp] * t.m[s]);
          }
      }
    }
    env = std::move(next);
  }
  return env.back()(0, 0) * std::exp(2.0 * psi.log_norm_adjust());
}

}  // namespace scatlab
