#include "scatlab/svd.hpp"

#include <lapacke.h>

#include <Eigen/SVD>
#include <stdexcept>

namespace scatlab {

namespace {

// The QR-iteration LAPACK driver; used only as a fallback. The faster
// divide-and-conquer gesdd is avoided on purpose: this platform's build
// returns non-orthogonal factors for n >~ 200 while reporting success.
int lapack_gesvd(Matrix a, Matrix& u, Eigen::VectorXd& s, Matrix& vh) {
  const lapack_int rows = static_cast<lapack_int>(a.rows());
  const lapack_int cols = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(rows, cols);
  u.resize(rows, k);
  s.resize(k);
  vh.resize(k, cols);
  std::vector<double> superb(std::max<lapack_int>(1, k - 1));
  return LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', rows, cols,
                        reinterpret_cast<lapack_complex_double*>(a.data()), rows, s.data(),
                        reinterpret_cast<lapack_complex_double*>(u.data()), rows,
                        reinterpret_cast<lapack_complex_double*>(vh.data()), k, superb.data());
}

}  // namespace

SvdResult svd_thin(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw std::invalid_argument("svd_thin: empty matrix");
  }
  SvdResult r;
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  r.U = svd.matrixU();
  r.s = svd.singularValues();
  r.Vh = svd.matrixV().adjoint();
  if (!r.s.allFinite()) {
    if (lapack_gesvd(m, r.U, r.s, r.Vh) != 0 || !r.s.allFinite()) {
      throw std::runtime_error("svd_thin: both SVD backends failed to converge");
    }
  }
  return r;
}

void validate(const TruncationPolicy& p) {
  if (p.max_bond < 1) {
    throw std::invalid_argument("TruncationPolicy: max_bond must be >= 1");
  }
  if (p.cutoff < 0.0 || p.cutoff >= 1.0) {
    throw std::invalid_argument("TruncationPolicy: cutoff must be in [0, 1)");
  }
}

TruncationDecision decide_truncation(const Eigen::VectorXd& s, const TruncationPolicy& p) {
  validate(p);
  const int n = static_cast<int>(s.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += s[i] * s[i];

  // Largest tail whose squared weight stays within cutoff * total.
  const double budget = p.cutoff * total;
  int keep = n;
  double dropped = 0.0;
  while (keep > 1) {
    const double w = s[keep - 1] * s[keep - 1];
    if (dropped + w > budget) break;
    dropped += w;
    --keep;
  }
  while (keep > p.max_bond) {
    --keep;
    dropped += s[keep] * s[keep];
  }
  return {keep, dropped};
}

}  // namespace scatlab
