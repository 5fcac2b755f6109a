#include "scatlab/state_prep.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "scatlab/lanczos.hpp"
#include "scatlab/mpo.hpp"

namespace scatlab {

void validate(const WavepacketSpec& spec, int lattice_length) {
  if (!(std::abs(spec.k_i) > 0.0) || !(std::abs(spec.k_i) < M_PI)) {
    throw std::invalid_argument("WavepacketSpec: need 0 < |k_i| < pi");
  }
  if (!(spec.sigma_k > 0.0)) {
    throw std::invalid_argument("WavepacketSpec: sigma_k must be positive");
  }
  if (spec.d < 1 || spec.d % 2 == 0) {
    throw std::invalid_argument("WavepacketSpec: d must be odd and >= 1");
  }
  const int half = (spec.d - 1) / 2;
  if (spec.n0 - half < 0 || spec.n0 + half >= lattice_length) {
    throw std::invalid_argument("WavepacketSpec: window clipped by the lattice boundary");
  }
}

// ---------------------------------------------------------------------------
// vacuum preparation: two-site sweeps against the Hamiltonian MPO
// ---------------------------------------------------------------------------

namespace {

using EnvVec = std::vector<Matrix>;  // one block per MPO bond state

EnvVec left_env_step(const EnvVec& env, const SiteTensor& t, const Mpo& m, int n) {
  const int wl = m.left_dim(n), wr = m.right_dim(n);
  EnvVec next(wr, Matrix::Zero(t.right_dim(), t.right_dim()));
  for (int a = 0; a < wl; ++a) {
    if (env[a].size() == 0 || env[a].squaredNorm() == 0.0) continue;
    std::array<Matrix, 2> left;
    for (int sp = 0; sp < 2; ++sp) left[sp] = t.m[sp].adjoint() * env[a];
    for (int b = 0; b < wr; ++b) {
      const Op1& op = m.w[n][a][b];
      if (op.squaredNorm() == 0.0) continue;
      for (int sp = 0; sp < 2; ++sp)
        for (int s = 0; s < 2; ++s)
          if (op(sp, s) != cplx(0.0)) next[b] += op(sp, s) * (left[sp] * t.m[s]);
    }
  }
  return next;
}

EnvVec right_env_step(const EnvVec& env, const SiteTensor& t, const Mpo& m, int n) {
  const int wl = m.left_dim(n), wr = m.right_dim(n);
  EnvVec next(wl, Matrix::Zero(t.left_dim(), t.left_dim()));
  for (int b = 0; b < wr; ++b) {
    if (env[b].size() == 0 || env[b].squaredNorm() == 0.0) continue;
    std::array<Matrix, 2> right;
    for (int s = 0; s < 2; ++s) right[s] = t.m[s] * env[b];
    for (int a = 0; a < wl; ++a) {
      const Op1& op = m.w[n][a][b];
      if (op.squaredNorm() == 0.0) continue;
      for (int sp = 0; sp < 2; ++sp)
        for (int s = 0; s < 2; ++s)
          if (op(sp, s) != cplx(0.0)) next[a] += op(sp, s) * (right[s] * t.m[sp].adjoint());
    }
  }
  return next;
}

// Effective two-site Hamiltonian application for the local ground solve.
struct TwoSiteProblem {
  const EnvVec* lenv;
  const EnvVec* renv;
  const Mpo* mpo;
  int n;
  Eigen::Index dl, dr;

  Eigen::Index dim() const { return 4 * dl * dr; }

  void matvec(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
    out.setZero(dim());
    const int wl = mpo->left_dim(n);
    const int wm = mpo->right_dim(n);
    const int wr = mpo->right_dim(n + 1);
    std::array<Eigen::Map<const Matrix>, 4> th{
        Eigen::Map<const Matrix>(in.data() + 0 * dl * dr, dl, dr),
        Eigen::Map<const Matrix>(in.data() + 1 * dl * dr, dl, dr),
        Eigen::Map<const Matrix>(in.data() + 2 * dl * dr, dl, dr),
        Eigen::Map<const Matrix>(in.data() + 3 * dl * dr, dl, dr)};
    std::array<Eigen::Map<Matrix>, 4> ov{Eigen::Map<Matrix>(out.data() + 0 * dl * dr, dl, dr),
                                         Eigen::Map<Matrix>(out.data() + 1 * dl * dr, dl, dr),
                                         Eigen::Map<Matrix>(out.data() + 2 * dl * dr, dl, dr),
                                         Eigen::Map<Matrix>(out.data() + 3 * dl * dr, dl, dr)};
    for (int a = 0; a < wl; ++a) {
      if ((*lenv)[a].squaredNorm() == 0.0) continue;
      std::array<Matrix, 4> lth;
      for (int q = 0; q < 4; ++q) lth[q] = (*lenv)[a] * th[q];
      for (int cidx = 0; cidx < wr; ++cidx) {
        if ((*renv)[cidx].squaredNorm() == 0.0) continue;
        // spin coupling K = sum_b W_n[a][b] (x) W_{n+1}[b][cidx]
        Eigen::Matrix4cd k = Eigen::Matrix4cd::Zero();
        bool any = false;
        for (int b = 0; b < wm; ++b) {
          const Op1& w1 = mpo->w[n][a][b];
          const Op1& w2 = mpo->w[n + 1][b][cidx];
          if (w1.squaredNorm() == 0.0 || w2.squaredNorm() == 0.0) continue;
          any = true;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              for (int p = 0; p < 2; ++p)
                for (int q = 0; q < 2; ++q) k(i * 2 + p, j * 2 + q) += w1(i, j) * w2(p, q);
        }
        if (!any) continue;
        std::array<Matrix, 4> lthr;
        for (int q = 0; q < 4; ++q) lthr[q] = lth[q] * (*renv)[cidx];
        for (int p = 0; p < 4; ++p)
          for (int q = 0; q < 4; ++q)
            if (k(p, q) != cplx(0.0)) ov[p] += k(p, q) * lthr[q];
      }
    }
  }
};

// Splits the optimized two-site block back into the chain.
void split_two_site(MatrixProductState& psi, int n, const Eigen::VectorXcd& theta,
                    Eigen::Index dl, Eigen::Index dr, const TruncationPolicy& policy,
                    bool absorb_right) {
  Matrix m(2 * dl, 2 * dr);
  for (int s1 = 0; s1 < 2; ++s1)
    for (int s2 = 0; s2 < 2; ++s2)
      m.block(s1 * dl, s2 * dr, dl, dr) =
          Eigen::Map<const Matrix>(theta.data() + (s1 * 2 + s2) * dl * dr, dl, dr);
  auto svd = svd_thin(m);
  auto dec = decide_truncation(svd.s, policy);
  const int k = dec.keep;
  Eigen::VectorXd s = svd.s.head(k);
  s /= s.norm();  // local solve returns a normalized block; keep it normalized
  Matrix u = svd.U.leftCols(k);
  Matrix vh = svd.Vh.topRows(k);
  if (absorb_right) {
    psi.site_mut(n).m[0] = u.topRows(dl);
    psi.site_mut(n).m[1] = u.bottomRows(dl);
    Matrix mid = s.asDiagonal() * vh;
    psi.site_mut(n + 1).m[0] = mid.leftCols(dr);
    psi.site_mut(n + 1).m[1] = mid.rightCols(dr);
    psi.set_center(n + 1);
  } else {
    Matrix mid = u * s.asDiagonal();
    psi.site_mut(n).m[0] = mid.topRows(dl);
    psi.site_mut(n).m[1] = mid.bottomRows(dl);
    psi.site_mut(n + 1).m[0] = vh.leftCols(dr);
    psi.site_mut(n + 1).m[1] = vh.rightCols(dr);
    psi.set_center(n);
  }
}

}  // namespace

VacuumResult prepare_vacuum(const IsingCouplings& c, const VacuumOptions& opts) {
  validate(c);
  if (opts.max_bond < 2 || opts.max_sweeps < 1) {
    throw std::invalid_argument("prepare_vacuum: bad options");
  }
  const int L = c.length;
  const Mpo h = ising_mpo(c);

  MatrixProductState psi = MatrixProductState::all_up(L);
  psi.canonicalize(0);

  LanczosOptions lopts;
  lopts.max_iter = 200;
  lopts.tol = 1e-13;
  lopts.dense_cutoff = 64;

  double energy = 0.0;
  double variance = std::numeric_limits<double>::infinity();

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    TruncationPolicy pol;
    pol.max_bond = std::min(opts.max_bond, 8 << std::min(sweep, 8));
    pol.cutoff = opts.cutoff;

    // right-to-left environments
    std::vector<EnvVec> renv(L + 1);
    renv[L] = {Matrix::Identity(1, 1)};
    for (int n = L - 1; n >= 2; --n) renv[n] = right_env_step(renv[n + 1], psi.site(n), h, n);
    std::vector<EnvVec> lenv(L + 1);
    lenv[0] = {Matrix::Identity(1, 1)};

    auto local_solve = [&](int n, bool absorb_right) {
      const auto dl = psi.site(n).left_dim();
      const auto dr = psi.site(n + 1).right_dim();
      TwoSiteProblem prob{&lenv[n], &renv[n + 2], &h, n, dl, dr};
      Eigen::VectorXcd guess(prob.dim());
      for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2)
          Eigen::Map<Matrix>(guess.data() + (s1 * 2 + s2) * dl * dr, dl, dr) =
              psi.site(n).m[s1] * psi.site(n + 1).m[s2];
      Eigen::VectorXcd ground;
      energy = lanczos_ground(
          prob.dim(), [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { prob.matvec(in, out); },
          &ground, lopts, &guess);
      split_two_site(psi, n, ground, dl, dr, pol, absorb_right);
    };

    psi.canonicalize(0);
    for (int n = 0; n + 1 < L; ++n) {
      local_solve(n, true);
      lenv[n + 1] = left_env_step(lenv[n], psi.site(n), h, n);
    }
    for (int n = L - 2; n >= 0; --n) {
      local_solve(n, false);
      renv[n + 1] = right_env_step(renv[n + 2], psi.site(n + 1), h, n + 1);
    }

    psi.normalize_to_unit();
    variance = energy_variance(psi, c);
    if (variance <= opts.variance_tol) {
      return {std::move(psi), energy, variance, sweep + 1};
    }
  }
  throw std::runtime_error("prepare_vacuum: no convergence after " +
                           std::to_string(opts.max_sweeps) + " sweeps; last energy " +
                           std::to_string(energy) + ", variance " + std::to_string(variance));
}

// ---------------------------------------------------------------------------
// single-flip window states
// ---------------------------------------------------------------------------

MatrixProductState single_flip_superposition(int length, int window_start,
                                             const std::vector<cplx>& coeffs) {
  const int d = static_cast<int>(coeffs.size());
  if (d < 1 || window_start < 0 || window_start + d > length) {
    throw std::invalid_argument("single_flip_superposition: window outside lattice");
  }
  std::vector<SiteTensor> sites(length);
  for (int n = 0; n < length; ++n) {
    if (n < window_start || n >= window_start + d) {
      sites[n].m[0] = Matrix::Ones(1, 1);
      sites[n].m[1] = Matrix::Zero(1, 1);
      continue;
    }
    const cplx cn = coeffs[n - window_start];
    if (d == 1) {
      sites[n].m[0] = Matrix::Zero(1, 1);
      sites[n].m[1] = cn * Matrix::Ones(1, 1);
    } else if (n == window_start) {
      sites[n].m[0] = (Matrix(1, 2) << 1, 0).finished();
      sites[n].m[1] = (Matrix(1, 2) << 0, cn).finished();
    } else if (n == window_start + d - 1) {
      sites[n].m[0] = (Matrix(2, 1) << 0, 1).finished();
      sites[n].m[1] = (Matrix(2, 1) << cn, 0).finished();
    } else {
      sites[n].m[0] = (Matrix(2, 2) << 1, 0, 0, 1).finished();
      sites[n].m[1] = (Matrix(2, 2) << 0, cn, 0, 0).finished();
    }
  }
  return MatrixProductState(std::move(sites), -1, 0.0);
}

MatrixProductState plane_wave_state(double k, int length) {
  std::vector<cplx> coeffs(length);
  const double norm = 1.0 / std::sqrt(static_cast<double>(length));
  for (int n = 0; n < length; ++n) {
    coeffs[n] = norm * std::exp(cplx(0.0, k * n));
  }
  auto psi = single_flip_superposition(length, 0, coeffs);
  psi.canonicalize(0);
  return psi;
}

// ---------------------------------------------------------------------------
// rotation-angle cascade
// ---------------------------------------------------------------------------

std::vector<double> w_state_angles(const std::vector<double>& c, int eta) {
  const int d = static_cast<int>(c.size());
  if (d < 1 || eta < 0 || eta >= d) {
    throw std::invalid_argument("w_state_angles: bad peak index");
  }
  double norm = 0.0;
  for (double ci : c) norm += ci * ci;
  if (std::abs(norm - 1.0) > 1e-12) {
    throw std::invalid_argument("w_state_angles: coefficients must be normalized");
  }
  if (c[eta] == 0.0) {
    throw std::invalid_argument("w_state_angles: peak coefficient must be nonzero");
  }
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
  std::vector<double> theta(d, 0.0);

  // tail sums T_j = sum_{i>=j} c_i^2, prefix sums P_j = sum_{i<=j} c_i^2
  std::vector<double> tail(d + 1, 0.0), pref(d + 1, 0.0);
  for (int i = d - 1; i >= 0; --i) tail[i] = tail[i + 1] + c[i] * c[i];
  for (int i = 0; i < d; ++i) pref[i + 1] = pref[i] + c[i] * c[i];

  theta[eta] = 2.0 * std::asin(std::sqrt(clamp01(tail[eta])));
  for (int m = eta + 1; m < d; ++m) {
    const double denom = tail[m - 1];
    theta[m] = denom <= 0.0 ? 0.0 : 2.0 * std::acos(clamp01(std::abs(c[m - 1]) / std::sqrt(denom)));
  }
  for (int m = eta - 1; m >= 1; --m) {
    const double denom = pref[m + 1];  // P_m
    theta[m - 1] = denom <= 0.0 ? 0.0 : 2.0 * std::acos(clamp01(std::abs(c[m]) / std::sqrt(denom)));
  }
  // theta[eta-1] is not part of the cascade and stays 0
  return theta;
}

std::vector<double> w_state_forward(const std::vector<double>& theta, int eta) {
  const int d = static_cast<int>(theta.size());
  if (d < 1 || eta < 0 || eta >= d) {
    throw std::invalid_argument("w_state_forward: bad peak index");
  }
  std::vector<double> c(d, 0.0);
  // right chain: amplitudes c_eta .. c_{d-1}
  double run = std::sin(theta[eta] / 2.0);
  for (int j = 0; eta + j < d; ++j) {
    if (eta + j == d - 1) {
      c[eta + j] = run;
    } else {
      c[eta + j] = run * std::cos(theta[eta + j + 1] / 2.0);
      run *= std::sin(theta[eta + j + 1] / 2.0);
    }
  }
  // left chain: amplitudes c_{eta-1} .. c_0
  run = std::cos(theta[eta] / 2.0);
  for (int m = eta - 1; m >= 0; --m) {
    if (m == 0) {
      c[0] = run;
    } else {
      c[m] = run * std::cos(theta[m - 1] / 2.0);
      run *= std::sin(theta[m - 1] / 2.0);
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// wavepackets
// ---------------------------------------------------------------------------

WavepacketReference wavepacket_reference(const WavepacketSpec& spec, const IsingCouplings& c) {
  validate(c);
  validate(spec, c.length);
  const int L = c.length;
  std::vector<cplx> amp(L, cplx(0.0));
  for (int m = -L / 2; m < (L + 1) / 2; ++m) {
    const double k = 2.0 * M_PI * m / L;
    const double dk = spec.k_i - k;
    const double g = std::exp(-dk * dk / (2.0 * spec.sigma_k * spec.sigma_k));
    if (g < 1e-300) continue;
    for (int n = 0; n < L; ++n) {
      amp[n] += g * std::exp(cplx(0.0, k * (n - spec.n0)));
    }
  }
  double total = 0.0;
  for (const auto& a : amp) total += std::norm(a);

  const int half = (spec.d - 1) / 2;
  const int start = spec.n0 - half;
  std::vector<cplx> window(amp.begin() + start, amp.begin() + start + spec.d);
  double kept = 0.0;
  for (const auto& a : window) kept += std::norm(a);

  WavepacketReference out;
  out.norm_retained = std::sqrt(kept / total);
  const double scale = 1.0 / std::sqrt(kept);
  for (auto& a : window) a *= scale;
  out.window_coefficients = window;
  out.window_start = start;
  out.state = single_flip_superposition(L, start, window);
  out.state.canonicalize(0);
  return out;
}

// ---------------------------------------------------------------------------
// variational dressing layers
// ---------------------------------------------------------------------------

const VariationalLayerSchedule& reference_layer_schedule() {
  static const VariationalLayerSchedule s = {{"Y", 0.1212},  {"YZ", 0.0185}, {"Y", -0.5452},
                                             {"ZXY", 0.0397}, {"YZ", 0.0599}, {"YZ", 0.0556},
                                             {"Y", -0.2637}, {"ZYZ", 0.0566}};
  return s;
}

namespace {

Eigen::Matrix4cd kron2(const Op1& a, const Op1& b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

Gate3 kron3(const Op1& a, const Op1& b, const Op1& c) {
  Gate3 k;
  const Eigen::Matrix4cd bc = kron2(b, c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<4, 4>(4 * i, 4 * j) = a(i, j) * bc;
  return k;
}

template <typename Mat>
Mat exp_i_theta(const Mat& h, double theta) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  Eigen::Matrix<cplx, Mat::RowsAtCompileTime, 1> ph;
  ph.resize(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    ph[i] = std::exp(cplx(0.0, theta * es.eigenvalues()[i]));
  }
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

void apply_bond_layer(MatrixProductState& psi, const Eigen::Matrix4cd& h, double theta,
                      int substeps, const TruncationPolicy& policy) {
  const int L = psi.length();
  const double delta = theta / substeps;
  const Gate2 ge_half = exp_i_theta<Eigen::Matrix4cd>(h, delta / 2.0);
  const Gate2 ge_full = exp_i_theta<Eigen::Matrix4cd>(h, delta);
  auto sweep_even = [&](const Gate2& g) {
    for (int b = 0; b + 1 < L; b += 2) psi.apply_two_site_gate(b, g, policy, true);
  };
  auto sweep_odd = [&](const Gate2& g) {
    const int last = (L - 2) % 2 == 1 ? L - 2 : L - 3;
    for (int b = last; b >= 1; b -= 2) psi.apply_two_site_gate(b, g, policy, false);
  };
  sweep_even(ge_half);
  for (int s = 0; s < substeps; ++s) {
    sweep_odd(ge_full);
    if (s + 1 < substeps) {
      sweep_even(ge_full);
    } else {
      sweep_even(ge_half);
    }
  }
}

void apply_triple_layer(MatrixProductState& psi, const Gate3& h, double theta, int substeps,
                        const TruncationPolicy& policy) {
  const int L = psi.length();
  const double delta = theta / substeps;
  const Gate3 g_half = exp_i_theta<Gate3>(h, delta / 2.0);
  const Gate3 g_full = exp_i_theta<Gate3>(h, delta);
  auto sweep_group = [&](int offset, const Gate3& g, bool forward) {
    if (forward) {
      for (int n = offset; n + 2 < L; n += 3) psi.apply_three_site_gate(n, g, policy);
    } else {
      int start = offset;
      while (start + 3 + 2 < L) start += 3;
      for (int n = start; n >= offset; n -= 3) psi.apply_three_site_gate(n, g, policy);
    }
  };
  for (int s = 0; s < substeps; ++s) {
    sweep_group(0, g_half, true);
    sweep_group(1, g_half, true);
    sweep_group(2, g_full, false);
    sweep_group(1, g_half, false);
    sweep_group(0, g_half, false);
  }
}

}  // namespace

void apply_variational_layers(MatrixProductState& state, const VariationalLayerSchedule& schedule,
                              int substeps, const TruncationPolicy& policy) {
  if (substeps < 1) {
    throw std::invalid_argument("apply_variational_layers: substeps must be >= 1");
  }
  for (const auto& layer : schedule) {
    if (!std::isfinite(layer.theta)) {
      throw std::invalid_argument("apply_variational_layers: non-finite angle");
    }
    if (layer.theta == 0.0) continue;
    if (layer.op == "Y") {
      const Op1 g = exp_i_theta<Op1>(pauli::Y(), layer.theta);
      for (int n = 0; n < state.length(); ++n) state.apply_one_site_gate(n, g);
    } else if (layer.op == "YZ") {
      apply_bond_layer(state,
                       kron2(pauli::Y(), pauli::Z()) + kron2(pauli::Z(), pauli::Y()),
                       layer.theta, substeps, policy);
    } else if (layer.op == "YX") {
      apply_bond_layer(state,
                       kron2(pauli::Y(), pauli::X()) + kron2(pauli::X(), pauli::Y()),
                       layer.theta, substeps, policy);
    } else if (layer.op == "ZYZ") {
      apply_triple_layer(state, kron3(pauli::Z(), pauli::Y(), pauli::Z()), layer.theta, substeps,
                         policy);
    } else if (layer.op == "ZXY") {
      apply_triple_layer(state,
                         kron3(pauli::Z(), pauli::X(), pauli::Y()) +
                             kron3(pauli::Y(), pauli::X(), pauli::Z()),
                         layer.theta, substeps, policy);
    } else {
      throw std::invalid_argument("apply_variational_layers: unsupported pool operator '" +
                                  layer.op + "'");
    }
  }
}

PreparedScatteringState prepare_two_wavepacket_initial_state(const IsingCouplings& c,
                                                             const WavepacketSpec& left,
                                                             const WavepacketSpec& right,
                                                             const TwoPacketOptions& opts) {
  validate(c);
  validate(left, c.length);
  validate(right, c.length);
  const auto wl = wavepacket_reference(left, c);
  const auto wr = wavepacket_reference(right, c);
  const int l_end = wl.window_start + static_cast<int>(wl.window_coefficients.size());
  const int gap = wr.window_start - l_end;
  if (wr.window_start <= wl.window_start) {
    throw std::invalid_argument("prepare_two_wavepacket_initial_state: specs must be left, right");
  }
  if (gap < std::max(left.d, right.d)) {
    throw std::invalid_argument(
        "prepare_two_wavepacket_initial_state: packet windows must be separated by >= d sites");
  }

  // bare two-packet product over the all-up reference
  std::vector<SiteTensor> sites;
  {
    auto a = single_flip_superposition(c.length, wl.window_start, wl.window_coefficients);
    auto b = single_flip_superposition(c.length, wr.window_start, wr.window_coefficients);
    sites.reserve(c.length);
    for (int n = 0; n < c.length; ++n) {
      sites.push_back(n < l_end ? a.site(n) : b.site(n));
    }
  }
  PreparedScatteringState out;
  out.state = MatrixProductState(std::move(sites), -1, 0.0);
  out.state.canonicalize(0);
  out.reference = MatrixProductState::all_up(c.length);
  out.norm_retained_left = wl.norm_retained;
  out.norm_retained_right = wr.norm_retained;

  if (!opts.layers.empty()) {
    apply_variational_layers(out.state, opts.layers, opts.substeps, opts.policy);
    apply_variational_layers(out.reference, opts.layers, opts.substeps, opts.policy);
  }
  return out;
}

}  // namespace scatlab
