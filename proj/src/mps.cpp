#include "scatlab/mps.hpp"

#include <Eigen/QR>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace scatlab {

namespace {

constexpr char kSnapshotMagic[8] = {'S', 'C', 'A', 'T', 'M', 'P', 'S', '1'};

bool is_unitary(const Matrix& g, double tol = 1e-12) {
  Matrix d = g.adjoint() * g;
  d.diagonal().array() -= 1.0;
  return d.cwiseAbs().maxCoeff() <= tol;
}

// Stacks the two physical blocks of a site tensor into a (2*dl x dr) matrix,
// row index s*dl + l. The inverse of SiteTensor extraction in split points.
Matrix stack_rows(const SiteTensor& t) {
  const auto dl = t.left_dim();
  const auto dr = t.right_dim();
  Matrix m(2 * dl, dr);
  m.topRows(dl) = t.m[0];
  m.bottomRows(dl) = t.m[1];
  return m;
}

}  // namespace

double SchmidtSpectrum::sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

MatrixProductState::MatrixProductState(std::vector<SiteTensor> sites, int center,
                                       double log_norm_adjust)
    : sites_(std::move(sites)), center_(center), log_norm_adjust_(log_norm_adjust) {
  check_structure();
}

MatrixProductState MatrixProductState::basis_state(int length, const std::vector<int>& bits) {
  if (length < 1 || static_cast<int>(bits.size()) != length) {
    throw std::invalid_argument("basis_state: bits must have one entry per site");
  }
  std::vector<SiteTensor> sites(length);
  for (int n = 0; n < length; ++n) {
    if (bits[n] != 0 && bits[n] != 1) {
      throw std::invalid_argument("basis_state: bits must be 0 or 1");
    }
    sites[n].m[bits[n]] = Matrix::Ones(1, 1);
    sites[n].m[1 - bits[n]] = Matrix::Zero(1, 1);
  }
  return MatrixProductState(std::move(sites), 0, 0.0);
}

MatrixProductState MatrixProductState::all_up(int length) {
  return basis_state(length, std::vector<int>(length, 0));
}

MatrixProductState MatrixProductState::random_state(int length, int max_bond,
                                                    std::mt19937_64& rng) {
  if (length < 1 || max_bond < 1) {
    throw std::invalid_argument("random_state: bad length or bond");
  }
  std::normal_distribution<double> nd(0.0, 1.0);
  auto bond = [&](int i) {
    // bond between sites i-1 and i; i in [0, length]
    double lexp = std::min(i, 30);
    double rexp = std::min(length - i, 30);
    double cap = std::min(std::pow(2.0, lexp), std::pow(2.0, rexp));
    return static_cast<Eigen::Index>(std::min<double>(max_bond, cap));
  };
  std::vector<SiteTensor> sites(length);
  for (int n = 0; n < length; ++n) {
    const auto dl = bond(n);
    const auto dr = bond(n + 1);
    for (int s = 0; s < 2; ++s) {
      sites[n].m[s] = Matrix::NullaryExpr(dl, dr, [&]() { return cplx(nd(rng), nd(rng)); });
    }
  }
  MatrixProductState psi(std::move(sites), -1, 0.0);
  psi.canonicalize(0);
  psi.normalize_to_unit();
  return psi;
}

int MatrixProductState::bond_dim(int bond) const {
  if (bond < 0 || bond >= length() - 1) {
    throw std::out_of_range("bond_dim: bond out of range");
  }
  return static_cast<int>(sites_[bond].right_dim());
}

int MatrixProductState::max_bond_dim() const {
  int chi = 1;
  for (int n = 0; n + 1 < length(); ++n) {
    chi = std::max(chi, static_cast<int>(sites_[n].right_dim()));
  }
  return chi;
}

void MatrixProductState::check_structure() const {
  if (sites_.empty()) {
    throw std::runtime_error("mps: empty state");
  }
  if (sites_.front().left_dim() != 1 || sites_.back().right_dim() != 1) {
    throw std::runtime_error("mps: boundary bonds must have dimension 1");
  }
  for (int n = 0; n < length(); ++n) {
    if (sites_[n].m[0].rows() != sites_[n].m[1].rows() ||
        sites_[n].m[0].cols() != sites_[n].m[1].cols()) {
      throw std::runtime_error("mps: physical blocks disagree at site " + std::to_string(n));
    }
    if (n + 1 < length() && sites_[n].right_dim() != sites_[n + 1].left_dim()) {
      throw std::runtime_error("mps: bond mismatch between sites " + std::to_string(n) + " and " +
                               std::to_string(n + 1));
    }
  }
  if (center_ < -1 || center_ >= length()) {
    throw std::runtime_error("mps: canonical center out of range");
  }
}

void MatrixProductState::move_center_right() {
  const int c = center_;
  if (c < 0 || c + 1 >= length()) {
    throw std::runtime_error("move_center_right: no room to move");
  }
  const auto dl = sites_[c].left_dim();
  const auto dr = sites_[c].right_dim();
  const auto k = std::min(2 * dl, dr);
  Matrix m = stack_rows(sites_[c]);
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(2 * dl, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  sites_[c].m[0] = q.topRows(dl);
  sites_[c].m[1] = q.bottomRows(dl);
  for (int s = 0; s < 2; ++s) {
    sites_[c + 1].m[s] = r * sites_[c + 1].m[s];
  }
  ++center_;
}

void MatrixProductState::move_center_left() {
  const int c = center_;
  if (c < 1) {
    throw std::runtime_error("move_center_left: no room to move");
  }
  const auto dl = sites_[c].left_dim();
  const auto dr = sites_[c].right_dim();
  const auto k = std::min(dl, 2 * dr);
  Matrix m(dl, 2 * dr);
  m.leftCols(dr) = sites_[c].m[0];
  m.rightCols(dr) = sites_[c].m[1];
  Eigen::HouseholderQR<Matrix> qr(m.adjoint());
  Matrix q = qr.householderQ() * Matrix::Identity(2 * dr, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix qh = q.adjoint();  // k x 2*dr, row-isometric blocks
  sites_[c].m[0] = qh.leftCols(dr);
  sites_[c].m[1] = qh.rightCols(dr);
  for (int s = 0; s < 2; ++s) {
    sites_[c - 1].m[s] = sites_[c - 1].m[s] * r.adjoint();
  }
  --center_;
}

void MatrixProductState::canonicalize(int center) {
  check_structure();
  if (center < 0 || center >= length()) {
    throw std::invalid_argument("canonicalize: center out of range");
  }
  if (center_ == -1) {
    center_ = 0;
    // left-orthonormalize up to the target from scratch
    while (center_ < center) move_center_right();
    // right-orthonormalize the tail; walk the center to the end and back
    if (center < length() - 1) {
      int c = center_;
      while (center_ < length() - 1) move_center_right();
      while (center_ > c) move_center_left();
    }
    return;
  }
  while (center_ < center) move_center_right();
  while (center_ > center) move_center_left();
}

void MatrixProductState::normalize_center() {
  if (center_ < 0) {
    throw std::runtime_error("normalize_center: no canonical center");
  }
  double n2 = sites_[center_].m[0].squaredNorm() + sites_[center_].m[1].squaredNorm();
  if (n2 <= 0.0) {
    throw std::runtime_error("normalize_center: zero state");
  }
  const double s = std::sqrt(n2);
  sites_[center_].m[0] /= s;
  sites_[center_].m[1] /= s;
  log_norm_adjust_ += std::log(s);
}

void MatrixProductState::normalize_to_unit() {
  if (center_ < 0) canonicalize(0);
  normalize_center();
  log_norm_adjust_ = 0.0;
}

double MatrixProductState::norm_sq() const {
  const double scale = std::exp(2.0 * log_norm_adjust_);
  if (center_ >= 0) {
    return scale *
           (sites_[center_].m[0].squaredNorm() + sites_[center_].m[1].squaredNorm());
  }
  Matrix e = Matrix::Identity(1, 1);
  for (const auto& t : sites_) {
    e = (t.m[0].adjoint() * e * t.m[0] + t.m[1].adjoint() * e * t.m[1]).eval();
  }
  return scale * e(0, 0).real();
}

GateResult MatrixProductState::apply_two_site_gate(int bond, const Gate2& gate,
                                                   const TruncationPolicy& policy,
                                                   bool absorb_right) {
  if (bond < 0 || bond + 1 >= length()) {
    throw std::out_of_range("apply_two_site_gate: bond out of range");
  }
  validate(policy);
  if (center_ < bond || center_ > bond + 1) {
    canonicalize(center_ >= 0 && center_ > bond + 1 ? bond + 1 : bond);
  }
  const auto dl = sites_[bond].left_dim();
  const auto dr = sites_[bond + 1].right_dim();

  std::array<Matrix, 4> c;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      c[s1 * 2 + s2] = sites_[bond].m[s1] * sites_[bond + 1].m[s2];
    }
  }
  Matrix m(2 * dl, 2 * dr);
  for (int a = 0; a < 4; ++a) {
    Matrix acc = Matrix::Zero(dl, dr);
    for (int b = 0; b < 4; ++b) {
      if (gate(a, b) != cplx(0.0)) acc += gate(a, b) * c[b];
    }
    m.block((a >> 1) * dl, (a & 1) * dr, dl, dr) = acc;
  }

  auto svd = svd_thin(m);
  auto dec = decide_truncation(svd.s, policy);
  const int k = dec.keep;
  Eigen::VectorXd s = svd.s.head(k);
  if (policy.renormalize_after_truncation && dec.discarded_weight > 0.0) {
    const double total = svd.s.squaredNorm();
    const double kept = total - dec.discarded_weight;
    if (kept > 0.0) s *= std::sqrt(total / kept);
  }

  Matrix u = svd.U.leftCols(k);
  Matrix vh = svd.Vh.topRows(k);
  if (absorb_right) {
    sites_[bond].m[0] = u.topRows(dl);
    sites_[bond].m[1] = u.bottomRows(dl);
    Matrix mid = s.asDiagonal() * vh;
    sites_[bond + 1].m[0] = mid.leftCols(dr);
    sites_[bond + 1].m[1] = mid.rightCols(dr);
    center_ = bond + 1;
  } else {
    Matrix mid = u * s.asDiagonal();
    sites_[bond].m[0] = mid.topRows(dl);
    sites_[bond].m[1] = mid.bottomRows(dl);
    sites_[bond + 1].m[0] = vh.leftCols(dr);
    sites_[bond + 1].m[1] = vh.rightCols(dr);
    center_ = bond;
  }
  return {dec.discarded_weight * std::exp(2.0 * log_norm_adjust_), !is_unitary(gate)};
}

GateResult MatrixProductState::apply_three_site_gate(int first_site, const Gate3& gate,
                                                     const TruncationPolicy& policy) {
  if (first_site < 0 || first_site + 2 >= length()) {
    throw std::out_of_range("apply_three_site_gate: window out of range");
  }
  validate(policy);
  if (center_ < first_site || center_ > first_site + 2) {
    canonicalize(center_ >= 0 && center_ > first_site + 2 ? first_site + 2 : first_site);
  }
  const int n = first_site;
  const auto dl = sites_[n].left_dim();
  const auto dr = sites_[n + 2].right_dim();

  std::array<Matrix, 8> c;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      Matrix left = sites_[n].m[s1] * sites_[n + 1].m[s2];
      for (int s3 = 0; s3 < 2; ++s3) {
        c[s1 * 4 + s2 * 2 + s3] = left * sites_[n + 2].m[s3];
      }
    }
  }
  std::array<Matrix, 8> c2;
  for (int a = 0; a < 8; ++a) {
    c2[a] = Matrix::Zero(dl, dr);
    for (int b = 0; b < 8; ++b) {
      if (gate(a, b) != cplx(0.0)) c2[a] += gate(a, b) * c[b];
    }
  }

  // split off site n
  Matrix m1(2 * dl, 4 * dr);
  for (int a = 0; a < 8; ++a) {
    m1.block((a >> 2) * dl, (a & 3) * dr, dl, dr) = c2[a];
  }
  auto svd1 = svd_thin(m1);
  auto dec1 = decide_truncation(svd1.s, policy);
  const int k1 = dec1.keep;
  sites_[n].m[0] = svd1.U.leftCols(k1).topRows(dl);
  sites_[n].m[1] = svd1.U.leftCols(k1).bottomRows(dl);
  Matrix mid = svd1.s.head(k1).asDiagonal() * svd1.Vh.topRows(k1);  // k1 x 4*dr

  // split between sites n+1 and n+2
  Matrix m2(2 * k1, 2 * dr);
  for (int s2 = 0; s2 < 2; ++s2) {
    for (int s3 = 0; s3 < 2; ++s3) {
      m2.block(s2 * k1, s3 * dr, k1, dr) = mid.middleCols((s2 * 2 + s3) * dr, dr);
    }
  }
  auto svd2 = svd_thin(m2);
  auto dec2 = decide_truncation(svd2.s, policy);
  const int k2 = dec2.keep;
  Eigen::VectorXd s2v = svd2.s.head(k2);
  if (policy.renormalize_after_truncation && dec1.discarded_weight + dec2.discarded_weight > 0.0) {
    const double total = svd1.s.squaredNorm();
    const double kept = s2v.squaredNorm();
    if (kept > 0.0) s2v *= std::sqrt(total / kept);
  }
  sites_[n + 1].m[0] = svd2.U.leftCols(k2).topRows(k1);
  sites_[n + 1].m[1] = svd2.U.leftCols(k2).bottomRows(k1);
  Matrix tail = s2v.asDiagonal() * svd2.Vh.topRows(k2);
  sites_[n + 2].m[0] = tail.leftCols(dr);
  sites_[n + 2].m[1] = tail.rightCols(dr);
  center_ = n + 2;

  const double scale = std::exp(2.0 * log_norm_adjust_);
  return {(dec1.discarded_weight + dec2.discarded_weight) * scale, !is_unitary(gate)};
}

void MatrixProductState::apply_one_site_gate(int n, const Op1& gate) {
  if (n < 0 || n >= length()) {
    throw std::out_of_range("apply_one_site_gate: site out of range");
  }
  Matrix a = gate(0, 0) * sites_[n].m[0] + gate(0, 1) * sites_[n].m[1];
  Matrix b = gate(1, 0) * sites_[n].m[0] + gate(1, 1) * sites_[n].m[1];
  sites_[n].m[0] = std::move(a);
  sites_[n].m[1] = std::move(b);
  if (!is_unitary(gate) && center_ != n) {
    center_ = -1;  // isometry conditions no longer hold away from the site
  }
}

SchmidtSpectrum MatrixProductState::schmidt_spectrum(int cut_site) {
  if (cut_site < 0 || cut_site + 1 >= length()) {
    throw std::out_of_range("schmidt_spectrum: cut out of range");
  }
  canonicalize(cut_site);
  auto svd = svd_thin(stack_rows(sites_[cut_site]));
  const double scale = std::exp(2.0 * log_norm_adjust_);
  SchmidtSpectrum out;
  out.cut_site = cut_site;
  const double floor = svd.s.size() ? svd.s[0] * 1e-15 : 0.0;
  for (Eigen::Index i = 0; i < svd.s.size(); ++i) {
    if (svd.s[i] <= floor && i > 0) break;
    out.values.push_back(svd.s[i] * svd.s[i] * scale);
  }
  out.chi = static_cast<int>(out.values.size());
  return out;
}

MatrixProductState MatrixProductState::project_schmidt_component(
    int cut_site, const std::vector<int>& keep) const {
  MatrixProductState out = *this;
  out.canonicalize(cut_site);
  const auto dl = out.sites_[cut_site].left_dim();
  const auto dr = out.sites_[cut_site].right_dim();
  auto svd = svd_thin(stack_rows(out.sites_[cut_site]));
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(svd.s.size());
  for (int idx : keep) {
    if (idx < 0 || idx >= svd.s.size()) {
      throw std::invalid_argument("project_schmidt_component: index outside spectrum");
    }
    mask[idx] = svd.s[idx];
  }
  Matrix m = svd.U * mask.asDiagonal() * svd.Vh;
  out.sites_[cut_site].m[0] = m.topRows(dl);
  out.sites_[cut_site].m[1] = m.bottomRows(dl);
  return out;
}

double MatrixProductState::compress(const TruncationPolicy& policy) {
  validate(policy);
  canonicalize(0);
  double dropped = 0.0;
  for (int n = 0; n + 1 < length(); ++n) {
    const auto dl = sites_[n].left_dim();
    const auto dr = sites_[n].right_dim();
    auto svd = svd_thin(stack_rows(sites_[n]));
    auto dec = decide_truncation(svd.s, policy);
    const int k = dec.keep;
    dropped += dec.discarded_weight;
    Eigen::VectorXd s = svd.s.head(k);
    if (policy.renormalize_after_truncation && dec.discarded_weight > 0.0) {
      const double total = svd.s.squaredNorm();
      const double kept = total - dec.discarded_weight;
      if (kept > 0.0) s *= std::sqrt(total / kept);
    }
    sites_[n].m[0] = svd.U.leftCols(k).topRows(dl);
    sites_[n].m[1] = svd.U.leftCols(k).bottomRows(dl);
    Matrix mid = s.asDiagonal() * svd.Vh.topRows(k);
    for (int ss = 0; ss < 2; ++ss) {
      sites_[n + 1].m[ss] = (mid * sites_[n + 1].m[ss]).eval();
    }
    center_ = n + 1;
  }
  return dropped * std::exp(2.0 * log_norm_adjust_);
}

Vector MatrixProductState::to_dense(int site_limit) const {
  if (length() > site_limit) {
    throw std::runtime_error("to_dense: length " + std::to_string(length()) +
                             " exceeds the oracle limit " + std::to_string(site_limit));
  }
  std::vector<Eigen::RowVectorXcd> rows(1, Eigen::RowVectorXcd::Ones(1));
  for (const auto& t : sites_) {
    std::vector<Eigen::RowVectorXcd> next(rows.size() * 2);
    for (size_t b = 0; b < rows.size(); ++b) {
      next[b * 2] = rows[b] * t.m[0];
      next[b * 2 + 1] = rows[b] * t.m[1];
    }
    rows = std::move(next);
  }
  const double scale = std::exp(log_norm_adjust_);
  Vector out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = scale * rows[i](0);
  return out;
}

cplx MatrixProductState::site_expectation(int n, const Op1& op) {
  canonicalize(n);
  cplx val = 0.0;
  for (int sp = 0; sp < 2; ++sp) {
    for (int s = 0; s < 2; ++s) {
      if (op(sp, s) != cplx(0.0)) {
        val += op(sp, s) * (sites_[n].m[sp].adjoint() * sites_[n].m[s]).trace();
      }
    }
  }
  return val * std::exp(2.0 * log_norm_adjust_);
}

cplx MatrixProductState::bond_expectation(int n, const Op1& left, const Op1& right) {
  if (n < 0 || n + 1 >= length()) {
    throw std::out_of_range("bond_expectation: bond out of range");
  }
  if (center_ != n && center_ != n + 1) canonicalize(n);
  const int c = center_;
  // with the center inside the pair, environments on both sides are identity
  std::array<Matrix, 4> theta;
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      theta[s1 * 2 + s2] = sites_[n].m[s1] * sites_[n + 1].m[s2];
    }
  }
  (void)c;
  cplx val = 0.0;
  for (int a = 0; a < 4; ++a) {
    const int s1p = a >> 1, s2p = a & 1;
    for (int b = 0; b < 4; ++b) {
      const int s1 = b >> 1, s2 = b & 1;
      const cplx w = left(s1p, s1) * right(s2p, s2);
      if (w != cplx(0.0)) {
        val += w * (theta[a].adjoint() * theta[b]).trace();
      }
    }
  }
  return val * std::exp(2.0 * log_norm_adjust_);
}

void MatrixProductState::sweep_centers(
    const std::function<void(MatrixProductState&, int)>& fn) {
  canonicalize(0);
  fn(*this, 0);
  for (int n = 1; n < length(); ++n) {
    move_center_right();
    fn(*this, n);
  }
}

void MatrixProductState::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("save: cannot open " + path);
  }
  f.write(kSnapshotMagic, 8);
  auto w64 = [&](uint64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  auto wi64 = [&](int64_t v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  auto wf = [&](double v) { f.write(reinterpret_cast<const char*>(&v), 8); };
  w64(static_cast<uint64_t>(length()));
  wi64(center_);
  wf(log_norm_adjust_);
  for (const auto& t : sites_) {
    w64(static_cast<uint64_t>(t.left_dim()));
    w64(static_cast<uint64_t>(t.right_dim()));
    for (int s = 0; s < 2; ++s) {
      f.write(reinterpret_cast<const char*>(t.m[s].data()),
              static_cast<std::streamsize>(sizeof(cplx) * t.m[s].size()));
    }
  }
  if (!f) {
    throw std::runtime_error("save: write failed for " + path);
  }
}

MatrixProductState MatrixProductState::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("load: cannot open " + path);
  }
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kSnapshotMagic, 8) != 0) {
    throw std::runtime_error("load: " + path + " is not a state snapshot");
  }
  auto r64 = [&]() {
    uint64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto ri64 = [&]() {
    int64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto rf = [&]() {
    double v = 0;
    f.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const auto len = r64();
  const auto center = ri64();
  const auto logn = rf();
  if (len == 0 || len > (1u << 24)) {
    throw std::runtime_error("load: implausible length in " + path);
  }
  std::vector<SiteTensor> sites(len);
  for (auto& t : sites) {
    const auto dl = r64();
    const auto dr = r64();
    if (dl == 0 || dr == 0 || dl > (1u << 22) || dr > (1u << 22)) {
      throw std::runtime_error("load: implausible bond dimension in " + path);
    }
    for (int s = 0; s < 2; ++s) {
      t.m[s].resize(static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dr));
      f.read(reinterpret_cast<char*>(t.m[s].data()),
             static_cast<std::streamsize>(sizeof(cplx) * dl * dr));
    }
  }
  if (!f) {
    throw std::runtime_error("load: truncated snapshot " + path);
  }
  return MatrixProductState(std::move(sites), static_cast<int>(center), logn);
}

cplx inner_product(const MatrixProductState& a, const MatrixProductState& b) {
  if (a.length() != b.length()) {
    throw std::invalid_argument("inner_product: length mismatch");
  }
  Matrix e = Matrix::Identity(1, 1);
  for (int n = 0; n < a.length(); ++n) {
    const auto& ta = a.sites_[n];
    const auto& tb = b.sites_[n];
    e = (ta.m[0].adjoint() * e * tb.m[0] + ta.m[1].adjoint() * e * tb.m[1]).eval();
  }
  return e(0, 0) * std::exp(a.log_norm_adjust_ + b.log_norm_adjust_);
}

}  // namespace scatlab
