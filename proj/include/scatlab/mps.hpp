#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "scatlab/svd.hpp"

namespace scatlab {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Gate2 = Eigen::Matrix4cd;                       // two-site gate, index s1*2+s2
using Gate3 = Eigen::Matrix<cplx, 8, 8>;              // three-site gate, index s1*4+s2*2+s3
using Op1 = Eigen::Matrix2cd;

// Rank-3 site tensor (left bond x physical x right bond), stored as one
// left x right matrix per physical index. Physical dimension is 2 throughout.
struct SiteTensor {
  std::array<Matrix, 2> m;

  Eigen::Index left_dim() const { return m[0].rows(); }
  Eigen::Index right_dim() const { return m[0].cols(); }
};

struct SchmidtSpectrum {
  int cut_site = 0;                // bipartition between cut_site and cut_site+1
  std::vector<double> values;      // squared Schmidt coefficients, descending
  int chi = 0;                     // retained count, values.size()

  double sum() const;
};

struct GateResult {
  double discarded_weight = 0.0;   // absolute sum of dropped squared Schmidt values
  bool nonunitary = false;
};

// Open-boundary tensor train with canonical-center tracking.
//
// Conventions (shared by every oracle in the repo):
//  - site 0 is the leftmost site and the most significant bit of dense indices;
//  - physical basis: |0> = spin up (Z=+1), |1> = spin down;
//  - boundary bonds have dimension 1;
//  - the represented vector is exp(log_norm_adjust) * (contraction of tensors).
class MatrixProductState {
 public:
  MatrixProductState() = default;
  MatrixProductState(std::vector<SiteTensor> sites, int center, double log_norm_adjust);

  static MatrixProductState basis_state(int length, const std::vector<int>& bits);
  static MatrixProductState all_up(int length);
  static MatrixProductState random_state(int length, int max_bond, std::mt19937_64& rng);

  int length() const { return static_cast<int>(sites_.size()); }
  int canonical_center() const { return center_; }   // -1 = none
  double log_norm_adjust() const { return log_norm_adjust_; }
  const SiteTensor& site(int n) const { return sites_[n]; }

  // Raw access for sweep algorithms that maintain the canonical structure
  // themselves; set_center records what the caller established.
  SiteTensor& site_mut(int n) { return sites_[n]; }
  void set_center(int center) { center_ = center; }
  int bond_dim(int bond) const;                      // bond between sites bond, bond+1
  int max_bond_dim() const;

  void canonicalize(int center);
  void move_center_right();
  void move_center_left();

  // Pulls the center-tensor scale into log_norm_adjust (center must be set).
  void normalize_center();
  // Rescales to unit norm and clears the log accumulator.
  void normalize_to_unit();

  double norm_sq() const;

  GateResult apply_two_site_gate(int bond, const Gate2& gate, const TruncationPolicy& policy,
                                 bool absorb_right = true);
  GateResult apply_three_site_gate(int first_site, const Gate3& gate,
                                   const TruncationPolicy& policy);
  void apply_one_site_gate(int n, const Op1& gate);

  SchmidtSpectrum schmidt_spectrum(int cut_site);
  MatrixProductState project_schmidt_component(int cut_site, const std::vector<int>& keep) const;

  // One full SVD compression sweep under the policy; returns total dropped weight.
  double compress(const TruncationPolicy& policy);

  Vector to_dense(int site_limit = 14) const;

  // Expectation values; the state is canonicalized internally as needed.
  cplx site_expectation(int n, const Op1& op);
  cplx bond_expectation(int n, const Op1& left, const Op1& right);

  // Sweeps the center 0..L-1 invoking fn at every position; cheaper than
  // repeated canonicalize calls when measuring many local operators.
  void sweep_centers(const std::function<void(MatrixProductState&, int)>& fn);

  void save(const std::string& path) const;
  static MatrixProductState load(const std::string& path);

  void check_structure() const;  // throws on malformed bond dimensions

 private:
  std::vector<SiteTensor> sites_;
  int center_ = -1;
  double log_norm_adjust_ = 0.0;

  friend cplx inner_product(const MatrixProductState& a, const MatrixProductState& b);
};

cplx inner_product(const MatrixProductState& a, const MatrixProductState& b);

}  // namespace scatlab
