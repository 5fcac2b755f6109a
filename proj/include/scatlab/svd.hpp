#pragma once

#include <Eigen/Dense>
#include <vector>

namespace scatlab {

using Matrix = Eigen::MatrixXcd;

// Thin SVD, M = U * diag(s) * Vh, singular values descending.
struct SvdResult {
  Matrix U;
  Eigen::VectorXd s;
  Matrix Vh;
};

SvdResult svd_thin(const Matrix& m);

struct TruncationPolicy {
  int max_bond = 1 << 28;
  double cutoff = 1e-9;  // relative discarded squared-weight threshold
  bool renormalize_after_truncation = false;
};

void validate(const TruncationPolicy& p);

// How many singular values survive the policy, and the dropped squared weight
// (in units of the squared singular values passed in).
struct TruncationDecision {
  int keep = 0;
  double discarded_weight = 0.0;
};

TruncationDecision decide_truncation(const Eigen::VectorXd& s, const TruncationPolicy& p);

}  // namespace scatlab
