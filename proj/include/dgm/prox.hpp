#pragma once

// Proximal kernels: soft thresholding, weighted singular value thresholding
// and the exponential singular-value weights that drive it.

#include <Eigen/Dense>

namespace dgm {

// Thin SVD  M = left * diag(singulars) * right^T,  singulars nonincreasing.
struct SvdFactors {
  Eigen::MatrixXd left;       // n x r
  Eigen::VectorXd singulars;  // r
  Eigen::MatrixXd right;      // m x r

  Eigen::MatrixXd reconstruct() const;
};

SvdFactors thin_svd(const Eigen::MatrixXd& M);

struct WeightVector {
  Eigen::VectorXd w;
  double sigma_scale = 0.0;  // +inf for the all-ones start

  static WeightVector uniform(Eigen::Index r);
  Eigen::Index size() const { return w.size(); }
};

double shrink(double a, double mu);
Eigen::MatrixXd shrink(const Eigen::MatrixXd& A, double mu);

// w_i = exp(-s_i^2 / sigma_scale^2)
WeightVector compute_weights(const Eigen::VectorXd& singulars, double sigma_scale);

struct SvtResult {
  Eigen::MatrixXd value;
  SvdFactors factors;  // of the input
};

// left * diag(shrink(s_i, w_i * tau)) * right^T, w_1 paired with the largest
// singular value. This is the exact prox of tau * sum_i w_i s_i(X) only when
// w is nondecreasing.
SvtResult weighted_svt(const Eigen::MatrixXd& M, const WeightVector& weights, double tau);

double weighted_nuclear_norm(const Eigen::MatrixXd& M, const WeightVector& weights);
double weighted_nuclear_norm(const Eigen::VectorXd& singulars, const WeightVector& weights);

}  // namespace dgm
