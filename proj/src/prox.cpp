#include "dgm/prox.hpp"

#include "dgm/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace dgm {

Eigen::MatrixXd SvdFactors::reconstruct() const {
  return left * singulars.asDiagonal() * right.transpose();
}

SvdFactors thin_svd(const Eigen::MatrixXd& M) {
  if (!M.allFinite()) fail(ErrorCode::Numeric, "SVD input contains non-finite entries");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorCode::Numeric, "SVD did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

WeightVector WeightVector::uniform(Eigen::Index r) {
  return {Eigen::VectorXd::Ones(r), std::numeric_limits<double>::infinity()};
}

double shrink(double a, double mu) {
  const double mag = std::abs(a) - mu;
  return mag > 0.0 ? std::copysign(mag, a) : 0.0;
}

Eigen::MatrixXd shrink(const Eigen::MatrixXd& A, double mu) {
  require(mu >= 0.0, "shrinkage threshold must be nonnegative");
  return A.unaryExpr([mu](double a) { return shrink(a, mu); });
}

WeightVector compute_weights(const Eigen::VectorXd& singulars, double sigma_scale) {
  require(sigma_scale > 0.0, "sigma scale must be positive");
  require((singulars.array() >= 0.0).all(), "singular values must be nonnegative");
  const double inv = 1.0 / (sigma_scale * sigma_scale);
  return {(-singulars.array().square() * inv).exp().matrix(), sigma_scale};
}

SvtResult weighted_svt(const Eigen::MatrixXd& M, const WeightVector& weights, double tau) {
  require(tau >= 0.0, "SVT threshold must be nonnegative");
  SvtResult out{Eigen::MatrixXd(), thin_svd(M)};
  const Eigen::VectorXd& s = out.factors.singulars;
  require(weights.size() >= s.size(), "weight vector shorter than the number of singular values");

  Eigen::VectorXd shrunk(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) shrunk(i) = shrink(s(i), weights.w(i) * tau);
  out.value = out.factors.left * shrunk.asDiagonal() * out.factors.right.transpose();
  return out;
}

double weighted_nuclear_norm(const Eigen::VectorXd& singulars, const WeightVector& weights) {
  require(weights.size() >= singulars.size(), "weight vector shorter than the number of singular values");
  return weights.w.head(singulars.size()).dot(singulars);
}

double weighted_nuclear_norm(const Eigen::MatrixXd& M, const WeightVector& weights) {
  if (M.size() == 0) return 0.0;
  return weighted_nuclear_norm(thin_svd(M).singulars, weights);
}

}  // namespace dgm
