// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Core>

#include "dlsjm/data_model.hpp"

namespace dlsjm {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Person positions Z (n x D). Rows are points.
struct LatentConfiguration {
  RowMatrixXd z;
  int dim() const { return static_cast<int>(z.cols()); }
  int size() const { return static_cast<int>(z.rows()); }
};

// Item positions W (p x D), w_i = average of z_k over correct responders.
struct ItemPositions {
  RowMatrixXd w;
};

// One point in the posterior.
struct ModelState {
  Eigen::VectorXd beta;   // p item intercepts
  Eigen::VectorXd theta;  // n person intercepts
  double sigma_z_sq = 1.0;
  LatentConfiguration z;
};

struct PriorConfig {
  double sigma_beta_sq = 100.0;   // sigma_beta = 10
  double sigma_theta_sq = 100.0;  // sigma_theta = 10
  double a_sigma = 0.01;
  double b_sigma = 0.01;
  void validate() const;
};

struct InvGammaParams {
  double shape;
  double scale;
};

template <class A, class B>
double pair_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return std::sqrt((a.derived().array() - b.derived().array()).square().sum());
}

// Full symmetric matrix of pairwise Euclidean row distances.
Eigen::MatrixXd pairwise_distances(const RowMatrixXd& pts);

// w_i = sum_k x_ki z_k / c_i. Throws DegenerateItemError when some c_i = 0.
ItemPositions item_positions(const LatentConfiguration& z, const ItemResponseMatrix& x);

// Eq.-(8)-style joint log-likelihood over both network stacks; each unordered
// pair enters once (the ordered-product convention would double every term).
// Person side: logit beta_i - ||z_k - z_l||; item side: theta_k - ||w_i - w_j||.
double joint_log_likelihood(const ModelState& state, const ItemResponseMatrix& x);

// Log prior density of the state (normal intercepts, normal positions given
// sigma_z^2, inverse-gamma sigma_z^2), normalization constants included.
double log_prior(const ModelState& state, const PriorConfig& prior);

double joint_log_posterior(const ModelState& state, const ItemResponseMatrix& x,
                           const PriorConfig& prior);

// Unnormalized conditional log-posteriors: prior log-density plus exactly the
// likelihood terms the parameter touches.
double logpost_beta(int i, double beta_i, const ModelState& state, const ItemResponseMatrix& x,
                    const PriorConfig& prior);
double logpost_theta(int k, double theta_k, const ModelState& state, const ItemResponseMatrix& x,
                     const PriorConfig& prior);
// For z_k: person-side pairs touching k plus every item-side pair (i,j) whose
// f_i or f_j depends on z_k (x_ki = 1 or x_kj = 1), for all person layers.
double logpost_z(int k, const Eigen::RowVectorXd& z_k, const ModelState& state,
                 const ItemResponseMatrix& x, const PriorConfig& prior);

// Conjugate inverse-gamma conditional for sigma_z^2:
// shape = a + nD/2, scale = b + 0.5 * sum_k ||z_k||^2.
InvGammaParams sigma_z_posterior_params(const LatentConfiguration& z, const PriorConfig& prior);

void validate_state(const ModelState& state, const ItemResponseMatrix& x);

}  // namespace dlsjm
