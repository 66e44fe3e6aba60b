// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "dlsjm/data_model.hpp"
#include "dlsjm/likelihood.hpp"

namespace dlsjm {

// Incrementally maintained joint log-likelihood for the MH sweep.
//
// Cached per unordered pair: person-side contribution
//   P_kl = sum_i [ y_{i,kl} (beta_i - d_kl) - softplus(beta_i - d_kl) ]
// and item-side contribution
//   Q_ij = sum_k [ u_{k,ij} (theta_k - dw_ij) - softplus(theta_k - dw_ij) ].
// Moving z_k touches n-1 person pairs and only the item pairs whose f_i or
// f_j averages over z_k; moving beta_i / theta_k touches every pair of its
// side but with a closed-form edge part (layers are cliques).
//
// Parallel reductions partition over pairs, and each pair's inner sum is
// computed whole by one worker, so results are identical for any worker
// count. Upper triangles (first index < second) are the canonical storage.
class JointEvaluator {
 public:
  JointEvaluator(const ItemResponseMatrix& x, const ModelState& init, int workers = 1);

  const Eigen::VectorXd& beta() const { return beta_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const RowMatrixXd& latent() const { return Z_; }
  const RowMatrixXd& item_pos() const { return W_; }
  const Eigen::MatrixXd& person_distances() const { return Dz_; }
  const Eigen::MatrixXd& item_distances() const { return Dw_; }
  double sigma_z_sq() const { return sigma_z_sq_; }
  void set_sigma_z_sq(double v) { sigma_z_sq_ = v; }

  ModelState state() const;

  // Ordered reduction over the cached pair contributions.
  double log_likelihood() const;
  double log_posterior(const PriorConfig& prior) const;

  // Likelihood delta of moving z_k to znew (prior term not included).
  // accept_z applies the scratch produced by the immediately preceding call.
  double z_move_delta(int k, const Eigen::RowVectorXd& znew);
  void accept_z();

  // Call once after the z sweep, before the beta updates (packs current d_kl).
  void begin_beta_phase();
  double beta_move_delta(int i, double bnew);
  void accept_beta();

  void begin_theta_phase();
  double theta_move_delta(int k, double tnew);
  void accept_theta();

  // Full recompute of every cache from (X, beta, theta, Z); also used by
  // tests to cross-check the incremental path.
  void rebuild();

 private:
  double pairP(int a, int b) const { return a < b ? P_(a, b) : P_(b, a); }
  double pairQ(int a, int b) const { return a < b ? Q_(a, b) : Q_(b, a); }

  const ItemResponseMatrix* x_;
  int n_, p_, D_, workers_;

  Eigen::VectorXd beta_, theta_;
  double sigma_z_sq_;
  RowMatrixXd Z_, W_;
  Eigen::MatrixXd Dz_, Dw_;   // full symmetric
  Eigen::MatrixXd P_, Q_;     // upper triangle valid
  Eigen::MatrixXd bP_, tI_;   // upper triangle valid
  Eigen::MatrixXi mP_, mI_;   // upper triangle valid
  Eigen::VectorXd inv_c_;

  // packed upper-triangle person-pair indices (k outer, l inner)
  std::vector<int> pk_, pl_;
  Eigen::ArrayXd packed_dz_, packed_dw_;

  // z-move scratch
  int zk_ = -1;
  Eigen::RowVectorXd znew_;
  Eigen::VectorXd dnew_, newP_;
  RowMatrixXd wnew_;
  std::vector<std::pair<int, int>> zpairs_;
  Eigen::ArrayXd dwnew_, newQ_;
  std::vector<char> in_items_;

  // beta/theta-move scratch
  int bi_ = -1;
  double bnew_ = 0.0;
  Eigen::ArrayXd spdelta_;
  int tk_ = -1;
  double tnew_ = 0.0;
  Eigen::ArrayXd spdelta_theta_;
};

}  // namespace dlsjm
