// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dlsjm/clustering.hpp"
#include "dlsjm/data_model.hpp"

namespace dlsjm {

struct MixtureRaschConfig {
  int quad_points = 21;    // Gauss-Hermite nodes
  int max_iter = 2000;
  double rel_tol = 1e-6;   // relative log-likelihood change
  int n_starts = 10;
  int max_restarts = 20;   // degenerate-class retries across all starts
  std::uint64_t seed = 1;
  void validate() const;
};

// Finite-mixture Rasch model fitted by marginal maximum likelihood EM.
// The marginal likelihood is the Gauss-Hermite sum itself: fixed standardized
// nodes t_q with fixed weights w_q/sqrt(pi); class ability enters through
// theta_gq = mu_g + sqrt(2) sigma_g t_q. The latent variable (class, node)
// then has parameter-free prior weights, so EM ascent is exact for the
// fitted objective and monotonicity can be asserted hard.
struct MixtureRaschModel {
  int n_classes = 0;
  Eigen::VectorXd weights;       // pi_g, simplex
  Eigen::MatrixXd beta;          // G x p item easiness, rows centered
  Eigen::VectorXd mu, sigma;     // class ability distributions
  Eigen::VectorXd nodes;         // standardized GH nodes t_q
  Eigen::VectorXd node_weights;  // w_q / sqrt(pi)
  double log_lik = 0.0;
  std::vector<double> loglik_trace;  // winning start
  int restarts_used = 0;

  void save_json(const std::filesystem::path& path) const;
};

// Physicists' Gauss-Hermite rule (weight e^{-t^2}) via Golub-Welsch.
void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

MixtureRaschModel em_fit(const ItemResponseMatrix& x, int n_classes,
                         const MixtureRaschConfig& config);

double observed_log_lik(const MixtureRaschModel& model, const ItemResponseMatrix& x);

// n x G posterior class membership probabilities.
Eigen::MatrixXd class_posteriors(const MixtureRaschModel& model, const ItemResponseMatrix& x);

// Maximal a posteriori class per respondent; ties to the lowest index.
ClusterAssignment classify_map(const MixtureRaschModel& model, const ItemResponseMatrix& x);

// Marginal probability of one full response pattern (for normalization checks).
double pattern_probability(const MixtureRaschModel& model, const std::vector<std::uint8_t>& pattern);

}  // namespace dlsjm
