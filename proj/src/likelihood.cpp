// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/likelihood.hpp"

#include <cmath>
#include <numbers>

#include "dlsjm/errors.hpp"
#include "dlsjm/numeric.hpp"

namespace dlsjm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

double normal_logpdf(double v, double var) {
  return -0.5 * (kLog2Pi + std::log(var)) - v * v / (2.0 * var);
}
}  // namespace

void PriorConfig::validate() const {
  if (!(sigma_beta_sq > 0.0) || !(sigma_theta_sq > 0.0) || !(a_sigma > 0.0) || !(b_sigma > 0.0))
    throw ValidationError("prior hyperparameters must be strictly positive");
}

Eigen::MatrixXd pairwise_distances(const RowMatrixXd& pts) {
  const int m = static_cast<int>(pts.rows());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const double v = (pts.row(a) - pts.row(b)).norm();
      d(a, b) = v;
      d(b, a) = v;
    }
  return d;
}

ItemPositions item_positions(const LatentConfiguration& z, const ItemResponseMatrix& x) {
  if (z.size() != x.n_persons()) throw ValidationError("latent configuration size mismatch");
  x.require_no_degenerate_items();
  const int p = x.n_items();
  RowMatrixXd w = RowMatrixXd::Zero(p, z.dim());
  for (int i = 0; i < p; ++i) {
    for (int k : x.persons_of_item(i)) w.row(i) += z.z.row(k);
    w.row(i) /= static_cast<double>(x.item_totals()[i]);
  }
  return ItemPositions{std::move(w)};
}

void validate_state(const ModelState& state, const ItemResponseMatrix& x) {
  if (state.beta.size() != x.n_items()) throw ValidationError("beta length != item count");
  if (state.theta.size() != x.n_persons()) throw ValidationError("theta length != person count");
  if (state.z.size() != x.n_persons()) throw ValidationError("Z rows != person count");
  if (state.z.dim() < 1) throw ValidationError("latent dimension must be >= 1");
  if (!(state.sigma_z_sq > 0.0)) throw ValidationError("sigma_z^2 must be positive");
  if (!state.beta.allFinite() || !state.theta.allFinite() || !state.z.z.allFinite())
    throw ValidationError("model state contains non-finite entries");
}

double joint_log_likelihood(const ModelState& state, const ItemResponseMatrix& x) {
  validate_state(state, x);
  const int n = x.n_persons();
  const int p = x.n_items();
  const Eigen::ArrayXd beta = state.beta.array();
  const Eigen::ArrayXd theta = state.theta.array();

  double ll = 0.0;
  // Person side: for each unordered person pair, all p item layers share d_kl.
  for (int k = 0; k < n; ++k) {
    for (int l = k + 1; l < n; ++l) {
      const double d = (state.z.z.row(k) - state.z.z.row(l)).norm();
      double ydot = 0.0;
      for (int i : x.items_of_person(k))
        if (x(l, i)) ydot += beta(i) - d;
      ll += ydot - softplus_sum(beta - d);
    }
  }
  // Item side: for each unordered item pair, all n person layers share dw_ij.
  const ItemPositions w = item_positions(state.z, x);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      const double d = (w.w.row(i) - w.w.row(j)).norm();
      double udot = 0.0;
      for (int k : x.persons_of_item(i))
        if (x(k, j)) udot += theta(k) - d;
      ll += udot - softplus_sum(theta - d);
    }
  }
  if (!std::isfinite(ll)) throw NumericalError("joint log-likelihood is not finite");
  return ll;
}

double log_prior(const ModelState& state, const PriorConfig& prior) {
  prior.validate();
  double lp = 0.0;
  for (int i = 0; i < state.beta.size(); ++i) lp += normal_logpdf(state.beta(i), prior.sigma_beta_sq);
  for (int k = 0; k < state.theta.size(); ++k) lp += normal_logpdf(state.theta(k), prior.sigma_theta_sq);
  const int n = state.z.size();
  const int D = state.z.dim();
  lp += -0.5 * n * D * (kLog2Pi + std::log(state.sigma_z_sq)) -
        state.z.z.squaredNorm() / (2.0 * state.sigma_z_sq);
  // Inverse-gamma(a, b) density for sigma_z^2.
  lp += prior.a_sigma * std::log(prior.b_sigma) - std::lgamma(prior.a_sigma) -
        (prior.a_sigma + 1.0) * std::log(state.sigma_z_sq) - prior.b_sigma / state.sigma_z_sq;
  return lp;
}

double joint_log_posterior(const ModelState& state, const ItemResponseMatrix& x,
                           const PriorConfig& prior) {
  return joint_log_likelihood(state, x) + log_prior(state, prior);
}

double logpost_beta(int i, double beta_i, const ModelState& state, const ItemResponseMatrix& x,
                    const PriorConfig& prior) {
  validate_state(state, x);
  const int n = x.n_persons();
  double out = normal_logpdf(beta_i, prior.sigma_beta_sq);
  // y part over the clique of correct responders; softplus over every pair.
  const auto& correct = x.persons_of_item(i);
  for (std::size_t a = 0; a < correct.size(); ++a)
    for (std::size_t b = a + 1; b < correct.size(); ++b)
      out += beta_i - (state.z.z.row(correct[a]) - state.z.z.row(correct[b])).norm();
  Eigen::ArrayXd eta(static_cast<long>(n) * (n - 1) / 2);
  long idx = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l)
      eta(idx++) = beta_i - (state.z.z.row(k) - state.z.z.row(l)).norm();
  out -= softplus_sum(eta);
  if (!std::isfinite(out)) throw NumericalError("logpost_beta not finite");
  return out;
}

double logpost_theta(int k, double theta_k, const ModelState& state, const ItemResponseMatrix& x,
                     const PriorConfig& prior) {
  validate_state(state, x);
  const int p = x.n_items();
  const ItemPositions w = item_positions(state.z, x);
  double out = normal_logpdf(theta_k, prior.sigma_theta_sq);
  Eigen::ArrayXd xi(static_cast<long>(p) * (p - 1) / 2);
  long idx = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      const double d = (w.w.row(i) - w.w.row(j)).norm();
      if (x(k, i) && x(k, j)) out += theta_k - d;
      xi(idx++) = theta_k - d;
    }
  out -= softplus_sum(xi);
  if (!std::isfinite(out)) throw NumericalError("logpost_theta not finite");
  return out;
}

double logpost_z(int k, const Eigen::RowVectorXd& z_k, const ModelState& state,
                 const ItemResponseMatrix& x, const PriorConfig& prior) {
  (void)prior;  // the z_k prior is N(0, sigma_z^2 I); sigma_z^2 lives in the state
  validate_state(state, x);
  if (z_k.size() != state.z.dim()) throw ValidationError("z_k dimension mismatch");
  const int n = x.n_persons();
  const int p = x.n_items();
  const Eigen::ArrayXd beta = state.beta.array();
  const Eigen::ArrayXd theta = state.theta.array();

  ModelState moved = state;
  moved.z.z.row(k) = z_k;

  double out = -0.5 * state.z.dim() * (kLog2Pi + std::log(state.sigma_z_sq)) -
               z_k.squaredNorm() / (2.0 * state.sigma_z_sq);
  // Person-side pairs touching k.
  for (int l = 0; l < n; ++l) {
    if (l == k) continue;
    const double d = (moved.z.z.row(k) - moved.z.z.row(l)).norm();
    for (int i : x.items_of_person(k))
      if (x(l, i)) out += beta(i) - d;
    out -= softplus_sum(beta - d);
  }
  // Item-side pairs whose f_i or f_j depends on z_k, over all person layers.
  const ItemPositions w = item_positions(moved.z, x);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p; ++j) {
      if (!x(k, i) && !x(k, j)) continue;
      const double d = (w.w.row(i) - w.w.row(j)).norm();
      for (int kk : x.persons_of_item(i))
        if (x(kk, j)) out += theta(kk) - d;
      out -= softplus_sum(theta - d);
    }
  }
  if (!std::isfinite(out)) throw NumericalError("logpost_z not finite");
  return out;
}

InvGammaParams sigma_z_posterior_params(const LatentConfiguration& z, const PriorConfig& prior) {
  prior.validate();
  if (!z.z.allFinite()) throw ValidationError("latent configuration has non-finite entries");
  return InvGammaParams{prior.a_sigma + 0.5 * z.size() * z.dim(),
                        prior.b_sigma + 0.5 * z.z.squaredNorm()};
}

}  // namespace dlsjm
