// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "dlsjm/errors.hpp"

namespace dlsjm {

void SamplerConfig::validate() const {
  if (n_iterations < 1 || burn_in < 0 || burn_in >= n_iterations)
    throw ValidationError("need 0 <= burn_in < n_iterations");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  if (!(jump_beta > 0.0) || !(jump_theta > 0.0))
    throw ValidationError("jump SDs must be positive");
  if (jump_z_buckets.empty()) throw ValidationError("need at least one z jump bucket");
  for (double s : jump_z_buckets)
    if (!(s > 0.0)) throw ValidationError("jump SDs must be positive");
  if (!(0.0 < target_accept_lo && target_accept_lo < target_accept_hi && target_accept_hi < 1.0))
    throw ValidationError("need 0 < target_accept_lo < target_accept_hi < 1");
  if (adapt_window < 1) throw ValidationError("adapt_window must be >= 1");
  if (!(adapt_grow > 1.0) || !(adapt_shrink > 0.0) || !(adapt_shrink < 1.0))
    throw ValidationError("adapt factors must satisfy grow > 1, 0 < shrink < 1");
  if (latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
  if (workers < 1) throw ValidationError("workers must be >= 1");
}

ModelState initialize_state(const ItemResponseMatrix& x, const PriorConfig& prior,
                            std::uint64_t seed, int latent_dim) {
  prior.validate();
  const int n = x.n_persons();
  const int p = x.n_items();
  Rng rng(Rng::derive(seed, 0x494e4954));  // distinct stream from the chain
  RowMatrixXd z(n, latent_dim);
  for (int k = 0; k < n; ++k)
    for (int d = 0; d < latent_dim; ++d) z(k, d) = rng.normal(0.0, 0.5);
  return ModelState{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(n), 1.0,
                    LatentConfiguration{std::move(z)}};
}

std::vector<int> degree_buckets(const ItemResponseMatrix& x, int n_buckets) {
  const int n = x.n_persons();
  std::vector<int> sorted = x.person_totals();
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> thr;
  for (int m = 1; m < n_buckets; ++m) thr.push_back(sorted[static_cast<std::size_t>(m) * n / n_buckets]);
  std::vector<int> bucket(n, 0);
  for (int k = 0; k < n; ++k) {
    int b = 0;
    for (int t : thr)
      if (x.person_totals()[k] >= t) ++b;
    bucket[k] = b;
  }
  return bucket;
}

namespace {

// Shared MH sweep body. Ledger may be null (free-function sweep).
void sweep_body(JointEvaluator& ev, const ItemResponseMatrix& x, const PriorConfig& prior,
                const JumpState& jumps, const std::vector<int>& bucket_of, Rng& rng,
                AcceptanceLedger* ledger) {
  const int n = x.n_persons();
  const int p = x.n_items();
  const int D = static_cast<int>(ev.latent().cols());

  // (1) latent positions, random order
  const std::vector<int> order = rng.permutation(n);
  for (int k : order) {
    const double sd = jumps.z_sd[bucket_of[k]];
    Eigen::RowVectorXd znew(D);
    for (int d = 0; d < D; ++d) znew(d) = ev.latent()(k, d) + sd * rng.normal();
    const double dlik = ev.z_move_delta(k, znew);
    const double dprior =
        -(znew.squaredNorm() - ev.latent().row(k).squaredNorm()) / (2.0 * ev.sigma_z_sq());
    const double logr = dlik + dprior;
    const double u = rng.uniform();
    const bool acc = std::isfinite(logr) && (u <= 0.0 || std::log(u) < logr);
    if (acc) ev.accept_z();
    if (ledger) ledger->z_buckets[bucket_of[k]].hit(acc);
  }

  // (2) sigma_z^2, exact conjugate draw
  const InvGammaParams ig =
      sigma_z_posterior_params(LatentConfiguration{ev.latent()}, prior);
  ev.set_sigma_z_sq(rng.inverse_gamma(ig.shape, ig.scale));

  // (3) item intercepts
  ev.begin_beta_phase();
  for (int i = 0; i < p; ++i) {
    const double bold = ev.beta()(i);
    const double bnew = bold + jumps.beta_sd * rng.normal();
    const double dlik = ev.beta_move_delta(i, bnew);
    const double dprior = -(bnew * bnew - bold * bold) / (2.0 * prior.sigma_beta_sq);
    const double logr = dlik + dprior;
    const double u = rng.uniform();
    const bool acc = std::isfinite(logr) && (u <= 0.0 || std::log(u) < logr);
    if (acc) ev.accept_beta();
    if (ledger) ledger->beta.hit(acc);
  }

  // (4) person intercepts
  ev.begin_theta_phase();
  for (int k = 0; k < n; ++k) {
    const double told = ev.theta()(k);
    const double tnew = told + jumps.theta_sd * rng.normal();
    const double dlik = ev.theta_move_delta(k, tnew);
    const double dprior = -(tnew * tnew - told * told) / (2.0 * prior.sigma_theta_sq);
    const double logr = dlik + dprior;
    const double u = rng.uniform();
    const bool acc = std::isfinite(logr) && (u <= 0.0 || std::log(u) < logr);
    if (acc) ev.accept_theta();
    if (ledger) ledger->theta.hit(acc);
  }
}

}  // namespace

ModelState sweep(const ModelState& state, const ItemResponseMatrix& x, const PriorConfig& prior,
                 const SamplerConfig& config, Rng& rng) {
  config.validate();
  prior.validate();
  JointEvaluator ev(x, state, config.workers);
  JumpState jumps{config.jump_beta, config.jump_theta, config.jump_z_buckets};
  const std::vector<int> buckets =
      degree_buckets(x, static_cast<int>(config.jump_z_buckets.size()));
  sweep_body(ev, x, prior, jumps, buckets, rng, nullptr);
  return ev.state();
}

void adapt_proposals(AcceptanceLedger& ledger, const SamplerConfig& config, JumpState& jumps) {
  auto tune = [&](BlockCounts& c, double& sd) {
    if (c.win_proposals > 0) {
      const double rate = c.win_rate();
      if (rate > config.target_accept_hi)
        sd *= config.adapt_grow;
      else if (rate < config.target_accept_lo)
        sd *= config.adapt_shrink;
    }
    c.reset_window();
  };
  for (std::size_t b = 0; b < ledger.z_buckets.size(); ++b) tune(ledger.z_buckets[b], jumps.z_sd[b]);
  tune(ledger.beta, jumps.beta_sd);
  tune(ledger.theta, jumps.theta_sd);
}

ChainEngine::ChainEngine(const ItemResponseMatrix& x, const PriorConfig& prior,
                         const SamplerConfig& config)
    : x_(&x),
      prior_(prior),
      cfg_(config),
      ev_(x, initialize_state(x, prior, config.seed, config.latent_dim), config.workers),
      rng_(Rng::derive(config.seed, 0x434841494e)),
      jumps_{config.jump_beta, config.jump_theta, config.jump_z_buckets},
      bucket_of_(degree_buckets(x, static_cast<int>(config.jump_z_buckets.size()))) {
  cfg_.validate();
  prior_.validate();
  ledger_.z_buckets.resize(cfg_.jump_z_buckets.size());
}

void ChainEngine::sweep_once() {
  sweep_body(ev_, *x_, prior_, jumps_, bucket_of_, rng_, &ledger_);
  ++iter_;
  if (iter_ % cfg_.adapt_window == 0) maybe_window(iter_ <= cfg_.burn_in);
}

void ChainEngine::maybe_window(bool adapting) {
  auto record = [&](const BlockCounts& c, const std::string& name, double sd) {
    ledger_.history.push_back({iter_, name, c.win_proposals, c.win_accepts,
                               c.win_rate(), sd, iter_ <= cfg_.burn_in});
  };
  for (std::size_t b = 0; b < ledger_.z_buckets.size(); ++b)
    record(ledger_.z_buckets[b], "z_bucket" + std::to_string(b), jumps_.z_sd[b]);
  record(ledger_.beta, "beta", jumps_.beta_sd);
  record(ledger_.theta, "theta", jumps_.theta_sd);

  if (adapting) {
    adapt_proposals(ledger_, cfg_, jumps_);
  } else {
    for (auto& c : ledger_.z_buckets) c.reset_window();
    ledger_.beta.reset_window();
    ledger_.theta.reset_window();
  }
}

ChainOutput ChainEngine::run() {
  ChainOutput out;
  out.n = x_->n_persons();
  out.p = x_->n_items();
  out.D = cfg_.latent_dim;
  out.config = cfg_;
  out.prior = prior_;
  const long expected = (cfg_.n_iterations - cfg_.burn_in) / cfg_.thin;
  out.beta_samples.reserve(expected);
  out.theta_samples.reserve(expected);
  out.sigma_samples.reserve(expected);
  out.z_samples.reserve(expected);
  out.log_posterior.reserve(expected);

  for (long t = 1; t <= cfg_.n_iterations; ++t) {
    sweep_once();
    if (t > cfg_.burn_in && (t - cfg_.burn_in) % cfg_.thin == 0) {
      out.beta_samples.push_back(ev_.beta());
      out.theta_samples.push_back(ev_.theta());
      out.sigma_samples.push_back(ev_.sigma_z_sq());
      out.z_samples.push_back(ev_.latent());
      out.log_posterior.push_back(ev_.log_posterior(prior_));
      out.sample_iteration.push_back(t);
    }
    if (cfg_.verbose && t % 1000 == 0)
      std::cerr << "iteration " << t << "/" << cfg_.n_iterations
                << "  logpost " << ev_.log_posterior(prior_) << "\n";
  }
  out.ledger = ledger_;
  out.final_jumps = jumps_;
  return out;
}

ChainOutput run_chain(const ItemResponseMatrix& x, const PriorConfig& prior,
                      const SamplerConfig& config) {
  config.validate();
  prior.validate();
  x.require_no_degenerate_items();
  ChainEngine engine(x, prior, config);
  return engine.run();
}

ModelState ChainOutput::sample_state(int s) const {
  return ModelState{beta_samples[s], theta_samples[s], sigma_samples[s],
                    LatentConfiguration{z_samples[s]}};
}

}  // namespace dlsjm
