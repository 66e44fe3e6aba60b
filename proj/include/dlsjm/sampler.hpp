// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dlsjm/joint_evaluator.hpp"
#include "dlsjm/likelihood.hpp"
#include "dlsjm/rng.hpp"

namespace dlsjm {

struct SamplerConfig {
  long n_iterations = 55000;
  long burn_in = 5000;
  int thin = 10;
  double jump_beta = 0.1;   // proposal SD for the beta random walk
  double jump_theta = 3.0;  // proposal SD for the theta random walk
  // Initial z proposal SDs per total-score bucket, lowest to highest score
  // quartile: lightly connected nodes get the large jumps.
  std::vector<double> jump_z_buckets{1.6, 0.8, 0.4, 0.2};
  double target_accept_lo = 0.20;
  double target_accept_hi = 0.40;
  int adapt_window = 500;
  double adapt_grow = 1.25;    // applied when windowed rate > hi
  double adapt_shrink = 0.8;   // applied when windowed rate < lo
  int latent_dim = 2;
  int workers = 1;
  std::uint64_t seed = 1;
  bool verbose = false;

  void validate() const;
};

struct BlockCounts {
  long proposals = 0, accepts = 0;
  long win_proposals = 0, win_accepts = 0;
  double rate() const { return proposals ? double(accepts) / double(proposals) : 0.0; }
  double win_rate() const { return win_proposals ? double(accepts_win()) / double(win_proposals) : 0.0; }
  long accepts_win() const { return win_accepts; }
  void hit(bool accepted) {
    ++proposals;
    ++win_proposals;
    if (accepted) {
      ++accepts;
      ++win_accepts;
    }
  }
  void reset_window() { win_proposals = win_accepts = 0; }
};

struct AcceptanceLedger {
  std::vector<BlockCounts> z_buckets;
  BlockCounts beta, theta;

  struct WindowRecord {
    long window_end = 0;
    std::string block;
    long proposals = 0, accepts = 0;
    double rate = 0.0;
    double jump_sd = 0.0;
    bool burnin = false;
  };
  std::vector<WindowRecord> history;
};

// Current random-walk scales; frozen after burn-in.
struct JumpState {
  double beta_sd = 0.1;
  double theta_sd = 3.0;
  std::vector<double> z_sd;
};

struct ChainOutput {
  int n = 0, p = 0, D = 0;
  std::vector<Eigen::VectorXd> beta_samples;
  std::vector<Eigen::VectorXd> theta_samples;
  std::vector<double> sigma_samples;
  std::vector<RowMatrixXd> z_samples;
  std::vector<double> log_posterior;
  std::vector<long> sample_iteration;
  AcceptanceLedger ledger;
  SamplerConfig config;
  PriorConfig prior;
  JumpState final_jumps;

  int n_samples() const { return static_cast<int>(sigma_samples.size()); }
  ModelState sample_state(int s) const;

  // samples.bin (versioned binary), log_posterior.csv, acceptance.csv,
  // config.json echo.
  void save(const std::filesystem::path& dir) const;
  static ChainOutput load(const std::filesystem::path& dir);
};

// z_k iid N(0, 0.25 I_D); beta, theta at zero; sigma_z^2 at 1.
ModelState initialize_state(const ItemResponseMatrix& x, const PriorConfig& prior,
                            std::uint64_t seed, int latent_dim = 2);

// Buckets persons by total score quantiles; bucket 0 = lowest scores.
std::vector<int> degree_buckets(const ItemResponseMatrix& x, int n_buckets);

// One full MH/Gibbs iteration: (1) each z_k in random order, (2) exact
// inverse-gamma draw for sigma_z^2, (3) each beta_i, (4) each theta_k.
// Symmetric Gaussian proposals, so the Hastings terms cancel.
ModelState sweep(const ModelState& state, const ItemResponseMatrix& x, const PriorConfig& prior,
                 const SamplerConfig& config, Rng& rng);

// Multiplicative jump-SD adjustment from windowed rates; burn-in only.
void adapt_proposals(AcceptanceLedger& ledger, const SamplerConfig& config, JumpState& jumps);

ChainOutput run_chain(const ItemResponseMatrix& x, const PriorConfig& prior,
                      const SamplerConfig& config);

// The persistent machinery behind run_chain; exposed so tests can drive
// sweeps directly and inspect jump freezing.
class ChainEngine {
 public:
  ChainEngine(const ItemResponseMatrix& x, const PriorConfig& prior, const SamplerConfig& config);

  void sweep_once();
  long iteration() const { return iter_; }
  const JumpState& jumps() const { return jumps_; }
  const AcceptanceLedger& ledger() const { return ledger_; }
  JointEvaluator& evaluator() { return ev_; }
  Rng& rng() { return rng_; }

  ChainOutput run();

 private:
  void maybe_window(bool adapting);

  const ItemResponseMatrix* x_;
  PriorConfig prior_;
  SamplerConfig cfg_;
  JointEvaluator ev_;
  Rng rng_;
  JumpState jumps_;
  AcceptanceLedger ledger_;
  std::vector<int> bucket_of_;
  long iter_ = 0;
};

}  // namespace dlsjm
