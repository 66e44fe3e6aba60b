// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "dlsjm/sampler.hpp"

namespace dlsjm {

// Retained sample with the highest stored joint log posterior; earliest wins ties.
int select_reference(const ChainOutput& chain);

struct ProcrustesResult {
  RowMatrixXd aligned;
  double disparity = 0.0;  // Frobenius distance to the reference after alignment
  bool rank_deficient = false;
};

// Orthogonal Procrustes: centering + SVD of the cross-covariance, rotation /
// reflection only — no scaling, distances must survive exactly.
ProcrustesResult procrustes_align(const RowMatrixXd& sample, const RowMatrixXd& reference);

struct AlignedChain {
  std::vector<RowMatrixXd> z;
  int reference_index = 0;
  std::vector<double> disparity;
  int rank_deficient_count = 0;
};

AlignedChain align_chain(const ChainOutput& chain);

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// Shortest contiguous window over sorted draws holding the stated mass.
Interval hpd_interval(std::vector<double> draws, double level = 0.95);

struct PosteriorSummary {
  Eigen::MatrixXd person_dist;  // posterior mean n x n distances
  Eigen::MatrixXd item_dist;    // posterior mean p x p distances
  Eigen::VectorXd beta_mean, beta_lo, beta_hi;
  Eigen::VectorXd theta_mean, theta_lo, theta_hi;
  RowMatrixXd z_mean, w_mean;

  void save(const std::filesystem::path& dir, const ItemResponseMatrix& x) const;
};

// Per-sample distance matrices (item positions recomputed from aligned Z via
// f_i, preserving the coupling), averaged over samples; 0.95 HPD summaries.
PosteriorSummary posterior_distances(const AlignedChain& aligned, const ChainOutput& chain,
                                     const ItemResponseMatrix& x);

double lag1_autocorrelation(const std::vector<double>& series);

// Initial-positive-sequence estimator; capped at the sample count (constant
// and antithetic series report N by convention).
double effective_sample_size(const std::vector<double>& series);

enum class TraceSide { person, item };

struct TraceStats {
  TraceSide side = TraceSide::person;
  std::pair<int, int> pair;
  std::vector<double> series;
  double lag1 = 0.0;
  double ess = 0.0;
};

// Per-retained-sample distance series for the requested pairs. Distances are
// isometry-invariant, so the raw (unaligned) chain is a valid source.
std::vector<TraceStats> distance_trace(const ChainOutput& chain, TraceSide side,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const ItemResponseMatrix& x);

void save_traces(const std::filesystem::path& dir, const std::vector<TraceStats>& traces);

}  // namespace dlsjm
