// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dlsjm/mixture_rasch.hpp"
#include "dlsjm/sampler.hpp"
#include "dlsjm/simgen.hpp"

namespace dlsjm {

// Posterior mean person distance matrix straight from the raw chain
// (distances are isometry-invariant, so no alignment is required here).
Eigen::MatrixXd mean_person_distances(const ChainOutput& chain);

struct StudyCondition {
  double p11 = 0.9;
  double p12 = 0.8;
};

struct StudyConfig {
  std::vector<StudyCondition> grid;  // empty = the six-condition default grid
  int replicates = 10;
  SimDesign base_design;     // p11/p12 overridden per condition, seed derived
  SamplerConfig fit;         // per-replicate chain settings, seed derived
  PriorConfig prior;
  MixtureRaschConfig em;     // baseline settings, seed derived
  int cluster_G = 3;
  std::vector<int> person_k_candidates;  // empty = { floor(n/2) }
  std::uint64_t seed = 1;
  int workers = 1;  // parallel replicates

  std::vector<StudyCondition> effective_grid() const;
};

struct ReplicateResult {
  int condition = 0, replicate = 0;
  bool ok = false;
  std::string error;
  Eigen::MatrixXd dlsjm_confusion;    // rows true class, cols matched predicted
  Eigen::MatrixXd mixture_confusion;
  double dlsjm_diag_mean = 0.0;
  double mixture_diag_mean = 0.0;
  int k_neighbors_used = 0;
};

struct StudyReport {
  std::vector<StudyCondition> grid;
  int cluster_G = 0;
  std::vector<ReplicateResult> replicates;
  std::vector<Eigen::MatrixXd> mean_dlsjm;    // per condition
  std::vector<Eigen::MatrixXd> mean_mixture;  // per condition
  std::vector<int> failures;                  // per condition

  void save(const std::filesystem::path& dir) const;  // table3.csv + replicates.csv
};

// Generate -> fit DLSJM -> spectral-cluster persons -> score against truth;
// fit the mixture-Rasch baseline and score; row-normalized confusion
// matrices averaged over replicates. Failed replicates are logged and
// excluded with a count.
ReplicateResult run_replicate(const StudyConfig& config, int condition_index, int replicate_index);
StudyReport run_study(const StudyConfig& config);

}  // namespace dlsjm
