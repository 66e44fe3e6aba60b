// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "dlsjm/mixture_rasch.hpp"
#include "dlsjm/postprocess.hpp"
#include "dlsjm/study.hpp"

namespace dlsjm {

struct ClusteringOptions {
  int g_person = 3;
  int g_item = 4;
  std::vector<int> k_person_candidates;  // empty = { floor(n/2) }
  std::vector<int> k_item_candidates;    // empty = { 2 }
  SpectralOptions spectral;
};

struct FitOptions {
  std::filesystem::path data_path;
  std::filesystem::path out_dir;
  PriorConfig prior;
  SamplerConfig sampler;
  ClusteringOptions clustering;
  std::vector<std::pair<int, int>> trace_person_pairs;  // empty = spread defaults
  std::vector<std::pair<int, int>> trace_item_pairs;
};

// Chain -> post-process -> cluster -> summaries, cluster CSVs, SVG plot,
// manifest.json.
void fit_run(const FitOptions& opts);

struct SimulateOptions {
  SimDesign design;
  std::filesystem::path out_dir;
};
void simulate_run(const SimulateOptions& opts);

struct BaselineOptions {
  std::filesystem::path data_path;
  std::filesystem::path out_dir;
  int n_classes = 3;
  MixtureRaschConfig em;
};
void baseline_run(const BaselineOptions& opts);

struct ClusterOptions {
  // Either a completed fit run directory or an explicit distance matrix CSV.
  std::optional<std::filesystem::path> run_dir;
  std::optional<std::filesystem::path> dist_path;
  std::filesystem::path out_dir;
  int n_clusters = 3;
  std::vector<int> k_candidates;
  std::uint64_t seed = 1;
  SpectralOptions spectral;
};
void cluster_run(const ClusterOptions& opts);

struct StudyOptions {
  StudyConfig study;
  std::filesystem::path out_dir;
};
void study_run(const StudyOptions& opts);

void report_run(const std::filesystem::path& run_dir);

// Plain numeric CSV matrix (no header), as written by PosteriorSummary::save.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

}  // namespace dlsjm
