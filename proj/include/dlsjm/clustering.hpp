// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <vector>

#include "dlsjm/likelihood.hpp"

namespace dlsjm {

// exp(-distance) similarities masked to a union-symmetrized k-NN graph.
struct SimilarityGraph {
  Eigen::MatrixXd dist;  // source distances (kept so neighbor expansion can rebuild)
  Eigen::MatrixXd s;     // exp(-dist); s_aa = 1
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;  // kept off-diagonal edges
  int k_neighbors = 0;

  int size() const { return static_cast<int>(s.rows()); }
  bool connected() const;
};

SimilarityGraph build_similarity(const Eigen::MatrixXd& dist, int k_neighbors);

struct ClusterAssignment {
  std::vector<int> labels;  // 0..G-1, every cluster non-empty when produced here
  int n_clusters = 0;
  double explained_variance = 0.0;
  // diagnostics
  int k_neighbors_used = -1;
  bool neighbors_expanded = false;
};

struct SpectralOptions {
  bool expand_neighbors = true;  // on a disconnected graph, grow k (logged) instead of failing
  int kmeans_restarts = 50;
  int kmeans_max_iter = 300;
};

// Symmetric normalized Laplacian, top-G eigenvectors, row-normalized
// embedding, seeded k-means++ with restarts.
ClusterAssignment spectral_cluster(const SimilarityGraph& graph, int G, std::uint64_t seed,
                                   const SpectralOptions& opts = {});

struct KChoice {
  int k_neighbors = 0;
  ClusterAssignment assignment;
};

// Argmax of explained variance over the candidate neighbor counts; ties to
// the smaller k.
KChoice choose_k_neighbors(const Eigen::MatrixXd& dist, int G, const std::vector<int>& candidates,
                           std::uint64_t seed, const SpectralOptions& opts = {});

struct MatchResult {
  std::vector<int> permutation;  // a-label -> b-label
  double agreement = 0.0;
};

// Best label permutation (exhaustive, G <= 8) maximizing agreement.
MatchResult match_clusters(const ClusterAssignment& a, const ClusterAssignment& b);

struct KMeansResult {
  std::vector<int> labels;
  RowMatrixXd centers;
  double inertia = 0.0;
};

KMeansResult kmeans(const RowMatrixXd& points, int k, std::uint64_t seed, int restarts = 50,
                    int max_iter = 300);

}  // namespace dlsjm
