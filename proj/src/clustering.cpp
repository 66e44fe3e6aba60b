// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/clustering.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "dlsjm/errors.hpp"
#include "dlsjm/rng.hpp"

namespace dlsjm {

bool SimilarityGraph::connected() const {
  const int m = size();
  std::vector<char> seen(m, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int found = 1;
  while (!stack.empty()) {
    const int a = stack.back();
    stack.pop_back();
    for (int b = 0; b < m; ++b)
      if (!seen[b] && mask(a, b)) {
        seen[b] = 1;
        ++found;
        stack.push_back(b);
      }
  }
  return found == m;
}

SimilarityGraph build_similarity(const Eigen::MatrixXd& dist, int k_neighbors) {
  const int m = static_cast<int>(dist.rows());
  if (dist.cols() != m || m < 2) throw ValidationError("distance matrix must be square, m >= 2");
  if (k_neighbors < 1 || k_neighbors >= m)
    throw ValidationError("need 1 <= k_neighbors < m");
  for (int a = 0; a < m; ++a) {
    if (std::abs(dist(a, a)) > 1e-9) throw ValidationError("distance matrix diagonal must be zero");
    for (int b = a + 1; b < m; ++b) {
      if (dist(a, b) < 0 || !std::isfinite(dist(a, b)))
        throw ValidationError("distances must be finite and nonnegative");
      if (std::abs(dist(a, b) - dist(b, a)) > 1e-9)
        throw ValidationError("distance matrix must be symmetric");
    }
  }

  SimilarityGraph g;
  g.dist = dist;
  g.s = (-dist.array()).exp();
  g.k_neighbors = k_neighbors;
  g.mask.setZero(m, m);

  std::vector<int> order(m);
  for (int a = 0; a < m; ++a) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) {
      if (dist(a, u) != dist(a, v)) return dist(a, u) < dist(a, v);
      return u < v;
    });
    int taken = 0;
    for (int idx = 0; idx < m && taken < k_neighbors; ++idx) {
      const int b = order[idx];
      if (b == a) continue;
      g.mask(a, b) = 1;
      g.mask(b, a) = 1;  // union symmetrization: either endpoint suffices
      ++taken;
    }
  }
  return g;
}

namespace {

double kmeanspp_and_lloyd(const RowMatrixXd& pts, int k, Rng& rng, int max_iter,
                          std::vector<int>& labels, RowMatrixXd& centers) {
  const int m = static_cast<int>(pts.rows());
  const int dim = static_cast<int>(pts.cols());

  centers.resize(k, dim);
  centers.row(0) = pts.row(static_cast<int>(rng.integer(m)));
  Eigen::VectorXd d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    int pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (int a = 0; a < m; ++a) {
        acc += d2(a);
        if (acc >= r) {
          pick = a;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.integer(m));
    }
    centers.row(c) = pts.row(pick);
    d2 = d2.cwiseMin((pts.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  labels.assign(m, 0);
  std::vector<int> counts(k, 0);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int a = 0; a < m; ++a) {
      int best = 0;
      double bd = (pts.row(a) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (pts.row(a) - centers.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (labels[a] != best) {
        labels[a] = best;
        changed = true;
      }
    }
    centers.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (int a = 0; a < m; ++a) {
      centers.row(labels[a]) += pts.row(a);
      ++counts[labels[a]];
    }
    std::vector<int> empties;
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0)
        centers.row(c) /= counts[c];
      else
        empties.push_back(c);
    }
    // Reseed each empty cluster at the point farthest from its assigned
    // center, restricted to clusters that can spare a member.
    std::vector<char> taken(m, 0);
    for (int c : empties) {
      int far = -1;
      double fd = 0.0;
      for (int a = 0; a < m; ++a) {
        if (taken[a] || counts[labels[a]] <= 1) continue;
        const double d = (pts.row(a) - centers.row(labels[a])).squaredNorm();
        if (d > fd) {
          fd = d;
          far = a;
        }
      }
      if (far < 0)
        throw ValidationError("k-means: cannot split degenerate (all-identical) points into " +
                              std::to_string(k) + " non-empty clusters");
      centers.row(c) = pts.row(far);
      taken[far] = 1;
      changed = true;
    }
    if (!changed && it > 0) break;
  }

  double inertia = 0.0;
  for (int a = 0; a < m; ++a) inertia += (pts.row(a) - centers.row(labels[a])).squaredNorm();
  return inertia;
}

void canonicalize(std::vector<int>& labels, int k) {
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int& l : labels) {
    if (remap[l] < 0) remap[l] = next++;
    l = remap[l];
  }
}

}  // namespace

KMeansResult kmeans(const RowMatrixXd& points, int k, std::uint64_t seed, int restarts,
                    int max_iter) {
  const int m = static_cast<int>(points.rows());
  if (k < 1 || k > m) throw ValidationError("k-means: need 1 <= k <= m");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(Rng::derive(seed, 0x6b6d, r));
    std::vector<int> labels;
    RowMatrixXd centers;
    const double inertia = kmeanspp_and_lloyd(points, k, rng, max_iter, labels, centers);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = std::move(labels);
      best.centers = std::move(centers);
    }
  }
  canonicalize(best.labels, k);
  return best;
}

ClusterAssignment spectral_cluster(const SimilarityGraph& graph, int G, std::uint64_t seed,
                                   const SpectralOptions& opts) {
  const int m = graph.size();
  if (G < 2 || G >= m) throw ValidationError("spectral_cluster: need 2 <= G < m");

  SimilarityGraph work = graph;
  bool expanded = false;
  while (!work.connected()) {
    if (!opts.expand_neighbors)
      throw ValidationError("k-NN graph is disconnected at k=" + std::to_string(work.k_neighbors));
    if (work.k_neighbors + 1 >= m)
      throw ValidationError("similarity graph disconnected even when dense");
    std::cerr << "spectral_cluster: k-NN graph disconnected at k=" << work.k_neighbors
              << ", expanding to k=" << work.k_neighbors + 1 << "\n";
    work = build_similarity(graph.dist, work.k_neighbors + 1);
    expanded = true;
  }

  // Symmetric normalized Laplacian on the masked affinities (no self loops).
  Eigen::MatrixXd a = work.s;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c)
      if (r == c || !work.mask(r, c)) a(r, c) = 0.0;
  Eigen::VectorXd deg = a.rowwise().sum();
  for (int r = 0; r < m; ++r)
    if (deg(r) <= 0.0) throw ValidationError("isolated vertex in similarity graph");
  const Eigen::VectorXd dinv = deg.array().rsqrt();
  Eigen::MatrixXd lap = -(dinv.asDiagonal() * a * dinv.asDiagonal());
  lap.diagonal().array() += 1.0;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  RowMatrixXd embed = eig.eigenvectors().leftCols(G);
  for (int r = 0; r < m; ++r) {
    const double nrm = embed.row(r).norm();
    if (nrm > 0.0) embed.row(r) /= nrm;
  }

  const KMeansResult km = kmeans(embed, G, seed, opts.kmeans_restarts, opts.kmeans_max_iter);

  ClusterAssignment out;
  out.labels = km.labels;
  out.n_clusters = G;
  out.k_neighbors_used = work.k_neighbors;
  out.neighbors_expanded = expanded;

  // Explained variance in the embedding: between-cluster SS / total SS.
  const Eigen::RowVectorXd grand = embed.colwise().mean();
  double total = 0.0, between = 0.0;
  RowMatrixXd cmean = RowMatrixXd::Zero(G, embed.cols());
  std::vector<int> counts(G, 0);
  for (int r = 0; r < m; ++r) {
    total += (embed.row(r) - grand).squaredNorm();
    cmean.row(out.labels[r]) += embed.row(r);
    ++counts[out.labels[r]];
  }
  for (int g = 0; g < G; ++g) {
    if (counts[g] == 0) throw NumericalError("spectral_cluster produced an empty cluster");
    cmean.row(g) /= counts[g];
    between += counts[g] * (cmean.row(g) - grand).squaredNorm();
  }
  out.explained_variance = total > 0.0 ? between / total : 1.0;
  return out;
}

KChoice choose_k_neighbors(const Eigen::MatrixXd& dist, int G, const std::vector<int>& candidates,
                           std::uint64_t seed, const SpectralOptions& opts) {
  if (candidates.empty()) throw ValidationError("choose_k_neighbors: empty candidate list");
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  KChoice best;
  bool have = false;
  for (int k : sorted) {
    ClusterAssignment a = spectral_cluster(build_similarity(dist, k), G, seed, opts);
    if (!have || a.explained_variance > best.assignment.explained_variance) {
      best = KChoice{k, std::move(a)};
      have = true;
    }
  }
  return best;
}

MatchResult match_clusters(const ClusterAssignment& a, const ClusterAssignment& b) {
  if (a.labels.size() != b.labels.size() || a.labels.empty())
    throw ValidationError("match_clusters: label vectors must be same nonzero length");
  const int ga = 1 + *std::max_element(a.labels.begin(), a.labels.end());
  const int gb = 1 + *std::max_element(b.labels.begin(), b.labels.end());
  const int g = std::max(ga, gb);
  if (g > 8) throw ValidationError("match_clusters: exhaustive matching supports at most 8 labels");

  std::vector<int> perm(g);
  std::iota(perm.begin(), perm.end(), 0);
  MatchResult best;
  best.agreement = -1.0;
  const double m = static_cast<double>(a.labels.size());
  do {
    int agree = 0;
    for (std::size_t i = 0; i < a.labels.size(); ++i)
      if (perm[a.labels[i]] == b.labels[i]) ++agree;
    if (agree / m > best.agreement) {
      best.agreement = agree / m;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace dlsjm
