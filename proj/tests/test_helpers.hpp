// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dlsjm/data_model.hpp"
#include "dlsjm/likelihood.hpp"

namespace dlsjm::test {

// Random binary matrix with every column non-degenerate (>= 1 correct).
inline ItemResponseMatrix random_matrix(int n, int p, unsigned seed, double density = 0.5) {
  std::mt19937 gen(seed);
  std::bernoulli_distribution coin(density);
  std::vector<std::uint8_t> x(static_cast<std::size_t>(n) * p);
  for (auto& v : x) v = coin(gen) ? 1 : 0;
  for (int i = 0; i < p; ++i) {
    bool any = false;
    for (int k = 0; k < n; ++k) any = any || x[static_cast<std::size_t>(k) * p + i];
    if (!any) x[static_cast<std::size_t>(gen() % n) * p + i] = 1;
  }
  return ItemResponseMatrix(n, p, std::move(x));
}

inline RowMatrixXd random_positions(int n, int d, unsigned seed, double scale = 1.0) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  RowMatrixXd z(n, d);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < d; ++j) z(k, j) = normal(gen);
  return z;
}

inline ModelState random_state(const ItemResponseMatrix& x, int d, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ModelState s;
  s.beta.resize(x.n_items());
  s.theta.resize(x.n_persons());
  for (int i = 0; i < x.n_items(); ++i) s.beta(i) = normal(gen);
  for (int k = 0; k < x.n_persons(); ++k) s.theta(k) = normal(gen);
  s.sigma_z_sq = 0.5 + std::abs(normal(gen));
  s.z.z = random_positions(x.n_persons(), d, seed + 1);
  return s;
}

// Independent scalar softplus for oracles (no shared code with the library
// beyond <cmath>).
inline double oracle_log1pexp(double v) {
  if (v > 0.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

// Brute-force enumeration of the joint log-likelihood: ordered loops over
// every layer and unordered pair, naive distances, no caching.
inline double oracle_joint_loglik(const ModelState& st, const ItemResponseMatrix& x) {
  const int n = x.n_persons(), p = x.n_items();
  const int D = st.z.dim();
  double ll = 0.0;
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        double d2 = 0.0;
        for (int a = 0; a < D; ++a) d2 += (st.z.z(k, a) - st.z.z(l, a)) * (st.z.z(k, a) - st.z.z(l, a));
        const double eta = st.beta(i) - std::sqrt(d2);
        const int y = x(k, i) * x(l, i);
        ll += y * eta - oracle_log1pexp(eta);
      }
  // item positions by direct averaging
  std::vector<std::vector<double>> w(p, std::vector<double>(D, 0.0));
  for (int i = 0; i < p; ++i) {
    int c = 0;
    for (int k = 0; k < n; ++k)
      if (x(k, i)) {
        ++c;
        for (int a = 0; a < D; ++a) w[i][a] += st.z.z(k, a);
      }
    for (int a = 0; a < D; ++a) w[i][a] /= c;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        double d2 = 0.0;
        for (int a = 0; a < D; ++a) d2 += (w[i][a] - w[j][a]) * (w[i][a] - w[j][a]);
        const double xi = st.theta(k) - std::sqrt(d2);
        const int u = x(k, i) * x(k, j);
        ll += u * xi - oracle_log1pexp(xi);
      }
  return ll;
}

// Total variation between a sample histogram and a (log-)density restricted
// to [lo, hi]: bin probabilities from midpoint quadrature (32 points per
// bin), sample mass outside the range added on top.
template <class LogDensity>
double tv_hist_vs_logdensity(const std::vector<double>& samples, LogDensity&& logdens, double lo,
                             double hi, int nbins) {
  const int sub = 32;
  std::vector<double> binmass(nbins, 0.0);
  const double width = (hi - lo) / nbins;
  double maxlog = -1e300;
  std::vector<double> logs(static_cast<std::size_t>(nbins) * sub);
  for (int b = 0; b < nbins; ++b)
    for (int s = 0; s < sub; ++s) {
      const double v = lo + (b + (s + 0.5) / sub) * width;
      logs[static_cast<std::size_t>(b) * sub + s] = logdens(v);
      maxlog = std::max(maxlog, logs[static_cast<std::size_t>(b) * sub + s]);
    }
  double total = 0.0;
  for (int b = 0; b < nbins; ++b) {
    double m = 0.0;
    for (int s = 0; s < sub; ++s) m += std::exp(logs[static_cast<std::size_t>(b) * sub + s] - maxlog);
    binmass[b] = m;
    total += m;
  }
  for (double& m : binmass) m /= total;

  std::vector<double> hist(nbins, 0.0);
  double outside = 0.0;
  for (double v : samples) {
    if (v < lo || v >= hi) {
      outside += 1.0;
      continue;
    }
    hist[static_cast<int>((v - lo) / width)] += 1.0;
  }
  // Common partition = nbins cells plus one "outside" cell that the density
  // treats as massless (the range must be chosen wide enough for that).
  const double n = static_cast<double>(samples.size());
  double sum = outside / n;
  for (int b = 0; b < nbins; ++b) sum += std::abs(hist[b] / n - binmass[b]);
  return 0.5 * sum;
}

}  // namespace dlsjm::test
