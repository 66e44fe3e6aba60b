// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/postprocess.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"

namespace dlsjm {

int select_reference(const ChainOutput& chain) {
  if (chain.n_samples() == 0) throw ValidationError("empty chain");
  int best = 0;
  for (int s = 1; s < chain.n_samples(); ++s)
    if (chain.log_posterior[s] > chain.log_posterior[best]) best = s;
  return best;
}

ProcrustesResult procrustes_align(const RowMatrixXd& sample, const RowMatrixXd& reference) {
  if (sample.rows() != reference.rows() || sample.cols() != reference.cols())
    throw ValidationError("procrustes: shape mismatch");
  const Eigen::RowVectorXd mu_s = sample.colwise().mean();
  const Eigen::RowVectorXd mu_r = reference.colwise().mean();
  const RowMatrixXd sc = sample.rowwise() - mu_s;
  const RowMatrixXd rc = reference.rowwise() - mu_r;

  const Eigen::MatrixXd c = sc.transpose() * rc;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();

  ProcrustesResult out;
  out.aligned = (sc * rot).rowwise() + mu_r;
  out.disparity = (out.aligned - reference).norm();
  const auto& sv = svd.singularValues();
  out.rank_deficient = sv.size() > 0 && sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0));
  return out;
}

AlignedChain align_chain(const ChainOutput& chain) {
  AlignedChain out;
  out.reference_index = select_reference(chain);
  const RowMatrixXd& ref = chain.z_samples[out.reference_index];
  const int S = chain.n_samples();
  out.z.resize(S);
  out.disparity.resize(S);
  std::vector<char> flags(S, 0);
#pragma omp parallel for num_threads(chain.config.workers) schedule(static)
  for (int s = 0; s < S; ++s) {
    ProcrustesResult r = procrustes_align(chain.z_samples[s], ref);
    out.z[s] = std::move(r.aligned);
    out.disparity[s] = r.disparity;
    flags[s] = r.rank_deficient;
  }
  for (char f : flags) out.rank_deficient_count += f;
  return out;
}

Interval hpd_interval(std::vector<double> draws, double level) {
  if (draws.size() < 2) throw ValidationError("hpd needs at least 2 draws");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("hpd level must be in (0,1)");
  std::sort(draws.begin(), draws.end());
  const long n = static_cast<long>(draws.size());
  long gap = std::lround(level * static_cast<double>(n));
  gap = std::clamp(gap, 1L, n - 1);
  long best = 0;
  double width = draws[gap] - draws[0];
  for (long i = 1; i + gap < n; ++i) {
    const double w = draws[i + gap] - draws[i];
    if (w < width) {
      width = w;
      best = i;
    }
  }
  return Interval{draws[best], draws[best + gap]};
}

namespace {

// Item positions for one sample, f_i applied to the given configuration.
RowMatrixXd item_pos_of(const RowMatrixXd& z, const ItemResponseMatrix& x) {
  return item_positions(LatentConfiguration{z}, x).w;
}

}  // namespace

PosteriorSummary posterior_distances(const AlignedChain& aligned, const ChainOutput& chain,
                                     const ItemResponseMatrix& x) {
  const int S = static_cast<int>(aligned.z.size());
  if (S == 0) throw ValidationError("empty aligned chain");
  const int n = chain.n, p = chain.p;

  PosteriorSummary out;
  out.person_dist = Eigen::MatrixXd::Zero(n, n);
  out.item_dist = Eigen::MatrixXd::Zero(p, p);
  out.z_mean = RowMatrixXd::Zero(n, chain.D);
  out.w_mean = RowMatrixXd::Zero(p, chain.D);

  for (int s = 0; s < S; ++s) {
    out.person_dist += pairwise_distances(aligned.z[s]);
    const RowMatrixXd w = item_pos_of(aligned.z[s], x);
    out.item_dist += pairwise_distances(w);
    out.z_mean += aligned.z[s];
    out.w_mean += w;
  }
  out.person_dist /= S;
  out.item_dist /= S;
  out.z_mean /= S;
  out.w_mean /= S;

  out.beta_mean.resize(p);
  out.beta_lo.resize(p);
  out.beta_hi.resize(p);
  std::vector<double> draws(S);
  for (int i = 0; i < p; ++i) {
    double m = 0.0;
    for (int s = 0; s < S; ++s) {
      draws[s] = chain.beta_samples[s](i);
      m += draws[s];
    }
    out.beta_mean(i) = m / S;
    const Interval h = hpd_interval(draws);
    out.beta_lo(i) = h.lo;
    out.beta_hi(i) = h.hi;
  }
  out.theta_mean.resize(n);
  out.theta_lo.resize(n);
  out.theta_hi.resize(n);
  for (int k = 0; k < n; ++k) {
    double m = 0.0;
    for (int s = 0; s < S; ++s) {
      draws[s] = chain.theta_samples[s](k);
      m += draws[s];
    }
    out.theta_mean(k) = m / S;
    const Interval h = hpd_interval(draws);
    out.theta_lo(k) = h.lo;
    out.theta_hi(k) = h.hi;
  }
  return out;
}

void PosteriorSummary::save(const std::filesystem::path& dir, const ItemResponseMatrix& x) const {
  std::filesystem::create_directories(dir);
  auto write_matrix = [](const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_out(path);
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c)
        out << fmt_g17(m(r, c)) << (c + 1 < m.cols() ? "," : "\n");
  };
  write_matrix(dir / "person_dist.csv", person_dist);
  write_matrix(dir / "item_dist.csv", item_dist);

  {
    std::ofstream out = open_out(dir / "beta_summary.csv");
    out << "item,mean,hpd_lo,hpd_hi,total_correct\n";
    for (long i = 0; i < beta_mean.size(); ++i)
      out << i << "," << fmt_g17(beta_mean(i)) << "," << fmt_g17(beta_lo(i)) << ","
          << fmt_g17(beta_hi(i)) << "," << x.item_totals()[i] << "\n";
  }
  {
    std::ofstream out = open_out(dir / "theta_summary.csv");
    out << "person,mean,hpd_lo,hpd_hi,total_score\n";
    for (long k = 0; k < theta_mean.size(); ++k)
      out << k << "," << fmt_g17(theta_mean(k)) << "," << fmt_g17(theta_lo(k)) << ","
          << fmt_g17(theta_hi(k)) << "," << x.person_totals()[k] << "\n";
  }
}

namespace {
bool is_constant(const std::vector<double>& series) {
  // exact check: centering a constant series by its rounded mean would
  // otherwise manufacture epsilon-sized autocovariances
  for (double v : series)
    if (v != series.front()) return false;
  return true;
}
}  // namespace

double lag1_autocorrelation(const std::vector<double>& series) {
  const long n = static_cast<long>(series.size());
  if (n < 2 || is_constant(series)) return 0.0;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double g0 = 0.0, g1 = 0.0;
  for (long s = 0; s < n; ++s) {
    const double a = series[s] - mean;
    g0 += a * a;
    if (s + 1 < n) g1 += a * (series[s + 1] - mean);
  }
  if (g0 <= 0.0) return 0.0;
  return g1 / g0;
}

double effective_sample_size(const std::vector<double>& series) {
  const long n = static_cast<long>(series.size());
  if (n < 2 || is_constant(series)) return static_cast<double>(n);
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);

  auto gamma = [&](long t) {
    double g = 0.0;
    for (long s = 0; s + t < n; ++s) g += (series[s] - mean) * (series[s + t] - mean);
    return g / static_cast<double>(n);
  };
  const double g0 = gamma(0);
  if (g0 <= 0.0) return static_cast<double>(n);  // constant series

  double tau = -1.0;
  for (long m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (gamma(2 * m) + gamma(2 * m + 1)) / g0;
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  if (tau < 1e-12) return static_cast<double>(n);
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

std::vector<TraceStats> distance_trace(const ChainOutput& chain, TraceSide side,
                                       const std::vector<std::pair<int, int>>& pairs,
                                       const ItemResponseMatrix& x) {
  const int S = chain.n_samples();
  const int limit = side == TraceSide::person ? chain.n : chain.p;
  std::vector<TraceStats> out;
  for (auto [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= limit || b >= limit || a == b)
      throw ValidationError("distance_trace: bad index pair");
    TraceStats t;
    t.side = side;
    t.pair = {a, b};
    t.series.resize(S);
    for (int s = 0; s < S; ++s) {
      if (side == TraceSide::person) {
        t.series[s] = (chain.z_samples[s].row(a) - chain.z_samples[s].row(b)).norm();
      } else {
        Eigen::RowVectorXd wa = Eigen::RowVectorXd::Zero(chain.D);
        Eigen::RowVectorXd wb = Eigen::RowVectorXd::Zero(chain.D);
        for (int k : x.persons_of_item(a)) wa += chain.z_samples[s].row(k);
        for (int k : x.persons_of_item(b)) wb += chain.z_samples[s].row(k);
        wa /= static_cast<double>(x.item_totals()[a]);
        wb /= static_cast<double>(x.item_totals()[b]);
        t.series[s] = (wa - wb).norm();
      }
    }
    t.lag1 = lag1_autocorrelation(t.series);
    t.ess = effective_sample_size(t.series);
    out.push_back(std::move(t));
  }
  return out;
}

void save_traces(const std::filesystem::path& dir, const std::vector<TraceStats>& traces) {
  std::filesystem::create_directories(dir);
  std::ofstream summary = open_out(dir / "summary.csv");
  summary << "side,a,b,lag1_autocorrelation,ess\n";
  for (const auto& t : traces) {
    const std::string name = (t.side == TraceSide::person ? "person_" : "item_") +
                             std::to_string(t.pair.first) + "_" + std::to_string(t.pair.second);
    std::ofstream out = open_out(dir / (name + ".csv"));
    out << "sample,distance\n";
    for (std::size_t s = 0; s < t.series.size(); ++s)
      out << s << "," << fmt_g17(t.series[s]) << "\n";
    summary << (t.side == TraceSide::person ? "person" : "item") << "," << t.pair.first << ","
            << t.pair.second << "," << fmt_g17(t.lag1) << "," << fmt_g17(t.ess) << "\n";
  }
}

}  // namespace dlsjm
