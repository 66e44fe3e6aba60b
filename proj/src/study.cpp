// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/study.hpp"

#include <atomic>
#include <iostream>
#include <thread>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"

namespace dlsjm {

Eigen::MatrixXd mean_person_distances(const ChainOutput& chain) {
  if (chain.n_samples() == 0) throw ValidationError("empty chain");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(chain.n, chain.n);
  for (int s = 0; s < chain.n_samples(); ++s) acc += pairwise_distances(chain.z_samples[s]);
  return acc / chain.n_samples();
}

std::vector<StudyCondition> StudyConfig::effective_grid() const {
  if (!grid.empty()) return grid;
  std::vector<StudyCondition> g;
  for (double p11 : {0.7, 0.8, 0.9})
    for (double p12 : {0.7, 0.8}) g.push_back({p11, p12});
  return g;
}

ReplicateResult run_replicate(const StudyConfig& config, int condition_index,
                              int replicate_index) {
  ReplicateResult out;
  out.condition = condition_index;
  out.replicate = replicate_index;
  const auto grid = config.effective_grid();
  const StudyCondition cond = grid.at(condition_index);
  const int G = config.cluster_G;

  try {
    SimDesign design = config.base_design;
    design.p11 = cond.p11;
    design.p12 = cond.p12;
    design.seed = Rng::derive(config.seed, 0xD5, condition_index * 1000003 + replicate_index);
    const SimDataset data = generate_dataset(design);

    SamplerConfig fit = config.fit;
    fit.seed = Rng::derive(config.seed, 0xF1, condition_index * 1000003 + replicate_index);
    const ChainOutput chain = run_chain(data.x, config.prior, fit);

    const Eigen::MatrixXd person_dist = mean_person_distances(chain);
    std::vector<int> candidates = config.person_k_candidates;
    if (candidates.empty()) candidates = {std::max(2, data.x.n_persons() / 2)};
    const KChoice choice = choose_k_neighbors(
        person_dist, G, candidates, Rng::derive(fit.seed, 0xC7));
    out.k_neighbors_used = choice.k_neighbors;

    ClusterAssignment truth;
    truth.labels = data.labels;
    truth.n_clusters = design.n_classes;

    auto confusion = [&](const ClusterAssignment& pred) {
      const MatchResult match = match_clusters(pred, truth);
      Eigen::MatrixXd c = Eigen::MatrixXd::Zero(G, G);
      Eigen::VectorXd rows = Eigen::VectorXd::Zero(G);
      for (std::size_t k = 0; k < pred.labels.size(); ++k) {
        const int t = truth.labels[k];
        const int m = match.permutation[pred.labels[k]];
        if (m < G) c(t, m) += 1.0;
        rows(t) += 1.0;
      }
      for (int t = 0; t < G; ++t)
        if (rows(t) > 0) c.row(t) /= rows(t);
      return c;
    };

    out.dlsjm_confusion = confusion(choice.assignment);

    MixtureRaschConfig em = config.em;
    em.seed = Rng::derive(config.seed, 0xE3, condition_index * 1000003 + replicate_index);
    const MixtureRaschModel model = em_fit(data.x, G, em);
    out.mixture_confusion = confusion(classify_map(model, data.x));

    out.dlsjm_diag_mean = out.dlsjm_confusion.diagonal().mean();
    out.mixture_diag_mean = out.mixture_confusion.diagonal().mean();
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

StudyReport run_study(const StudyConfig& config) {
  const auto grid = config.effective_grid();
  const int C = static_cast<int>(grid.size());
  const int R = config.replicates;
  if (R < 1) throw ValidationError("need at least one replicate");

  std::vector<ReplicateResult> results(static_cast<std::size_t>(C) * R);
  std::atomic<int> next{0};
  const int nthreads = std::max(1, std::min(config.workers, C * R));
  auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= C * R) return;
      results[t] = run_replicate(config, t / R, t % R);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  StudyReport report;
  report.grid = grid;
  report.cluster_G = config.cluster_G;
  report.replicates = results;
  report.mean_dlsjm.assign(C, Eigen::MatrixXd::Zero(config.cluster_G, config.cluster_G));
  report.mean_mixture.assign(C, Eigen::MatrixXd::Zero(config.cluster_G, config.cluster_G));
  report.failures.assign(C, 0);
  for (int c = 0; c < C; ++c) {
    int ok = 0;
    for (int r = 0; r < R; ++r) {
      const auto& rr = results[static_cast<std::size_t>(c) * R + r];
      if (!rr.ok) {
        ++report.failures[c];
        std::cerr << "study: condition " << c << " replicate " << r << " failed: " << rr.error
                  << "\n";
        continue;
      }
      report.mean_dlsjm[c] += rr.dlsjm_confusion;
      report.mean_mixture[c] += rr.mixture_confusion;
      ++ok;
    }
    if (ok > 0) {
      report.mean_dlsjm[c] /= ok;
      report.mean_mixture[c] /= ok;
    }
  }
  return report;
}

void StudyReport::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_out(dir / "table3.csv");
    out << "condition,p11,p12,method,true_class";
    for (int g = 0; g < cluster_G; ++g) out << ",pred_" << g + 1;
    out << "\n";
    for (std::size_t c = 0; c < grid.size(); ++c) {
      for (const auto* method : {"dlsjm", "mixture_rasch"}) {
        const Eigen::MatrixXd& m =
            std::string(method) == "dlsjm" ? mean_dlsjm[c] : mean_mixture[c];
        for (int t = 0; t < cluster_G; ++t) {
          out << c << "," << fmt_g17(grid[c].p11) << "," << fmt_g17(grid[c].p12) << "," << method
              << "," << t + 1;
          for (int g = 0; g < cluster_G; ++g) out << "," << fmt_g17(m(t, g));
          out << "\n";
        }
      }
    }
  }
  {
    std::ofstream out = open_out(dir / "replicates.csv");
    out << "condition,p11,p12,replicate,ok,k_neighbors,dlsjm_diag_mean,mixture_diag_mean,error\n";
    for (const auto& r : replicates) {
      out << r.condition << "," << fmt_g17(grid[r.condition].p11) << ","
          << fmt_g17(grid[r.condition].p12) << "," << r.replicate << "," << (r.ok ? 1 : 0) << ","
          << r.k_neighbors_used << "," << fmt_g17(r.dlsjm_diag_mean) << ","
          << fmt_g17(r.mixture_diag_mean) << "," << r.error << "\n";
    }
  }
}

}  // namespace dlsjm
