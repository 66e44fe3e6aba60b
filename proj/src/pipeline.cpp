// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/pipeline.hpp"

#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"
#include "dlsjm/svg.hpp"

namespace dlsjm {

namespace {

using nlohmann::json;

json clustering_json(const ClusterAssignment& a) {
  return {{"n_clusters", a.n_clusters},
          {"explained_variance", a.explained_variance},
          {"k_neighbors_used", a.k_neighbors_used},
          {"neighbors_expanded", a.neighbors_expanded}};
}

void write_labels_csv(const std::filesystem::path& path, const std::string& unit,
                      const std::vector<int>& labels) {
  std::ofstream out = open_out(path);
  out << unit << ",cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << "," << labels[i] << "\n";
}

std::vector<std::pair<int, int>> default_trace_pairs(int m) {
  std::vector<std::pair<int, int>> pairs;
  if (m >= 2) pairs.push_back({0, m - 1});
  if (m >= 4) pairs.push_back({0, m / 2});
  if (m >= 6) pairs.push_back({m / 4, 3 * m / 4});
  return pairs;
}

}  // namespace

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path.string() + ": ragged matrix CSV");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": empty matrix CSV");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out = open_out(path);
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) out << fmt_g17(m(r, c)) << (c + 1 < m.cols() ? "," : "\n");
}

void fit_run(const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(opts.out_dir);

  const ItemResponseMatrix x = ItemResponseMatrix::load(opts.data_path);
  x.require_no_degenerate_items();
  const auto zero_scores = x.zero_score_persons();
  if (!zero_scores.empty())
    std::cerr << "fit: " << zero_scores.size()
              << " respondent(s) with total score 0 retained; their person intercepts are "
                 "prior-dominated\n";

  const ChainOutput chain = run_chain(x, opts.prior, opts.sampler);
  chain.save(opts.out_dir);

  const AlignedChain aligned = align_chain(chain);
  const PosteriorSummary summary = posterior_distances(aligned, chain, x);
  summary.save(opts.out_dir, x);
  write_matrix_csv(opts.out_dir / "z_mean.csv", summary.z_mean);
  write_matrix_csv(opts.out_dir / "w_mean.csv", summary.w_mean);

  auto person_pairs = opts.trace_person_pairs.empty() ? default_trace_pairs(chain.n)
                                                      : opts.trace_person_pairs;
  auto item_pairs =
      opts.trace_item_pairs.empty() ? default_trace_pairs(chain.p) : opts.trace_item_pairs;
  std::vector<TraceStats> traces = distance_trace(chain, TraceSide::person, person_pairs, x);
  const auto item_traces = distance_trace(chain, TraceSide::item, item_pairs, x);
  traces.insert(traces.end(), item_traces.begin(), item_traces.end());
  save_traces(opts.out_dir / "traces", traces);

  std::vector<int> person_cand = opts.clustering.k_person_candidates;
  if (person_cand.empty()) person_cand = {std::max(1, chain.n / 2)};
  std::vector<int> item_cand = opts.clustering.k_item_candidates;
  if (item_cand.empty()) item_cand = {std::min(2, chain.p - 1)};

  const KChoice person_choice =
      choose_k_neighbors(summary.person_dist, opts.clustering.g_person, person_cand,
                         Rng::derive(opts.sampler.seed, 0xC0), opts.clustering.spectral);
  const KChoice item_choice =
      choose_k_neighbors(summary.item_dist, opts.clustering.g_item, item_cand,
                         Rng::derive(opts.sampler.seed, 0xC1), opts.clustering.spectral);
  write_labels_csv(opts.out_dir / "clusters_person.csv", "person", person_choice.assignment.labels);
  write_labels_csv(opts.out_dir / "clusters_item.csv", "item", item_choice.assignment.labels);

  {
    std::ofstream out = open_out(opts.out_dir / "latent_space.svg");
    out << latent_space_svg(summary.z_mean, person_choice.assignment.labels, summary.w_mean,
                            item_choice.assignment.labels,
                            "Posterior mean latent space (circles: persons, squares: items)");
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest;
  manifest["command"] = "fit";
  manifest["data"] = {{"path", opts.data_path.string()},
                      {"git_blob_sha1", git_blob_sha1(opts.data_path)},
                      {"n", x.n_persons()},
                      {"p", x.n_items()}};
  manifest["config"] = json::parse(read_file(opts.out_dir / "config.json"));
  manifest["clustering"] = {{"person", clustering_json(person_choice.assignment)},
                            {"item", clustering_json(item_choice.assignment)},
                            {"g_person", opts.clustering.g_person},
                            {"g_item", opts.clustering.g_item}};
  manifest["zero_score_persons"] = zero_scores;
  manifest["procrustes"] = {{"reference_index", aligned.reference_index},
                            {"rank_deficient_samples", aligned.rank_deficient_count}};
  manifest["wall_clock_seconds"] = wall;
  manifest["outputs"] = {"samples.bin",        "log_posterior.csv", "acceptance.csv",
                         "config.json",        "person_dist.csv",   "item_dist.csv",
                         "beta_summary.csv",   "theta_summary.csv", "z_mean.csv",
                         "w_mean.csv",         "traces",            "clusters_person.csv",
                         "clusters_item.csv",  "latent_space.svg"};
  std::ofstream out = open_out(opts.out_dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

void simulate_run(const SimulateOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  const SimDataset data = generate_dataset(opts.design);
  data.x.to_csv(opts.out_dir / "data.csv");
  {
    std::ofstream out = open_out(opts.out_dir / "truth.csv");
    out << "respondent,true_class\n";
    for (std::size_t k = 0; k < data.labels.size(); ++k) out << k << "," << data.labels[k] << "\n";
  }
  json j;
  j["design"] = {{"n_classes", opts.design.n_classes},
                 {"class_sizes", opts.design.sizes()},
                 {"n_item_groups", opts.design.n_item_groups},
                 {"items_per_group", opts.design.items_per_group},
                 {"class_to_groups", opts.design.class_to_groups},
                 {"p11", opts.design.p11},
                 {"p12", opts.design.p12},
                 {"p21", opts.design.p21},
                 {"p22", opts.design.p22},
                 {"rho", opts.design.rho},
                 {"copy_anchor_offset", opts.design.copy_anchor_offset},
                 {"seed", opts.design.seed}};
  j["copy_fraction"] = data.dependence.copy_fraction();
  std::ofstream out = open_out(opts.out_dir / "design.json");
  out << j.dump(2) << "\n";
}

void baseline_run(const BaselineOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  const ItemResponseMatrix x = ItemResponseMatrix::load(opts.data_path);
  const MixtureRaschModel model = em_fit(x, opts.n_classes, opts.em);
  model.save_json(opts.out_dir / "mixture_params.json");
  const Eigen::MatrixXd post = class_posteriors(model, x);
  const ClusterAssignment map = classify_map(model, x);
  std::ofstream out = open_out(opts.out_dir / "mixture_classes.csv");
  out << "person,map_class";
  for (int g = 0; g < model.n_classes; ++g) out << ",p_class_" << g;
  out << "\n";
  for (int k = 0; k < x.n_persons(); ++k) {
    out << k << "," << map.labels[k];
    for (int g = 0; g < model.n_classes; ++g) out << "," << fmt_g17(post(k, g));
    out << "\n";
  }
}

void cluster_run(const ClusterOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  auto run_one = [&](const Eigen::MatrixXd& dist, const std::string& unit,
                     const std::filesystem::path& path) {
    std::vector<int> cand = opts.k_candidates;
    if (cand.empty()) cand = {std::max(1, static_cast<int>(dist.rows()) / 2)};
    const KChoice choice =
        choose_k_neighbors(dist, opts.n_clusters, cand, opts.seed, opts.spectral);
    write_labels_csv(path, unit, choice.assignment.labels);
    return choice;
  };

  json meta;
  if (opts.run_dir) {
    const KChoice person = run_one(read_matrix_csv(*opts.run_dir / "person_dist.csv"), "person",
                                   opts.out_dir / "clusters_person.csv");
    const KChoice item = run_one(read_matrix_csv(*opts.run_dir / "item_dist.csv"), "item",
                                 opts.out_dir / "clusters_item.csv");
    meta["person"] = clustering_json(person.assignment);
    meta["item"] = clustering_json(item.assignment);
    const auto zpath = *opts.run_dir / "z_mean.csv";
    const auto wpath = *opts.run_dir / "w_mean.csv";
    if (std::filesystem::exists(zpath) && std::filesystem::exists(wpath)) {
      const Eigen::MatrixXd zm = read_matrix_csv(zpath);
      const Eigen::MatrixXd wm = read_matrix_csv(wpath);
      std::ofstream out = open_out(opts.out_dir / "latent_space.svg");
      out << latent_space_svg(RowMatrixXd(zm), person.assignment.labels, RowMatrixXd(wm),
                              item.assignment.labels, "Latent space, re-clustered");
    }
  } else if (opts.dist_path) {
    const KChoice choice =
        run_one(read_matrix_csv(*opts.dist_path), "unit", opts.out_dir / "clusters.csv");
    meta["clusters"] = clustering_json(choice.assignment);
  } else {
    throw ValidationError("cluster: need either a run directory or a distance matrix");
  }
  std::ofstream out = open_out(opts.out_dir / "clusters_meta.json");
  out << meta.dump(2) << "\n";
}

void study_run(const StudyOptions& opts) {
  std::filesystem::create_directories(opts.out_dir);
  const StudyReport report = run_study(opts.study);
  report.save(opts.out_dir);
  json j;
  j["replicates"] = opts.study.replicates;
  j["cluster_G"] = opts.study.cluster_G;
  j["seed"] = opts.study.seed;
  j["workers"] = opts.study.workers;
  j["grid"] = json::array();
  for (const auto& c : report.grid) j["grid"].push_back({{"p11", c.p11}, {"p12", c.p12}});
  j["failures"] = report.failures;
  j["fit"] = {{"n_iterations", opts.study.fit.n_iterations},
              {"burn_in", opts.study.fit.burn_in},
              {"thin", opts.study.fit.thin}};
  std::ofstream out = open_out(opts.out_dir / "study_config.json");
  out << j.dump(2) << "\n";
}

}  // namespace dlsjm
