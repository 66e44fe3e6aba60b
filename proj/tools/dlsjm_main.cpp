// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

#include "dlsjm/errors.hpp"
#include "dlsjm/pipeline.hpp"

namespace {

using namespace dlsjm;

void add_sampler_options(CLI::App* cmd, SamplerConfig& s) {
  cmd->add_option("--iterations", s.n_iterations, "MCMC iterations (default 55000)");
  cmd->add_option("--burn-in", s.burn_in, "burn-in iterations, adaptive phase (default 5000)");
  cmd->add_option("--thin", s.thin, "thinning interval (default 10)");
  cmd->add_option("--jump-beta", s.jump_beta, "beta proposal SD (default 0.1)");
  cmd->add_option("--jump-theta", s.jump_theta, "theta proposal SD (default 3.0)");
  cmd->add_option("--jump-z", s.jump_z_buckets,
                  "z proposal SDs per total-score bucket, low to high degree")
      ->delimiter(',');
  cmd->add_option("--accept-lo", s.target_accept_lo, "lower acceptance target (default 0.20)");
  cmd->add_option("--accept-hi", s.target_accept_hi, "upper acceptance target (default 0.40)");
  cmd->add_option("--adapt-window", s.adapt_window, "adaptation window (default 500)");
  cmd->add_option("--latent-dim", s.latent_dim, "latent space dimension (default 2)");
  cmd->add_option("--workers", s.workers, "parallel workers for likelihood reductions");
  cmd->add_flag("--verbose", s.verbose, "progress to stderr");
}

void add_prior_options(CLI::App* cmd, PriorConfig& p, double& sigma_beta, double& sigma_theta) {
  cmd->add_option("--sigma-beta", sigma_beta, "prior SD of item intercepts (default 10.0)");
  cmd->add_option("--sigma-theta", sigma_theta, "prior SD of person intercepts (default 10.0)");
  cmd->add_option("--a-sigma", p.a_sigma, "inverse-gamma shape for sigma_z^2 (default 0.01)");
  cmd->add_option("--b-sigma", p.b_sigma, "inverse-gamma scale for sigma_z^2 (default 0.01)");
}

void add_design_options(CLI::App* cmd, SimDesign& d) {
  cmd->add_option("--classes", d.n_classes, "person classes (default 3)");
  cmd->add_option("--per-class", d.respondents_per_class, "respondents per class (default 100)");
  cmd->add_option("--class-sizes", d.class_sizes, "explicit per-class sizes")->delimiter(',');
  cmd->add_option("--groups", d.n_item_groups, "item groups (default 6)");
  cmd->add_option("--items-per-group", d.items_per_group, "items per group (default 4)");
  cmd->add_option("--p11", d.p11, "P(intended-inside stays inside) (default 0.9)");
  cmd->add_option("--p12", d.p12, "inside-class response probability (default 0.8)");
  cmd->add_option("--p21", d.p21, "P(intended-outside stays outside) (default 0.5)");
  cmd->add_option("--p22", d.p22, "outside-class response probability (default 0.5)");
  cmd->add_option("--rho", d.rho, "surface-dependence copy probability (default 0.8)");
  cmd->add_option("--copy-anchor", d.copy_anchor_offset, "anchor position within group (default 0)");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Doubly latent space joint model for item response matrices"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.get_config_formatter_base()->section("");

  FitOptions fit;
  double fit_sigma_beta = 10.0, fit_sigma_theta = 10.0;
  auto* cmd_fit = app.add_subcommand("fit", "fit the model and emit a run directory");
  cmd_fit->add_option("--data", fit.data_path, "response CSV or binary cache")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_fit->add_option("--out", fit.out_dir, "output run directory")->required();
  cmd_fit->add_option("--seed", fit.sampler.seed, "RNG seed")->required();
  add_sampler_options(cmd_fit, fit.sampler);
  add_prior_options(cmd_fit, fit.prior, fit_sigma_beta, fit_sigma_theta);
  cmd_fit->add_option("--g-person", fit.clustering.g_person, "person clusters (default 3)");
  cmd_fit->add_option("--g-item", fit.clustering.g_item, "item clusters (default 4)");
  cmd_fit->add_option("--k-person", fit.clustering.k_person_candidates,
                      "k-NN candidates for person clustering (default floor(n/2))")
      ->delimiter(',');
  cmd_fit->add_option("--k-item", fit.clustering.k_item_candidates,
                      "k-NN candidates for item clustering (default 2)")
      ->delimiter(',');

  SimulateOptions sim;
  auto* cmd_sim = app.add_subcommand("simulate", "generate a class-structured synthetic dataset");
  cmd_sim->add_option("--out", sim.out_dir, "output directory")->required();
  cmd_sim->add_option("--seed", sim.design.seed, "RNG seed")->required();
  add_design_options(cmd_sim, sim.design);

  StudyOptions study;
  std::vector<double> grid_p11, grid_p12;
  double study_sigma_beta = 10.0, study_sigma_theta = 10.0;
  auto* cmd_study = app.add_subcommand("study", "simulation study vs the mixture-Rasch baseline");
  cmd_study->add_option("--out", study.out_dir, "output directory")->required();
  cmd_study->add_option("--seed", study.study.seed, "RNG seed")->required();
  cmd_study->add_option("--replicates", study.study.replicates, "replicates per condition");
  cmd_study->add_option("--grid-p11", grid_p11, "p11 values (crossed with --grid-p12)")
      ->delimiter(',');
  cmd_study->add_option("--grid-p12", grid_p12, "p12 values")->delimiter(',');
  cmd_study->add_option("--study-workers", study.study.workers, "parallel replicates");
  cmd_study->add_option("--cluster-g", study.study.cluster_G, "clusters to recover (default 3)");
  cmd_study->add_option("--k-person", study.study.person_k_candidates,
                        "k-NN candidates for person clustering")
      ->delimiter(',');
  cmd_study->add_option("--em-starts", study.study.em.n_starts, "EM multi-starts (default 10)");
  add_design_options(cmd_study, study.study.base_design);
  add_sampler_options(cmd_study, study.study.fit);
  add_prior_options(cmd_study, study.study.prior, study_sigma_beta, study_sigma_theta);

  ClusterOptions cluster;
  std::filesystem::path cluster_run_dir, cluster_dist;
  auto* cmd_cluster = app.add_subcommand("cluster", "spectral clustering of a distance matrix");
  auto* run_opt = cmd_cluster->add_option("--run", cluster_run_dir, "completed fit run directory");
  auto* dist_opt = cmd_cluster->add_option("--dist", cluster_dist, "distance matrix CSV");
  run_opt->excludes(dist_opt);
  cmd_cluster->add_option("--out", cluster.out_dir, "output directory")->required();
  cmd_cluster->add_option("--seed", cluster.seed, "RNG seed")->required();
  cmd_cluster->add_option("--g", cluster.n_clusters, "cluster count (default 3)");
  cmd_cluster->add_option("--k", cluster.k_candidates, "k-NN candidates")->delimiter(',');

  BaselineOptions baseline;
  auto* cmd_base = app.add_subcommand("baseline", "fit the mixture-Rasch baseline");
  cmd_base->add_option("--data", baseline.data_path, "response CSV or binary cache")
      ->required()
      ->check(CLI::ExistingFile);
  cmd_base->add_option("--out", baseline.out_dir, "output directory")->required();
  cmd_base->add_option("--seed", baseline.em.seed, "RNG seed")->required();
  cmd_base->add_option("--g", baseline.n_classes, "latent classes (default 3)");
  cmd_base->add_option("--starts", baseline.em.n_starts, "EM multi-starts (default 10)");
  cmd_base->add_option("--quad", baseline.em.quad_points, "Gauss-Hermite nodes (default 21)");

  std::filesystem::path report_dir;
  auto* cmd_report = app.add_subcommand("report", "render report.html for a completed run");
  cmd_report->add_option("--run", report_dir, "completed fit run directory")
      ->required()
      ->check(CLI::ExistingDirectory);

  // let --config (and any top-level flag) appear after the subcommand name
  for (CLI::App* sub : {cmd_fit, cmd_sim, cmd_study, cmd_cluster, cmd_base, cmd_report})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_fit->parsed()) {
    fit.prior.sigma_beta_sq = fit_sigma_beta * fit_sigma_beta;
    fit.prior.sigma_theta_sq = fit_sigma_theta * fit_sigma_theta;
    fit_run(fit);
    std::cout << "run directory: " << fit.out_dir.string() << "\n";
  } else if (cmd_sim->parsed()) {
    simulate_run(sim);
    std::cout << "dataset: " << (sim.out_dir / "data.csv").string() << "\n";
  } else if (cmd_study->parsed()) {
    study.study.prior.sigma_beta_sq = study_sigma_beta * study_sigma_beta;
    study.study.prior.sigma_theta_sq = study_sigma_theta * study_sigma_theta;
    if (!grid_p11.empty() || !grid_p12.empty()) {
      if (grid_p11.empty() || grid_p12.empty())
        throw ValidationError("provide both --grid-p11 and --grid-p12 (they are crossed)");
      for (double a : grid_p11)
        for (double b : grid_p12) study.study.grid.push_back({a, b});
    }
    study_run(study);
    std::cout << "study table: " << (study.out_dir / "table3.csv").string() << "\n";
  } else if (cmd_cluster->parsed()) {
    if (*run_opt) cluster.run_dir = cluster_run_dir;
    if (*dist_opt) cluster.dist_path = cluster_dist;
    cluster_run(cluster);
    std::cout << "clusters: " << cluster.out_dir.string() << "\n";
  } else if (cmd_base->parsed()) {
    baseline_run(baseline);
    std::cout << "baseline: " << baseline.out_dir.string() << "\n";
  } else if (cmd_report->parsed()) {
    report_run(report_dir);
    std::cout << "report: " << (report_dir / "report.html").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ValidationError& e) {
    std::cerr << "error (input): " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceGuardError& e) {
    std::cerr << "error (convergence guard): " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
