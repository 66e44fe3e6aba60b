// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/mixture_rasch.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"
#include "dlsjm/numeric.hpp"
#include "dlsjm/rng.hpp"

namespace dlsjm {

void MixtureRaschConfig::validate() const {
  if (quad_points < 2) throw ValidationError("need at least 2 quadrature nodes");
  if (max_iter < 1 || n_starts < 1) throw ValidationError("max_iter and n_starts must be positive");
  if (!(rel_tol > 0.0)) throw ValidationError("rel_tol must be positive");
}

void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    const double b = std::sqrt(j / 2.0);
    jac(j, j - 1) = b;
    jac(j - 1, j) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  if (eig.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolve failed");
  nodes = eig.eigenvalues();
  weights.resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int q = 0; q < n; ++q) {
    const double v0 = eig.eigenvectors()(0, q);
    weights(q) = sqrt_pi * v0 * v0;
  }
}

namespace {

constexpr double kSigmaFloor = 1e-3;

struct EmWork {
  int n, p, G, Q;
  const ItemResponseMatrix* x;
  Eigen::VectorXd log_node_w;  // log(w_q / sqrt(pi))
  Eigen::VectorXd nodes;

  // E-step accumulators
  Eigen::MatrixXd R;                      // G x Q node masses
  std::vector<Eigen::MatrixXd> n1;        // per class: p x Q expected correct counts
};

// theta_gq = mu_g + sqrt(2) sigma_g t_q
Eigen::VectorXd thetas_of(const EmWork& w, double mu, double sigma) {
  return mu + std::numbers::sqrt2 * sigma * w.nodes.array();
}

// Expected complete-data log-likelihood piece for class g (up to the pi and
// node-weight terms, which the (beta, mu, sigma) update cannot change).
double q_class(const EmWork& w, const Eigen::VectorXd& beta_g, double mu, double sigma, int g) {
  const Eigen::VectorXd th = thetas_of(w, mu, sigma);
  double q = 0.0;
  for (int qi = 0; qi < w.Q; ++qi) {
    for (int i = 0; i < w.p; ++i) {
      const double eta = beta_g(i) + th(qi);
      q += w.n1[g](i, qi) * eta - w.R(g, qi) * softplus(eta);
    }
  }
  return q;
}

double q_item(const EmWork& w, double beta_gi, double mu, double sigma, int g, int i) {
  const Eigen::VectorXd th = thetas_of(w, mu, sigma);
  double q = 0.0;
  for (int qi = 0; qi < w.Q; ++qi) {
    const double eta = beta_gi + th(qi);
    q += w.n1[g](i, qi) * eta - w.R(g, qi) * softplus(eta);
  }
  return q;
}

// One EM run from the given start parameters. Returns the trace; params are
// updated in place. Monotonicity holds by construction (coordinate Newton
// steps are kept only when the class Q value does not decrease).
std::vector<double> em_run(EmWork& w, Eigen::VectorXd& pi, Eigen::MatrixXd& beta,
                           Eigen::VectorXd& mu, Eigen::VectorXd& sigma,
                           const MixtureRaschConfig& cfg) {
  const int n = w.n, p = w.p, G = w.G, Q = w.Q;
  std::vector<double> trace;
  Eigen::MatrixXd ll_gq(G, Q);     // per-class-node pattern terms
  Eigen::MatrixXd A(G, Q);         // sum_i softplus(eta_giq)
  Eigen::MatrixXd xb(n, G);        // sum_i x_ki beta_gi
  Eigen::MatrixXd r_gq(G, Q);

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    // E-step
    Eigen::MatrixXd theta(G, Q);
    for (int g = 0; g < G; ++g) theta.row(g) = thetas_of(w, mu(g), sigma(g)).transpose();
    for (int g = 0; g < G; ++g)
      for (int qi = 0; qi < Q; ++qi) {
        double a = 0.0;
        for (int i = 0; i < p; ++i) a += softplus(beta(g, i) + theta(g, qi));
        A(g, qi) = a;
      }
    for (int k = 0; k < n; ++k)
      for (int g = 0; g < G; ++g) {
        double v = 0.0;
        for (int i : w.x->items_of_person(k)) v += beta(g, i);
        xb(k, g) = v;
      }

    double ll = 0.0;
    w.R.setZero(G, Q);
    for (int g = 0; g < G; ++g) w.n1[g].setZero(p, Q);
    Eigen::VectorXd class_mass = Eigen::VectorXd::Zero(G);

    for (int k = 0; k < n; ++k) {
      const double sk = w.x->person_totals()[k];
      double mx = -std::numeric_limits<double>::infinity();
      for (int g = 0; g < G; ++g)
        for (int qi = 0; qi < Q; ++qi) {
          const double v = std::log(pi(g)) + w.log_node_w(qi) + xb(k, g) + sk * theta(g, qi) -
                           A(g, qi);
          r_gq(g, qi) = v;
          mx = std::max(mx, v);
        }
      double sum = 0.0;
      for (int g = 0; g < G; ++g)
        for (int qi = 0; qi < Q; ++qi) sum += std::exp(r_gq(g, qi) - mx);
      ll += mx + std::log(sum);
      const double inv = 1.0 / sum;
      for (int g = 0; g < G; ++g)
        for (int qi = 0; qi < Q; ++qi) {
          const double r = std::exp(r_gq(g, qi) - mx) * inv;
          w.R(g, qi) += r;
          class_mass(g) += r;
          if (r > 0.0)
            for (int i : w.x->items_of_person(k)) w.n1[g](i, qi) += r;
        }
    }
    trace.push_back(ll);
    if (ll + 1e-10 * (std::abs(ll) + 1.0) < prev_ll)
      throw NumericalError("EM log-likelihood decreased");

    // Convergence on relative change, checked before the M-step so the trace
    // tail always matches the returned parameters.
    if (iter > 0 && std::abs(ll - prev_ll) < cfg.rel_tol * (std::abs(prev_ll) + 1.0)) break;
    if (iter >= cfg.max_iter) break;
    prev_ll = ll;

    // M-step: closed-form weights, then per-class coordinate Newton with
    // step halving (never accept a Q decrease).
    pi = class_mass / static_cast<double>(n);
    for (int g = 0; g < G; ++g) pi(g) = std::max(pi(g), 1e-300);
    pi /= pi.sum();

    for (int g = 0; g < G; ++g) {
      for (int pass = 0; pass < 2; ++pass) {
        // beta coordinates
        for (int i = 0; i < p; ++i) {
          const Eigen::VectorXd th = thetas_of(w, mu(g), sigma(g));
          double grad = 0.0, hess = 0.0;
          for (int qi = 0; qi < Q; ++qi) {
            const double s = logistic(beta(g, i) + th(qi));
            grad += w.n1[g](i, qi) - w.R(g, qi) * s;
            hess -= w.R(g, qi) * s * (1.0 - s);
          }
          if (hess >= -1e-12) continue;
          double step = -grad / hess;
          step = std::clamp(step, -5.0, 5.0);
          const double q0 = q_item(w, beta(g, i), mu(g), sigma(g), g, i);
          for (int h = 0; h < 30; ++h) {
            if (q_item(w, beta(g, i) + step, mu(g), sigma(g), g, i) >= q0) {
              beta(g, i) += step;
              break;
            }
            step *= 0.5;
          }
        }
        // mu
        {
          const Eigen::VectorXd th = thetas_of(w, mu(g), sigma(g));
          double grad = 0.0, hess = 0.0;
          for (int qi = 0; qi < Q; ++qi)
            for (int i = 0; i < p; ++i) {
              const double s = logistic(beta(g, i) + th(qi));
              grad += w.n1[g](i, qi) - w.R(g, qi) * s;
              hess -= w.R(g, qi) * s * (1.0 - s);
            }
          if (hess < -1e-12) {
            double step = std::clamp(-grad / hess, -5.0, 5.0);
            const double q0 = q_class(w, beta.row(g), mu(g), sigma(g), g);
            for (int h = 0; h < 30; ++h) {
              if (q_class(w, beta.row(g), mu(g) + step, sigma(g), g) >= q0) {
                mu(g) += step;
                break;
              }
              step *= 0.5;
            }
          }
        }
        // sigma through the linear coefficient a = sqrt(2) sigma
        {
          const Eigen::VectorXd th = thetas_of(w, mu(g), sigma(g));
          double grad = 0.0, hess = 0.0;
          for (int qi = 0; qi < Q; ++qi) {
            const double t = w.nodes(qi);
            for (int i = 0; i < p; ++i) {
              const double s = logistic(beta(g, i) + th(qi));
              grad += t * (w.n1[g](i, qi) - w.R(g, qi) * s);
              hess -= t * t * w.R(g, qi) * s * (1.0 - s);
            }
          }
          if (hess < -1e-12) {
            double step = std::clamp(-grad / hess, -5.0, 5.0) / std::numbers::sqrt2;
            const double q0 = q_class(w, beta.row(g), mu(g), sigma(g), g);
            for (int h = 0; h < 30; ++h) {
              const double cand = sigma(g) + step;
              if (cand > kSigmaFloor &&
                  q_class(w, beta.row(g), mu(g), cand, g) >= q0) {
                sigma(g) += step;
                break;
              }
              step *= 0.5;
            }
          }
        }
      }
    }
  }
  return trace;
}

}  // namespace

MixtureRaschModel em_fit(const ItemResponseMatrix& x, int n_classes,
                         const MixtureRaschConfig& config) {
  config.validate();
  if (n_classes < 1) throw ValidationError("need at least one class");
  const int n = x.n_persons(), p = x.n_items();

  EmWork w;
  w.n = n;
  w.p = p;
  w.G = n_classes;
  w.Q = config.quad_points;
  w.x = &x;
  Eigen::VectorXd gh_w;
  gauss_hermite(config.quad_points, w.nodes, gh_w);
  w.log_node_w = (gh_w.array() / std::sqrt(std::numbers::pi)).log();
  w.n1.assign(n_classes, Eigen::MatrixXd());

  // Data-anchored starting values with per-start jitter.
  Eigen::VectorXd beta0(p);
  for (int i = 0; i < p; ++i) {
    double m = static_cast<double>(x.item_totals()[i]) / n;
    m = std::clamp(m, 0.5 / n, 1.0 - 0.5 / n);
    beta0(i) = std::log(m / (1.0 - m));
  }

  MixtureRaschModel best;
  best.log_lik = -std::numeric_limits<double>::infinity();
  int restarts = 0;
  const double degenerate_floor = 1.0 / (10.0 * n);

  for (int start = 0; start < config.n_starts; ++start) {
    std::uint64_t start_seed = Rng::derive(config.seed, 0x454d, start);
    for (int attempt = 0;; ++attempt) {
      Rng rng(start_seed);
      Eigen::VectorXd pi = Eigen::VectorXd::Constant(n_classes, 1.0 / n_classes);
      Eigen::MatrixXd beta(n_classes, p);
      Eigen::VectorXd mu(n_classes), sigma(n_classes);
      for (int g = 0; g < n_classes; ++g) {
        for (int i = 0; i < p; ++i) beta(g, i) = beta0(i) + 0.3 * rng.normal();
        mu(g) = n_classes == 1 ? 0.0 : rng.normal();
        sigma(g) = 1.0;
      }

      std::vector<double> trace = em_run(w, pi, beta, mu, sigma, config);

      const bool degenerate = (pi.array() < degenerate_floor).any();
      if (degenerate && restarts < config.max_restarts) {
        ++restarts;
        std::cerr << "em_fit: degenerate class weight, restarting start " << start
                  << " (attempt " << attempt + 1 << ")\n";
        start_seed = Rng::derive(start_seed, 0xdead, attempt);
        continue;
      }
      if (!degenerate && !trace.empty() && trace.back() > best.log_lik) {
        best.n_classes = n_classes;
        best.weights = pi;
        best.beta = beta;
        best.mu = mu;
        best.sigma = sigma;
        best.nodes = w.nodes;
        best.node_weights = gh_w / std::sqrt(std::numbers::pi);
        best.log_lik = trace.back();
        best.loglik_trace = std::move(trace);
      }
      break;
    }
  }
  if (!std::isfinite(best.log_lik))
    throw ConvergenceGuardError("em_fit: every start ended in a degenerate class");
  best.restarts_used = restarts;

  // Identification: center item easiness within each class, absorb into mu.
  for (int g = 0; g < n_classes; ++g) {
    const double m = best.beta.row(g).mean();
    best.beta.row(g).array() -= m;
    best.mu(g) += m;
  }
  return best;
}

double observed_log_lik(const MixtureRaschModel& model, const ItemResponseMatrix& x) {
  const int n = x.n_persons(), p = x.n_items();
  const int G = model.n_classes, Q = static_cast<int>(model.nodes.size());
  double ll = 0.0;
  Eigen::MatrixXd A(G, Q), theta(G, Q);
  for (int g = 0; g < G; ++g)
    for (int qi = 0; qi < Q; ++qi) {
      theta(g, qi) = model.mu(g) + std::numbers::sqrt2 * model.sigma(g) * model.nodes(qi);
      double a = 0.0;
      for (int i = 0; i < p; ++i) a += softplus(model.beta(g, i) + theta(g, qi));
      A(g, qi) = a;
    }
  for (int k = 0; k < n; ++k) {
    const double sk = x.person_totals()[k];
    double mx = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd v(G, Q);
    for (int g = 0; g < G; ++g) {
      double xb = 0.0;
      for (int i : x.items_of_person(k)) xb += model.beta(g, i);
      for (int qi = 0; qi < Q; ++qi) {
        v(g, qi) = std::log(model.weights(g)) + std::log(model.node_weights(qi)) + xb +
                   sk * theta(g, qi) - A(g, qi);
        mx = std::max(mx, v(g, qi));
      }
    }
    double sum = 0.0;
    for (int g = 0; g < G; ++g)
      for (int qi = 0; qi < Q; ++qi) sum += std::exp(v(g, qi) - mx);
    ll += mx + std::log(sum);
  }
  return ll;
}

Eigen::MatrixXd class_posteriors(const MixtureRaschModel& model, const ItemResponseMatrix& x) {
  const int n = x.n_persons(), p = x.n_items();
  const int G = model.n_classes, Q = static_cast<int>(model.nodes.size());
  Eigen::MatrixXd post(n, G);
  Eigen::MatrixXd A(G, Q), theta(G, Q);
  for (int g = 0; g < G; ++g)
    for (int qi = 0; qi < Q; ++qi) {
      theta(g, qi) = model.mu(g) + std::numbers::sqrt2 * model.sigma(g) * model.nodes(qi);
      double a = 0.0;
      for (int i = 0; i < p; ++i) a += softplus(model.beta(g, i) + theta(g, qi));
      A(g, qi) = a;
    }
  for (int k = 0; k < n; ++k) {
    const double sk = x.person_totals()[k];
    Eigen::VectorXd lg(G);
    for (int g = 0; g < G; ++g) {
      double xb = 0.0;
      for (int i : x.items_of_person(k)) xb += model.beta(g, i);
      double mx = -std::numeric_limits<double>::infinity();
      Eigen::VectorXd v(Q);
      for (int qi = 0; qi < Q; ++qi) {
        v(qi) = std::log(model.node_weights(qi)) + xb + sk * theta(g, qi) - A(g, qi);
        mx = std::max(mx, v(qi));
      }
      double sum = 0.0;
      for (int qi = 0; qi < Q; ++qi) sum += std::exp(v(qi) - mx);
      lg(g) = std::log(model.weights(g)) + mx + std::log(sum);
    }
    const double mx = lg.maxCoeff();
    double sum = 0.0;
    for (int g = 0; g < G; ++g) sum += std::exp(lg(g) - mx);
    for (int g = 0; g < G; ++g) post(k, g) = std::exp(lg(g) - mx) / sum;
  }
  return post;
}

ClusterAssignment classify_map(const MixtureRaschModel& model, const ItemResponseMatrix& x) {
  const Eigen::MatrixXd post = class_posteriors(model, x);
  ClusterAssignment out;
  out.n_clusters = model.n_classes;
  out.labels.resize(x.n_persons());
  for (int k = 0; k < x.n_persons(); ++k) {
    int bestg = 0;
    for (int g = 1; g < model.n_classes; ++g)
      if (post(k, g) > post(k, bestg)) bestg = g;
    out.labels[k] = bestg;
  }
  return out;
}

double pattern_probability(const MixtureRaschModel& model, const std::vector<std::uint8_t>& pattern) {
  const int p = static_cast<int>(pattern.size());
  const int G = model.n_classes, Q = static_cast<int>(model.nodes.size());
  double prob = 0.0;
  for (int g = 0; g < G; ++g)
    for (int qi = 0; qi < Q; ++qi) {
      const double th = model.mu(g) + std::numbers::sqrt2 * model.sigma(g) * model.nodes(qi);
      double lp = 0.0;
      for (int i = 0; i < p; ++i) {
        const double eta = model.beta(g, i) + th;
        lp += pattern[i] ? eta - softplus(eta) : -softplus(eta);
      }
      prob += model.weights(g) * model.node_weights(qi) * std::exp(lp);
    }
  return prob;
}

void MixtureRaschModel::save_json(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["n_classes"] = n_classes;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  std::vector<std::vector<double>> b(n_classes);
  for (int g = 0; g < n_classes; ++g)
    b[g] = std::vector<double>(beta.row(g).begin(), beta.row(g).end());
  j["beta"] = b;
  j["mu"] = std::vector<double>(mu.data(), mu.data() + mu.size());
  j["sigma"] = std::vector<double>(sigma.data(), sigma.data() + sigma.size());
  j["quad_points"] = static_cast<int>(nodes.size());
  j["log_lik"] = log_lik;
  j["em_iterations"] = loglik_trace.size();
  j["restarts_used"] = restarts_used;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace dlsjm
