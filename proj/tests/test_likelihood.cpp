// Apache License, Version 2.0, refer to LICENSE.txt

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dlsjm/errors.hpp"
#include "dlsjm/joint_evaluator.hpp"
#include "dlsjm/likelihood.hpp"
#include "dlsjm/numeric.hpp"
#include "test_helpers.hpp"

using namespace dlsjm;

TEST_CASE("item positions: averages of correct responders") {
  //  x: item 0 answered by everyone, item 1 by person 2 only
  const ItemResponseMatrix x(3, 2, {1, 0, 1, 0, 1, 1});
  LatentConfiguration z{test::random_positions(3, 2, 5)};
  const ItemPositions w = item_positions(z, x);
  CHECK((w.w.row(0) - z.z.colwise().mean()).norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((w.w.row(1) - z.z.row(2)).norm() == doctest::Approx(0.0).epsilon(1e-12));

  SUBCASE("hand-computed 4x2 toy") {
    const ItemResponseMatrix toy(4, 2, {1, 1, 1, 0, 0, 1, 0, 1});
    LatentConfiguration zz{RowMatrixXd(4, 2)};
    zz.z << 1, 0, 3, 2, -1, 4, 5, 6;
    const ItemPositions ww = item_positions(zz, toy);
    CHECK(ww.w(0, 0) == doctest::Approx(2.0));   // mean of rows 0,1
    CHECK(ww.w(0, 1) == doctest::Approx(1.0));
    CHECK(ww.w(1, 0) == doctest::Approx(5.0 / 3.0));  // mean of rows 0,2,3
    CHECK(ww.w(1, 1) == doctest::Approx(10.0 / 3.0));
  }
  SUBCASE("zero-correct item is a named error") {
    const ItemResponseMatrix bad(2, 2, {1, 0, 1, 0});
    LatentConfiguration zz{test::random_positions(2, 2, 1)};
    CHECK_THROWS_AS(item_positions(zz, bad), DegenerateItemError);
  }
}

TEST_CASE("pair distance") {
  Eigen::RowVectorXd a(2), b(2);
  a << 0, 0;
  b << 3, 4;
  CHECK(pair_distance(a, a) == 0.0);
  CHECK(pair_distance(a, b) == doctest::Approx(5.0).epsilon(1e-15));
  std::mt19937 gen(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    Eigen::RowVectorXd u(3), v(3);
    for (int j = 0; j < 3; ++j) {
      u(j) = nd(gen);
      v(j) = nd(gen);
    }
    double ref = 0.0;
    for (int j = 0; j < 3; ++j) ref += (u(j) - v(j)) * (u(j) - v(j));
    ref = std::sqrt(ref);
    CHECK(pair_distance(u, v) == doctest::Approx(ref).epsilon(1e-14));
    CHECK(pair_distance(u, v) == pair_distance(v, u));
  }
}

TEST_CASE("joint log-likelihood: coincident positions give -(terms) log 2") {
  // All z equal: every distance 0; beta = theta = 0 => every edge prob 1/2.
  const ItemResponseMatrix x(2, 2, {1, 1, 1, 0});
  ModelState st;
  st.beta = Eigen::VectorXd::Zero(2);
  st.theta = Eigen::VectorXd::Zero(2);
  st.sigma_z_sq = 1.0;
  st.z.z = RowMatrixXd::Zero(2, 2);
  // person side: 2 items x 1 pair; item side: 2 persons x 1 pair
  const double expect = -4.0 * std::log(2.0);
  CHECK(joint_log_likelihood(st, x) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("joint log-likelihood matches the enumeration oracle") {
  std::mt19937 gen(31);
  for (int t = 0; t < 25; ++t) {
    const int n = 3 + static_cast<int>(gen() % 4);
    const int p = 2 + static_cast<int>(gen() % 3);
    const ItemResponseMatrix x = test::random_matrix(n, p, gen());
    const ModelState st = test::random_state(x, 2, gen());
    CHECK(std::abs(joint_log_likelihood(st, x) - test::oracle_joint_loglik(st, x)) < 1e-10);
  }
}

TEST_CASE("increasing beta_i with all edges present increases its contribution") {
  const ItemResponseMatrix x(3, 2, std::vector<std::uint8_t>(6, 1));  // all ones: all y = 1
  ModelState st = test::random_state(x, 2, 4);
  double prev = -1e300;
  for (double b : {-2.0, -1.0, 0.0, 1.0, 2.0, 5.0}) {
    st.beta(0) = b;
    const double ll = joint_log_likelihood(st, x);
    CHECK(ll > prev);
    prev = ll;
  }
}

TEST_CASE("edge term probability decreases monotonically with distance") {
  for (double eta0 : {-3.0, 0.0, 2.5}) {
    double prev = 1.0;
    for (double d : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      const double pr = logistic(eta0 - d);
      CHECK(pr < prev);
      prev = pr;
    }
  }
}

TEST_CASE("likelihood is invariant under isometries; prior term shifts as predicted") {
  std::mt19937 gen(17);
  std::normal_distribution<double> nd;
  const ItemResponseMatrix x = test::random_matrix(6, 4, 55);
  const ModelState st = test::random_state(x, 2, 7);
  const double base_ll = joint_log_likelihood(st, x);
  for (int t = 0; t < 40; ++t) {
    const double a = nd(gen);
    Eigen::Matrix2d rot;
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    if (t % 2) rot.col(0) *= -1.0;  // reflection half the time
    Eigen::RowVector2d shift(nd(gen), nd(gen));
    ModelState moved = st;
    moved.z.z = (st.z.z * rot.transpose()).rowwise() + shift;
    CHECK(std::abs(joint_log_likelihood(moved, x) - base_ll) < 1e-9);

    // prior change: -(sum ||Qz+t||^2 - sum ||z||^2) / (2 sigma^2)
    const double predicted =
        -(moved.z.z.squaredNorm() - st.z.z.squaredNorm()) / (2.0 * st.sigma_z_sq);
    PriorConfig prior;
    const double actual = log_prior(moved, prior) - log_prior(st, prior);
    CHECK(std::abs(actual - predicted) < 1e-9);
  }
}

TEST_CASE("log-likelihood finite for extreme logits") {
  const ItemResponseMatrix x(2, 2, {1, 1, 1, 0});
  ModelState st;
  st.beta = Eigen::VectorXd::Constant(2, 700.0);
  st.theta = Eigen::VectorXd::Constant(2, -700.0);
  st.sigma_z_sq = 1.0;
  st.z.z = RowMatrixXd::Zero(2, 2);
  CHECK(std::isfinite(joint_log_likelihood(st, x)));
  st.beta.setConstant(-700.0);
  st.theta.setConstant(700.0);
  CHECK(std::isfinite(joint_log_likelihood(st, x)));
}

TEST_CASE("logpost_beta: grid maximum drifts negative when layer has no edges") {
  // Item 1 answered by exactly one person: no pairs, so the likelihood part
  // of beta_1 is pure -softplus, maximized far negative; with the prior the
  // grid argmax should be clearly below zero.
  const ItemResponseMatrix x(4, 2, {1, 1, 1, 0, 1, 0, 1, 0});
  const ModelState st = test::random_state(x, 2, 9);
  PriorConfig prior;
  double best_b = 0.0, best_v = -1e300;
  for (double b = -30.0; b <= 30.0; b += 0.25) {
    const double v = logpost_beta(1, b, st, x, prior);
    if (v > best_v) {
      best_v = v;
      best_b = b;
    }
  }
  CHECK(best_b < -1.0);
}

TEST_CASE("logpost deltas equal joint posterior deltas (conditional consistency)") {
  std::mt19937 gen(77);
  std::normal_distribution<double> nd;
  PriorConfig prior;
  for (int t = 0; t < 10; ++t) {
    const int n = 4 + static_cast<int>(gen() % 3);
    const int p = 3 + static_cast<int>(gen() % 2);
    const ItemResponseMatrix x = test::random_matrix(n, p, gen());
    const ModelState st = test::random_state(x, 2, gen());

    {
      const int i = static_cast<int>(gen() % p);
      const double bnew = st.beta(i) + nd(gen);
      ModelState moved = st;
      moved.beta(i) = bnew;
      const double lhs = logpost_beta(i, bnew, st, x, prior) - logpost_beta(i, st.beta(i), st, x, prior);
      const double rhs = joint_log_posterior(moved, x, prior) - joint_log_posterior(st, x, prior);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
    {
      const int k = static_cast<int>(gen() % n);
      const double tnew = st.theta(k) + nd(gen);
      ModelState moved = st;
      moved.theta(k) = tnew;
      const double lhs =
          logpost_theta(k, tnew, st, x, prior) - logpost_theta(k, st.theta(k), st, x, prior);
      const double rhs = joint_log_posterior(moved, x, prior) - joint_log_posterior(st, x, prior);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
    {
      const int k = static_cast<int>(gen() % n);
      Eigen::RowVectorXd znew = st.z.z.row(k);
      znew(0) += nd(gen);
      znew(1) += nd(gen);
      ModelState moved = st;
      moved.z.z.row(k) = znew;
      const double lhs = logpost_z(k, znew, st, x, prior) -
                         logpost_z(k, st.z.z.row(k), st, x, prior);
      const double rhs = joint_log_posterior(moved, x, prior) - joint_log_posterior(st, x, prior);
      CHECK(std::abs(lhs - rhs) < 1e-9);
    }
  }
}

TEST_CASE("logpost_theta with empty item layer reduces to prior plus closed form") {
  // Person 3 has total score 1: no item pairs answered, u terms all zero.
  const ItemResponseMatrix x(4, 3, {1, 1, 1, 1, 1, 0, 1, 0, 0, 1, 0, 0});
  const ModelState st = test::random_state(x, 2, 21);
  PriorConfig prior;
  const ItemPositions w = item_positions(st.z, x);
  const double theta_probe = 0.0;
  double expect = -0.5 * std::log(2.0 * M_PI * prior.sigma_theta_sq);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double d = (w.w.row(i) - w.w.row(j)).norm();
      expect += std::log(1.0 - logistic(theta_probe - d)) - 0.0;  // log(1 - sigma(eta))
      expect += 0.0;
    }
  CHECK(logpost_theta(3, theta_probe, st, x, prior) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("sigma_z posterior parameters") {
  PriorConfig prior;  // a = b = 0.01
  SUBCASE("all-zero Z") {
    LatentConfiguration z{RowMatrixXd::Zero(5, 2)};
    const InvGammaParams g = sigma_z_posterior_params(z, prior);
    CHECK(g.shape == doctest::Approx(0.01 + 5.0));
    CHECK(g.scale == doctest::Approx(0.01));
  }
  SUBCASE("n=1 in spirit: single nonzero row") {
    // shape = a + nD/2 with n=2,D=1 rows (minimum n is 2), checked directly:
    LatentConfiguration z{RowMatrixXd(2, 1)};
    z.z << 2.0, 0.0;
    const InvGammaParams g = sigma_z_posterior_params(z, prior);
    CHECK(g.shape == doctest::Approx(0.01 + 1.0));
    CHECK(g.scale == doctest::Approx(0.01 + 2.0));
  }
  SUBCASE("density ratio against prior x likelihood is constant on a grid") {
    const LatentConfiguration z{test::random_positions(4, 2, 3)};
    const InvGammaParams g = sigma_z_posterior_params(z, prior);
    auto log_ig = [](double v, double shape, double scale) {
      return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(v) -
             scale / v;
    };
    auto log_target = [&](double v) {
      // prior(sigma^2) * prod_k N(z_k; 0, sigma^2 I)
      double lp = log_ig(v, prior.a_sigma, prior.b_sigma);
      lp += -0.5 * z.size() * z.dim() * std::log(2.0 * M_PI * v) -
            z.z.squaredNorm() / (2.0 * v);
      return lp;
    };
    const double c0 = log_target(0.5) - log_ig(0.5, g.shape, g.scale);
    for (double v : {0.1, 0.3, 1.0, 2.5, 10.0}) {
      const double c = log_target(v) - log_ig(v, g.shape, g.scale);
      CHECK(c == doctest::Approx(c0).epsilon(1e-10));
    }
  }
}

TEST_CASE("incremental evaluator agrees with the pure functions") {
  std::mt19937 gen(1234);
  std::normal_distribution<double> nd;
  const ItemResponseMatrix x = test::random_matrix(12, 6, 8);
  ModelState st = test::random_state(x, 2, 14);
  JointEvaluator ev(x, st, 2);
  CHECK(std::abs(ev.log_likelihood() - joint_log_likelihood(st, x)) < 1e-10);

  // Fuzz a few hundred accepted moves of every block and re-verify totals.
  for (int t = 0; t < 300; ++t) {
    const int which = static_cast<int>(gen() % 3);
    if (which == 0) {
      const int k = static_cast<int>(gen() % 12);
      Eigen::RowVectorXd znew = ev.latent().row(k);
      znew(0) += 0.3 * nd(gen);
      znew(1) += 0.3 * nd(gen);
      const double before = ev.log_likelihood();
      const double delta = ev.z_move_delta(k, znew);
      ev.accept_z();
      CHECK(std::abs(ev.log_likelihood() - (before + delta)) < 1e-8);
    } else if (which == 1) {
      const int i = static_cast<int>(gen() % 6);
      ev.begin_beta_phase();
      const double bnew = ev.beta()(i) + 0.3 * nd(gen);
      const double before = ev.log_likelihood();
      const double delta = ev.beta_move_delta(i, bnew);
      ev.accept_beta();
      CHECK(std::abs(ev.log_likelihood() - (before + delta)) < 1e-8);
    } else {
      const int k = static_cast<int>(gen() % 12);
      ev.begin_theta_phase();
      const double tnew = ev.theta()(k) + 0.3 * nd(gen);
      const double before = ev.log_likelihood();
      const double delta = ev.theta_move_delta(k, tnew);
      ev.accept_theta();
      CHECK(std::abs(ev.log_likelihood() - (before + delta)) < 1e-8);
    }
  }
  const ModelState end = ev.state();
  CHECK(std::abs(ev.log_likelihood() - joint_log_likelihood(end, x)) < 1e-9);
}
