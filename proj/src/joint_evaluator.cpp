// Apache License, Version 2.0, refer to LICENSE.txt

#include "dlsjm/joint_evaluator.hpp"

#include <cassert>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dlsjm/errors.hpp"
#include "dlsjm/numeric.hpp"

namespace dlsjm {

JointEvaluator::JointEvaluator(const ItemResponseMatrix& x, const ModelState& init, int workers)
    : x_(&x),
      n_(x.n_persons()),
      p_(x.n_items()),
      D_(init.z.dim()),
      workers_(workers < 1 ? 1 : workers),
      beta_(init.beta),
      theta_(init.theta),
      sigma_z_sq_(init.sigma_z_sq),
      Z_(init.z.z) {
  validate_state(init, x);
  x.require_no_degenerate_items();

  inv_c_.resize(p_);
  for (int i = 0; i < p_; ++i) inv_c_(i) = 1.0 / x.item_totals()[i];

  const long npairs = static_cast<long>(n_) * (n_ - 1) / 2;
  pk_.reserve(npairs);
  pl_.reserve(npairs);
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) {
      pk_.push_back(k);
      pl_.push_back(l);
    }
  packed_dz_.resize(npairs);
  packed_dw_.resize(static_cast<long>(p_) * (p_ - 1) / 2);
  spdelta_.resize(npairs);
  spdelta_theta_.resize(packed_dw_.size());

  dnew_.resize(n_);
  newP_.resize(n_);
  wnew_.resize(p_, D_);
  dwnew_.resize(static_cast<long>(p_) * (p_ - 1) / 2);
  newQ_.resize(dwnew_.size());
  zpairs_.reserve(dwnew_.size());
  in_items_.assign(p_, 0);

  rebuild();
}

ModelState JointEvaluator::state() const {
  return ModelState{beta_, theta_, sigma_z_sq_, LatentConfiguration{Z_}};
}

void JointEvaluator::rebuild() {
  W_ = item_positions(LatentConfiguration{Z_}, *x_).w;
  Dz_ = pairwise_distances(Z_);
  Dw_ = pairwise_distances(W_);

  mP_ = Eigen::MatrixXi::Zero(n_, n_);
  bP_ = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < p_; ++i) {
    const auto& c = x_->persons_of_item(i);
    for (std::size_t a = 0; a < c.size(); ++a)
      for (std::size_t b = a + 1; b < c.size(); ++b) {
        mP_(c[a], c[b]) += 1;
        bP_(c[a], c[b]) += beta_(i);
      }
  }
  mI_ = Eigen::MatrixXi::Zero(p_, p_);
  tI_ = Eigen::MatrixXd::Zero(p_, p_);
  for (int k = 0; k < n_; ++k) {
    const auto& s = x_->items_of_person(k);
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = a + 1; b < s.size(); ++b) {
        mI_(s[a], s[b]) += 1;
        tI_(s[a], s[b]) += theta_(k);
      }
  }

  const Eigen::ArrayXd beta_arr = beta_.array();
  const Eigen::ArrayXd theta_arr = theta_.array();
  P_ = Eigen::MatrixXd::Zero(n_, n_);
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) {
      const double d = Dz_(k, l);
      P_(k, l) = bP_(k, l) - mP_(k, l) * d - softplus_sum(beta_arr - d);
    }
  Q_ = Eigen::MatrixXd::Zero(p_, p_);
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) {
      const double d = Dw_(i, j);
      Q_(i, j) = tI_(i, j) - mI_(i, j) * d - softplus_sum(theta_arr - d);
    }
}

double JointEvaluator::log_likelihood() const {
  double ll = 0.0;
  for (int k = 0; k < n_; ++k)
    for (int l = k + 1; l < n_; ++l) ll += P_(k, l);
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) ll += Q_(i, j);
  return ll;
}

double JointEvaluator::log_posterior(const PriorConfig& prior) const {
  return log_likelihood() + log_prior(state(), prior);
}

double JointEvaluator::z_move_delta(int k, const Eigen::RowVectorXd& znew) {
  zk_ = k;
  znew_ = znew;
  const Eigen::ArrayXd beta_arr = beta_.array();
  const Eigen::ArrayXd theta_arr = theta_.array();

  dnew_ = (Z_.rowwise() - znew).rowwise().norm();

#pragma omp parallel for num_threads(workers_) schedule(static)
  for (int l = 0; l < n_; ++l) {
    if (l == k) {
      newP_(l) = 0.0;
      continue;
    }
    const double d = dnew_(l);
    const int a = k < l ? k : l, b = k < l ? l : k;
    newP_(l) = bP_(a, b) - mP_(a, b) * d - softplus_sum(beta_arr - d);
  }
  double delta = 0.0;
  for (int l = 0; l < n_; ++l)
    if (l != k) delta += newP_(l) - pairP(k, l);

  // Item side: only w_i with x_ki = 1 move.
  const auto& items = x_->items_of_person(k);
  for (int i : items) {
    in_items_[i] = 1;
    wnew_.row(i) = W_.row(i) + (znew - Z_.row(k)) * inv_c_(i);
  }
  zpairs_.clear();
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j)
      if (in_items_[i] || in_items_[j]) zpairs_.push_back({i, j});

  const int m = static_cast<int>(zpairs_.size());
  for (int t = 0; t < m; ++t) {
    const auto [i, j] = zpairs_[t];
    dwnew_(t) = ((in_items_[i] ? wnew_.row(i) : W_.row(i)) -
                 (in_items_[j] ? wnew_.row(j) : W_.row(j)))
                    .norm();
  }
  for (int i : items) in_items_[i] = 0;

#pragma omp parallel for num_threads(workers_) schedule(static)
  for (int t = 0; t < m; ++t) {
    const auto [i, j] = zpairs_[t];
    const double d = dwnew_(t);
    newQ_(t) = tI_(i, j) - mI_(i, j) * d - softplus_sum(theta_arr - d);
  }
  for (int t = 0; t < m; ++t) delta += newQ_(t) - Q_(zpairs_[t].first, zpairs_[t].second);
  return delta;
}

void JointEvaluator::accept_z() {
  assert(zk_ >= 0);
  const int k = zk_;
  Z_.row(k) = znew_;
  for (int l = 0; l < n_; ++l) {
    if (l == k) continue;
    Dz_(k, l) = Dz_(l, k) = dnew_(l);
    if (k < l)
      P_(k, l) = newP_(l);
    else
      P_(l, k) = newP_(l);
  }
  for (int i : x_->items_of_person(k)) W_.row(i) = wnew_.row(i);
  for (std::size_t t = 0; t < zpairs_.size(); ++t) {
    const auto [i, j] = zpairs_[t];
    Dw_(i, j) = Dw_(j, i) = dwnew_(static_cast<long>(t));
    Q_(i, j) = newQ_(static_cast<long>(t));
  }
  zk_ = -1;
}

void JointEvaluator::begin_beta_phase() {
  const long npairs = packed_dz_.size();
  for (long idx = 0; idx < npairs; ++idx) packed_dz_(idx) = Dz_(pk_[idx], pl_[idx]);
}

double JointEvaluator::beta_move_delta(int i, double bnew) {
  bi_ = i;
  bnew_ = bnew;
  const double bold = beta_(i);
  const long npairs = packed_dz_.size();

#pragma omp parallel num_threads(workers_)
  {
#ifdef _OPENMP
    const int t = omp_get_thread_num();
    const int nt = omp_get_num_threads();
#else
    const int t = 0, nt = 1;
#endif
    const long lo = npairs * t / nt;
    const long len = npairs * (t + 1) / nt - lo;
    if (len > 0) {
      auto d = packed_dz_.segment(lo, len);
      auto out = spdelta_.segment(lo, len);
      // sp(bold - d) - sp(bnew - d), batched
      out = ((-(bold - d).abs()).exp() + 1.0).log() + (bold - d).max(0.0) -
            (((-(bnew - d).abs()).exp() + 1.0).log() + (bnew - d).max(0.0));
    }
  }
  const long c = x_->item_totals()[i];
  return (bnew - bold) * (c * (c - 1) / 2) + spdelta_.sum();
}

void JointEvaluator::accept_beta() {
  assert(bi_ >= 0);
  const int i = bi_;
  const double db = bnew_ - beta_(i);
  beta_(i) = bnew_;
  const long npairs = packed_dz_.size();
  for (long idx = 0; idx < npairs; ++idx) P_(pk_[idx], pl_[idx]) += spdelta_(idx);
  const auto& c = x_->persons_of_item(i);
  for (std::size_t a = 0; a < c.size(); ++a)
    for (std::size_t b = a + 1; b < c.size(); ++b) {
      P_(c[a], c[b]) += db;
      bP_(c[a], c[b]) += db;
    }
  bi_ = -1;
}

void JointEvaluator::begin_theta_phase() {
  long idx = 0;
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) packed_dw_(idx++) = Dw_(i, j);
}

double JointEvaluator::theta_move_delta(int k, double tnew) {
  tk_ = k;
  tnew_ = tnew;
  const double told = theta_(k);
  const auto& d = packed_dw_;
  spdelta_theta_ = ((-(told - d).abs()).exp() + 1.0).log() + (told - d).max(0.0) -
                   (((-(tnew - d).abs()).exp() + 1.0).log() + (tnew - d).max(0.0));
  const long s = x_->person_totals()[k];
  return (tnew - told) * (s * (s - 1) / 2) + spdelta_theta_.sum();
}

void JointEvaluator::accept_theta() {
  assert(tk_ >= 0);
  const int k = tk_;
  const double dt = tnew_ - theta_(k);
  theta_(k) = tnew_;
  long idx = 0;
  for (int i = 0; i < p_; ++i)
    for (int j = i + 1; j < p_; ++j) Q_(i, j) += spdelta_theta_(idx++);
  const auto& s = x_->items_of_person(k);
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b) {
      Q_(s[a], s[b]) += dt;
      tI_(s[a], s[b]) += dt;
    }
  tk_ = -1;
}

}  // namespace dlsjm
