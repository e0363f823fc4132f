#pragma once

// Deep UCB policies: a reward network and a variance network, both shared
// across arms (each arm is told apart only by its own context vector).
//
// Deep UCB2 scores an arm as
//     reward_net(c) + sqrt(max(variance_net(c), 0) / t)
// and retrains both networks on the whole history every `train_every`
// rounds: the reward net on (context -> reward) with MSE, the variance net
// on (context -> squared residual) with the configured loss (L1 by default).
//
// Deep UCB1 pulls arms round-robin for the first J*N rounds, then scores
//     E_R + sqrt((2 max(E_V, 0) + 2 ln t) / sqrt(n_arm)) + eps_arm
// where E_R / E_V are means over an ensemble of W = ceil(sqrt(t)) networks,
// member i trained only on the i-th contiguous slice of rounds.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "deepucb/policies/policy.hpp"

namespace deepucb {

/// Deep UCB2 arm score. Negative variance predictions are clamped to zero.
inline double deep_ucb2_score(double reward_pred, double variance_pred, std::size_t t) {
  if (t < 1) throw std::invalid_argument("deep_ucb2_score: t must be >= 1");
  return reward_pred + std::sqrt(std::max(variance_pred, 0.0) / static_cast<double>(t));
}

inline double deep_ucb1_bonus(double variance_pred, std::size_t t, std::size_t n_arm) {
  if (t < 1) throw std::invalid_argument("deep_ucb1_bonus: t must be >= 1");
  if (n_arm < 1) throw std::invalid_argument("deep_ucb1_bonus: arm has never been pulled");
  const double numer = 2.0 * std::max(variance_pred, 0.0) + 2.0 * std::log(static_cast<double>(t));
  return std::sqrt(numer / std::sqrt(static_cast<double>(n_arm)));
}

/// Deep UCB1 arm score for ensemble means, round t (may be fractional in
/// tests), pull count n_arm and per-arm bonus eps_arm.
inline double deep_ucb1_score(double reward_pred, double variance_pred, double t, std::size_t n_arm, double eps_arm) {
  if (!(t >= 1.0)) throw std::invalid_argument("deep_ucb1_score: t must be >= 1");
  if (n_arm < 1) throw std::invalid_argument("deep_ucb1_score: arm has never been pulled");
  const double numer = 2.0 * std::max(variance_pred, 0.0) + 2.0 * std::log(t);
  return reward_pred + std::sqrt(numer / std::sqrt(static_cast<double>(n_arm))) + eps_arm;
}

/// ceil(sqrt(t)) computed exactly in integers.
inline std::size_t ceil_sqrt(std::size_t t) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(t)));
  while (r * r < t) ++r;
  while (r > 0 && (r - 1) * (r - 1) >= t) --r;
  return r;
}

/// Disjoint 1-based round ranges [lo, hi] covering [1, t], one per ensemble
/// member: slice i = [floor((i-1) t / W) + 1, floor(i t / W)].
inline std::vector<std::pair<std::size_t, std::size_t>> ensemble_slices(std::size_t t, std::size_t w) {
  if (w < 1 || w > t) throw std::invalid_argument("ensemble_slices: need 1 <= W <= t");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(w);
  for (std::size_t i = 1; i <= w; ++i) out.emplace_back((i - 1) * t / w + 1, i * t / w);
  return out;
}

/// Arm chosen in slot j (0-based) of exploration round t (1-based):
/// ((floor((t-1)/J) + j) mod N).
inline std::size_t exploration_arm(std::size_t t, std::size_t j, std::size_t repetitions, std::size_t n_arms) {
  return ((t - 1) / repetitions + j) % n_arms;
}

struct DeepUcb2Config {
  NetworkConfig net{};
  std::size_t train_every = 20;
  nn::LossKind variance_loss = nn::LossKind::L1;

  bool operator==(const DeepUcb2Config&) const = default;
};

class DeepUcb2 : public Policy {
 public:
  DeepUcb2(std::size_t n_arms, std::size_t context_dim, DeepUcb2Config cfg, std::uint64_t seed)
      : Policy("deep_ucb2", n_arms, context_dim),
        cfg_(cfg),
        seed_(seed),
        reward_net_(context_dim, cfg.net.hidden_dim, 1, cfg.net.activation, derive_seed(seed, 1)),
        variance_net_(context_dim, cfg.net.hidden_dim, 1, cfg.net.activation, derive_seed(seed, 2)),
        history_(context_dim) {
    cfg_.net.schedule.validate();
  }

  double score(const Eigen::VectorXd& context, std::size_t t) const {
    return deep_ucb2_score(reward_net_.forward(context)(0), variance_net_.forward(context)(0), t);
  }

  Eigen::VectorXd scores(const Contexts& contexts, std::size_t t) const {
    if (t < 1) throw std::invalid_argument("deep_ucb2: t must be >= 1");
    const Eigen::RowVectorXd r = reward_net_.forward_batch(contexts);
    const Eigen::RowVectorXd v = variance_net_.forward_batch(contexts);
    Eigen::VectorXd s(contexts.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = deep_ucb2_score(r(i), v(i), t);
    return s;
  }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    return select_top_k(scores(contexts, t), k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t t) override {
    check_update_args(contexts, chosen, rewards);
    // Networks are unchanged since select(), so this is the selection-time prediction.
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const Eigen::VectorXd x = contexts.col(static_cast<Eigen::Index>(chosen[j]));
      const double residual = rewards[j] - reward_net_.forward(x)(0);
      history_.add(t, chosen[j], x, rewards[j], residual * residual);
    }
    if (is_training_round(t, cfg_.train_every) && history_.size() > 0) {
      nn::train_in_place(reward_net_, history_.dataset(false), nn::LossKind::MSE, cfg_.net.schedule,
                         derive_seed(seed_, t, 1));
      nn::train_in_place(variance_net_, history_.dataset(true), cfg_.variance_loss, cfg_.net.schedule,
                         derive_seed(seed_, t, 2));
    }
  }

  const nn::Mlp& reward_net() const { return reward_net_; }
  const nn::Mlp& variance_net() const { return variance_net_; }
  nn::Mlp& reward_net() { return reward_net_; }
  nn::Mlp& variance_net() { return variance_net_; }
  const SampleBuffer& history() const { return history_; }
  const DeepUcb2Config& config() const { return cfg_; }

  void save(std::ostream& os) const override {
    save_header(os);
    write_section(os, "reward_net");
    reward_net_.save(os);
    write_section(os, "variance_net");
    variance_net_.save(os);
    write_section(os, "history");
    history_.save(os);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_section(is, "reward_net");
    reward_net_ = nn::Mlp::load(is);
    read_section(is, "variance_net");
    variance_net_ = nn::Mlp::load(is);
    read_section(is, "history");
    history_.load(is);
  }

 private:
  DeepUcb2Config cfg_;
  std::uint64_t seed_;
  nn::Mlp reward_net_;
  nn::Mlp variance_net_;
  SampleBuffer history_;
};

/// How the per-arm bonus estimates the spread of an arm's mean reward.
///   Predicted: max - min of the reward ensemble over the arm's past contexts,
///              refreshed at every training event.
///   Observed:  max - min of the arm's observed (noisy) rewards.
enum class ArmRange { Predicted, Observed };

inline std::string to_string(ArmRange r) { return r == ArmRange::Predicted ? "predicted" : "observed"; }

inline ArmRange parse_arm_range(const std::string& s) {
  if (s == "predicted") return ArmRange::Predicted;
  if (s == "observed") return ArmRange::Observed;
  throw std::invalid_argument("unknown arm range '" + s + "' (expected predicted or observed)");
}

struct DeepUcb1Config {
  NetworkConfig net{};
  std::size_t train_every = 20;
  std::size_t exploration_repetitions = 3;  // J
  double epsilon = 0.01;                    // added to the per-arm reward range
  nn::LossKind variance_loss = nn::LossKind::MSE;
  ArmRange arm_range = ArmRange::Predicted;

  bool operator==(const DeepUcb1Config&) const = default;
};

class DeepUcb1 : public Policy {
 public:
  DeepUcb1(std::size_t n_arms, std::size_t context_dim, DeepUcb1Config cfg, std::uint64_t seed)
      : Policy("deep_ucb1", n_arms, context_dim),
        cfg_(cfg),
        seed_(seed),
        history_(context_dim),
        arm_counts_(n_arms, 0),
        reward_min_(n_arms, std::numeric_limits<double>::infinity()),
        reward_max_(n_arms, -std::numeric_limits<double>::infinity()),
        pred_min_(n_arms, std::numeric_limits<double>::infinity()),
        pred_max_(n_arms, -std::numeric_limits<double>::infinity()) {
    if (cfg_.exploration_repetitions < 1) throw std::invalid_argument("deep_ucb1: J must be >= 1");
    cfg_.net.schedule.validate();
  }

  std::size_t exploration_rounds() const { return cfg_.exploration_repetitions * n_arms(); }
  bool in_exploration(std::size_t t) const { return t <= exploration_rounds(); }

  /// Ensemble size at the last training event (0 before the first).
  std::size_t ensemble_size() const { return reward_nets_.size(); }
  const std::vector<std::size_t>& arm_counts() const { return arm_counts_; }
  const SampleBuffer& history() const { return history_; }
  const std::vector<nn::Mlp>& reward_ensemble() const { return reward_nets_; }
  const std::vector<nn::Mlp>& variance_ensemble() const { return variance_nets_; }

  /// Estimated mean-reward range of the arm plus epsilon; epsilon alone
  /// while there is nothing to estimate from.
  double arm_bonus(std::size_t arm) const {
    if (arm_counts_.at(arm) == 0) return cfg_.epsilon;
    if (cfg_.arm_range == ArmRange::Observed) return reward_max_[arm] - reward_min_[arm] + cfg_.epsilon;
    if (!(pred_max_[arm] >= pred_min_[arm])) return cfg_.epsilon;
    return pred_max_[arm] - pred_min_[arm] + cfg_.epsilon;
  }

  /// Ensemble-mean (reward, variance) predictions for each column.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> ensemble_predict(const Eigen::MatrixXd& contexts) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(contexts.cols());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(contexts.cols());
    if (reward_nets_.empty()) return {r, v};
    for (std::size_t i = 0; i < reward_nets_.size(); ++i) {
      r += reward_nets_[i].forward_batch(contexts).row(0).transpose();
      v += variance_nets_[i].forward_batch(contexts).row(0).transpose();
    }
    const double w = static_cast<double>(reward_nets_.size());
    return {r / w, v / w};
  }

  double score(const Eigen::VectorXd& context, std::size_t arm, std::size_t t) const {
    if (in_exploration(t))
      throw std::logic_error("deep_ucb1: round " + std::to_string(t) + " is in the exploration phase");
    const auto [r, v] = ensemble_predict(context);
    return deep_ucb1_score(r(0), v(0), static_cast<double>(t), arm_counts_.at(arm), arm_bonus(arm));
  }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    if (in_exploration(t)) {
      ArmList arms;
      for (std::size_t j = 0; j < k; ++j) arms.push_back(exploration_arm(t, j, cfg_.exploration_repetitions, n_arms()));
      return arms;
    }
    const auto [r, v] = ensemble_predict(contexts);
    Eigen::VectorXd s(contexts.cols());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const auto arm = static_cast<std::size_t>(i);
      if (arm_counts_[arm] == 0)
        s(i) = std::numeric_limits<double>::max();  // unpulled arms first (k > 1 leaves some unpulled)
      else
        s(i) = deep_ucb1_score(r(i), v(i), static_cast<double>(t), arm_counts_[arm], arm_bonus(arm));
    }
    return select_top_k(s, k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t t) override {
    check_update_args(contexts, chosen, rewards);
    Eigen::MatrixXd xs(contexts.rows(), static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t j = 0; j < chosen.size(); ++j)
      xs.col(static_cast<Eigen::Index>(j)) = contexts.col(static_cast<Eigen::Index>(chosen[j]));
    const Eigen::VectorXd pred = ensemble_predict(xs).first;
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      const std::size_t arm = chosen[j];
      const double residual = rewards[j] - pred(static_cast<Eigen::Index>(j));
      history_.add(t, arm, xs.col(static_cast<Eigen::Index>(j)), rewards[j], residual * residual);
      ++arm_counts_[arm];
      reward_min_[arm] = std::min(reward_min_[arm], rewards[j]);
      reward_max_[arm] = std::max(reward_max_[arm], rewards[j]);
    }
    if (is_training_round(t, cfg_.train_every)) retrain(t);
  }

  void save(std::ostream& os) const override {
    save_header(os);
    write_section(os, "counts");
    write_list(os, "arm_counts", arm_counts_);
    write_list(os, "reward_min", reward_min_);
    write_list(os, "reward_max", reward_max_);
    write_list(os, "pred_min", pred_min_);
    write_list(os, "pred_max", pred_max_);
    write_section(os, "ensemble");
    os << "members " << reward_nets_.size() << "\n";
    for (std::size_t i = 0; i < reward_nets_.size(); ++i) {
      reward_nets_[i].save(os);
      variance_nets_[i].save(os);
    }
    write_section(os, "history");
    history_.save(os);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_section(is, "counts");
    arm_counts_ = read_list<std::size_t>(is, "arm_counts");
    reward_min_ = read_list<double>(is, "reward_min");
    reward_max_ = read_list<double>(is, "reward_max");
    pred_min_ = read_list<double>(is, "pred_min");
    pred_max_ = read_list<double>(is, "pred_max");
    if (arm_counts_.size() != n_arms() || reward_min_.size() != n_arms() || reward_max_.size() != n_arms() ||
        pred_min_.size() != n_arms() || pred_max_.size() != n_arms())
      throw SnapshotError("deep_ucb1: per-arm state has wrong length");
    read_section(is, "ensemble");
    expect_token(is, "members");
    std::size_t w = 0;
    is >> w;
    reward_nets_.clear();
    variance_nets_.clear();
    for (std::size_t i = 0; i < w; ++i) {
      reward_nets_.push_back(nn::Mlp::load(is));
      variance_nets_.push_back(nn::Mlp::load(is));
    }
    read_section(is, "history");
    history_.load(is);
  }

 private:
  void retrain(std::size_t t) {
    const std::size_t w = ceil_sqrt(t);
    // Existing members carry their weights over when W grows; only the new
    // members start from scratch. Each member then trains on its current slice.
    for (std::size_t i = reward_nets_.size(); i < w; ++i) {
      reward_nets_.emplace_back(context_dim(), cfg_.net.hidden_dim, 1, cfg_.net.activation,
                                derive_seed(seed_, w, i, 1));
      variance_nets_.emplace_back(context_dim(), cfg_.net.hidden_dim, 1, cfg_.net.activation,
                                  derive_seed(seed_, w, i, 2));
    }
    const auto slices = ensemble_slices(t, w);
    for (std::size_t i = 0; i < w; ++i) {
      const auto [first, last] = history_.range_for_rounds(slices[i].first, slices[i].second);
      if (first == last) continue;
      nn::train_in_place(reward_nets_[i], history_.dataset(first, last, false), nn::LossKind::MSE,
                         cfg_.net.schedule, derive_seed(seed_, t, i, 1));
      nn::train_in_place(variance_nets_[i], history_.dataset(first, last, true), cfg_.variance_loss,
                         cfg_.net.schedule, derive_seed(seed_, t, i, 2));
    }
    if (cfg_.arm_range == ArmRange::Predicted) refresh_predicted_ranges();
  }

  void refresh_predicted_ranges() {
    std::fill(pred_min_.begin(), pred_min_.end(), std::numeric_limits<double>::infinity());
    std::fill(pred_max_.begin(), pred_max_.end(), -std::numeric_limits<double>::infinity());
    if (history_.size() == 0) return;
    const Eigen::VectorXd pred = ensemble_predict(history_.inputs()).first;
    for (std::size_t s = 0; s < history_.size(); ++s) {
      const auto arm = history_.arms()[s];
      pred_min_[arm] = std::min(pred_min_[arm], pred(static_cast<Eigen::Index>(s)));
      pred_max_[arm] = std::max(pred_max_[arm], pred(static_cast<Eigen::Index>(s)));
    }
  }

  DeepUcb1Config cfg_;
  std::uint64_t seed_;
  SampleBuffer history_;
  std::vector<nn::Mlp> reward_nets_;
  std::vector<nn::Mlp> variance_nets_;
  std::vector<std::size_t> arm_counts_;
  std::vector<double> reward_min_;
  std::vector<double> reward_max_;
  std::vector<double> pred_min_;
  std::vector<double> pred_max_;
};

}  // namespace deepucb
