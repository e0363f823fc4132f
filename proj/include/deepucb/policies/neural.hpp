#pragma once

#include <algorithm>
#include <string>

#include "deepucb/policies/policy.hpp"

namespace deepucb {

/// Uniformly random k-subset (partial Fisher-Yates), returned ascending.
inline ArmList random_subset(Rng& rng, std::size_t n, std::size_t k) {
  ArmList idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, n - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct EpsGreedyConfig {
  NetworkConfig net{};
  std::size_t train_every = 20;
  double eps0 = 10.0;  // exploration probability at round t is min(1, eps0 / t)

  bool operator==(const EpsGreedyConfig&) const = default;
};

/// Deep epsilon-greedy: uniform random k-subset with probability
/// min(1, eps0 / t), otherwise the top k predictions of a reward network.
class EpsGreedy : public Policy {
 public:
  EpsGreedy(std::size_t n_arms, std::size_t context_dim, EpsGreedyConfig cfg, std::uint64_t seed)
      : Policy("eps_greedy", n_arms, context_dim),
        cfg_(cfg),
        seed_(seed),
        rng_(derive_seed(seed, 3)),
        reward_net_(context_dim, cfg.net.hidden_dim, 1, cfg.net.activation, derive_seed(seed, 1)),
        history_(context_dim) {
    if (cfg_.eps0 < 0.0) throw std::invalid_argument("eps_greedy: eps0 must be >= 0");
    cfg_.net.schedule.validate();
  }

  double epsilon_at(std::size_t t) const { return std::min(1.0, cfg_.eps0 / static_cast<double>(t)); }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    if (uniform01(rng_) < epsilon_at(t)) return random_subset(rng_, n_arms(), k);
    const Eigen::VectorXd pred = reward_net_.forward_batch(contexts).row(0).transpose();
    return select_top_k(pred, k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t t) override {
    check_update_args(contexts, chosen, rewards);
    for (std::size_t j = 0; j < chosen.size(); ++j)
      history_.add(t, chosen[j], contexts.col(static_cast<Eigen::Index>(chosen[j])), rewards[j], 0.0);
    if (is_training_round(t, cfg_.train_every))
      nn::train_in_place(reward_net_, history_.dataset(false), nn::LossKind::MSE, cfg_.net.schedule,
                         derive_seed(seed_, t, 1));
  }

  const nn::Mlp& reward_net() const { return reward_net_; }

  void save(std::ostream& os) const override {
    save_header(os);
    write_section(os, "rng");
    write_rng(os, "explore", rng_);
    write_section(os, "reward_net");
    reward_net_.save(os);
    write_section(os, "history");
    history_.save(os);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_section(is, "rng");
    read_rng(is, "explore", rng_);
    read_section(is, "reward_net");
    reward_net_ = nn::Mlp::load(is);
    read_section(is, "history");
    history_.load(is);
  }

 private:
  EpsGreedyConfig cfg_;
  std::uint64_t seed_;
  Rng rng_;
  nn::Mlp reward_net_;
  SampleBuffer history_;
};

struct NeuralLinearConfig {
  NetworkConfig net{};
  std::size_t train_every = 20;
  double ridge = 1.0;

  bool operator==(const NeuralLinearConfig&) const = default;
};

/// Neural-linear: the hidden layer of a reward network, plus a constant 1,
/// is the feature map phi(x); a shared ridge-regression head on phi(x) gives
/// the prediction. The head is refit after every update, the feature network
/// on the training schedule (after which the head is rebuilt from history).
class NeuralLinear : public Policy {
 public:
  NeuralLinear(std::size_t n_arms, std::size_t context_dim, NeuralLinearConfig cfg, std::uint64_t seed)
      : Policy("neural_linear", n_arms, context_dim),
        cfg_(cfg),
        seed_(seed),
        feature_net_(context_dim, cfg.net.hidden_dim, 1, cfg.net.activation, derive_seed(seed, 1)),
        history_(context_dim) {
    if (!(cfg_.ridge > 0.0)) throw std::invalid_argument("neural_linear: ridge must be > 0");
    cfg_.net.schedule.validate();
    reset_head();
  }

  std::size_t feature_dim() const { return feature_net_.hidden_dim() + 1; }

  Eigen::MatrixXd features(const Eigen::MatrixXd& contexts) const {
    Eigen::MatrixXd phi(static_cast<Eigen::Index>(feature_dim()), contexts.cols());
    phi.topRows(static_cast<Eigen::Index>(feature_net_.hidden_dim())) = feature_net_.hidden_batch(contexts);
    phi.bottomRows(1).setOnes();
    return phi;
  }

  const Eigen::VectorXd& head() const { return head_; }
  const nn::Mlp& feature_net() const { return feature_net_; }
  nn::Mlp& feature_net() { return feature_net_; }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    const Eigen::VectorXd pred = features(contexts).transpose() * head_;
    return select_top_k(pred, k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t t) override {
    check_update_args(contexts, chosen, rewards);
    Eigen::MatrixXd xs(contexts.rows(), static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      xs.col(static_cast<Eigen::Index>(j)) = contexts.col(static_cast<Eigen::Index>(chosen[j]));
      history_.add(t, chosen[j], xs.col(static_cast<Eigen::Index>(j)), rewards[j], 0.0);
    }
    if (is_training_round(t, cfg_.train_every)) {
      nn::train_in_place(feature_net_, history_.dataset(false), nn::LossKind::MSE, cfg_.net.schedule,
                         derive_seed(seed_, t, 1));
      reset_head();
      accumulate(features(history_.inputs()),
                 Eigen::Map<const Eigen::VectorXd>(history_.rewards().data(),
                                                   static_cast<Eigen::Index>(history_.size())));
    } else {
      accumulate(features(xs), Eigen::Map<const Eigen::VectorXd>(rewards.data(), static_cast<Eigen::Index>(rewards.size())));
    }
    solve_head();
  }

  void save(std::ostream& os) const override {
    save_header(os);
    write_section(os, "feature_net");
    feature_net_.save(os);
    write_section(os, "head");
    write_matrix(os, "gram", gram_);
    write_matrix(os, "moment", moment_);
    write_matrix(os, "theta", head_);
    write_section(os, "history");
    history_.save(os);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_section(is, "feature_net");
    feature_net_ = nn::Mlp::load(is);
    read_section(is, "head");
    gram_ = read_matrix(is, "gram");
    moment_ = read_vector(is, "moment");
    head_ = read_vector(is, "theta");
    read_section(is, "history");
    history_.load(is);
  }

 private:
  void reset_head() {
    const auto d = static_cast<Eigen::Index>(feature_dim());
    gram_ = cfg_.ridge * Eigen::MatrixXd::Identity(d, d);
    moment_ = Eigen::VectorXd::Zero(d);
    head_ = Eigen::VectorXd::Zero(d);
  }

  void accumulate(const Eigen::MatrixXd& phi, const Eigen::VectorXd& rewards) {
    gram_.noalias() += phi * phi.transpose();
    moment_.noalias() += phi * rewards;
  }

  void solve_head() {
    Eigen::LLT<Eigen::MatrixXd> llt(gram_);
    if (llt.info() != Eigen::Success) throw std::runtime_error("neural_linear: singular head system");
    head_ = llt.solve(moment_);
  }

  NeuralLinearConfig cfg_;
  std::uint64_t seed_;
  nn::Mlp feature_net_;
  SampleBuffer history_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moment_;
  Eigen::VectorXd head_;
};

}  // namespace deepucb
