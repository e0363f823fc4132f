#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>

#include "deepucb/policies/deep_ucb.hpp"
#include "deepucb/policies/linear.hpp"
#include "deepucb/policies/neural.hpp"
#include "deepucb/policies/thompson.hpp"

namespace deepucb {

inline constexpr std::array<std::string_view, 8> kPolicyNames = {
    "deep_ucb1", "deep_ucb2", "linucb", "linear", "eps_greedy", "neural_linear", "thompson", "uniform_random"};

inline bool is_policy_name(std::string_view name) {
  return std::find(kPolicyNames.begin(), kPolicyNames.end(), name) != kPolicyNames.end();
}

/// Hyperparameters for every policy; the network block is shared by the
/// neural ones.
struct PolicySettings {
  NetworkConfig net{};
  std::size_t train_every = 20;
  DeepUcb1Config deep_ucb1{};
  DeepUcb2Config deep_ucb2{};
  LinUcbConfig linucb{};
  double linear_ridge = 1.0;
  EpsGreedyConfig eps_greedy{};
  NeuralLinearConfig neural_linear{};
  ThompsonConfig thompson{};

  bool operator==(const PolicySettings&) const = default;
};

inline std::unique_ptr<Policy> make_policy(std::string_view name, std::size_t n_arms, std::size_t context_dim,
                                           const PolicySettings& s, std::uint64_t seed) {
  if (name == "deep_ucb1") {
    auto c = s.deep_ucb1;
    c.net = s.net;
    c.train_every = s.train_every;
    return std::make_unique<DeepUcb1>(n_arms, context_dim, c, seed);
  }
  if (name == "deep_ucb2") {
    auto c = s.deep_ucb2;
    c.net = s.net;
    c.train_every = s.train_every;
    return std::make_unique<DeepUcb2>(n_arms, context_dim, c, seed);
  }
  if (name == "linucb") return std::make_unique<LinUcb>(n_arms, context_dim, s.linucb);
  if (name == "linear") return std::make_unique<LinearRegression>(n_arms, context_dim, s.linear_ridge);
  if (name == "eps_greedy") {
    auto c = s.eps_greedy;
    c.net = s.net;
    c.train_every = s.train_every;
    return std::make_unique<EpsGreedy>(n_arms, context_dim, c, seed);
  }
  if (name == "neural_linear") {
    auto c = s.neural_linear;
    c.net = s.net;
    c.train_every = s.train_every;
    return std::make_unique<NeuralLinear>(n_arms, context_dim, c, seed);
  }
  if (name == "thompson") return std::make_unique<GaussianThompson>(n_arms, context_dim, s.thompson, seed);
  if (name == "uniform_random") return std::make_unique<UniformRandom>(n_arms, context_dim, seed);
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

}  // namespace deepucb
