#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepucb/envs/environment.hpp"

namespace deepucb {

enum class SyntheticKind { Linear, Nonlinear };

struct SyntheticConfig {
  SyntheticKind kind = SyntheticKind::Linear;
  std::size_t n_arms = 5;
  std::size_t context_dim = 5;
  double noise_sigma = 0.1;
  double weight_scale = 1.0;  // 0 makes every arm's mean identically zero
  std::uint64_t seed = 1;

  bool operator==(const SyntheticConfig&) const = default;
};

/// Contexts x ~ Normal(0, I), one per arm.
///   linear:    mu_i(x) = w_i' x,  w_i ~ Normal(0, weight_scale^2 / d I)
///   nonlinear: mu(x) = weight_scale * |x|^2 / d, shared by all arms.
/// For the nonlinear mean E[x mu(x)] = 0, so the best linear predictor without
/// intercept is constant and a linear policy ranks arms no better than chance.
class SyntheticEnv : public Environment {
 public:
  explicit SyntheticEnv(const SyntheticConfig& cfg) : cfg_(cfg) {
    if (cfg.n_arms < 1) throw std::invalid_argument("synthetic: n_arms must be >= 1");
    if (cfg.context_dim < 1) throw std::invalid_argument("synthetic: context_dim must be >= 1");
    if (cfg.noise_sigma < 0.0) throw std::invalid_argument("synthetic: noise_sigma must be >= 0");
    if (cfg.weight_scale < 0.0) throw std::invalid_argument("synthetic: weight_scale must be >= 0");
    const auto d = static_cast<Eigen::Index>(cfg.context_dim);
    weights_ = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(cfg.n_arms));
    if (cfg.kind == SyntheticKind::Linear) {
      Rng rng(derive_seed(cfg.seed, 7));
      const double s = cfg.weight_scale / std::sqrt(static_cast<double>(d));
      for (auto& v : weights_.reshaped()) v = normal(rng, 0.0, s);
    }
  }

  std::string id() const override { return cfg_.kind == SyntheticKind::Linear ? "linear" : "nonlinear"; }
  std::size_t n_arms() const override { return cfg_.n_arms; }
  std::size_t context_dim() const override { return cfg_.context_dim; }
  double noise_sigma() const override { return cfg_.noise_sigma; }
  const Eigen::MatrixXd& weights() const { return weights_; }

  double mean(std::size_t arm, const Eigen::VectorXd& x) const {
    if (cfg_.kind == SyntheticKind::Linear) return weights_.col(static_cast<Eigen::Index>(arm)).dot(x);
    return cfg_.weight_scale * x.squaredNorm() / static_cast<double>(cfg_.context_dim);
  }

  Round draw_round(Rng& rng) const override {
    const auto n = static_cast<Eigen::Index>(cfg_.n_arms);
    Round r{Eigen::MatrixXd(static_cast<Eigen::Index>(cfg_.context_dim), n), Eigen::VectorXd(n)};
    for (auto& v : r.contexts.reshaped()) v = normal(rng, 0.0, 1.0);
    for (Eigen::Index a = 0; a < n; ++a) r.expected(a) = mean(static_cast<std::size_t>(a), r.contexts.col(a));
    return r;
  }

 private:
  SyntheticConfig cfg_;
  Eigen::MatrixXd weights_;
};

}  // namespace deepucb
