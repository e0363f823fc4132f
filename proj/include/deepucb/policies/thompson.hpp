#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "deepucb/policies/neural.hpp"
#include "deepucb/policies/policy.hpp"

namespace deepucb {

struct ThompsonConfig {
  double prior_mean = 0.0;
  double prior_count = 1e-6;
  // Known observation variance. Negative: use each arm's sample variance
  // (1.0 until the arm has two observations).
  double noise_variance = -1.0;

  bool operator==(const ThompsonConfig&) const = default;
};

/// Context-free Gaussian Thompson sampling. Each arm's mean has posterior
/// Normal((n0 mu0 + sum r) / (n0 + n), s^2 / (n0 + n)); one draw per arm,
/// top k draws are selected.
class GaussianThompson : public Policy {
 public:
  GaussianThompson(std::size_t n_arms, std::size_t context_dim, ThompsonConfig cfg, std::uint64_t seed)
      : Policy("thompson", n_arms, context_dim),
        cfg_(cfg),
        rng_(derive_seed(seed, 4)),
        count_(n_arms, 0.0),
        sum_(n_arms, 0.0),
        sum_sq_(n_arms, 0.0) {
    if (!(cfg_.prior_count > 0.0)) throw std::invalid_argument("thompson: prior_count must be > 0");
  }

  double posterior_mean(std::size_t arm) const {
    return (cfg_.prior_count * cfg_.prior_mean + sum_.at(arm)) / (cfg_.prior_count + count_.at(arm));
  }

  double observation_variance(std::size_t arm) const {
    if (cfg_.noise_variance >= 0.0) return cfg_.noise_variance;
    const double n = count_.at(arm);
    if (n < 2.0) return 1.0;
    const double m = sum_[arm] / n;
    return std::max(0.0, (sum_sq_[arm] - n * m * m) / (n - 1.0));
  }

  double posterior_variance(std::size_t arm) const {
    return observation_variance(arm) / (cfg_.prior_count + count_.at(arm));
  }

  double count(std::size_t arm) const { return count_.at(arm); }

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    Eigen::VectorXd draws(static_cast<Eigen::Index>(n_arms()));
    for (std::size_t i = 0; i < n_arms(); ++i)
      draws(static_cast<Eigen::Index>(i)) = normal(rng_, posterior_mean(i), std::sqrt(posterior_variance(i)));
    return select_top_k(draws, k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t /*t*/) override {
    check_update_args(contexts, chosen, rewards);
    for (std::size_t j = 0; j < chosen.size(); ++j) observe(chosen[j], rewards[j]);
  }

  void observe(std::size_t arm, double reward) {
    count_.at(arm) += 1.0;
    sum_[arm] += reward;
    sum_sq_[arm] += reward * reward;
  }

  void save(std::ostream& os) const override {
    save_header(os);
    write_section(os, "posterior");
    write_rng(os, "sampler", rng_);
    write_list(os, "count", count_);
    write_list(os, "sum", sum_);
    write_list(os, "sum_sq", sum_sq_);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_section(is, "posterior");
    read_rng(is, "sampler", rng_);
    count_ = read_list<double>(is, "count");
    sum_ = read_list<double>(is, "sum");
    sum_sq_ = read_list<double>(is, "sum_sq");
    if (count_.size() != n_arms() || sum_.size() != n_arms() || sum_sq_.size() != n_arms())
      throw SnapshotError("thompson: per-arm state has wrong length");
  }

 private:
  ThompsonConfig cfg_;
  Rng rng_;
  std::vector<double> count_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

/// Reference policy: a uniformly random k-subset every round.
class UniformRandom : public Policy {
 public:
  UniformRandom(std::size_t n_arms, std::size_t context_dim, std::uint64_t seed)
      : Policy("uniform_random", n_arms, context_dim), rng_(derive_seed(seed, 5)) {}

  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    return random_subset(rng_, n_arms(), k);
  }

  void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
              std::size_t) override {
    check_update_args(contexts, chosen, rewards);
  }

  void save(std::ostream& os) const override {
    save_header(os);
    write_rng(os, "sampler", rng_);
  }

  void load(std::istream& is) override {
    load_header(is);
    read_rng(is, "sampler", rng_);
  }

 private:
  Rng rng_;
};

}  // namespace deepucb
