#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepucb/envs/environment.hpp"

namespace deepucb {

struct MeanBand {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const MeanBand&) const = default;
};

/// Raised when a suboptimal arm's band is too close to the optimal arm's.
class WeakCmabError : public std::invalid_argument {
 public:
  WeakCmabError(std::size_t arm, double delta, const std::string& what)
      : std::invalid_argument(what), arm_(arm), delta_(delta) {}
  std::size_t arm() const { return arm_; }
  double delta() const { return delta_; }

 private:
  std::size_t arm_;
  double delta_;
};

/// Separation margin of a suboptimal band against the optimal one:
/// lo_opt - hi_i - 2 (hi_i - lo_i).
inline double weak_cmab_delta(const MeanBand& optimal, const MeanBand& arm) {
  return optimal.lo - arm.hi - 2.0 * (arm.hi - arm.lo);
}

struct WeakCmabConfig {
  std::vector<MeanBand> bands;
  std::size_t optimal_arm = 0;
  std::size_t feature_dim = 2;  // x lives in [0,1]^feature_dim
  double noise_sigma = 0.5;
  double steepness = 4.0;       // logistic slope of the squashing map
  std::uint64_t seed = 1;       // draws the per-arm directions

  bool operator==(const WeakCmabConfig&) const = default;
};

/// Every arm sees its own x ~ U[0,1]^d. Arm i's mean is
///   lo_i + (hi_i - lo_i) * s(u_i(x)),
/// where u_i is an affine map of x onto [0,1] (random nonnegative direction,
/// random orientation) and s is a logistic curve rescaled to map [0,1] onto
/// [0,1]. The mean therefore covers exactly the band [lo_i, hi_i] on the cube.
/// Contexts are [one_hot(arm); x] so a shared network can tell arms apart.
class WeakCmabEnv : public Environment {
 public:
  explicit WeakCmabEnv(WeakCmabConfig cfg) : cfg_(std::move(cfg)) {
    const std::size_t n = cfg_.bands.size();
    if (n < 2) throw std::invalid_argument("weakcmab: need at least 2 arms");
    if (cfg_.optimal_arm >= n) throw std::invalid_argument("weakcmab: optimal_arm out of range");
    if (cfg_.feature_dim < 1) throw std::invalid_argument("weakcmab: feature_dim must be >= 1");
    if (cfg_.noise_sigma < 0.0) throw std::invalid_argument("weakcmab: noise_sigma must be >= 0");
    if (!(cfg_.steepness > 0.0)) throw std::invalid_argument("weakcmab: steepness must be > 0");
    for (std::size_t i = 0; i < n; ++i)
      if (!(cfg_.bands[i].lo <= cfg_.bands[i].hi))
        throw std::invalid_argument("weakcmab: arm " + std::to_string(i) + " band has lo > hi");
    const auto& best = cfg_.bands[cfg_.optimal_arm];
    for (std::size_t i = 0; i < n; ++i) {
      if (i == cfg_.optimal_arm) continue;
      const double delta = weak_cmab_delta(best, cfg_.bands[i]);
      if (!(delta > 0.0)) {
        std::ostringstream os;
        os << "weakcmab: arm " << i << " violates the band separation, delta = " << delta << " (lo_opt " << best.lo
           << ", band [" << cfg_.bands[i].lo << ", " << cfg_.bands[i].hi << "])";
        throw WeakCmabError(i, delta, os.str());
      }
    }

    Rng rng(derive_seed(cfg_.seed, 6));
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::VectorXd w(static_cast<Eigen::Index>(cfg_.feature_dim));
      for (auto& v : w) v = -std::log(1.0 - uniform01(rng));  // Dirichlet(1) via normalized exponentials
      w /= w.sum();
      directions_.push_back(w);
      flipped_.push_back(uniform01(rng) < 0.5);
    }
  }

  std::string id() const override { return "weakcmab"; }
  std::size_t n_arms() const override { return cfg_.bands.size(); }
  std::size_t feature_dim() const { return cfg_.feature_dim; }
  std::size_t context_dim() const override { return n_arms() + cfg_.feature_dim; }
  double noise_sigma() const override { return cfg_.noise_sigma; }
  std::size_t optimal_arm() const { return cfg_.optimal_arm; }
  const MeanBand& band(std::size_t arm) const { return cfg_.bands.at(arm); }

  double delta(std::size_t arm) const { return weak_cmab_delta(cfg_.bands[cfg_.optimal_arm], cfg_.bands.at(arm)); }

  /// Mean reward of `arm` at feature vector x in [0,1]^d.
  double mean(std::size_t arm, const Eigen::VectorXd& x) const {
    double u = directions_.at(arm).dot(x);
    if (flipped_[arm]) u = 1.0 - u;
    const auto& b = cfg_.bands[arm];
    return b.lo + (b.hi - b.lo) * squash(u);
  }

  Round draw_round(Rng& rng) const override {
    const auto n = static_cast<Eigen::Index>(n_arms());
    Round r{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(context_dim()), n), Eigen::VectorXd(n)};
    Eigen::VectorXd x(static_cast<Eigen::Index>(cfg_.feature_dim));
    for (Eigen::Index a = 0; a < n; ++a) {
      for (auto& v : x) v = uniform01(rng);
      r.contexts(a, a) = 1.0;
      r.contexts.col(a).tail(x.size()) = x;
      r.expected(a) = mean(static_cast<std::size_t>(a), x);
    }
    return r;
  }

 private:
  double squash(double u) const {
    const double k = cfg_.steepness;
    auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double lo = logistic(-k / 2.0);
    const double hi = logistic(k / 2.0);
    return std::clamp((logistic(k * (u - 0.5)) - lo) / (hi - lo), 0.0, 1.0);
  }

  WeakCmabConfig cfg_;
  std::vector<Eigen::VectorXd> directions_;
  std::vector<bool> flipped_;
};

}  // namespace deepucb
