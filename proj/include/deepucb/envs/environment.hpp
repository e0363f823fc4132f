#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "deepucb/random.hpp"

namespace deepucb {

/// One round offered to a policy: a context per arm and the (latent) expected
/// reward of each arm under that context.
struct Round {
  Eigen::MatrixXd contexts;  // context_dim x n_arms
  Eigen::VectorXd expected;  // n_arms
};

/// Dataset file problems. `kind` lets callers tell a missing file apart from
/// a malformed one.
class DatasetError : public std::runtime_error {
 public:
  enum class Kind { NotFound, BadMagic, Truncated, CountMismatch, BadValue };
  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Environments are immutable after construction; randomness comes from the
/// caller's stream.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::string id() const = 0;
  virtual std::size_t n_arms() const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual double noise_sigma() const = 0;
  virtual Round draw_round(Rng& rng) const = 0;

  /// Every environment here adds Gaussian noise to the expected reward.
  double realize_reward(std::size_t arm, const Round& round, Rng& rng) const {
    return normal(rng, round.expected(static_cast<Eigen::Index>(arm)), noise_sigma());
  }
};

}  // namespace deepucb
