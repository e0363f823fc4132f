#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepucb/nn/mlp.hpp"
#include "deepucb/random.hpp"
#include "deepucb/serialize.hpp"

namespace deepucb {

/// One column per arm: context_dim x n_arms.
using Contexts = Eigen::MatrixXd;
using ArmList = std::vector<std::size_t>;

class PolicyContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The k highest scores, best first; ties go to the lower index.
inline ArmList select_top_k(std::span<const double> scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw std::invalid_argument("select_top_k: need 1 <= k <= N (k=" + std::to_string(k) +
                                ", N=" + std::to_string(scores.size()) + ")");
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("select_top_k: non-finite score");
  ArmList idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(k);
  return idx;
}

inline ArmList select_top_k(const Eigen::VectorXd& scores, std::size_t k) {
  return select_top_k(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), k);
}

/// Shared network hyperparameters for the neural policies.
struct NetworkConfig {
  std::size_t hidden_dim = 100;
  nn::Activation activation = nn::Activation::Relu;
  nn::TrainSchedule schedule{};

  bool operator==(const NetworkConfig&) const = default;
};

/// Select/update contract shared by every bandit policy. Arms are 0-based.
class Policy {
 public:
  Policy(std::string name, std::size_t n_arms, std::size_t context_dim)
      : name_(std::move(name)), n_arms_(n_arms), context_dim_(context_dim) {
    if (n_arms < 1 || context_dim < 1) throw std::invalid_argument(name_ + ": n_arms and context_dim must be >= 1");
  }
  virtual ~Policy() = default;

  const std::string& name() const { return name_; }
  std::size_t n_arms() const { return n_arms_; }
  std::size_t context_dim() const { return context_dim_; }

  /// Returns exactly k distinct arm indices for round t (1-based).
  virtual ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) = 0;

  /// Feeds back the rewards of the arms chosen in round t.
  virtual void update(const Contexts& contexts, std::span<const std::size_t> chosen, std::span<const double> rewards,
                      std::size_t t) = 0;

  virtual void save(std::ostream& os) const = 0;
  virtual void load(std::istream& is) = 0;

 protected:
  void check_select_args(const Contexts& contexts, std::size_t t, std::size_t k) const {
    check_contexts(contexts);
    if (t < 1) throw std::invalid_argument(name_ + ": rounds are numbered from 1");
    if (k < 1 || k > n_arms_) throw std::invalid_argument(name_ + ": need 1 <= k <= N");
  }

  void check_update_args(const Contexts& contexts, std::span<const std::size_t> chosen,
                         std::span<const double> rewards) const {
    check_contexts(contexts);
    if (chosen.size() != rewards.size()) throw std::invalid_argument(name_ + ": chosen/rewards length mismatch");
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (chosen[i] >= n_arms_) throw std::invalid_argument(name_ + ": arm index out of range");
      if (!std::isfinite(rewards[i])) throw std::invalid_argument(name_ + ": non-finite reward");
    }
  }

  void save_header(std::ostream& os) const {
    os << "deepucb-policy 1 " << name_ << " " << n_arms_ << " " << context_dim_ << "\n";
  }

  void load_header(std::istream& is) const {
    expect_token(is, "deepucb-policy");
    int version = 0;
    std::string name;
    std::size_t n = 0, m = 0;
    is >> version >> name >> n >> m;
    if (!is || version != 1) throw SnapshotError("unsupported policy snapshot");
    if (name != name_ || n != n_arms_ || m != context_dim_)
      throw SnapshotError("snapshot is for " + name + " (" + std::to_string(n) + " arms, dim " +
                          std::to_string(m) + "), not " + name_);
  }

 private:
  void check_contexts(const Contexts& contexts) const {
    if (static_cast<std::size_t>(contexts.cols()) != n_arms_ ||
        static_cast<std::size_t>(contexts.rows()) != context_dim_)
      throw std::invalid_argument(name_ + ": contexts must be " + std::to_string(context_dim_) + "x" +
                                  std::to_string(n_arms_));
  }

  std::string name_;
  std::size_t n_arms_;
  std::size_t context_dim_;
};

/// Append-only record of (round, arm, context, reward, squared residual).
/// Samples are stored in round order, so a range of rounds maps to a
/// contiguous range of samples.
class SampleBuffer {
 public:
  explicit SampleBuffer(std::size_t dim = 0) : dim_(dim) {}

  void add(std::size_t round, std::size_t arm, const Eigen::VectorXd& x, double reward, double sq_residual) {
    if (!rounds_.empty() && round < rounds_.back()) throw std::logic_error("SampleBuffer: rounds must not decrease");
    rounds_.push_back(round);
    arms_.push_back(arm);
    xs_.insert(xs_.end(), x.data(), x.data() + x.size());
    rewards_.push_back(reward);
    sq_residuals_.push_back(sq_residual);
  }

  std::size_t size() const { return rewards_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const std::vector<double>& sq_residuals() const { return sq_residuals_; }
  const std::vector<std::size_t>& arms() const { return arms_; }
  const std::vector<std::size_t>& rounds() const { return rounds_; }

  Eigen::Map<const Eigen::MatrixXd> inputs() const {
    return {xs_.data(), static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(size())};
  }

  /// Sample index range [first, last) for rounds in [round_lo, round_hi].
  std::pair<std::size_t, std::size_t> range_for_rounds(std::size_t round_lo, std::size_t round_hi) const {
    auto lo = std::lower_bound(rounds_.begin(), rounds_.end(), round_lo);
    auto hi = std::upper_bound(rounds_.begin(), rounds_.end(), round_hi);
    return {static_cast<std::size_t>(lo - rounds_.begin()), static_cast<std::size_t>(hi - rounds_.begin())};
  }

  nn::Dataset dataset(std::size_t first, std::size_t last, bool residual_targets) const {
    const auto n = static_cast<Eigen::Index>(last - first);
    nn::Dataset d;
    d.inputs = inputs().middleCols(static_cast<Eigen::Index>(first), n);
    const auto& src = residual_targets ? sq_residuals_ : rewards_;
    d.targets = Eigen::Map<const Eigen::RowVectorXd>(src.data() + first, n);
    return d;
  }

  nn::Dataset dataset(bool residual_targets) const { return dataset(0, size(), residual_targets); }

  void save(std::ostream& os) const {
    os << "buffer " << dim_ << "\n";
    write_list(os, "rounds", rounds_);
    write_list(os, "arms", arms_);
    write_list(os, "xs", xs_);
    write_list(os, "rewards", rewards_);
    write_list(os, "sq_residuals", sq_residuals_);
  }

  void load(std::istream& is) {
    expect_token(is, "buffer");
    if (!(is >> dim_)) throw SnapshotError("bad buffer header");
    rounds_ = read_list<std::size_t>(is, "rounds");
    arms_ = read_list<std::size_t>(is, "arms");
    xs_ = read_list<double>(is, "xs");
    rewards_ = read_list<double>(is, "rewards");
    sq_residuals_ = read_list<double>(is, "sq_residuals");
    if (arms_.size() != rounds_.size() || rewards_.size() != rounds_.size() ||
        sq_residuals_.size() != rounds_.size() || xs_.size() != rounds_.size() * dim_)
      throw SnapshotError("inconsistent sample buffer");
  }

 private:
  std::size_t dim_;
  std::vector<std::size_t> rounds_;
  std::vector<std::size_t> arms_;
  std::vector<double> xs_;
  std::vector<double> rewards_;
  std::vector<double> sq_residuals_;
};

inline bool is_training_round(std::size_t t, std::size_t train_every) { return train_every > 0 && t % train_every == 0; }

}  // namespace deepucb
