#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "deepucb/envs/environment.hpp"
#include "deepucb/policies/factory.hpp"

namespace deepucb {

struct RoundRecord {
  double realized_reward = 0.0;    // sum over the k chosen arms
  double expected_chosen = 0.0;    // sum of the chosen arms' expected rewards
  double expected_optimal = 0.0;   // sum of the k largest expected rewards
  double cum_realized_regret = 0.0;
  double cum_pseudo_regret = 0.0;
  double norm_cum_reward = 0.0;    // cumulative realized reward / t
};

struct RegretTrace {
  std::string policy;
  std::size_t run_index = 0;
  std::vector<RoundRecord> rows;  // rows[t-1] is round t
};

struct CellSpec {
  std::size_t rounds = 1;
  std::size_t k = 1;
  std::uint64_t base_seed = 0;
};

/// Streams shared by every policy of the same run index, so policies face the
/// same contexts and the same noise draws.
inline std::uint64_t context_seed(std::uint64_t base, std::size_t run_index) {
  return derive_seed(base, run_index, hash_string("contexts"));
}
inline std::uint64_t noise_seed(std::uint64_t base, std::size_t run_index) {
  return derive_seed(base, run_index, hash_string("noise"));
}
inline std::uint64_t policy_seed(std::uint64_t base, std::string_view policy, std::size_t run_index) {
  return derive_seed(base, hash_string(policy), run_index);
}

/// Called after the round is drawn and before the policy selects.
using RoundHook = std::function<void(std::size_t t, const Round&)>;

/// Plays `spec.rounds` rounds of draw -> select -> realize -> update.
/// A selection that is not k distinct in-range arms raises
/// PolicyContractError naming the policy and the round.
inline RegretTrace run_cell(const Environment& env, Policy& policy, const CellSpec& spec, std::size_t run_index,
                            const RoundHook& on_round = {}) {
  const std::size_t n = env.n_arms();
  if (spec.rounds < 1) throw std::invalid_argument("run_cell: rounds must be >= 1");
  if (spec.k < 1 || spec.k > n) throw std::invalid_argument("run_cell: need 1 <= k <= N");
  if (policy.n_arms() != n || policy.context_dim() != env.context_dim())
    throw std::invalid_argument("run_cell: policy " + policy.name() + " does not match the environment");

  Rng context_rng(context_seed(spec.base_seed, run_index));
  Rng noise_rng(noise_seed(spec.base_seed, run_index));
  RegretTrace trace{policy.name(), run_index, {}};
  trace.rows.reserve(spec.rounds);
  std::vector<double> realized(n);
  std::vector<double> sorted(n);
  std::vector<char> seen(n);
  double cum_reward = 0.0, cum_realized = 0.0, cum_pseudo = 0.0;

  for (std::size_t t = 1; t <= spec.rounds; ++t) {
    const Round round = env.draw_round(context_rng);
    for (std::size_t a = 0; a < n; ++a) realized[a] = env.realize_reward(a, round, noise_rng);
    if (on_round) on_round(t, round);

    const ArmList arms = policy.select(round.contexts, t, spec.k);
    const auto fail = [&](const std::string& what) {
      throw PolicyContractError("policy " + policy.name() + ", round " + std::to_string(t) + ": " + what);
    };
    if (arms.size() != spec.k)
      fail("returned " + std::to_string(arms.size()) + " arms, expected " + std::to_string(spec.k));
    std::fill(seen.begin(), seen.end(), 0);
    for (auto a : arms) {
      if (a >= n) fail("arm index " + std::to_string(a) + " out of range");
      if (seen[a]) fail("arm " + std::to_string(a) + " selected twice");
      seen[a] = 1;
    }

    RoundRecord row;
    std::vector<double> rewards;
    rewards.reserve(arms.size());
    for (auto a : arms) {
      rewards.push_back(realized[a]);
      row.realized_reward += realized[a];
      row.expected_chosen += round.expected(static_cast<Eigen::Index>(a));
    }
    std::copy(round.expected.begin(), round.expected.end(), sorted.begin());
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(spec.k), sorted.end(),
                      std::greater<>());
    for (std::size_t j = 0; j < spec.k; ++j) row.expected_optimal += sorted[j];

    policy.update(round.contexts, arms, rewards, t);

    cum_reward += row.realized_reward;
    cum_realized += row.expected_optimal - row.realized_reward;
    cum_pseudo += row.expected_optimal - row.expected_chosen;
    row.cum_realized_regret = cum_realized;
    row.cum_pseudo_regret = cum_pseudo;
    row.norm_cum_reward = cum_reward / static_cast<double>(t);
    trace.rows.push_back(row);
  }
  return trace;
}

struct ExperimentSpec {
  std::string experiment_id = "experiment";
  std::vector<std::string> policies;
  std::size_t rounds = 1000;
  std::size_t k = 1;
  std::size_t n_runs = 10;
  std::uint64_t base_seed = 0;
  PolicySettings settings{};

  void validate(std::size_t n_arms) const {
    if (rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    if (n_runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (k < 1 || k > n_arms)
      throw std::invalid_argument("k must be in [1, " + std::to_string(n_arms) + "], got " + std::to_string(k));
    if (policies.empty()) throw std::invalid_argument("no policies selected");
    for (const auto& p : policies)
      if (!is_policy_name(p)) throw std::invalid_argument("unknown policy '" + p + "'");
  }

  bool operator==(const ExperimentSpec&) const = default;
};

/// Runs every (policy, run_index) cell, at most `threads` at a time, each on
/// its own freshly seeded policy. Results are ordered by policy, then run.
inline std::vector<RegretTrace> run_experiment(const Environment& env, const ExperimentSpec& spec,
                                               std::size_t threads = 1) {
  spec.validate(env.n_arms());
  const std::size_t cells = spec.policies.size() * spec.n_runs;
  std::vector<RegretTrace> out(cells);
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};
  const CellSpec cell{spec.rounds, spec.k, spec.base_seed};

  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      const auto& name = spec.policies[c / spec.n_runs];
      const std::size_t run = c % spec.n_runs;
      try {
        auto policy = make_policy(name, env.n_arms(), env.context_dim(), spec.settings,
                                  policy_seed(spec.base_seed, name, run));
        out[c] = run_cell(env, *policy, cell, run);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, cells);
  std::vector<std::jthread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace deepucb
