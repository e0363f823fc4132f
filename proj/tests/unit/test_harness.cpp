#include <gtest/gtest.h>

#include <sstream>

#include "deepucb/envs/mushroom.hpp"
#include "deepucb/envs/synthetic.hpp"
#include "deepucb/harness/csv.hpp"
#include "deepucb/harness/stats.hpp"
#include "deepucb/testing/oracles.hpp"

using namespace deepucb;

namespace {

// Bernoulli-edibility stand-in for the mushroom environment: each arm is
// edible with probability p; contexts are irrelevant.
class CoinEnv : public Environment {
 public:
  CoinEnv(std::size_t n, double p, double sigma) : n_(n), p_(p), sigma_(sigma) {}
  std::string id() const override { return "coin"; }
  std::size_t n_arms() const override { return n_; }
  std::size_t context_dim() const override { return 1; }
  double noise_sigma() const override { return sigma_; }
  Round draw_round(Rng& rng) const override {
    Round r{Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(n_)), Eigen::VectorXd(static_cast<Eigen::Index>(n_))};
    for (auto& v : r.expected) v = uniform01(rng) < p_ ? 1.0 : 0.0;
    r.contexts.row(0) = r.expected.transpose();
    return r;
  }

 private:
  std::size_t n_;
  double p_;
  double sigma_;
};

// Picks the true top-k arms using the expected rewards seen by the hook.
class OraclePolicy : public Policy {
 public:
  OraclePolicy(std::size_t n, std::size_t m) : Policy("oracle", n, m) {}
  void see(const Round& r) { expected_ = r.expected; }
  ArmList select(const Contexts&, std::size_t, std::size_t k) override { return select_top_k(expected_, k); }
  void update(const Contexts&, std::span<const std::size_t>, std::span<const double>, std::size_t) override {}
  void save(std::ostream&) const override {}
  void load(std::istream&) override {}

 private:
  Eigen::VectorXd expected_;
};

// Returns a fixed (possibly invalid) selection.
class FixedPolicy : public Policy {
 public:
  FixedPolicy(std::size_t n, std::size_t m, ArmList arms) : Policy("fixed", n, m), arms_(std::move(arms)) {}
  ArmList select(const Contexts&, std::size_t, std::size_t) override { return arms_; }
  void update(const Contexts&, std::span<const std::size_t>, std::span<const double>, std::size_t) override {}
  void save(std::ostream&) const override {}
  void load(std::istream&) override {}

 private:
  ArmList arms_;
};

RegretTrace constant_trace(std::size_t len, double v) {
  RegretTrace tr{"p", 0, {}};
  for (std::size_t t = 1; t <= len; ++t) {
    RoundRecord r;
    r.realized_reward = r.expected_chosen = r.expected_optimal = v;
    r.cum_realized_regret = r.cum_pseudo_regret = v * static_cast<double>(t);
    r.norm_cum_reward = v;
    tr.rows.push_back(r);
  }
  return tr;
}

}  // namespace

TEST(RunCell, OraclePolicyHasZeroPseudoRegret) {
  const CoinEnv env(5, 0.5, 1.0);
  OraclePolicy oracle(5, 1);
  const auto tr = run_cell(env, oracle, {300, 3, 1}, 0, [&](std::size_t, const Round& r) { oracle.see(r); });
  for (const auto& row : tr.rows) ASSERT_EQ(row.cum_pseudo_regret, 0.0);
}

TEST(RunCell, UniformRandomMatchesEnumerationOracle) {
  const CoinEnv env(5, 0.5, 0.0);
  const double expect = oracle::random_policy_pseudo_regret_bernoulli(5, 3, 0.5);
  EXPECT_NEAR(expect, 0.78125, 1e-12);  // E[min(3, #edible)] - 1.5 over the 32 patterns
  const std::size_t rounds = 20000;
  UniformRandom policy(5, 1, 2);
  const auto tr = run_cell(env, policy, {rounds, 3, 2}, 0);
  const double got = tr.rows.back().cum_pseudo_regret / static_cast<double>(rounds);
  // Per-round regret lies in [0, 1.5]; its std is below 0.75.
  EXPECT_NEAR(got, expect, 3.0 * 0.75 / std::sqrt(static_cast<double>(rounds)));
}

TEST(RunCell, UniformRandomOnMushroomMatchesOracle) {
  MushroomEnvConfig c;
  const auto real = std::filesystem::path(DEEPUCB_DATA_DIR) / "agaricus-lepiota.data";
  c.data = std::filesystem::exists(real) ? real : std::filesystem::path(DEEPUCB_DATA_DIR) / "mushroom_surrogate.data";
  const MushroomEnv env(c);
  UniformRandom policy(5, env.context_dim(), 3);
  const std::size_t rounds = 10000;
  const auto tr = run_cell(env, policy, {rounds, 3, 3}, 0);
  EXPECT_NEAR(tr.rows.back().cum_pseudo_regret / rounds, oracle::random_policy_pseudo_regret_bernoulli(5, 3, 0.5),
              3.0 * 0.75 / std::sqrt(static_cast<double>(rounds)));
}

TEST(RunCell, SingleRound) {
  const CoinEnv env(4, 0.5, 0.3);
  UniformRandom policy(4, 1, 4);
  const auto tr = run_cell(env, policy, {1, 2, 4}, 0);
  ASSERT_EQ(tr.rows.size(), 1u);
  const auto& r = tr.rows[0];
  EXPECT_EQ(r.cum_pseudo_regret, r.expected_optimal - r.expected_chosen);
  EXPECT_EQ(r.cum_realized_regret, r.expected_optimal - r.realized_reward);
  EXPECT_EQ(r.norm_cum_reward, r.realized_reward);
}

TEST(RunCell, TraceInvariants) {
  SyntheticConfig c;
  c.noise_sigma = 0.5;
  const SyntheticEnv env(c);
  LinUcb policy(env.n_arms(), env.context_dim(), {});
  const auto tr = run_cell(env, policy, {500, 2, 5}, 0);
  double prev = 0.0, sum = 0.0;
  for (std::size_t t = 1; t <= tr.rows.size(); ++t) {
    const auto& r = tr.rows[t - 1];
    EXPECT_GE(r.cum_pseudo_regret, prev);
    EXPECT_GE(r.expected_optimal, r.expected_chosen);
    prev = r.cum_pseudo_regret;
    sum += r.realized_reward;
    EXPECT_DOUBLE_EQ(r.norm_cum_reward * static_cast<double>(t), sum);
  }
}

TEST(RunCell, RealizedMinusPseudoIsZeroMeanNoise) {
  SyntheticConfig c;
  c.noise_sigma = 1.0;
  const SyntheticEnv env(c);
  UniformRandom policy(env.n_arms(), env.context_dim(), 6);
  const std::size_t rounds = 20000, k = 2;
  const auto tr = run_cell(env, policy, {rounds, k, 6}, 0);
  const double gap = tr.rows.back().cum_realized_regret - tr.rows.back().cum_pseudo_regret;
  // Sum of rounds * k independent Normal(0, 1) draws.
  EXPECT_NEAR(gap / rounds, 0.0, 3.0 * std::sqrt(static_cast<double>(k) / rounds));
}

TEST(RunCell, DeterministicAndPaired) {
  SyntheticConfig c;
  const SyntheticEnv env(c);
  std::vector<std::vector<double>> chosen_sums;
  for (int rep = 0; rep < 2; ++rep) {
    LinUcb policy(env.n_arms(), env.context_dim(), {});
    const auto tr = run_cell(env, policy, {100, 2, 7}, 3);
    std::vector<double> v;
    for (const auto& r : tr.rows) v.push_back(r.cum_realized_regret);
    chosen_sums.push_back(v);
  }
  EXPECT_EQ(chosen_sums[0], chosen_sums[1]);

  // Different policies with the same run index see the same optimum each round.
  LinUcb a(env.n_arms(), env.context_dim(), {});
  UniformRandom b(env.n_arms(), env.context_dim(), 8);
  const auto ta = run_cell(env, a, {50, 2, 7}, 1), tb = run_cell(env, b, {50, 2, 7}, 1);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(ta.rows[t].expected_optimal, tb.rows[t].expected_optimal);
}

TEST(RunCell, ContractViolationsNameRoundAndPolicy) {
  const CoinEnv env(4, 0.5, 0.0);
  for (const ArmList& bad : {ArmList{0}, ArmList{1, 1}, ArmList{0, 9}}) {
    FixedPolicy p(4, 1, bad);
    try {
      run_cell(env, p, {5, 2, 1}, 0);
      FAIL() << "expected a contract violation";
    } catch (const PolicyContractError& e) {
      const std::string what = e.what();
      EXPECT_NE(what.find("policy fixed"), std::string::npos) << what;
      EXPECT_NE(what.find("round 1"), std::string::npos) << what;
    }
  }
}

TEST(Aggregate, SingleRunHasZeroStd) {
  const auto tr = constant_trace(10, 2.5);
  const auto agg = aggregate_runs({tr});
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(agg.mean[t], columns_of(tr.rows[t]));
    for (double s : agg.std[t]) EXPECT_EQ(s, 0.0);
  }
}

TEST(Aggregate, TwoConstantTraces) {
  const auto agg = aggregate_runs({constant_trace(5, 1.0), constant_trace(5, 4.0)});
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_DOUBLE_EQ(agg.mean[t][0], 2.5);
    EXPECT_NEAR(agg.std[t][0], 3.0 / std::sqrt(2.0), 1e-15);
  }
}

TEST(Aggregate, MatchesStatisticsOracle) {
  Rng rng(9);
  std::vector<RegretTrace> traces;
  for (int i = 0; i < 10; ++i) {
    RegretTrace tr{"p", static_cast<std::size_t>(i), {}};
    for (int t = 0; t < 50; ++t) {
      RoundRecord r;
      r.realized_reward = normal(rng, 0, 1);
      r.expected_chosen = normal(rng, 1, 2);
      r.expected_optimal = normal(rng, 2, 1);
      r.cum_realized_regret = normal(rng, 0, 5);
      r.cum_pseudo_regret = normal(rng, 3, 1);
      r.norm_cum_reward = normal(rng, 0, 0.1);
      tr.rows.push_back(r);
    }
    traces.push_back(tr);
  }
  const auto agg = aggregate_runs(traces);
  for (std::size_t t = 0; t < 50; ++t)
    for (std::size_t c = 0; c < 6; ++c) {
      oracle::Vec column;
      for (const auto& tr : traces) column.push_back(columns_of(tr.rows[t])[c]);
      EXPECT_NEAR(agg.mean[t][c], oracle::mean(column), 1e-12);
      EXPECT_NEAR(agg.std[t][c], oracle::sample_std(column), 1e-12);
    }
}

TEST(Aggregate, MismatchedLengthsThrow) {
  EXPECT_THROW(aggregate_runs({constant_trace(3, 1), constant_trace(4, 1)}), std::invalid_argument);
}

TEST(Sublinearity, LogSquaredCurveHasConstantRatio) {
  std::vector<double> cum;
  for (std::size_t t = 1; t <= 4000; ++t) cum.push_back(0.7 * std::pow(std::log(static_cast<double>(t)), 2));
  const auto r = sublinearity_check(cum, {});
  ASSERT_EQ(r.log2_ratios.size(), 3u);
  for (double x : r.log2_ratios) EXPECT_NEAR(x, 0.7, 0.007);
  EXPECT_TRUE(r.pass());
}

TEST(Sublinearity, LinearRegretFails) {
  std::vector<double> cum;
  for (std::size_t t = 1; t <= 4000; ++t) cum.push_back(0.3 * static_cast<double>(t));
  const auto r = sublinearity_check(cum, {});
  EXPECT_NEAR(r.late_to_early, 1.0, 1e-9);
  EXPECT_FALSE(r.window_pass);
  EXPECT_FALSE(r.checkpoint_pass);
  EXPECT_FALSE(r.pass());
}

TEST(Sublinearity, ShortTraceThrows) {
  EXPECT_THROW(sublinearity_check(std::vector<double>(100, 0.0), {}), std::invalid_argument);
}

TEST(Csv, SchemaAndRowCount) {
  std::vector<RegretTrace> traces{constant_trace(3, 0.5), constant_trace(3, 1.5)};
  traces[1].run_index = 1;
  std::ostringstream os;
  write_trace_csv(os, "exp", traces);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "experiment_id,policy,run_index,t,realized_reward,expected_chosen,expected_optimal,"
            "cum_realized_regret,cum_pseudo_regret,norm_cum_reward");
  std::getline(in, line);
  EXPECT_EQ(line, "exp,p,0,1,0.5,0.5,0.5,0.5,0.5,0.5");
  int rows = 1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);

  std::ostringstream agg;
  write_aggregate_csv(agg, "exp", aggregate_by_policy(traces));
  const std::string text = agg.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "experiment_id,policy,n_runs,t,mean_realized_reward,mean_expected_chosen,mean_expected_optimal,"
            "mean_cum_realized_regret,mean_cum_pseudo_regret,mean_norm_cum_reward,std_realized_reward,"
            "std_expected_chosen,std_expected_optimal,std_cum_realized_regret,std_cum_pseudo_regret,"
            "std_norm_cum_reward");
  EXPECT_NE(text.find("\nexp,p,2,1,1,1,1,1,1,1,"), std::string::npos);
}

TEST(Experiment, ParallelMatchesSequential) {
  SyntheticConfig c;
  const SyntheticEnv env(c);
  ExperimentSpec spec;
  spec.policies = {"linucb", "eps_greedy", "uniform_random"};
  spec.rounds = 60;
  spec.k = 2;
  spec.n_runs = 3;
  spec.settings.net.hidden_dim = 4;
  const auto seq = run_experiment(env, spec, 1);
  const auto par = run_experiment(env, spec, 4);
  ASSERT_EQ(seq.size(), 9u);
  std::ostringstream a, b;
  write_trace_csv(a, "x", seq);
  write_trace_csv(b, "x", par);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(seq[4].policy, "eps_greedy");
  EXPECT_EQ(seq[4].run_index, 1u);
}

TEST(Experiment, ValidatesSpec) {
  SyntheticConfig c;
  const SyntheticEnv env(c);
  ExperimentSpec spec;
  spec.policies = {"linucb"};
  spec.k = 6;
  EXPECT_THROW(run_experiment(env, spec), std::invalid_argument);
  spec.k = 1;
  spec.policies = {"nope"};
  EXPECT_THROW(run_experiment(env, spec), std::invalid_argument);
}
