// Acceptance suite. Prints one PASS/FAIL line per criterion; exit status is
// non-zero if any selected criterion fails.
//
//   acceptance            run everything
//   acceptance --only 6   run one criterion (ids: 1 2-mse 2-l1 3 4 5 6 7 8 9 10)
//   acceptance --list     print criterion ids

#include <CLI11.hpp>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "deepucb/allocator.hpp"
#include "deepucb/config.hpp"
#include "deepucb/harness/stats.hpp"
#include "deepucb/testing/oracles.hpp"

namespace fs = std::filesystem;
using namespace deepucb;

namespace {

const fs::path kConfigs = DEEPUCB_CONFIG_DIR;
const fs::path kCli = DEEPUCB_CLI;

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// ---- 1 ----

Outcome gradient_check() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto act = trial % 2 ? nn::Activation::Sigmoid : nn::Activation::Relu;
    const auto kind = (trial / 2) % 2 ? nn::LossKind::L1 : nn::LossKind::MSE;
    const auto m = 1 + uniform_index(rng, 6), z = 1 + uniform_index(rng, 8), o = 1 + uniform_index(rng, 3);
    nn::Mlp net(m, z, o, act, rng());
    for (auto& b : net.bias_hidden()) b = uniform(rng, -0.5, 0.5);
    for (auto& b : net.bias_out()) b = uniform(rng, -0.5, 0.5);
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 10));
    nn::Dataset d{Eigen::MatrixXd(static_cast<Eigen::Index>(m), n), Eigen::MatrixXd(static_cast<Eigen::Index>(o), n)};
    for (auto& v : d.inputs.reshaped()) v = uniform(rng, -2.0, 2.0);

    // Oracle: loss through the loop-based forward pass on flat parameters.
    const auto loss_at = [&](const oracle::Vec& p) {
      nn::Mlp tmp = net;
      tmp.set_parameters(Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size())));
      oracle::Mat w1(z, oracle::Vec(m)), w2(o, oracle::Vec(z));
      for (std::size_t i = 0; i < z; ++i)
        for (std::size_t j = 0; j < m; ++j) w1[i][j] = tmp.weights_hidden()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      for (std::size_t i = 0; i < o; ++i)
        for (std::size_t j = 0; j < z; ++j) w2[i][j] = tmp.weights_out()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      double total = 0.0;
      for (Eigen::Index s = 0; s < n; ++s) {
        const auto out = oracle::mlp_forward(w1, to_vec(tmp.bias_hidden()), w2, to_vec(tmp.bias_out()),
                                             act == nn::Activation::Sigmoid, to_vec(d.inputs.col(s)));
        for (std::size_t r = 0; r < o; ++r) {
          const double diff = out[r] - d.targets(static_cast<Eigen::Index>(r), s);
          total += kind == nn::LossKind::MSE ? diff * diff : std::abs(diff);
        }
      }
      return total / static_cast<double>(d.targets.size());
    };
    // Targets keep every residual at least 0.05 from the L1 kink.
    const Eigen::MatrixXd pred = net.forward_batch(d.inputs);
    for (Eigen::Index i = 0; i < d.targets.size(); ++i) {
      const double off = uniform(rng, 0.05, 1.5) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
      d.targets.reshaped()(i) = pred.reshaped()(i) + off;
    }
    const Eigen::VectorXd g = net.gradient(d, kind).flatten();
    const auto fd = oracle::finite_difference_gradient(loss_at, to_vec(net.parameters()), 1e-5);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double f = fd[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::abs(g(i) - f) / std::max({std::abs(g(i)), std::abs(f), 1e-6}));
    }
  }
  return {worst < 1e-4, fmt("max relative error %.2e over 100 triples (limit 1e-4)", worst)};
}

// ---- 2 ----

Outcome variance_convergence(nn::LossKind loss) {
  DeepUcb2Config cfg;
  cfg.net.hidden_dim = 100;
  cfg.net.activation = nn::Activation::Relu;
  cfg.train_every = 20;
  cfg.variance_loss = loss;
  DeepUcb2 policy(1, 4, cfg, 7);
  Eigen::MatrixXd c(4, 1);
  c << 0.5, -0.25, 1.0, 0.0;
  Rng rng(2020);
  std::vector<double> rewards;
  for (std::size_t t = 1; t <= 2000; ++t) {
    const auto arms = policy.select(c, t, 1);
    const double r = normal(rng, 1.0, 2.0);
    rewards.push_back(r);
    policy.update(c, arms, std::vector<double>{r}, t);
  }
  const double nn2 = policy.variance_net().forward(c.col(0))(0);
  const double sample_var = oracle::sample_variance(rewards);
  const bool near_truth = std::abs(nn2 - 4.0) <= 0.2 * 4.0;
  const bool near_sample = std::abs(nn2 - sample_var) <= 0.2 * sample_var;
  return {near_truth && near_sample,
          fmt("NN2(c) = %.3f, true variance 4.0, sample variance %.3f (band 20%%), %s loss", nn2, sample_var,
              nn::to_string(loss).c_str())};
}

// ---- 3 ----

Outcome linucb_equivalence() {
  Rng rng(303);
  const std::size_t dim = 6, arms = 5;
  LinUcb lin(arms, dim, {});
  std::vector<std::vector<oracle::Vec>> xs(arms);
  std::vector<oracle::Vec> rs(arms);
  double worst = 0.0;
  for (int u = 0; u < 500; ++u) {
    const auto arm = uniform_index(rng, arms);
    Eigen::VectorXd x(dim);
    for (auto& v : x) v = normal(rng, 0.0, 1.5);
    const double r = normal(rng, 0.0, 1.0);
    lin.observe(arm, x, r);
    xs[arm].push_back(to_vec(x));
    rs[arm].push_back(r);
    for (std::size_t a = 0; a < arms; ++a) {
      if (xs[a].empty()) continue;
      const auto expect = oracle::ridge_solve(xs[a], rs[a], dim, 1.0);
      const Eigen::VectorXd got = lin.theta(a);
      for (std::size_t i = 0; i < dim; ++i) worst = std::max(worst, std::abs(got(static_cast<Eigen::Index>(i)) - expect[i]));
    }
  }
  return {worst < 1e-8, fmt("max |theta - dense solve| = %.2e over 500 updates (limit 1e-8)", worst)};
}

// ---- 4 ----

Outcome top_k_correctness() {
  Rng rng(404);
  std::size_t cases = 0, mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + uniform_index(rng, 10);
    Eigen::VectorXd s(static_cast<Eigen::Index>(n));
    for (auto& v : s) v = normal(rng, 0.0, 1.0);
    for (std::size_t k = 1; k <= n; ++k) {
      auto got = select_top_k(s, k);
      std::sort(got.begin(), got.end());
      ++cases;
      if (got != oracle::best_subset_exhaustive(to_vec(s), k)) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%zu mismatches in %zu (vector, k) cases", mismatches, cases)};
}

// ---- 5 ----

std::vector<double> mean_pseudo_regret(const std::vector<RegretTrace>& traces, const std::string& policy) {
  std::vector<double> mean;
  std::size_t runs = 0;
  for (const auto& tr : traces) {
    if (tr.policy != policy) continue;
    if (mean.empty()) mean.assign(tr.rows.size(), 0.0);
    for (std::size_t t = 0; t < tr.rows.size(); ++t) mean[t] += tr.rows[t].cum_pseudo_regret;
    ++runs;
  }
  for (auto& v : mean) v /= static_cast<double>(runs);
  return mean;
}

Outcome weakcmab_sublinearity() {
  auto cfg = load_config(kConfigs / "weakcmab.cfg");
  auto& ex = cfg.experiment;
  ex.policies = {"deep_ucb1"};
  if (ex.rounds != 4000 || ex.n_runs != 5 || cfg.weakcmab.bands.size() != 3 || cfg.weakcmab.noise_sigma != 0.5)
    return {false, "weakcmab.cfg no longer describes the 3-arm, T=4000, 5-run, sigma 0.5 instance"};
  // Certificate: min over suboptimal arms of lo_opt - hi_i - 2 (hi_i - lo_i).
  const auto& b = cfg.weakcmab.bands;
  double delta_min = 1e300;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (i != cfg.weakcmab.optimal_arm)
      delta_min = std::min(delta_min, b[cfg.weakcmab.optimal_arm].lo - b[i].hi - 2.0 * (b[i].hi - b[i].lo));
  const auto env = make_environment(cfg);
  const auto cum = mean_pseudo_regret(run_experiment(*env, ex, threads()), "deep_ucb1");

  const double early = cum[399] / 400.0;
  const double late = (cum[3999] - cum[3599]) / 400.0;
  const auto ratio = [&](std::size_t t) { return cum[t - 1] / std::pow(std::log(static_cast<double>(t)), 2); };
  const double r1 = ratio(1000), r2 = ratio(2000), r4 = ratio(4000);
  const bool window = late < 0.5 * early;
  const bool checkpoints = r2 <= 1.25 * r1 && r4 <= 1.25 * r2;
  const bool certified = std::abs(delta_min - 0.5) < 1e-12;
  return {window && checkpoints && certified,
          fmt("delta_min %.3f; per-round regret [1,400] %.4f, [3601,4000] %.4f (ratio %.3f < 0.5); "
              "cum/ln^2 at 1000/2000/4000 = %.3f/%.3f/%.3f (step limit x1.25)",
              delta_min, early, late, late / early, r1, r2, r4)};
}

// ---- 6 ----

Outcome mushroom_ordering() {
  auto cfg = load_config(kConfigs / "mushroom_desk.cfg");
  auto& ex = cfg.experiment;
  ex.policies = {"deep_ucb2", "linear"};
  if (ex.rounds != 2000 || ex.n_runs != 5 || ex.k != 3 || cfg.mushroom.n_arms != 5 || cfg.mushroom.noise_sigma != 2.0)
    return {false, "mushroom_desk.cfg no longer describes N=5, k=3, T=2000, 5 runs, sigma 2"};
  const auto env = make_environment(cfg);
  const auto traces = run_experiment(*env, ex, threads());
  const double ducb2 = mean_pseudo_regret(traces, "deep_ucb2").back();
  const double linear = mean_pseudo_regret(traces, "linear").back();
  return {ducb2 <= linear, fmt("final mean cum pseudo-regret: deep_ucb2 %.1f, linear %.1f (data: %s)", ducb2, linear,
                                mushroom_data_in_use(cfg).filename().c_str())};
}

// ---- 7 ----

Outcome mnist_ordering() {
  auto cfg = load_config(kConfigs / "mnist_desk.cfg");
  auto& ex = cfg.experiment;
  ex.policies = {"deep_ucb2", "linear", "linucb", "thompson", "eps_greedy"};
  if (ex.rounds != 2000 || ex.n_runs != 5 || ex.k != 3 || cfg.mnist.n_arms != 5 || cfg.mnist.noise_sigma != 0.5 ||
      cfg.mnist.pool_size != 10000)
    return {false, "mnist_desk.cfg no longer describes N=5, k=3, T=2000, 5 runs, sigma 0.5, 10k pool"};
  const auto env = make_environment(cfg);
  const auto traces = run_experiment(*env, ex, threads());
  std::map<std::string, double> reward;
  std::map<std::string, std::size_t> runs;
  for (const auto& tr : traces) {
    reward[tr.policy] += tr.rows.back().norm_cum_reward;
    ++runs[tr.policy];
  }
  for (auto& [p, v] : reward) v /= static_cast<double>(runs[p]);
  const double d = reward["deep_ucb2"];
  const bool pass = d > reward["linear"] && d > reward["linucb"] && d > reward["thompson"] &&
                    d >= 0.95 * reward["eps_greedy"];
  return {pass, fmt("final mean normalized reward: deep_ucb2 %.4f, linear %.4f, linucb %.4f, thompson %.4f, "
                    "eps_greedy %.4f (needs >= %.4f); pool %zu images",
                    d, reward["linear"], reward["linucb"], reward["thompson"], reward["eps_greedy"],
                    0.95 * reward["eps_greedy"], dynamic_cast<const MnistEnv&>(*env).pool_size())};
}

// ---- 8 ----

Outcome exploration_phase() {
  DeepUcb1Config cfg;
  cfg.exploration_repetitions = 3;
  cfg.net.hidden_dim = 8;
  DeepUcb1 policy(5, 3, cfg, 8);
  Rng rng(808);
  std::vector<std::size_t> pulls(5, 0);
  for (std::size_t t = 1; t <= 15; ++t) {
    Eigen::MatrixXd c(3, 5);
    for (auto& v : c.reshaped()) v = normal(rng, 0.0, 1.0);
    const auto arms = policy.select(c, t, 1);
    ++pulls[arms.at(0)];
    policy.update(c, arms, std::vector<double>{normal(rng, 0.0, 1.0)}, t);
  }
  const bool pass = std::all_of(pulls.begin(), pulls.end(), [](std::size_t n) { return n == 3; }) &&
                    policy.arm_counts() == pulls;
  return {pass, fmt("pulls after round 15: %zu %zu %zu %zu %zu", pulls[0], pulls[1], pulls[2], pulls[3], pulls[4])};
}

// ---- 9 ----

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "deepucb_acceptance_9";
  fs::remove_all(base);
  const auto config = kConfigs / "mushroom_desk.cfg";
  for (const auto* sub : {"a", "b"}) {
    const std::string cmd = kCli.string() + " run --config " + config.string() + " --out " + (base / sub).string() +
                            " > " + (base.string() + "_" + sub + ".log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "deepucb run failed: " + cmd};
  }
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto cfg = load_config(config);
  std::string detail;
  bool pass = true;
  for (const auto* f : {"mushroom_desk_rounds.csv", "mushroom_desk_aggregate.csv"}) {
    const auto a = slurp(base / "a" / f), b = slurp(base / "b" / f);
    const bool same = !a.empty() && a == b;
    pass = pass && same;
    detail += fmt("%s %s (%zu bytes); ", f, same ? "identical" : "DIFFERENT", a.size());
  }
  const auto csv = slurp(base / "a/mushroom_desk_rounds.csv");
  const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  const auto& ex = cfg.experiment;
  const std::size_t expect_rows = ex.n_runs * ex.rounds * ex.policies.size();
  pass = pass && rows == expect_rows;
  detail += fmt("%zu data rows (expected %zu)", rows, expect_rows);
  fs::remove_all(base);
  return {pass, detail};
}

// ---- 10 ----

class OraclePolicy : public Policy {
 public:
  OraclePolicy(std::size_t n, std::size_t d, const Eigen::VectorXd* expected)
      : Policy("oracle", n, d), expected_(expected) {}
  ArmList select(const Contexts& contexts, std::size_t t, std::size_t k) override {
    check_select_args(contexts, t, k);
    return select_top_k(*expected_, k);
  }
  void update(const Contexts&, std::span<const std::size_t>, std::span<const double>, std::size_t) override {}
  void save(std::ostream&) const override {}
  void load(std::istream&) override {}

 private:
  const Eigen::VectorXd* expected_;
};

Outcome regret_accounting() {
  const auto cfg = load_config(kConfigs / "mushroom_desk.cfg");
  const auto env = make_environment(cfg);
  const CellSpec spec{5000, 3, 4242};

  Eigen::VectorXd current;
  OraclePolicy oracle_policy(env->n_arms(), env->context_dim(), &current);
  const auto oracle_trace =
      run_cell(*env, oracle_policy, spec, 0, [&](std::size_t, const Round& r) { current = r.expected; });
  double oracle_max = 0.0;
  for (const auto& row : oracle_trace.rows) oracle_max = std::max(oracle_max, std::abs(row.cum_pseudo_regret));

  UniformRandom random_policy(env->n_arms(), env->context_dim(), 99);
  const auto trace = run_cell(*env, random_policy, spec, 0);
  std::vector<double> per_round;
  for (const auto& row : trace.rows) per_round.push_back(row.expected_optimal - row.expected_chosen);
  const double mean = oracle::mean(per_round);
  const double se = oracle::sample_std(per_round) / std::sqrt(static_cast<double>(per_round.size()));
  const double p_edible = cfg.mushroom.edible_probability;
  const double expect = oracle::random_policy_pseudo_regret_bernoulli(env->n_arms(), 3, p_edible);
  const bool pass = oracle_max == 0.0 && std::abs(mean - expect) <= 3.0 * se;
  return {pass, fmt("oracle max |cum pseudo-regret| %.1f; uniform random %.4f per round vs enumeration %.4f "
                    "(3 SE = %.4f)",
                    oracle_max, mean, expect, 3.0 * se)};
}

std::vector<Criterion> criteria() {
  return {
      {"1", "gradient correctness", 30, gradient_check},
      {"2-mse", "variance network convergence, MSE-trained NN2", 60,
       [] { return variance_convergence(nn::LossKind::MSE); }},
      {"2-l1", "variance network convergence, Deep UCB2 default (L1) NN2", 60,
       [] { return variance_convergence(nn::LossKind::L1); }},
      {"3", "LinUCB incremental vs dense solve", 10, linucb_equivalence},
      {"4", "top-k vs exhaustive subsets", 10, top_k_correctness},
      {"5", "Weak-CMAB sublinear regret (Deep UCB1)", 600, weakcmab_sublinearity},
      {"6", "Mushroom: Deep UCB2 regret <= linear regression", 600, mushroom_ordering},
      {"7", "MNIST: Deep UCB2 reward ordering", 1800, mnist_ordering},
      {"8", "Deep UCB1 exploration phase", 1, exploration_phase},
      {"9", "CLI determinism on mushroom_desk.cfg", 600, determinism},
      {"10", "regret accounting", 120, regret_accounting},
  };
}

}  // namespace

int main(int argc, char** argv) {
  keep_large_allocations();
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only;
  bool list = false;
  app.add_option("--only", only, "Criterion ids to run");
  app.add_flag("--list", list, "List criterion ids");
  CLI11_PARSE(app, argc, argv);

  const auto all = criteria();
  if (list) {
    for (const auto& c : all) std::printf("%-6s %s (limit %.0f s)\n", c.id.c_str(), c.title.c_str(), c.time_limit_s);
    return 0;
  }
  const std::set<std::string> wanted(only.begin(), only.end());
  for (const auto& id : wanted)
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.id == id; })) {
      std::fprintf(stderr, "unknown criterion '%s' (see --list)\n", id.c_str());
      return 2;
    }

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = out.passed && in_time;
    failures += !pass;
    std::printf("%s [%s] %s: %s; %.1f s (limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id.c_str(), c.title.c_str(),
                out.detail.c_str(), secs, c.time_limit_s, in_time ? "" : ", EXCEEDED");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
