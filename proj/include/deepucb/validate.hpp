#pragma once

// Self-checks behind `deepucb validate`. Each suite returns named checks with
// the measured quantity and its threshold.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "deepucb/config.hpp"
#include "deepucb/nn/mlp.hpp"
#include "deepucb/policies/linear.hpp"
#include "deepucb/testing/oracles.hpp"

namespace deepucb::validate {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

namespace detail {

inline oracle::Vec to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline oracle::Mat to_rows(const Eigen::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return out;
}

inline double oracle_loss(const nn::Mlp& shape, const oracle::Vec& params, const nn::Dataset& data, nn::LossKind kind) {
  nn::Mlp tmp = shape;
  tmp.set_parameters(Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
  const auto w1 = to_rows(tmp.weights_hidden());
  const auto w2 = to_rows(tmp.weights_out());
  const auto b1 = to_vec(tmp.bias_hidden());
  const auto b2 = to_vec(tmp.bias_out());
  double total = 0.0;
  for (Eigen::Index s = 0; s < data.inputs.cols(); ++s) {
    const auto out = oracle::mlp_forward(w1, b1, w2, b2, tmp.activation() == nn::Activation::Sigmoid,
                                         to_vec(data.inputs.col(s)));
    for (std::size_t o = 0; o < out.size(); ++o) {
      const double d = out[o] - data.targets(static_cast<Eigen::Index>(o), s);
      total += kind == nn::LossKind::MSE ? d * d : std::abs(d);
    }
  }
  return total / static_cast<double>(data.targets.size());
}

inline Check make_check(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value < threshold, value, threshold, std::move(detail)};
}

}  // namespace detail

/// Analytic vs central-difference gradients on random small networks.
/// L1 targets are kept at least 1e-2 away from the prediction.
inline SuiteResult gradient_suite(std::size_t trials = 100, std::uint64_t seed = 2024) {
  SuiteResult res{"gradients", {}};
  Rng rng(seed);
  std::map<std::string, double> worst;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto act = trial % 2 ? nn::Activation::Sigmoid : nn::Activation::Relu;
    const auto kind = (trial / 2) % 2 ? nn::LossKind::L1 : nn::LossKind::MSE;
    const auto m = 1 + uniform_index(rng, 5), z = 1 + uniform_index(rng, 6), o = 1 + uniform_index(rng, 2);
    nn::Mlp net(m, z, o, act, rng());
    for (auto& b : net.bias_hidden()) b = uniform(rng, -0.5, 0.5);
    for (auto& b : net.bias_out()) b = uniform(rng, -0.5, 0.5);
    const auto n = static_cast<Eigen::Index>(1 + uniform_index(rng, 8));
    nn::Dataset d{Eigen::MatrixXd(static_cast<Eigen::Index>(m), n), Eigen::MatrixXd(static_cast<Eigen::Index>(o), n)};
    for (auto& v : d.inputs.reshaped()) v = uniform(rng, -1.5, 1.5);
    const Eigen::MatrixXd pred = net.forward_batch(d.inputs);
    for (Eigen::Index i = 0; i < d.targets.size(); ++i) {
      double off = uniform(rng, -1.0, 1.0);
      if (std::abs(off) < 1e-2) off = 0.5;
      d.targets.reshaped()(i) = pred.reshaped()(i) + off;
    }
    const Eigen::VectorXd g = net.gradient(d, kind).flatten();
    const auto fd = oracle::finite_difference_gradient(
        [&](const oracle::Vec& p) { return detail::oracle_loss(net, p, d, kind); }, detail::to_vec(net.parameters()));
    double err = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double f = fd[static_cast<std::size_t>(i)];
      err = std::max(err, std::abs(g(i) - f) / std::max({std::abs(g(i)), std::abs(f), 1e-6}));
    }
    auto& w = worst[nn::to_string(act) + "/" + nn::to_string(kind)];
    w = std::max(w, err);
  }
  for (const auto& [combo, err] : worst)
    res.checks.push_back(detail::make_check("max_relative_error." + combo, err, 1e-4));
  return res;
}

/// Incremental LinUCB vs dense ridge solve, top-k vs exhaustive search.
inline SuiteResult oracle_suite(std::uint64_t seed = 13) {
  SuiteResult res{"oracles", {}};
  Rng rng(seed);

  const std::size_t dim = 4, arms = 5;
  LinUcb lin(arms, dim, {});
  std::vector<std::vector<oracle::Vec>> xs(arms);
  std::vector<oracle::Vec> rs(arms);
  double dev = 0.0;
  for (int u = 0; u < 500; ++u) {
    const auto arm = uniform_index(rng, arms);
    Eigen::VectorXd x(dim);
    for (auto& v : x) v = uniform(rng, -2.0, 2.0);
    const double r = uniform(rng, -1.0, 1.0);
    lin.observe(arm, x, r);
    xs[arm].push_back(detail::to_vec(x));
    rs[arm].push_back(r);
    const auto expect = oracle::ridge_solve(xs[arm], rs[arm], dim, 1.0);
    const Eigen::VectorXd got = lin.theta(arm);
    for (std::size_t i = 0; i < dim; ++i) dev = std::max(dev, std::abs(got(static_cast<Eigen::Index>(i)) - expect[i]));
  }
  res.checks.push_back(detail::make_check("linucb.incremental_vs_dense_solve", dev, 1e-8, "500 updates over 5 arms"));

  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + uniform_index(rng, 10);
    Eigen::VectorXd s(static_cast<Eigen::Index>(n));
    for (auto& v : s) v = std::round(uniform(rng, -3.0, 3.0) * 4.0) / 4.0;  // coarse grid forces ties
    for (std::size_t k = 1; k <= n; ++k) {
      auto got = select_top_k(s, k);
      std::sort(got.begin(), got.end());
      const auto expect = oracle::best_subset_exhaustive(detail::to_vec(s), k);
      double sum_got = 0.0, sum_expect = 0.0;
      for (auto a : got) sum_got += s(static_cast<Eigen::Index>(a));
      for (auto a : expect) sum_expect += s(static_cast<Eigen::Index>(a));
      if (std::abs(sum_got - sum_expect) > 1e-12) ++mismatches;
    }
  }
  res.checks.push_back(detail::make_check("top_k.matches_exhaustive", static_cast<double>(mismatches), 0.5,
                                          "1000 score vectors, every k"));
  return res;
}

/// Band-separation certificate and band coverage of a Weak-CMAB instance.
/// A constructor rejection is reported as the failed check
/// `weakcmab.constructor_accepts`.
inline SuiteResult weakcmab_suite(const WeakCmabConfig& cfg) {
  SuiteResult res{"weakcmab", {}};
  std::optional<WeakCmabEnv> env;
  try {
    env.emplace(cfg);
    res.checks.push_back({"weakcmab.constructor_accepts", true, 0.0, 0.0, {}});
  } catch (const WeakCmabError& e) {
    res.checks.push_back({"weakcmab.constructor_accepts", false, e.delta(), 0.0, e.what()});
    return res;
  } catch (const std::invalid_argument& e) {
    res.checks.push_back({"weakcmab.constructor_accepts", false, 0.0, 0.0, e.what()});
    return res;
  }

  double min_delta = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < cfg.bands.size(); ++a)
    if (a != cfg.optimal_arm) {
      const double oracle_delta =
          cfg.bands[cfg.optimal_arm].lo - cfg.bands[a].hi - 2.0 * (cfg.bands[a].hi - cfg.bands[a].lo);
      min_delta = std::min(min_delta, oracle_delta);
      res.checks.push_back(detail::make_check("weakcmab.delta_matches_oracle.arm" + std::to_string(a),
                                              std::abs(env->delta(a) - oracle_delta), 1e-12));
    }
  res.checks.push_back({"weakcmab.min_delta_positive", min_delta > 0.0, min_delta, 0.0, {}});

  // Means sampled on a grid over the feature cube stay inside each band.
  Rng rng(cfg.seed);
  double outside = 0.0;
  for (std::size_t a = 0; a < cfg.bands.size(); ++a)
    for (int s = 0; s < 2000; ++s) {
      Eigen::VectorXd x(static_cast<Eigen::Index>(cfg.feature_dim));
      for (auto& v : x) v = uniform01(rng);
      const double mu = env->mean(a, x);
      outside = std::max({outside, cfg.bands[a].lo - mu, mu - cfg.bands[a].hi});
    }
  res.checks.push_back(detail::make_check("weakcmab.means_inside_bands", outside, 1e-12));
  return res;
}

/// Algorithm-map lint: every required identifier appears exactly once in the
/// identifier column of docs/algorithm_map.md and every identifier listed
/// there is declared somewhere under include/.
inline const std::vector<std::string>& algorithm_map_required() {
  static const std::vector<std::string> ids = {
      "deep_ucb2_score", "deep_ucb1_score", "deep_ucb1_bonus", "DeepUcb1::arm_bonus", "select_top_k",
      "exploration_arm", "ceil_sqrt",       "ensemble_slices", "DeepUcb2::update",    "DeepUcb1::update",
      "DeepUcb1::select", "DeepUcb2::select", "is_training_round", "TrainSchedule::lr_at", "weak_cmab_delta"};
  return ids;
}

inline std::vector<std::string> algorithm_map_identifiers(std::istream& in) {
  std::vector<std::string> ids;
  static const std::regex cell(R"(^\|[^|]*\|\s*`([A-Za-z_][A-Za-z0-9_:]*)`\s*\|)");
  for (std::string line; std::getline(in, line);) {
    std::smatch m;
    if (std::regex_search(line, m, cell)) ids.push_back(m[1]);
  }
  return ids;
}

inline SuiteResult docs_suite(const std::filesystem::path& repo_root) {
  SuiteResult res{"docs", {}};
  const auto map_path = repo_root / "docs" / "algorithm_map.md";
  std::ifstream in(map_path);
  if (!in) {
    res.checks.push_back({"docs.algorithm_map_readable", false, 0, 0, "cannot read " + map_path.string()});
    return res;
  }
  const auto ids = algorithm_map_identifiers(in);
  std::map<std::string, int> counts;
  for (const auto& id : ids) ++counts[id];

  for (const auto& id : algorithm_map_required()) {
    const int c = counts.count(id) ? counts[id] : 0;
    res.checks.push_back({"docs.listed_once." + id, c == 1, static_cast<double>(c), 1.0,
                          c == 0 ? "missing from the map" : (c > 1 ? "listed more than once" : "")});
  }

  std::string sources;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(repo_root / "include")) {
    if (!entry.is_regular_file()) continue;
    std::ifstream f(entry.path());
    sources += std::string(std::istreambuf_iterator<char>(f), {});
  }
  for (const auto& [id, c] : counts) {
    const auto colon = id.rfind("::");
    const std::string owner = colon == std::string::npos ? "" : id.substr(0, colon);
    const std::string member = colon == std::string::npos ? id : id.substr(colon + 2);
    const bool found = std::regex_search(sources, std::regex("\\b" + member + "\\s*\\(")) &&
                       (owner.empty() || std::regex_search(sources, std::regex("(class|struct)\\s+" + owner + "\\b")));
    res.checks.push_back({"docs.exists_in_code." + id, found, found ? 1.0 : 0.0, 1.0, found ? "" : "not found under include/"});
  }
  return res;
}

}  // namespace deepucb::validate
