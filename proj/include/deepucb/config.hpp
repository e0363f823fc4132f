#pragma once

// Experiment configuration files: INI sections of flat key = value pairs.
//
//   [experiment]   id, environment, policies, rounds, k, runs, seed, train_every
//   [network]      hidden_dim, activation, epochs, initial_lr, lr_decay_factor,
//                  decay_every_epochs, batch_mode, batch_size
//   [deep_ucb1] [deep_ucb2] [linucb] [linear] [eps_greedy] [neural_linear] [thompson]
//   one environment section matching `environment`:
//   [mushroom] [mnist] [weakcmab] [linear_env] [nonlinear_env]
//
// Unknown sections or keys are errors. Relative dataset paths are resolved
// against the directory of the config file.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "deepucb/envs/mnist.hpp"
#include "deepucb/envs/mushroom.hpp"
#include "deepucb/envs/synthetic.hpp"
#include "deepucb/envs/weak_cmab.hpp"
#include "deepucb/harness/run.hpp"

namespace deepucb {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, 5> kEnvironmentNames = {"mushroom", "mnist", "weakcmab", "linear_env",
                                                                      "nonlinear_env"};

struct RunConfig {
  ExperimentSpec experiment{};
  std::string environment = "mushroom";
  MushroomEnvConfig mushroom{};
  std::filesystem::path mushroom_fallback;  // used when mushroom.data does not exist
  MnistEnvConfig mnist{};
  WeakCmabConfig weakcmab{};
  SyntheticConfig synthetic{};
  std::filesystem::path base_dir;  // not serialized

  bool operator==(const RunConfig& o) const {
    return experiment == o.experiment && environment == o.environment && mushroom == o.mushroom &&
           mushroom_fallback == o.mushroom_fallback && mnist == o.mnist && weakcmab == o.weakcmab &&
           synthetic == o.synthetic;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Reads one section, tracking which keys were consumed.
class SectionReader {
 public:
  SectionReader(std::string name, const boost::property_tree::ptree* tree) : name_(std::move(name)), tree_(tree) {}

  bool present() const { return tree_ != nullptr; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!tree_) return;
    auto it = tree_->find(key);
    if (it == tree_->not_found()) return;
    used_.insert(key);
    const std::string raw = trim(it->second.data());
    try {
      out = convert<T>(raw);
    } catch (const std::exception& e) {
      throw ConfigError("[" + name_ + "] " + key + " = '" + raw + "': " + e.what());
    }
  }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_) {
      if (!value.empty()) throw ConfigError("[" + name_ + "] " + key + ": nested keys are not supported");
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
    }
  }

 private:
  template <typename T>
  static T convert(const std::string& raw) {
    if constexpr (std::is_same_v<T, std::string>) {
      return raw;
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      if (raw.empty()) throw std::invalid_argument("empty path");
      return std::filesystem::path(raw);
    } else if constexpr (std::is_same_v<T, double>) {
      return parse_double(raw);
    } else if constexpr (std::is_integral_v<T>) {
      T v{};
      const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || p != raw.data() + raw.size()) throw std::invalid_argument("not a valid integer");
      return v;
    } else if constexpr (std::is_same_v<T, nn::Activation>) {
      return nn::parse_activation(raw);
    } else if constexpr (std::is_same_v<T, nn::LossKind>) {
      return nn::parse_loss(raw);
    } else if constexpr (std::is_same_v<T, ArmRange>) {
      return parse_arm_range(raw);
    } else if constexpr (std::is_same_v<T, nn::BatchMode>) {
      if (raw == "full") return nn::BatchMode::FullBatch;
      if (raw == "minibatch") return nn::BatchMode::Minibatch;
      throw std::invalid_argument("expected 'full' or 'minibatch'");
    } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
      return split(raw, ',');
    } else if constexpr (std::is_same_v<T, std::vector<MeanBand>>) {
      std::vector<MeanBand> bands;
      for (const auto& item : split(raw, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("bands are written lo:hi");
        bands.push_back({parse_double(trim(item.substr(0, colon))), parse_double(trim(item.substr(colon + 1)))});
      }
      return bands;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config value type");
    }
  }

  std::string name_;
  const boost::property_tree::ptree* tree_;
  std::set<std::string> used_;
};

inline std::string batch_mode_name(nn::BatchMode m) { return m == nn::BatchMode::FullBatch ? "full" : "minibatch"; }

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  const std::string text(std::istreambuf_iterator<char>(in), {});
  boost::property_tree::ptree tree;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::set<std::string> policy_sections = {"network",    "deep_ucb1",     "deep_ucb2", "linucb",
                                                        "linear",     "eps_greedy",    "neural_linear",
                                                        "thompson"};
  auto check_section = [&](const std::string& name) {
    const bool known = name == "experiment" || policy_sections.count(name) ||
                       std::find(kEnvironmentNames.begin(), kEnvironmentNames.end(), name) != kEnvironmentNames.end();
    if (!known) throw ConfigError("unknown section [" + name + "]");
  };
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty())
      throw ConfigError("key '" + name + "' must be inside a section");
    check_section(name);
  }
  // The INI reader drops empty sections; check their headers too.
  std::set<std::string> headers;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    line = detail::trim(line);
    if (line.size() > 2 && line.front() == '[' && line.back() == ']') {
      headers.insert(line.substr(1, line.size() - 2));
      check_section(line.substr(1, line.size() - 2));
    }
  }
  auto section = [&](const std::string& name) {
    auto it = tree.find(name);
    return detail::SectionReader(name, it == tree.not_found() ? nullptr : &it->second);
  };

  RunConfig cfg;
  cfg.base_dir = base_dir;
  auto& ex = cfg.experiment;
  auto& s = ex.settings;

  auto exp = section("experiment");
  if (!headers.count("experiment")) throw ConfigError("missing section [experiment]");
  exp.get("id", ex.experiment_id);
  exp.get("environment", cfg.environment);
  exp.get("policies", ex.policies);
  exp.get("rounds", ex.rounds);
  exp.get("k", ex.k);
  exp.get("runs", ex.n_runs);
  exp.get("seed", ex.base_seed);
  exp.get("train_every", s.train_every);
  exp.reject_unknown();

  auto net = section("network");
  net.get("hidden_dim", s.net.hidden_dim);
  net.get("activation", s.net.activation);
  net.get("epochs", s.net.schedule.epochs);
  net.get("initial_lr", s.net.schedule.initial_lr);
  net.get("lr_decay_factor", s.net.schedule.lr_decay_factor);
  net.get("decay_every_epochs", s.net.schedule.decay_every_epochs);
  net.get("batch_mode", s.net.schedule.batch_mode);
  net.get("batch_size", s.net.schedule.batch_size);
  net.reject_unknown();

  auto d1 = section("deep_ucb1");
  d1.get("exploration_repetitions", s.deep_ucb1.exploration_repetitions);
  d1.get("epsilon", s.deep_ucb1.epsilon);
  d1.get("variance_loss", s.deep_ucb1.variance_loss);
  d1.get("arm_range", s.deep_ucb1.arm_range);
  d1.reject_unknown();

  auto d2 = section("deep_ucb2");
  d2.get("variance_loss", s.deep_ucb2.variance_loss);
  d2.reject_unknown();

  auto lu = section("linucb");
  lu.get("alpha", s.linucb.alpha);
  lu.get("ridge", s.linucb.ridge);
  lu.get("refactor_every", s.linucb.refactor_every);
  lu.reject_unknown();

  auto lin = section("linear");
  lin.get("ridge", s.linear_ridge);
  lin.reject_unknown();

  auto eg = section("eps_greedy");
  eg.get("eps0", s.eps_greedy.eps0);
  eg.reject_unknown();

  auto nl = section("neural_linear");
  nl.get("ridge", s.neural_linear.ridge);
  nl.reject_unknown();

  auto th = section("thompson");
  th.get("prior_mean", s.thompson.prior_mean);
  th.get("prior_count", s.thompson.prior_count);
  th.get("noise_variance", s.thompson.noise_variance);
  th.reject_unknown();

  if (std::find(kEnvironmentNames.begin(), kEnvironmentNames.end(), cfg.environment) == kEnvironmentNames.end())
    throw ConfigError("[experiment] environment = '" + cfg.environment +
                      "': expected mushroom, mnist, weakcmab, linear_env or nonlinear_env");
  for (auto name : kEnvironmentNames)
    if (name != cfg.environment && headers.count(std::string(name)))
      throw ConfigError("section [" + std::string(name) + "] given but environment = " + cfg.environment);

  auto env = section(cfg.environment);
  if (cfg.environment == "mushroom") {
    env.get("data", cfg.mushroom.data);
    env.get("fallback", cfg.mushroom_fallback);
    env.get("arms", cfg.mushroom.n_arms);
    env.get("noise_sigma", cfg.mushroom.noise_sigma);
    env.get("edible_probability", cfg.mushroom.edible_probability);
  } else if (cfg.environment == "mnist") {
    env.get("images", cfg.mnist.images);
    env.get("labels", cfg.mnist.labels);
    env.get("arms", cfg.mnist.n_arms);
    env.get("noise_sigma", cfg.mnist.noise_sigma);
    env.get("pool_size", cfg.mnist.pool_size);
  } else if (cfg.environment == "weakcmab") {
    env.get("bands", cfg.weakcmab.bands);
    env.get("optimal_arm", cfg.weakcmab.optimal_arm);
    env.get("feature_dim", cfg.weakcmab.feature_dim);
    env.get("noise_sigma", cfg.weakcmab.noise_sigma);
    env.get("steepness", cfg.weakcmab.steepness);
    env.get("seed", cfg.weakcmab.seed);
  } else {
    cfg.synthetic.kind = cfg.environment == "linear_env" ? SyntheticKind::Linear : SyntheticKind::Nonlinear;
    env.get("arms", cfg.synthetic.n_arms);
    env.get("context_dim", cfg.synthetic.context_dim);
    env.get("noise_sigma", cfg.synthetic.noise_sigma);
    env.get("weight_scale", cfg.synthetic.weight_scale);
    env.get("seed", cfg.synthetic.seed);
  }
  env.reject_unknown();

  try {
    s.net.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[network] ") + e.what());
  }
  if (ex.rounds < 1) throw ConfigError("[experiment] rounds must be >= 1");
  if (ex.n_runs < 1) throw ConfigError("[experiment] runs must be >= 1");
  if (ex.k < 1) throw ConfigError("[experiment] k must be >= 1");
  if (ex.policies.empty()) throw ConfigError("[experiment] policies is empty");
  for (const auto& p : ex.policies)
    if (!is_policy_name(p)) throw ConfigError("[experiment] unknown policy '" + p + "'");
  if (s.net.hidden_dim < 1) throw ConfigError("[network] hidden_dim must be >= 1");
  if (s.train_every < 1) throw ConfigError("[experiment] train_every must be >= 1");
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  try {
    return parse_config(in, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Writes every setting explicitly; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
  const auto& ex = cfg.experiment;
  const auto& s = ex.settings;
  const auto& sch = s.net.schedule;
  auto d = [](double v) { return format_double(v); };
  std::ostringstream os;
  os << "[experiment]\n"
     << "id = " << ex.experiment_id << "\n"
     << "environment = " << cfg.environment << "\n"
     << "policies = " << detail::join(ex.policies) << "\n"
     << "rounds = " << ex.rounds << "\n"
     << "k = " << ex.k << "\n"
     << "runs = " << ex.n_runs << "\n"
     << "seed = " << ex.base_seed << "\n"
     << "train_every = " << s.train_every << "\n\n"
     << "[network]\n"
     << "hidden_dim = " << s.net.hidden_dim << "\n"
     << "activation = " << nn::to_string(s.net.activation) << "\n"
     << "epochs = " << sch.epochs << "\n"
     << "initial_lr = " << d(sch.initial_lr) << "\n"
     << "lr_decay_factor = " << d(sch.lr_decay_factor) << "\n"
     << "decay_every_epochs = " << sch.decay_every_epochs << "\n"
     << "batch_mode = " << detail::batch_mode_name(sch.batch_mode) << "\n"
     << "batch_size = " << sch.batch_size << "\n\n"
     << "[deep_ucb1]\n"
     << "exploration_repetitions = " << s.deep_ucb1.exploration_repetitions << "\n"
     << "epsilon = " << d(s.deep_ucb1.epsilon) << "\n"
     << "variance_loss = " << nn::to_string(s.deep_ucb1.variance_loss) << "\n"
     << "arm_range = " << to_string(s.deep_ucb1.arm_range) << "\n\n"
     << "[deep_ucb2]\n"
     << "variance_loss = " << nn::to_string(s.deep_ucb2.variance_loss) << "\n\n"
     << "[linucb]\n"
     << "alpha = " << d(s.linucb.alpha) << "\n"
     << "ridge = " << d(s.linucb.ridge) << "\n"
     << "refactor_every = " << s.linucb.refactor_every << "\n\n"
     << "[linear]\n"
     << "ridge = " << d(s.linear_ridge) << "\n\n"
     << "[eps_greedy]\n"
     << "eps0 = " << d(s.eps_greedy.eps0) << "\n\n"
     << "[neural_linear]\n"
     << "ridge = " << d(s.neural_linear.ridge) << "\n\n"
     << "[thompson]\n"
     << "prior_mean = " << d(s.thompson.prior_mean) << "\n"
     << "prior_count = " << d(s.thompson.prior_count) << "\n"
     << "noise_variance = " << d(s.thompson.noise_variance) << "\n\n"
     << "[" << cfg.environment << "]\n";
  if (cfg.environment == "mushroom") {
    os << "data = " << cfg.mushroom.data.string() << "\n";
    if (!cfg.mushroom_fallback.empty()) os << "fallback = " << cfg.mushroom_fallback.string() << "\n";
    os << "arms = " << cfg.mushroom.n_arms << "\n"
       << "noise_sigma = " << d(cfg.mushroom.noise_sigma) << "\n"
       << "edible_probability = " << d(cfg.mushroom.edible_probability) << "\n";
  } else if (cfg.environment == "mnist") {
    os << "images = " << cfg.mnist.images.string() << "\n"
       << "labels = " << cfg.mnist.labels.string() << "\n"
       << "arms = " << cfg.mnist.n_arms << "\n"
       << "noise_sigma = " << d(cfg.mnist.noise_sigma) << "\n"
       << "pool_size = " << cfg.mnist.pool_size << "\n";
  } else if (cfg.environment == "weakcmab") {
    os << "bands = ";
    for (std::size_t i = 0; i < cfg.weakcmab.bands.size(); ++i)
      os << (i ? ", " : "") << d(cfg.weakcmab.bands[i].lo) << ":" << d(cfg.weakcmab.bands[i].hi);
    os << "\n"
       << "optimal_arm = " << cfg.weakcmab.optimal_arm << "\n"
       << "feature_dim = " << cfg.weakcmab.feature_dim << "\n"
       << "noise_sigma = " << d(cfg.weakcmab.noise_sigma) << "\n"
       << "steepness = " << d(cfg.weakcmab.steepness) << "\n"
       << "seed = " << cfg.weakcmab.seed << "\n";
  } else {
    os << "arms = " << cfg.synthetic.n_arms << "\n"
       << "context_dim = " << cfg.synthetic.context_dim << "\n"
       << "noise_sigma = " << d(cfg.synthetic.noise_sigma) << "\n"
       << "weight_scale = " << d(cfg.synthetic.weight_scale) << "\n"
       << "seed = " << cfg.synthetic.seed << "\n";
  }
  return os.str();
}

inline std::filesystem::path resolve_path(const RunConfig& cfg, const std::filesystem::path& p) {
  return p.is_absolute() || cfg.base_dir.empty() ? p : cfg.base_dir / p;
}

/// Builds the configured environment. Missing or malformed dataset files
/// raise DatasetError; inconsistent parameters raise ConfigError.
inline std::unique_ptr<Environment> make_environment(const RunConfig& cfg) {
  try {
    if (cfg.environment == "mushroom") {
      auto c = cfg.mushroom;
      c.data = resolve_path(cfg, c.data);
      if (!std::filesystem::exists(c.data) && !cfg.mushroom_fallback.empty()) {
        const auto fallback = resolve_path(cfg, cfg.mushroom_fallback);
        if (std::filesystem::exists(fallback)) c.data = fallback;
      }
      return std::make_unique<MushroomEnv>(c);
    }
    if (cfg.environment == "mnist") {
      auto c = cfg.mnist;
      c.images = resolve_path(cfg, c.images);
      c.labels = resolve_path(cfg, c.labels);
      return std::make_unique<MnistEnv>(c);
    }
    if (cfg.environment == "weakcmab") return std::make_unique<WeakCmabEnv>(cfg.weakcmab);
    return std::make_unique<SyntheticEnv>(cfg.synthetic);
  } catch (const DatasetError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[" + cfg.environment + "] " + e.what());
  }
}

/// Dataset path actually used for the mushroom environment (after fallback).
inline std::filesystem::path mushroom_data_in_use(const RunConfig& cfg) {
  const auto primary = resolve_path(cfg, cfg.mushroom.data);
  if (std::filesystem::exists(primary) || cfg.mushroom_fallback.empty()) return primary;
  return resolve_path(cfg, cfg.mushroom_fallback);
}

}  // namespace deepucb
