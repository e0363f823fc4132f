#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepucb/harness/run.hpp"

namespace deepucb {

inline constexpr std::array<const char*, 6> kTraceColumns = {"realized_reward",     "expected_chosen",
                                                             "expected_optimal",    "cum_realized_regret",
                                                             "cum_pseudo_regret",   "norm_cum_reward"};

inline std::array<double, 6> columns_of(const RoundRecord& r) {
  return {r.realized_reward, r.expected_chosen, r.expected_optimal, r.cum_realized_regret, r.cum_pseudo_regret,
          r.norm_cum_reward};
}

/// Per-round mean and sample standard deviation (ddof = 1; 0 for one run)
/// of every trace column.
struct AggregateTrace {
  std::string policy;
  std::size_t n_runs = 0;
  std::vector<std::array<double, 6>> mean;
  std::vector<std::array<double, 6>> std;
};

inline AggregateTrace aggregate_runs(const std::vector<RegretTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate_runs: no traces");
  const std::size_t len = traces.front().rows.size();
  for (const auto& tr : traces)
    if (tr.rows.size() != len)
      throw std::invalid_argument("aggregate_runs: trace lengths differ (" + std::to_string(len) + " vs " +
                                  std::to_string(tr.rows.size()) + ")");
  AggregateTrace agg{traces.front().policy, traces.size(), {}, {}};
  agg.mean.assign(len, {});
  agg.std.assign(len, {});
  const double n = static_cast<double>(traces.size());
  for (std::size_t t = 0; t < len; ++t) {
    auto& m = agg.mean[t];
    for (const auto& tr : traces) {
      const auto v = columns_of(tr.rows[t]);
      for (std::size_t c = 0; c < 6; ++c) m[c] += v[c];
    }
    for (auto& x : m) x /= n;
    if (traces.size() < 2) continue;
    auto& s = agg.std[t];
    for (const auto& tr : traces) {
      const auto v = columns_of(tr.rows[t]);
      for (std::size_t c = 0; c < 6; ++c) s[c] += (v[c] - m[c]) * (v[c] - m[c]);
    }
    for (auto& x : s) x = std::sqrt(x / (n - 1.0));
  }
  return agg;
}

/// Groups traces by policy (in first-appearance order) and aggregates each.
inline std::vector<AggregateTrace> aggregate_by_policy(const std::vector<RegretTrace>& traces) {
  std::vector<std::string> order;
  for (const auto& tr : traces)
    if (std::find(order.begin(), order.end(), tr.policy) == order.end()) order.push_back(tr.policy);
  std::vector<AggregateTrace> out;
  for (const auto& name : order) {
    std::vector<RegretTrace> group;
    for (const auto& tr : traces)
      if (tr.policy == name) group.push_back(tr);
    out.push_back(aggregate_runs(group));
  }
  return out;
}

struct SublinearityConfig {
  std::size_t early_lo = 1, early_hi = 400;
  std::size_t late_lo = 3601, late_hi = 4000;
  double max_late_to_early = 0.5;
  std::vector<std::size_t> checkpoints{1000, 2000, 4000};
  double checkpoint_slack = 0.25;  // ratio may grow by at most this fraction between checkpoints
};

struct SublinearityReport {
  double early_rate = 0.0;  // mean per-round pseudo-regret in the early window
  double late_rate = 0.0;
  double late_to_early = 0.0;
  std::vector<double> log2_ratios;  // cum_pseudo_regret(t) / ln(t)^2 at each checkpoint
  bool window_pass = false;
  bool checkpoint_pass = false;
  bool pass() const { return window_pass && checkpoint_pass; }
};

/// `cum` is the cumulative pseudo-regret, cum[t-1] for round t.
inline SublinearityReport sublinearity_check(const std::vector<double>& cum, const SublinearityConfig& cfg) {
  auto need = [&](std::size_t t) {
    if (t < 1 || t > cum.size())
      throw std::invalid_argument("sublinearity_check: round " + std::to_string(t) + " outside trace of length " +
                                  std::to_string(cum.size()));
  };
  auto rate = [&](std::size_t lo, std::size_t hi) {
    need(lo);
    need(hi);
    if (hi < lo) throw std::invalid_argument("sublinearity_check: empty window");
    const double before = lo > 1 ? cum[lo - 2] : 0.0;
    return (cum[hi - 1] - before) / static_cast<double>(hi - lo + 1);
  };
  SublinearityReport r;
  r.early_rate = rate(cfg.early_lo, cfg.early_hi);
  r.late_rate = rate(cfg.late_lo, cfg.late_hi);
  r.late_to_early = r.early_rate > 0.0 ? r.late_rate / r.early_rate : (r.late_rate > 0.0 ? INFINITY : 0.0);
  r.window_pass = r.late_rate < cfg.max_late_to_early * r.early_rate || (r.early_rate == 0.0 && r.late_rate == 0.0);
  r.checkpoint_pass = true;
  for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
    const std::size_t t = cfg.checkpoints[i];
    need(t);
    if (t < 2) throw std::invalid_argument("sublinearity_check: checkpoints must be >= 2");
    const double l = std::log(static_cast<double>(t));
    r.log2_ratios.push_back(cum[t - 1] / (l * l));
    if (i > 0 && r.log2_ratios[i] > (1.0 + cfg.checkpoint_slack) * r.log2_ratios[i - 1]) r.checkpoint_pass = false;
  }
  return r;
}

inline std::vector<double> pseudo_regret_curve(const std::vector<std::array<double, 6>>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[4]);
  return out;
}

inline std::vector<double> pseudo_regret_curve(const RegretTrace& trace) {
  std::vector<double> out;
  out.reserve(trace.rows.size());
  for (const auto& r : trace.rows) out.push_back(r.cum_pseudo_regret);
  return out;
}

}  // namespace deepucb
