#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "deepucb/harness/stats.hpp"
#include "deepucb/serialize.hpp"

namespace deepucb {

/// One row per round per policy per run.
inline void write_trace_csv(std::ostream& os, const std::string& experiment_id, const std::vector<RegretTrace>& traces) {
  os << "experiment_id,policy,run_index,t";
  for (auto c : kTraceColumns) os << ',' << c;
  os << '\n';
  for (const auto& tr : traces)
    for (std::size_t t = 0; t < tr.rows.size(); ++t) {
      os << experiment_id << ',' << tr.policy << ',' << tr.run_index << ',' << t + 1;
      for (double v : columns_of(tr.rows[t])) os << ',' << format_double(v);
      os << '\n';
    }
}

/// One row per round per policy: mean_<col> and std_<col> across runs.
inline void write_aggregate_csv(std::ostream& os, const std::string& experiment_id,
                                const std::vector<AggregateTrace>& aggregates) {
  os << "experiment_id,policy,n_runs,t";
  for (auto c : kTraceColumns) os << ",mean_" << c;
  for (auto c : kTraceColumns) os << ",std_" << c;
  os << '\n';
  for (const auto& a : aggregates)
    for (std::size_t t = 0; t < a.mean.size(); ++t) {
      os << experiment_id << ',' << a.policy << ',' << a.n_runs << ',' << t + 1;
      for (double v : a.mean[t]) os << ',' << format_double(v);
      for (double v : a.std[t]) os << ',' << format_double(v);
      os << '\n';
    }
}

}  // namespace deepucb
