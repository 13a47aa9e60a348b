// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Balance metrics over partition plans: load-balance ratio (max/avg),
// the deviation and slice-evenness objectives, memory footprints, and a
// plan comparison table.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "optishard/common.hpp"
#include "optishard/dp_partition.hpp"

namespace optishard {

// max / avg of a non-negative load vector. All-zero loads are perfectly
// balanced by convention.
inline double load_balance_ratio(const std::vector<double>& values) {
  if (values.empty()) throw UnsupportedError("load vector is empty");
  double mx = 0.0, sum = 0.0;
  for (double v : values) {
    if (v < 0.0) throw UnsupportedError("loads must be non-negative");
    mx = std::max(mx, v);
    sum += v;
  }
  if (sum == 0.0) return 1.0;
  return mx / (sum / static_cast<double>(values.size()));
}

inline double load_balance_ratio(const std::vector<Cost>& values) {
  std::vector<double> d(values.begin(), values.end());
  return load_balance_ratio(d);
}

struct DpObjectives {
  double j_dp = 0.0;    // max_r |L_r - mean|
  double j_comm = 0.0;  // sum_i sum_r |S_{i,r} - numel_i / R|
};

inline DpObjectives dp_objectives(const DpPartitionPlan& plan,
                                  const BufferLayout& layout) {
  DpObjectives obj;
  double sum = 0.0;
  for (Cost l : plan.rank_loads) sum += static_cast<double>(l);
  const double mu = sum / static_cast<double>(plan.ranks);
  for (Cost l : plan.rank_loads)
    obj.j_dp = std::max(obj.j_dp, std::abs(static_cast<double>(l) - mu));
  for (std::size_t i = 0; i < plan.rank_sizes.size(); ++i) {
    const double even = static_cast<double>(layout.buckets[i].numel) /
                        static_cast<double>(plan.ranks);
    for (std::int64_t s : plan.rank_sizes[i])
      obj.j_comm += std::abs(static_cast<double>(s) - even);
  }
  return obj;
}

// Optimizer-state elements held per rank: owned elements times the number
// of persistent state tensors (momentum, master weight, ...). The default
// of 3 models master weight + two moments.
inline std::vector<Cost> rank_memory_elements(const DpPartitionPlan& plan,
                                              int state_multiplier = 3) {
  if (state_multiplier < 1)
    throw UnsupportedError("state_multiplier must be >= 1");
  std::vector<Cost> mem(static_cast<std::size_t>(plan.ranks), 0);
  for (const auto& sizes : plan.rank_sizes)
    for (int r = 0; r < plan.ranks; ++r)
      mem[static_cast<std::size_t>(r)] +=
          static_cast<Cost>(sizes[static_cast<std::size_t>(r)]) *
          static_cast<Cost>(state_multiplier);
  return mem;
}

// Per-rank loads re-costed under a different execution model than the one
// the plan was built with (partial parameters pro-rated).
inline std::vector<Cost> rank_exec_loads(const DpPartitionPlan& plan,
                                         const BufferLayout& layout,
                                         const std::vector<ParamSpec>& params,
                                         const CostModel& exec_model) {
  std::vector<Cost> loads(static_cast<std::size_t>(plan.ranks), 0);
  for (std::size_t i = 0; i < layout.buckets.size(); ++i) {
    const auto& cuts = plan.cut_vectors[i];
    for (int r = 0; r < plan.ranks; ++r)
      loads[static_cast<std::size_t>(r)] += detail::slice_cost(
          layout.buckets[i], params, exec_model,
          cuts[static_cast<std::size_t>(r)],
          cuts[static_cast<std::size_t>(r) + 1]);
  }
  return loads;
}

struct PlanComparisonRow {
  std::string label;
  PlanMethod method = PlanMethod::kEqualChunk;
  CostKind cost_kind = CostKind::kNumel;
  double r_lb_cost = 0.0;    // under the plan's own cost kind
  double r_lb_flops = 0.0;   // re-costed with the muon flops model
  double r_lb_memory = 0.0;  // optimizer-state elements
  double j_dp = 0.0;
  double j_comm = 0.0;
};

inline PlanComparisonRow summarize_plan(const std::string& label,
                                        const DpPartitionPlan& plan,
                                        const BufferLayout& layout,
                                        const std::vector<ParamSpec>& params) {
  PlanComparisonRow row;
  row.label = label;
  row.method = plan.method;
  row.cost_kind = plan.cost_kind;
  row.r_lb_cost = load_balance_ratio(plan.rank_loads);
  CostModel flops;
  flops.kind = CostKind::kFlopsMuon;
  row.r_lb_flops =
      load_balance_ratio(rank_exec_loads(plan, layout, params, flops));
  row.r_lb_memory = load_balance_ratio(rank_memory_elements(plan));
  const DpObjectives obj = dp_objectives(plan, layout);
  row.j_dp = obj.j_dp;
  row.j_comm = obj.j_comm;
  return row;
}

inline std::vector<PlanComparisonRow> compare_plans(
    const std::vector<std::pair<std::string, const DpPartitionPlan*>>& plans,
    const BufferLayout& layout, const std::vector<ParamSpec>& params) {
  std::vector<PlanComparisonRow> rows;
  rows.reserve(plans.size());
  for (const auto& [label, plan] : plans)
    rows.push_back(summarize_plan(label, *plan, layout, params));
  return rows;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

inline std::string comparison_csv(const std::vector<PlanComparisonRow>& rows) {
  std::string out =
      "plan,method,cost,r_lb_cost,r_lb_flops,r_lb_memory,j_dp,j_comm\n";
  for (const PlanComparisonRow& r : rows) {
    out += r.label;
    out += ',';
    out += to_string(r.method);
    out += ',';
    out += to_string(r.cost_kind);
    for (double v : {r.r_lb_cost, r.r_lb_flops, r.r_lb_memory, r.j_dp,
                     r.j_comm}) {
      out += ',';
      out += detail::fmt_double(v);
    }
    out += '\n';
  }
  return out;
}

inline std::string rank_loads_csv(const std::vector<Cost>& loads) {
  std::string out = "rank,load\n";
  for (std::size_t r = 0; r < loads.size(); ++r)
    out += std::to_string(r) + "," + std::to_string(loads[r]) + "\n";
  return out;
}

}  // namespace optishard
