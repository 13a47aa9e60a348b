// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor-parallel micro-group construction. Items are packed greedily in
// descending cost order; each candidate group is balanced with an LPT
// min-heap solve, and the group is sealed one item before the balanced
// makespan would exceed the capacity.

#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "optishard/common.hpp"
#include "optishard/cost.hpp"
#include "optishard/workload.hpp"

namespace optishard {

struct TpItem {
  int param_id = 0;
  Cost cost = 0;
};

struct HeapAssignment {
  std::vector<std::vector<int>> rank_params;  // per rank, assignment order
  std::vector<Cost> rank_loads;
  Cost l_max = 0;
};

struct MicroGroup {
  std::vector<int> param_ids;  // descending cost order
  std::vector<std::vector<int>> rank_params;
  std::vector<Cost> rank_loads;
  Cost l_max = 0;
};

struct MicroGroupPlan {
  int ranks = 1;
  CostKind cost_kind = CostKind::kNumel;
  Cost c_max = 0;
  std::vector<MicroGroup> groups;
};

namespace detail {

// Descending cost, then descending id: a strict total order so that equal
// costs still schedule identically everywhere.
inline void sort_items_desc(std::vector<TpItem>& items) {
  std::sort(items.begin(), items.end(), [](const TpItem& a, const TpItem& b) {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.param_id > b.param_id;
  });
}

}  // namespace detail

// Longest-processing-time balance of the given items across ranks: items in
// descending cost order, each assigned to the currently least-loaded rank
// (ties resolved toward the lowest rank index).
inline HeapAssignment min_heap_balance(std::vector<TpItem> items, int ranks) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  detail::sort_items_desc(items);
  HeapAssignment out;
  out.rank_params.assign(static_cast<std::size_t>(ranks), {});
  out.rank_loads.assign(static_cast<std::size_t>(ranks), 0);
  using Slot = std::pair<Cost, int>;
  std::priority_queue<Slot, std::vector<Slot>, std::greater<Slot>> heap;
  for (int r = 0; r < ranks; ++r) heap.emplace(0, r);
  for (const TpItem& it : items) {
    auto [load, r] = heap.top();
    heap.pop();
    out.rank_params[static_cast<std::size_t>(r)].push_back(it.param_id);
    load += it.cost;
    out.rank_loads[static_cast<std::size_t>(r)] = load;
    out.l_max = std::max(out.l_max, load);
    heap.emplace(load, r);
  }
  return out;
}

// Greedy packing with rollback: grow the candidate group while the balanced
// makespan stays within c_max; on overflow, the offending item is pulled
// back, the group is sealed with a fresh solve, and the item seeds the next
// group. An item whose own cost exceeds c_max can never be scheduled.
inline MicroGroupPlan build_micro_groups(std::vector<TpItem> items, int ranks,
                                         Cost c_max, CostKind cost_kind) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  if (c_max == 0) throw UnschedulableError("c_max must be positive");
  detail::sort_items_desc(items);
  MicroGroupPlan plan;
  plan.ranks = ranks;
  plan.cost_kind = cost_kind;
  plan.c_max = c_max;

  std::vector<TpItem> candidate;
  auto seal = [&]() {
    HeapAssignment a = min_heap_balance(candidate, ranks);
    MicroGroup g;
    for (const TpItem& it : candidate) g.param_ids.push_back(it.param_id);
    g.rank_params = std::move(a.rank_params);
    g.rank_loads = std::move(a.rank_loads);
    g.l_max = a.l_max;
    plan.groups.push_back(std::move(g));
    candidate.clear();
  };

  for (std::size_t idx = 0; idx < items.size();) {
    candidate.push_back(items[idx]);
    HeapAssignment trial = min_heap_balance(candidate, ranks);
    if (trial.l_max > c_max) {
      candidate.pop_back();
      if (candidate.empty())
        throw UnschedulableError(
            "single item exceeds c_max: param " +
            std::to_string(items[idx].param_id) + " costs " +
            std::to_string(items[idx].cost) + ", c_max " +
            std::to_string(c_max));
      seal();
      // the rejected item stays at idx and seeds the next group
      continue;
    }
    ++idx;
  }
  if (!candidate.empty()) seal();
  return plan;
}

// Convenience overload: items taken from the given parameters, each costed
// on its full tensor shape.
inline MicroGroupPlan build_micro_groups(const std::vector<ParamSpec>& params,
                                         const CostModel& model, int ranks,
                                         Cost c_max) {
  std::vector<TpItem> items;
  items.reserve(params.size());
  for (const ParamSpec& p : params)
    items.push_back({p.id, param_cost(p, model)});
  return build_micro_groups(std::move(items), ranks, c_max, model.kind);
}

// Structural validation against the item set the plan was built from:
// exact coverage, capacity respected, loads consistent.
inline std::vector<std::string> validate_micro_groups(
    const MicroGroupPlan& plan, const std::vector<TpItem>& items) {
  std::vector<std::string> out;
  std::vector<std::pair<int, Cost>> want;
  want.reserve(items.size());
  for (const TpItem& it : items) want.emplace_back(it.param_id, it.cost);
  std::sort(want.begin(), want.end());

  std::vector<std::pair<int, Cost>> got;
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const MicroGroup& g = plan.groups[gi];
    const std::string tag = "group " + std::to_string(gi);
    if (g.rank_params.size() != static_cast<std::size_t>(plan.ranks) ||
        g.rank_loads.size() != static_cast<std::size_t>(plan.ranks)) {
      out.push_back(tag + ": per-rank vectors have wrong length");
      continue;
    }
    if (g.l_max > plan.c_max)
      out.push_back(tag + ": l_max " + std::to_string(g.l_max) +
                    " exceeds c_max " + std::to_string(plan.c_max));
    Cost l_max = 0;
    std::vector<int> member_ids;
    for (int r = 0; r < plan.ranks; ++r) {
      Cost load = 0;
      for (int id : g.rank_params[static_cast<std::size_t>(r)]) {
        member_ids.push_back(id);
        auto it = std::lower_bound(want.begin(), want.end(),
                                   std::make_pair(id, Cost{0}));
        if (it == want.end() || it->first != id) {
          out.push_back(tag + ": unknown param " + std::to_string(id));
          continue;
        }
        load += it->second;
        got.emplace_back(id, it->second);
      }
      if (load != g.rank_loads[static_cast<std::size_t>(r)])
        out.push_back(tag + ": rank " + std::to_string(r) +
                      " load disagrees with member costs");
      l_max = std::max(l_max, load);
    }
    if (l_max != g.l_max)
      out.push_back(tag + ": recorded l_max disagrees with loads");
    std::vector<int> listed = g.param_ids;
    std::sort(listed.begin(), listed.end());
    std::sort(member_ids.begin(), member_ids.end());
    if (listed != member_ids)
      out.push_back(tag + ": param_ids and rank assignments disagree");
  }
  std::sort(got.begin(), got.end());
  if (got != want)
    out.push_back("plan does not cover every item exactly once");
  return out;
}

}  // namespace optishard
