// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Data-parallel partition planning over a bucketed gradient buffer.
//
// All plans are expressed as per-bucket cut vectors: rank r owns the
// element range [cuts[r], cuts[r+1]) of each bucket. Cut vectors are
// monotone by construction, so every rank owns one contiguous,
// rank-ordered slice per bucket and slices never interleave.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "optishard/common.hpp"
#include "optishard/cost.hpp"
#include "optishard/workload.hpp"

namespace optishard {

enum class PlanMethod { kEqualChunk, kAtomicOwnership, kAlphaBalanced };

inline const char* to_string(PlanMethod m) {
  switch (m) {
    case PlanMethod::kEqualChunk: return "equal-chunk";
    case PlanMethod::kAtomicOwnership: return "atomic-ownership";
    default: return "alpha-balanced";
  }
}

inline PlanMethod parse_plan_method(const std::string& s) {
  if (s == "equal-chunk") return PlanMethod::kEqualChunk;
  if (s == "atomic-ownership") return PlanMethod::kAtomicOwnership;
  if (s == "alpha-balanced") return PlanMethod::kAlphaBalanced;
  throw FormatError("unknown plan method '" + s + "'");
}

struct DpPartitionPlan {
  int ranks = 1;
  PlanMethod method = PlanMethod::kEqualChunk;
  CostKind cost_kind = CostKind::kNumel;
  std::optional<double> alpha;
  bool atomic = false;
  // Per bucket: R+1 monotone element offsets, first 0, last bucket numel.
  std::vector<std::vector<std::int64_t>> cut_vectors;
  // Per bucket: R element counts, cuts[r+1] - cuts[r].
  std::vector<std::vector<std::int64_t>> rank_sizes;
  // Total planning cost owned by each rank across all buckets.
  std::vector<Cost> rank_loads;
};

// Fill shares for one bucket given the loads accumulated so far. The mean
// is taken as if the incoming bucket were spread evenly, so ranks below it
// have a deficit to fill.
struct DeficitState {
  double mu = 0.0;
  std::vector<double> deficits;
  double total_deficit = 0.0;
  std::vector<double> v_star;  // blended shares, sum to 1
};

inline DeficitState compute_deficit_state(const std::vector<Cost>& loads,
                                          Cost incoming_work, double alpha) {
  const int r_count = static_cast<int>(loads.size());
  DeficitState st;
  st.deficits.resize(loads.size());
  double total = static_cast<double>(incoming_work);
  for (Cost l : loads) total += static_cast<double>(l);
  st.mu = total / static_cast<double>(r_count);
  for (std::size_t r = 0; r < loads.size(); ++r) {
    st.deficits[r] = std::max(0.0, st.mu - static_cast<double>(loads[r]));
    st.total_deficit += st.deficits[r];
  }
  const double v_even = 1.0 / static_cast<double>(r_count);
  st.v_star.resize(loads.size());
  for (std::size_t r = 0; r < loads.size(); ++r) {
    const double v_fill = st.total_deficit > 0.0
                              ? st.deficits[r] / st.total_deficit
                              : v_even;
    st.v_star[r] = (1.0 - alpha) * v_even + alpha * v_fill;
  }
  return st;
}

namespace detail {

// Cumulative cost at every atomic boundary of one bucket;
// prefix[j] = cost of the first j parameters, prefix.back() = bucket cost.
inline std::vector<Cost> cost_prefix(const Bucket& b,
                                     const std::vector<ParamSpec>& params,
                                     const CostModel& model) {
  std::vector<Cost> prefix(b.param_ids.size() + 1, 0);
  for (std::size_t j = 0; j < b.param_ids.size(); ++j) {
    const ParamSpec& p = params.at(static_cast<std::size_t>(b.param_ids[j]));
    prefix[j + 1] = prefix[j] + param_cost(p, model);
  }
  return prefix;
}

inline void fill_rank_sizes(DpPartitionPlan& plan) {
  plan.rank_sizes.clear();
  plan.rank_sizes.reserve(plan.cut_vectors.size());
  for (const auto& cuts : plan.cut_vectors) {
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(plan.ranks));
    for (int r = 0; r < plan.ranks; ++r)
      sizes[static_cast<std::size_t>(r)] =
          cuts[static_cast<std::size_t>(r) + 1] -
          cuts[static_cast<std::size_t>(r)];
    plan.rank_sizes.push_back(std::move(sizes));
  }
}

// Planning cost of the slice [lo, hi) of a bucket. Whole parameters count
// exactly; a partially covered parameter contributes its cost scaled by the
// covered element fraction, rounded to nearest.
inline Cost slice_cost(const Bucket& b, const std::vector<ParamSpec>& params,
                       const CostModel& model, std::int64_t lo,
                       std::int64_t hi) {
  Cost total = 0;
  for (std::size_t j = 0; j < b.param_ids.size(); ++j) {
    const std::int64_t start = b.param_offsets[j];
    const ParamSpec& p = params.at(static_cast<std::size_t>(b.param_ids[j]));
    const std::int64_t end = start + p.numel;
    const std::int64_t ov_lo = std::max(lo, start);
    const std::int64_t ov_hi = std::min(hi, end);
    if (ov_hi <= ov_lo) continue;
    const std::int64_t ov = ov_hi - ov_lo;
    const Cost c = param_cost(p, model);
    if (ov == p.numel) {
      total += c;
    } else {
      const Cost num = c * static_cast<Cost>(ov) +
                       static_cast<Cost>(p.numel) / 2;
      total += num / static_cast<Cost>(p.numel);
    }
  }
  return total;
}

}  // namespace detail

// Geometric baseline: cut every bucket into R equal element ranges with
// rounded boundaries, ignoring parameter boundaries entirely.
inline DpPartitionPlan equal_chunk_partition(const BufferLayout& layout,
                                             const std::vector<ParamSpec>& params,
                                             int ranks,
                                             const CostModel& model) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  DpPartitionPlan plan;
  plan.ranks = ranks;
  plan.method = PlanMethod::kEqualChunk;
  plan.cost_kind = model.kind;
  plan.rank_loads.assign(static_cast<std::size_t>(ranks), 0);
  bool all_atomic = true;
  for (const Bucket& b : layout.buckets) {
    std::vector<std::int64_t> cuts(static_cast<std::size_t>(ranks) + 1);
    for (int r = 0; r <= ranks; ++r) {
      // round(r * numel / ranks) without floating point
      const std::int64_t num = 2 * static_cast<std::int64_t>(r) * b.numel +
                               static_cast<std::int64_t>(ranks);
      cuts[static_cast<std::size_t>(r)] =
          num / (2 * static_cast<std::int64_t>(ranks));
    }
    cuts.front() = 0;
    cuts.back() = b.numel;
    const auto boundaries = b.atomic_boundaries();
    for (int r = 0; r < ranks; ++r) {
      const std::int64_t lo = cuts[static_cast<std::size_t>(r)];
      const std::int64_t hi = cuts[static_cast<std::size_t>(r) + 1];
      plan.rank_loads[static_cast<std::size_t>(r)] +=
          detail::slice_cost(b, params, model, lo, hi);
      if (!std::binary_search(boundaries.begin(), boundaries.end(), lo))
        all_atomic = false;
    }
    plan.cut_vectors.push_back(std::move(cuts));
  }
  plan.atomic = all_atomic;
  detail::fill_rank_sizes(plan);
  return plan;
}

// Stride-ownership baseline: with stride S = numel / R, rank r owns every
// parameter whose start offset lies in [r*S, (r+1)*S). Evaluated in exact
// integer arithmetic as owner = floor(start * R / numel).
inline DpPartitionPlan atomic_ownership_partition(
    const BufferLayout& layout, const std::vector<ParamSpec>& params,
    int ranks, const CostModel& model) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  DpPartitionPlan plan;
  plan.ranks = ranks;
  plan.method = PlanMethod::kAtomicOwnership;
  plan.cost_kind = model.kind;
  plan.atomic = true;
  plan.rank_loads.assign(static_cast<std::size_t>(ranks), 0);
  for (const Bucket& b : layout.buckets) {
    std::vector<std::int64_t> cuts(static_cast<std::size_t>(ranks) + 1,
                                   b.numel);
    cuts[0] = 0;
    int prev_owner = 0;
    for (std::size_t j = 0; j < b.param_ids.size(); ++j) {
      const std::int64_t start = b.param_offsets[j];
      const ParamSpec& p = params.at(static_cast<std::size_t>(b.param_ids[j]));
      const int owner = static_cast<int>(
          (static_cast<unsigned long long>(start) *
           static_cast<unsigned long long>(ranks)) /
          static_cast<unsigned long long>(b.numel));
      plan.rank_loads[static_cast<std::size_t>(owner)] +=
          param_cost(p, model);
      for (int r = prev_owner + 1; r <= owner; ++r)
        cuts[static_cast<std::size_t>(r)] = start;
      prev_owner = owner;
    }
    plan.cut_vectors.push_back(std::move(cuts));
  }
  detail::fill_rank_sizes(plan);
  return plan;
}

// Load-balanced planner. Buckets are visited in descending total-cost
// order (virtual LPT); for each bucket the deficit state decides the target
// share per rank, and each running target is snapped to the atomic boundary
// whose cumulative cost is nearest (ties take the smaller offset). Rank
// loads advance by the actual slice cost, not the target, so later buckets
// compensate for snapping error. Results are keyed by original bucket index.
inline DpPartitionPlan alpha_balanced_partition(
    const BufferLayout& layout, const std::vector<ParamSpec>& params,
    int ranks, const CostModel& model, double alpha) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("alpha must lie in [0, 1]");
  DpPartitionPlan plan;
  plan.ranks = ranks;
  plan.method = PlanMethod::kAlphaBalanced;
  plan.cost_kind = model.kind;
  plan.alpha = alpha;
  plan.atomic = true;
  plan.cut_vectors.assign(layout.buckets.size(), {});
  plan.rank_loads.assign(static_cast<std::size_t>(ranks), 0);

  std::vector<std::size_t> order(layout.buckets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Cost> bucket_cost(layout.buckets.size(), 0);
  std::vector<std::vector<Cost>> prefixes(layout.buckets.size());
  for (std::size_t i = 0; i < layout.buckets.size(); ++i) {
    prefixes[i] = detail::cost_prefix(layout.buckets[i], params, model);
    bucket_cost[i] = prefixes[i].back();
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return bucket_cost[a] > bucket_cost[b];
                   });

  for (std::size_t i : order) {
    const Bucket& b = layout.buckets[i];
    const std::vector<Cost>& prefix = prefixes[i];
    const auto boundaries = b.atomic_boundaries();
    const DeficitState st =
        compute_deficit_state(plan.rank_loads, bucket_cost[i], alpha);

    std::vector<std::int64_t> cuts(static_cast<std::size_t>(ranks) + 1);
    cuts[0] = 0;
    double running_target = 0.0;
    std::size_t j = 0;  // boundary cursor; argmin positions never regress
    for (int r = 0; r < ranks - 1; ++r) {
      running_target +=
          static_cast<double>(bucket_cost[i]) * st.v_star[static_cast<std::size_t>(r)];
      auto gap = [&](std::size_t idx) {
        return std::abs(static_cast<double>(prefix[idx]) - running_target);
      };
      while (j + 1 < prefix.size() && gap(j + 1) < gap(j)) ++j;
      cuts[static_cast<std::size_t>(r) + 1] = boundaries[j];
    }
    cuts[static_cast<std::size_t>(ranks)] = b.numel;

    std::size_t lo_idx = 0;
    for (int r = 0; r < ranks; ++r) {
      std::size_t hi_idx = lo_idx;
      while (boundaries[hi_idx] < cuts[static_cast<std::size_t>(r) + 1])
        ++hi_idx;
      plan.rank_loads[static_cast<std::size_t>(r)] +=
          prefix[hi_idx] - prefix[lo_idx];
      lo_idx = hi_idx;
    }
    plan.cut_vectors[i] = std::move(cuts);
  }
  detail::fill_rank_sizes(plan);
  return plan;
}

// Structural validation. Returns human-readable violations; empty means the
// plan is well formed for this layout.
inline std::vector<std::string> validate_plan(
    const DpPartitionPlan& plan, const BufferLayout& layout,
    const std::vector<ParamSpec>& params, const CostModel& model) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) { out.push_back(s); };
  if (plan.ranks < 1) {
    add("plan has ranks < 1");
    return out;
  }
  if (plan.cut_vectors.size() != layout.buckets.size()) {
    add("plan covers " + std::to_string(plan.cut_vectors.size()) +
        " buckets, layout has " + std::to_string(layout.buckets.size()));
    return out;
  }
  if (plan.rank_loads.size() != static_cast<std::size_t>(plan.ranks))
    add("rank_loads size mismatch");

  std::vector<Cost> recomputed(static_cast<std::size_t>(plan.ranks), 0);
  for (std::size_t i = 0; i < layout.buckets.size(); ++i) {
    const Bucket& b = layout.buckets[i];
    const auto& cuts = plan.cut_vectors[i];
    const std::string tag = "bucket " + std::to_string(i);
    if (cuts.size() != static_cast<std::size_t>(plan.ranks) + 1) {
      add(tag + ": cut vector has wrong length");
      continue;
    }
    if (cuts.front() != 0) add(tag + ": first cut is not 0");
    if (cuts.back() != b.numel) add(tag + ": last cut is not bucket numel");
    for (std::size_t r = 0; r + 1 < cuts.size(); ++r)
      if (cuts[r] > cuts[r + 1]) {
        add(tag + ": cuts are not monotone at rank " + std::to_string(r));
        break;
      }
    const auto boundaries = b.atomic_boundaries();
    if (plan.atomic) {
      for (std::size_t r = 0; r < cuts.size(); ++r)
        if (!std::binary_search(boundaries.begin(), boundaries.end(),
                                cuts[r])) {
          add(tag + ": cut " + std::to_string(cuts[r]) +
              " is not an atomic boundary");
          break;
        }
    }
    if (!plan.rank_sizes.empty() &&
        plan.rank_sizes.size() == plan.cut_vectors.size()) {
      for (int r = 0; r < plan.ranks; ++r)
        if (plan.rank_sizes[i][static_cast<std::size_t>(r)] !=
            cuts[static_cast<std::size_t>(r) + 1] -
                cuts[static_cast<std::size_t>(r)]) {
          add(tag + ": rank_sizes disagree with cuts at rank " +
              std::to_string(r));
          break;
        }
    } else if (plan.rank_sizes.size() != plan.cut_vectors.size()) {
      add("rank_sizes bucket count mismatch");
    }
    for (int r = 0; r < plan.ranks; ++r)
      recomputed[static_cast<std::size_t>(r)] += detail::slice_cost(
          b, params, model, cuts[static_cast<std::size_t>(r)],
          cuts[static_cast<std::size_t>(r) + 1]);
  }
  if (plan.rank_loads.size() == recomputed.size() &&
      plan.rank_loads != recomputed)
    add("rank_loads disagree with loads recomputed from cuts");
  if (plan.atomic) {
    Cost total = 0;
    for (const ParamSpec& p : params) total += param_cost(p, model);
    Cost planned = 0;
    for (Cost l : plan.rank_loads) planned += l;
    if (total != planned)
      add("conservation violated: plan carries " + std::to_string(planned) +
          " of " + std::to_string(total) + " total cost");
  }
  return out;
}

// Owning rank of one whole parameter under an atomic plan.
inline int param_owner(const DpPartitionPlan& plan, const BufferLayout& layout,
                       int param_id) {
  for (std::size_t i = 0; i < layout.buckets.size(); ++i) {
    const Bucket& b = layout.buckets[i];
    for (std::size_t j = 0; j < b.param_ids.size(); ++j) {
      if (b.param_ids[j] != param_id) continue;
      const std::int64_t start = b.param_offsets[j];
      const auto& cuts = plan.cut_vectors[i];
      // last rank whose slice begins at or before the parameter start and
      // is non-empty at it
      for (int r = plan.ranks - 1; r >= 0; --r) {
        if (cuts[static_cast<std::size_t>(r)] <= start &&
            start < cuts[static_cast<std::size_t>(r) + 1])
          return r;
      }
      throw PlanError("parameter " + std::to_string(param_id) +
                      " not covered by any rank slice");
    }
  }
  throw PlanError("parameter " + std::to_string(param_id) +
                  " not present in layout");
}

}  // namespace optishard
