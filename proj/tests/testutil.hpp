// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: random workload construction and small brute-force
// oracles the production planners are checked against.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "optishard/cost.hpp"
#include "optishard/dp_partition.hpp"
#include "optishard/workload.hpp"

namespace testutil {

using optishard::Bucket;
using optishard::BufferLayout;
using optishard::Cost;
using optishard::CostModel;
using optishard::ParamSpec;

// Random parameter list: a mix of small matrices and vectors.
inline std::vector<ParamSpec> random_params(std::mt19937_64& rng, int count,
                                            std::int64_t max_side = 64) {
  std::uniform_int_distribution<std::int64_t> side(1, max_side);
  std::uniform_int_distribution<int> kind(0, 3);
  std::vector<ParamSpec> params;
  for (int i = 0; i < count; ++i) {
    ParamSpec p;
    p.id = i;
    p.name = "p" + std::to_string(i);
    p.dtype_bytes = 2;
    if (kind(rng) == 0) {
      p.shape = {side(rng)};
      p.tp_splittable = optishard::TpSplit::kNone;
    } else {
      p.shape = {side(rng), side(rng)};
      p.tp_splittable = kind(rng) == 1 ? optishard::TpSplit::kRow
                                       : optishard::TpSplit::kColumn;
    }
    p.numel = 1;
    for (auto e : p.shape) p.numel *= e;
    params.push_back(std::move(p));
  }
  return params;
}

// Exhaustive search over every monotone atomic cut vector of every bucket,
// minimizing the maximum absolute deviation of rank loads from the mean.
// Only usable for tiny instances; this is the planning oracle.
inline double brute_force_best_j_dp(const BufferLayout& layout,
                                    const std::vector<ParamSpec>& params,
                                    const CostModel& model, int ranks) {
  const std::size_t buckets = layout.buckets.size();
  std::vector<std::vector<Cost>> prefix(buckets);
  for (std::size_t i = 0; i < buckets; ++i)
    prefix[i] =
        optishard::detail::cost_prefix(layout.buckets[i], params, model);

  double best = std::numeric_limits<double>::infinity();
  std::vector<Cost> loads(static_cast<std::size_t>(ranks), 0);
  Cost total = 0;
  for (std::size_t i = 0; i < buckets; ++i) total += prefix[i].back();
  const double mu = static_cast<double>(total) / ranks;

  // cuts[i] holds boundary indices for bucket i, non-decreasing, length R+1
  std::vector<std::vector<std::size_t>> cut_idx(
      buckets, std::vector<std::size_t>(static_cast<std::size_t>(ranks) + 1));

  auto eval = [&]() {
    double dev = 0.0;
    for (Cost l : loads)
      dev = std::max(dev, std::abs(static_cast<double>(l) - mu));
    best = std::min(best, dev);
  };

  // enumerate bucket b's cut tuple, then recurse to the next bucket
  auto enumerate = [&](auto&& self, std::size_t b) -> void {
    if (b == buckets) {
      eval();
      return;
    }
    const std::size_t nb = prefix[b].size() - 1;  // param count
    auto& idx = cut_idx[b];
    idx.front() = 0;
    idx.back() = nb;
    auto walk = [&](auto&& inner, int r, std::size_t from) -> void {
      if (r == ranks) {
        for (int q = 0; q < ranks; ++q) {
          const Cost slice = prefix[b][idx[static_cast<std::size_t>(q) + 1]] -
                             prefix[b][idx[static_cast<std::size_t>(q)]];
          loads[static_cast<std::size_t>(q)] += slice;
        }
        self(self, b + 1);
        for (int q = 0; q < ranks; ++q) {
          const Cost slice = prefix[b][idx[static_cast<std::size_t>(q) + 1]] -
                             prefix[b][idx[static_cast<std::size_t>(q)]];
          loads[static_cast<std::size_t>(q)] -= slice;
        }
        return;
      }
      for (std::size_t u = from; u <= nb; ++u) {
        idx[static_cast<std::size_t>(r)] = u;
        inner(inner, r + 1, u);
      }
    };
    walk(walk, 1, 0);
  };
  enumerate(enumerate, 0);
  return best;
}

// Optimal makespan for scheduling the given costs on `ranks` machines,
// via depth-first branch and bound (items pre-sorted descending).
inline Cost optimal_makespan(std::vector<Cost> costs, int ranks) {
  std::sort(costs.begin(), costs.end(), std::greater<>());
  if (costs.empty()) return 0;
  Cost total = 0;
  for (Cost c : costs) total += c;
  Cost best = total;  // everything on one rank
  std::vector<Cost> loads(static_cast<std::size_t>(ranks), 0);
  auto dfs = [&](auto&& self, std::size_t item, Cost current_max) -> void {
    if (current_max >= best) return;
    if (item == costs.size()) {
      best = current_max;
      return;
    }
    bool tried_empty = false;
    for (int r = 0; r < ranks; ++r) {
      if (loads[static_cast<std::size_t>(r)] == 0) {
        if (tried_empty) continue;  // empty ranks are interchangeable
        tried_empty = true;
      }
      loads[static_cast<std::size_t>(r)] += costs[item];
      self(self, item + 1,
           std::max(current_max, loads[static_cast<std::size_t>(r)]));
      loads[static_cast<std::size_t>(r)] -= costs[item];
    }
  };
  dfs(dfs, 0, 0);
  return best;
}

}  // namespace testutil
