// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Discrete two-channel execution model for one training iteration. Every
// rank has a compute channel and a communication channel; work on the same
// channel serializes, work on different channels overlaps freely. The
// simulated timeline follows the critical path across ranks (per-rank
// compute spans use the slowest rank).
//
// Iteration structure: forward (with parameter gathers for sharded
// strategies), backward (with gradient collectives overlapped bucket by
// bucket), then the optimizer step.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "optishard/collective.hpp"
#include "optishard/common.hpp"
#include "optishard/cost.hpp"
#include "optishard/dp_partition.hpp"
#include "optishard/metrics.hpp"
#include "optishard/tp_schedule.hpp"
#include "optishard/workload.hpp"

namespace optishard {

// Optimizer execution strategies for the data-parallel plane.
//   kSc          replicated states, all-reduce gradients, redundant update
//   kNvLayerwise whole-layer ownership, all-reduce gradients, in-step
//                parameter redistribution
//   kAsc         stride-ownership sharded states, reduce-scatter, local
//                update only
//   kLbAsc       balanced sharded states, reduce-scatter, local update only
enum class Strategy { kSc, kNvLayerwise, kAsc, kLbAsc };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kSc: return "sc";
    case Strategy::kNvLayerwise: return "nv-layerwise";
    case Strategy::kAsc: return "asc";
    default: return "lb-asc";
  }
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "sc") return Strategy::kSc;
  if (s == "nv-layerwise") return Strategy::kNvLayerwise;
  if (s == "asc") return Strategy::kAsc;
  if (s == "lb-asc") return Strategy::kLbAsc;
  throw ConfigError("unknown strategy '" + s + "'");
}

// How nv-layerwise pushes updated parameters back to the other ranks.
enum class NvRedistribution { kBroadcast, kAllGather };

struct SimEvent {
  std::string name;
  std::string cat;  // "compute" or "comm"
  int tid = 0;      // 0 = compute channel, 1 = comm channel
  double start_s = 0.0;
  double dur_s = 0.0;
  double bytes = 0.0;
};

struct FwdBwdProfile {
  std::vector<double> fwd_bucket_s;  // one duration per bucket
  std::vector<double> bwd_bucket_s;
};

// Simple profile: forward costs fwd_flops_per_element and backward twice
// that, converted through the net's compute throughput.
inline FwdBwdProfile make_uniform_profile(const BufferLayout& layout,
                                          const NetModel& net,
                                          double fwd_flops_per_element = 2.0) {
  FwdBwdProfile prof;
  for (const Bucket& b : layout.buckets) {
    const double fwd = static_cast<double>(b.numel) * fwd_flops_per_element /
                       net.compute_throughput;
    prof.fwd_bucket_s.push_back(fwd);
    prof.bwd_bucket_s.push_back(2.0 * fwd);
  }
  return prof;
}

struct DpSimResult {
  Strategy strategy = Strategy::kSc;
  double fwd_bwd_s = 0.0;
  double optimizer_compute_s = 0.0;
  double optimizer_comm_s = 0.0;
  double optimizer_s = 0.0;
  double iteration_s = 0.0;
  // Closed-form per-rank wire traffic, independent of timing details.
  double grad_bytes = 0.0;
  double param_gather_bytes = 0.0;
  double optimizer_bytes = 0.0;
  // Optimizer compute cost per rank in execution-cost units.
  std::vector<Cost> rank_compute_cost;
  std::vector<SimEvent> events;
};

namespace detail {

inline double bucket_bytes(const Bucket& b,
                           const std::vector<ParamSpec>& params) {
  double v = 0.0;
  for (int id : b.param_ids) {
    const ParamSpec& p = params.at(static_cast<std::size_t>(id));
    v += static_cast<double>(p.numel) * p.dtype_bytes;
  }
  return v;
}

inline double max_slice_bytes(const Bucket& b,
                              const std::vector<ParamSpec>& params,
                              const std::vector<std::int64_t>& cuts) {
  CostModel bytes_model;
  bytes_model.kind = CostKind::kBytes;
  double mx = 0.0;
  for (std::size_t r = 0; r + 1 < cuts.size(); ++r)
    mx = std::max(mx, static_cast<double>(slice_cost(
                          b, params, bytes_model, cuts[r], cuts[r + 1])));
  return mx;
}

// Layer grouping key: the name segment before the first '.', so all
// parameters of one block move as a unit and globals stand alone.
inline std::string layer_key(const std::string& name) {
  const auto dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace detail

// Per-rank optimizer compute cost for whole-layer LPT ownership.
inline std::vector<Cost> layerwise_rank_loads(
    const std::vector<ParamSpec>& params, const CostModel& model, int ranks) {
  std::map<std::string, Cost> layer_cost;
  std::map<std::string, int> layer_id;
  for (const ParamSpec& p : params) {
    const std::string key = detail::layer_key(p.name);
    if (!layer_cost.count(key)) {
      const int next = static_cast<int>(layer_id.size());
      layer_id[key] = next;
    }
    layer_cost[key] += param_cost(p, model);
  }
  std::vector<TpItem> items;
  items.reserve(layer_cost.size());
  for (const auto& [key, cost] : layer_cost)
    items.push_back({layer_id[key], cost});
  return min_heap_balance(std::move(items), ranks).rank_loads;
}

// One data-parallel training iteration. `plan` is required for kAsc /
// kLbAsc and must match the strategy; it is ignored for the replicated
// strategies. `exec_model` prices optimizer compute and may differ from the
// cost kind the plan was built with.
inline DpSimResult simulate_dp_step(
    const BufferLayout& layout, const std::vector<ParamSpec>& params,
    int ranks, Strategy strategy, const DpPartitionPlan* plan,
    const CostModel& exec_model, const NetModel& net,
    const FwdBwdProfile& profile,
    NvRedistribution nv_mode = NvRedistribution::kBroadcast) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  const bool sharded =
      strategy == Strategy::kAsc || strategy == Strategy::kLbAsc;
  if (sharded) {
    if (plan == nullptr)
      throw PlanError("strategy requires a partition plan");
    if (plan->ranks != ranks) throw PlanError("plan ranks mismatch");
    if (strategy == Strategy::kAsc &&
        plan->method != PlanMethod::kAtomicOwnership)
      throw PlanError("asc expects an atomic-ownership plan, got " +
                      std::string(to_string(plan->method)));
    if (strategy == Strategy::kLbAsc &&
        plan->method != PlanMethod::kAlphaBalanced)
      throw PlanError("lb-asc expects an alpha-balanced plan, got " +
                      std::string(to_string(plan->method)));
  }
  if (profile.fwd_bucket_s.size() != layout.buckets.size() ||
      profile.bwd_bucket_s.size() != layout.buckets.size())
    throw PlanError("profile bucket count mismatch");

  DpSimResult res;
  res.strategy = strategy;
  const bool comm_active = ranks > 1;
  double now = 0.0;

  auto push = [&](const std::string& name, const std::string& cat, int tid,
                  double start, double dur, double bytes) {
    res.events.push_back({name, cat, tid, start, dur, bytes});
  };

  // ---- forward: sharded strategies gather each bucket before computing it
  double compute_free = now, comm_free = now;
  for (std::size_t i = 0; i < layout.buckets.size(); ++i) {
    double ready = now;
    if (sharded && comm_active) {
      const double vol = detail::bucket_bytes(layout.buckets[i], params);
      const double t = variable_collective_time_s(
          detail::max_slice_bytes(layout.buckets[i], params,
                                  plan->cut_vectors[i]),
          ranks, net, LinkClass::kInter);
      const double start = comm_free;
      comm_free = start + t;
      ready = comm_free;
      res.param_gather_bytes +=
          collective_traffic_bytes(vol, Collective::kAllGather, ranks);
      push("all_gather bucket " + std::to_string(i), "comm", 1, start, t, vol);
    }
    const double start = std::max(compute_free, ready);
    const double dur = profile.fwd_bucket_s[i];
    compute_free = start + dur;
    push("fwd bucket " + std::to_string(i), "compute", 0, start, dur, 0.0);
  }
  const double fwd_end = std::max(compute_free, comm_free);

  // ---- backward: reverse bucket order, gradient collectives overlap the
  // next bucket's backward compute
  compute_free = fwd_end;
  comm_free = fwd_end;
  for (std::size_t k = layout.buckets.size(); k-- > 0;) {
    const double start = compute_free;
    const double dur = profile.bwd_bucket_s[k];
    compute_free = start + dur;
    push("bwd bucket " + std::to_string(k), "compute", 0, start, dur, 0.0);
    if (!comm_active) continue;
    const double vol = detail::bucket_bytes(layout.buckets[k], params);
    double t = 0.0;
    Collective prim;
    if (sharded) {
      prim = Collective::kReduceScatter;
      t = variable_collective_time_s(
          detail::max_slice_bytes(layout.buckets[k], params,
                                  plan->cut_vectors[k]),
          ranks, net, LinkClass::kInter);
    } else {
      prim = Collective::kAllReduce;
      t = collective_time_s(vol, prim, ranks, net, LinkClass::kInter);
    }
    res.grad_bytes += collective_traffic_bytes(vol, prim, ranks);
    const double cstart = std::max(comm_free, compute_free);
    comm_free = cstart + t;
    push(std::string(to_string(prim)) + " bucket " + std::to_string(k), "comm",
         1, cstart, t, vol);
  }
  const double bwd_end = std::max(compute_free, comm_free);
  res.fwd_bwd_s = bwd_end;

  // ---- optimizer step
  Cost total_cost = 0;
  for (const ParamSpec& p : params) total_cost += param_cost(p, exec_model);
  Cost max_load = 0;
  switch (strategy) {
    case Strategy::kSc:
      res.rank_compute_cost.assign(static_cast<std::size_t>(ranks),
                                   total_cost);
      max_load = total_cost;
      break;
    case Strategy::kNvLayerwise:
      res.rank_compute_cost = layerwise_rank_loads(params, exec_model, ranks);
      for (Cost l : res.rank_compute_cost) max_load = std::max(max_load, l);
      break;
    default:
      res.rank_compute_cost =
          rank_exec_loads(*plan, layout, params, exec_model);
      for (Cost l : res.rank_compute_cost) max_load = std::max(max_load, l);
      break;
  }
  res.optimizer_compute_s =
      static_cast<double>(max_load) / net.compute_throughput;
  push("optimizer compute", "compute", 0, bwd_end, res.optimizer_compute_s,
       0.0);

  if (strategy == Strategy::kNvLayerwise && comm_active) {
    double vol = 0.0;
    for (const ParamSpec& p : params)
      vol += static_cast<double>(p.numel) * p.dtype_bytes;
    const Collective prim = nv_mode == NvRedistribution::kBroadcast
                                ? Collective::kBroadcast
                                : Collective::kAllGather;
    res.optimizer_comm_s =
        collective_time_s(vol, prim, ranks, net, LinkClass::kInter);
    res.optimizer_bytes += collective_traffic_bytes(vol, prim, ranks);
    push(std::string("param ") + to_string(prim), "comm", 1,
         bwd_end + res.optimizer_compute_s, res.optimizer_comm_s, vol);
  }
  res.optimizer_s = res.optimizer_compute_s + res.optimizer_comm_s;
  res.iteration_s = res.fwd_bwd_s + res.optimizer_s;
  return res;
}

struct TpSimResult {
  double time_s = 0.0;
  double comm_bytes = 0.0;  // closed-form all-to-all / all-gather traffic
  int groups = 0;
  // Total optimizer compute cost summed over all ranks (redundancy shows
  // up here: the replicated baseline carries ranks times the sharded sum).
  Cost total_compute_cost = 0;
  std::vector<SimEvent> events;
};

// Micro-group pipeline: per group an all-to-all gathers gradients to the
// host ranks, the group's updates run balanced across ranks, and an
// all-to-all scatters the updates back. Gathers are issued eagerly in group
// order on the communication channel, so group k+1's gather overlaps group
// k's compute; the final local apply is free.
inline TpSimResult simulate_tp_step(const MicroGroupPlan& plan,
                                    const std::vector<ParamSpec>& params,
                                    const NetModel& net,
                                    const CostModel& exec_model) {
  TpSimResult res;
  res.groups = static_cast<int>(plan.groups.size());
  const int ranks = plan.ranks;
  const bool comm_active = ranks > 1;

  std::vector<double> group_bytes, gather_end(plan.groups.size(), 0.0);
  std::vector<Cost> group_load;
  for (const MicroGroup& g : plan.groups) {
    double vol = 0.0;
    Cost mx = 0;
    for (int r = 0; r < ranks; ++r) {
      Cost load = 0;
      for (int id : g.rank_params[static_cast<std::size_t>(r)]) {
        const ParamSpec& p = params.at(static_cast<std::size_t>(id));
        load += param_cost(p, exec_model);
        vol += static_cast<double>(p.numel) * p.dtype_bytes;
      }
      mx = std::max(mx, load);
      res.total_compute_cost += load;
    }
    group_bytes.push_back(vol);
    group_load.push_back(mx);
  }

  double comm_free = 0.0;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (!comm_active) {
      gather_end[g] = 0.0;
      continue;
    }
    const double t = collective_time_s(group_bytes[g], Collective::kAllToAll,
                                       ranks, net, LinkClass::kIntra);
    res.events.push_back({"gather group " + std::to_string(g), "comm", 1,
                          comm_free, t, group_bytes[g]});
    res.comm_bytes += collective_traffic_bytes(group_bytes[g],
                                               Collective::kAllToAll, ranks);
    comm_free += t;
    gather_end[g] = comm_free;
  }
  double compute_free = 0.0;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const double start = std::max(compute_free, gather_end[g]);
    const double dur =
        static_cast<double>(group_load[g]) / net.compute_throughput;
    res.events.push_back(
        {"update group " + std::to_string(g), "compute", 0, start, dur, 0.0});
    compute_free = start + dur;
    if (comm_active) {
      const double t = collective_time_s(group_bytes[g], Collective::kAllToAll,
                                         ranks, net, LinkClass::kIntra);
      const double cstart = std::max(comm_free, compute_free);
      res.events.push_back({"scatter group " + std::to_string(g), "comm", 1,
                            cstart, t, group_bytes[g]});
      res.comm_bytes += collective_traffic_bytes(
          group_bytes[g], Collective::kAllToAll, ranks);
      comm_free = cstart + t;
    }
  }
  res.time_s = std::max(compute_free, comm_free);
  return res;
}

// Replicated tensor-parallel baseline: each parameter's gradient is
// all-gathered on its own, then every rank runs the full update
// redundantly. Gathers are issued eagerly like the pipeline above.
inline TpSimResult simulate_tp_sc_step(const std::vector<ParamSpec>& params,
                                       int ranks, const NetModel& net,
                                       const CostModel& exec_model) {
  if (ranks < 1) throw PlanError("ranks must be >= 1");
  TpSimResult res;
  res.groups = static_cast<int>(params.size());
  const bool comm_active = ranks > 1;
  std::vector<const ParamSpec*> order;
  for (const ParamSpec& p : params) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [&](const ParamSpec* a, const ParamSpec* b) {
              const Cost ca = param_cost(*a, exec_model);
              const Cost cb = param_cost(*b, exec_model);
              if (ca != cb) return ca > cb;
              return a->id > b->id;
            });
  double comm_free = 0.0, compute_free = 0.0;
  for (const ParamSpec* p : order) {
    const double vol = static_cast<double>(p->numel) * p->dtype_bytes;
    double ready = 0.0;
    if (comm_active) {
      const double t = collective_time_s(vol, Collective::kAllGather, ranks,
                                         net, LinkClass::kIntra);
      res.events.push_back(
          {"all_gather " + p->name, "comm", 1, comm_free, t, vol});
      res.comm_bytes +=
          collective_traffic_bytes(vol, Collective::kAllGather, ranks);
      comm_free += t;
      ready = comm_free;
    }
    const Cost c = param_cost(*p, exec_model);
    res.total_compute_cost += c * static_cast<Cost>(ranks);
    const double start = std::max(compute_free, ready);
    const double dur = static_cast<double>(c) / net.compute_throughput;
    res.events.push_back({"update " + p->name, "compute", 0, start, dur, 0.0});
    compute_free = start + dur;
  }
  res.time_s = std::max(compute_free, comm_free);
  return res;
}

}  // namespace optishard
