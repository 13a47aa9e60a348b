// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Release acceptance gate. Each check drives the shipped planners,
// simulators, or the numerical harness end to end and prints exactly one
// pass/fail line; the process exits nonzero if any check fails.
// argv[1] names the directory holding the bundled model configs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "optishard/optishard.hpp"
#include "testutil.hpp"

using namespace optishard;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void report(const char* id, const Check& c) {
  std::printf("%s %s (%s)\n", c.ok ? "pass" : "FAIL", id, c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

template <typename F>
void run_check(const char* id, F&& f) {
  Check c;
  try {
    c = f();
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  report(id, c);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

CostModel model_of(CostKind kind) {
  CostModel m;
  m.kind = kind;
  return m;
}

std::vector<ParamSpec> vector_params(const std::vector<std::int64_t>& numels) {
  std::vector<ParamSpec> params;
  for (std::int64_t n : numels) {
    ParamSpec p;
    p.id = static_cast<int>(params.size());
    p.name = "p" + std::to_string(p.id);
    p.shape = {n};
    p.numel = n;
    p.dtype_bytes = 2;
    params.push_back(p);
  }
  return params;
}

// Layout with roughly target_buckets buckets, widened until the greedy
// packing needs no more than max_buckets.
BufferLayout bounded_layout(const std::vector<ParamSpec>& params,
                            int target_buckets, int max_buckets) {
  std::int64_t total = 0, largest = 0;
  for (const ParamSpec& p : params) {
    total += p.numel;
    largest = std::max(largest, p.numel);
  }
  std::int64_t cap =
      std::max(largest, (total + target_buckets - 1) / target_buckets);
  BufferLayout layout = build_buffer_layout(params, cap);
  while (static_cast<int>(layout.buckets.size()) > max_buckets) {
    cap += cap / 2 + 1;
    layout = build_buffer_layout(params, cap);
  }
  return layout;
}

// Both planners stay structurally valid and conserve total cost exactly on
// a large fuzzed corpus, within the time budget.
Check check_plan_fuzz() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20260819);
  std::uniform_int_distribution<int> param_count(5, 200);
  std::uniform_int_distribution<int> bucket_target(1, 8);
  std::uniform_int_distribution<int> rank_pick(0, 3);
  const int rank_choices[4] = {2, 4, 8, 16};
  const CostKind kinds[3] = {CostKind::kNumel, CostKind::kFlopsMuon,
                             CostKind::kBytes};
  const double alphas[3] = {0.0, 0.5, 1.0};
  for (int t = 0; t < 1000 && c.ok; ++t) {
    const auto params = testutil::random_params(rng, param_count(rng));
    const auto layout = bounded_layout(params, bucket_target(rng), 8);
    const int ranks = rank_choices[rank_pick(rng)];
    const CostModel model = model_of(kinds[t % 3]);
    const double alpha = alphas[(t / 3) % 3];
    const auto balanced =
        alpha_balanced_partition(layout, params, ranks, model, alpha);
    const auto strided =
        atomic_ownership_partition(layout, params, ranks, model);
    for (const DpPartitionPlan* plan : {&balanced, &strided}) {
      const auto violations = validate_plan(*plan, layout, params, model);
      if (!violations.empty()) {
        c.ok = false;
        c.detail = "workload " + std::to_string(t) + ": " + violations.front();
        break;
      }
      Cost total = 0;
      for (const ParamSpec& p : params) total += param_cost(p, model);
      Cost planned = 0;
      for (Cost l : plan->rank_loads) planned += l;
      if (planned != total) {
        c.ok = false;
        c.detail = "workload " + std::to_string(t) + ": load sum " +
                   std::to_string(planned) + " != total cost " +
                   std::to_string(total);
        break;
      }
    }
  }
  const double dt = seconds_since(t0);
  if (c.ok && dt >= 10.0) {
    c.ok = false;
    c.detail = "took " + fmt(dt) + "s, budget 10s";
  }
  if (c.ok)
    c.detail = "1000 workloads, 2 planners each, 0 violations, " + fmt(dt) +
               "s";
  return c;
}

// On the large model the stride-ownership baseline is badly imbalanced in
// both update flops and state memory; the balanced planner is not.
Check check_big_model_ratios(const std::string& dir) {
  Check c;
  const RunFileConfig cfg = load_config_file(dir + "/qwen3-32b-like.cfg");
  const auto params = generate_transformer_params(cfg.model);
  const auto layout = build_buffer_layout(params, cfg.model.bucket_capacity);
  const CostModel flops = model_of(CostKind::kFlopsMuon);
  const int ranks = cfg.model.dp_degree;
  const auto strided = atomic_ownership_partition(layout, params, ranks, flops);
  const auto balanced =
      alpha_balanced_partition(layout, params, ranks, flops, 1.0);
  const double f_str = load_balance_ratio(strided.rank_loads);
  const double f_bal = load_balance_ratio(balanced.rank_loads);
  const double m_str = load_balance_ratio(rank_memory_elements(strided));
  const double m_bal = load_balance_ratio(rank_memory_elements(balanced));
  c.ok = f_str >= 2.0 && f_bal <= 1.5 && m_str >= 1.8 && m_bal <= 1.3;
  c.detail = "ranks " + std::to_string(ranks) + ", flops max/avg " +
             fmt(f_str) + " -> " + fmt(f_bal) + ", memory max/avg " +
             fmt(m_str) + " -> " + fmt(m_bal);
  return c;
}

// The balanced planner dominates stride ownership on the deviation
// objective for nearly all small instances, and matches the exhaustive
// optimum on the two-bucket hand instance.
Check check_objective_dominance() {
  Check c;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(3, 10);
  std::uniform_int_distribution<std::int64_t> numel(1, 12);
  std::uniform_int_distribution<int> rank_pick(2, 3);
  std::uniform_int_distribution<int> bucket_target(1, 3);
  const CostModel model = model_of(CostKind::kNumel);
  int wins = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(count(rng)));
    for (auto& s : sizes) s = numel(rng);
    const auto params = vector_params(sizes);
    const auto layout = bounded_layout(params, bucket_target(rng), 3);
    const int ranks = rank_pick(rng);
    const auto balanced =
        alpha_balanced_partition(layout, params, ranks, model, 1.0);
    const auto strided =
        atomic_ownership_partition(layout, params, ranks, model);
    const double j_bal = dp_objectives(balanced, layout).j_dp;
    const double j_str = dp_objectives(strided, layout).j_dp;
    if (j_bal <= j_str + 1e-9) ++wins;
  }
  const auto params = vector_params({7, 3, 3, 3});
  const auto layout = build_buffer_layout(params, 10);
  const auto plan = alpha_balanced_partition(layout, params, 2, model, 1.0);
  const double j = dp_objectives(plan, layout).j_dp;
  const double best =
      testutil::brute_force_best_j_dp(layout, params, model, 2);
  const bool optimal = std::abs(j - best) < 1e-9;
  c.ok = wins * 100 >= trials * 95 && optimal;
  c.detail = std::to_string(wins) + "/" + std::to_string(trials) +
             " dominated, hand instance j_dp " + fmt(j) + " vs optimum " +
             fmt(best);
  return c;
}

// Every sealed group respects the capacity and the greedy balance stays
// within the classic longest-processing-time factor of the exact optimum;
// rebuilding a plan serializes byte for byte.
Check check_group_bound() {
  Check c;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Cost> cost_pick(1, 40);
  int instances = 0, groups_checked = 0;
  for (int n = 1; n <= 12 && c.ok; ++n) {
    for (int ranks = 2; ranks <= 4 && c.ok; ++ranks) {
      for (int rep = 0; rep < 8 && c.ok; ++rep) {
        std::vector<TpItem> items;
        Cost largest = 0, total = 0;
        for (int i = 0; i < n; ++i) {
          const Cost cost = rep == 0 ? Cost{10} : cost_pick(rng);
          items.push_back({i, cost});
          largest = std::max(largest, cost);
          total += cost;
        }
        const Cost cap_choices[3] = {largest, largest + largest / 3 + 1,
                                     total};
        const Cost c_max = cap_choices[rep % 3];
        const auto plan = build_micro_groups(items, ranks, c_max,
                                             CostKind::kNumel);
        const auto violations = validate_micro_groups(plan, items);
        if (!violations.empty()) {
          c.ok = false;
          c.detail = violations.front();
          break;
        }
        const double factor = 4.0 / 3.0 - 1.0 / (3.0 * ranks);
        for (const MicroGroup& g : plan.groups) {
          std::vector<Cost> costs;
          for (int id : g.param_ids)
            costs.push_back(items[static_cast<std::size_t>(id)].cost);
          const Cost opt = testutil::optimal_makespan(costs, ranks);
          ++groups_checked;
          if (g.l_max > c_max ||
              static_cast<double>(g.l_max) >
                  factor * static_cast<double>(opt) + 1e-9) {
            c.ok = false;
            c.detail = "n " + std::to_string(n) + ", ranks " +
                       std::to_string(ranks) + ": group makespan " +
                       std::to_string(g.l_max) + " breaks bound (optimum " +
                       std::to_string(opt) + ", c_max " +
                       std::to_string(c_max) + ")";
            break;
          }
        }
        if (!c.ok) break;
        const auto again = build_micro_groups(items, ranks, c_max,
                                              CostKind::kNumel);
        if (serialize_tp_plan(plan) != serialize_tp_plan(again)) {
          c.ok = false;
          c.detail = "identical rebuild serialized differently";
          break;
        }
        ++instances;
      }
    }
  }
  if (c.ok)
    c.detail = std::to_string(instances) + " instances, " +
               std::to_string(groups_checked) +
               " groups within bound, rebuilds byte-identical";
  return c;
}

// Closed-form wire traffic identities, plus the strategy-level comm
// signatures: the layerwise strategy pays an in-step redistribution, the
// balanced sharded strategy moves nothing in the optimizer phase.
Check check_traffic_model(const std::string& dir) {
  Check c;
  for (double v : {1e6, 64e6, 1e9, 8.59e9}) {
    for (int r : {2, 4, 8, 16, 32}) {
      const double rs =
          collective_traffic_bytes(v, Collective::kReduceScatter, r);
      const double ar =
          collective_traffic_bytes(v, Collective::kAllReduce, r);
      const double ag =
          collective_traffic_bytes(v, Collective::kAllGather, r);
      const double bc =
          collective_traffic_bytes(v, Collective::kBroadcast, r);
      if (ar != 2.0 * rs || ag != rs || bc != v) {
        c.ok = false;
        c.detail = "traffic identity broke at volume " + fmt(v) +
                   ", ranks " + std::to_string(r);
        return c;
      }
    }
  }
  const RunFileConfig cfg = load_config_file(dir + "/toy.cfg");
  const auto params = generate_transformer_params(cfg.model);
  const auto layout = build_buffer_layout(params, cfg.model.bucket_capacity);
  const CostModel model = model_of(CostKind::kNumel);
  const int ranks = cfg.model.dp_degree;
  const auto profile = make_uniform_profile(layout, cfg.net);
  const auto nv = simulate_dp_step(layout, params, ranks,
                                   Strategy::kNvLayerwise, nullptr, model,
                                   cfg.net, profile);
  const auto balanced =
      alpha_balanced_partition(layout, params, ranks, model, 1.0);
  const auto lb = simulate_dp_step(layout, params, ranks, Strategy::kLbAsc,
                                   &balanced, model, cfg.net, profile);
  const bool nv_comm = nv.optimizer_comm_s > 0.0 && nv.optimizer_bytes > 0.0;
  const bool lb_free = lb.optimizer_comm_s == 0.0 && lb.optimizer_bytes == 0.0;
  c.ok = nv_comm && lb_free;
  c.detail = "all_reduce = 2x reduce_scatter on 20 grids, layerwise "
             "redistribution " +
             fmt(nv.optimizer_comm_s) + "s, balanced optimizer wire bytes " +
             fmt(lb.optimizer_bytes);
  return c;
}

// Sweep trends: the balance knob only helps, fusing never loses to
// unfused scheduling and saturates past the plateau capacity, and the
// optimizer phase orders replicated >= stride-sharded >= balanced.
Check check_sweeps(const std::string& dir) {
  Check c;
  const RunFileConfig big = load_config_file(dir + "/qwen3-32b-like.cfg");
  const auto params = generate_transformer_params(big.model);
  const auto layout = build_buffer_layout(params, big.model.bucket_capacity);
  const CostModel flops = model_of(CostKind::kFlopsMuon);
  const int ranks = big.model.dp_degree;
  const auto profile = make_uniform_profile(layout, big.net);

  const double alphas[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> knob_t;
  for (double a : alphas) {
    const auto plan = alpha_balanced_partition(layout, params, ranks, flops, a);
    knob_t.push_back(simulate_dp_step(layout, params, ranks, Strategy::kLbAsc,
                                      &plan, flops, big.net, profile)
                         .optimizer_s);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 5; ++i) {
    sx += alphas[i];
    sy += knob_t[static_cast<std::size_t>(i)];
    sxx += alphas[i] * alphas[i];
    sxy += alphas[i] * knob_t[static_cast<std::size_t>(i)];
  }
  const double slope = (5.0 * sxy - sx * sy) / (5.0 * sxx - sx * sx);
  const bool knob_ok = knob_t.back() <= knob_t.front() && slope <= 0.0;

  const RunFileConfig mid = load_config_file(dir + "/qwen3-14b-like.cfg");
  const auto full = generate_transformer_params(mid.model);
  const auto shards = apply_tp_sharding(full, mid.model.tp_degree);
  const auto mats = tp_plane_params(shards);
  const CostModel bytes = model_of(CostKind::kBytes);
  const int tp = mid.model.tp_degree;
  const Cost mib = 1024 * 1024;
  const std::vector<Cost> caps = {64 * mib,  128 * mib,  256 * mib,
                                  512 * mib, 1024 * mib, 2048 * mib};
  std::vector<double> cap_t;
  for (Cost cm : caps) {
    const auto plan = build_micro_groups(mats, bytes, tp, cm);
    cap_t.push_back(simulate_tp_step(plan, shards, mid.net, bytes).time_s);
  }
  std::vector<TpItem> items;
  for (const ParamSpec& p : mats) items.push_back({p.id, param_cost(p, bytes)});
  std::sort(items.begin(), items.end(), [](const TpItem& a, const TpItem& b) {
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.param_id > b.param_id;
  });
  MicroGroupPlan unfused;
  unfused.ranks = tp;
  unfused.cost_kind = CostKind::kBytes;
  for (std::size_t i = 0; i < items.size(); ++i) {
    MicroGroup g;
    g.param_ids = {items[i].param_id};
    g.rank_params.assign(static_cast<std::size_t>(tp), {});
    g.rank_loads.assign(static_cast<std::size_t>(tp), 0);
    const std::size_t host = i % static_cast<std::size_t>(tp);
    g.rank_params[host] = {items[i].param_id};
    g.rank_loads[host] = items[i].cost;
    g.l_max = items[i].cost;
    unfused.c_max = std::max(unfused.c_max, items[i].cost);
    unfused.groups.push_back(std::move(g));
  }
  const double t_unfused =
      simulate_tp_step(unfused, shards, mid.net, bytes).time_s;
  bool cap_ok = true;
  for (double t : cap_t) cap_ok = cap_ok && t_unfused >= t;
  const double t_plateau = cap_t[3];
  for (std::size_t i = 4; i < cap_t.size(); ++i)
    cap_ok = cap_ok && std::abs(cap_t[i] - t_plateau) <= 0.01 * t_plateau;

  const auto strided = atomic_ownership_partition(layout, params, ranks, flops);
  const auto balanced =
      alpha_balanced_partition(layout, params, ranks, flops, 1.0);
  const double t_sc = simulate_dp_step(layout, params, ranks, Strategy::kSc,
                                       nullptr, flops, big.net, profile)
                          .optimizer_s;
  const double t_asc = simulate_dp_step(layout, params, ranks, Strategy::kAsc,
                                        &strided, flops, big.net, profile)
                           .optimizer_s;
  const double t_lb = simulate_dp_step(layout, params, ranks, Strategy::kLbAsc,
                                       &balanced, flops, big.net, profile)
                          .optimizer_s;
  const bool order_ok = t_sc >= t_asc && t_asc >= t_lb;

  c.ok = knob_ok && cap_ok && order_ok;
  c.detail = "knob " + fmt(knob_t.front()) + "s -> " + fmt(knob_t.back()) +
             "s slope " + fmt(slope) + (knob_ok ? " [ok]" : " [FAIL]") +
             "; capacity unfused " + fmt(t_unfused) + "s vs plateau " +
             fmt(t_plateau) + "s" + (cap_ok ? " [ok]" : " [FAIL]") +
             "; optimizer " + fmt(t_sc) + "/" + fmt(t_asc) + "/" + fmt(t_lb) +
             "s" + (order_ok ? " [ok]" : " [FAIL]");
  return c;
}

// Partitioned execution reproduces the replicated trajectory bitwise on a
// small model, and a corrupted host assignment is caught by the same
// comparison.
Check check_equivalence() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  ModelConfig toy;
  toy.name = "toy-4layer";
  toy.num_layers = 4;
  toy.hidden_size = 8;
  toy.ffn_size = 16;
  toy.num_heads = 2;
  toy.vocab_size = 12;
  toy.dtype_bytes = 2;
  toy.bucket_capacity = 200;
  toy.dp_degree = 4;
  toy.tp_degree = 2;
  const auto full = generate_transformer_params(toy);
  const auto shards = apply_tp_sharding(full, toy.tp_degree);
  const auto layout = build_buffer_layout(shards, toy.bucket_capacity);
  const CostModel model = model_of(CostKind::kNumel);
  const auto dp_plan =
      alpha_balanced_partition(layout, shards, toy.dp_degree, model, 1.0);
  const auto mats = tp_plane_params(shards);
  Cost total = 0;
  for (const ParamSpec& p : mats) total += param_cost(p, model);
  const auto tp_plan = build_micro_groups(mats, model, toy.tp_degree,
                                          std::max<Cost>(total, 1));
  OptimizerConfig opt;
  const int steps = 20;
  const std::uint64_t seed = 42;
  const auto baseline = run_replicated(shards, opt, steps, seed, dp_plan.ranks);
  const auto routed =
      run_partitioned(shards, opt, steps, seed, layout, dp_plan, &tp_plan);
  const double diff = max_abs_diff(baseline, routed);
  FaultSpec fault;
  fault.enabled = true;
  const auto corrupted = run_partitioned(shards, opt, steps, seed, layout,
                                         dp_plan, &tp_plan, fault);
  const double fault_diff = max_abs_diff(baseline, corrupted);
  const double dt = seconds_since(t0);
  c.ok = diff <= 1e-12 && fault_diff > 1e-6 && dt < 30.0;
  c.detail = "20 steps dp=4 tp=2, diff " + fmt(diff) +
             ", corrupted-route diff " + fmt(fault_diff) + ", " + fmt(dt) +
             "s";
  return c;
}

// Planning on element counts is a faithful proxy: the flops makespan of the
// element-planned partition stays within 2% of planning on flops directly.
Check check_proxy_makespan(const std::string& dir) {
  Check c;
  const RunFileConfig cfg = load_config_file(dir + "/qwen3-32b-like.cfg");
  const auto params = generate_transformer_params(cfg.model);
  const auto layout = build_buffer_layout(params, cfg.model.bucket_capacity);
  const int ranks = cfg.model.dp_degree;
  const CostModel numel = model_of(CostKind::kNumel);
  const CostModel flops = model_of(CostKind::kFlopsMuon);
  const auto by_numel =
      alpha_balanced_partition(layout, params, ranks, numel, 1.0);
  const auto by_flops =
      alpha_balanced_partition(layout, params, ranks, flops, 1.0);
  auto flops_makespan = [&](const DpPartitionPlan& plan) {
    Cost mx = 0;
    for (Cost l : rank_exec_loads(plan, layout, params, flops))
      mx = std::max(mx, l);
    return static_cast<double>(mx);
  };
  const double m_numel = flops_makespan(by_numel);
  const double m_flops = flops_makespan(by_flops);
  c.ok = m_numel <= 1.02 * m_flops;
  c.detail = "flops makespan " + fmt(m_numel) + " element-planned vs " +
             fmt(m_flops) + " flops-planned, ratio " + fmt(m_numel / m_flops);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <config-dir>\n", argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  run_check("a1 plan-validity-fuzz", [] { return check_plan_fuzz(); });
  run_check("a2 big-model-balance", [&] { return check_big_model_ratios(dir); });
  run_check("a3 objective-dominance", [] { return check_objective_dominance(); });
  run_check("a4 group-makespan-bound", [] { return check_group_bound(); });
  run_check("a5 wire-traffic-model", [&] { return check_traffic_model(dir); });
  run_check("a6 sweep-trends", [&] { return check_sweeps(dir); });
  run_check("a7 bitwise-equivalence", [] { return check_equivalence(); });
  run_check("a8 proxy-cost-makespan", [&] { return check_proxy_makespan(dir); });
  if (failures > 0) {
    std::printf("%d of 8 checks failed\n", failures);
    return 1;
  }
  std::printf("all 8 checks passed\n");
  return 0;
}
