// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: plan optimizer-state partitions, schedule
// tensor-parallel micro groups, simulate training iterations, and check
// numerical equivalence of the partitioned execution path.
//
// Exit codes: 0 success, 1 runtime failure (invalid plan, divergence),
// 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "optishard/optishard.hpp"

namespace {

using namespace optishard;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ConfigError("short write to '" + path + "'");
}

struct WorkloadArgs {
  std::string config_path;
  int dp = 0;  // 0 keeps the config file's value
  int tp = 0;
};

struct BuiltWorkload {
  RunFileConfig cfg;
  int dp = 1;
  int tp = 1;
  std::vector<ParamSpec> full_params;  // unsharded declaration order
  std::vector<ParamSpec> dp_params;    // per-GPU view after tp sharding
  BufferLayout layout;                 // buckets over dp_params
};

BuiltWorkload build_workload(const WorkloadArgs& a) {
  BuiltWorkload w;
  w.cfg = load_config_file(a.config_path);
  w.dp = a.dp > 0 ? a.dp : w.cfg.model.dp_degree;
  w.tp = a.tp > 0 ? a.tp : w.cfg.model.tp_degree;
  if (a.dp < 0 || a.tp < 0) throw ConfigError("dp and tp must be >= 1");
  validate_model_config(w.cfg.model);
  w.full_params = generate_transformer_params(w.cfg.model);
  w.dp_params =
      w.tp > 1 ? apply_tp_sharding(w.full_params, w.tp) : w.full_params;
  w.layout = build_buffer_layout(w.dp_params, w.cfg.model.bucket_capacity);
  return w;
}

CostModel make_cost_model(const std::string& kind, int ns_steps) {
  CostModel m;
  m.kind = parse_cost_kind(kind);
  m.ns_steps = ns_steps;
  return m;
}

// Capacities for byte-denominated cost kinds accept size suffixes; the
// flops kinds take raw cost units because there is no byte equivalent.
Cost parse_capacity(const std::string& text, CostKind kind, int dtype_bytes) {
  if (kind == CostKind::kBytes) return parse_size_bytes(text);
  if (kind == CostKind::kNumel) {
    const std::uint64_t bytes = parse_size_bytes(text);
    return bytes / static_cast<std::uint64_t>(dtype_bytes);
  }
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("capacity '" + text +
                      "' must be a raw cost-unit count under flops cost "
                      "kinds (byte suffixes only apply to numel/bytes)");
  }
}

DpPartitionPlan plan_by_method(const std::string& method,
                               const BuiltWorkload& w, const CostModel& model,
                               double alpha) {
  switch (parse_plan_method(method)) {
    case PlanMethod::kEqualChunk:
      return equal_chunk_partition(w.layout, w.dp_params, w.dp, model);
    case PlanMethod::kAtomicOwnership:
      return atomic_ownership_partition(w.layout, w.dp_params, w.dp, model);
    default:
      return alpha_balanced_partition(w.layout, w.dp_params, w.dp, model,
                                      alpha);
  }
}


std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

int require_valid(const std::vector<std::string>& violations,
                  const std::string& what) {
  if (violations.empty()) return 0;
  std::cerr << what << " failed validation:\n";
  for (const std::string& v : violations) std::cerr << "  " << v << "\n";
  return 1;
}

// ---------------------------------------------------------------- plan-dp

struct PlanDpArgs {
  WorkloadArgs wl;
  std::string method = "alpha-balanced";
  double alpha = 1.0;
  std::string cost = "numel";
  int ns_steps = 5;
  std::string out_path;
  std::string compare_csv;
  std::string loads_csv;
};

int run_plan_dp(const PlanDpArgs& a) {
  const BuiltWorkload w = build_workload(a.wl);
  const CostModel model = make_cost_model(a.cost, a.ns_steps);
  const DpPartitionPlan plan = plan_by_method(a.method, w, model, a.alpha);
  if (int rc = require_valid(validate_plan(plan, w.layout, w.dp_params, model),
                             "partition plan"))
    return rc;

  const PlanComparisonRow row =
      summarize_plan(a.method, plan, w.layout, w.dp_params);
  std::cout << "model " << w.cfg.model.name << " params "
            << w.dp_params.size() << " elements " << w.layout.total_numel
            << " buckets " << w.layout.buckets.size() << "\n";
  std::cout << "method " << to_string(plan.method) << " cost "
            << to_string(plan.cost_kind) << " ranks " << plan.ranks;
  if (plan.alpha) std::cout << " alpha " << fmt(*plan.alpha);
  std::cout << (plan.atomic ? " atomic" : " non-atomic") << "\n";
  std::cout << "r_lb_cost " << fmt(row.r_lb_cost) << " r_lb_flops "
            << fmt(row.r_lb_flops) << " r_lb_memory " << fmt(row.r_lb_memory)
            << " j_dp " << fmt(row.j_dp) << " j_comm " << fmt(row.j_comm)
            << "\n";
  std::cout << "rank_loads";
  for (Cost l : plan.rank_loads) std::cout << " " << l;
  std::cout << "\n";

  if (!a.compare_csv.empty()) {
    const auto chunk = plan_by_method("equal-chunk", w, model, a.alpha);
    const auto strided = plan_by_method("atomic-ownership", w, model, a.alpha);
    const auto balanced = plan_by_method("alpha-balanced", w, model, a.alpha);
    write_file(a.compare_csv,
               comparison_csv(compare_plans({{"equal-chunk", &chunk},
                                             {"atomic-ownership", &strided},
                                             {"alpha-balanced", &balanced}},
                                            w.layout, w.dp_params)));
    std::cout << "comparison csv written to " << a.compare_csv << "\n";
  }
  if (!a.loads_csv.empty()) {
    write_file(a.loads_csv, rank_loads_csv(plan.rank_loads));
    std::cout << "rank loads csv written to " << a.loads_csv << "\n";
  }
  if (!a.out_path.empty()) {
    write_file(a.out_path, serialize_dp_plan(plan));
    std::cout << "plan written to " << a.out_path << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- plan-tp

struct PlanTpArgs {
  WorkloadArgs wl;
  std::string cmax = "512MiB";
  std::string cost = "numel";
  int ns_steps = 5;
  std::string out_path;
};

int run_plan_tp(const PlanTpArgs& a) {
  const BuiltWorkload w = build_workload(a.wl);
  if (w.tp < 1) throw ConfigError("tp must be >= 1");
  const CostModel model = make_cost_model(a.cost, a.ns_steps);
  const Cost cap = parse_capacity(a.cmax, model.kind, w.cfg.model.dtype_bytes);

  // micro groups cover the hidden-layer split matrices at per-rank shard
  // granularity: each rank's shard is gathered to one host, updated as part
  // of the whole tensor, and scattered back; vocab-space matrices update
  // element-wise and never enter the plane
  const std::vector<ParamSpec> mats = tp_plane_params(w.dp_params);
  const MicroGroupPlan plan = build_micro_groups(mats, model, w.tp, cap);

  std::vector<TpItem> items;
  for (const ParamSpec& p : mats) items.push_back({p.id, param_cost(p, model)});
  if (int rc =
          require_valid(validate_micro_groups(plan, items), "micro groups"))
    return rc;

  std::cout << "model " << w.cfg.model.name << " tp " << w.tp << " items "
            << items.size() << " cost " << to_string(model.kind) << " cmax "
            << cap << "\n";
  std::cout << "groups " << plan.groups.size() << "\n";
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    const MicroGroup& grp = plan.groups[g];
    std::cout << "group " << g << " params " << grp.param_ids.size()
              << " l_max " << grp.l_max << " loads";
    for (Cost l : grp.rank_loads) std::cout << " " << l;
    std::cout << "\n";
  }
  if (!a.out_path.empty()) {
    write_file(a.out_path, serialize_tp_plan(plan));
    std::cout << "plan written to " << a.out_path << "\n";
  }
  return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  WorkloadArgs wl;
  std::string strategies = "sc,nv-layerwise,asc,lb-asc";
  double alpha = 1.0;
  std::string plan_cost = "numel";
  std::string exec_cost = "flops-muon";
  int ns_steps = 5;
  double fwd_flops = 2.0;
  std::string nv_mode = "broadcast";
  std::string cmax = "512MiB";
  std::string trace_dir;
  std::string csv_path;
};

int run_simulate(const SimulateArgs& a) {
  const BuiltWorkload w = build_workload(a.wl);
  const CostModel plan_model = make_cost_model(a.plan_cost, a.ns_steps);
  const CostModel exec_model = make_cost_model(a.exec_cost, a.ns_steps);
  const FwdBwdProfile profile =
      make_uniform_profile(w.layout, w.cfg.net, a.fwd_flops);
  NvRedistribution nv;
  if (a.nv_mode == "broadcast") nv = NvRedistribution::kBroadcast;
  else if (a.nv_mode == "all-gather") nv = NvRedistribution::kAllGather;
  else throw ConfigError("unknown nv redistribution '" + a.nv_mode + "'");

  std::optional<DpPartitionPlan> strided, balanced;
  std::string csv = dp_summary_csv_header();
  for (const std::string& name : split_list(a.strategies)) {
    const Strategy strategy = parse_strategy(name);
    const DpPartitionPlan* plan = nullptr;
    if (strategy == Strategy::kAsc) {
      if (!strided)
        strided = atomic_ownership_partition(w.layout, w.dp_params, w.dp,
                                             plan_model);
      plan = &*strided;
    } else if (strategy == Strategy::kLbAsc) {
      if (!balanced)
        balanced = alpha_balanced_partition(w.layout, w.dp_params, w.dp,
                                            plan_model, a.alpha);
      plan = &*balanced;
    }
    const DpSimResult res =
        simulate_dp_step(w.layout, w.dp_params, w.dp, strategy, plan,
                         exec_model, w.cfg.net, profile, nv);
    csv += dp_summary_csv_row(res);
    if (!a.trace_dir.empty()) {
      const std::string path = a.trace_dir + "/" + name + ".trace.json";
      write_file(path, chrome_trace_json(res.events, name));
    }
  }
  std::cout << "# model " << w.cfg.model.name << " dp " << w.dp << " tp "
            << w.tp << " buckets " << w.layout.buckets.size() << " plan_cost "
            << to_string(plan_model.kind) << " exec_cost "
            << to_string(exec_model.kind) << "\n";
  std::cout << csv;
  if (!a.csv_path.empty()) write_file(a.csv_path, csv);

  if (w.tp > 1) {
    const Cost cap =
        parse_capacity(a.cmax, exec_model.kind, w.cfg.model.dtype_bytes);
    const std::vector<ParamSpec> mats = tp_plane_params(w.dp_params);
    const MicroGroupPlan tp_plan =
        build_micro_groups(mats, exec_model, w.tp, cap);
    const TpSimResult micro =
        simulate_tp_step(tp_plan, w.dp_params, w.cfg.net, exec_model);
    const TpSimResult sync =
        simulate_tp_sc_step(mats, w.tp, w.cfg.net, exec_model);
    std::string tp_csv = tp_summary_csv_header();
    tp_csv += tp_summary_csv_row("micro-group", micro);
    tp_csv += tp_summary_csv_row("replicated", sync);
    std::cout << tp_csv;
    if (!a.trace_dir.empty())
      write_file(a.trace_dir + "/tp-micro-group.trace.json",
                 chrome_trace_json(micro.events, "tp-micro-group"));
  }
  return 0;
}

// ----------------------------------------------------------------- verify

struct VerifyArgs {
  WorkloadArgs wl;
  int steps = 10;
  std::uint64_t seed = 42;
  double lr = 0.02;
  double beta = 0.9;
  int ns_steps = 5;
  double tolerance = 1e-12;
  bool inject_fault = false;
  int fault_param = -1;
  int fault_step = -1;
  std::string report_path;
};

int run_verify(const VerifyArgs& a) {
  const BuiltWorkload w = build_workload(a.wl);
  if (a.steps < 1) throw ConfigError("steps must be >= 1");
  CostModel model;  // host routing only; any kind works
  const DpPartitionPlan dp_plan =
      alpha_balanced_partition(w.layout, w.dp_params, w.dp, model, 1.0);

  std::optional<MicroGroupPlan> tp_plan;
  if (w.tp > 1) {
    const std::vector<ParamSpec> mats = tp_plane_params(w.dp_params);
    Cost total = 0;
    for (const ParamSpec& p : mats) total += param_cost(p, model);
    tp_plan =
        build_micro_groups(mats, model, w.tp, std::max<Cost>(total, 1));
  }

  OptimizerConfig opt;
  opt.lr = a.lr;
  opt.beta = a.beta;
  opt.ns_steps = a.ns_steps;

  FaultSpec fault;
  fault.enabled = a.inject_fault;
  fault.param_id = a.fault_param;
  fault.at_step = a.fault_step;

  const VerifyTrace ref =
      run_replicated(w.dp_params, opt, a.steps, a.seed, w.dp);
  const VerifyTrace got =
      run_partitioned(w.dp_params, opt, a.steps, a.seed, w.layout, dp_plan,
                      tp_plan ? &*tp_plan : nullptr, fault);
  const double diff = max_abs_diff(ref, got);

  std::string report;
  report += "model " + w.cfg.model.name + " dp " + std::to_string(w.dp) +
            " tp " + std::to_string(w.tp) + " steps " +
            std::to_string(a.steps) + " seed " + std::to_string(a.seed) +
            "\n";
  report += "reduction_order " + got.reduction_order + "\n";
  report += "max_abs_diff " + fmt(diff) + "\n";

  int rc = 0;
  if (!a.inject_fault) {
    report += "tolerance " + fmt(a.tolerance) + "\n";
    if (diff <= a.tolerance) {
      report += "verdict equivalent\n";
    } else {
      report += "verdict diverged\n";
      rc = 1;
    }
  } else {
    int moved = -1;
    for (const auto& [id, hosts] : got.state_hosts)
      if (hosts.size() > 1) moved = id;
    report += "fault_param " + std::to_string(moved) + "\n";
    if (diff > 1e-6) {
      report += "verdict fault-detected\n";
    } else {
      report += "verdict fault-missed\n";
      rc = 1;
    }
  }
  std::cout << report;
  if (!a.report_path.empty()) write_file(a.report_path, report);
  return rc;
}

void add_workload_flags(CLI::App* sub, WorkloadArgs& wl) {
  sub->add_option("--config", wl.config_path, "workload config file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--dp", wl.dp, "data-parallel ranks (overrides config)");
  sub->add_option("--tp", wl.tp, "tensor-parallel ranks (overrides config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optimizer-state partition planner and execution simulator"};
  app.require_subcommand(1);

  PlanDpArgs dp_args;
  CLI::App* plan_dp = app.add_subcommand(
      "plan-dp", "partition bucketed optimizer states across ranks");
  add_workload_flags(plan_dp, dp_args.wl);
  plan_dp->add_option("--method", dp_args.method,
                      "equal-chunk | atomic-ownership | alpha-balanced");
  plan_dp->add_option("--alpha", dp_args.alpha,
                      "balance knob in [0,1]; 0 keeps stride targets, 1 "
                      "chases the deficit");
  plan_dp->add_option("--cost", dp_args.cost,
                      "numel | bytes | flops-muon | flops-shampoo | "
                      "flops-soap");
  plan_dp->add_option("--ns-steps", dp_args.ns_steps,
                      "orthogonalization iterations priced by flops-muon");
  plan_dp->add_option("--out", dp_args.out_path, "write the plan file here");
  plan_dp->add_option("--compare-csv", dp_args.compare_csv,
                      "write a three-method comparison table");
  plan_dp->add_option("--loads-csv", dp_args.loads_csv,
                      "write per-rank loads");

  PlanTpArgs tp_args;
  CLI::App* plan_tp = app.add_subcommand(
      "plan-tp", "schedule tensor-parallel matrices into micro groups");
  add_workload_flags(plan_tp, tp_args.wl);
  plan_tp->add_option("--cmax", tp_args.cmax,
                      "per-rank group capacity (size suffixes under "
                      "numel/bytes)");
  plan_tp->add_option("--cost", tp_args.cost, "cost kind for balancing");
  plan_tp->add_option("--ns-steps", tp_args.ns_steps,
                      "orthogonalization iterations priced by flops-muon");
  plan_tp->add_option("--out", tp_args.out_path, "write the plan file here");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "simulate one training iteration per strategy");
  add_workload_flags(simulate, sim_args.wl);
  simulate->add_option("--strategy", sim_args.strategies,
                       "comma list of sc, nv-layerwise, asc, lb-asc");
  simulate->add_option("--alpha", sim_args.alpha, "lb-asc balance knob");
  simulate->add_option("--plan-cost", sim_args.plan_cost,
                       "cost kind the partition plans are built with");
  simulate->add_option("--exec-cost", sim_args.exec_cost,
                       "cost kind pricing optimizer compute");
  simulate->add_option("--ns-steps", sim_args.ns_steps,
                       "orthogonalization iterations priced by flops-muon");
  simulate->add_option("--fwd-flops", sim_args.fwd_flops,
                       "forward flops per element in the layer profile");
  simulate->add_option("--nv-redistribution", sim_args.nv_mode,
                       "broadcast | all-gather");
  simulate->add_option("--cmax", sim_args.cmax,
                       "micro group capacity when tp > 1");
  simulate->add_option("--trace-dir", sim_args.trace_dir,
                       "write chrome trace json per strategy here");
  simulate->add_option("--csv", sim_args.csv_path, "write the summary csv");

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand(
      "verify", "check partitioned execution against the replicated run");
  add_workload_flags(verify, verify_args.wl);
  verify->add_option("--steps", verify_args.steps, "optimizer steps to run");
  verify->add_option("--seed", verify_args.seed, "gradient stream seed");
  verify->add_option("--lr", verify_args.lr, "learning rate");
  verify->add_option("--beta", verify_args.beta, "momentum coefficient");
  verify->add_option("--ns-steps", verify_args.ns_steps,
                     "orthogonalization iterations");
  verify->add_option("--tolerance", verify_args.tolerance,
                     "max allowed trajectory difference");
  verify->add_flag("--inject-fault", verify_args.inject_fault,
                   "corrupt one parameter's host assignment mid-run");
  verify->add_option("--fault-param", verify_args.fault_param,
                     "parameter to corrupt (-1 picks one)");
  verify->add_option("--fault-step", verify_args.fault_step,
                     "step to corrupt at (-1 picks the middle)");
  verify->add_option("--report", verify_args.report_path,
                     "write the verdict report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(plan_dp)) return run_plan_dp(dp_args);
    if (app.got_subcommand(plan_tp)) return run_plan_tp(tp_args);
    if (app.got_subcommand(simulate)) return run_simulate(sim_args);
    return run_verify(verify_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShardError& e) {
    std::cerr << "sharding error: " << e.what() << "\n";
    return 2;
  } catch (const LayoutError& e) {
    std::cerr << "layout error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
