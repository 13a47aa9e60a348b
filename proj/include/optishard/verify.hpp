// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Numerical equivalence harness: runs the same momentum-orthogonalized
// optimizer once fully replicated and once through the partitioned
// execution path (gradient reduction to owners, tensor-parallel host
// gathering, update, write-back), and compares trajectories.
//
// Gradients are synthetic but deterministic: seeded per (step, parameter,
// contributor rank), summed in ascending rank order in both runs, so the
// two float pipelines are instruction-for-instruction comparable.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "optishard/common.hpp"
#include "optishard/dp_partition.hpp"
#include "optishard/tp_schedule.hpp"
#include "optishard/workload.hpp"

namespace optishard {

struct OptimizerConfig {
  double lr = 0.02;
  double beta = 0.9;
  int ns_steps = 5;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic standard-normal stream independent of any library
// distribution implementation: xorshift-free splitmix64 chain feeding
// Box-Muller.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : state_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 =
        (static_cast<double>(raw() >> 11) + 1.0) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(raw() >> 11) * 0x1p-53;
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * 3.14159265358979323846 * u2;
    spare_ = mag * std::sin(ang);
    have_spare_ = true;
    return mag * std::cos(ang);
  }

 private:
  std::uint64_t raw() {
    state_ = splitmix64(state_);
    return state_;
  }
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::uint64_t stream_seed(std::uint64_t seed, int kind, int step,
                                 int param_id, int rank) {
  std::uint64_t s = seed;
  s = splitmix64(s ^ (0x100000001ULL * static_cast<std::uint64_t>(kind + 1)));
  s = splitmix64(s ^ static_cast<std::uint64_t>(step + 1));
  s = splitmix64(s ^ (static_cast<std::uint64_t>(param_id + 1) << 20));
  s = splitmix64(s ^ (static_cast<std::uint64_t>(rank + 1) << 40));
  return s;
}

inline Eigen::MatrixXd filled_normal(const ParamSpec& p, std::uint64_t seed,
                                     double scale) {
  const Eigen::Index rows = p.shape[0];
  const Eigen::Index cols = p.is_matrix() ? p.shape[1] : 1;
  NormalStream stream(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = stream.next() * scale;
  return m;
}

}  // namespace detail

// One data-parallel contributor's gradient for a parameter at a step.
inline Eigen::MatrixXd synth_gradient(const ParamSpec& p, std::uint64_t seed,
                                      int step, int rank) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.shape[0]));
  return detail::filled_normal(
      p, detail::stream_seed(seed, /*kind=*/0, step, p.id, rank), scale);
}

inline Eigen::MatrixXd init_weight(const ParamSpec& p, std::uint64_t seed) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.shape[0]));
  return detail::filled_normal(
      p, detail::stream_seed(seed, /*kind=*/1, 0, p.id, 0), scale);
}

// Quintic Newton-Schulz orthogonalization. The input is scaled to unit
// Frobenius norm and, if taller than wide, transposed for the iteration;
// singular values are driven into a band around 1 rather than to exactly 1.
inline Eigen::MatrixXd newton_schulz_orthogonalize(Eigen::MatrixXd x,
                                                   int steps) {
  constexpr double a = 3.4445, b = -4.7750, c = 2.0315;
  const double norm = x.norm();
  if (norm == 0.0) return x;  // zero momentum yields a zero update
  const bool transposed = x.rows() > x.cols();
  if (transposed) x.transposeInPlace();
  x /= norm;
  for (int s = 0; s < steps; ++s) {
    const Eigen::MatrixXd xxt = x * x.transpose();
    const Eigen::MatrixXd bterm = xxt * x;
    const Eigen::MatrixXd cterm = xxt * bterm;
    x = a * x + b * bterm + c * cterm;
  }
  if (transposed) x.transposeInPlace();
  return x;
}

// Momentum update followed by the parameter delta: orthogonalized momentum
// for matrices, plain momentum descent for vectors.
inline void muon_apply(const ParamSpec& p, const OptimizerConfig& cfg,
                       Eigen::MatrixXd& weight, Eigen::MatrixXd& momentum,
                       const Eigen::MatrixXd& grad) {
  momentum = cfg.beta * momentum + grad;
  if (p.is_matrix()) {
    weight -= cfg.lr * newton_schulz_orthogonalize(momentum, cfg.ns_steps);
  } else {
    weight -= cfg.lr * momentum;
  }
}

struct VerifyTrace {
  std::string reduction_order = "ascending-rank";
  // update_norms[step][param] = Frobenius norm of the applied delta
  std::vector<std::map<int, double>> update_norms;
  std::map<int, Eigen::MatrixXd> final_weights;
  // every (dp, tp) host key that touched a parameter's optimizer state
  std::map<int, std::set<std::string>> state_hosts;
};

inline double max_abs_diff(const VerifyTrace& a, const VerifyTrace& b) {
  double mx = 0.0;
  if (a.update_norms.size() != b.update_norms.size())
    throw UnsupportedError("traces cover different step counts");
  for (std::size_t s = 0; s < a.update_norms.size(); ++s)
    for (const auto& [id, n] : a.update_norms[s]) {
      const auto it = b.update_norms[s].find(id);
      if (it == b.update_norms[s].end())
        throw UnsupportedError("traces cover different parameters");
      mx = std::max(mx, std::abs(n - it->second));
    }
  for (const auto& [id, w] : a.final_weights) {
    const auto it = b.final_weights.find(id);
    if (it == b.final_weights.end())
      throw UnsupportedError("traces cover different parameters");
    mx = std::max(mx, (w - it->second).cwiseAbs().maxCoeff());
  }
  return mx;
}

// Gradient summed over contributors in ascending rank order; both runs use
// this exact loop so their float operations match.
inline Eigen::MatrixXd reduced_gradient(const ParamSpec& p,
                                        std::uint64_t seed, int step,
                                        int contributors) {
  Eigen::MatrixXd g = synth_gradient(p, seed, step, 0);
  for (int r = 1; r < contributors; ++r) g += synth_gradient(p, seed, step, r);
  return g;
}

inline VerifyTrace run_replicated(const std::vector<ParamSpec>& params,
                                  const OptimizerConfig& cfg, int steps,
                                  std::uint64_t seed, int contributors = 1) {
  VerifyTrace trace;
  std::map<int, Eigen::MatrixXd> weights, momenta;
  for (const ParamSpec& p : params) {
    weights[p.id] = init_weight(p, seed);
    momenta[p.id] = Eigen::MatrixXd::Zero(weights[p.id].rows(),
                                          weights[p.id].cols());
    trace.state_hosts[p.id].insert("replicated");
  }
  for (int step = 0; step < steps; ++step) {
    trace.update_norms.emplace_back();
    for (const ParamSpec& p : params) {
      const Eigen::MatrixXd g = reduced_gradient(p, seed, step, contributors);
      const Eigen::MatrixXd before = weights[p.id];
      muon_apply(p, cfg, weights[p.id], momenta[p.id], g);
      trace.update_norms.back()[p.id] = (weights[p.id] - before).norm();
    }
  }
  trace.final_weights = std::move(weights);
  return trace;
}

// Corrupts the host assignment of one parameter from a given step onward;
// the optimizer state at the original host is not migrated, which is the
// failure mode the comparison must catch.
struct FaultSpec {
  bool enabled = false;
  int param_id = -1;  // -1 picks the first tensor-parallel matrix
  int at_step = -1;   // -1 picks the middle step
};

// Partitioned execution. `shard_layout` and `dp_plan` describe the per-GPU
// buffer the gradients are reduce-scattered over (pass the full layout when
// tp is 1); `tp_plan` routes splittable matrices to their host ranks and
// may be null when tp is 1.
inline VerifyTrace run_partitioned(const std::vector<ParamSpec>& params,
                                   const OptimizerConfig& cfg, int steps,
                                   std::uint64_t seed,
                                   const BufferLayout& shard_layout,
                                   const DpPartitionPlan& dp_plan,
                                   const MicroGroupPlan* tp_plan,
                                   const FaultSpec& fault = {}) {
  VerifyTrace trace;
  const int contributors = dp_plan.ranks;

  // host key per parameter: (dp owner, tp host)
  std::map<int, std::pair<int, int>> host;
  for (const ParamSpec& p : params) {
    const int dp_owner = param_owner(dp_plan, shard_layout, p.id);
    int tp_host = 0;
    if (tp_plan != nullptr && p.tp_splittable != TpSplit::kNone &&
        !p.vocab_space) {
      bool found = false;
      for (const MicroGroup& g : tp_plan->groups) {
        for (int r = 0; r < tp_plan->ranks && !found; ++r)
          for (int id : g.rank_params[static_cast<std::size_t>(r)])
            if (id == p.id) {
              tp_host = r;
              found = true;
              break;
            }
        if (found) break;
      }
      if (!found)
        throw PlanError("parameter " + std::to_string(p.id) +
                        " missing from the micro-group plan");
    }
    host[p.id] = {dp_owner, tp_host};
  }

  FaultSpec eff = fault;
  if (eff.enabled) {
    if (eff.param_id < 0)
      for (const ParamSpec& p : params)
        if (p.tp_splittable != TpSplit::kNone && !p.vocab_space) {
          eff.param_id = p.id;
          break;
        }
    if (eff.param_id < 0) eff.param_id = params.front().id;
    if (eff.at_step < 0) eff.at_step = steps / 2;
  }

  auto host_key = [](const std::pair<int, int>& h) {
    return "dp" + std::to_string(h.first) + ".tp" + std::to_string(h.second);
  };

  // per-host optimizer state stores; weights are tracked once because all
  // replicas stay identical after write-back
  std::map<std::string, std::map<int, Eigen::MatrixXd>> momenta_at;
  std::map<int, Eigen::MatrixXd> weights;
  for (const ParamSpec& p : params) {
    weights[p.id] = init_weight(p, seed);
    const std::string key = host_key(host[p.id]);
    momenta_at[key][p.id] = Eigen::MatrixXd::Zero(weights[p.id].rows(),
                                                  weights[p.id].cols());
    trace.state_hosts[p.id].insert(key);
  }

  for (int step = 0; step < steps; ++step) {
    if (eff.enabled && step == eff.at_step) {
      // reroute to the next tp rank (or next dp rank when tp is trivial)
      auto& h = host.at(eff.param_id);
      if (tp_plan != nullptr && tp_plan->ranks > 1)
        h.second = (h.second + 1) % tp_plan->ranks;
      else
        h.first = (h.first + 1) % dp_plan.ranks;
    }
    trace.update_norms.emplace_back();
    for (const ParamSpec& p : params) {
      // reduce-scatter delivers the canonically reduced gradient to the dp
      // owner; the tensor-parallel all-to-all reassembles shards at the
      // host, which permutes no values, so the update sees the same bytes
      const Eigen::MatrixXd g = reduced_gradient(p, seed, step, contributors);
      const std::string key = host_key(host.at(p.id));
      trace.state_hosts[p.id].insert(key);
      auto& store = momenta_at[key];
      auto it = store.find(p.id);
      if (it == store.end()) {
        // state was never initialized here: a corrupted assignment lands on
        // a host with a cold momentum buffer
        it = store
                 .emplace(p.id, Eigen::MatrixXd::Zero(weights[p.id].rows(),
                                                      weights[p.id].cols()))
                 .first;
      }
      const Eigen::MatrixXd before = weights[p.id];
      muon_apply(p, cfg, weights[p.id], it->second, g);
      trace.update_norms.back()[p.id] = (weights[p.id] - before).norm();
    }
  }
  trace.final_weights = std::move(weights);
  return trace;
}

}  // namespace optishard
