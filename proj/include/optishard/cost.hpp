// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-parameter cost models used for planning and simulation. All kinds
// yield integer costs so that load sums are exact.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "optishard/common.hpp"
#include "optishard/workload.hpp"

namespace optishard {

enum class CostKind { kNumel, kFlopsMuon, kFlopsShampoo, kFlopsSoap, kBytes };

inline const char* to_string(CostKind k) {
  switch (k) {
    case CostKind::kNumel: return "numel";
    case CostKind::kFlopsMuon: return "flops-muon";
    case CostKind::kFlopsShampoo: return "flops-shampoo";
    case CostKind::kFlopsSoap: return "flops-soap";
    default: return "bytes";
  }
}

inline CostKind parse_cost_kind(const std::string& s) {
  if (s == "numel") return CostKind::kNumel;
  if (s == "flops-muon") return CostKind::kFlopsMuon;
  if (s == "flops-shampoo") return CostKind::kFlopsShampoo;
  if (s == "flops-soap") return CostKind::kFlopsSoap;
  if (s == "bytes") return CostKind::kBytes;
  throw ConfigError("unknown cost kind '" + s + "'");
}

struct CostModel {
  CostKind kind = CostKind::kNumel;
  // Orthogonalization iteration count for the muon flops model. Zero
  // disables the model and falls back to element count.
  int ns_steps = 5;
  // Preconditioner construction coefficients; the application term
  // 2*m*n*(m+n) is fixed. Soap's eigendecomposition is modeled as costlier.
  double shampoo_coeff = 1.0;
  double soap_coeff = 2.0;
};

inline Cost numel_cost(const ParamSpec& p) {
  return static_cast<Cost>(p.numel);
}

// Newton-Schulz orthogonalization flops for one update of a matrix with
// sides (m <= n): per iteration two m*m*n products and one m*m*m product,
// each 2*side^2*side flops, collapsed to k*(3*m^2*n + 2*m^3) with the
// residual m^2*n blend term. 1-D parameters cost their element count.
inline Cost flops_muon_cost(const ParamSpec& p, int ns_steps) {
  if (!p.is_matrix()) return numel_cost(p);
  if (ns_steps <= 0) return numel_cost(p);
  const Cost m = static_cast<Cost>(std::min(p.shape[0], p.shape[1]));
  const Cost n = static_cast<Cost>(std::max(p.shape[0], p.shape[1]));
  const Cost per_step = 2 * m * m * n + 2 * m * m * m + m * m * n;
  return static_cast<Cost>(ns_steps) * per_step;
}

inline Cost flops_precond_cost(const ParamSpec& p, double coeff) {
  if (!p.is_matrix()) return numel_cost(p);
  const double m = static_cast<double>(p.shape[0]);
  const double n = static_cast<double>(p.shape[1]);
  const double c = coeff * (m * m * m + n * n * n) + 2.0 * m * n * (m + n);
  const Cost r = static_cast<Cost>(std::llround(c));
  return r > 0 ? r : numel_cost(p);
}

inline Cost bytes_cost(const ParamSpec& p) {
  return static_cast<Cost>(p.numel) * static_cast<Cost>(p.dtype_bytes);
}

inline Cost param_cost(const ParamSpec& p, const CostModel& model) {
  switch (model.kind) {
    case CostKind::kNumel: return numel_cost(p);
    case CostKind::kFlopsMuon: return flops_muon_cost(p, model.ns_steps);
    case CostKind::kFlopsShampoo:
      return flops_precond_cost(p, model.shampoo_coeff);
    case CostKind::kFlopsSoap: return flops_precond_cost(p, model.soap_coeff);
    default: return bytes_cost(p);
  }
}

// Gradient payload of one parameter on the wire.
inline Cost comm_cost(const ParamSpec& p) {
  if (p.numel <= 0)
    throw UnsupportedError("parameter '" + p.name +
                           "' is empty, no communication cost");
  return bytes_cost(p);
}

}  // namespace optishard
