// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic transformer workload description: parameter specs, gradient
// buffer layout (bucketed, in declaration order), and tensor-parallel
// shard geometry.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optishard/common.hpp"

namespace optishard {

// How a matrix parameter may be split across tensor-parallel ranks.
// Column-parallel splits the output dimension (dim 1), row-parallel the
// input dimension (dim 0). 1-D parameters are never split.
enum class TpSplit { kNone, kColumn, kRow };

inline const char* to_string(TpSplit s) {
  switch (s) {
    case TpSplit::kColumn: return "column";
    case TpSplit::kRow: return "row";
    default: return "none";
  }
}

struct ParamSpec {
  int id = 0;                      // dense, ascending in declaration order
  std::string name;
  std::vector<std::int64_t> shape; // 1-D or 2-D, all extents positive
  std::int64_t numel = 0;
  int dtype_bytes = 2;
  TpSplit tp_splittable = TpSplit::kNone;
  // Vocab-space matrices (embedding, lm head) take element-wise updates, so
  // their optimizer states stay sharded with the data and they are excluded
  // from the host-gathered tensor-parallel update plane.
  bool vocab_space = false;

  bool is_matrix() const { return shape.size() == 2; }
};

// Contiguous run of whole parameters inside the flat gradient buffer.
// Offsets are element offsets relative to the bucket start; boundaries are
// the atomic cut positions {0, o_1, ..., numel}.
struct Bucket {
  int index = 0;
  std::vector<int> param_ids;
  std::vector<std::int64_t> param_offsets;  // same length as param_ids
  std::int64_t numel = 0;

  // Prefix-sum offsets of every whole-parameter boundary, including both
  // ends. Size = param count + 1; strictly increasing.
  std::vector<std::int64_t> atomic_boundaries() const {
    std::vector<std::int64_t> b = param_offsets;
    b.push_back(numel);
    return b;
  }
};

struct BufferLayout {
  std::vector<Bucket> buckets;
  std::int64_t total_numel = 0;
};

struct TpShardSpec {
  int param_id = 0;
  int tp_degree = 1;
  int shard_dim = 0;  // 1 for column-parallel, 0 for row-parallel
  std::vector<std::int64_t> shard_shape;
  std::int64_t shard_numel = 0;
};

// Architecture knobs for the synthetic generator plus the packing and
// parallelism defaults carried alongside them in config files.
struct ModelConfig {
  std::string name = "unnamed";
  int num_layers = 0;
  std::int64_t hidden_size = 0;
  std::int64_t ffn_size = 0;
  int num_heads = 1;
  std::int64_t vocab_size = 0;
  int dtype_bytes = 2;
  std::int64_t bucket_capacity = 40'000'000;  // elements
  int dp_degree = 1;
  int tp_degree = 1;
};

inline void validate_model_config(const ModelConfig& cfg) {
  auto fail = [&](const std::string& msg) {
    throw ConfigError("model config '" + cfg.name + "': " + msg);
  };
  if (cfg.num_layers < 0) fail("num_layers must be >= 0");
  if (cfg.hidden_size <= 0) fail("hidden_size must be positive");
  if (cfg.num_layers > 0 && cfg.ffn_size <= 0) fail("ffn_size must be positive");
  if (cfg.num_heads <= 0) fail("num_heads must be positive");
  if (cfg.hidden_size % cfg.num_heads != 0)
    fail("hidden_size must be divisible by num_heads");
  if (cfg.vocab_size <= 0) fail("vocab_size must be positive");
  if (cfg.dtype_bytes != 1 && cfg.dtype_bytes != 2 && cfg.dtype_bytes != 4 &&
      cfg.dtype_bytes != 8)
    fail("dtype_bytes must be one of 1, 2, 4, 8");
  if (cfg.bucket_capacity <= 0) fail("bucket_capacity must be positive");
  if (cfg.dp_degree < 1) fail("dp_degree must be >= 1");
  if (cfg.tp_degree < 1) fail("tp_degree must be >= 1");
}

// Emits, in buffer declaration order: embedding; per layer a norm vector,
// fused qkv, attention output, ffn up and ffn down; final norm; lm head.
inline std::vector<ParamSpec> generate_transformer_params(
    const ModelConfig& cfg) {
  validate_model_config(cfg);
  const std::int64_t h = cfg.hidden_size;
  const std::int64_t f = cfg.ffn_size;
  const std::int64_t v = cfg.vocab_size;

  std::vector<ParamSpec> params;
  params.reserve(static_cast<std::size_t>(cfg.num_layers) * 5 + 3);
  auto add = [&](const std::string& name, std::vector<std::int64_t> shape,
                 TpSplit split, bool vocab_space = false) {
    ParamSpec p;
    p.id = static_cast<int>(params.size());
    p.name = name;
    p.numel = 1;
    for (std::int64_t e : shape) p.numel *= e;
    p.shape = std::move(shape);
    p.dtype_bytes = cfg.dtype_bytes;
    p.tp_splittable = p.shape.size() == 2 ? split : TpSplit::kNone;
    p.vocab_space = vocab_space;
    params.push_back(std::move(p));
  };

  add("embedding", {v, h}, TpSplit::kRow, true);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    add(prefix + "norm", {h}, TpSplit::kNone);
    add(prefix + "qkv", {h, 3 * h}, TpSplit::kColumn);
    add(prefix + "attn_out", {h, h}, TpSplit::kRow);
    add(prefix + "ffn_up", {h, f}, TpSplit::kColumn);
    add(prefix + "ffn_down", {f, h}, TpSplit::kRow);
  }
  add("final_norm", {h}, TpSplit::kNone);
  add("head", {h, v}, TpSplit::kColumn, true);
  return params;
}

// The host-gathered tensor-parallel update plane: split hidden-layer
// matrices whose whole-tensor updates must run on a single host rank.
// Vocab-space matrices and 1-D parameters update element-wise in place.
inline std::vector<ParamSpec> tp_plane_params(
    const std::vector<ParamSpec>& params) {
  std::vector<ParamSpec> out;
  for (const ParamSpec& p : params)
    if (p.tp_splittable != TpSplit::kNone && !p.vocab_space) out.push_back(p);
  return out;
}

// Greedy packing in declaration order: a parameter joins the current bucket
// if it fits, otherwise it opens a new one. Parameters never straddle
// buckets, so every bucket boundary is an atomic boundary.
inline BufferLayout build_buffer_layout(const std::vector<ParamSpec>& params,
                                        std::int64_t bucket_capacity) {
  if (bucket_capacity <= 0)
    throw LayoutError("bucket_capacity must be positive");
  BufferLayout layout;
  Bucket current;
  current.index = 0;
  auto flush = [&]() {
    if (!current.param_ids.empty()) {
      layout.buckets.push_back(current);
      current = Bucket{};
      current.index = static_cast<int>(layout.buckets.size());
    }
  };
  for (const ParamSpec& p : params) {
    if (p.numel <= 0)
      throw LayoutError("parameter '" + p.name + "' has no elements");
    if (p.numel > bucket_capacity)
      throw LayoutError("parameter '" + p.name + "' (" +
                        std::to_string(p.numel) +
                        " elements) exceeds bucket_capacity " +
                        std::to_string(bucket_capacity));
    if (current.numel + p.numel > bucket_capacity) flush();
    current.param_ids.push_back(p.id);
    current.param_offsets.push_back(current.numel);
    current.numel += p.numel;
    layout.total_numel += p.numel;
  }
  flush();
  return layout;
}

// Shard geometry for one parameter at the given tensor-parallel degree.
inline TpShardSpec tp_shard(const ParamSpec& p, int tp_degree) {
  if (tp_degree < 1) throw ShardError("tp_degree must be >= 1");
  if (p.tp_splittable == TpSplit::kNone)
    throw UnsupportedError("parameter '" + p.name +
                           "' is not tensor-parallel splittable");
  TpShardSpec s;
  s.param_id = p.id;
  s.tp_degree = tp_degree;
  s.shard_dim = p.tp_splittable == TpSplit::kColumn ? 1 : 0;
  const std::int64_t extent = p.shape.at(static_cast<std::size_t>(s.shard_dim));
  if (extent % tp_degree != 0)
    throw ShardError("parameter '" + p.name + "': extent " +
                     std::to_string(extent) + " along dim " +
                     std::to_string(s.shard_dim) + " is not divisible by tp=" +
                     std::to_string(tp_degree));
  s.shard_shape = p.shape;
  s.shard_shape[static_cast<std::size_t>(s.shard_dim)] = extent / tp_degree;
  s.shard_numel = p.numel / tp_degree;
  return s;
}

// Per-GPU view of the parameter list under tensor parallelism: splittable
// matrices shrink to their shard shape, everything else is replicated
// unchanged. Ids and order are preserved.
inline std::vector<ParamSpec> apply_tp_sharding(
    const std::vector<ParamSpec>& params, int tp_degree) {
  if (tp_degree < 1) throw ShardError("tp_degree must be >= 1");
  std::vector<ParamSpec> out = params;
  if (tp_degree == 1) return out;
  for (ParamSpec& p : out) {
    if (p.tp_splittable == TpSplit::kNone) continue;
    TpShardSpec s = tp_shard(p, tp_degree);
    p.shape = s.shard_shape;
    p.numel = s.shard_numel;
  }
  return out;
}

}  // namespace optishard
