// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared primitive types and error categories.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace optishard {

// Planning costs are always integer-valued (element counts, byte counts,
// polynomial flop counts), so conservation checks can be exact.
using Cost = std::uint64_t;

// Invalid or inconsistent model / run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Buffer layout construction failed (e.g. parameter larger than a bucket).
class LayoutError : public std::runtime_error {
 public:
  explicit LayoutError(const std::string& what) : std::runtime_error(what) {}
};

// Tensor-parallel sharding is impossible for the requested degree.
class ShardError : public std::runtime_error {
 public:
  explicit ShardError(const std::string& what) : std::runtime_error(what) {}
};

// Operation applied to an input it does not support.
class UnsupportedError : public std::runtime_error {
 public:
  explicit UnsupportedError(const std::string& what)
      : std::runtime_error(what) {}
};

// Partition plan is malformed or mismatched with a layout / strategy.
class PlanError : public std::runtime_error {
 public:
  explicit PlanError(const std::string& what) : std::runtime_error(what) {}
};

// No feasible schedule exists under the given capacity.
class UnschedulableError : public std::runtime_error {
 public:
  explicit UnschedulableError(const std::string& what)
      : std::runtime_error(what) {}
};

// File parse / serialization failure.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace optishard
