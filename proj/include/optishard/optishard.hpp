// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#define OPTISHARD_VERSION_MAJOR 0
#define OPTISHARD_VERSION_MINOR 1
#define OPTISHARD_VERSION_PATCH 0
#define OPTISHARD_VERSION "0.1.0"

#include "optishard/collective.hpp"
#include "optishard/common.hpp"
#include "optishard/config.hpp"
#include "optishard/cost.hpp"
#include "optishard/dp_partition.hpp"
#include "optishard/metrics.hpp"
#include "optishard/serialize.hpp"
#include "optishard/simulate.hpp"
#include "optishard/tp_schedule.hpp"
#include "optishard/trace.hpp"
#include "optishard/verify.hpp"
#include "optishard/workload.hpp"
