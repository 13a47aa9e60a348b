// Copyright (c) 2026, the optishard authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "optishard/dp_partition.hpp"
#include "optishard/metrics.hpp"
#include "testutil.hpp"

using namespace optishard;

namespace {

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

CostModel numel_model() {
  CostModel m;
  m.kind = CostKind::kNumel;
  return m;
}

}  // namespace

TEST_CASE("deficit state hand trace", "[dp]") {
  const std::vector<Cost> loads = {7, 3};
  const auto st = compute_deficit_state(loads, 6, 1.0);
  CHECK(st.mu == Catch::Approx(8.0));
  CHECK(st.deficits[0] == Catch::Approx(1.0));
  CHECK(st.deficits[1] == Catch::Approx(5.0));
  CHECK(st.total_deficit == Catch::Approx(6.0));
  CHECK(st.v_star[0] == Catch::Approx(1.0 / 6.0));
  CHECK(st.v_star[1] == Catch::Approx(5.0 / 6.0));

  const auto blended = compute_deficit_state(loads, 6, 0.5);
  CHECK(blended.v_star[0] == Catch::Approx(0.25 + 1.0 / 12.0));
  CHECK(blended.v_star[1] == Catch::Approx(0.25 + 5.0 / 12.0));

  // no deficit information degenerates to the even share
  const auto even = compute_deficit_state({5, 5}, 0, 1.0);
  CHECK(even.v_star[0] == Catch::Approx(0.5));
  CHECK(even.v_star[1] == Catch::Approx(0.5));
}

TEST_CASE("balanced planner splits a single bucket evenly", "[dp]") {
  const auto params = vector_params({8, 4, 2, 2});
  const auto layout = build_buffer_layout(params, 16);
  REQUIRE(layout.buckets.size() == 1);
  const auto plan =
      alpha_balanced_partition(layout, params, 2, numel_model(), 1.0);
  CHECK(plan.cut_vectors[0] == std::vector<std::int64_t>{0, 8, 16});
  CHECK(plan.rank_loads == std::vector<Cost>{8, 8});
  CHECK(plan.atomic);
  CHECK(plan.alpha.has_value());
  CHECK(validate_plan(plan, layout, params, numel_model()).empty());
}

TEST_CASE("balanced planner compensates across buckets", "[dp]") {
  // bucket 0: [7, 3], bucket 1: [3, 3]; the heavier bucket is placed first
  // and the second bucket fills the rank left behind
  const auto params = vector_params({7, 3, 3, 3});
  const auto layout = build_buffer_layout(params, 10);
  REQUIRE(layout.buckets.size() == 2);
  const auto plan =
      alpha_balanced_partition(layout, params, 2, numel_model(), 1.0);
  CHECK(plan.cut_vectors[0] == std::vector<std::int64_t>{0, 7, 10});
  CHECK(plan.cut_vectors[1] == std::vector<std::int64_t>{0, 0, 6});
  CHECK(plan.rank_loads == std::vector<Cost>{7, 9});

  // the greedy result matches the exhaustive optimum on this instance
  const double j_dp = dp_objectives(plan, layout).j_dp;
  const double best =
      testutil::brute_force_best_j_dp(layout, params, numel_model(), 2);
  CHECK(j_dp == Catch::Approx(best));
  CHECK(j_dp == Catch::Approx(1.0));
}

TEST_CASE("target snapping ties take the smaller offset", "[dp]") {
  const auto params = vector_params({2});
  const auto layout = build_buffer_layout(params, 2);
  const auto plan =
      alpha_balanced_partition(layout, params, 2, numel_model(), 0.0);
  // running target 1 is equidistant from boundaries 0 and 2
  CHECK(plan.cut_vectors[0] == std::vector<std::int64_t>{0, 0, 2});
  CHECK(plan.rank_loads == std::vector<Cost>{0, 2});
}

TEST_CASE("stride ownership hand traces", "[dp]") {
  SECTION("four ranks, holes for spanned strides") {
    const auto params = vector_params({4, 2, 2});
    const auto layout = build_buffer_layout(params, 8);
    const auto plan =
        atomic_ownership_partition(layout, params, 4, numel_model());
    CHECK(plan.rank_loads == std::vector<Cost>{4, 0, 2, 2});
    CHECK(plan.cut_vectors[0] == std::vector<std::int64_t>{0, 4, 4, 6, 8});
    CHECK(plan.atomic);
    CHECK(validate_plan(plan, layout, params, numel_model()).empty());
  }
  SECTION("start-index rule, not midpoint") {
    const auto params = vector_params({3, 3, 2});
    const auto layout = build_buffer_layout(params, 8);
    const auto plan =
        atomic_ownership_partition(layout, params, 2, numel_model());
    CHECK(plan.rank_loads == std::vector<Cost>{6, 2});
  }
}

TEST_CASE("equal chunk cuts are rounded element ranges", "[dp]") {
  const auto params = vector_params({10});
  const auto layout = build_buffer_layout(params, 10);
  const auto plan = equal_chunk_partition(layout, params, 4, numel_model());
  CHECK(plan.cut_vectors[0] == std::vector<std::int64_t>{0, 3, 5, 8, 10});
  CHECK(plan.rank_sizes[0] == std::vector<std::int64_t>{3, 2, 3, 2});
  CHECK_FALSE(plan.atomic);
  CHECK(validate_plan(plan, layout, params, numel_model()).empty());

  // slice evenness deviation stays below one element per slice
  const auto obj = dp_objectives(plan, layout);
  CHECK(obj.j_comm <= 4.0);
}

TEST_CASE("single rank owns everything", "[dp]") {
  const auto params = vector_params({5, 9, 2});
  const auto layout = build_buffer_layout(params, 16);
  for (int variant = 0; variant < 3; ++variant) {
    DpPartitionPlan plan;
    if (variant == 0)
      plan = equal_chunk_partition(layout, params, 1, numel_model());
    else if (variant == 1)
      plan = atomic_ownership_partition(layout, params, 1, numel_model());
    else
      plan = alpha_balanced_partition(layout, params, 1, numel_model(), 1.0);
    CHECK(plan.rank_loads == std::vector<Cost>{16});
    CHECK(plan.atomic);
    CHECK(validate_plan(plan, layout, params, numel_model()).empty());
  }
}

TEST_CASE("alpha outside the unit interval is rejected", "[dp]") {
  const auto params = vector_params({4});
  const auto layout = build_buffer_layout(params, 4);
  REQUIRE_THROWS_AS(
      alpha_balanced_partition(layout, params, 2, numel_model(), 1.5),
      ConfigError);
  REQUIRE_THROWS_AS(
      alpha_balanced_partition(layout, params, 2, numel_model(), -0.1),
      ConfigError);
}

TEST_CASE("plans conserve cost exactly on random workloads",
          "[dp][property]") {
  std::mt19937_64 rng(21);
  const double alphas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    const auto params = testutil::random_params(rng, 5 + trial % 40);
    std::int64_t max_numel = 1;
    for (const auto& p : params) max_numel = std::max(max_numel, p.numel);
    const auto layout =
        build_buffer_layout(params, max_numel * (1 + trial % 4));
    const int ranks = 1 << (trial % 4);  // 1, 2, 4, 8

    CostModel model;
    model.kind = trial % 2 == 0 ? CostKind::kNumel : CostKind::kFlopsMuon;
    Cost total = 0;
    for (const auto& p : params) total += param_cost(p, model);

    const auto balanced = alpha_balanced_partition(layout, params, ranks,
                                                   model, alphas[trial % 5]);
    const auto strided =
        atomic_ownership_partition(layout, params, ranks, model);
    for (const auto* plan : {&balanced, &strided}) {
      Cost planned = 0;
      for (Cost l : plan->rank_loads) planned += l;
      CHECK(planned == total);
      CHECK(validate_plan(*plan, layout, params, model).empty());
      for (const auto& cuts : plan->cut_vectors)
        for (std::size_t r = 1; r < cuts.size(); ++r)
          CHECK(cuts[r - 1] <= cuts[r]);
    }
  }
}

TEST_CASE("balanced plan beats stride ownership on most random instances",
          "[dp][property]") {
  std::mt19937_64 rng(99);
  int wins = 0, trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto params = testutil::random_params(rng, 8 + t % 24, 48);
    std::int64_t max_numel = 1;
    for (const auto& p : params) max_numel = std::max(max_numel, p.numel);
    const auto layout = build_buffer_layout(params, max_numel * 2);
    const int ranks = 2 << (t % 3);
    const auto balanced =
        alpha_balanced_partition(layout, params, ranks, numel_model(), 1.0);
    const auto strided =
        atomic_ownership_partition(layout, params, ranks, numel_model());
    const double jb = dp_objectives(balanced, layout).j_dp;
    const double js = dp_objectives(strided, layout).j_dp;
    if (jb <= js) ++wins;
  }
  CHECK(wins >= trials * 95 / 100);
}

TEST_CASE("balanced plan never beats the exhaustive optimum",
          "[dp][property]") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> numel(1, 12);
  for (int t = 0; t < 40; ++t) {
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(3 + t % 4));
    for (auto& s : sizes) s = numel(rng);
    const auto params = vector_params(sizes);
    const auto layout = build_buffer_layout(
        params, *std::max_element(sizes.begin(), sizes.end()) * 2);
    const auto plan =
        alpha_balanced_partition(layout, params, 2, numel_model(), 1.0);
    const double got = dp_objectives(plan, layout).j_dp;
    const double best =
        testutil::brute_force_best_j_dp(layout, params, numel_model(), 2);
    CHECK(got >= best - 1e-9);
  }
}

TEST_CASE("cut offsets scale with the workload", "[dp][property]") {
  const auto params = vector_params({6, 10, 4, 8, 2});
  const auto layout = build_buffer_layout(params, 30);
  const auto doubled_params = vector_params({12, 20, 8, 16, 4});
  const auto doubled_layout = build_buffer_layout(doubled_params, 60);
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto a =
        alpha_balanced_partition(layout, params, 3, numel_model(), alpha);
    const auto b = alpha_balanced_partition(doubled_layout, doubled_params, 3,
                                            numel_model(), alpha);
    for (std::size_t i = 0; i < a.cut_vectors.size(); ++i)
      for (std::size_t r = 0; r < a.cut_vectors[i].size(); ++r)
        CHECK(2 * a.cut_vectors[i][r] == b.cut_vectors[i][r]);
  }
}

TEST_CASE("validation catches corrupted plans", "[dp]") {
  const auto params = vector_params({4, 4, 4});
  const auto layout = build_buffer_layout(params, 12);
  auto plan = alpha_balanced_partition(layout, params, 2, numel_model(), 1.0);

  SECTION("non-monotone cuts") {
    plan.cut_vectors[0][1] = 12;
    plan.cut_vectors[0][2] = 4;
    CHECK_FALSE(validate_plan(plan, layout, params, numel_model()).empty());
  }
  SECTION("off-boundary cut in an atomic plan") {
    plan.cut_vectors[0][1] = 5;
    CHECK_FALSE(validate_plan(plan, layout, params, numel_model()).empty());
  }
  SECTION("tampered loads break conservation") {
    plan.rank_loads[0] += 1;
    CHECK_FALSE(validate_plan(plan, layout, params, numel_model()).empty());
  }
}

TEST_CASE("parameter ownership lookup", "[dp]") {
  const auto params = vector_params({4, 2, 2});
  const auto layout = build_buffer_layout(params, 8);
  const auto plan =
      atomic_ownership_partition(layout, params, 4, numel_model());
  CHECK(param_owner(plan, layout, 0) == 0);
  CHECK(param_owner(plan, layout, 1) == 2);
  CHECK(param_owner(plan, layout, 2) == 3);
  REQUIRE_THROWS_AS(param_owner(plan, layout, 9), PlanError);
}
