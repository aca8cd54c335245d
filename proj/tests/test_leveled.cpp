/*
 * Copyright (c) 2026 The Strata Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>

#include "doctest.h"
#include "strata/leveled.hpp"
#include "strata/simprof.hpp"

namespace strata {
namespace {

const LevelSet kM{Level::Model};
const LevelSet kML{Level::Model, Level::Layer};
const LevelSet kMLG{Level::Model, Level::Layer, Level::Kernel};

/// Hand-built tree: a model of the given duration wrapping layers of the
/// given durations (tags and kernels omitted; leveling only reads timing).
EntityTree bare_tree(std::uint64_t model_ns,
                     std::vector<std::uint64_t> layer_ns = {}) {
  EntityTree tree;
  tree.root.span.span_id = 1;
  tree.root.span.name = "model";
  tree.root.span.begin_ns = 0;
  tree.root.span.end_ns = model_ns;
  std::uint64_t cursor = 0;
  for (std::size_t i = 0; i < layer_ns.size(); ++i) {
    LayerExec layer;
    layer.layer_index = static_cast<std::uint32_t>(i);
    layer.span.span_id = 2 + i;
    layer.span.level = Level::Layer;
    layer.span.begin_ns = cursor;
    layer.span.end_ns = cursor + layer_ns[i];
    cursor = layer.span.end_ns;
    tree.root.layers.push_back(std::move(layer));
  }
  return tree;
}

LeveledRunGroup group_of(
    std::vector<std::pair<LevelSet, std::vector<EntityTree>>> runs) {
  LeveledRunGroup group;
  group.batch_size = 1;
  group.system = default_system();
  for (auto& [levels, trees] : runs) group.runs[levels] = std::move(trees);
  return group;
}

const OverheadRow* row_for(const OverheadReport& report,
                           const LeveledEventKey& key) {
  for (const OverheadRow& row : report.rows) {
    if (row.event == key) return &row;
  }
  return nullptr;
}

TEST_CASE("level letters and labels") {
  CHECK(level_letter(Level::Model) == 'M');
  CHECK(level_letter(Level::Layer) == 'L');
  CHECK(level_letter(Level::Kernel) == 'G');
  CHECK(level_letter(Level::Api) == 'A');
  CHECK(level_set_label(kM) == "M");
  CHECK(level_set_label(kMLG) == "M+L+G");
  CHECK(event_label({Level::Model, 0, 0}) == "model");
  CHECK(event_label({Level::Layer, 3, 0}) == "layer 3");
  CHECK(event_label({Level::Kernel, 3, 1}) == "layer 3 kernel 1");
}

TEST_CASE("run groups file bundles by their profiling-level set") {
  const SyntheticModel model = fixtures::minimal();
  const LeveledRunGroup group = LeveledRunGroup::from_bundles(
      {emit_run(model, 2, kM, {}), emit_run(model, 2, kML, {}),
       emit_run(model, 2, kMLG, {}), emit_run(model, 2, kMLG, {}, false, 1)});
  CHECK(group.batch_size == 2);
  CHECK(group.system == default_system());
  CHECK(group.runs.size() == 3);
  CHECK(group.runs.at(kMLG).size() == 2);
}

TEST_CASE("run groups reject mismatched and ambiguous bundles") {
  const SyntheticModel model = fixtures::minimal();
  LeveledRunGroup group;
  group.add(emit_run(model, 2, kM, {}));
  CHECK_THROWS_AS(group.add(emit_run(model, 4, kM, {})), LeveledError);
  CHECK_THROWS_AS(
      group.add(emit_run(model, 2, kM, {}, false, 0, {},
                         SystemSpec{"other", 1e12, 1e11})),
      LeveledError);
  CHECK_THROWS_AS(group.add(emit_run(fixtures::overlap(), 2, kMLG, {})),
                  LeveledError);
}

TEST_CASE("overhead demands an inclusion chain of at least two sets") {
  CHECK_THROWS_AS(compute_overhead(group_of({{kM, {bare_tree(100)}}})),
                  LeveledError);
  CHECK_THROWS_AS(
      compute_overhead(group_of({
          {kML, {bare_tree(100, {40})}},
          {{Level::Model, Level::Kernel}, {bare_tree(120)}},
      })),
      LeveledError);
}

TEST_CASE("overhead on the chain fixture recovers the injected values") {
  const SyntheticModel model = fixtures::overhead_chain();
  const OverheadProfile overhead = fixtures::default_overhead();
  const LeveledRunGroup group =
      LeveledRunGroup::from_bundles(emit_leveled_chain(model, 1, overhead));
  const AnalysisOptions options;
  const OverheadReport report = compute_overhead(group, options);

  CHECK(report == ground_truth_overhead(model, 1, overhead, options));
  CHECK(report.warnings.empty());
  CHECK(report.model_overhead_by_added_levels.at({Level::Layer}) ==
        157'000'000.0);
  CHECK(report.model_overhead_by_added_levels.at({Level::Kernel}) ==
        58'200'000.0);

  const OverheadRow* first_layer = row_for(report, {Level::Layer, 0, 0});
  REQUIRE(first_layer != nullptr);
  CHECK(first_layer->overhead_by_added_levels.at({Level::Kernel}) == 240'000.0);
  CHECK(first_layer->accurate_latency_ns == 27'510'000.0 + 15'700'000.0);

  const OverheadRow* later_layer = row_for(report, {Level::Layer, 4, 0});
  REQUIRE(later_layer != nullptr);
  CHECK(later_layer->overhead_by_added_levels.at({Level::Kernel}) ==
        6'440'000.0);

  // Rows run model -> layers -> kernels, each tier in execution order.
  REQUIRE(!report.rows.empty());
  CHECK(report.rows.front().event.level == Level::Model);
  CHECK(std::is_sorted(report.rows.begin(), report.rows.end(),
                       [](const OverheadRow& a, const OverheadRow& b) {
                         return std::tuple(rank(a.event.level),
                                           a.event.layer_index,
                                           a.event.kernel_index) <
                                std::tuple(rank(b.event.level),
                                           b.event.layer_index,
                                           b.event.kernel_index);
                       }));
}

TEST_CASE("accurate latency comes from the depth-matched run") {
  const SyntheticModel model = fixtures::overhead_chain();
  const OverheadProfile overhead = fixtures::default_overhead();
  const LeveledRunGroup group =
      LeveledRunGroup::from_bundles(emit_leveled_chain(model, 1, overhead));

  // Model latency untouched by any instrumentation: 10 x 27.51 ms.
  CHECK(accurate_latency(group, {Level::Model, 0, 0}) == 275'100'000.0);
  // Layer latency from the run that stops at the layer level.
  CHECK(accurate_latency(group, {Level::Layer, 0, 0}) ==
        27'510'000.0 + 15'700'000.0);
  // Kernel latency from the full-depth run: the true device time.
  CHECK(accurate_latency(group, {Level::Kernel, 0, 0}) == 80'000.0);
  CHECK(accurate_latency(group, {Level::Kernel, 4, 1}) == 3'220'000.0);

  CHECK_THROWS_AS(accurate_latency(group, {Level::Layer, 99, 0}),
                  LeveledError);
  const LeveledRunGroup shallow = LeveledRunGroup::from_bundles(
      {emit_run(model, 1, kM, overhead), emit_run(model, 1, kML, overhead)});
  CHECK_THROWS_AS(accurate_latency(shallow, {Level::Kernel, 0, 0}),
                  LeveledError);
}

TEST_CASE("small negative differences clamp to zero as noise") {
  const OverheadReport report = compute_overhead(
      group_of({{kM, {bare_tree(10'000)}}, {kML, {bare_tree(9'950)}}}));
  const OverheadRow* model_row = row_for(report, {Level::Model, 0, 0});
  REQUIRE(model_row != nullptr);
  CHECK(model_row->overhead_by_added_levels.at({Level::Layer}) == 0.0);
  CHECK(model_row->clamped);
  CHECK(report.warnings.empty());
}

TEST_CASE("large negative differences stay visible and warn") {
  const OverheadReport report = compute_overhead(
      group_of({{kM, {bare_tree(10'000)}}, {kML, {bare_tree(9'000)}}}));
  const OverheadRow* model_row = row_for(report, {Level::Model, 0, 0});
  REQUIRE(model_row != nullptr);
  CHECK(model_row->overhead_by_added_levels.at({Level::Layer}) == -1'000.0);
  CHECK(!model_row->clamped);
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("negative beyond noise tolerance") !=
        std::string::npos);
}

TEST_CASE("newly visible events carry no overhead step and no warning") {
  const OverheadReport report = compute_overhead(group_of({
      {kM, {bare_tree(100)}},
      {kML, {bare_tree(130, {60, 60})}},
  }));
  CHECK(report.warnings.empty());
  const OverheadRow* layer = row_for(report, {Level::Layer, 0, 0});
  REQUIRE(layer != nullptr);
  CHECK(layer->overhead_by_added_levels.empty());
  CHECK(layer->accurate_latency_ns == 60.0);
}

TEST_CASE("structural mismatches between chain members warn") {
  const OverheadReport narrow_only = compute_overhead(group_of({
      {kML, {bare_tree(100, {30, 30, 30})}},
      {kMLG, {bare_tree(100, {30, 30})}},
  }));
  REQUIRE(narrow_only.warnings.size() == 1);
  CHECK(narrow_only.warnings[0] ==
        "layer 2 visible under M+L but not under M+L+G");

  const OverheadReport wide_only = compute_overhead(group_of({
      {kML, {bare_tree(100, {30, 30})}},
      {kMLG, {bare_tree(100, {30, 30, 30})}},
  }));
  REQUIRE(wide_only.warnings.size() == 1);
  CHECK(wide_only.warnings[0] ==
        "layer 2 visible under M+L+G but not under M+L");
}

TEST_CASE("repetitions combine by trimmed mean before subtraction") {
  const OverheadReport report = compute_overhead(
      group_of({
          {kM,
           {bare_tree(90), bare_tree(100), bare_tree(110), bare_tree(120),
            bare_tree(500)}},
          {kML, {bare_tree(160)}},
      }),
      AnalysisOptions{0.2, 0.05, 0.01});
  // floor(0.2*5) = 1 dropped from each end: mean(100, 110, 120) = 110.
  const OverheadRow* model_row = row_for(report, {Level::Model, 0, 0});
  REQUIRE(model_row != nullptr);
  CHECK(model_row->accurate_latency_ns == 110.0);
  CHECK(model_row->overhead_by_added_levels.at({Level::Layer}) == 50.0);
}

}  // namespace
}  // namespace strata
