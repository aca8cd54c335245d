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
#include <cmath>
#include <random>

#include "doctest.h"
#include "strata/analysis.hpp"
#include "test_support.hpp"

namespace strata {
namespace {

constexpr double kMiB = 1048576.0;
const SystemSpec kV100{"tesla_v100", 15.7e12, 900e9};

KernelExec make_kernel(std::uint64_t duration_ns, KernelMetrics metrics,
                       std::string name = "kernel") {
  KernelExec kernel;
  kernel.launch.name = name;
  kernel.launch.level = Level::Kernel;
  kernel.launch.kind = SpanKind::Launch;
  kernel.launch.begin_ns = 0;
  kernel.launch.end_ns = 1;
  Span exec = kernel.launch;
  exec.kind = SpanKind::Exec;
  exec.begin_ns = 0;
  exec.end_ns = duration_ns;
  kernel.exec = exec;
  kernel.metrics = metrics;
  return kernel;
}

LayerExec make_layer(std::uint32_t index, std::uint64_t duration_ns,
                     std::vector<KernelExec> kernels = {},
                     std::string type = "Dense",
                     std::int64_t alloc_bytes = 0) {
  LayerExec layer;
  layer.layer_index = index;
  layer.span.name = "layer_" + std::to_string(index);
  layer.span.level = Level::Layer;
  layer.span.begin_ns = 0;
  layer.span.end_ns = duration_ns;
  layer.layer_type = std::move(type);
  layer.alloc_bytes = alloc_bytes;
  layer.kernels = std::move(kernels);
  return layer;
}

EntityTree make_tree(std::uint64_t model_ns, std::vector<LayerExec> layers) {
  EntityTree tree;
  tree.root.span.name = "model";
  tree.root.span.begin_ns = 0;
  tree.root.span.end_ns = model_ns;
  tree.root.layers = std::move(layers);
  return tree;
}

AnalysisInput input_of(std::uint32_t batch, std::vector<EntityTree> runs) {
  return AnalysisInput{batch, std::move(runs)};
}

TEST_CASE("trimmed mean equals the sort-slice oracle on 1000 random samples") {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> value(-1e6, 1e6);
  std::uniform_real_distribution<double> fraction(0.0, 0.4999);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> values(n);
    for (double& v : values) v = value(rng);
    const double f = fraction(rng);
    CHECK(trimmed_mean(values, f) == testing::trimmed_mean_oracle(values, f));
  }
}

TEST_CASE("trimmed mean rejects empty samples and bad fractions") {
  CHECK_THROWS_AS(trimmed_mean({}, 0.2), AnalysisError);
  CHECK_THROWS_AS(trimmed_mean({1.0}, 0.5), AnalysisError);
  CHECK_THROWS_AS(trimmed_mean({1.0}, -0.1), AnalysisError);
  CHECK(trimmed_mean({42.0}, 0.2) == 42.0);  // single sample is exact
  CHECK(trimmed_mean({1.0, 2.0, 3.0, 4.0, 100.0}, 0.2) == 3.0);
}

TEST_CASE("intensity and throughput reproduce the published kernel rows") {
  // volta_cgemm_32x32_tn, the two heaviest invocations.
  const auto ai_1 = arithmetic_intensity(77.42e9, 40.33 * kMiB, 43.86 * kMiB);
  REQUIRE(ai_1.has_value());
  CHECK(*ai_1 == doctest::Approx(876.97).epsilon(0.005));
  CHECK(arithmetic_throughput(77.42e9, 6.04e6) ==
        doctest::Approx(12.82e12).epsilon(0.005));

  const auto ai_2 = arithmetic_intensity(77.42e9, 43.93 * kMiB, 43.81 * kMiB);
  REQUIRE(ai_2.has_value());
  CHECK(*ai_2 == doctest::Approx(841.59).epsilon(0.005));
  CHECK(arithmetic_throughput(77.42e9, 6.03e6) ==
        doctest::Approx(12.83e12).epsilon(0.005));

  CHECK(!arithmetic_intensity(10.0, 0.0, 0.0).has_value());
  CHECK_THROWS_AS(arithmetic_throughput(1.0, 0.0), AnalysisError);
  CHECK_THROWS_AS(arithmetic_throughput(1.0, -5.0), AnalysisError);
}

TEST_CASE("ideal intensity is the ridge point of each published system") {
  CHECK(ideal_arithmetic_intensity({"quadro_rtx", 16.3e12, 624e9}) ==
        doctest::Approx(26.12).epsilon(0.005));
  CHECK(ideal_arithmetic_intensity(kV100) ==
        doctest::Approx(17.44).epsilon(0.005));
  CHECK(ideal_arithmetic_intensity({"tesla_p100", 9.3e12, 732e9}) ==
        doctest::Approx(12.70).epsilon(0.005));
  CHECK(ideal_arithmetic_intensity({"tesla_p4", 5.5e12, 192e9}) ==
        doctest::Approx(28.34).epsilon(0.02));
  CHECK(ideal_arithmetic_intensity({"tesla_m60", 4.8e12, 160e9}) ==
        doctest::Approx(30.12).epsilon(0.02));
}

TEST_CASE("classification splits strictly below the ideal intensity") {
  const SystemSpec flat{"flat", 2.0, 1.0};  // ideal intensity exactly 2
  const auto at_ridge = classify("s", 4.0, 1.0, 1.0, 10.0, flat);
  REQUIRE(at_ridge.has_value());
  CHECK(at_ridge->arithmetic_intensity == 2.0);
  CHECK(!at_ridge->memory_bound);  // on the ridge counts as compute-bound
  const auto below = classify("s", 3.8, 1.0, 1.0, 10.0, flat);
  REQUIRE(below.has_value());
  CHECK(below->memory_bound);

  CHECK(!classify("s", 5.0, 0.0, 0.0, 10.0, flat).has_value());
  CHECK(!classify("s", 5.0, 1.0, 1.0, 0.0, flat).has_value());
}

TEST_CASE("classification is monotone in flops") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> flops_dist(1.0, 1e12);
  for (int trial = 0; trial < 1000; ++trial) {
    const double reads = 1.0 + static_cast<double>(rng() % 1'000'000);
    const double writes = static_cast<double>(rng() % 1'000'000);
    const double latency = 1.0 + static_cast<double>(rng() % 1'000'000);
    double f1 = flops_dist(rng);
    double f2 = flops_dist(rng);
    if (f1 > f2) std::swap(f1, f2);
    const auto low = classify("s", f1, reads, writes, latency, kV100);
    const auto high = classify("s", f2, reads, writes, latency, kV100);
    REQUIRE(low.has_value());
    REQUIRE(high.has_value());
    // More flops can only push a subject toward compute-bound, never back.
    CHECK(low->arithmetic_intensity <= high->arithmetic_intensity);
    CHECK(low->arithmetic_throughput <= high->arithmetic_throughput);
    CHECK(static_cast<int>(high->memory_bound) <=
          static_cast<int>(low->memory_bound));
  }
}

TEST_CASE("a1 tabulates batched latency and throughput") {
  std::vector<AnalysisInput> groups;
  groups.push_back(input_of(256, {make_tree(275'050'000, {})}));
  groups.push_back(input_of(1, {make_tree(6'210'000, {})}));

  const ModelInfoTable table = a1_model_info(groups);
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0].batch_size == 1);  // ascending batch order
  CHECK(table.rows[1].batch_size == 256);
  CHECK(table.rows[1].batch_latency_ns == 275'050'000.0);
  // 256 inputs in 275.05 ms make 930.7 inputs/s.
  CHECK(table.rows[1].throughput == doctest::Approx(930.7).epsilon(0.001));
  CHECK(table.online_latency_ns == 6'210'000.0);
  CHECK(table.max_throughput == table.rows[1].throughput);

  const ThroughputCurve curve = throughput_curve(groups);
  REQUIRE(curve.points.size() == 2);
  CHECK(curve.points[0].batch_size == 1);
  CHECK(curve.points[1].throughput == table.rows[1].throughput);

  std::vector<AnalysisInput> no_online;
  no_online.push_back(input_of(8, {make_tree(1'000'000, {})}));
  CHECK(!a1_model_info(no_online).online_latency_ns.has_value());

  groups.push_back(input_of(256, {make_tree(275'050'000, {})}));
  CHECK_THROWS_AS(a1_model_info(groups), AnalysisError);
}

TEST_CASE("optimal batch stops at the first doubling under the threshold") {
  ThroughputCurve curve;
  curve.points = {{1, 100.0, 0}, {2, 150.0, 0}, {4, 157.0, 0}};
  CHECK(optimal_batch_size(curve, 0.05) == OptimalBatch{2, ""});

  curve.points = {{1, 100.0, 0}, {2, 200.0, 0}, {4, 400.0, 0}};
  CHECK(optimal_batch_size(curve, 0.05) == OptimalBatch{4, ""});

  // The threshold is inclusive: a doubling gaining exactly epsilon stops.
  curve.points = {{1, 100.0, 0}, {2, 150.0, 0}, {4, 400.0, 0}};
  CHECK(optimal_batch_size(curve, 0.5).batch_size == 1);

  curve.points = {{16, 500.0, 0}};
  const OptimalBatch single = optimal_batch_size(curve, 0.05);
  CHECK(single.batch_size == 16);
  CHECK(single.note == "single-point curve; no doubling step to evaluate");

  CHECK_THROWS_AS(optimal_batch_size(ThroughputCurve{}, 0.05), AnalysisError);
}

TEST_CASE("optimal batch is invariant under uniform throughput scaling") {
  std::mt19937_64 rng(23);
  const double scales[] = {0.25, 0.5, 2.0, 4.0, 16.0};
  for (int trial = 0; trial < 500; ++trial) {
    ThroughputCurve curve;
    std::uint32_t batch = 1;
    const std::size_t n = 2 + rng() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      curve.points.push_back(
          {batch, static_cast<double>(1 + rng() % 1000), 0.0});
      batch *= 2;
    }
    const OptimalBatch base = optimal_batch_size(curve, 0.05);
    for (double scale : scales) {
      ThroughputCurve scaled = curve;
      for (ThroughputPoint& point : scaled.points) point.throughput *= scale;
      CHECK(optimal_batch_size(scaled, 0.05) == base);
    }
  }
}

TEST_CASE("layer tables keep execution order and carry attributes") {
  const auto tree = make_tree(
      1000, {make_layer(0, 400, {}, "Conv2D", 64),
             make_layer(1, 250, {}, "Relu", 16),
             make_layer(2, 350, {}, "Conv2D", 32)});
  const AnalysisInput input = input_of(1, {tree});

  const LayerInfoTable a2 = a2_layer_table(input);
  REQUIRE(a2.rows.size() == 3);
  CHECK(a2.rows[0].name == "layer_0");
  CHECK(a2.rows[0].type == "Conv2D");
  CHECK(a2.rows[0].latency_ns == 400.0);
  CHECK(a2.rows[0].alloc_bytes == 64);
  CHECK(a2.rows[2].layer_index == 2);

  const LayerSeries a3_a4 = a3_a4_layer_series(input);
  CHECK(a3_a4.latency_ns == std::vector<double>{400.0, 250.0, 350.0});
  CHECK(a3_a4.alloc_bytes == std::vector<std::int64_t>{64, 16, 32});

  const LayerTypeTable a5 = a5_a6_a7_by_type(input);
  REQUIRE(a5.rows.size() == 2);  // descending total latency
  CHECK(a5.rows[0].type == "Conv2D");
  CHECK(a5.rows[0].count == 2);
  CHECK(a5.rows[0].total_latency_ns == 750.0);
  CHECK(a5.rows[0].total_alloc_bytes == 96);
  CHECK(a5.rows[1].type == "Relu");
}

TEST_CASE("repetitions combine by trimmed mean, counters from the first run") {
  std::vector<EntityTree> runs;
  for (std::uint64_t latency : {10, 20, 30, 40, 1000}) {
    runs.push_back(make_tree(
        2 * latency,
        {make_layer(0, latency,
                    {make_kernel(latency / 2, {100, 10, 10, 0.5})})}));
  }
  const AnalysisInput input = input_of(1, std::move(runs));
  const AnalysisOptions options{0.2, 0.05, 0.01};

  const LayerInfoTable a2 = a2_layer_table(input, options);
  REQUIRE(a2.rows.size() == 1);
  CHECK(a2.rows[0].latency_ns == 30.0);  // mean(20, 30, 40)

  const LayerAggregateTable a11 = a11_by_layer(input, kV100, options);
  REQUIRE(a11.rows.size() == 1);
  CHECK(a11.rows[0].layer_latency_ns == 30.0);
  CHECK(a11.rows[0].kernel_latency_ns == 15.0);
  CHECK(a11.rows[0].total_flops == 100);  // not five runs' worth

  CHECK_THROWS_AS(trimmed_mean({}, 0.2), AnalysisError);
}

TEST_CASE("mismatched repetition structure is rejected") {
  const AnalysisInput layers_differ = input_of(
      1, {make_tree(100, {make_layer(0, 50)}),
          make_tree(100, {make_layer(0, 50), make_layer(1, 30)})});
  CHECK_THROWS_AS(a2_layer_table(layers_differ), AnalysisError);

  const AnalysisInput kernels_differ = input_of(
      1, {make_tree(100, {make_layer(0, 50, {make_kernel(10, {})})}),
          make_tree(100, {make_layer(0, 50)})});
  CHECK_THROWS_AS(a11_by_layer(kernels_differ, kV100), AnalysisError);

  CHECK_THROWS_AS(a2_layer_table(input_of(1, {})), AnalysisError);
}

TEST_CASE("kernel tables aggregate by position and by name") {
  const KernelMetrics heavy{10'000, 100, 100, 0.6};  // intensity 50
  const KernelMetrics light{10, 1000, 1000, 0.2};    // intensity 0.005
  const auto tree = make_tree(
      1000, {make_layer(0, 400,
                        {make_kernel(100, heavy, "sgemm"),
                         make_kernel(50, light, "offset")}),
             make_layer(1, 300, {make_kernel(150, heavy, "sgemm")})});
  const AnalysisInput input = input_of(1, {tree});

  const KernelInfoTable a8 = a8_kernel_table(input, kV100);
  REQUIRE(a8.rows.size() == 3);
  CHECK(a8.rows[0].name == "sgemm");
  CHECK(a8.rows[0].layer_index == 0);
  CHECK(a8.rows[0].latency_ns == 100.0);
  CHECK(a8.rows[0].flops == 10'000);
  CHECK(a8.rows[1].name == "offset");
  CHECK(a8.rows[2].layer_index == 1);
  REQUIRE(a8.rows[0].arithmetic_intensity.has_value());
  CHECK(*a8.rows[0].arithmetic_intensity == 50.0);
  CHECK(a8.rows[0].memory_bound == false);
  CHECK(a8.rows[1].memory_bound == true);

  const RooflineReport a9 = a9_kernel_roofline(input, kV100);
  CHECK(a9.points.size() == 3);
  CHECK(a9.excluded.empty());

  const KernelNameTable a10 = a10_by_name(input, kV100);
  REQUIRE(a10.rows.size() == 2);  // grouped by name, descending latency
  CHECK(a10.rows[0].name == "sgemm");
  CHECK(a10.rows[0].count == 2);
  CHECK(a10.rows[0].total_latency_ns == 250.0);
  CHECK(a10.rows[0].total_flops == 20'000);
  CHECK(a10.model_latency_ns == 1000.0);
  CHECK(a10.rows[0].latency_percent == 250.0 / 1000.0 * 100.0);
  // Occupancy weights by latency: (0.6*100 + 0.6*150) / 250.
  CHECK(a10.rows[0].weighted_achieved_occupancy == doctest::Approx(0.6));
}

TEST_CASE("kernels without byte traffic are excluded from rooflines") {
  const auto tree = make_tree(
      1000, {make_layer(0, 400, {make_kernel(100, {500, 0, 0, 0.5}, "zcopy"),
                                 make_kernel(50, {10, 5, 5, 0.5}, "axpy")})});
  const RooflineReport a9 = a9_kernel_roofline(input_of(1, {tree}), kV100);
  CHECK(a9.points.size() == 1);
  REQUIRE(a9.excluded.size() == 1);
  CHECK(a9.excluded[0].find("zcopy") != std::string::npos);
}

TEST_CASE("layer aggregates reproduce the published layer row") {
  // ConvBackpropFilter at index 208: 7.59 ms wall, 7.45 ms on device.
  const auto tree = make_tree(
      7'590'000,
      {make_layer(0, 7'590'000,
                  {make_kernel(7'450'000,
                               {79'740'000'000,
                                static_cast<std::uint64_t>(362.67 * kMiB),
                                static_cast<std::uint64_t>(548.50 * kMiB),
                                0.1943},
                               "scudnn_128x128")})});
  const LayerAggregateTable a11 = a11_by_layer(input_of(1, {tree}), kV100);
  REQUIRE(a11.rows.size() == 1);
  const LayerAggregateRow& row = a11.rows[0];
  REQUIRE(row.arithmetic_intensity.has_value());
  CHECK(*row.arithmetic_intensity == doctest::Approx(83.46).epsilon(0.005));
  REQUIRE(row.arithmetic_throughput.has_value());
  CHECK(*row.arithmetic_throughput == doctest::Approx(10.70e12).epsilon(0.005));
  CHECK(row.memory_bound == false);

  const GpuNonGpuTable a13 = a13_gpu_vs_nongpu(input_of(1, {tree}));
  REQUIRE(a13.rows.size() == 1);
  CHECK(a13.rows[0].non_gpu_latency_ns ==
        doctest::Approx(0.14e6).epsilon(0.0001));
  CHECK(!a13.rows[0].flagged);
}

TEST_CASE("the gpu/non-gpu split flags kernels outliving their layer") {
  const auto tree = make_tree(
      10'000, {make_layer(0, 1'000, {make_kernel(5'000, {}, "runaway")}),
               make_layer(1, 1'000, {make_kernel(1'005, {}, "noisy")}),
               make_layer(2, 1'000, {make_kernel(400, {}, "tame")})});
  const GpuNonGpuTable a13 = a13_gpu_vs_nongpu(input_of(1, {tree}));
  REQUIRE(a13.rows.size() == 3);
  CHECK(a13.rows[0].non_gpu_latency_ns == -4'000.0);
  CHECK(a13.rows[0].flagged);  // way past the 1% noise tolerance
  CHECK(a13.rows[1].non_gpu_latency_ns == -5.0);
  CHECK(!a13.rows[1].flagged);  // within noise, kept but not flagged
  CHECK(a13.rows[2].non_gpu_latency_ns == 600.0);
  CHECK(a13.rows[2].gpu_share == 0.4);
  CHECK(a13.model_gpu_latency_ns == 6'405.0);
  CHECK(a13.model_latency_ns == 10'000.0);
  CHECK(a13.model_gpu_percent == 6'405.0 / 10'000.0 * 100.0);
}

TEST_CASE("aggregation identities hold on random trees") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LayerExec> layers;
    const std::size_t layer_count = 1 + rng() % 12;
    std::uint64_t model_ns = 10;
    for (std::size_t i = 0; i < layer_count; ++i) {
      std::vector<KernelExec> kernels;
      const std::size_t kernel_count = rng() % 5;
      for (std::size_t k = 0; k < kernel_count; ++k) {
        kernels.push_back(make_kernel(
            1 + rng() % 1000,
            {rng() % 100'000, rng() % 5'000, rng() % 5'000,
             static_cast<double>(rng() % 101) / 100.0},
            "k" + std::to_string(rng() % 4)));
      }
      const std::uint64_t latency = 1 + rng() % 5000;
      model_ns += latency;
      layers.push_back(make_layer(static_cast<std::uint32_t>(i), latency,
                                  std::move(kernels)));
    }
    const auto tree = make_tree(model_ns, std::move(layers));
    const AnalysisInput input = input_of(1, {tree});

    const LayerAggregateTable a11 = a11_by_layer(input, kV100);
    const LayerMetricsSeries a12 = a12_metrics_per_layer(input);
    const GpuNonGpuTable a13 = a13_gpu_vs_nongpu(input);
    const ModelAggregateTable a15 =
        a15_model_aggregate({input}, kV100);
    REQUIRE(a15.rows.size() == 1);

    std::uint64_t tree_kernels = 0;
    double gpu_total = 0.0;
    std::uint64_t flops_total = 0;
    for (std::size_t i = 0; i < tree.root.layers.size(); ++i) {
      const LayerExec& layer = tree.root.layers[i];
      double kernel_ns = 0.0;
      std::uint64_t flops = 0, reads = 0, writes = 0;
      double min_occ = 2.0, max_occ = -1.0;
      for (const KernelExec& kernel : layer.kernels) {
        kernel_ns += static_cast<double>(kernel.duration_ns());
        flops += kernel.metrics->flop_count_sp;
        reads += kernel.metrics->dram_read_bytes;
        writes += kernel.metrics->dram_write_bytes;
        min_occ = std::min(min_occ, kernel.metrics->achieved_occupancy);
        max_occ = std::max(max_occ, kernel.metrics->achieved_occupancy);
      }
      // Sum of children equals the parent row, per quantity.
      CHECK(a11.rows[i].kernel_latency_ns == kernel_ns);
      CHECK(a11.rows[i].total_flops == flops);
      CHECK(a11.rows[i].total_dram_read_bytes == reads);
      CHECK(a11.rows[i].total_dram_write_bytes == writes);
      CHECK(a11.rows[i].kernel_count == layer.kernels.size());
      CHECK(a12.total_flops[i] == flops);
      CHECK(a12.total_dram_read_bytes[i] == reads);
      CHECK(a12.total_dram_write_bytes[i] == writes);
      CHECK(a13.rows[i].gpu_latency_ns == kernel_ns);
      CHECK(a13.rows[i].non_gpu_latency_ns ==
            static_cast<double>(layer.duration_ns()) - kernel_ns);
      // The latency-weighted occupancy lies between its constituents
      // (up to rounding in the weighted sum).
      if (!layer.kernels.empty() && kernel_ns > 0.0) {
        CHECK(a11.rows[i].weighted_achieved_occupancy >= min_occ - 1e-12);
        CHECK(a11.rows[i].weighted_achieved_occupancy <= max_occ + 1e-12);
      }
      tree_kernels += layer.kernels.size();
      gpu_total += kernel_ns;
      flops_total += flops;
    }
    CHECK(tree.kernel_count() == tree_kernels);
    CHECK(a13.model_gpu_latency_ns == gpu_total);
    CHECK(a15.rows[0].kernel_latency_ns == gpu_total);
    CHECK(a15.rows[0].total_flops == flops_total);
    CHECK(a15.rows[0].kernel_count == tree_kernels);
  }
}

TEST_CASE("stage partition sizes follow the ceiling rule") {
  for (std::size_t n = 1; n <= 40; ++n) {
    std::vector<LayerExec> layers;
    for (std::size_t i = 0; i < n; ++i) {
      layers.push_back(make_layer(static_cast<std::uint32_t>(i), 10));
    }
    const StageAttribution stages =
        stage_attribution(input_of(1, {make_tree(10 * n, std::move(layers))}));
    const std::size_t beginning = (n + 2) / 3;
    const std::size_t middle = (n - beginning + 1) / 2;
    CHECK(stages.layer_count == n);
    CHECK(stages.beginning_size == beginning);
    CHECK(stages.middle_size == middle);
    CHECK(stages.end_size == n - beginning - middle);
    CHECK(stages.beginning_size + stages.middle_size + stages.end_size == n);
    CHECK(stages.degenerate == (n < 3));
  }
}

TEST_CASE("stage attribution picks the largest interval, earliest on ties") {
  const auto end_heavy = stage_attribution(input_of(
      1, {make_tree(120, {make_layer(0, 10), make_layer(1, 10),
                          make_layer(2, 100)})}));
  CHECK(end_heavy.latency_stage == Stage::End);

  const auto tied = stage_attribution(input_of(
      1, {make_tree(30, {make_layer(0, 10), make_layer(1, 10),
                         make_layer(2, 10)})}));
  CHECK(tied.latency_stage == Stage::Beginning);
  CHECK(tied.flops_stage == Stage::Beginning);  // all-zero sums tie too

  const auto mid_flops = stage_attribution(input_of(
      1, {make_tree(30, {make_layer(0, 10),
                         make_layer(1, 10, {make_kernel(5, {900, 1, 1, 0.5})}),
                         make_layer(2, 10)})}));
  CHECK(mid_flops.flops_stage == Stage::Middle);
  CHECK(mid_flops.latency_stage == Stage::Beginning);

  CHECK(stage_name(Stage::Beginning) == std::string{"B"});
  CHECK(stage_name(Stage::Middle) == std::string{"M"});
  CHECK(stage_name(Stage::End) == std::string{"E"});
}

TEST_CASE("percent identities match the published model tables") {
  // Convolution kernels against the whole prediction.
  CHECK(84.95 / 275.05 * 100.0 == doctest::Approx(30.87).epsilon(0.0017));
  // All device kernels against the whole prediction, exact to two decimals.
  CHECK(254.25 / 275.05 * 100.0 == doctest::Approx(92.43).epsilon(0.00011));
}

}  // namespace
}  // namespace strata
