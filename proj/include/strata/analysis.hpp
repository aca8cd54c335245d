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

#ifndef STRATA_ANALYSIS_HPP
#define STRATA_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strata/correlator.hpp"
#include "strata/span.hpp"

namespace strata {

struct AnalysisError : TraceError {
  using TraceError::TraceError;
};

// ---------------------------------------------------------------------------
// Inputs
//
// One AnalysisInput is a workload evaluated at one batch size: one or more
// repeated runs of identical structure. Across repetitions, latencies and
// occupancies are combined by trimmed mean; hardware counters (flops, bytes)
// are deterministic counts and are taken from the first run.

struct AnalysisInput {
  std::uint32_t batch_size = 1;
  std::vector<EntityTree> runs;
};

struct AnalysisOptions {
  double trim_fraction = 0.2;   ///< trimmed-mean fraction across repetitions
  double epsilon = 0.05;        ///< optimal-batch doubling threshold
  double noise_tolerance = 0.01;  ///< fraction of latency treated as jitter
};

// ---------------------------------------------------------------------------
// Scalar primitives

/// Mean after removing floor(trim_fraction*n) smallest and largest values.
/// Throws AnalysisError on empty input or trim_fraction outside [0, 0.5).
double trimmed_mean(std::vector<double> values, double trim_fraction);

/// flops per byte moved; nullopt when no bytes moved (undefined, not inf).
std::optional<double> arithmetic_intensity(double flops, double read_bytes,
                                           double write_bytes);

/// flops per second. Throws AnalysisError on non-positive latency.
double arithmetic_throughput(double flops, double latency_ns);

/// The roofline ridge point: peak flops over memory bandwidth.
double ideal_arithmetic_intensity(const SystemSpec& spec);

struct RooflinePoint {
  std::string subject;
  double arithmetic_intensity = 0.0;
  double arithmetic_throughput = 0.0;
  /// Strictly below the system's ideal intensity.
  bool memory_bound = false;

  bool operator==(const RooflinePoint&) const = default;
};

/// Classifies one subject against the system roofline. Returns nullopt when
/// the intensity is undefined (zero bytes) or the latency is zero; such
/// subjects are excluded from roofline reports with a note.
std::optional<RooflinePoint> classify(std::string subject, double flops,
                                      double read_bytes, double write_bytes,
                                      double latency_ns,
                                      const SystemSpec& spec);

struct AggregateMetrics {
  std::uint64_t total_latency_ns = 0;
  std::uint64_t total_flops = 0;
  std::uint64_t total_dram_read_bytes = 0;
  std::uint64_t total_dram_write_bytes = 0;
  /// Σ(occupancy_i · latency_i) / Σ(latency_i); 0 when no latency.
  double weighted_achieved_occupancy = 0.0;
  std::uint64_t count = 0;

  bool operator==(const AggregateMetrics&) const = default;
};

// ---------------------------------------------------------------------------
// A1: model information + throughput curve + optimal batch size

struct ModelInfoRow {
  std::uint32_t batch_size = 0;
  double batch_latency_ns = 0.0;
  double throughput = 0.0;  ///< inputs per second = batch_size / latency

  bool operator==(const ModelInfoRow&) const = default;
};

struct ModelInfoTable {
  std::vector<ModelInfoRow> rows;  ///< ascending batch size
  std::optional<double> online_latency_ns;  ///< batch-1 latency, if sampled
  double max_throughput = 0.0;

  bool operator==(const ModelInfoTable&) const = default;
};

struct ThroughputPoint {
  std::uint32_t batch_size = 0;
  double throughput = 0.0;
  double batch_latency_ns = 0.0;

  bool operator==(const ThroughputPoint&) const = default;
};

struct ThroughputCurve {
  std::vector<ThroughputPoint> points;  ///< ascending batch size

  bool operator==(const ThroughputCurve&) const = default;
};

struct OptimalBatch {
  std::uint32_t batch_size = 0;
  std::string note;  ///< non-empty when the curve was too short to decide

  bool operator==(const OptimalBatch&) const = default;
};

ModelInfoTable a1_model_info(const std::vector<AnalysisInput>& groups,
                             const AnalysisOptions& options = {});

ThroughputCurve throughput_curve(const std::vector<AnalysisInput>& groups,
                                 const AnalysisOptions& options = {});

/// Walks the doubling chain in ascending order and stops at the first batch
/// whose doubling gains no more than epsilon; returns the last sampled batch
/// when every step beats the threshold.
OptimalBatch optimal_batch_size(const ThroughputCurve& curve,
                                double epsilon = 0.05);

// ---------------------------------------------------------------------------
// A2-A7: layer-level analyses

struct LayerInfoRow {
  std::uint32_t layer_index = 0;
  std::string name;
  std::string type;
  std::string shape;  ///< opaque "shape" tag, carried through untouched
  double latency_ns = 0.0;
  std::int64_t alloc_bytes = 0;

  bool operator==(const LayerInfoRow&) const = default;
};

struct LayerInfoTable {
  std::vector<LayerInfoRow> rows;  ///< execution order

  bool operator==(const LayerInfoTable&) const = default;
};

struct LayerSeries {
  std::vector<double> latency_ns;       ///< indexed by layer_index
  std::vector<std::int64_t> alloc_bytes;

  bool operator==(const LayerSeries&) const = default;
};

struct LayerTypeRow {
  std::string type;
  std::uint64_t count = 0;
  double total_latency_ns = 0.0;
  std::int64_t total_alloc_bytes = 0;

  bool operator==(const LayerTypeRow&) const = default;
};

struct LayerTypeTable {
  std::vector<LayerTypeRow> rows;  ///< descending total latency

  bool operator==(const LayerTypeTable&) const = default;
};

LayerInfoTable a2_layer_table(const AnalysisInput& input,
                              const AnalysisOptions& options = {});
LayerSeries a3_a4_layer_series(const AnalysisInput& input,
                               const AnalysisOptions& options = {});
LayerTypeTable a5_a6_a7_by_type(const AnalysisInput& input,
                                const AnalysisOptions& options = {});

// ---------------------------------------------------------------------------
// A8-A10: kernel-level analyses

struct KernelInfoRow {
  std::string name;
  std::uint32_t layer_index = 0;
  double latency_ns = 0.0;
  std::uint64_t flops = 0;
  std::uint64_t dram_read_bytes = 0;
  std::uint64_t dram_write_bytes = 0;
  double achieved_occupancy = 0.0;  ///< fraction of peak, [0, 1]
  std::optional<double> arithmetic_intensity;
  std::optional<double> arithmetic_throughput;
  std::optional<bool> memory_bound;

  bool operator==(const KernelInfoRow&) const = default;
};

struct KernelInfoTable {
  std::vector<KernelInfoRow> rows;  ///< tree order: layer, then launch order

  bool operator==(const KernelInfoTable&) const = default;
};

struct RooflineReport {
  std::vector<RooflinePoint> points;
  /// Subjects with undefined intensity, excluded rather than misclassified.
  std::vector<std::string> excluded;

  bool operator==(const RooflineReport&) const = default;
};

struct KernelNameRow {
  std::string name;
  std::uint64_t count = 0;
  double total_latency_ns = 0.0;
  double latency_percent = 0.0;  ///< of the model prediction latency
  std::uint64_t total_flops = 0;
  std::uint64_t total_dram_read_bytes = 0;
  std::uint64_t total_dram_write_bytes = 0;
  double weighted_achieved_occupancy = 0.0;
  std::optional<double> arithmetic_intensity;
  std::optional<double> arithmetic_throughput;
  std::optional<bool> memory_bound;

  bool operator==(const KernelNameRow&) const = default;
};

struct KernelNameTable {
  std::vector<KernelNameRow> rows;  ///< descending total latency
  double model_latency_ns = 0.0;    ///< the percentage denominator

  bool operator==(const KernelNameTable&) const = default;
};

KernelInfoTable a8_kernel_table(const AnalysisInput& input,
                                const SystemSpec& spec,
                                const AnalysisOptions& options = {});
RooflineReport a9_kernel_roofline(const AnalysisInput& input,
                                  const SystemSpec& spec,
                                  const AnalysisOptions& options = {});
KernelNameTable a10_by_name(const AnalysisInput& input, const SystemSpec& spec,
                            const AnalysisOptions& options = {});

// ---------------------------------------------------------------------------
// A11-A14: correlated layer/kernel analyses

struct LayerAggregateRow {
  std::uint32_t layer_index = 0;
  std::string name;
  std::string type;
  double layer_latency_ns = 0.0;
  double kernel_latency_ns = 0.0;  ///< Σ over the layer's kernels
  std::uint64_t total_flops = 0;
  std::uint64_t total_dram_read_bytes = 0;
  std::uint64_t total_dram_write_bytes = 0;
  double weighted_achieved_occupancy = 0.0;
  std::uint64_t kernel_count = 0;
  std::optional<double> arithmetic_intensity;
  std::optional<double> arithmetic_throughput;  ///< over kernel latency
  std::optional<bool> memory_bound;

  bool operator==(const LayerAggregateRow&) const = default;
};

struct LayerAggregateTable {
  std::vector<LayerAggregateRow> rows;  ///< execution order

  bool operator==(const LayerAggregateTable&) const = default;
};

struct LayerMetricsSeries {
  std::vector<std::uint64_t> total_flops;            ///< by layer_index
  std::vector<std::uint64_t> total_dram_read_bytes;
  std::vector<std::uint64_t> total_dram_write_bytes;

  bool operator==(const LayerMetricsSeries&) const = default;
};

struct GpuNonGpuRow {
  std::uint32_t layer_index = 0;
  double gpu_latency_ns = 0.0;      ///< Σ kernel latency within the layer
  double non_gpu_latency_ns = 0.0;  ///< layer latency − gpu latency
  double gpu_share = 0.0;           ///< of the layer latency
  double non_gpu_share = 0.0;
  /// Negative non-GPU latency beyond the noise tolerance: an asynchronous
  /// kernel outlived its layer.
  bool flagged = false;

  bool operator==(const GpuNonGpuRow&) const = default;
};

struct GpuNonGpuTable {
  std::vector<GpuNonGpuRow> rows;  ///< execution order
  double model_latency_ns = 0.0;
  double model_gpu_latency_ns = 0.0;  ///< Σ over every kernel
  double model_gpu_percent = 0.0;

  bool operator==(const GpuNonGpuTable&) const = default;
};

LayerAggregateTable a11_by_layer(const AnalysisInput& input,
                                 const SystemSpec& spec,
                                 const AnalysisOptions& options = {});
LayerMetricsSeries a12_metrics_per_layer(const AnalysisInput& input,
                                         const AnalysisOptions& options = {});
GpuNonGpuTable a13_gpu_vs_nongpu(const AnalysisInput& input,
                                 const AnalysisOptions& options = {});
RooflineReport a14_layer_roofline(const AnalysisInput& input,
                                  const SystemSpec& spec,
                                  const AnalysisOptions& options = {});

// ---------------------------------------------------------------------------
// A15 + model-level roofline across batch sizes

struct ModelAggregateRow {
  std::uint32_t batch_size = 0;
  double model_latency_ns = 0.0;
  double kernel_latency_ns = 0.0;
  std::uint64_t total_flops = 0;
  std::uint64_t total_dram_read_bytes = 0;
  std::uint64_t total_dram_write_bytes = 0;
  double weighted_achieved_occupancy = 0.0;
  std::uint64_t kernel_count = 0;
  std::optional<double> arithmetic_intensity;
  std::optional<double> arithmetic_throughput;  ///< over kernel latency
  std::optional<bool> memory_bound;

  bool operator==(const ModelAggregateRow&) const = default;
};

struct ModelAggregateTable {
  std::vector<ModelAggregateRow> rows;  ///< ascending batch size

  bool operator==(const ModelAggregateTable&) const = default;
};

ModelAggregateTable a15_model_aggregate(const std::vector<AnalysisInput>& groups,
                                        const SystemSpec& spec,
                                        const AnalysisOptions& options = {});

/// Roofline classification of the whole-model aggregates, one point per
/// batch size.
RooflineReport model_roofline(const std::vector<AnalysisInput>& groups,
                              const SystemSpec& spec,
                              const AnalysisOptions& options = {});

// ---------------------------------------------------------------------------
// Stage attribution

enum class Stage : std::uint8_t { Beginning, Middle, End };
const char* stage_name(Stage stage);  ///< "B", "M", "E"

/// Layers split by execution order into three contiguous intervals of sizes
/// ceil(n/3), ceil((n-ceil(n/3))/2), remainder; per quantity the dominant
/// stage is the interval with the largest sum (earliest stage wins ties).
struct StageAttribution {
  std::size_t layer_count = 0;
  std::size_t beginning_size = 0;
  std::size_t middle_size = 0;
  std::size_t end_size = 0;
  Stage latency_stage = Stage::Beginning;
  Stage alloc_memory_stage = Stage::Beginning;
  Stage flops_stage = Stage::Beginning;
  Stage memory_access_stage = Stage::Beginning;  ///< reads + writes
  bool degenerate = false;  ///< fewer than 3 layers

  bool operator==(const StageAttribution&) const = default;
};

StageAttribution stage_attribution(const AnalysisInput& input,
                                   const AnalysisOptions& options = {});

}  // namespace strata

#endif  // STRATA_ANALYSIS_HPP
