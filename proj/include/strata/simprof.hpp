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

#ifndef STRATA_SIMPROF_HPP
#define STRATA_SIMPROF_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "strata/analysis.hpp"
#include "strata/leveled.hpp"
#include "strata/span.hpp"

namespace strata {

struct SimError : TraceError {
  using TraceError::TraceError;
};

// ---------------------------------------------------------------------------
// Synthetic workloads
//
// A deterministic stand-in for the framework and device profilers: a model
// description with known per-layer and per-kernel costs, replayed on a
// virtual timeline. Every emitted bundle is a pure function of
// (model, batch, levels, overhead, serialized, seed, run_index).

struct SyntheticKernel {
  std::string name;
  std::uint64_t true_latency_ns = 0;    ///< device execution time at batch 1
  std::uint64_t launch_latency_ns = 0;  ///< host-side enqueue time
  KernelMetrics metrics;                ///< counters at batch 1
};

struct SyntheticLayer {
  std::string name;
  std::string type;
  std::string shape;  ///< opaque display tag
  std::uint64_t true_latency_ns = 0;  ///< host wall time at batch 1
  std::int64_t alloc_bytes = 0;       ///< framework allocation at batch 1
  /// Consecutive layers sharing a nonzero group id run concurrently
  /// (overlapping spans) unless the run is serialized.
  std::uint32_t concurrent_group = 0;
  std::vector<SyntheticKernel> kernels;
};

struct SyntheticModel {
  std::string name;
  std::vector<SyntheticLayer> layers;
  /// Batch scaling: value(b) = round(value(1) · b^exponent).
  double latency_batch_exponent = 0.9;
  double flops_batch_exponent = 1.0;
  double bytes_batch_exponent = 1.0;
};

/// round(value · batch^exponent) — the one scaling rule used everywhere.
std::uint64_t scaled_quantity(std::uint64_t value, std::uint32_t batch_size,
                              double exponent);

/// Per-level profiling cost injected into the host timeline. Device
/// execution spans always report true kernel time; the overhead shows up as
/// the enclosing spans stretching.
struct OverheadProfile {
  std::uint64_t layer_overhead_ns = 0;   ///< per layer span when L enabled
  std::uint64_t kernel_overhead_ns = 0;  ///< per kernel when G enabled
  /// Metric-capture slowdown: each profiled kernel additionally costs
  /// (multiplier − 1) · its scaled execution time. Must be ≥ 1.
  double metric_overhead_multiplier = 1.0;
};

/// Uniform noise for robustness tests; zero keeps the timeline exact.
struct JitterProfile {
  std::uint64_t max_jitter_ns = 0;  ///< each span stretches by U[0, max]
  std::uint64_t seed = 0;
};

/// Default system the simulator reports: V100-class numbers.
SystemSpec default_system();

// ---------------------------------------------------------------------------
// Emission

/// Replays the model once and returns the validated bundle the profilers at
/// `levels` would capture (the model level is always captured). Layer spans
/// appear iff the layer level is enabled, inflated by the injected
/// overheads; kernel launch/execution pairs with correlation ids appear iff
/// the kernel level is enabled. With serialized=false, concurrent layer
/// groups emit overlapping spans; serialized=true runs everything
/// sequentially. Output is bit-deterministic.
TraceBundle emit_run(const SyntheticModel& model, std::uint32_t batch_size,
                     const LevelSet& levels, const OverheadProfile& overhead,
                     bool serialized = false, std::uint32_t run_index = 0,
                     const JitterProfile& jitter = {},
                     const SystemSpec& system = default_system());

/// The full leveled chain {M} ⊂ {M,L} ⊂ {M,L,G} for one workload.
std::vector<TraceBundle> emit_leveled_chain(
    const SyntheticModel& model, std::uint32_t batch_size,
    const OverheadProfile& overhead, bool serialized = false,
    const SystemSpec& system = default_system());

// ---------------------------------------------------------------------------
// Ground truth
//
// Expected analysis outputs computed by direct summation and classification
// over the model description. This path never builds spans, interval trees,
// or entity trees — it is the independent oracle the span pipeline is
// checked against. Expectations describe a single full-level ({M,L,G})
// capture per batch with the given overheads injected.

struct BatchExpectation {
  std::uint32_t batch_size = 1;
  LayerInfoTable a2;
  LayerSeries a3_a4;
  LayerTypeTable a5_a6_a7;
  KernelInfoTable a8;
  RooflineReport a9;
  KernelNameTable a10;
  LayerAggregateTable a11;
  LayerMetricsSeries a12;
  GpuNonGpuTable a13;
  RooflineReport a14;
  StageAttribution stages;
};

struct GroundTruth {
  ModelInfoTable a1;
  ThroughputCurve curve;
  OptimalBatch optimal_batch;
  std::vector<BatchExpectation> per_batch;  ///< ascending batch size
  ModelAggregateTable a15;
  RooflineReport model_roofline;
};

GroundTruth ground_truth(const SyntheticModel& model,
                         const std::vector<std::uint32_t>& batch_sizes,
                         const SystemSpec& spec,
                         const OverheadProfile& overhead = {},
                         const AnalysisOptions& options = {});

/// Expected overhead report for the {M} ⊂ {M,L} ⊂ {M,L,G} chain at one
/// batch size: exactly the injected values.
OverheadReport ground_truth_overhead(const SyntheticModel& model,
                                     std::uint32_t batch_size,
                                     const OverheadProfile& overhead,
                                     const AnalysisOptions& options = {});

// ---------------------------------------------------------------------------
// Fixture library

namespace fixtures {

/// One layer, one kernel — the smallest end-to-end workload.
SyntheticModel minimal();
/// Deep residual-style stack: 234 layers of Conv2D/Mul/Add/Relu blocks,
/// convolution-heavy and compute-bound.
SyntheticModel resnet_like();
/// Shallow depthwise-style stack with low intensity: memory-bound.
SyntheticModel mobilenet_like();
/// Two concurrent branches whose kernels cannot be attributed without a
/// serialized rerun.
SyntheticModel overlap();
/// A kernel whose execution outlives its layer span.
SyntheticModel async_straggler();
/// Ten equal stages tuned so the leveled chain recovers round overhead
/// numbers; pair with default_overhead().
SyntheticModel overhead_chain();
/// The injection profile the overhead_chain fixture is tuned for.
OverheadProfile default_overhead();

}  // namespace fixtures

std::vector<std::string> fixture_names();
SyntheticModel fixture_by_name(const std::string& name);

// JSON round-trip for model descriptions (the `simulate` command's input).
std::string encode_model(const SyntheticModel& model);
SyntheticModel parse_model(const std::string& json_text);
SyntheticModel load_model(const std::string& path);

}  // namespace strata

#endif  // STRATA_SIMPROF_HPP
