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

#include "strata/simprof.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

#include "json.hpp"

#include "strata/collector.hpp"
#include "strata/tracer.hpp"

namespace strata {

using nlohmann::json;

std::uint64_t scaled_quantity(std::uint64_t value, std::uint32_t batch_size,
                              double exponent) {
  if (batch_size == 1) return value;  // pow is exact here, but be explicit
  double scaled = static_cast<double>(value) *
                  std::pow(static_cast<double>(batch_size), exponent);
  return static_cast<std::uint64_t>(std::llround(scaled));
}

SystemSpec default_system() {
  return SystemSpec{"tesla-v100-sxm2", 15.7e12, 900e9};
}

// ---------------------------------------------------------------------------
// Model validation and shared scaling

namespace {

constexpr std::uint64_t kEpochNs = 1000;  ///< timeline origin

void validate_model(const SyntheticModel& model) {
  if (model.name.empty()) throw SimError("model name is empty");
  if (model.layers.empty()) throw SimError("model has no layers");
  for (const SyntheticLayer& layer : model.layers) {
    if (layer.name.empty()) throw SimError("layer with empty name");
    if (layer.true_latency_ns == 0) {
      throw SimError("layer '" + layer.name + "' has zero latency");
    }
    if (layer.alloc_bytes < 0) {
      throw SimError("layer '" + layer.name + "' has negative alloc");
    }
    for (const SyntheticKernel& kernel : layer.kernels) {
      if (kernel.name.empty()) throw SimError("kernel with empty name");
      if (kernel.true_latency_ns == 0) {
        throw SimError("kernel '" + kernel.name + "' has zero latency");
      }
      if (kernel.metrics.achieved_occupancy < 0.0 ||
          kernel.metrics.achieved_occupancy > 1.0) {
        throw SimError("kernel '" + kernel.name + "' occupancy outside [0,1]");
      }
    }
  }
}

void validate_overhead(const OverheadProfile& overhead) {
  if (overhead.metric_overhead_multiplier < 1.0) {
    throw SimError("metric overhead multiplier must be >= 1");
  }
}

KernelMetrics scaled_metrics(const SyntheticKernel& kernel,
                             const SyntheticModel& model,
                             std::uint32_t batch) {
  KernelMetrics m;
  m.flop_count_sp = scaled_quantity(kernel.metrics.flop_count_sp, batch,
                                    model.flops_batch_exponent);
  m.dram_read_bytes = scaled_quantity(kernel.metrics.dram_read_bytes, batch,
                                      model.bytes_batch_exponent);
  m.dram_write_bytes = scaled_quantity(kernel.metrics.dram_write_bytes, batch,
                                       model.bytes_batch_exponent);
  m.achieved_occupancy = kernel.metrics.achieved_occupancy;
  return m;
}

std::uint64_t scaled_exec_ns(const SyntheticKernel& kernel,
                             const SyntheticModel& model, std::uint32_t batch) {
  return scaled_quantity(kernel.true_latency_ns, batch,
                         model.latency_batch_exponent);
}

std::uint64_t scaled_layer_ns(const SyntheticLayer& layer,
                              const SyntheticModel& model,
                              std::uint32_t batch) {
  return scaled_quantity(layer.true_latency_ns, batch,
                         model.latency_batch_exponent);
}

std::int64_t scaled_alloc(const SyntheticLayer& layer,
                          const SyntheticModel& model, std::uint32_t batch) {
  return static_cast<std::int64_t>(
      scaled_quantity(static_cast<std::uint64_t>(layer.alloc_bytes), batch,
                      model.bytes_batch_exponent));
}

/// Host-timeline cost of profiling one kernel: fixed cost plus the
/// metric-capture slowdown proportional to the kernel's execution time.
std::uint64_t kernel_profiling_overhead(std::uint64_t exec_ns,
                                        const OverheadProfile& overhead) {
  double extra = (overhead.metric_overhead_multiplier - 1.0) *
                 static_cast<double>(exec_ns);
  return overhead.kernel_overhead_ns +
         static_cast<std::uint64_t>(std::llround(extra));
}

/// Wall duration of one layer as captured at `levels`.
std::uint64_t layer_body_ns(const SyntheticLayer& layer,
                            const SyntheticModel& model, std::uint32_t batch,
                            const LevelSet& levels,
                            const OverheadProfile& overhead) {
  std::uint64_t body = scaled_layer_ns(layer, model, batch);
  if (levels.contains(Level::Layer)) body += overhead.layer_overhead_ns;
  if (levels.contains(Level::Kernel)) {
    for (const SyntheticKernel& kernel : layer.kernels) {
      body += kernel_profiling_overhead(scaled_exec_ns(kernel, model, batch),
                                        overhead);
    }
  }
  return body;
}

/// Consecutive layer index ranges executing together: singletons, or runs of
/// equal nonzero concurrent_group ids when the run is not serialized.
std::vector<std::pair<std::size_t, std::size_t>> group_ranges(
    const SyntheticModel& model, bool serialized) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t i = 0;
  while (i < model.layers.size()) {
    std::size_t j = i + 1;
    if (!serialized && model.layers[i].concurrent_group != 0) {
      while (j < model.layers.size() &&
             model.layers[j].concurrent_group ==
                 model.layers[i].concurrent_group) {
        ++j;
      }
    }
    ranges.emplace_back(i, j);
    i = j;
  }
  return ranges;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

// ---------------------------------------------------------------------------
// Timeline plan
//
// Pass 1 computes every interval; pass 2 records them through the tracer.
// Recording with explicit timestamps mirrors how real device profilers
// backfill completed events from their buffers, and sidesteps the monotonic
// host clock for overlapping structures.

struct KernelPlan {
  const SyntheticKernel* src = nullptr;
  std::uint64_t launch_begin = 0, launch_end = 0;
  std::uint64_t exec_begin = 0, exec_end = 0;
  std::uint64_t correlation_id = 0;
  KernelMetrics metrics;
};

struct LayerPlan {
  const SyntheticLayer* src = nullptr;
  std::uint64_t begin = 0, end = 0;
  std::int64_t alloc_bytes = 0;
  std::vector<KernelPlan> kernels;
};

struct RunPlan {
  std::uint64_t model_begin = 0, model_end = 0;
  std::vector<LayerPlan> layers;
};

RunPlan build_plan(const SyntheticModel& model, std::uint32_t batch,
                   const LevelSet& levels, const OverheadProfile& overhead,
                   bool serialized, const JitterProfile& jitter) {
  std::mt19937_64 rng(jitter.seed);
  auto draw = [&]() -> std::uint64_t {
    if (jitter.max_jitter_ns == 0) return 0;
    return rng() % (jitter.max_jitter_ns + 1);
  };

  RunPlan plan;
  plan.layers.resize(model.layers.size());
  plan.model_begin = kEpochNs;

  // Jitter draws in a fixed order so a seed fully determines the timeline.
  std::vector<std::uint64_t> body_jitter(model.layers.size());
  std::vector<std::vector<std::uint64_t>> exec_jitter(model.layers.size());
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    body_jitter[li] = draw();
    exec_jitter[li].resize(model.layers[li].kernels.size());
    for (auto& j : exec_jitter[li]) j = draw();
  }

  std::uint64_t cursor = kEpochNs;
  std::uint64_t device = kEpochNs;
  std::uint64_t next_cid = 1;
  bool kernels_on = levels.contains(Level::Kernel);

  for (auto [first, last] : group_ranges(model, serialized)) {
    std::uint64_t group_begin = cursor;
    std::uint64_t group_end = group_begin;
    for (std::size_t li = first; li < last; ++li) {
      const SyntheticLayer& layer = model.layers[li];
      LayerPlan& lp = plan.layers[li];
      lp.src = &layer;
      std::uint64_t body =
          layer_body_ns(layer, model, batch, levels, overhead) + body_jitter[li];
      lp.begin = group_begin;
      lp.end = group_begin + body;
      lp.alloc_bytes = scaled_alloc(layer, model, batch);
      group_end = std::max(group_end, lp.end);

      if (!kernels_on) continue;
      std::uint64_t launch_cursor = group_begin;
      for (std::size_t ki = 0; ki < layer.kernels.size(); ++ki) {
        const SyntheticKernel& kernel = layer.kernels[ki];
        std::uint64_t exec_ns = scaled_exec_ns(kernel, model, batch);
        KernelPlan kp;
        kp.src = &kernel;
        kp.launch_begin = launch_cursor;
        kp.launch_end = launch_cursor + kernel.launch_latency_ns +
                        kernel_profiling_overhead(exec_ns, overhead);
        launch_cursor = kp.launch_end;
        kp.exec_begin = std::max(device, kp.launch_end);
        kp.exec_end = kp.exec_begin + exec_ns + exec_jitter[li][ki];
        device = kp.exec_end;
        kp.correlation_id = next_cid++;
        kp.metrics = scaled_metrics(kernel, model, batch);
        lp.kernels.push_back(kp);
      }
      if (launch_cursor > lp.end) {
        throw SimError("layer '" + layer.name +
                       "': kernel launches overflow the layer interval");
      }
    }
    cursor = group_end;
  }
  plan.model_end = cursor;
  return plan;
}

}  // namespace

// ---------------------------------------------------------------------------
// Emission

TraceBundle emit_run(const SyntheticModel& model, std::uint32_t batch_size,
                     const LevelSet& levels, const OverheadProfile& overhead,
                     bool serialized, std::uint32_t run_index,
                     const JitterProfile& jitter, const SystemSpec& system) {
  validate_model(model);
  validate_overhead(overhead);
  if (batch_size == 0) throw SimError("batch size must be positive");

  LevelSet enabled = levels;
  enabled.insert(Level::Model);  // the run itself is always observed

  RunMeta meta;
  meta.trace_id = fnv1a(model.name + '|' + std::to_string(batch_size) + '|' +
                        level_set_label(enabled) + '|' +
                        (serialized ? "s" : "c") + '|' +
                        std::to_string(run_index));
  meta.profiling_levels = enabled;
  meta.batch_size = batch_size;
  meta.run_index = run_index;
  meta.system = system;
  meta.serialized = serialized;

  RunPlan plan =
      build_plan(model, batch_size, enabled, overhead, serialized, jitter);

  MemorySink sink;
  TracerConfig config;
  config.trace_id = meta.trace_id;
  config.enabled_levels = enabled;
  config.clock = std::make_shared<VirtualClock>(kEpochNs);
  Tracer tracer(config, sink);

  std::uint64_t model_id =
      tracer.record_span(model.name, Level::Model, SpanKind::Sync,
                         plan.model_begin, plan.model_end);
  for (const LayerPlan& lp : plan.layers) {
    TagMap layer_tags;
    layer_tags.emplace(kTagLayerType, lp.src->type);
    layer_tags.emplace(kTagAllocBytes, lp.alloc_bytes);
    if (!lp.src->shape.empty()) layer_tags.emplace(kTagShape, lp.src->shape);
    tracer.record_span(lp.src->name, Level::Layer, SpanKind::Sync, lp.begin,
                       lp.end, model_id, std::nullopt, std::move(layer_tags));
    for (const KernelPlan& kp : lp.kernels) {
      // The device profiler does not know framework scopes: no parent id.
      tracer.record_span(kp.src->name, Level::Kernel, SpanKind::Launch,
                         kp.launch_begin, kp.launch_end, std::nullopt,
                         kp.correlation_id);
      TagMap exec_tags;
      metrics_to_tags(kp.metrics, exec_tags);
      tracer.record_span(kp.src->name, Level::Kernel, SpanKind::Exec,
                         kp.exec_begin, kp.exec_end, std::nullopt,
                         kp.correlation_id, std::move(exec_tags));
    }
  }
  tracer.flush();

  TraceBundle bundle;
  bundle.meta = meta;
  bundle.spans = sink.take();
  sort_timeline(bundle.spans);
  ValidationReport violations = validate_bundle(bundle);
  if (!violations.empty()) {
    throw SimError("emitted bundle fails validation: " + violations.front().rule);
  }
  return bundle;
}

std::vector<TraceBundle> emit_leveled_chain(const SyntheticModel& model,
                                            std::uint32_t batch_size,
                                            const OverheadProfile& overhead,
                                            bool serialized,
                                            const SystemSpec& system) {
  std::vector<TraceBundle> bundles;
  bundles.push_back(emit_run(model, batch_size, LevelSet{Level::Model},
                             overhead, serialized, 0, {}, system));
  bundles.push_back(emit_run(model, batch_size,
                             LevelSet{Level::Model, Level::Layer}, overhead,
                             serialized, 0, {}, system));
  bundles.push_back(
      emit_run(model, batch_size,
               LevelSet{Level::Model, Level::Layer, Level::Kernel}, overhead,
               serialized, 0, {}, system));
  return bundles;
}

// ---------------------------------------------------------------------------
// Ground truth
//
// Direct arithmetic over the model description. Iteration is always in
// definition order, which by construction equals the execution order the
// pipeline observes, so floating-point accumulation sequences coincide.

namespace {

struct GtKernel {
  const SyntheticKernel* src = nullptr;
  std::uint64_t exec_ns = 0;
  KernelMetrics metrics;
};

struct GtLayer {
  const SyntheticLayer* src = nullptr;
  std::uint32_t index = 0;
  std::uint64_t latency_ns = 0;  ///< body under full {M,L,G} capture
  std::int64_t alloc_bytes = 0;
  std::vector<GtKernel> kernels;
};

struct GtRun {
  std::uint64_t model_latency_ns = 0;
  std::vector<GtLayer> layers;
};

GtRun gt_run(const SyntheticModel& model, std::uint32_t batch,
             const OverheadProfile& overhead) {
  LevelSet full{Level::Model, Level::Layer, Level::Kernel};
  GtRun run;
  run.layers.resize(model.layers.size());
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const SyntheticLayer& layer = model.layers[li];
    GtLayer& gl = run.layers[li];
    gl.src = &layer;
    gl.index = static_cast<std::uint32_t>(li);
    gl.latency_ns = layer_body_ns(layer, model, batch, full, overhead);
    gl.alloc_bytes = scaled_alloc(layer, model, batch);
    for (const SyntheticKernel& kernel : layer.kernels) {
      GtKernel gk;
      gk.src = &kernel;
      gk.exec_ns = scaled_exec_ns(kernel, model, batch);
      gk.metrics = scaled_metrics(kernel, model, batch);
      gl.kernels.push_back(gk);
    }
  }
  for (auto [first, last] : group_ranges(model, /*serialized=*/false)) {
    std::uint64_t widest = 0;
    for (std::size_t li = first; li < last; ++li) {
      widest = std::max(widest, run.layers[li].latency_ns);
    }
    run.model_latency_ns += widest;
  }
  return run;
}

/// Mirrors the analysis accumulator: same members, same operation order.
struct GtAccumulator {
  double latency_ns = 0.0;
  std::uint64_t flops = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  double occupancy_weight = 0.0;
  std::uint64_t count = 0;

  void add(const GtKernel& kernel) {
    double lat = static_cast<double>(kernel.exec_ns);
    latency_ns += lat;
    flops += kernel.metrics.flop_count_sp;
    read_bytes += kernel.metrics.dram_read_bytes;
    write_bytes += kernel.metrics.dram_write_bytes;
    occupancy_weight += kernel.metrics.achieved_occupancy * lat;
    ++count;
  }

  double weighted_occupancy() const {
    return latency_ns > 0.0 ? occupancy_weight / latency_ns : 0.0;
  }

  void roofline(std::optional<double>& intensity,
                std::optional<double>& throughput, std::optional<bool>& bound,
                const SystemSpec& spec) const {
    intensity = arithmetic_intensity(static_cast<double>(flops),
                                     static_cast<double>(read_bytes),
                                     static_cast<double>(write_bytes));
    throughput.reset();
    bound.reset();
    if (latency_ns > 0.0) {
      throughput =
          arithmetic_throughput(static_cast<double>(flops), latency_ns);
    }
    if (intensity) bound = *intensity < ideal_arithmetic_intensity(spec);
  }
};

BatchExpectation expect_batch(const GtRun& run, std::uint32_t batch,
                              const SystemSpec& spec,
                              const AnalysisOptions& options) {
  BatchExpectation out;
  out.batch_size = batch;
  double model_latency = static_cast<double>(run.model_latency_ns);

  // a2-a4
  for (const GtLayer& layer : run.layers) {
    LayerInfoRow row;
    row.layer_index = layer.index;
    row.name = layer.src->name;
    row.type = layer.src->type;
    row.shape = layer.src->shape;
    row.latency_ns = static_cast<double>(layer.latency_ns);
    row.alloc_bytes = layer.alloc_bytes;
    out.a2.rows.push_back(row);
    out.a3_a4.latency_ns.push_back(row.latency_ns);
    out.a3_a4.alloc_bytes.push_back(row.alloc_bytes);
  }

  // a5-a7
  {
    std::map<std::string, LayerTypeRow> by_type;
    for (const GtLayer& layer : run.layers) {
      LayerTypeRow& row = by_type[layer.src->type];
      row.type = layer.src->type;
      row.count += 1;
      row.total_latency_ns += static_cast<double>(layer.latency_ns);
      row.total_alloc_bytes += layer.alloc_bytes;
    }
    for (auto& [type, row] : by_type) out.a5_a6_a7.rows.push_back(row);
    std::stable_sort(out.a5_a6_a7.rows.begin(), out.a5_a6_a7.rows.end(),
                     [](const LayerTypeRow& a, const LayerTypeRow& b) {
                       if (a.total_latency_ns != b.total_latency_ns) {
                         return a.total_latency_ns > b.total_latency_ns;
                       }
                       return a.type < b.type;
                     });
  }

  // a8, a9
  {
    std::size_t ordinal = 0;
    for (const GtLayer& layer : run.layers) {
      for (const GtKernel& kernel : layer.kernels) {
        KernelInfoRow row;
        row.name = kernel.src->name;
        row.layer_index = layer.index;
        row.latency_ns = static_cast<double>(kernel.exec_ns);
        row.flops = kernel.metrics.flop_count_sp;
        row.dram_read_bytes = kernel.metrics.dram_read_bytes;
        row.dram_write_bytes = kernel.metrics.dram_write_bytes;
        row.achieved_occupancy = kernel.metrics.achieved_occupancy;
        row.arithmetic_intensity = arithmetic_intensity(
            static_cast<double>(row.flops),
            static_cast<double>(row.dram_read_bytes),
            static_cast<double>(row.dram_write_bytes));
        if (row.latency_ns > 0.0) {
          row.arithmetic_throughput = arithmetic_throughput(
              static_cast<double>(row.flops), row.latency_ns);
        }
        if (row.arithmetic_intensity) {
          row.memory_bound =
              *row.arithmetic_intensity < ideal_arithmetic_intensity(spec);
        }
        out.a8.rows.push_back(row);

        std::string subject =
            "kernel " + std::to_string(ordinal++) + ": " + kernel.src->name;
        auto point = classify(subject, static_cast<double>(row.flops),
                              static_cast<double>(row.dram_read_bytes),
                              static_cast<double>(row.dram_write_bytes),
                              row.latency_ns, spec);
        if (point) {
          out.a9.points.push_back(*point);
        } else {
          out.a9.excluded.push_back(subject);
        }
      }
    }
  }

  // a10
  {
    std::map<std::string, GtAccumulator> by_name;
    for (const GtLayer& layer : run.layers) {
      for (const GtKernel& kernel : layer.kernels) {
        by_name[kernel.src->name].add(kernel);
      }
    }
    out.a10.model_latency_ns = model_latency;
    for (const auto& [name, acc] : by_name) {
      KernelNameRow row;
      row.name = name;
      row.count = acc.count;
      row.total_latency_ns = acc.latency_ns;
      row.latency_percent = acc.latency_ns / model_latency * 100.0;
      row.total_flops = acc.flops;
      row.total_dram_read_bytes = acc.read_bytes;
      row.total_dram_write_bytes = acc.write_bytes;
      row.weighted_achieved_occupancy = acc.weighted_occupancy();
      acc.roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                   row.memory_bound, spec);
      out.a10.rows.push_back(row);
    }
    std::stable_sort(out.a10.rows.begin(), out.a10.rows.end(),
                     [](const KernelNameRow& a, const KernelNameRow& b) {
                       if (a.total_latency_ns != b.total_latency_ns) {
                         return a.total_latency_ns > b.total_latency_ns;
                       }
                       return a.name < b.name;
                     });
  }

  // a11-a14 + model totals of a13
  double model_gpu = 0.0;
  for (const GtLayer& layer : run.layers) {
    GtAccumulator acc;
    for (const GtKernel& kernel : layer.kernels) acc.add(kernel);

    LayerAggregateRow row;
    row.layer_index = layer.index;
    row.name = layer.src->name;
    row.type = layer.src->type;
    row.layer_latency_ns = static_cast<double>(layer.latency_ns);
    row.kernel_latency_ns = acc.latency_ns;
    row.total_flops = acc.flops;
    row.total_dram_read_bytes = acc.read_bytes;
    row.total_dram_write_bytes = acc.write_bytes;
    row.weighted_achieved_occupancy = acc.weighted_occupancy();
    row.kernel_count = acc.count;
    acc.roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                 row.memory_bound, spec);
    out.a11.rows.push_back(row);

    out.a12.total_flops.push_back(acc.flops);
    out.a12.total_dram_read_bytes.push_back(acc.read_bytes);
    out.a12.total_dram_write_bytes.push_back(acc.write_bytes);

    GpuNonGpuRow gr;
    gr.layer_index = layer.index;
    gr.gpu_latency_ns = acc.latency_ns;
    gr.non_gpu_latency_ns = row.layer_latency_ns - acc.latency_ns;
    gr.gpu_share = row.layer_latency_ns > 0.0
                       ? acc.latency_ns / row.layer_latency_ns
                       : 0.0;
    gr.non_gpu_share = row.layer_latency_ns > 0.0
                           ? gr.non_gpu_latency_ns / row.layer_latency_ns
                           : 0.0;
    gr.flagged = gr.non_gpu_latency_ns <
                 -(options.noise_tolerance * row.layer_latency_ns);
    model_gpu += acc.latency_ns;
    out.a13.rows.push_back(gr);

    std::string subject =
        "layer " + std::to_string(layer.index) + ": " + layer.src->name;
    auto point = classify(subject, static_cast<double>(acc.flops),
                          static_cast<double>(acc.read_bytes),
                          static_cast<double>(acc.write_bytes), acc.latency_ns,
                          spec);
    if (point) {
      out.a14.points.push_back(*point);
    } else {
      out.a14.excluded.push_back(subject);
    }
  }
  out.a13.model_latency_ns = model_latency;
  out.a13.model_gpu_latency_ns = model_gpu;
  out.a13.model_gpu_percent = model_gpu / model_latency * 100.0;

  // stages
  {
    std::size_t n = run.layers.size();
    StageAttribution& st = out.stages;
    st.layer_count = n;
    st.degenerate = n < 3;
    st.beginning_size = (n + 2) / 3;
    std::size_t rest = n - st.beginning_size;
    st.middle_size = (rest + 1) / 2;
    st.end_size = rest - st.middle_size;
    auto dominant = [&](auto&& value_of) {
      double sums[3] = {0.0, 0.0, 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        int stage = i < st.beginning_size
                        ? 0
                        : (i < st.beginning_size + st.middle_size ? 1 : 2);
        sums[stage] += value_of(run.layers[i]);
      }
      int best = 0;
      for (int s = 1; s < 3; ++s) {
        if (sums[s] > sums[best]) best = s;
      }
      return static_cast<Stage>(best);
    };
    st.latency_stage = dominant([](const GtLayer& l) {
      return static_cast<double>(l.latency_ns);
    });
    st.alloc_memory_stage = dominant([](const GtLayer& l) {
      return static_cast<double>(l.alloc_bytes);
    });
    st.flops_stage = dominant([](const GtLayer& l) {
      std::uint64_t flops = 0;
      for (const GtKernel& k : l.kernels) flops += k.metrics.flop_count_sp;
      return static_cast<double>(flops);
    });
    st.memory_access_stage = dominant([](const GtLayer& l) {
      std::uint64_t bytes = 0;
      for (const GtKernel& k : l.kernels) {
        bytes += k.metrics.dram_read_bytes + k.metrics.dram_write_bytes;
      }
      return static_cast<double>(bytes);
    });
  }
  return out;
}

}  // namespace

GroundTruth ground_truth(const SyntheticModel& model,
                         const std::vector<std::uint32_t>& batch_sizes,
                         const SystemSpec& spec,
                         const OverheadProfile& overhead,
                         const AnalysisOptions& options) {
  validate_model(model);
  validate_overhead(overhead);
  std::vector<std::uint32_t> batches = batch_sizes;
  std::sort(batches.begin(), batches.end());

  GroundTruth truth;
  for (std::uint32_t batch : batches) {
    GtRun run = gt_run(model, batch, overhead);
    double latency = static_cast<double>(run.model_latency_ns);

    ThroughputPoint point;
    point.batch_size = batch;
    point.batch_latency_ns = latency;
    point.throughput = static_cast<double>(batch) / (latency / 1e9);
    truth.curve.points.push_back(point);

    truth.a1.rows.push_back(
        ModelInfoRow{batch, point.batch_latency_ns, point.throughput});
    if (batch == 1) truth.a1.online_latency_ns = point.batch_latency_ns;
    truth.a1.max_throughput =
        std::max(truth.a1.max_throughput, point.throughput);

    truth.per_batch.push_back(expect_batch(run, batch, spec, options));

    GtAccumulator acc;
    for (const GtLayer& layer : run.layers) {
      for (const GtKernel& kernel : layer.kernels) acc.add(kernel);
    }
    ModelAggregateRow row;
    row.batch_size = batch;
    row.model_latency_ns = latency;
    row.kernel_latency_ns = acc.latency_ns;
    row.total_flops = acc.flops;
    row.total_dram_read_bytes = acc.read_bytes;
    row.total_dram_write_bytes = acc.write_bytes;
    row.weighted_achieved_occupancy = acc.weighted_occupancy();
    row.kernel_count = acc.count;
    acc.roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                 row.memory_bound, spec);
    truth.a15.rows.push_back(row);

    std::string subject = "batch " + std::to_string(batch);
    if (row.arithmetic_intensity && row.kernel_latency_ns > 0.0) {
      RooflinePoint mp;
      mp.subject = subject;
      mp.arithmetic_intensity = *row.arithmetic_intensity;
      mp.arithmetic_throughput = row.arithmetic_throughput.value_or(0.0);
      mp.memory_bound = row.memory_bound.value_or(false);
      truth.model_roofline.points.push_back(mp);
    } else {
      truth.model_roofline.excluded.push_back(subject);
    }
  }

  // Doubling rule, evaluated over the predicted curve: stop at the first
  // batch whose successor gains no more than epsilon.
  if (truth.curve.points.size() < 2) {
    truth.optimal_batch =
        OptimalBatch{truth.curve.points.front().batch_size,
                     "single-point curve; no doubling step to evaluate"};
  } else {
    std::size_t stop = truth.curve.points.size() - 1;
    for (std::size_t i = 0; i + 1 < truth.curve.points.size(); ++i) {
      if (truth.curve.points[i + 1].throughput <=
          (1.0 + options.epsilon) * truth.curve.points[i].throughput) {
        stop = i;
        break;
      }
    }
    truth.optimal_batch = OptimalBatch{truth.curve.points[stop].batch_size, ""};
  }
  return truth;
}

OverheadReport ground_truth_overhead(const SyntheticModel& model,
                                     std::uint32_t batch_size,
                                     const OverheadProfile& overhead,
                                     const AnalysisOptions& options) {
  validate_model(model);
  validate_overhead(overhead);
  LevelSet m{Level::Model};
  LevelSet ml{Level::Model, Level::Layer};
  LevelSet mlg{Level::Model, Level::Layer, Level::Kernel};
  LevelSet added_l{Level::Layer};
  LevelSet added_g{Level::Kernel};

  auto model_latency = [&](const LevelSet& levels) -> std::uint64_t {
    std::uint64_t total = 0;
    for (auto [first, last] : group_ranges(model, /*serialized=*/false)) {
      std::uint64_t widest = 0;
      for (std::size_t li = first; li < last; ++li) {
        widest = std::max(widest, layer_body_ns(model.layers[li], model,
                                                batch_size, levels, overhead));
      }
      total += widest;
    }
    return total;
  };

  OverheadReport report;
  report.noise_tolerance = options.noise_tolerance;

  OverheadRow model_row;
  model_row.event = LeveledEventKey{Level::Model, 0, 0};
  model_row.accurate_latency_ns = static_cast<double>(model_latency(m));
  model_row.overhead_by_added_levels[added_l] =
      static_cast<double>(model_latency(ml)) -
      static_cast<double>(model_latency(m));
  model_row.overhead_by_added_levels[added_g] =
      static_cast<double>(model_latency(mlg)) -
      static_cast<double>(model_latency(ml));
  report.model_overhead_by_added_levels = model_row.overhead_by_added_levels;
  report.rows.push_back(std::move(model_row));

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const SyntheticLayer& layer = model.layers[li];
    OverheadRow row;
    row.event =
        LeveledEventKey{Level::Layer, static_cast<std::uint32_t>(li), 0};
    row.accurate_latency_ns = static_cast<double>(
        layer_body_ns(layer, model, batch_size, ml, overhead));
    row.overhead_by_added_levels[added_g] =
        static_cast<double>(
            layer_body_ns(layer, model, batch_size, mlg, overhead)) -
        static_cast<double>(
            layer_body_ns(layer, model, batch_size, ml, overhead));
    report.rows.push_back(std::move(row));
  }
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    for (std::size_t ki = 0; ki < model.layers[li].kernels.size(); ++ki) {
      OverheadRow row;
      row.event = LeveledEventKey{Level::Kernel,
                                  static_cast<std::uint32_t>(li),
                                  static_cast<std::uint32_t>(ki)};
      row.accurate_latency_ns = static_cast<double>(
          scaled_exec_ns(model.layers[li].kernels[ki], model, batch_size));
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Fixture library

namespace fixtures {

namespace {

SyntheticKernel kernel(std::string name, std::uint64_t exec_ns,
                       std::uint64_t launch_ns, std::uint64_t flops,
                       std::uint64_t read_bytes, std::uint64_t write_bytes,
                       double occupancy) {
  SyntheticKernel k;
  k.name = std::move(name);
  k.true_latency_ns = exec_ns;
  k.launch_latency_ns = launch_ns;
  k.metrics = KernelMetrics{flops, read_bytes, write_bytes, occupancy};
  return k;
}

SyntheticLayer layer(std::string name, std::string type,
                     std::uint64_t latency_ns, std::int64_t alloc_bytes,
                     std::vector<SyntheticKernel> kernels,
                     std::uint32_t group = 0) {
  SyntheticLayer l;
  l.name = std::move(name);
  l.type = std::move(type);
  l.true_latency_ns = latency_ns;
  l.alloc_bytes = alloc_bytes;
  l.concurrent_group = group;
  l.kernels = std::move(kernels);
  return l;
}

}  // namespace

SyntheticModel minimal() {
  SyntheticModel model;
  model.name = "minimal";
  model.layers.push_back(
      layer("dense/MatMul", "MatMul", 1'000'000, 4'000'000,
            {kernel("sgemm_kernel", 600'000, 5'000, 2'000'000'000, 52'428'800,
                    26'214'400, 0.5)}));
  return model;
}

SyntheticModel resnet_like() {
  SyntheticModel model;
  model.name = "resnet-like";
  model.layers.push_back(
      layer("conv1/Conv2D", "Conv2D", 2'600'000, 25'000'000,
            {kernel("volta_scudnn_128x64_relu_interior_nn_v1", 1'900'000,
                    6'000, 8'600'000'000, 52'000'000, 41'000'000, 0.32),
             kernel("offset_kernel", 300'000, 4'000, 120'000'000, 28'000'000,
                    25'000'000, 0.55)}));
  for (int block = 0; block < 58; ++block) {
    std::string prefix = "block" + std::to_string(block);
    model.layers.push_back(
        layer(prefix + "/conv/Conv2D", "Conv2D", 2'400'000, 25'000'000,
              {kernel("volta_scudnn_128x64_relu_interior_nn_v1", 1'750'000,
                      6'000, 8'200'000'000, 48'000'000, 39'000'000, 0.34),
               kernel("offset_kernel", 280'000, 4'000, 110'000'000,
                      26'000'000, 23'000'000, 0.56)}));
    model.layers.push_back(
        layer(prefix + "/scale/Mul", "Mul", 430'000, 2'000'000,
              {kernel("elementwise_mul_kernel", 260'000, 3'000, 60'000'000,
                      48'000'000, 24'000'000, 0.81)}));
    model.layers.push_back(
        layer(prefix + "/residual/Add", "Add", 450'000, 2'000'000,
              {kernel("elementwise_add_kernel", 280'000, 3'000, 60'000'000,
                      50'000'000, 25'000'000, 0.83)}));
    model.layers.push_back(
        layer(prefix + "/activation/Relu", "Relu", 380'000, 1'500'000,
              {kernel("relu_kernel", 210'000, 3'000, 30'000'000, 32'000'000,
                      32'000'000, 0.78)}));
  }
  model.layers.push_back(
      layer("logits/add/Add", "Add", 500'000, 2'000'000,
            {kernel("elementwise_add_kernel", 300'000, 3'000, 64'000'000,
                    52'000'000, 26'000'000, 0.8)}));
  return model;
}

SyntheticModel mobilenet_like() {
  SyntheticModel model;
  model.name = "mobilenet-like";
  for (int i = 0; i < 15; ++i) {
    std::string index = std::to_string(i);
    model.layers.push_back(
        layer("dw_conv" + index + "/DepthwiseConv2D", "DepthwiseConv2D",
              700'000, 3'000'000,
              {kernel("depthwise_conv_kernel", 420'000, 4'000, 900'000'000,
                      80'000'000, 40'000'000, 0.65)}));
    if (i == 14) break;
    model.layers.push_back(
        layer("pw_conv" + index + "/Conv2D", "Conv2D", 750'000, 3'500'000,
              {kernel("volta_sgemm_64x32", 460'000, 4'000, 1'400'000'000,
                      110'000'000, 70'000'000, 0.48)}));
  }
  model.layers.push_back(layer("avgpool/Mean", "Mean", 400'000, 500'000,
                               {kernel("reduce_mean_kernel", 220'000, 3'000,
                                       40'000'000, 30'000'000, 5'000'000,
                                       0.7)}));
  return model;
}

SyntheticModel overlap() {
  SyntheticModel model;
  model.name = "branchy";
  model.layers.push_back(
      layer("trunk/Conv2D", "Conv2D", 900'000, 6'000'000,
            {kernel("volta_sgemm_64x32", 520'000, 5'000, 2'600'000'000,
                    60'000'000, 30'000'000, 0.42)}));
  model.layers.push_back(
      layer("branch_a/Conv2D", "Conv2D", 800'000, 5'000'000,
            {kernel("volta_sgemm_64x32", 430'000, 5'000, 2'100'000'000,
                    52'000'000, 28'000'000, 0.44)},
            /*group=*/1));
  model.layers.push_back(
      layer("branch_b/Conv2D", "Conv2D", 650'000, 5'000'000,
            {kernel("winograd_kernel", 360'000, 5'000, 1'700'000'000,
                    46'000'000, 24'000'000, 0.51)},
            /*group=*/1));
  model.layers.push_back(
      layer("merge/Add", "Add", 400'000, 1'000'000,
            {kernel("elementwise_add_kernel", 240'000, 3'000, 50'000'000,
                    42'000'000, 21'000'000, 0.82)}));
  return model;
}

SyntheticModel async_straggler() {
  SyntheticModel model;
  model.name = "fire-and-forget";
  model.layers.push_back(
      layer("prep/Mul", "Mul", 500'000, 1'000'000,
            {kernel("elementwise_mul_kernel", 200'000, 3'000, 40'000'000,
                    32'000'000, 16'000'000, 0.8)}));
  // The kernel is enqueued here but executes far past the layer's end.
  model.layers.push_back(
      layer("launch_heavy/Conv2D", "Conv2D", 600'000, 8'000'000,
            {kernel("volta_scudnn_128x128_stridedB", 2'000'000, 6'000,
                    9'000'000'000, 70'000'000, 50'000'000, 0.38)}));
  model.layers.push_back(
      layer("post/Add", "Add", 800'000, 1'000'000,
            {kernel("elementwise_add_kernel", 150'000, 3'000, 30'000'000,
                    24'000'000, 12'000'000, 0.81)}));
  return model;
}

SyntheticModel overhead_chain() {
  SyntheticModel model;
  model.name = "overhead-chain";
  for (int stage = 0; stage < 10; ++stage) {
    std::vector<SyntheticKernel> kernels;
    if (stage == 0) {
      for (int k = 0; k < 3; ++k) {
        kernels.push_back(kernel("gemv_kernel", 80'000, 3'000, 2'000'000'000,
                                 40'000'000, 20'000'000, 0.5));
      }
    } else {
      for (int k = 0; k < 2; ++k) {
        kernels.push_back(kernel("gemv_kernel", 3'220'000, 4'000,
                                 6'000'000'000, 120'000'000, 60'000'000,
                                 0.62));
      }
    }
    model.layers.push_back(layer("stage_" + std::to_string(stage) + "/Dense",
                                 "Dense", 27'510'000, 4'000'000,
                                 std::move(kernels)));
  }
  return model;
}

OverheadProfile default_overhead() {
  OverheadProfile profile;
  profile.layer_overhead_ns = 15'700'000;
  profile.kernel_overhead_ns = 0;
  profile.metric_overhead_multiplier = 2.0;
  return profile;
}

}  // namespace fixtures

std::vector<std::string> fixture_names() {
  return {"minimal",  "resnet-like",     "mobilenet-like",
          "overlap",  "async-straggler", "overhead-chain"};
}

SyntheticModel fixture_by_name(const std::string& name) {
  if (name == "minimal") return fixtures::minimal();
  if (name == "resnet-like") return fixtures::resnet_like();
  if (name == "mobilenet-like") return fixtures::mobilenet_like();
  if (name == "overlap") return fixtures::overlap();
  if (name == "async-straggler") return fixtures::async_straggler();
  if (name == "overhead-chain") return fixtures::overhead_chain();
  throw SimError("unknown fixture '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON round-trip

std::string encode_model(const SyntheticModel& model) {
  json layers = json::array();
  for (const SyntheticLayer& layer : model.layers) {
    json kernels = json::array();
    for (const SyntheticKernel& kernel : layer.kernels) {
      kernels.push_back(
          {{"name", kernel.name},
           {"true_latency_ns", kernel.true_latency_ns},
           {"launch_latency_ns", kernel.launch_latency_ns},
           {"metrics",
            {{"flop_count_sp", kernel.metrics.flop_count_sp},
             {"dram_read_bytes", kernel.metrics.dram_read_bytes},
             {"dram_write_bytes", kernel.metrics.dram_write_bytes},
             {"achieved_occupancy", kernel.metrics.achieved_occupancy}}}});
    }
    json entry{{"name", layer.name},
               {"type", layer.type},
               {"true_latency_ns", layer.true_latency_ns},
               {"alloc_bytes", layer.alloc_bytes},
               {"kernels", std::move(kernels)}};
    if (!layer.shape.empty()) entry["shape"] = layer.shape;
    if (layer.concurrent_group != 0) {
      entry["concurrent_group"] = layer.concurrent_group;
    }
    layers.push_back(std::move(entry));
  }
  return json{{"name", model.name},
              {"latency_batch_exponent", model.latency_batch_exponent},
              {"flops_batch_exponent", model.flops_batch_exponent},
              {"bytes_batch_exponent", model.bytes_batch_exponent},
              {"layers", std::move(layers)}}
      .dump(2);
}

SyntheticModel parse_model(const std::string& json_text) {
  json parsed = json::parse(json_text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw SimError("model description is not a JSON object");
  }
  SyntheticModel model;
  model.name = parsed.value("name", std::string{});
  model.latency_batch_exponent = parsed.value("latency_batch_exponent", 0.9);
  model.flops_batch_exponent = parsed.value("flops_batch_exponent", 1.0);
  model.bytes_batch_exponent = parsed.value("bytes_batch_exponent", 1.0);
  auto layers = parsed.find("layers");
  if (layers == parsed.end() || !layers->is_array()) {
    throw SimError("model description lacks a 'layers' array");
  }
  for (const json& entry : *layers) {
    SyntheticLayer layer;
    layer.name = entry.value("name", std::string{});
    layer.type = entry.value("type", std::string{});
    layer.shape = entry.value("shape", std::string{});
    layer.true_latency_ns = entry.value("true_latency_ns", 0ull);
    layer.alloc_bytes = entry.value("alloc_bytes", 0ll);
    layer.concurrent_group = entry.value("concurrent_group", 0u);
    if (auto kernels = entry.find("kernels"); kernels != entry.end()) {
      if (!kernels->is_array()) throw SimError("'kernels' must be an array");
      for (const json& k : *kernels) {
        SyntheticKernel kernel;
        kernel.name = k.value("name", std::string{});
        kernel.true_latency_ns = k.value("true_latency_ns", 0ull);
        kernel.launch_latency_ns = k.value("launch_latency_ns", 0ull);
        if (auto metrics = k.find("metrics"); metrics != k.end()) {
          kernel.metrics.flop_count_sp = metrics->value("flop_count_sp", 0ull);
          kernel.metrics.dram_read_bytes =
              metrics->value("dram_read_bytes", 0ull);
          kernel.metrics.dram_write_bytes =
              metrics->value("dram_write_bytes", 0ull);
          kernel.metrics.achieved_occupancy =
              metrics->value("achieved_occupancy", 0.0);
        }
        layer.kernels.push_back(std::move(kernel));
      }
    }
    model.layers.push_back(std::move(layer));
  }
  validate_model(model);
  return model;
}

SyntheticModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot open model description '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str());
}

}  // namespace strata
