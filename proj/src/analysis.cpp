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

#include "strata/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace strata {

// ---------------------------------------------------------------------------
// Scalar primitives

double trimmed_mean(std::vector<double> values, double trim_fraction) {
  if (values.empty()) throw AnalysisError("trimmed mean of an empty sample");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw AnalysisError("trim fraction must lie in [0, 0.5)");
  }
  std::sort(values.begin(), values.end());
  auto drop = static_cast<std::size_t>(
      std::floor(trim_fraction * static_cast<double>(values.size())));
  double sum = 0.0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) sum += values[i];
  return sum / static_cast<double>(values.size() - 2 * drop);
}

std::optional<double> arithmetic_intensity(double flops, double read_bytes,
                                           double write_bytes) {
  double bytes = read_bytes + write_bytes;
  if (bytes <= 0.0) return std::nullopt;
  return flops / bytes;
}

double arithmetic_throughput(double flops, double latency_ns) {
  if (latency_ns <= 0.0) {
    throw AnalysisError("throughput of a zero-latency subject");
  }
  return flops / (latency_ns / 1e9);
}

double ideal_arithmetic_intensity(const SystemSpec& spec) {
  return spec.peak_flops / spec.memory_bandwidth_bytes_per_s;
}

std::optional<RooflinePoint> classify(std::string subject, double flops,
                                      double read_bytes, double write_bytes,
                                      double latency_ns,
                                      const SystemSpec& spec) {
  auto intensity = arithmetic_intensity(flops, read_bytes, write_bytes);
  if (!intensity || latency_ns <= 0.0) return std::nullopt;
  RooflinePoint point;
  point.subject = std::move(subject);
  point.arithmetic_intensity = *intensity;
  point.arithmetic_throughput = arithmetic_throughput(flops, latency_ns);
  point.memory_bound = *intensity < ideal_arithmetic_intensity(spec);
  return point;
}

// ---------------------------------------------------------------------------
// Repetition combining
//
// Runs of one AnalysisInput are structurally identical repetitions; they are
// matched positionally (layer_index, then kernel launch order). Latencies
// and occupancies take the trimmed mean; counters come from the first run.

namespace {

struct CombinedKernel {
  const KernelExec* canonical = nullptr;
  double latency_ns = 0.0;
  double occupancy = 0.0;
  KernelMetrics counters{};
  bool has_metrics = false;
};

struct CombinedLayer {
  const LayerExec* canonical = nullptr;
  double latency_ns = 0.0;
  std::vector<CombinedKernel> kernels;
};

struct Combined {
  const EntityTree* canonical = nullptr;
  double model_latency_ns = 0.0;
  std::vector<CombinedLayer> layers;
};

Combined combine(const AnalysisInput& input, const AnalysisOptions& options) {
  if (input.runs.empty()) {
    throw AnalysisError("analysis input holds no runs");
  }
  const EntityTree& first = input.runs.front();
  for (const EntityTree& run : input.runs) {
    if (run.root.layers.size() != first.root.layers.size()) {
      throw AnalysisError("repetitions disagree on layer count");
    }
    for (std::size_t i = 0; i < run.root.layers.size(); ++i) {
      if (run.root.layers[i].kernels.size() !=
          first.root.layers[i].kernels.size()) {
        throw AnalysisError("repetitions disagree on kernel count of layer " +
                            std::to_string(i));
      }
    }
  }

  auto trim = [&](std::vector<double> values) {
    return trimmed_mean(std::move(values), options.trim_fraction);
  };

  Combined combined;
  combined.canonical = &first;
  {
    std::vector<double> latencies;
    latencies.reserve(input.runs.size());
    for (const EntityTree& run : input.runs) {
      latencies.push_back(static_cast<double>(run.root.duration_ns()));
    }
    combined.model_latency_ns = trim(std::move(latencies));
  }
  combined.layers.resize(first.root.layers.size());
  for (std::size_t li = 0; li < first.root.layers.size(); ++li) {
    CombinedLayer& layer = combined.layers[li];
    layer.canonical = &first.root.layers[li];
    std::vector<double> latencies;
    latencies.reserve(input.runs.size());
    for (const EntityTree& run : input.runs) {
      latencies.push_back(
          static_cast<double>(run.root.layers[li].duration_ns()));
    }
    layer.latency_ns = trim(std::move(latencies));

    layer.kernels.resize(first.root.layers[li].kernels.size());
    for (std::size_t ki = 0; ki < layer.kernels.size(); ++ki) {
      CombinedKernel& kernel = layer.kernels[ki];
      kernel.canonical = &first.root.layers[li].kernels[ki];
      std::vector<double> kernel_latencies;
      std::vector<double> occupancies;
      kernel_latencies.reserve(input.runs.size());
      occupancies.reserve(input.runs.size());
      for (const EntityTree& run : input.runs) {
        const KernelExec& node = run.root.layers[li].kernels[ki];
        kernel_latencies.push_back(static_cast<double>(node.duration_ns()));
        occupancies.push_back(node.metrics ? node.metrics->achieved_occupancy
                                           : 0.0);
      }
      kernel.latency_ns = trim(std::move(kernel_latencies));
      kernel.occupancy = trim(std::move(occupancies));
      if (kernel.canonical->metrics) {
        kernel.counters = *kernel.canonical->metrics;
        kernel.counters.achieved_occupancy = kernel.occupancy;
        kernel.has_metrics = true;
      }
    }
  }
  return combined;
}

/// Accumulator applied in tree order so repeated evaluation is bit-identical.
struct Accumulator {
  double latency_ns = 0.0;
  std::uint64_t flops = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  double occupancy_weight = 0.0;  ///< Σ occupancy·latency
  std::uint64_t count = 0;

  void add(const CombinedKernel& kernel) {
    latency_ns += kernel.latency_ns;
    flops += kernel.counters.flop_count_sp;
    read_bytes += kernel.counters.dram_read_bytes;
    write_bytes += kernel.counters.dram_write_bytes;
    occupancy_weight += kernel.occupancy * kernel.latency_ns;
    ++count;
  }

  double weighted_occupancy() const {
    return latency_ns > 0.0 ? occupancy_weight / latency_ns : 0.0;
  }
};

void attach_roofline(std::optional<double>& intensity,
                     std::optional<double>& throughput,
                     std::optional<bool>& bound, const Accumulator& acc,
                     const SystemSpec& spec) {
  intensity = arithmetic_intensity(static_cast<double>(acc.flops),
                                   static_cast<double>(acc.read_bytes),
                                   static_cast<double>(acc.write_bytes));
  throughput.reset();
  bound.reset();
  if (acc.latency_ns > 0.0) {
    throughput =
        arithmetic_throughput(static_cast<double>(acc.flops), acc.latency_ns);
  }
  if (intensity) {
    bound = *intensity < ideal_arithmetic_intensity(spec);
  }
}

std::vector<AnalysisInput> sorted_by_batch(
    const std::vector<AnalysisInput>& groups) {
  std::vector<AnalysisInput> out;  // shallow copy is fine: trees are values
  out.reserve(groups.size());
  for (const AnalysisInput& g : groups) out.push_back(g);
  std::sort(out.begin(), out.end(),
            [](const AnalysisInput& a, const AnalysisInput& b) {
              return a.batch_size < b.batch_size;
            });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].batch_size == out[i - 1].batch_size) {
      throw AnalysisError("batch size " + std::to_string(out[i].batch_size) +
                          " appears in more than one group");
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// A1 + throughput curve + optimal batch

ThroughputCurve throughput_curve(const std::vector<AnalysisInput>& groups,
                                 const AnalysisOptions& options) {
  if (groups.empty()) throw AnalysisError("no runs to analyze");
  ThroughputCurve curve;
  for (const AnalysisInput& group : sorted_by_batch(groups)) {
    Combined combined = combine(group, options);
    ThroughputPoint point;
    point.batch_size = group.batch_size;
    point.batch_latency_ns = combined.model_latency_ns;
    point.throughput = static_cast<double>(group.batch_size) /
                       (combined.model_latency_ns / 1e9);
    curve.points.push_back(point);
  }
  return curve;
}

ModelInfoTable a1_model_info(const std::vector<AnalysisInput>& groups,
                             const AnalysisOptions& options) {
  ThroughputCurve curve = throughput_curve(groups, options);
  ModelInfoTable table;
  for (const ThroughputPoint& point : curve.points) {
    table.rows.push_back(
        ModelInfoRow{point.batch_size, point.batch_latency_ns, point.throughput});
    if (point.batch_size == 1) table.online_latency_ns = point.batch_latency_ns;
    table.max_throughput = std::max(table.max_throughput, point.throughput);
  }
  return table;
}

OptimalBatch optimal_batch_size(const ThroughputCurve& curve, double epsilon) {
  if (curve.points.empty()) throw AnalysisError("empty throughput curve");
  if (curve.points.size() < 2) {
    return OptimalBatch{curve.points.front().batch_size,
                        "single-point curve; no doubling step to evaluate"};
  }
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const ThroughputPoint& here = curve.points[i];
    const ThroughputPoint& next = curve.points[i + 1];
    if (next.throughput <= (1.0 + epsilon) * here.throughput) {
      return OptimalBatch{here.batch_size, ""};
    }
  }
  return OptimalBatch{curve.points.back().batch_size, ""};
}

// ---------------------------------------------------------------------------
// A2-A7

LayerInfoTable a2_layer_table(const AnalysisInput& input,
                              const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  LayerInfoTable table;
  for (const CombinedLayer& layer : combined.layers) {
    LayerInfoRow row;
    row.layer_index = layer.canonical->layer_index;
    row.name = layer.canonical->span.name;
    row.type = layer.canonical->layer_type;
    if (auto it = layer.canonical->span.tags.find(kTagShape);
        it != layer.canonical->span.tags.end()) {
      if (const auto* s = std::get_if<std::string>(&it->second)) row.shape = *s;
    }
    row.latency_ns = layer.latency_ns;
    row.alloc_bytes = layer.canonical->alloc_bytes;
    table.rows.push_back(std::move(row));
  }
  return table;
}

LayerSeries a3_a4_layer_series(const AnalysisInput& input,
                               const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  LayerSeries series;
  for (const CombinedLayer& layer : combined.layers) {
    series.latency_ns.push_back(layer.latency_ns);
    series.alloc_bytes.push_back(layer.canonical->alloc_bytes);
  }
  return series;
}

LayerTypeTable a5_a6_a7_by_type(const AnalysisInput& input,
                                const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  // Keyed map for grouping; accumulation still runs in execution order.
  std::map<std::string, LayerTypeRow> by_type;
  for (const CombinedLayer& layer : combined.layers) {
    LayerTypeRow& row = by_type[layer.canonical->layer_type];
    row.type = layer.canonical->layer_type;
    row.count += 1;
    row.total_latency_ns += layer.latency_ns;
    row.total_alloc_bytes += layer.canonical->alloc_bytes;
  }
  LayerTypeTable table;
  for (auto& [type, row] : by_type) table.rows.push_back(std::move(row));
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const LayerTypeRow& a, const LayerTypeRow& b) {
                     if (a.total_latency_ns != b.total_latency_ns) {
                       return a.total_latency_ns > b.total_latency_ns;
                     }
                     return a.type < b.type;
                   });
  return table;
}

// ---------------------------------------------------------------------------
// A8-A10

KernelInfoTable a8_kernel_table(const AnalysisInput& input,
                                const SystemSpec& spec,
                                const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  KernelInfoTable table;
  for (const CombinedLayer& layer : combined.layers) {
    for (const CombinedKernel& kernel : layer.kernels) {
      KernelInfoRow row;
      row.name = kernel.canonical->kernel_name();
      row.layer_index = layer.canonical->layer_index;
      row.latency_ns = kernel.latency_ns;
      row.flops = kernel.counters.flop_count_sp;
      row.dram_read_bytes = kernel.counters.dram_read_bytes;
      row.dram_write_bytes = kernel.counters.dram_write_bytes;
      row.achieved_occupancy = kernel.occupancy;
      row.arithmetic_intensity = arithmetic_intensity(
          static_cast<double>(row.flops), static_cast<double>(row.dram_read_bytes),
          static_cast<double>(row.dram_write_bytes));
      if (kernel.latency_ns > 0.0) {
        row.arithmetic_throughput = arithmetic_throughput(
            static_cast<double>(row.flops), kernel.latency_ns);
      }
      if (row.arithmetic_intensity) {
        row.memory_bound =
            *row.arithmetic_intensity < ideal_arithmetic_intensity(spec);
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

RooflineReport a9_kernel_roofline(const AnalysisInput& input,
                                  const SystemSpec& spec,
                                  const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  RooflineReport report;
  std::size_t ordinal = 0;
  for (const CombinedLayer& layer : combined.layers) {
    for (const CombinedKernel& kernel : layer.kernels) {
      std::string subject = "kernel " + std::to_string(ordinal++) + ": " +
                            kernel.canonical->kernel_name();
      auto point = classify(subject,
                            static_cast<double>(kernel.counters.flop_count_sp),
                            static_cast<double>(kernel.counters.dram_read_bytes),
                            static_cast<double>(kernel.counters.dram_write_bytes),
                            kernel.latency_ns, spec);
      if (point) {
        report.points.push_back(std::move(*point));
      } else {
        report.excluded.push_back(std::move(subject));
      }
    }
  }
  return report;
}

KernelNameTable a10_by_name(const AnalysisInput& input, const SystemSpec& spec,
                            const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  std::map<std::string, Accumulator> by_name;
  for (const CombinedLayer& layer : combined.layers) {
    for (const CombinedKernel& kernel : layer.kernels) {
      by_name[kernel.canonical->kernel_name()].add(kernel);
    }
  }
  KernelNameTable table;
  table.model_latency_ns = combined.model_latency_ns;
  for (const auto& [name, acc] : by_name) {
    KernelNameRow row;
    row.name = name;
    row.count = acc.count;
    row.total_latency_ns = acc.latency_ns;
    row.latency_percent = acc.latency_ns / combined.model_latency_ns * 100.0;
    row.total_flops = acc.flops;
    row.total_dram_read_bytes = acc.read_bytes;
    row.total_dram_write_bytes = acc.write_bytes;
    row.weighted_achieved_occupancy = acc.weighted_occupancy();
    attach_roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                    row.memory_bound, acc, spec);
    table.rows.push_back(std::move(row));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const KernelNameRow& a, const KernelNameRow& b) {
                     if (a.total_latency_ns != b.total_latency_ns) {
                       return a.total_latency_ns > b.total_latency_ns;
                     }
                     return a.name < b.name;
                   });
  return table;
}

// ---------------------------------------------------------------------------
// A11-A14

LayerAggregateTable a11_by_layer(const AnalysisInput& input,
                                 const SystemSpec& spec,
                                 const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  LayerAggregateTable table;
  for (const CombinedLayer& layer : combined.layers) {
    Accumulator acc;
    for (const CombinedKernel& kernel : layer.kernels) acc.add(kernel);
    LayerAggregateRow row;
    row.layer_index = layer.canonical->layer_index;
    row.name = layer.canonical->span.name;
    row.type = layer.canonical->layer_type;
    row.layer_latency_ns = layer.latency_ns;
    row.kernel_latency_ns = acc.latency_ns;
    row.total_flops = acc.flops;
    row.total_dram_read_bytes = acc.read_bytes;
    row.total_dram_write_bytes = acc.write_bytes;
    row.weighted_achieved_occupancy = acc.weighted_occupancy();
    row.kernel_count = acc.count;
    attach_roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                    row.memory_bound, acc, spec);
    table.rows.push_back(std::move(row));
  }
  return table;
}

LayerMetricsSeries a12_metrics_per_layer(const AnalysisInput& input,
                                         const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  LayerMetricsSeries series;
  for (const CombinedLayer& layer : combined.layers) {
    Accumulator acc;
    for (const CombinedKernel& kernel : layer.kernels) acc.add(kernel);
    series.total_flops.push_back(acc.flops);
    series.total_dram_read_bytes.push_back(acc.read_bytes);
    series.total_dram_write_bytes.push_back(acc.write_bytes);
  }
  return series;
}

GpuNonGpuTable a13_gpu_vs_nongpu(const AnalysisInput& input,
                                 const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  GpuNonGpuTable table;
  table.model_latency_ns = combined.model_latency_ns;
  double model_gpu = 0.0;
  for (const CombinedLayer& layer : combined.layers) {
    double gpu = 0.0;
    for (const CombinedKernel& kernel : layer.kernels) gpu += kernel.latency_ns;
    GpuNonGpuRow row;
    row.layer_index = layer.canonical->layer_index;
    row.gpu_latency_ns = gpu;
    row.non_gpu_latency_ns = layer.latency_ns - gpu;
    row.gpu_share = layer.latency_ns > 0.0 ? gpu / layer.latency_ns : 0.0;
    row.non_gpu_share =
        layer.latency_ns > 0.0 ? row.non_gpu_latency_ns / layer.latency_ns : 0.0;
    row.flagged = row.non_gpu_latency_ns <
                  -(options.noise_tolerance * layer.latency_ns);
    model_gpu += gpu;
    table.rows.push_back(row);
  }
  table.model_gpu_latency_ns = model_gpu;
  table.model_gpu_percent = model_gpu / combined.model_latency_ns * 100.0;
  return table;
}

RooflineReport a14_layer_roofline(const AnalysisInput& input,
                                  const SystemSpec& spec,
                                  const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  RooflineReport report;
  for (const CombinedLayer& layer : combined.layers) {
    Accumulator acc;
    for (const CombinedKernel& kernel : layer.kernels) acc.add(kernel);
    std::string subject =
        "layer " + std::to_string(layer.canonical->layer_index) + ": " +
        layer.canonical->span.name;
    auto point = classify(subject, static_cast<double>(acc.flops),
                          static_cast<double>(acc.read_bytes),
                          static_cast<double>(acc.write_bytes), acc.latency_ns,
                          spec);
    if (point) {
      report.points.push_back(std::move(*point));
    } else {
      report.excluded.push_back(std::move(subject));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// A15 + model roofline

namespace {

ModelAggregateRow model_aggregate_row(const AnalysisInput& group,
                                      const SystemSpec& spec,
                                      const AnalysisOptions& options) {
  Combined combined = combine(group, options);
  Accumulator acc;
  for (const CombinedLayer& layer : combined.layers) {
    for (const CombinedKernel& kernel : layer.kernels) acc.add(kernel);
  }
  ModelAggregateRow row;
  row.batch_size = group.batch_size;
  row.model_latency_ns = combined.model_latency_ns;
  row.kernel_latency_ns = acc.latency_ns;
  row.total_flops = acc.flops;
  row.total_dram_read_bytes = acc.read_bytes;
  row.total_dram_write_bytes = acc.write_bytes;
  row.weighted_achieved_occupancy = acc.weighted_occupancy();
  row.kernel_count = acc.count;
  attach_roofline(row.arithmetic_intensity, row.arithmetic_throughput,
                  row.memory_bound, acc, spec);
  return row;
}

}  // namespace

ModelAggregateTable a15_model_aggregate(const std::vector<AnalysisInput>& groups,
                                        const SystemSpec& spec,
                                        const AnalysisOptions& options) {
  if (groups.empty()) throw AnalysisError("no runs to analyze");
  ModelAggregateTable table;
  for (const AnalysisInput& group : sorted_by_batch(groups)) {
    table.rows.push_back(model_aggregate_row(group, spec, options));
  }
  return table;
}

RooflineReport model_roofline(const std::vector<AnalysisInput>& groups,
                              const SystemSpec& spec,
                              const AnalysisOptions& options) {
  ModelAggregateTable table = a15_model_aggregate(groups, spec, options);
  RooflineReport report;
  for (const ModelAggregateRow& row : table.rows) {
    std::string subject = "batch " + std::to_string(row.batch_size);
    if (row.arithmetic_intensity && row.kernel_latency_ns > 0.0) {
      RooflinePoint point;
      point.subject = std::move(subject);
      point.arithmetic_intensity = *row.arithmetic_intensity;
      point.arithmetic_throughput = row.arithmetic_throughput.value_or(0.0);
      point.memory_bound = row.memory_bound.value_or(false);
      report.points.push_back(std::move(point));
    } else {
      report.excluded.push_back(std::move(subject));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Stage attribution

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Beginning: return "B";
    case Stage::Middle: return "M";
    case Stage::End: return "E";
  }
  return "?";
}

StageAttribution stage_attribution(const AnalysisInput& input,
                                   const AnalysisOptions& options) {
  Combined combined = combine(input, options);
  std::size_t n = combined.layers.size();
  StageAttribution out;
  out.layer_count = n;
  out.degenerate = n < 3;
  out.beginning_size = (n + 2) / 3;  // ceil(n/3)
  std::size_t rest = n - out.beginning_size;
  out.middle_size = (rest + 1) / 2;  // ceil(rest/2)
  out.end_size = rest - out.middle_size;

  auto dominant = [&](auto&& value_of) {
    double sums[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      int stage = i < out.beginning_size
                      ? 0
                      : (i < out.beginning_size + out.middle_size ? 1 : 2);
      sums[stage] += value_of(combined.layers[i]);
    }
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (sums[s] > sums[best]) best = s;  // earliest stage wins ties
    }
    return static_cast<Stage>(best);
  };

  out.latency_stage =
      dominant([](const CombinedLayer& l) { return l.latency_ns; });
  out.alloc_memory_stage = dominant([](const CombinedLayer& l) {
    return static_cast<double>(l.canonical->alloc_bytes);
  });
  out.flops_stage = dominant([](const CombinedLayer& l) {
    std::uint64_t flops = 0;
    for (const CombinedKernel& k : l.kernels) flops += k.counters.flop_count_sp;
    return static_cast<double>(flops);
  });
  out.memory_access_stage = dominant([](const CombinedLayer& l) {
    std::uint64_t bytes = 0;
    for (const CombinedKernel& k : l.kernels) {
      bytes += k.counters.dram_read_bytes + k.counters.dram_write_bytes;
    }
    return static_cast<double>(bytes);
  });
  return out;
}

}  // namespace strata
