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

// Shared generators and brute-force oracles. Everything here is written the
// straightforward O(n^2) way on purpose: the production code is checked
// against these, so they must stay independent of it.

#ifndef STRATA_TESTS_TEST_SUPPORT_HPP
#define STRATA_TESTS_TEST_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "strata/correlator.hpp"
#include "strata/span.hpp"

namespace strata::testing {

// ---------------------------------------------------------------------------
// Scalar oracles

/// Sort-slice reference for the trimmed mean: sort ascending, slice off
/// floor(f*n) at each end, average the rest left to right.
inline double trimmed_mean_oracle(std::vector<double> values, double fraction) {
  std::sort(values.begin(), values.end());
  const auto drop = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(values.size())));
  double sum = 0.0;
  for (std::size_t i = drop; i < values.size() - drop; ++i) sum += values[i];
  return sum / static_cast<double>(values.size() - 2 * drop);
}

// ---------------------------------------------------------------------------
// Interval-query oracle

/// Linear scan over every stored interval; the tree must return exactly this.
inline std::vector<IntervalTree::Entry> linear_containing(
    const std::vector<Span>& spans, std::uint64_t begin_ns,
    std::uint64_t end_ns, std::optional<Level> level = std::nullopt) {
  std::vector<IntervalTree::Entry> out;
  for (const Span& span : spans) {
    if (level && span.level != *level) continue;
    if (span.begin_ns <= begin_ns && end_ns <= span.end_ns) {
      out.push_back({span.begin_ns, span.end_ns, span.span_id, span.level});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.span_id < b.span_id; });
  return out;
}

inline bool entries_equal(const std::vector<IntervalTree::Entry>& a,
                          const std::vector<IntervalTree::Entry>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].span_id != b[i].span_id || a[i].begin_ns != b[i].begin_ns ||
        a[i].end_ns != b[i].end_ns || a[i].level != b[i].level) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Parent-assignment oracle

/// The containment rule evaluated pairwise over the whole bundle, two passes:
/// layers nest under the model span, kernels under the layers that were
/// actually placed. An explicit parent id wins when it names a placed span
/// one rank above; several containment candidates with no explicit parent is
/// an ambiguity; zero candidates is an orphan. Execution records stay out —
/// they live on the device timeline and are fused by correlation id.
struct ParentOracle {
  std::map<std::uint64_t, std::uint64_t> parent_of;  ///< resolved spans only
  std::vector<Ambiguity> ambiguities;
  std::set<std::uint64_t> orphan_ids;
};

inline ParentOracle parent_oracle(const TraceBundle& bundle) {
  ParentOracle oracle;
  const Span* model = nullptr;
  for (const Span& span : bundle.spans) {
    if (span.level == Level::Model && span.kind == SpanKind::Sync) {
      model = &span;
      break;
    }
  }

  std::vector<const Span*> placed_layers;
  for (const Span& child : bundle.spans) {
    if (child.level != Level::Layer) continue;
    if (child.kind != SpanKind::Sync) {
      oracle.orphan_ids.insert(child.span_id);
      continue;
    }
    const bool placed = child.parent_id
                            ? (model && *child.parent_id == model->span_id)
                            : (model && model->contains(child));
    if (placed) {
      oracle.parent_of[child.span_id] = model->span_id;
      placed_layers.push_back(&child);
    } else {
      oracle.orphan_ids.insert(child.span_id);
    }
  }

  for (const Span& child : bundle.spans) {
    const bool launch =
        child.kind == SpanKind::Launch &&
        (child.level == Level::Kernel || child.level == Level::Api);
    const bool sync_kernel =
        child.kind == SpanKind::Sync && child.level == Level::Kernel;
    if (!launch && !sync_kernel) continue;

    if (child.parent_id) {
      const bool known = std::any_of(
          placed_layers.begin(), placed_layers.end(),
          [&](const Span* layer) { return layer->span_id == *child.parent_id; });
      if (known) {
        oracle.parent_of[child.span_id] = *child.parent_id;
      } else {
        oracle.orphan_ids.insert(child.span_id);
      }
      continue;
    }
    std::vector<std::uint64_t> candidates;
    for (const Span* layer : placed_layers) {
      if (layer->contains(child)) candidates.push_back(layer->span_id);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() == 1) {
      oracle.parent_of[child.span_id] = candidates.front();
    } else if (candidates.empty()) {
      oracle.orphan_ids.insert(child.span_id);
    } else {
      oracle.ambiguities.push_back({child.span_id, candidates});
    }
  }
  std::sort(oracle.ambiguities.begin(), oracle.ambiguities.end(),
            [](const Ambiguity& a, const Ambiguity& b) {
              return a.span_id < b.span_id;
            });
  return oracle;
}

/// Orphan ids actually reported by a correlation result.
inline std::set<std::uint64_t> orphan_id_set(const EntityTree& tree) {
  std::set<std::uint64_t> out;
  for (const OrphanSpan& orphan : tree.orphans) out.insert(orphan.span_id);
  return out;
}

/// The parent relation the entity tree actually encodes, flattened for
/// comparison against the oracle.
inline std::map<std::uint64_t, std::uint64_t> tree_parent_map(
    const EntityTree& tree) {
  std::map<std::uint64_t, std::uint64_t> out;
  for (const LayerExec& layer : tree.root.layers) {
    out[layer.span.span_id] = tree.root.span.span_id;
    for (const KernelExec& kernel : layer.kernels) {
      out[kernel.launch.span_id] = layer.span.span_id;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random bundle generators

inline RunMeta nested_meta(std::uint64_t trace_id) {
  RunMeta meta;
  meta.trace_id = trace_id;
  meta.profiling_levels = {Level::Model, Level::Layer, Level::Kernel};
  meta.batch_size = 1;
  meta.system = {"testbed", 1.0e12, 1.0e11};
  return meta;
}

/// A properly nested timeline: one model span, sequential layers separated by
/// gaps of at least one tick, kernels nested inside their layer. Every child
/// has exactly one containing candidate, so the parent assignment is fully
/// determined. A slice of kernels additionally carries its (correct) explicit
/// parent id to keep that path exercised.
inline TraceBundle random_nested_bundle(std::mt19937_64& rng,
                                        std::size_t max_spans,
                                        double explicit_fraction = 0.2) {
  TraceBundle bundle;
  bundle.meta = nested_meta(1 + rng() % 1000);

  Span model;
  model.span_id = 1;
  model.trace_id = bundle.meta.trace_id;
  model.name = "model";
  model.level = Level::Model;
  model.begin_ns = rng() % 100;

  std::uint64_t next_id = 2;
  std::uint64_t cursor = model.begin_ns;
  std::vector<Span> spans;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  while (spans.size() + 1 < max_spans) {
    cursor += 1 + rng() % 7;  // inter-layer gap, >= 1 tick
    Span layer;
    layer.span_id = next_id++;
    layer.trace_id = bundle.meta.trace_id;
    layer.name = "layer_" + std::to_string(layer.span_id);
    layer.level = Level::Layer;
    layer.begin_ns = cursor;

    const std::size_t budget = max_spans - spans.size() - 1;
    const std::size_t kernels = budget == 0 ? 0 : rng() % std::min<std::size_t>(budget, 9);
    std::uint64_t kcursor = cursor + rng() % 4;
    std::vector<Span> nested;
    for (std::size_t k = 0; k < kernels; ++k) {
      Span kernel;
      kernel.span_id = next_id++;
      kernel.trace_id = bundle.meta.trace_id;
      kernel.name = "kernel_" + std::to_string(kernel.span_id);
      kernel.level = Level::Kernel;
      kernel.begin_ns = kcursor;
      kernel.end_ns = kcursor + rng() % 50;  // zero-duration kernels are legal
      if (unit(rng) < explicit_fraction) kernel.parent_id = layer.span_id;
      kcursor = kernel.end_ns + 1 + rng() % 4;
      nested.push_back(kernel);
    }
    layer.end_ns = std::max(kcursor, layer.begin_ns + 1 + rng() % 20);
    cursor = layer.end_ns;
    spans.push_back(layer);
    spans.insert(spans.end(), nested.begin(), nested.end());
  }

  model.end_ns = cursor + 1 + rng() % 10;
  spans.push_back(model);
  sort_timeline(spans);
  bundle.spans = std::move(spans);
  return bundle;
}

/// Launch/exec pairs under one wide layer, correlation ids assigned through a
/// random permutation and the exec records shuffled away from their launches.
inline TraceBundle random_async_bundle(std::mt19937_64& rng,
                                       std::size_t pairs) {
  TraceBundle bundle;
  bundle.meta = nested_meta(7 + rng() % 1000);

  const std::uint64_t launch_span = 4 * (pairs + 2);
  Span model;
  model.span_id = 1;
  model.trace_id = bundle.meta.trace_id;
  model.name = "model";
  model.level = Level::Model;
  model.begin_ns = 0;
  model.end_ns = launch_span + 10;

  Span layer = model;
  layer.span_id = 2;
  layer.name = "layer";
  layer.level = Level::Layer;
  layer.begin_ns = 1;
  layer.end_ns = launch_span + 5;

  std::vector<std::uint64_t> cids(pairs);
  for (std::size_t i = 0; i < pairs; ++i) cids[i] = 1000 + i;
  std::shuffle(cids.begin(), cids.end(), rng);

  std::vector<Span> spans{model, layer};
  std::uint64_t next_id = 3;
  for (std::size_t i = 0; i < pairs; ++i) {
    Span launch;
    launch.span_id = next_id++;
    launch.trace_id = bundle.meta.trace_id;
    launch.name = "k" + std::to_string(cids[i]);
    launch.level = Level::Kernel;
    launch.kind = SpanKind::Launch;
    launch.begin_ns = 2 + 3 * i;
    launch.end_ns = launch.begin_ns + 1;
    launch.correlation_id = cids[i];
    spans.push_back(launch);
  }
  std::vector<Span> execs;
  for (std::size_t i = 0; i < pairs; ++i) {
    Span exec;
    exec.span_id = next_id++;
    exec.trace_id = bundle.meta.trace_id;
    exec.name = "k" + std::to_string(cids[i]);
    exec.level = Level::Kernel;
    exec.kind = SpanKind::Exec;
    exec.begin_ns = 5 + 3 * i + rng() % 97;
    exec.end_ns = exec.begin_ns + 1 + rng() % 40;
    exec.correlation_id = cids[i];
    execs.push_back(exec);
  }
  std::shuffle(execs.begin(), execs.end(), rng);
  spans.insert(spans.end(), execs.begin(), execs.end());
  sort_timeline(spans);
  bundle.spans = std::move(spans);
  return bundle;
}

}  // namespace strata::testing

#endif  // STRATA_TESTS_TEST_SUPPORT_HPP
