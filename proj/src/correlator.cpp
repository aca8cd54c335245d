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

#include "strata/correlator.hpp"

#include <algorithm>
#include <map>
#include <tuple>
#include <unordered_map>

namespace strata {

namespace {

std::string span_ref(const Span& span) {
  return "span " + std::to_string(span.span_id) + " ('" + span.name + "')";
}

bool is_kernel_launch(const Span& span) {
  return span.kind == SpanKind::Launch &&
         (span.level == Level::Kernel || span.level == Level::Api);
}

bool is_exec(const Span& span) { return span.kind == SpanKind::Exec; }

/// Synchronous kernel record: launch and execution collapsed into one span.
bool is_sync_kernel(const Span& span) {
  return span.kind == SpanKind::Sync && span.level == Level::Kernel;
}

std::optional<std::string> tag_string(const TagMap& tags, const char* key) {
  auto it = tags.find(key);
  if (it == tags.end()) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  return std::nullopt;
}

std::optional<std::int64_t> tag_int(const TagMap& tags, const char* key) {
  auto it = tags.find(key);
  if (it == tags.end()) return std::nullopt;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  if (const auto* d = std::get_if<double>(&it->second)) {
    return static_cast<std::int64_t>(*d);
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// IntervalTree

IntervalTree IntervalTree::build(const std::vector<Span>& spans) {
  IntervalTree tree;
  tree.entries_.reserve(spans.size());
  for (const Span& span : spans) {
    tree.entries_.push_back(
        Entry{span.begin_ns, span.end_ns, span.span_id, span.level});
  }
  std::sort(tree.entries_.begin(), tree.entries_.end(),
            [](const Entry& a, const Entry& b) {
              return std::tie(a.begin_ns, a.span_id) <
                     std::tie(b.begin_ns, b.span_id);
            });
  // Subtree max-end, stored at each recursion node's midpoint index.
  tree.subtree_max_end_.assign(tree.entries_.size(), 0);
  auto fill = [&tree](auto&& self, std::size_t lo,
                      std::size_t hi) -> std::uint64_t {
    if (lo >= hi) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t max_end = tree.entries_[mid].end_ns;
    max_end = std::max(max_end, self(self, lo, mid));
    max_end = std::max(max_end, self(self, mid + 1, hi));
    tree.subtree_max_end_[mid] = max_end;
    return max_end;
  };
  fill(fill, 0, tree.entries_.size());
  return tree;
}

void IntervalTree::query(std::size_t lo, std::size_t hi, std::uint64_t begin_ns,
                         std::uint64_t end_ns,
                         std::vector<Entry>& out) const {
  if (lo >= hi) return;
  std::size_t mid = lo + (hi - lo) / 2;
  // Nothing in this subtree reaches end_ns: no entry can contain the query.
  if (subtree_max_end_[mid] < end_ns) return;
  query(lo, mid, begin_ns, end_ns, out);
  const Entry& entry = entries_[mid];
  if (entry.begin_ns <= begin_ns) {
    if (entry.end_ns >= end_ns) out.push_back(entry);
    // Right subtree begins are >= this begin; still candidates.
    query(mid + 1, hi, begin_ns, end_ns, out);
  }
  // Otherwise every right-subtree begin exceeds begin_ns: prune.
}

std::vector<IntervalTree::Entry> IntervalTree::containing(
    std::uint64_t begin_ns, std::uint64_t end_ns) const {
  std::vector<Entry> out;
  query(0, entries_.size(), begin_ns, end_ns, out);
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
    return a.span_id < b.span_id;
  });
  return out;
}

std::vector<IntervalTree::Entry> IntervalTree::containing(
    std::uint64_t begin_ns, std::uint64_t end_ns, Level level) const {
  std::vector<Entry> out = containing(begin_ns, end_ns);
  std::erase_if(out, [level](const Entry& e) { return e.level != level; });
  return out;
}

IntervalTree build_tree(const std::vector<Span>& spans) {
  return IntervalTree::build(spans);
}

// ---------------------------------------------------------------------------
// Parent assignment

std::size_t EntityTree::kernel_count() const {
  std::size_t count = 0;
  for (const LayerExec& layer : root.layers) count += layer.kernels.size();
  return count;
}

CorrelationResult assign_parents(const TraceBundle& bundle) {
  const Span* model = bundle.model_span();
  if (model == nullptr) {
    throw TraceError("bundle has no model span; nothing to correlate");
  }
  for (const Span& span : bundle.spans) {
    if (span.level == Level::Model && span.kind == SpanKind::Sync &&
        span.span_id != model->span_id) {
      throw TraceError("bundle has more than one model span");
    }
    if ((span.level == Level::Kernel || span.level == Level::Api) &&
        !bundle.meta.profiling_levels.contains(Level::Layer)) {
      throw TraceError(
          span_ref(span) +
          " is kernel-level but the run did not profile the layer level; "
          "parents cannot skip a level");
    }
  }

  CorrelationResult result;
  result.tree.root.span = *model;

  // Layers can only nest under the single model span.
  IntervalTree scope_tree = IntervalTree::build({*model});

  // Layers first. With a single model root a layer has at most one
  // containment candidate, so layers are orphaned or placed, never ambiguous.
  std::vector<LayerExec> layers;
  for (const Span& span : bundle.spans) {
    if (span.level != Level::Layer) continue;
    if (span.kind != SpanKind::Sync) {
      result.tree.orphans.push_back(
          {span.span_id, "layer-level span with non-sync kind"});
      continue;
    }
    bool placed = false;
    if (span.parent_id) {
      placed = *span.parent_id == model->span_id;
      if (!placed) {
        result.tree.orphans.push_back(
            {span.span_id, "explicit parent " + std::to_string(*span.parent_id) +
                               " is not the model span"});
        continue;
      }
    } else {
      auto candidates =
          scope_tree.containing(span.begin_ns, span.end_ns, Level::Model);
      placed = !candidates.empty();
      if (!placed) {
        result.tree.orphans.push_back(
            {span.span_id, "outside the model interval"});
        continue;
      }
    }
    LayerExec layer;
    layer.span = span;
    if (auto type = tag_string(span.tags, kTagLayerType)) {
      layer.layer_type = *type;
    }
    if (auto alloc = tag_int(span.tags, kTagAllocBytes)) {
      layer.alloc_bytes = *alloc;
    }
    layers.push_back(std::move(layer));
  }
  std::sort(layers.begin(), layers.end(),
            [](const LayerExec& a, const LayerExec& b) {
              return std::tie(a.span.begin_ns, a.span.span_id) <
                     std::tie(b.span.begin_ns, b.span.span_id);
            });
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].layer_index = static_cast<std::uint32_t>(i);
  }
  result.tree.root.layers = std::move(layers);

  std::unordered_map<std::uint64_t, std::size_t> layer_by_span_id;
  std::vector<Span> placed_layer_spans;
  for (std::size_t i = 0; i < result.tree.root.layers.size(); ++i) {
    layer_by_span_id[result.tree.root.layers[i].span.span_id] = i;
    placed_layer_spans.push_back(result.tree.root.layers[i].span);
  }
  // Kernels attach only to layers that made it into the tree; an orphaned
  // layer's interval must not capture (or crash on) its kernels.
  IntervalTree layer_tree = IntervalTree::build(placed_layer_spans);

  // Kernel launches and synchronous kernel records.
  for (const Span& span : bundle.spans) {
    bool launch = is_kernel_launch(span);
    bool sync_kernel = is_sync_kernel(span);
    if (!launch && !sync_kernel) continue;

    std::optional<std::size_t> parent_index;
    if (span.parent_id) {
      auto it = layer_by_span_id.find(*span.parent_id);
      if (it == layer_by_span_id.end()) {
        result.tree.orphans.push_back(
            {span.span_id, "explicit parent " + std::to_string(*span.parent_id) +
                               " is not a layer in the tree"});
        continue;
      }
      parent_index = it->second;
    } else {
      auto candidates =
          layer_tree.containing(span.begin_ns, span.end_ns, Level::Layer);
      if (candidates.empty()) {
        result.tree.orphans.push_back(
            {span.span_id, "contained in no layer interval"});
        continue;
      }
      if (candidates.size() > 1) {
        Ambiguity ambiguity;
        ambiguity.span_id = span.span_id;
        for (const auto& entry : candidates) {
          ambiguity.candidate_parents.push_back(entry.span_id);
        }
        result.ambiguities.push_back(std::move(ambiguity));
        continue;
      }
      parent_index = layer_by_span_id.at(candidates.front().span_id);
    }

    KernelExec node;
    node.launch = span;
    if (sync_kernel) {
      node.exec = span;
      node.metrics = metrics_from_tags(span.tags);
    }
    result.tree.root.layers[*parent_index].kernels.push_back(std::move(node));
  }

  for (LayerExec& layer : result.tree.root.layers) {
    std::sort(layer.kernels.begin(), layer.kernels.end(),
              [](const KernelExec& a, const KernelExec& b) {
                return std::tie(a.launch.begin_ns, a.launch.span_id) <
                       std::tie(b.launch.begin_ns, b.launch.span_id);
              });
  }
  std::sort(result.ambiguities.begin(), result.ambiguities.end(),
            [](const Ambiguity& a, const Ambiguity& b) {
              return a.span_id < b.span_id;
            });
  return result;
}

// ---------------------------------------------------------------------------
// Async fusion

void correlate_async(CorrelationResult& result, const TraceBundle& bundle) {
  std::unordered_map<std::uint64_t, const Span*> exec_by_cid;
  for (const Span& span : bundle.spans) {
    if (!is_exec(span)) continue;
    if (!span.correlation_id) {
      result.tree.orphans.push_back(
          {span.span_id, "execution record without correlation id"});
      continue;
    }
    auto [it, inserted] = exec_by_cid.emplace(*span.correlation_id, &span);
    if (!inserted) {
      throw TraceError("correlation id " + std::to_string(*span.correlation_id) +
                       " is shared by execution spans " +
                       std::to_string(it->second->span_id) + " and " +
                       std::to_string(span.span_id));
    }
  }
  {
    std::unordered_map<std::uint64_t, std::uint64_t> launch_by_cid;
    for (const Span& span : bundle.spans) {
      if (!is_kernel_launch(span) || !span.correlation_id) continue;
      auto [it, inserted] =
          launch_by_cid.emplace(*span.correlation_id, span.span_id);
      if (!inserted) {
        throw TraceError("correlation id " +
                         std::to_string(*span.correlation_id) +
                         " is shared by launch spans " +
                         std::to_string(it->second) + " and " +
                         std::to_string(span.span_id));
      }
    }
  }

  // Fuse the launches that made it into the tree.
  for (LayerExec& layer : result.tree.root.layers) {
    for (auto it = layer.kernels.begin(); it != layer.kernels.end();) {
      KernelExec& node = *it;
      if (node.exec) {  // synchronous kernel record, already complete
        ++it;
        continue;
      }
      if (!node.launch.correlation_id) {
        result.tree.orphans.push_back(
            {node.launch.span_id, "launch without correlation id"});
        it = layer.kernels.erase(it);
        continue;
      }
      auto found = exec_by_cid.find(*node.launch.correlation_id);
      if (found == exec_by_cid.end()) {
        result.tree.orphans.push_back(
            {node.launch.span_id, "launch has no matching execution record"});
        it = layer.kernels.erase(it);
        continue;
      }
      node.exec = *found->second;
      node.metrics = metrics_from_tags(found->second->tags);
      exec_by_cid.erase(found);
      ++it;
    }
  }

  // Launches outside the tree (orphaned or ambiguous) still consume their
  // execution records so those are not double-reported.
  for (const Span& span : bundle.spans) {
    if (is_kernel_launch(span) && span.correlation_id) {
      exec_by_cid.erase(*span.correlation_id);
    }
  }
  std::vector<const Span*> leftover;
  leftover.reserve(exec_by_cid.size());
  for (const auto& [cid, span] : exec_by_cid) leftover.push_back(span);
  std::sort(leftover.begin(), leftover.end(),
            [](const Span* a, const Span* b) { return a->span_id < b->span_id; });
  for (const Span* span : leftover) {
    result.tree.orphans.push_back(
        {span->span_id, "execution record without matching launch"});
  }
}

CorrelationResult correlate(const TraceBundle& bundle) {
  CorrelationResult result = assign_parents(bundle);
  correlate_async(result, bundle);
  return result;
}

bool demand_serialized_rerun(const AmbiguityReport& report) {
  return !report.empty();
}

// ---------------------------------------------------------------------------
// Serialized-rerun resolution

namespace {

/// Cross-run event identity: level, kind, name, and occurrence index in
/// timeline order. Execution order of a fixed workload is stable, so the
/// i-th occurrence of an event names the same logical work in both runs.
using EventKey = std::tuple<std::uint8_t, std::uint8_t, std::string, std::size_t>;

std::map<EventKey, std::uint64_t> index_events(const TraceBundle& bundle) {
  std::vector<Span> ordered = sorted_timeline(bundle.spans);
  std::map<std::tuple<std::uint8_t, std::uint8_t, std::string>, std::size_t>
      occurrence;
  std::map<EventKey, std::uint64_t> by_key;
  for (const Span& span : ordered) {
    auto base = std::make_tuple(static_cast<std::uint8_t>(span.level),
                                static_cast<std::uint8_t>(span.kind), span.name);
    std::size_t index = occurrence[base]++;
    by_key.emplace(EventKey{static_cast<std::uint8_t>(span.level),
                            static_cast<std::uint8_t>(span.kind), span.name,
                            index},
                   span.span_id);
  }
  return by_key;
}

std::map<std::uint64_t, EventKey> invert(
    const std::map<EventKey, std::uint64_t>& by_key) {
  std::map<std::uint64_t, EventKey> by_id;
  for (const auto& [key, id] : by_key) by_id.emplace(id, key);
  return by_id;
}

}  // namespace

CorrelationResult resolve_with_serialized(const TraceBundle& original,
                                          const TraceBundle& serialized) {
  CorrelationResult serialized_result = assign_parents(serialized);
  if (!serialized_result.ambiguities.empty()) {
    throw TraceError("serialized run is itself ambiguous (" +
                     std::to_string(serialized_result.ambiguities.size()) +
                     " span(s)); cannot resolve");
  }

  // Parent relation observed in the serialized run.
  std::unordered_map<std::uint64_t, std::uint64_t> serialized_parent;
  const ModelRun& root = serialized_result.tree.root;
  for (const LayerExec& layer : root.layers) {
    serialized_parent[layer.span.span_id] = root.span.span_id;
    for (const KernelExec& kernel : layer.kernels) {
      serialized_parent[kernel.launch.span_id] = layer.span.span_id;
    }
  }

  auto original_by_key = index_events(original);
  auto serialized_by_key = index_events(serialized);
  auto serialized_key_by_id = invert(serialized_by_key);

  CorrelationResult first_pass = assign_parents(original);
  TraceBundle patched = original;
  std::unordered_map<std::uint64_t, Span*> patched_by_id;
  for (Span& span : patched.spans) patched_by_id[span.span_id] = &span;
  std::map<std::uint64_t, EventKey> original_key_by_id = invert(original_by_key);

  for (const Ambiguity& ambiguity : first_pass.ambiguities) {
    auto key_it = original_key_by_id.find(ambiguity.span_id);
    if (key_it == original_key_by_id.end()) continue;
    auto twin_it = serialized_by_key.find(key_it->second);
    if (twin_it == serialized_by_key.end()) continue;  // stays ambiguous
    auto parent_it = serialized_parent.find(twin_it->second);
    if (parent_it == serialized_parent.end()) continue;
    auto parent_key_it = serialized_key_by_id.find(parent_it->second);
    if (parent_key_it == serialized_key_by_id.end()) continue;
    auto original_parent_it = original_by_key.find(parent_key_it->second);
    if (original_parent_it == original_by_key.end()) continue;
    patched_by_id.at(ambiguity.span_id)->parent_id = original_parent_it->second;
  }

  return correlate(patched);
}

}  // namespace strata
