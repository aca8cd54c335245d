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

#ifndef STRATA_CORRELATOR_HPP
#define STRATA_CORRELATOR_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "strata/span.hpp"

namespace strata {

// ---------------------------------------------------------------------------
// Interval tree
//
// Static containment index over closed intervals: built once from a span set,
// then queried for "which stored intervals contain [b, e]?". Balanced over
// the begin-sorted entries with subtree max-end augmentation, so queries cost
// O(log n + k).

class IntervalTree {
 public:
  struct Entry {
    std::uint64_t begin_ns = 0;
    std::uint64_t end_ns = 0;
    std::uint64_t span_id = 0;
    Level level = Level::Model;
  };

  IntervalTree() = default;
  static IntervalTree build(const std::vector<Span>& spans);

  /// Entries whose closed interval contains [begin_ns, end_ns]; an interval
  /// contains itself. Sorted by span_id.
  std::vector<Entry> containing(std::uint64_t begin_ns,
                                std::uint64_t end_ns) const;
  /// Same, restricted to one level.
  std::vector<Entry> containing(std::uint64_t begin_ns, std::uint64_t end_ns,
                                Level level) const;

  std::size_t size() const { return entries_.size(); }

 private:
  void query(std::size_t lo, std::size_t hi, std::uint64_t begin_ns,
             std::uint64_t end_ns, std::vector<Entry>& out) const;

  std::vector<Entry> entries_;   ///< sorted by begin_ns
  std::vector<std::uint64_t> subtree_max_end_;  ///< keyed by subtree mid index
};

// ---------------------------------------------------------------------------
// Entity tree
//
// The correlated hierarchy of one run: the model prediction at the root,
// layers in execution order beneath it, and the kernels each layer launched.

struct KernelExec {
  Span launch;
  /// Set once the matching execution record is fused in; for synchronous
  /// kernel spans launch and exec are the same record.
  std::optional<Span> exec;
  std::optional<KernelMetrics> metrics;

  /// Timing always comes from the execution span.
  std::uint64_t duration_ns() const {
    return exec ? exec->duration_ns() : 0;
  }
  const std::string& kernel_name() const {
    return exec ? exec->name : launch.name;
  }
};

struct LayerExec {
  Span span;
  std::uint32_t layer_index = 0;  ///< 0-based execution order
  std::string layer_type;         ///< from the "layer_type" tag, may be empty
  std::int64_t alloc_bytes = 0;   ///< from the "alloc_bytes" tag, 0 if absent
  std::vector<KernelExec> kernels;

  std::uint64_t duration_ns() const { return span.duration_ns(); }
};

struct ModelRun {
  Span span;
  std::vector<LayerExec> layers;

  std::uint64_t duration_ns() const { return span.duration_ns(); }
};

/// A span the tree could not place, kept visible for diagnostics rather than
/// silently dropped.
struct OrphanSpan {
  std::uint64_t span_id = 0;
  std::string reason;

  bool operator==(const OrphanSpan&) const = default;
};

struct EntityTree {
  ModelRun root;
  std::vector<OrphanSpan> orphans;

  std::size_t kernel_count() const;
};

/// A span with more than one containment-eligible parent and no explicit
/// parent id. Resolved only by explicit parentage or a serialized rerun,
/// never by heuristic tie-break.
struct Ambiguity {
  std::uint64_t span_id = 0;
  std::vector<std::uint64_t> candidate_parents;  ///< sorted by span_id

  bool operator==(const Ambiguity&) const = default;
};

using AmbiguityReport = std::vector<Ambiguity>;

struct CorrelationResult {
  EntityTree tree;
  AmbiguityReport ambiguities;
};

// ---------------------------------------------------------------------------
// Operations

IntervalTree build_tree(const std::vector<Span>& spans);

/// Parent assignment by containment: span p is the parent of span c iff
/// interval(p) ⊇ interval(c) and rank(level(p)) = rank(level(c)) − 1. An
/// explicit parent_id from the tracer takes precedence. Spans with several
/// candidates and no explicit parent land in the AmbiguityReport and are
/// omitted from the tree. Execution-kind spans live on the device timeline
/// and are fused later by correlate_async, not placed by containment.
///
/// Throws TraceError when the bundle has no model span, or when kernel-level
/// spans appear without the layer level enabled (rank adjacency cannot skip
/// a level).
CorrelationResult assign_parents(const TraceBundle& bundle);

/// Fuses each launch span with the execution span sharing its
/// correlation_id: the pair's parent is the launch span's parent, timing and
/// metrics come from the execution span. Unmatched launches and executions
/// become orphan diagnostics; a correlation id shared by two execution (or
/// two launch) spans is an error.
void correlate_async(CorrelationResult& result, const TraceBundle& bundle);

/// assign_parents + correlate_async in one step.
CorrelationResult correlate(const TraceBundle& bundle);

/// True when the report demands a serialized rerun to resolve.
bool demand_serialized_rerun(const AmbiguityReport& report);

/// Resolves ambiguities in `original` using a serialized capture of the same
/// workload: events are matched across the runs by (level, kind, name,
/// occurrence index), the serialized run's parentage is carried over as
/// explicit parent ids, and the original bundle is re-correlated — keeping
/// the original (concurrent) timing. Throws TraceError if the serialized run
/// is itself ambiguous.
CorrelationResult resolve_with_serialized(const TraceBundle& original,
                                          const TraceBundle& serialized);

}  // namespace strata

#endif  // STRATA_CORRELATOR_HPP
