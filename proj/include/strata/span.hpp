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

#ifndef STRATA_SPAN_HPP
#define STRATA_SPAN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace strata {

/// Base class for all faults raised by the toolkit. Data-level problems
/// (validation violations, ambiguities, orphans) are returned as values,
/// not thrown.
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Misuse of an API contract (double finish, mismatched correlation ids).
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Stack levels

/// The tier of the HW/SW stack a span belongs to. API is an auxiliary level
/// for asynchronous launch records; it shares the kernel rank.
enum class Level : std::uint8_t { Model, Layer, Kernel, Api };

/// Model=1 < Layer=2 < Kernel=Api=3.
constexpr int rank(Level level) {
  switch (level) {
    case Level::Model: return 1;
    case Level::Layer: return 2;
    case Level::Kernel:
    case Level::Api: return 3;
  }
  return 0;
}

const char* level_name(Level level);
std::optional<Level> level_from_name(const std::string& name);

using LevelSet = std::set<Level>;

// ---------------------------------------------------------------------------
// Spans

enum class SpanKind : std::uint8_t { Sync, Launch, Exec };

const char* kind_name(SpanKind kind);
std::optional<SpanKind> kind_from_name(const std::string& name);

/// Scalar annotation value: text, integer, or float.
using TagValue = std::variant<std::string, std::int64_t, double>;
using TagMap = std::map<std::string, TagValue>;

/// One timed event at one stack level. Timestamps are integer nanoseconds
/// relative to the run epoch; intervals are closed, and zero-duration spans
/// are legal.
struct Span {
  std::uint64_t span_id = 0;
  std::uint64_t trace_id = 0;
  std::optional<std::uint64_t> parent_id;
  std::string name;
  Level level = Level::Model;
  SpanKind kind = SpanKind::Sync;
  std::uint64_t begin_ns = 0;
  std::uint64_t end_ns = 0;
  std::optional<std::uint64_t> correlation_id;
  TagMap tags;

  std::uint64_t duration_ns() const {
    return end_ns >= begin_ns ? end_ns - begin_ns : 0;
  }

  /// Closed-interval containment; an interval contains itself.
  bool contains(const Span& other) const {
    return begin_ns <= other.begin_ns && other.end_ns <= end_ns;
  }

  bool operator==(const Span&) const = default;
};

// ---------------------------------------------------------------------------
// Kernel metrics

/// Hardware counters captured for one kernel execution. These ride in the
/// tags of EXEC spans under the keys below.
struct KernelMetrics {
  std::uint64_t flop_count_sp = 0;
  std::uint64_t dram_read_bytes = 0;
  std::uint64_t dram_write_bytes = 0;
  double achieved_occupancy = 0.0;  // fraction in [0,1]; percent is display only

  bool operator==(const KernelMetrics&) const = default;
};

inline constexpr const char* kTagFlopCountSp = "flop_count_sp";
inline constexpr const char* kTagDramReadBytes = "dram_read_bytes";
inline constexpr const char* kTagDramWriteBytes = "dram_write_bytes";
inline constexpr const char* kTagAchievedOccupancy = "achieved_occupancy";

// Tag keys for layer attributes reported by framework-level tracers.
inline constexpr const char* kTagLayerType = "layer_type";
inline constexpr const char* kTagAllocBytes = "alloc_bytes";
inline constexpr const char* kTagShape = "shape";

void metrics_to_tags(const KernelMetrics& metrics, TagMap& tags);
/// Returns nullopt when none of the metric keys are present.
std::optional<KernelMetrics> metrics_from_tags(const TagMap& tags);

// ---------------------------------------------------------------------------
// Run metadata

/// Hardware peaks of the system a run executed on. Bandwidth is decimal
/// bytes/s; byte quantities elsewhere are exact bytes (paper-style "MB"
/// columns decode as MiB = 2^20 bytes).
struct SystemSpec {
  std::string name;
  double peak_flops = 0.0;
  double memory_bandwidth_bytes_per_s = 0.0;

  bool operator==(const SystemSpec&) const = default;
};

struct RunMeta {
  std::uint64_t trace_id = 0;
  LevelSet profiling_levels;  // always contains Model
  std::uint32_t batch_size = 1;
  std::uint32_t run_index = 0;
  SystemSpec system;
  bool serialized = false;  // true when parallel events were serialized

  bool operator==(const RunMeta&) const = default;
};

// ---------------------------------------------------------------------------
// Trace bundles

/// All spans plus run metadata for one evaluation run at one profiling-level
/// set. A well-formed bundle holds exactly one MODEL/SYNC span (the model
/// prediction) and is sorted by (begin_ns, rank(level), span_id).
struct TraceBundle {
  RunMeta meta;
  std::vector<Span> spans;

  bool operator==(const TraceBundle&) const = default;

  const Span* model_span() const;
};

/// One broken invariant. span_id is 0 when the violation is not tied to a
/// particular span (e.g. a missing model span).
struct Violation {
  std::uint64_t span_id = 0;
  std::string rule;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

using ValidationReport = std::vector<Violation>;

/// Checks every type invariant of the bundle. Violations are data, not
/// faults; the report is empty iff the bundle is well formed.
ValidationReport validate_bundle(const TraceBundle& bundle);

/// Stable sort into the canonical timeline order. Idempotent.
void sort_timeline(std::vector<Span>& spans);
std::vector<Span> sorted_timeline(std::vector<Span> spans);

}  // namespace strata

#endif  // STRATA_SPAN_HPP
