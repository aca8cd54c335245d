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

#ifndef STRATA_COLLECTOR_HPP
#define STRATA_COLLECTOR_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "strata/span.hpp"

namespace strata {

struct IngestError : TraceError {
  using TraceError::TraceError;
};

struct MergeError : TraceError {
  using TraceError::TraceError;
};

struct IoError : TraceError {
  using TraceError::TraceError;
};

// ---------------------------------------------------------------------------
// JSONL wire format
//
// One record per line. Field names are part of the wire contract:
//   meta: {"rec":"meta","trace_id":u64,"batch_size":u32,"run_index":u32,
//          "levels":["model","layer","kernel"],"serialized":bool,
//          "system":{"name":str,"peak_flops":f64,"mem_bw":f64}}
//   span: {"rec":"span","trace_id":u64,"span_id":u64,"parent_id":u64|null,
//          "name":str,"level":"model"|"layer"|"kernel"|"api",
//          "kind":"sync"|"launch"|"exec","begin_ns":u64,"end_ns":u64,
//          "correlation_id":u64|null,"tags":{...}}
// Unknown fields and unknown record kinds are ignored for forward
// compatibility; absent optional fields default to "not present".

std::string encode_meta_record(const RunMeta& meta);
std::string encode_span_record(const Span& span);

/// Parses a standalone system-spec JSON object (same shape as the "system"
/// sub-object of a meta record).
SystemSpec parse_system_spec(const std::string& json_text);
std::string encode_system_spec(const SystemSpec& spec);
SystemSpec load_system_spec(const std::string& path);

// ---------------------------------------------------------------------------
// Ingestion

/// Reads one JSONL stream holding exactly one meta record and the spans of
/// one trace. Returns the validated, sorted bundle. Throws IngestError on
/// malformed lines (with the 1-based line number), a missing or duplicate
/// meta record, mixed trace ids, or validation violations (the diagnostic
/// lists every offending span and line).
TraceBundle ingest(std::istream& stream);
TraceBundle ingest_string(const std::string& text);

/// Union of per-tracer bundles for the same run. All inputs must agree on
/// trace_id and RunMeta; duplicate span ids are rejected. Commutative and
/// associative up to the ordering invariant.
TraceBundle merge(const std::vector<TraceBundle>& bundles);

void persist(const TraceBundle& bundle, const std::string& path);
TraceBundle load(const std::string& path);

/// Serializes without touching the filesystem; persist() writes exactly this.
std::string to_jsonl(const TraceBundle& bundle);

// ---------------------------------------------------------------------------
// Run sets

/// Bundles of one experiment grouped by (batch_size, profiling_levels).
/// Within a group every bundle shares batch size, level set, and system.
struct RunSet {
  struct GroupKey {
    std::uint32_t batch_size = 0;
    LevelSet levels;

    auto operator<=>(const GroupKey&) const = default;
  };

  SystemSpec system;
  std::map<GroupKey, std::vector<TraceBundle>> groups;

  /// Adds a bundle, checking system consistency across the whole set.
  void add(TraceBundle bundle);

  static RunSet from_bundles(std::vector<TraceBundle> bundles);
};

}  // namespace strata

#endif  // STRATA_COLLECTOR_HPP
