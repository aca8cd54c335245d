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

#include "strata/span.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace strata {

const char* level_name(Level level) {
  switch (level) {
    case Level::Model: return "model";
    case Level::Layer: return "layer";
    case Level::Kernel: return "kernel";
    case Level::Api: return "api";
  }
  return "?";
}

std::optional<Level> level_from_name(const std::string& name) {
  if (name == "model") return Level::Model;
  if (name == "layer") return Level::Layer;
  if (name == "kernel") return Level::Kernel;
  if (name == "api") return Level::Api;
  return std::nullopt;
}

const char* kind_name(SpanKind kind) {
  switch (kind) {
    case SpanKind::Sync: return "sync";
    case SpanKind::Launch: return "launch";
    case SpanKind::Exec: return "exec";
  }
  return "?";
}

std::optional<SpanKind> kind_from_name(const std::string& name) {
  if (name == "sync") return SpanKind::Sync;
  if (name == "launch") return SpanKind::Launch;
  if (name == "exec") return SpanKind::Exec;
  return std::nullopt;
}

void metrics_to_tags(const KernelMetrics& metrics, TagMap& tags) {
  tags[kTagFlopCountSp] = static_cast<std::int64_t>(metrics.flop_count_sp);
  tags[kTagDramReadBytes] = static_cast<std::int64_t>(metrics.dram_read_bytes);
  tags[kTagDramWriteBytes] = static_cast<std::int64_t>(metrics.dram_write_bytes);
  tags[kTagAchievedOccupancy] = metrics.achieved_occupancy;
}

namespace {

std::optional<std::int64_t> int_tag(const TagMap& tags, const char* key) {
  auto it = tags.find(key);
  if (it == tags.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::int64_t>(&it->second)) return *v;
  if (const auto* d = std::get_if<double>(&it->second))
    return static_cast<std::int64_t>(*d);
  return std::nullopt;
}

std::optional<double> float_tag(const TagMap& tags, const char* key) {
  auto it = tags.find(key);
  if (it == tags.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* v = std::get_if<std::int64_t>(&it->second))
    return static_cast<double>(*v);
  return std::nullopt;
}

}  // namespace

std::optional<KernelMetrics> metrics_from_tags(const TagMap& tags) {
  const auto flops = int_tag(tags, kTagFlopCountSp);
  const auto reads = int_tag(tags, kTagDramReadBytes);
  const auto writes = int_tag(tags, kTagDramWriteBytes);
  const auto occ = float_tag(tags, kTagAchievedOccupancy);
  if (!flops && !reads && !writes && !occ) return std::nullopt;
  KernelMetrics m;
  m.flop_count_sp = flops ? static_cast<std::uint64_t>(std::max<std::int64_t>(*flops, 0)) : 0;
  m.dram_read_bytes = reads ? static_cast<std::uint64_t>(std::max<std::int64_t>(*reads, 0)) : 0;
  m.dram_write_bytes = writes ? static_cast<std::uint64_t>(std::max<std::int64_t>(*writes, 0)) : 0;
  m.achieved_occupancy = occ.value_or(0.0);
  return m;
}

const Span* TraceBundle::model_span() const {
  for (const auto& span : spans) {
    if (span.level == Level::Model && span.kind == SpanKind::Sync) return &span;
  }
  return nullptr;
}

namespace {

auto timeline_key(const Span& span) {
  return std::make_tuple(span.begin_ns, rank(span.level), span.span_id);
}

}  // namespace

void sort_timeline(std::vector<Span>& spans) {
  std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return timeline_key(a) < timeline_key(b);
  });
}

std::vector<Span> sorted_timeline(std::vector<Span> spans) {
  sort_timeline(spans);
  return spans;
}

ValidationReport validate_bundle(const TraceBundle& bundle) {
  ValidationReport report;
  std::unordered_set<std::uint64_t> seen_ids;
  std::size_t model_spans = 0;

  for (std::size_t i = 0; i < bundle.spans.size(); ++i) {
    const Span& span = bundle.spans[i];

    if (span.end_ns < span.begin_ns)
      report.push_back({span.span_id, "negative duration",
                        "end_ns precedes begin_ns"});

    const bool needs_cid =
        span.kind == SpanKind::Launch || span.kind == SpanKind::Exec;
    if (needs_cid && !span.correlation_id)
      report.push_back({span.span_id, "correlation_id missing",
                        "launch/exec spans require a correlation_id"});
    if (!needs_cid && span.correlation_id)
      report.push_back({span.span_id, "correlation_id on sync span",
                        "sync spans must not carry a correlation_id"});

    if (!seen_ids.insert(span.span_id).second)
      report.push_back({span.span_id, "duplicate span_id", ""});

    if (span.trace_id != bundle.meta.trace_id)
      report.push_back({span.span_id, "trace_id mismatch",
                        "span belongs to a different trace"});

    if (span.level == Level::Model && span.kind == SpanKind::Sync)
      ++model_spans;

    if (i > 0 && timeline_key(bundle.spans[i - 1]) > timeline_key(span))
      report.push_back({span.span_id, "out of order",
                        "timeline must be sorted by (begin_ns, rank, span_id)"});

    // Metric tags, when present, must honor the KernelMetrics invariants.
    for (const char* key :
         {kTagFlopCountSp, kTagDramReadBytes, kTagDramWriteBytes}) {
      auto it = span.tags.find(key);
      if (it == span.tags.end()) continue;
      if (const auto* v = std::get_if<std::int64_t>(&it->second); v && *v < 0)
        report.push_back({span.span_id, "negative metric", key});
    }
    if (auto it = span.tags.find(kTagAchievedOccupancy); it != span.tags.end()) {
      if (const auto* d = std::get_if<double>(&it->second);
          d && (*d < 0.0 || *d > 1.0))
        report.push_back({span.span_id, "occupancy out of range",
                          "achieved_occupancy must lie in [0,1]"});
    }
  }

  if (model_spans == 0)
    report.push_back({0, "model span missing",
                      "a bundle requires exactly one model/sync span"});
  else if (model_spans > 1)
    report.push_back({0, "multiple model spans",
                      "a bundle requires exactly one model/sync span"});

  if (!bundle.meta.profiling_levels.contains(Level::Model))
    report.push_back({0, "model level disabled",
                      "profiling_levels must always contain model"});

  return report;
}

}  // namespace strata
