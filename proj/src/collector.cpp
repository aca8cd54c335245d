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

#include "strata/collector.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace strata {

using nlohmann::json;

namespace {

json tag_value_to_json(const TagValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  return std::get<double>(value);
}

TagValue tag_value_from_json(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_float()) return value.get<double>();
  if (value.is_number_integer() || value.is_number_unsigned()) {
    return value.get<std::int64_t>();
  }
  if (value.is_boolean()) return static_cast<std::int64_t>(value.get<bool>());
  throw IngestError("tag value must be a string or number");
}

json meta_to_json(const RunMeta& meta) {
  json levels = json::array();
  for (Level level : meta.profiling_levels) levels.push_back(level_name(level));
  return json{
      {"rec", "meta"},
      {"trace_id", meta.trace_id},
      {"batch_size", meta.batch_size},
      {"run_index", meta.run_index},
      {"levels", std::move(levels)},
      {"serialized", meta.serialized},
      {"system",
       {{"name", meta.system.name},
        {"peak_flops", meta.system.peak_flops},
        {"mem_bw", meta.system.memory_bandwidth_bytes_per_s}}},
  };
}

json span_to_json(const Span& span) {
  json tags = json::object();
  for (const auto& [key, value] : span.tags) tags[key] = tag_value_to_json(value);
  json record{
      {"rec", "span"},
      {"trace_id", span.trace_id},
      {"span_id", span.span_id},
      {"name", span.name},
      {"level", level_name(span.level)},
      {"kind", kind_name(span.kind)},
      {"begin_ns", span.begin_ns},
      {"end_ns", span.end_ns},
      {"tags", std::move(tags)},
  };
  record["parent_id"] =
      span.parent_id ? json(*span.parent_id) : json(nullptr);
  record["correlation_id"] =
      span.correlation_id ? json(*span.correlation_id) : json(nullptr);
  return record;
}

std::uint64_t require_u64(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_number()) {
    throw IngestError(std::string("missing or non-numeric field '") + field +
                      "'");
  }
  if (it->is_number_float()) {
    throw IngestError(std::string("field '") + field +
                      "' must be an integer");
  }
  if (it->is_number_integer() && !it->is_number_unsigned() &&
      it->get<std::int64_t>() < 0) {
    throw IngestError(std::string("field '") + field +
                      "' must be non-negative");
  }
  return it->get<std::uint64_t>();
}

std::string require_string(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string()) {
    throw IngestError(std::string("missing or non-string field '") + field +
                      "'");
  }
  return it->get<std::string>();
}

SystemSpec system_from_json(const json& value) {
  if (!value.is_object()) throw IngestError("'system' must be an object");
  SystemSpec spec;
  spec.name = require_string(value, "name");
  auto peak = value.find("peak_flops");
  auto bw = value.find("mem_bw");
  if (peak == value.end() || !peak->is_number()) {
    throw IngestError("missing or non-numeric field 'peak_flops'");
  }
  if (bw == value.end() || !bw->is_number()) {
    throw IngestError("missing or non-numeric field 'mem_bw'");
  }
  spec.peak_flops = peak->get<double>();
  spec.memory_bandwidth_bytes_per_s = bw->get<double>();
  return spec;
}

RunMeta meta_from_json(const json& record) {
  RunMeta meta;
  meta.trace_id = require_u64(record, "trace_id");
  meta.batch_size = static_cast<std::uint32_t>(require_u64(record, "batch_size"));
  meta.run_index = static_cast<std::uint32_t>(require_u64(record, "run_index"));
  auto levels = record.find("levels");
  if (levels == record.end() || !levels->is_array()) {
    throw IngestError("missing or non-array field 'levels'");
  }
  for (const auto& entry : *levels) {
    if (!entry.is_string()) throw IngestError("level names must be strings");
    auto level = level_from_name(entry.get<std::string>());
    if (!level) throw IngestError("unknown level '" + entry.get<std::string>() + "'");
    meta.profiling_levels.insert(*level);
  }
  auto serialized = record.find("serialized");
  if (serialized != record.end()) {
    if (!serialized->is_boolean()) {
      throw IngestError("field 'serialized' must be a boolean");
    }
    meta.serialized = serialized->get<bool>();
  }
  auto system = record.find("system");
  if (system == record.end()) throw IngestError("missing field 'system'");
  meta.system = system_from_json(*system);
  return meta;
}

Span span_from_json(const json& record) {
  Span span;
  span.trace_id = require_u64(record, "trace_id");
  span.span_id = require_u64(record, "span_id");
  span.name = require_string(record, "name");
  auto level = level_from_name(require_string(record, "level"));
  if (!level) throw IngestError("unknown level name");
  span.level = *level;
  auto kind = kind_from_name(require_string(record, "kind"));
  if (!kind) throw IngestError("unknown kind name");
  span.kind = *kind;
  span.begin_ns = require_u64(record, "begin_ns");
  span.end_ns = require_u64(record, "end_ns");
  auto parent = record.find("parent_id");
  if (parent != record.end() && !parent->is_null()) {
    span.parent_id = require_u64(record, "parent_id");
  }
  auto correlation = record.find("correlation_id");
  if (correlation != record.end() && !correlation->is_null()) {
    span.correlation_id = require_u64(record, "correlation_id");
  }
  auto tags = record.find("tags");
  if (tags != record.end() && !tags->is_null()) {
    if (!tags->is_object()) throw IngestError("'tags' must be an object");
    for (const auto& [key, value] : tags->items()) {
      span.tags.emplace(key, tag_value_from_json(value));
    }
  }
  return span;
}

}  // namespace

std::string encode_meta_record(const RunMeta& meta) {
  return meta_to_json(meta).dump();
}

std::string encode_span_record(const Span& span) {
  return span_to_json(span).dump();
}

SystemSpec parse_system_spec(const std::string& json_text) {
  json parsed = json::parse(json_text, nullptr, false);
  if (parsed.is_discarded()) throw IngestError("system spec is not valid JSON");
  return system_from_json(parsed);
}

std::string encode_system_spec(const SystemSpec& spec) {
  return json{{"name", spec.name},
              {"peak_flops", spec.peak_flops},
              {"mem_bw", spec.memory_bandwidth_bytes_per_s}}
      .dump();
}

SystemSpec load_system_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open system spec '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_system_spec(text.str());
}

TraceBundle ingest(std::istream& stream) {
  TraceBundle bundle;
  bool have_meta = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    // Blank lines are permitted between records.
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      throw IngestError("line " + std::to_string(line_no) +
                        ": not a JSON object");
    }
    std::string rec = record.value("rec", std::string{});
    try {
      if (rec == "meta") {
        if (have_meta) {
          throw IngestError("duplicate meta record");
        }
        bundle.meta = meta_from_json(record);
        have_meta = true;
      } else if (rec == "span") {
        bundle.spans.push_back(span_from_json(record));
      }
      // Unknown record kinds are skipped for forward compatibility.
    } catch (const IngestError& e) {
      throw IngestError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_meta) throw IngestError("stream holds no meta record");
  for (const Span& span : bundle.spans) {
    if (span.trace_id != bundle.meta.trace_id) {
      throw IngestError("span " + std::to_string(span.span_id) +
                        " carries trace_id " + std::to_string(span.trace_id) +
                        " but the meta record declares " +
                        std::to_string(bundle.meta.trace_id));
    }
  }
  sort_timeline(bundle.spans);
  ValidationReport report = validate_bundle(bundle);
  if (!report.empty()) {
    std::ostringstream msg;
    msg << "bundle fails validation (" << report.size() << " violation"
        << (report.size() == 1 ? "" : "s") << "):";
    for (const Violation& v : report) {
      msg << "\n  span " << v.span_id << ": " << v.rule;
      if (!v.detail.empty()) msg << " (" << v.detail << ")";
    }
    throw IngestError(msg.str());
  }
  return bundle;
}

TraceBundle ingest_string(const std::string& text) {
  std::istringstream stream(text);
  return ingest(stream);
}

TraceBundle merge(const std::vector<TraceBundle>& bundles) {
  if (bundles.empty()) throw MergeError("nothing to merge");
  TraceBundle merged;
  merged.meta = bundles.front().meta;
  std::unordered_set<std::uint64_t> seen;
  for (const TraceBundle& bundle : bundles) {
    if (bundle.meta.trace_id != merged.meta.trace_id) {
      throw MergeError("trace_id mismatch: " +
                       std::to_string(bundle.meta.trace_id) + " vs " +
                       std::to_string(merged.meta.trace_id));
    }
    if (!(bundle.meta == merged.meta)) {
      throw MergeError("run metadata disagrees across bundles of trace " +
                       std::to_string(merged.meta.trace_id));
    }
    for (const Span& span : bundle.spans) {
      if (!seen.insert(span.span_id).second) {
        throw MergeError("duplicate span_id " + std::to_string(span.span_id) +
                         " across merged bundles");
      }
      merged.spans.push_back(span);
    }
  }
  sort_timeline(merged.spans);
  return merged;
}

std::string to_jsonl(const TraceBundle& bundle) {
  std::ostringstream out;
  out << encode_meta_record(bundle.meta) << '\n';
  for (const Span& span : bundle.spans) {
    out << encode_span_record(span) << '\n';
  }
  return out.str();
}

void persist(const TraceBundle& bundle, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_jsonl(bundle);
  if (!out) throw IoError("write to '" + path + "' failed");
}

TraceBundle load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return ingest(in);
}

void RunSet::add(TraceBundle bundle) {
  if (groups.empty()) {
    system = bundle.meta.system;
  } else if (!(bundle.meta.system == system)) {
    throw MergeError("system spec disagrees across runs of one experiment");
  }
  GroupKey key{bundle.meta.batch_size, bundle.meta.profiling_levels};
  auto& group = groups[key];
  for (const TraceBundle& existing : group) {
    if (existing.meta.trace_id == bundle.meta.trace_id &&
        existing.meta.run_index == bundle.meta.run_index) {
      throw MergeError("duplicate run (trace " +
                       std::to_string(bundle.meta.trace_id) + ", run_index " +
                       std::to_string(bundle.meta.run_index) + ")");
    }
  }
  group.push_back(std::move(bundle));
}

RunSet RunSet::from_bundles(std::vector<TraceBundle> bundles) {
  RunSet set;
  for (TraceBundle& bundle : bundles) set.add(std::move(bundle));
  return set;
}

}  // namespace strata
