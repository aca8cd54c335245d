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

#include "strata/report.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace strata {

using nlohmann::json;

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw ReportError("unknown report format '" + name + "' (csv or json)");
}

const char* report_format_extension(ReportFormat format) {
  return format == ReportFormat::Csv ? ".csv" : ".json";
}

namespace {

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw ReportError("cannot format a double");
  return std::string(buffer, ptr);
}

std::string csv_quote(const std::string& text) {
  bool needs_quotes = text.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

json cell_to_json(const Cell& cell) {
  return std::visit(
      [](const auto& value) -> json {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return value;
        }
      },
      cell);
}

}  // namespace

std::string format_cell(const Cell& cell) {
  return std::visit(
      [](const auto& value) -> std::string {
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return value;
        } else if constexpr (std::is_same_v<T, bool>) {
          return value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(value);
        } else {
          return std::to_string(value);
        }
      },
      cell);
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += csv_quote(table.columns[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw ReportError("table '" + table.name + "' has a ragged row");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_quote(format_cell(row[i]));
    }
    out += '\n';
  }
  for (const std::string& note : table.notes) {
    out += "# " + note + '\n';
  }
  return out;
}

std::string to_json(const Table& table) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw ReportError("table '" + table.name + "' has a ragged row");
    }
    json cells = json::array();
    for (const Cell& cell : row) cells.push_back(cell_to_json(cell));
    rows.push_back(std::move(cells));
  }
  return json{{"name", table.name},
              {"columns", table.columns},
              {"rows", std::move(rows)},
              {"notes", table.notes}}
             .dump(2) +
         '\n';
}

std::string write_table(const Table& table, const std::string& dir,
                        ReportFormat format) {
  std::filesystem::create_directories(dir);
  std::filesystem::path path =
      std::filesystem::path(dir) /
      (table.name + report_format_extension(format));
  std::ofstream out(path);
  if (!out) throw ReportError("cannot write '" + path.string() + "'");
  out << (format == ReportFormat::Csv ? to_csv(table) : to_json(table));
  if (!out) throw ReportError("write to '" + path.string() + "' failed");
  return path.string();
}

// ---------------------------------------------------------------------------
// Converters

namespace {

Cell opt_cell(const std::optional<double>& value) {
  if (!value) return std::monostate{};
  return *value;
}

Cell opt_cell(const std::optional<bool>& value) {
  if (!value) return std::monostate{};
  return *value;
}

}  // namespace

Table to_table(const ModelInfoTable& table, const OptimalBatch& optimal) {
  Table out;
  out.name = "a1";
  out.columns = {"batch_size", "batch_latency_ns", "throughput_per_s"};
  for (const ModelInfoRow& row : table.rows) {
    out.rows.push_back({static_cast<std::uint64_t>(row.batch_size),
                        row.batch_latency_ns, row.throughput});
  }
  if (table.online_latency_ns) {
    out.notes.push_back("online_latency_ns=" +
                        format_cell(Cell{*table.online_latency_ns}));
  }
  out.notes.push_back("max_throughput_per_s=" +
                      format_cell(Cell{table.max_throughput}));
  out.notes.push_back("optimal_batch_size=" +
                      std::to_string(optimal.batch_size));
  if (!optimal.note.empty()) {
    out.notes.push_back("optimal_batch_note=" + optimal.note);
  }
  return out;
}

Table to_table(const LayerInfoTable& table) {
  Table out;
  out.name = "a2";
  out.columns = {"layer_index", "name",       "type",
                 "shape",       "latency_ns", "alloc_bytes"};
  for (const LayerInfoRow& row : table.rows) {
    out.rows.push_back({static_cast<std::uint64_t>(row.layer_index), row.name,
                        row.type, row.shape, row.latency_ns, row.alloc_bytes});
  }
  return out;
}

Table to_table(const LayerSeries& series) {
  Table out;
  out.name = "a3_a4";
  out.columns = {"layer_index", "latency_ns", "alloc_bytes"};
  for (std::size_t i = 0; i < series.latency_ns.size(); ++i) {
    out.rows.push_back({static_cast<std::uint64_t>(i), series.latency_ns[i],
                        series.alloc_bytes[i]});
  }
  return out;
}

Table to_table(const LayerTypeTable& table) {
  Table out;
  out.name = "a5_a6_a7";
  out.columns = {"type", "count", "total_latency_ns", "total_alloc_bytes"};
  for (const LayerTypeRow& row : table.rows) {
    out.rows.push_back(
        {row.type, row.count, row.total_latency_ns, row.total_alloc_bytes});
  }
  return out;
}

Table to_table(const KernelInfoTable& table) {
  Table out;
  out.name = "a8";
  out.columns = {"name",
                 "layer_index",
                 "latency_ns",
                 "flops",
                 "dram_read_bytes",
                 "dram_write_bytes",
                 "achieved_occupancy",
                 "arithmetic_intensity",
                 "arithmetic_throughput",
                 "memory_bound"};
  for (const KernelInfoRow& row : table.rows) {
    out.rows.push_back({row.name, static_cast<std::uint64_t>(row.layer_index),
                        row.latency_ns, row.flops, row.dram_read_bytes,
                        row.dram_write_bytes, row.achieved_occupancy,
                        opt_cell(row.arithmetic_intensity),
                        opt_cell(row.arithmetic_throughput),
                        opt_cell(row.memory_bound)});
  }
  return out;
}

Table to_table(const RooflineReport& report, const std::string& name) {
  Table out;
  out.name = name;
  out.columns = {"subject", "arithmetic_intensity", "arithmetic_throughput",
                 "memory_bound"};
  for (const RooflinePoint& point : report.points) {
    out.rows.push_back({point.subject, point.arithmetic_intensity,
                        point.arithmetic_throughput, point.memory_bound});
  }
  for (const std::string& subject : report.excluded) {
    out.notes.push_back("excluded (undefined intensity or zero latency): " +
                        subject);
  }
  return out;
}

Table to_table(const KernelNameTable& table) {
  Table out;
  out.name = "a10";
  out.columns = {"name",
                 "count",
                 "total_latency_ns",
                 "latency_percent",
                 "total_flops",
                 "total_dram_read_bytes",
                 "total_dram_write_bytes",
                 "weighted_achieved_occupancy",
                 "arithmetic_intensity",
                 "arithmetic_throughput",
                 "memory_bound"};
  for (const KernelNameRow& row : table.rows) {
    out.rows.push_back(
        {row.name, row.count, row.total_latency_ns, row.latency_percent,
         row.total_flops, row.total_dram_read_bytes, row.total_dram_write_bytes,
         row.weighted_achieved_occupancy, opt_cell(row.arithmetic_intensity),
         opt_cell(row.arithmetic_throughput), opt_cell(row.memory_bound)});
  }
  out.notes.push_back("model_latency_ns=" +
                      format_cell(Cell{table.model_latency_ns}));
  return out;
}

Table to_table(const LayerAggregateTable& table) {
  Table out;
  out.name = "a11";
  out.columns = {"layer_index",
                 "name",
                 "type",
                 "layer_latency_ns",
                 "kernel_latency_ns",
                 "total_flops",
                 "total_dram_read_bytes",
                 "total_dram_write_bytes",
                 "weighted_achieved_occupancy",
                 "kernel_count",
                 "arithmetic_intensity",
                 "arithmetic_throughput",
                 "memory_bound"};
  for (const LayerAggregateRow& row : table.rows) {
    out.rows.push_back({static_cast<std::uint64_t>(row.layer_index), row.name,
                        row.type, row.layer_latency_ns, row.kernel_latency_ns,
                        row.total_flops, row.total_dram_read_bytes,
                        row.total_dram_write_bytes,
                        row.weighted_achieved_occupancy, row.kernel_count,
                        opt_cell(row.arithmetic_intensity),
                        opt_cell(row.arithmetic_throughput),
                        opt_cell(row.memory_bound)});
  }
  return out;
}

Table to_table(const LayerMetricsSeries& series) {
  Table out;
  out.name = "a12";
  out.columns = {"layer_index", "total_flops", "total_dram_read_bytes",
                 "total_dram_write_bytes"};
  for (std::size_t i = 0; i < series.total_flops.size(); ++i) {
    out.rows.push_back({static_cast<std::uint64_t>(i), series.total_flops[i],
                        series.total_dram_read_bytes[i],
                        series.total_dram_write_bytes[i]});
  }
  return out;
}

Table to_table(const GpuNonGpuTable& table) {
  Table out;
  out.name = "a13";
  out.columns = {"layer_index",   "gpu_latency_ns", "non_gpu_latency_ns",
                 "gpu_share",     "non_gpu_share",  "flagged"};
  for (const GpuNonGpuRow& row : table.rows) {
    out.rows.push_back({static_cast<std::uint64_t>(row.layer_index),
                        row.gpu_latency_ns, row.non_gpu_latency_ns,
                        row.gpu_share, row.non_gpu_share, row.flagged});
  }
  out.notes.push_back("model_latency_ns=" +
                      format_cell(Cell{table.model_latency_ns}));
  out.notes.push_back("model_gpu_latency_ns=" +
                      format_cell(Cell{table.model_gpu_latency_ns}));
  out.notes.push_back("model_gpu_percent=" +
                      format_cell(Cell{table.model_gpu_percent}));
  return out;
}

Table to_table(const ModelAggregateTable& table) {
  Table out;
  out.name = "a15";
  out.columns = {"batch_size",
                 "model_latency_ns",
                 "kernel_latency_ns",
                 "total_flops",
                 "total_dram_read_bytes",
                 "total_dram_write_bytes",
                 "weighted_achieved_occupancy",
                 "kernel_count",
                 "arithmetic_intensity",
                 "arithmetic_throughput",
                 "memory_bound"};
  for (const ModelAggregateRow& row : table.rows) {
    out.rows.push_back({static_cast<std::uint64_t>(row.batch_size),
                        row.model_latency_ns, row.kernel_latency_ns,
                        row.total_flops, row.total_dram_read_bytes,
                        row.total_dram_write_bytes,
                        row.weighted_achieved_occupancy, row.kernel_count,
                        opt_cell(row.arithmetic_intensity),
                        opt_cell(row.arithmetic_throughput),
                        opt_cell(row.memory_bound)});
  }
  return out;
}

Table to_table(const StageAttribution& stages) {
  Table out;
  out.name = "stages";
  out.columns = {"quantity", "dominant_stage"};
  out.rows.push_back(
      {std::string("latency"), std::string(stage_name(stages.latency_stage))});
  out.rows.push_back({std::string("alloc_memory"),
                      std::string(stage_name(stages.alloc_memory_stage))});
  out.rows.push_back(
      {std::string("flops"), std::string(stage_name(stages.flops_stage))});
  out.rows.push_back({std::string("memory_access"),
                      std::string(stage_name(stages.memory_access_stage))});
  out.notes.push_back(
      "intervals: B=" + std::to_string(stages.beginning_size) +
      " M=" + std::to_string(stages.middle_size) +
      " E=" + std::to_string(stages.end_size) + " of " +
      std::to_string(stages.layer_count) + " layers");
  if (stages.degenerate) {
    out.notes.push_back("degenerate: fewer than 3 layers");
  }
  return out;
}

Table to_table(const OverheadReport& report) {
  Table out;
  out.name = "overhead";
  // One column per distinct added-level step, in level order.
  std::set<LevelSet> steps;
  for (const OverheadRow& row : report.rows) {
    for (const auto& [added, _] : row.overhead_by_added_levels) {
      steps.insert(added);
    }
  }
  out.columns = {"event", "accurate_latency_ns"};
  for (const LevelSet& step : steps) {
    out.columns.push_back("overhead_ns_adding_" + level_set_label(step));
  }
  out.columns.push_back("clamped");
  for (const OverheadRow& row : report.rows) {
    std::vector<Cell> cells{event_label(row.event),
                            opt_cell(row.accurate_latency_ns)};
    for (const LevelSet& step : steps) {
      auto it = row.overhead_by_added_levels.find(step);
      cells.push_back(it == row.overhead_by_added_levels.end()
                          ? Cell{std::monostate{}}
                          : Cell{it->second});
    }
    cells.push_back(row.clamped);
    out.rows.push_back(std::move(cells));
  }
  for (const auto& [step, value] : report.model_overhead_by_added_levels) {
    out.notes.push_back("model_overhead_ns_adding_" + level_set_label(step) +
                        "=" + format_cell(Cell{value}));
  }
  for (const std::string& warning : report.warnings) {
    out.notes.push_back("warning: " + warning);
  }
  return out;
}

Table to_table(const EntityTree& tree) {
  Table out;
  out.name = "tree";
  out.columns = {"node",     "layer_index", "kernel_index", "name",
                 "begin_ns", "end_ns",      "latency_ns"};
  out.rows.push_back({std::string("model"), std::monostate{}, std::monostate{},
                      tree.root.span.name, tree.root.span.begin_ns,
                      tree.root.span.end_ns, tree.root.duration_ns()});
  for (const LayerExec& layer : tree.root.layers) {
    out.rows.push_back({std::string("layer"),
                        static_cast<std::uint64_t>(layer.layer_index),
                        std::monostate{}, layer.span.name, layer.span.begin_ns,
                        layer.span.end_ns, layer.duration_ns()});
    for (std::size_t ki = 0; ki < layer.kernels.size(); ++ki) {
      const KernelExec& kernel = layer.kernels[ki];
      const Span& timing = kernel.exec ? *kernel.exec : kernel.launch;
      out.rows.push_back({std::string("kernel"),
                          static_cast<std::uint64_t>(layer.layer_index),
                          static_cast<std::uint64_t>(ki), kernel.kernel_name(),
                          timing.begin_ns, timing.end_ns,
                          kernel.duration_ns()});
    }
  }
  return out;
}

Table ambiguity_table(const AmbiguityReport& report) {
  Table out;
  out.name = "ambiguities";
  out.columns = {"span_id", "candidate_parents"};
  for (const Ambiguity& ambiguity : report) {
    std::string candidates;
    for (std::size_t i = 0; i < ambiguity.candidate_parents.size(); ++i) {
      if (i) candidates += ';';
      candidates += std::to_string(ambiguity.candidate_parents[i]);
    }
    out.rows.push_back({ambiguity.span_id, candidates});
  }
  return out;
}

Table orphan_table(const std::vector<OrphanSpan>& orphans) {
  Table out;
  out.name = "orphans";
  out.columns = {"span_id", "reason"};
  for (const OrphanSpan& orphan : orphans) {
    out.rows.push_back({orphan.span_id, orphan.reason});
  }
  return out;
}

}  // namespace strata
