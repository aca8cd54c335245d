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

#ifndef STRATA_REPORT_HPP
#define STRATA_REPORT_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "strata/analysis.hpp"
#include "strata/correlator.hpp"
#include "strata/leveled.hpp"
#include "strata/span.hpp"

namespace strata {

struct ReportError : TraceError {
  using TraceError::TraceError;
};

/// One table cell; monostate renders as empty (CSV) or null (JSON).
using Cell = std::variant<std::monostate, std::string, std::int64_t,
                          std::uint64_t, double, bool>;

/// A rectangular report: every row has exactly columns.size() cells.
/// Serialization is deterministic — identical tables yield identical bytes.
struct Table {
  std::string name;  ///< file stem, e.g. "a9"
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;  ///< annotation lines appended to the file

  bool operator==(const Table&) const = default;
};

enum class ReportFormat { Csv, Json };

/// "csv" or "json"; throws ReportError otherwise.
ReportFormat report_format_from_name(const std::string& name);
const char* report_format_extension(ReportFormat format);

/// Shortest round-trip decimal for one cell (doubles via std::to_chars).
std::string format_cell(const Cell& cell);

/// Header line, one line per row, then one "# note" line per note.
std::string to_csv(const Table& table);

/// {"name","columns","rows","notes"} with two-space indentation.
std::string to_json(const Table& table);

/// Writes table as <dir>/<name>.<ext>, creating directories; returns the path.
std::string write_table(const Table& table, const std::string& dir,
                        ReportFormat format);

// ---------------------------------------------------------------------------
// Converters: analysis results to tables. Table names follow the analysis
// selection ids so `analyze --analysis a9` emits a9.csv.

Table to_table(const ModelInfoTable& table, const OptimalBatch& optimal);
Table to_table(const LayerInfoTable& table);
Table to_table(const LayerSeries& series);
Table to_table(const LayerTypeTable& table);
Table to_table(const KernelInfoTable& table);
Table to_table(const RooflineReport& report, const std::string& name);
Table to_table(const KernelNameTable& table);
Table to_table(const LayerAggregateTable& table);
Table to_table(const LayerMetricsSeries& series);
Table to_table(const GpuNonGpuTable& table);
Table to_table(const ModelAggregateTable& table);
Table to_table(const StageAttribution& stages);
Table to_table(const OverheadReport& report);

/// The correlated hierarchy flattened to one row per node, execution order.
Table to_table(const EntityTree& tree);
/// One row per unattributable span ("ambiguities" / "orphans").
Table ambiguity_table(const AmbiguityReport& report);
Table orphan_table(const std::vector<OrphanSpan>& orphans);

}  // namespace strata

#endif  // STRATA_REPORT_HPP
