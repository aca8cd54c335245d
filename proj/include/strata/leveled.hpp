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

#ifndef STRATA_LEVELED_HPP
#define STRATA_LEVELED_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "strata/analysis.hpp"
#include "strata/correlator.hpp"
#include "strata/span.hpp"

namespace strata {

struct LeveledError : TraceError {
  using TraceError::TraceError;
};

/// One-letter level labels: M (model), L (layer), G (GPU kernel), A (API).
char level_letter(Level level);
/// "M", "L+G", ... — levels joined in rank order.
std::string level_set_label(const LevelSet& levels);

/// Cross-run identity of a profiled event. Layers are matched by execution
/// order (layer_index), not by name — names may repeat, execution order of a
/// fixed workload does not. Kernels add their launch ordinal within the layer.
struct LeveledEventKey {
  Level level = Level::Model;
  std::uint32_t layer_index = 0;   ///< Layer and Kernel events
  std::uint32_t kernel_index = 0;  ///< Kernel events only

  auto operator<=>(const LeveledEventKey&) const = default;
};

std::string event_label(const LeveledEventKey& key);

// ---------------------------------------------------------------------------
// Run groups

/// Runs of one workload captured at increasing profiling-level sets, e.g.
/// {M}, {M,L}, {M,L,G}. The level sets must form a chain under inclusion.
/// Each set may hold repetitions; latencies are combined by trimmed mean.
struct LeveledRunGroup {
  std::uint32_t batch_size = 1;
  SystemSpec system;
  std::map<LevelSet, std::vector<EntityTree>> runs;

  /// Correlates and files one bundle. Throws LeveledError when the bundle
  /// disagrees on batch size or system, or is ambiguous (resolve with a
  /// serialized rerun before leveling).
  void add(const TraceBundle& bundle);

  static LeveledRunGroup from_bundles(const std::vector<TraceBundle>& bundles);
};

// ---------------------------------------------------------------------------
// Overhead report

struct OverheadRow {
  LeveledEventKey event;
  /// From the run whose deepest enabled level equals the event's level;
  /// absent when the chain skips that set.
  std::optional<double> accurate_latency_ns;
  /// Overhead introduced by each chain step, keyed by the step's added
  /// levels: latency at the wider set minus latency at the narrower one.
  std::map<LevelSet, double> overhead_by_added_levels;
  /// A small negative difference was clamped to zero as clock noise.
  bool clamped = false;

  bool operator==(const OverheadRow&) const = default;
};

struct OverheadReport {
  /// Model first, then layers, then kernels, each in execution order.
  std::vector<OverheadRow> rows;
  /// The model event's overhead per chain step — the whole-run cost of
  /// enabling those levels.
  std::map<LevelSet, double> model_overhead_by_added_levels;
  double noise_tolerance = 0.0;
  std::vector<std::string> warnings;  ///< unmatched events, residual negatives

  bool operator==(const OverheadReport&) const = default;
};

/// For each event at level n present in two adjacent chain members:
/// overhead = latency at the wider set − latency at the narrower set.
/// Negative differences within noise_tolerance·latency are clamped to zero
/// and flagged; larger ones are kept and added to warnings. Throws
/// LeveledError when fewer than two chained sets are present or the sets do
/// not form an inclusion chain.
OverheadReport compute_overhead(const LeveledRunGroup& group,
                                const AnalysisOptions& options = {});

/// The event's latency from exactly the run whose deepest enabled level is
/// the event's own level. Throws LeveledError when no such run exists.
double accurate_latency(const LeveledRunGroup& group,
                        const LeveledEventKey& event,
                        const AnalysisOptions& options = {});

}  // namespace strata

#endif  // STRATA_LEVELED_HPP
