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

#include "strata/leveled.hpp"

#include <algorithm>
#include <set>

namespace strata {

char level_letter(Level level) {
  switch (level) {
    case Level::Model: return 'M';
    case Level::Layer: return 'L';
    case Level::Kernel: return 'G';
    case Level::Api: return 'A';
  }
  return '?';
}

std::string level_set_label(const LevelSet& levels) {
  std::string label;
  for (Level level : levels) {
    if (!label.empty()) label += '+';
    label += level_letter(level);
  }
  return label;
}

std::string event_label(const LeveledEventKey& key) {
  switch (key.level) {
    case Level::Model: return "model";
    case Level::Layer: return "layer " + std::to_string(key.layer_index);
    default:
      return "layer " + std::to_string(key.layer_index) + " kernel " +
             std::to_string(key.kernel_index);
  }
}

// ---------------------------------------------------------------------------
// Grouping

void LeveledRunGroup::add(const TraceBundle& bundle) {
  if (runs.empty()) {
    batch_size = bundle.meta.batch_size;
    system = bundle.meta.system;
  } else {
    if (bundle.meta.batch_size != batch_size) {
      throw LeveledError("runs mix batch sizes " + std::to_string(batch_size) +
                         " and " + std::to_string(bundle.meta.batch_size));
    }
    if (!(bundle.meta.system == system)) {
      throw LeveledError("runs mix system specifications");
    }
  }
  CorrelationResult result = correlate(bundle);
  if (!result.ambiguities.empty()) {
    throw LeveledError(
        "trace " + std::to_string(bundle.meta.trace_id) + " has " +
        std::to_string(result.ambiguities.size()) +
        " ambiguous span(s); resolve with a serialized rerun before leveling");
  }
  runs[bundle.meta.profiling_levels].push_back(std::move(result.tree));
}

LeveledRunGroup LeveledRunGroup::from_bundles(
    const std::vector<TraceBundle>& bundles) {
  LeveledRunGroup group;
  for (const TraceBundle& bundle : bundles) group.add(bundle);
  return group;
}

// ---------------------------------------------------------------------------
// Overhead computation

namespace {

int deepest_rank(const LevelSet& levels) {
  int deepest = 0;
  for (Level level : levels) deepest = std::max(deepest, rank(level));
  return deepest;
}

/// Trimmed-mean latency of every event visible in one level set's runs.
std::map<LeveledEventKey, double> event_latencies(
    const LevelSet& levels, const std::vector<EntityTree>& trees,
    const AnalysisOptions& options) {
  std::map<LeveledEventKey, std::vector<double>> samples;
  for (const EntityTree& tree : trees) {
    samples[LeveledEventKey{Level::Model, 0, 0}].push_back(
        static_cast<double>(tree.root.duration_ns()));
    if (!levels.contains(Level::Layer)) continue;
    for (const LayerExec& layer : tree.root.layers) {
      samples[LeveledEventKey{Level::Layer, layer.layer_index, 0}].push_back(
          static_cast<double>(layer.duration_ns()));
      if (!levels.contains(Level::Kernel)) continue;
      for (std::size_t ki = 0; ki < layer.kernels.size(); ++ki) {
        samples[LeveledEventKey{Level::Kernel, layer.layer_index,
                                static_cast<std::uint32_t>(ki)}]
            .push_back(static_cast<double>(layer.kernels[ki].duration_ns()));
      }
    }
  }
  std::map<LeveledEventKey, double> out;
  for (auto& [key, values] : samples) {
    out.emplace(key, trimmed_mean(std::move(values), options.trim_fraction));
  }
  return out;
}

std::vector<LevelSet> chain_of(const LeveledRunGroup& group) {
  std::vector<LevelSet> chain;
  for (const auto& [levels, trees] : group.runs) chain.push_back(levels);
  std::sort(chain.begin(), chain.end(),
            [](const LevelSet& a, const LevelSet& b) {
              return a.size() < b.size();
            });
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (!std::includes(chain[i].begin(), chain[i].end(), chain[i - 1].begin(),
                       chain[i - 1].end())) {
      throw LeveledError("profiling-level sets " +
                         level_set_label(chain[i - 1]) + " and " +
                         level_set_label(chain[i]) +
                         " do not form an inclusion chain");
    }
  }
  return chain;
}

}  // namespace

OverheadReport compute_overhead(const LeveledRunGroup& group,
                                const AnalysisOptions& options) {
  std::vector<LevelSet> chain = chain_of(group);
  if (chain.size() < 2) {
    throw LeveledError("overhead needs at least two chained level sets; got " +
                       std::to_string(chain.size()));
  }

  std::map<LevelSet, std::map<LeveledEventKey, double>> latencies;
  for (const LevelSet& levels : chain) {
    latencies[levels] =
        event_latencies(levels, group.runs.at(levels), options);
  }

  OverheadReport report;
  report.noise_tolerance = options.noise_tolerance;
  std::map<LeveledEventKey, OverheadRow> rows;

  // Accurate latency: from the run whose deepest level is the event's own.
  for (const LevelSet& levels : chain) {
    int deepest = deepest_rank(levels);
    for (const auto& [key, latency] : latencies.at(levels)) {
      OverheadRow& row = rows[key];
      row.event = key;
      if (rank(key.level) == deepest) row.accurate_latency_ns = latency;
    }
  }

  // Per-step subtraction over events present on both sides of the step.
  for (std::size_t step = 0; step + 1 < chain.size(); ++step) {
    const LevelSet& narrow = chain[step];
    const LevelSet& wide = chain[step + 1];
    LevelSet added;
    std::set_difference(wide.begin(), wide.end(), narrow.begin(), narrow.end(),
                        std::inserter(added, added.begin()));
    const auto& narrow_lat = latencies.at(narrow);
    const auto& wide_lat = latencies.at(wide);
    for (const auto& [key, before] : narrow_lat) {
      auto after = wide_lat.find(key);
      if (after == wide_lat.end()) {
        report.warnings.push_back(event_label(key) + " visible under " +
                                  level_set_label(narrow) + " but not under " +
                                  level_set_label(wide));
        continue;
      }
      double overhead = after->second - before;
      OverheadRow& row = rows[key];
      if (overhead < 0.0) {
        if (-overhead <= options.noise_tolerance * before) {
          overhead = 0.0;
          row.clamped = true;
        } else {
          report.warnings.push_back(
              event_label(key) + ": overhead of added level(s) " +
              level_set_label(added) + " is negative beyond noise tolerance");
        }
      }
      row.overhead_by_added_levels[added] = overhead;
    }
    for (const auto& [key, after] : wide_lat) {
      // Newly visible events (their level was just enabled) have no
      // narrower-run twin and no overhead row for this step.
      if (rank(key.level) <= deepest_rank(narrow) &&
          !narrow_lat.contains(key)) {
        report.warnings.push_back(event_label(key) + " visible under " +
                                  level_set_label(wide) + " but not under " +
                                  level_set_label(narrow));
      }
    }
  }

  for (auto& [key, row] : rows) report.rows.push_back(std::move(row));
  std::sort(report.rows.begin(), report.rows.end(),
            [](const OverheadRow& a, const OverheadRow& b) {
              return std::tuple(rank(a.event.level), a.event.layer_index,
                                a.event.kernel_index) <
                     std::tuple(rank(b.event.level), b.event.layer_index,
                                b.event.kernel_index);
            });
  for (const OverheadRow& row : report.rows) {
    if (row.event.level == Level::Model) {
      report.model_overhead_by_added_levels = row.overhead_by_added_levels;
      break;
    }
  }
  return report;
}

double accurate_latency(const LeveledRunGroup& group,
                        const LeveledEventKey& event,
                        const AnalysisOptions& options) {
  for (const auto& [levels, trees] : group.runs) {
    if (deepest_rank(levels) != rank(event.level)) continue;
    auto latencies = event_latencies(levels, trees, options);
    auto it = latencies.find(event);
    if (it == latencies.end()) {
      throw LeveledError(event_label(event) + " not present in the " +
                         level_set_label(levels) + " run");
    }
    return it->second;
  }
  throw LeveledError("no run has " +
                     std::string(1, level_letter(event.level)) +
                     " as its deepest profiling level");
}

}  // namespace strata
