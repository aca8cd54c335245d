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

#include "strata/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "strata/collector.hpp"
#include "strata/correlator.hpp"
#include "strata/leveled.hpp"
#include "strata/report.hpp"
#include "strata/simprof.hpp"
#include "strata/span.hpp"

namespace strata {

namespace {

// ---------------------------------------------------------------------------
// Shared helpers

TraceBundle load_bundle_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  try {
    return ingest(in);
  } catch (const IngestError& e) {
    throw IngestError(path + ": " + e.what());
  }
}

std::vector<TraceBundle> load_bundle_files(
    const std::vector<std::string>& paths) {
  std::vector<TraceBundle> bundles;
  bundles.reserve(paths.size());
  for (const std::string& path : paths) {
    bundles.push_back(load_bundle_file(path));
  }
  return bundles;
}

LevelSet parse_levels(const std::string& text) {
  LevelSet levels;
  for (char c : text) {
    switch (c) {
      case ',': case '+': case ' ': continue;
      case 'M': case 'm': levels.insert(Level::Model); break;
      case 'L': case 'l': levels.insert(Level::Layer); break;
      case 'G': case 'g': levels.insert(Level::Kernel); break;
      case 'A': case 'a': levels.insert(Level::Api); break;
      default:
        throw UsageError(std::string("unknown profiling level '") + c +
                         "' (use letters from M, L, G, A)");
    }
  }
  if (levels.empty()) throw UsageError("empty profiling-level set");
  return levels;
}

std::string sanitize_stem(const std::string& text) {
  std::string out;
  for (char c : text) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    out += ok ? c : '-';
  }
  return out;
}

std::string level_letters(const LevelSet& levels) {
  std::string out;
  for (Level level : levels) out += level_letter(level);
  return out;
}

SyntheticModel resolve_model(const std::string& name_or_path) {
  auto names = fixture_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return fixture_by_name(name_or_path);
  }
  if (!std::filesystem::exists(name_or_path)) {
    std::string known;
    for (const std::string& n : names) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    throw UsageError("'" + name_or_path +
                     "' is neither a fixture name nor a readable model file"
                     " (fixtures: " + known + ")");
  }
  return load_model(name_or_path);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string model;
  std::vector<std::uint32_t> batches{1};
  std::string levels = "MLG";
  bool serialized = false;
  bool chain = false;
  std::uint32_t runs = 1;
  std::uint64_t layer_overhead_ns = 0;
  std::uint64_t kernel_overhead_ns = 0;
  double metric_multiplier = 1.0;
  std::uint64_t jitter_ns = 0;
  std::uint64_t seed = 0;
  std::string system_path;
  std::string out = "./reports";
};

std::string bundle_file_name(const SyntheticModel& model,
                             const TraceBundle& bundle) {
  return sanitize_stem(model.name) + "_b" +
         std::to_string(bundle.meta.batch_size) + "_" +
         level_letters(bundle.meta.profiling_levels) +
         (bundle.meta.serialized ? "_s" : "_c") + "_r" +
         std::to_string(bundle.meta.run_index) + ".jsonl";
}

int run_simulate(const SimulateOpts& opts, std::ostream& out) {
  SyntheticModel model = resolve_model(opts.model);
  SystemSpec system = opts.system_path.empty()
                          ? default_system()
                          : load_system_spec(opts.system_path);
  OverheadProfile overhead;
  overhead.layer_overhead_ns = opts.layer_overhead_ns;
  overhead.kernel_overhead_ns = opts.kernel_overhead_ns;
  overhead.metric_overhead_multiplier = opts.metric_multiplier;

  std::vector<TraceBundle> bundles;
  if (opts.chain) {
    for (std::uint32_t batch : opts.batches) {
      for (TraceBundle& bundle :
           emit_leveled_chain(model, batch, overhead, opts.serialized, system)) {
        bundles.push_back(std::move(bundle));
      }
    }
  } else {
    LevelSet levels = parse_levels(opts.levels);
    for (std::uint32_t batch : opts.batches) {
      for (std::uint32_t run = 0; run < opts.runs; ++run) {
        JitterProfile jitter{opts.jitter_ns, opts.seed + run};
        bundles.push_back(emit_run(model, batch, levels, overhead,
                                   opts.serialized, run, jitter, system));
      }
    }
  }
  std::filesystem::create_directories(opts.out);
  for (const TraceBundle& bundle : bundles) {
    std::filesystem::path path =
        std::filesystem::path(opts.out) / bundle_file_name(model, bundle);
    persist(bundle, path.string());
    out << path.string() << " (" << bundle.spans.size() << " spans)\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
  std::vector<std::string> inputs;
  std::string out = "./reports";
};

int run_ingest(const IngestOpts& opts, std::ostream& out) {
  std::filesystem::create_directories(opts.out);
  for (const std::string& input : opts.inputs) {
    TraceBundle bundle = load_bundle_file(input);
    std::filesystem::path path =
        std::filesystem::path(opts.out) /
        (sanitize_stem(std::filesystem::path(input).stem().string()) +
         "_validated.jsonl");
    persist(bundle, path.string());
    out << path.string() << ": trace " << bundle.meta.trace_id << ", "
        << bundle.spans.size() << " spans, levels "
        << level_set_label(bundle.meta.profiling_levels) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// correlate

struct CorrelateOpts {
  std::vector<std::string> inputs;
  std::string serialized_rerun;
  std::string format = "csv";
  std::string out = "./reports";
};

int run_correlate(const CorrelateOpts& opts, std::ostream& out) {
  std::vector<TraceBundle> bundles = load_bundle_files(opts.inputs);
  TraceBundle bundle = bundles.size() == 1 ? std::move(bundles.front())
                                           : merge(bundles);
  CorrelationResult result = correlate(bundle);
  if (!result.ambiguities.empty() && !opts.serialized_rerun.empty()) {
    TraceBundle serialized = load_bundle_file(opts.serialized_rerun);
    result = resolve_with_serialized(bundle, serialized);
  }

  ReportFormat format = report_format_from_name(opts.format);
  std::vector<std::string> paths;
  paths.push_back(write_table(to_table(result.tree), opts.out, format));
  paths.push_back(
      write_table(ambiguity_table(result.ambiguities), opts.out, format));
  paths.push_back(
      write_table(orphan_table(result.tree.orphans), opts.out, format));
  out << "layers=" << result.tree.root.layers.size()
      << " kernels=" << result.tree.kernel_count()
      << " ambiguities=" << result.ambiguities.size()
      << " orphans=" << result.tree.orphans.size() << "\n";
  for (const std::string& path : paths) out << path << "\n";
  if (!result.ambiguities.empty()) {
    out << "note: ambiguities remain; rerun with --serialized-rerun to"
           " resolve\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// overhead

struct OverheadOpts {
  std::vector<std::string> inputs;
  double trim = 0.2;
  double noise_tolerance = 0.01;
  std::string format = "csv";
  std::string out = "./reports";
};

int run_overhead(const OverheadOpts& opts, std::ostream& out) {
  LeveledRunGroup group =
      LeveledRunGroup::from_bundles(load_bundle_files(opts.inputs));
  AnalysisOptions options;
  options.trim_fraction = opts.trim;
  options.noise_tolerance = opts.noise_tolerance;
  OverheadReport report = compute_overhead(group, options);

  ReportFormat format = report_format_from_name(opts.format);
  std::string path = write_table(to_table(report), opts.out, format);
  out << "events=" << report.rows.size()
      << " warnings=" << report.warnings.size() << "\n";
  for (const auto& [step, value] : report.model_overhead_by_added_levels) {
    out << "model overhead adding " << level_set_label(step) << ": " << value
        << " ns\n";
  }
  out << path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOpts {
  std::vector<std::string> inputs;
  std::vector<std::string> analyses;
  std::string system_path;
  double trim = 0.2;
  double epsilon = 0.05;
  double noise_tolerance = 0.01;
  std::string format = "csv";
  std::string out = "./reports";
};

/// Profiling levels each analysis needs enabled in the consumed runs.
struct LevelRequirement {
  bool model = false;
  bool layer = false;
  bool kernel = false;
};

const std::vector<std::pair<std::string, LevelRequirement>>& selection_ids() {
  static const std::vector<std::pair<std::string, LevelRequirement>> ids = {
      {"a1", {true, false, false}},   {"a2", {false, true, false}},
      {"a3", {false, true, false}},   {"a4", {false, true, false}},
      {"a5", {false, true, false}},   {"a6", {false, true, false}},
      {"a7", {false, true, false}},   {"a8", {false, false, true}},
      {"a9", {false, false, true}},   {"a10", {false, false, true}},
      {"a11", {false, true, true}},   {"a12", {false, true, true}},
      {"a13", {false, true, true}},   {"a14", {false, true, true}},
      {"a15", {true, false, true}},   {"stages", {false, true, true}},
      {"roofline", {true, false, true}},
  };
  return ids;
}

std::set<std::string> parse_selection(const std::vector<std::string>& args) {
  std::set<std::string> selection;
  auto add = [&](const std::string& id) {
    if (id == "all") {
      for (const auto& [known, _] : selection_ids()) selection.insert(known);
      return;
    }
    for (const auto& [known, _] : selection_ids()) {
      if (known == id) {
        selection.insert(id);
        return;
      }
    }
    throw UsageError("unknown analysis '" + id +
                     "' (a1..a15, stages, roofline, or all)");
  };
  for (const std::string& arg : args) {
    std::size_t start = 0;
    while (start <= arg.size()) {
      std::size_t comma = arg.find(',', start);
      std::string id = arg.substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!id.empty()) add(id);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  if (selection.empty()) throw UsageError("empty analysis selection");
  return selection;
}

bool satisfies(const LevelSet& levels, const LevelRequirement& needs) {
  if (needs.model && !levels.contains(Level::Model)) return false;
  if (needs.layer && !levels.contains(Level::Layer)) return false;
  if (needs.kernel && !levels.contains(Level::Kernel)) return false;
  return true;
}

std::string requirement_label(const LevelRequirement& needs) {
  LevelSet levels;
  if (needs.model) levels.insert(Level::Model);
  if (needs.layer) levels.insert(Level::Layer);
  if (needs.kernel) levels.insert(Level::Kernel);
  return level_set_label(levels);
}

/// One batch's runs, taken from the deepest profiling-level group sampled at
/// that batch size.
struct BatchGroup {
  std::uint32_t batch_size = 1;
  LevelSet levels;
  AnalysisInput input;
};

std::vector<BatchGroup> build_batch_groups(const RunSet& runs) {
  std::map<std::uint32_t, const std::pair<const RunSet::GroupKey,
                                          std::vector<TraceBundle>>*>
      deepest;
  for (const auto& entry : runs.groups) {
    auto it = deepest.find(entry.first.batch_size);
    if (it == deepest.end() ||
        entry.first.levels.size() > it->second->first.levels.size() ||
        (entry.first.levels.size() == it->second->first.levels.size() &&
         it->second->first.levels < entry.first.levels)) {
      deepest[entry.first.batch_size] = &entry;
    }
  }
  std::vector<BatchGroup> groups;
  for (const auto& [batch, entry] : deepest) {
    BatchGroup group;
    group.batch_size = batch;
    group.levels = entry->first.levels;
    group.input.batch_size = batch;
    for (const TraceBundle& bundle : entry->second) {
      CorrelationResult result = correlate(bundle);
      if (demand_serialized_rerun(result.ambiguities)) {
        throw TraceError(
            "trace " + std::to_string(bundle.meta.trace_id) + " has " +
            std::to_string(result.ambiguities.size()) +
            " ambiguous spans; resolve them first"
            " (correlate --serialized-rerun) or profile serialized");
      }
      group.input.runs.push_back(std::move(result.tree));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

int run_analyze(const AnalyzeOpts& opts, std::ostream& out) {
  std::set<std::string> selection = parse_selection(opts.analyses);
  RunSet runs = RunSet::from_bundles(load_bundle_files(opts.inputs));
  SystemSpec system = opts.system_path.empty()
                          ? runs.system
                          : load_system_spec(opts.system_path);
  AnalysisOptions options;
  options.trim_fraction = opts.trim;
  options.epsilon = opts.epsilon;
  options.noise_tolerance = opts.noise_tolerance;

  std::vector<BatchGroup> groups = build_batch_groups(runs);
  ReportFormat format = report_format_from_name(opts.format);
  std::vector<std::string> paths;

  auto requirement = [&](const std::string& id) {
    for (const auto& [known, needs] : selection_ids()) {
      if (known == id) return needs;
    }
    throw UsageError("unknown analysis '" + id + "'");
  };

  // Batch groups able to feed one analysis; empty → validation failure.
  auto qualifying = [&](const std::string& id) {
    const LevelRequirement needs = requirement(id);
    std::vector<const BatchGroup*> able;
    for (const BatchGroup& group : groups) {
      if (satisfies(group.levels, needs)) able.push_back(&group);
    }
    if (able.empty()) {
      std::string have;
      for (const BatchGroup& group : groups) {
        if (!have.empty()) have += ", ";
        have += "batch " + std::to_string(group.batch_size) + ": " +
                level_set_label(group.levels);
      }
      throw TraceError("analysis " + id + " requires profiling levels " +
                       requirement_label(needs) + "; inputs provide " + have);
    }
    return able;
  };

  auto cross_batch_inputs = [&](const std::vector<const BatchGroup*>& able) {
    std::vector<AnalysisInput> inputs;
    for (const BatchGroup* group : able) inputs.push_back(group->input);
    return inputs;
  };

  // Per-batch tables carry a _b<batch> suffix when several batches qualify.
  auto emit_per_batch = [&](const std::string& id, auto&& make_table) {
    std::vector<const BatchGroup*> able = qualifying(id);
    for (const BatchGroup* group : able) {
      Table table = make_table(group->input);
      if (able.size() > 1) {
        table.name += "_b" + std::to_string(group->batch_size);
      }
      paths.push_back(write_table(table, opts.out, format));
    }
  };

  for (const auto& [id, needs] : selection_ids()) {
    if (!selection.contains(id)) continue;
    if (id == "a1") {
      std::vector<AnalysisInput> inputs = cross_batch_inputs(qualifying(id));
      ThroughputCurve curve = throughput_curve(inputs, options);
      paths.push_back(
          write_table(to_table(a1_model_info(inputs, options),
                               optimal_batch_size(curve, options.epsilon)),
                      opts.out, format));
    } else if (id == "a2") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a2_layer_table(input, options));
      });
    } else if (id == "a3" || id == "a4") {
      // One joint table serves both series; emit it once.
      if (id == "a4" && selection.contains("a3")) continue;
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a3_a4_layer_series(input, options));
      });
    } else if (id == "a5" || id == "a6" || id == "a7") {
      if (id != "a5" && (selection.contains("a5") ||
                         (id == "a7" && selection.contains("a6")))) {
        continue;
      }
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a5_a6_a7_by_type(input, options));
      });
    } else if (id == "a8") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a8_kernel_table(input, system, options));
      });
    } else if (id == "a9") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a9_kernel_roofline(input, system, options), "a9");
      });
    } else if (id == "a10") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a10_by_name(input, system, options));
      });
    } else if (id == "a11") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a11_by_layer(input, system, options));
      });
    } else if (id == "a12") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a12_metrics_per_layer(input, options));
      });
    } else if (id == "a13") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a13_gpu_vs_nongpu(input, options));
      });
    } else if (id == "a14") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(a14_layer_roofline(input, system, options), "a14");
      });
    } else if (id == "a15") {
      std::vector<AnalysisInput> inputs = cross_batch_inputs(qualifying(id));
      paths.push_back(write_table(
          to_table(a15_model_aggregate(inputs, system, options)), opts.out,
          format));
    } else if (id == "stages") {
      emit_per_batch(id, [&](const AnalysisInput& input) {
        return to_table(stage_attribution(input, options));
      });
    } else if (id == "roofline") {
      std::vector<AnalysisInput> inputs = cross_batch_inputs(qualifying(id));
      paths.push_back(write_table(
          to_table(model_roofline(inputs, system, options), "roofline"),
          opts.out, format));
    }
  }

  for (const std::string& path : paths) out << path << "\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Entry point

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{
      "strata: correlates per-level profiling runs of a model inference"
      " into one hierarchical timeline and runs the analysis suite"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "strata 1.0.0");

  SimulateOpts sim;
  CLI::App* simulate =
      app.add_subcommand("simulate", "Replay a synthetic workload to JSONL");
  simulate->add_option("--model", sim.model,
                       "Fixture name or model description JSON file")
      ->required();
  simulate->add_option("--batch", sim.batches, "Batch size(s) to replay");
  simulate->add_option("--levels", sim.levels,
                       "Profiling levels to enable (letters from M, L, G)");
  simulate->add_flag("--serialized", sim.serialized,
                     "Serialize concurrent layer groups");
  simulate->add_flag("--chain", sim.chain,
                     "Emit the {M} + {M,L} + {M,L,G} leveled chain");
  simulate->add_option("--runs", sim.runs, "Repetitions per configuration")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--layer-overhead", sim.layer_overhead_ns,
                       "Injected per-layer profiling cost (ns)");
  simulate->add_option("--kernel-overhead", sim.kernel_overhead_ns,
                       "Injected per-kernel profiling cost (ns)");
  simulate->add_option("--metric-multiplier", sim.metric_multiplier,
                       "Metric-capture slowdown multiplier (>= 1)");
  simulate->add_option("--jitter", sim.jitter_ns,
                       "Max uniform jitter per span (ns)");
  simulate->add_option("--seed", sim.seed, "Jitter seed");
  simulate->add_option("--system", sim.system_path, "System spec JSON file");
  simulate->add_option("--out", sim.out, "Output directory");

  IngestOpts ing;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "Validate and persist JSONL bundles");
  ingest_cmd->add_option("inputs", ing.inputs, "Bundle JSONL files")
      ->required();
  ingest_cmd->add_option("--out", ing.out, "Output directory");

  CorrelateOpts cor;
  CLI::App* correlate_cmd = app.add_subcommand(
      "correlate", "Build the correlated model/layer/kernel hierarchy");
  correlate_cmd->add_option("inputs", cor.inputs, "Bundle JSONL files")
      ->required();
  correlate_cmd->add_option("--serialized-rerun", cor.serialized_rerun,
                            "Serialized twin bundle resolving ambiguities");
  correlate_cmd->add_option("--format", cor.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  correlate_cmd->add_option("--out", cor.out, "Output directory");

  OverheadOpts ovh;
  CLI::App* overhead_cmd = app.add_subcommand(
      "overhead", "Subtract per-level profiling overhead across a run chain");
  overhead_cmd->add_option("inputs", ovh.inputs, "Bundle JSONL files")
      ->required();
  overhead_cmd->add_option("--trim", ovh.trim,
                           "Trimmed-mean fraction across repetitions")
      ->check(CLI::Range(0.0, 0.49));
  overhead_cmd->add_option("--noise-tolerance", ovh.noise_tolerance,
                           "Negative-overhead clamp threshold (fraction)");
  overhead_cmd->add_option("--format", ovh.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  overhead_cmd->add_option("--out", ovh.out, "Output directory");

  AnalyzeOpts ana;
  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "Run selected analyses over bundles");
  analyze_cmd->add_option("inputs", ana.inputs, "Bundle JSONL files")
      ->required();
  analyze_cmd
      ->add_option("--analysis", ana.analyses,
                   "Selection: a1..a15, stages, roofline, all (repeatable or"
                   " comma-separated)")
      ->required();
  analyze_cmd->add_option("--system", ana.system_path,
                          "System spec JSON file (default: from run metadata)");
  analyze_cmd->add_option("--trim", ana.trim,
                          "Trimmed-mean fraction across repetitions")
      ->check(CLI::Range(0.0, 0.49));
  analyze_cmd->add_option("--epsilon", ana.epsilon,
                          "Optimal-batch doubling threshold");
  analyze_cmd->add_option("--noise-tolerance", ana.noise_tolerance,
                          "Latency noise tolerance (fraction)");
  analyze_cmd->add_option("--format", ana.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  analyze_cmd->add_option("--out", ana.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim, out);
    if (ingest_cmd->parsed()) return run_ingest(ing, out);
    if (correlate_cmd->parsed()) return run_correlate(cor, out);
    if (overhead_cmd->parsed()) return run_overhead(ovh, out);
    if (analyze_cmd->parsed()) return run_analyze(ana, out);
    err << "usage error: no subcommand\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const TraceError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace strata
