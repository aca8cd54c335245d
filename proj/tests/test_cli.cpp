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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "strata/cli.hpp"
#include "strata/collector.hpp"

namespace strata {
namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"strata"};
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  std::ostringstream out, err;
  CliResult result;
  result.code =
      run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("strata_cli_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

TEST_CASE("help and version print to stdout and succeed") {
  const CliResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(contains(help.out, "simulate"));
  CHECK(contains(help.out, "analyze"));
  CHECK(help.err.empty());

  const CliResult version = run({"--version"});
  CHECK(version.code == 0);
  CHECK(contains(version.out, "strata 1.0.0"));
}

TEST_CASE("usage mistakes exit with code 2 and an explanation") {
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);  // a subcommand is required
  CHECK(run({"simulate"}).code == 2);  // --model is required
  CHECK(run({"simulate", "--model", "minimal", "--bogus"}).code == 2);

  const CliResult fixture = run({"simulate", "--model", "no-such-model"});
  CHECK(fixture.code == 2);
  CHECK(contains(fixture.err, "neither a fixture name"));
  CHECK(contains(fixture.err, "minimal"));  // lists what exists

  TempDir tmp;
  CHECK(run({"simulate", "--model", "minimal", "--levels", "MXQ", "--out",
             tmp.file("x")})
            .code == 2);
  CHECK(run({"analyze", "missing.jsonl", "--analysis", "zz"}).code == 2);

  const CliResult gone = run({"analyze", tmp.file("absent.jsonl"),
                              "--analysis", "a1"});
  CHECK(gone.code == 2);
  CHECK(contains(gone.err, "cannot open input file"));

  CHECK(run({"correlate", tmp.file("absent.jsonl"), "--format", "yaml"})
            .code == 2);
}

TEST_CASE("simulate writes deterministic, self-describing bundle files") {
  TempDir a;
  TempDir b;
  const CliResult first =
      run({"simulate", "--model", "minimal", "--out", a.file("runs")});
  REQUIRE(first.code == 0);
  const std::string expected =
      (std::filesystem::path(a.file("runs")) / "minimal_b1_MLG_c_r0.jsonl")
          .string();
  CHECK(contains(first.out, expected));
  REQUIRE(std::filesystem::exists(expected));

  const TraceBundle bundle = load(expected);
  CHECK(bundle.meta.batch_size == 1);
  CHECK(bundle.meta.profiling_levels ==
        LevelSet{Level::Model, Level::Layer, Level::Kernel});
  CHECK(bundle.spans.size() == 4);  // model + layer + launch + exec

  REQUIRE(run({"simulate", "--model", "minimal", "--out", b.file("runs")})
              .code == 0);
  CHECK(slurp(expected) ==
        slurp((std::filesystem::path(b.file("runs")) /
               "minimal_b1_MLG_c_r0.jsonl")
                  .string()));
}

TEST_CASE("simulate --chain emits the three leveled bundles") {
  TempDir tmp;
  const CliResult result = run(
      {"simulate", "--model", "minimal", "--chain", "--out", tmp.file("c")});
  REQUIRE(result.code == 0);
  for (const std::string& name :
       {"minimal_b1_M_c_r0.jsonl", "minimal_b1_ML_c_r0.jsonl",
        "minimal_b1_MLG_c_r0.jsonl"}) {
    const std::string path =
        (std::filesystem::path(tmp.file("c")) / name).string();
    CAPTURE(path);
    REQUIRE(std::filesystem::exists(path));
    CHECK(validate_bundle(load(path)).empty());
  }
}

TEST_CASE("ingest validates and persists a cleaned copy") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "minimal", "--out", tmp.file("in")})
              .code == 0);
  const std::string source =
      (std::filesystem::path(tmp.file("in")) / "minimal_b1_MLG_c_r0.jsonl")
          .string();
  const CliResult result =
      run({"ingest", source, "--out", tmp.file("out")});
  REQUIRE(result.code == 0);
  const std::string copied =
      (std::filesystem::path(tmp.file("out")) /
       "minimal_b1_MLG_c_r0_validated.jsonl")
          .string();
  REQUIRE(std::filesystem::exists(copied));
  CHECK(slurp(copied) == slurp(source));  // round-trip is byte-exact
  CHECK(contains(result.out, "4 spans"));
  CHECK(contains(result.out, "M+L+G"));

  const std::string broken = tmp.file("broken.jsonl");
  std::ofstream(broken) << "definitely not json\n";
  const CliResult bad = run({"ingest", broken, "--out", tmp.file("out")});
  CHECK(bad.code == 1);
  CHECK(contains(bad.err, "line 1"));
}

TEST_CASE("correlate reports the tree and resolves via a serialized rerun") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "minimal", "--out", tmp.file("r")})
              .code == 0);
  const std::string minimal =
      (std::filesystem::path(tmp.file("r")) / "minimal_b1_MLG_c_r0.jsonl")
          .string();
  const CliResult clean =
      run({"correlate", minimal, "--out", tmp.file("t")});
  REQUIRE(clean.code == 0);
  CHECK(contains(clean.out, "layers=1 kernels=1 ambiguities=0 orphans=0"));
  for (const std::string& name : {"tree.csv", "ambiguities.csv", "orphans.csv"}) {
    CHECK(std::filesystem::exists(std::filesystem::path(tmp.file("t")) / name));
  }

  REQUIRE(run({"simulate", "--model", "overlap", "--out", tmp.file("r")})
              .code == 0);
  REQUIRE(run({"simulate", "--model", "overlap", "--serialized", "--out",
               tmp.file("r")})
              .code == 0);
  const std::string concurrent =
      (std::filesystem::path(tmp.file("r")) / "branchy_b1_MLG_c_r0.jsonl")
          .string();
  const std::string serialized =
      (std::filesystem::path(tmp.file("r")) / "branchy_b1_MLG_s_r0.jsonl")
          .string();

  const CliResult ambiguous =
      run({"correlate", concurrent, "--out", tmp.file("amb")});
  REQUIRE(ambiguous.code == 0);
  CHECK(contains(ambiguous.out, "note: ambiguities remain"));
  CHECK(!contains(ambiguous.out, "ambiguities=0"));

  const CliResult resolved =
      run({"correlate", concurrent, "--serialized-rerun", serialized, "--out",
           tmp.file("res")});
  REQUIRE(resolved.code == 0);
  CHECK(contains(resolved.out, "layers=4"));
  CHECK(contains(resolved.out, "ambiguities=0 orphans=0"));
}

TEST_CASE("overhead consumes a leveled chain and writes the report") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "overhead-chain", "--chain",
               "--layer-overhead", "15700000", "--metric-multiplier", "2",
               "--out", tmp.file("chain")})
              .code == 0);
  std::vector<std::string> args{"overhead"};
  for (const std::string& name :
       {"overhead-chain_b1_M_c_r0.jsonl", "overhead-chain_b1_ML_c_r0.jsonl",
        "overhead-chain_b1_MLG_c_r0.jsonl"}) {
    args.push_back(
        (std::filesystem::path(tmp.file("chain")) / name).string());
  }
  args.insert(args.end(), {"--out", tmp.file("report")});
  const CliResult result = run(args);
  REQUIRE(result.code == 0);
  CHECK(contains(result.out, "warnings=0"));
  CHECK(contains(result.out, "model overhead adding L: 1.57e+08 ns"));
  CHECK(contains(result.out, "model overhead adding G: 5.82e+07 ns"));
  const std::string csv = slurp(
      (std::filesystem::path(tmp.file("report")) / "overhead.csv").string());
  CHECK(contains(csv, "overhead_ns_adding_L"));
  CHECK(contains(csv, "overhead_ns_adding_G"));
  CHECK(contains(csv, "model_overhead_ns_adding_L=1.57e+08"));
}

TEST_CASE("analyze runs the full selection deterministically") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "minimal", "--batch", "1", "2", "4", "8",
               "--out", tmp.file("runs")})
              .code == 0);
  std::vector<std::string> inputs;
  for (const char* batch : {"1", "2", "4", "8"}) {
    inputs.push_back((std::filesystem::path(tmp.file("runs")) /
                      ("minimal_b" + std::string(batch) + "_MLG_c_r0.jsonl"))
                         .string());
  }

  auto analyze_into = [&](const std::string& dir) {
    std::vector<std::string> args{"analyze"};
    args.insert(args.end(), inputs.begin(), inputs.end());
    args.insert(args.end(), {"--analysis", "all", "--out", dir});
    return run(args);
  };

  const CliResult first = analyze_into(tmp.file("out1"));
  REQUIRE(first.code == 0);
  // Cross-batch tables have plain names; per-batch tables carry the suffix.
  for (const std::string& name :
       {"a1.csv", "a15.csv", "roofline.csv", "a2_b1.csv", "a3_a4_b8.csv",
        "a5_a6_a7_b2.csv", "a8_b4.csv", "a9_b1.csv", "a10_b8.csv",
        "a11_b1.csv", "a12_b2.csv", "a13_b4.csv", "a14_b8.csv",
        "stages_b1.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(std::filesystem::path(tmp.file("out1")) /
                                  name));
  }
  const std::string a1 =
      slurp((std::filesystem::path(tmp.file("out1")) / "a1.csv").string());
  CHECK(contains(a1, "optimal_batch_size="));
  CHECK(contains(a1, "online_latency_ns="));

  const CliResult second = analyze_into(tmp.file("out2"));
  REQUIRE(second.code == 0);
  for (const std::string& name : {"a1.csv", "a9_b1.csv", "a13_b4.csv"}) {
    CHECK(slurp((std::filesystem::path(tmp.file("out1")) / name).string()) ==
          slurp((std::filesystem::path(tmp.file("out2")) / name).string()));
  }

  std::vector<std::string> json_args{"analyze", inputs[0], "--analysis", "a1",
                                     "--format", "json", "--out",
                                     tmp.file("json")};
  REQUIRE(run(json_args).code == 0);
  const nlohmann::json parsed = nlohmann::json::parse(
      slurp((std::filesystem::path(tmp.file("json")) / "a1.json").string()));
  CHECK(parsed["name"] == "a1");
  CHECK(parsed["rows"].size() == 1);
}

TEST_CASE("analyze refuses inputs that lack the needed levels") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "minimal", "--levels", "M", "--out",
               tmp.file("m")})
              .code == 0);
  const std::string model_only =
      (std::filesystem::path(tmp.file("m")) / "minimal_b1_M_c_r0.jsonl")
          .string();
  const CliResult refused =
      run({"analyze", model_only, "--analysis", "a2", "--out", tmp.file("x")});
  CHECK(refused.code == 1);
  CHECK(contains(refused.err, "analysis a2 requires profiling levels L"));

  // a1 only needs the model level, so the same input satisfies it.
  CHECK(run({"analyze", model_only, "--analysis", "a1", "--out",
             tmp.file("ok")})
            .code == 0);
}

TEST_CASE("analyze refuses ambiguous bundles until they are resolved") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--model", "overlap", "--out", tmp.file("o")})
              .code == 0);
  const std::string concurrent =
      (std::filesystem::path(tmp.file("o")) / "branchy_b1_MLG_c_r0.jsonl")
          .string();
  const CliResult refused = run(
      {"analyze", concurrent, "--analysis", "a2", "--out", tmp.file("x")});
  CHECK(refused.code == 1);
  CHECK(contains(refused.err, "ambiguous"));
  CHECK(contains(refused.err, "serialized"));

  // The serialized twin of the same workload analyzes cleanly.
  REQUIRE(run({"simulate", "--model", "overlap", "--serialized", "--out",
               tmp.file("o")})
              .code == 0);
  const std::string serialized =
      (std::filesystem::path(tmp.file("o")) / "branchy_b1_MLG_s_r0.jsonl")
          .string();
  CHECK(run({"analyze", serialized, "--analysis", "a2", "--out",
             tmp.file("y")})
            .code == 0);
}

}  // namespace
}  // namespace strata
