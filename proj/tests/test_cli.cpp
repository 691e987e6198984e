// Copyright (C) 2026 The hart-trace Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace hart;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome hart_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "hart");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

/// Runs synth, build-index and train-classifiers into `dir`.
void prepare(const test::TempDir& dir, const std::string& spans = "40", const std::string& docs = "300") {
    const auto d = dir.path().string();
    ASSERT_EQ(hart_cli({"synth", "--spans", spans, "--docs", docs, "--seed", "3", "--out-dir", d + "/data"}).code, 0);
    ASSERT_EQ(hart_cli({"build-index", "--corpus", d + "/data/evidence.jsonl", "--synonyms", d + "/data/synonyms.json",
                        "--out", d + "/run/index.bin"})
                  .code,
              0);
    ASSERT_EQ(hart_cli({"train-classifiers", "--dataset", d + "/data/dataset.jsonl", "--out-dir", d + "/run", "--epochs", "3"}).code,
              0);
}

std::vector<std::string> trace_args(const test::TempDir& dir, const std::string& out) {
    const auto d = dir.path().string();
    return {"trace", "--dataset", d + "/data/dataset.jsonl", "--corpus", d + "/data/evidence.jsonl", "--index",
            d + "/run/index.bin", "--out", out};
}

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(hart_cli({}).code, 1);
    EXPECT_EQ(hart_cli({"frobnicate"}).code, 1);
    EXPECT_EQ(hart_cli({"analytic", "--k", "5", "--bogus"}).code, 1);
    EXPECT_EQ(hart_cli({"analytic"}).code, 1);
    EXPECT_EQ(hart_cli({"synth", "--out-dir", "x", "--preset", "llama"}).code, 1);
    EXPECT_EQ(hart_cli({"analytic", "--p", "0.2", "--p-g", "0.1,0.1", "--k", "2"}).code, 1);
}

TEST(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(hart_cli({"--help"}).code, 0);
    const auto v = hart_cli({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
}

TEST(Cli, ValidationErrorsExitOne) {
    const auto r = hart_cli({"analytic", "--p", "1.5", "--k", "2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("InvalidProbability"), std::string::npos);
    EXPECT_EQ(hart_cli({"analytic", "--p", "0.5", "--k", "2", "--trials", "0"}).code, 1);
}

TEST(Cli, MissingInputIsRuntimeError) {
    const auto r = hart_cli({"noise-check", "--llm", "/nonexistent/a", "--human", "/nonexistent/b", "--window", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Io"), std::string::npos);
}

TEST(Cli, AnalyticJson) {
    const auto r = hart_cli({"--json", "analytic", "--p", "0.3", "--k", "5", "--trials", "20000", "--seed", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["closed_form"].get<double>(), 0.83193, 1e-5);
    EXPECT_TRUE(j["within_three_sigma"].get<bool>());
    const auto multi = nlohmann::json::parse(hart_cli({"analytic", "--json", "--p-g", "0.1,0.2", "--k", "5"}).out);
    EXPECT_NEAR(multi["closed_form"].get<double>(), 0.83193, 1e-5);
}

TEST(Cli, NoiseCheck) {
    test::TempDir dir("noise");
    write_file(dir.file("llm.txt"), "A\nB\nC\nD\n");
    write_file(dir.file("human.txt"), "A\nX\nC\nD\n");
    const auto r = hart_cli({"noise-check", "--json", "--llm", dir.file("llm.txt"), "--human", dir.file("human.txt"), "--window",
                             "4", "--tau", "0.2"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["epsilon"].get<double>(), 0.25);
    EXPECT_TRUE(j["triggered"].get<bool>());
    EXPECT_EQ(hart_cli({"noise-check", "--llm", dir.file("llm.txt"), "--human", dir.file("human.txt"), "--window", "9"}).code, 1);
}

TEST(Cli, ConfigFileFillsUnsetFlagsOnly) {
    test::TempDir dir("cfg");
    write_file(dir.file("c.json"), R"({"p": 0.5, "k": 2, "trials": 1000, "json": true})");
    auto j = nlohmann::json::parse(hart_cli({"analytic", "--config", dir.file("c.json")}).out);
    EXPECT_DOUBLE_EQ(j["closed_form"].get<double>(), 0.75);
    EXPECT_EQ(j["trials"], 1000);
    j = nlohmann::json::parse(hart_cli({"analytic", "--config", dir.file("c.json"), "--k", "1"}).out);
    EXPECT_DOUBLE_EQ(j["closed_form"].get<double>(), 0.5);
    write_file(dir.file("bad.json"), "[1, 2]");
    EXPECT_EQ(hart_cli({"analytic", "--config", dir.file("bad.json")}).code, 1);
}

TEST(Cli, SynthWritesFilesAndManifest) {
    test::TempDir dir("clisynth");
    const auto r = hart_cli({"--json", "synth", "--spans", "20", "--docs", "60", "--out-dir", dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"dataset.jsonl", "evidence.jsonl", "synonyms.json", "synth.manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir.file(f))) << f;
    }
    EXPECT_EQ(load_dataset(dir.file("dataset.jsonl")).size(), 20u);
    EXPECT_EQ(nlohmann::json::parse(r.out)["n_docs"], 60);
}

TEST(Cli, PipelineRunsAndIsReproducible) {
    test::TempDir dir("pipe");
    prepare(dir);
    const auto d = dir.path().string();
    EXPECT_TRUE(std::filesystem::exists(d + "/run/index.bin.manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(d + "/run/type.clf"));

    auto a = trace_args(dir, d + "/out/a.jsonl");
    a.insert(a.begin(), {"--threads", "1"});
    auto b = trace_args(dir, d + "/out/b.jsonl");
    b.insert(b.begin(), {"--threads", "3"});
    ASSERT_EQ(hart_cli(a).code, 0);
    ASSERT_EQ(hart_cli(b).code, 0);
    // Thread count is deliberately not part of the manifest.
    EXPECT_EQ(read_file(d + "/out/a.jsonl"), read_file(d + "/out/b.jsonl"));

    const std::vector<std::string> ev{"eval", "--traces", d + "/out/a.jsonl", "--dataset", d + "/data/dataset.jsonl",
                                      "--corpus", d + "/data/evidence.jsonl", "--report", "json"};
    const auto e1 = hart_cli(ev), e2 = hart_cli(ev);
    ASSERT_EQ(e1.code, 0) << e1.err;
    EXPECT_EQ(e1.out, e2.out);
    const auto rep = nlohmann::json::parse(e1.out);
    EXPECT_EQ(rep["n_spans"], 40);
    EXPECT_GT(rep["k"]["10"]["recall"].get<double>(), 0.5);
    EXPECT_EQ(rep["manifest"]["config"]["provider_id"], BuiltinEmbedder(256, std::make_shared<SynonymTable>(synthetic_synonyms())).id());

    const auto table = hart_cli({"eval", "--traces", d + "/out/a.jsonl", "--dataset", d + "/data/dataset.jsonl", "--corpus",
                                 d + "/data/evidence.jsonl", "--k", "1,5"});
    EXPECT_NE(table.out.find("R@5"), std::string::npos);
}

TEST(Cli, AblateReportsAllRows) {
    test::TempDir dir("abl");
    prepare(dir, "30", "200");
    const auto d = dir.path().string();
    const auto r = hart_cli({"--json", "ablate", "--dataset", d + "/data/dataset.jsonl", "--corpus", d + "/data/evidence.jsonl",
                             "--index", d + "/run/index.bin"});
    ASSERT_EQ(r.code, 0) << r.err;
    std::set<std::string> names;
    const auto j = nlohmann::json::parse(r.out);
    for (const auto& row : j["rows"]) names.insert(row["name"]);
    for (const char* n : {kArmDense, kArmDenseRerank, kArmDenseMulti, kArmFull, kBaselineBm25, kBaselineDpr, kBaselineCrossEncoder}) {
        EXPECT_TRUE(names.count(n)) << n;
    }
}

TEST(Cli, MismatchedProviderIsRejected) {
    test::TempDir dir("mis");
    prepare(dir, "10", "40");
    auto args = trace_args(dir, dir.file("t.jsonl"));
    args.insert(args.end(), {"--dim", "64"});
    const auto r = hart_cli(args);
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(std::filesystem::exists(dir.file("t.jsonl")));
}

TEST(Cli, MalformedDatasetIsValidationError) {
    test::TempDir dir("bad");
    prepare(dir, "10", "40");
    const auto d = dir.path().string();
    auto j = to_json(load_dataset(d + "/data/dataset.jsonl").front());
    j["spans"][0]["end"] = 100000;
    write_file(d + "/data/bad.jsonl", j.dump() + "\n");
    auto args = trace_args(dir, d + "/out/t.jsonl");
    args[2] = d + "/data/bad.jsonl";
    const auto r = hart_cli(args);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("SpanOutOfBounds"), std::string::npos);
}

TEST(Cli, FailedSpansExitTwoAndAreListed) {
    test::TempDir dir("fail");
    prepare(dir, "10", "40");
    const auto d = dir.path().string();
    const int port = 1;  // nothing listens on tcpmux; connects are refused at once
    auto args = trace_args(dir, d + "/out/t.jsonl");
    args.insert(args.end(), {"--reranker", "remote", "--remote-url", "http://127.0.0.1:" + std::to_string(port)});
    const auto r = hart_cli(args);
    EXPECT_EQ(r.code, 2) << r.err;
    const auto failures = nlohmann::json::parse(read_file(d + "/out/t.jsonl.failures.json"));
    EXPECT_EQ(failures.size(), 10u);
    EXPECT_EQ(failures[0]["code"], "ScorerFailure");
    EXPECT_NE(failures[0]["message"].get<std::string>().find("/rerank"), std::string::npos);
}
