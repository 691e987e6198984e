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

#include "hart/synth.hpp"
#include "support.hpp"

using namespace hart;

TEST(Synth, PresetsAreNormalizedMixtures) {
    for (const auto& name : preset_names()) {
        const auto m = preset(name);
        double t = 0.0, k = 0.0;
        for (double x : m.types) t += x;
        for (double x : m.mechanisms) k += x;
        EXPECT_NEAR(t, 1.0, 1e-12) << name;
        EXPECT_NEAR(k, 1.0, 1e-12) << name;
    }
    EXPECT_NEAR(preset("qwen").types[1], 0.7263, 0.001);
    EXPECT_THROW(preset("llama"), Error);
}

TEST(Synth, SameSeedSameFiles) {
    test::TempDir a("synA"), b("synB");
    const SynthConfig cfg{.n_spans = 50, .n_docs = 300, .seed = 12};
    write_synthetic(generate_synthetic(cfg), a.path().string());
    write_synthetic(generate_synthetic(cfg), b.path().string());
    for (const char* f : {"dataset.jsonl", "evidence.jsonl", "synonyms.json"}) {
        EXPECT_EQ(read_file(a.file(f)), read_file(b.file(f))) << f;
    }
    auto other = cfg;
    other.seed = 13;
    write_synthetic(generate_synthetic(other), b.path().string());
    EXPECT_NE(read_file(a.file("dataset.jsonl")), read_file(b.file("dataset.jsonl")));
}

TEST(Synth, ReferentialIntegrityAndSpanOffsets) {
    const auto out = generate_synthetic(SynthConfig{.n_spans = 200, .n_docs = 1000, .seed = 3});
    EXPECT_EQ(out.dataset.size(), 200u);
    EXPECT_EQ(out.corpus.size(), 1000u);
    std::set<std::string> ids;
    for (const auto& s : out.dataset) {
        EXPECT_TRUE(ids.insert(s.id).second);
        const auto chars = utf8::decode(s.response);
        for (const auto& sp : s.spans) {
            EXPECT_EQ(utf8::slice(chars, sp.begin, sp.end), sp.text);
            if (!sp.is_hallucination) continue;
            ASSERT_EQ(sp.gold_evidence_ids.size(), 1u);
            EXPECT_NE(out.corpus.find(sp.gold_evidence_ids[0]), nullptr);
            EXPECT_TRUE(sp.hallucination_type && sp.error_mechanism);
        }
    }
}

TEST(Synth, GoldIsParaphrasedAndSurvivesJsonRoundTrip) {
    test::TempDir dir("syn");
    const auto out = generate_synthetic(SynthConfig{.n_spans = 30, .n_docs = 120, .seed = 5});
    write_synthetic(out, dir.path().string());
    const auto ds = load_dataset(dir.file("dataset.jsonl"));
    const auto corpus = load_corpus(dir.file("evidence.jsonl"));
    ASSERT_EQ(ds.size(), out.dataset.size());
    const auto syn = std::make_shared<SynonymTable>(out.synonyms);
    BuiltinEmbedder plain(256), aware(256, syn);
    double gain = 0.0;
    for (const auto& s : ds) {
        const auto& sp = s.spans.front();
        const auto& gold = corpus.at(sp.gold_evidence_ids[0]).text;
        EXPECT_NE(gold.find(sp.text.substr(0, sp.text.find(' '))), std::string::npos) << "gold names the subject";
        gain += cosine(aware.embed(sp.text), aware.embed(gold)) - cosine(plain.embed(sp.text), plain.embed(gold));
    }
    EXPECT_GT(gain, 0.0) << "synonyms should bring span and gold closer";
}

TEST(Synth, MarginalsTrackPreset) {
    for (const char* name : {"qwen", "mistral", "uniform"}) {
        const auto out = generate_synthetic(SynthConfig{.n_spans = 1000, .n_docs = 1000, .seed = 17, .preset = name});
        const auto d = label_distribution(out.dataset);
        const auto m = preset(name);
        for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(d.types.at(kHallucinationTypes[t]), m.types[t], 0.05) << name;
        for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(d.mechanisms.at(kErrorMechanisms[k]), m.mechanisms[k], 0.05) << name;
    }
}

TEST(Synth, InvalidConfigs) {
    EXPECT_THROW(generate_synthetic(SynthConfig{.n_spans = 0}), Error);
    EXPECT_THROW(generate_synthetic(SynthConfig{.n_spans = 10, .n_docs = 5}), Error);
    EXPECT_THROW(generate_synthetic(SynthConfig{.n_spans = synth::kMaxSubjects + 1, .n_docs = 5000}), Error);
    EXPECT_THROW(generate_synthetic(SynthConfig{.n_spans = 10, .n_docs = 10, .preset = "x"}), Error);
}
