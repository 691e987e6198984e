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
#include "hart/trace.hpp"
#include "support.hpp"

using namespace hart;

namespace {

struct World {
    SynthOutput data;
    std::shared_ptr<SynonymTable> syn;
    BuiltinEmbedder embedder;
    BuiltinPairScorer scorer;
    VectorIndex index;
    LinearClassifier type_clf, mech_clf;

    World()
        : data(generate_synthetic(SynthConfig{.n_spans = 60, .n_docs = 400, .seed = 4})),
          syn(std::make_shared<SynonymTable>(data.synonyms)),
          embedder(128, syn),
          scorer(syn) {
        index = VectorIndex::build(data.corpus, embedder);
        const TrainParams p{.feature_dim = 4096, .epochs = 4};
        type_clf = train_builtin(training_examples(data.dataset, LabelSpace::HallucinationType), LabelSpace::HallucinationType, p);
        mech_clf = train_builtin(training_examples(data.dataset, LabelSpace::ErrorMechanism), LabelSpace::ErrorMechanism, p);
    }

    TraceContext ctx() const { return {index, data.corpus, embedder, scorer, type_clf, mech_clf}; }
};

const World& world() {
    static const World w;
    return w;
}

}  // namespace

TEST(Trace, ConfigValidation) {
    TraceConfig c;
    EXPECT_NO_THROW(c.validate());
    c.windows.clear();
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.k_per_query = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.top_k_final = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Trace, SpanProducesRankedTruncatedEvidence) {
    const auto& w = world();
    TraceConfig cfg;
    cfg.top_k_final = 3;
    const auto& s = w.data.dataset.front();
    const auto r = trace_span(s, s.spans.front(), cfg, w.ctx());
    EXPECT_EQ(r.sample_id, s.id);
    EXPECT_EQ(r.span_text, s.spans.front().text);
    ASSERT_EQ(r.evidence.ranking.size(), 3u);
    for (std::size_t i = 1; i < 3; ++i) {
        const auto& a = r.evidence.ranking[i - 1];
        const auto& b = r.evidence.ranking[i];
        EXPECT_TRUE(hit_before(a.score, a.doc_id, b.score, b.doc_id));
    }
    EXPECT_EQ(r.queries.size(), r.hits_per_query.size());
    EXPECT_GE(r.n_candidates, 3u);
    EXPECT_GT(r.type_probability, 0.0);
}

TEST(Trace, NonHallucinatedSpanIsRejected) {
    const auto& w = world();
    for (const auto& s : w.data.dataset) {
        for (const auto& sp : s.spans) {
            if (!sp.is_hallucination) {
                EXPECT_THROW(trace_span(s, sp, TraceConfig{}, w.ctx()), Error);
                return;
            }
        }
    }
    FAIL() << "fixture has no neutral span";
}

TEST(Trace, DatasetOrderAndResultsIgnoreThreadCount) {
    const auto& w = world();
    const auto one = trace_dataset(w.data.dataset, TraceConfig{}, w.ctx(), 1);
    const auto four = trace_dataset(w.data.dataset, TraceConfig{}, w.ctx(), 4);
    EXPECT_EQ(one.results, four.results);
    EXPECT_EQ(one.results.size(), w.data.dataset.size());
    EXPECT_TRUE(one.failures.empty());
    EXPECT_EQ(one.n_spans_total, one.results.size() + one.n_skipped_non_hallucinated);
    for (std::size_t i = 0; i < one.results.size(); ++i) EXPECT_EQ(one.results[i].sample_id, w.data.dataset[i].id);
}

TEST(Trace, BadSpanIsRecordedAndOthersContinue) {
    const auto& w = world();
    auto ds = std::vector<Sample>(w.data.dataset.begin(), w.data.dataset.begin() + 3);
    ds[1].spans.front().end = 100000;
    const auto run = trace_dataset(ds, TraceConfig{}, w.ctx(), 2);
    EXPECT_EQ(run.results.size(), 2u);
    ASSERT_EQ(run.failures.size(), 1u);
    EXPECT_EQ(run.failures[0].sample_id, ds[1].id);
    EXPECT_EQ(run.failures[0].code, Errc::SpanOutOfBounds);
    EXPECT_EQ(failures_json(run.failures)[0]["code"], "SpanOutOfBounds");
}

TEST(Trace, WithoutRerankUsesCoarseOrder) {
    const auto& w = world();
    TraceConfig cfg;
    cfg.rerank = false;
    const auto& s = w.data.dataset[2];
    const auto r = trace_span(s, s.spans.front(), cfg, w.ctx());
    const auto outcome =
        retrieve_for_span(utf8::decode(s.response), s.spans.front(), cfg.windows, cfg.k_per_query, w.index, w.embedder, w.data.corpus, nullptr);
    auto expect = rank_by_coarse(outcome.candidates);
    expect.truncate(cfg.top_k_final);
    EXPECT_EQ(r.evidence.ranking, expect.ranking);
}

TEST(Trace, JsonRoundTrip) {
    const auto& w = world();
    test::TempDir dir("trace");
    const auto run = trace_dataset(w.data.dataset, TraceConfig{}, w.ctx());
    save_traces(dir.file("t.jsonl"), {{"tool", "hart"}}, run.results);
    nlohmann::json manifest;
    const auto back = load_traces(dir.file("t.jsonl"), &manifest);
    EXPECT_EQ(manifest["tool"], "hart");
    EXPECT_EQ(back, run.results);
    const auto j = to_json(run.results.front());
    EXPECT_EQ(j["evidence"][0]["rank"], 1);
    EXPECT_TRUE(j["diagnostics"].contains("hits_per_query"));
}
