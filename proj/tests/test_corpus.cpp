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

#include "hart/corpus.hpp"
#include "support.hpp"

using namespace hart;
using nlohmann::json;

namespace {

json record(json spans, std::string response = "Curie was born in Warsaw in 1867.") {
    return {{"id", "s1"}, {"prompt", "Who?"}, {"response", response}, {"spans", std::move(spans)}};
}

json span(int begin, int end, std::string text) {
    return {{"span_id", "p1"},     {"begin", begin},  {"end", end}, {"text", text}, {"is_hallucination", true},
            {"hallucination_type", "fact"}, {"error_mechanism", "EntityMismatch"}, {"gold_evidence_ids", {"e1"}}};
}

Errc code_of(const json& j) {
    try {
        sample_from_json(j);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return Errc::Io;
}

}  // namespace

TEST(Labels, ParseCaseInsensitively) {
    EXPECT_EQ(parse_hallucination_type("FABRICATE"), HallucinationType::Fabricate);
    EXPECT_EQ(parse_error_mechanism("contextleakage"), ErrorMechanism::ContextLeakage);
    for (auto t : kHallucinationTypes) EXPECT_EQ(parse_hallucination_type(to_string(t)), t);
    for (auto m : kErrorMechanisms) EXPECT_EQ(parse_error_mechanism(to_string(m)), m);
    EXPECT_THROW(parse_hallucination_type("Myth"), Error);
}

TEST(Sample, ParsesValidRecord) {
    const auto s = sample_from_json(record({span(18, 24, "Warsaw")}));
    ASSERT_EQ(s.spans.size(), 1u);
    EXPECT_EQ(s.spans[0].text, "Warsaw");
    EXPECT_EQ(s.spans[0].hallucination_type, HallucinationType::Fact);
    EXPECT_EQ(s.spans[0].gold_evidence_ids, std::vector<std::string>{"e1"});
    EXPECT_EQ(sample_from_json(to_json(s)), s);
}

TEST(Sample, OffsetsCountScalarValues) {
    const std::string resp = "Z\xC3\xBCrich is in France.";
    const auto s = sample_from_json(record({span(13, 19, "France")}, resp));
    EXPECT_EQ(s.spans[0].text, "France");
}

TEST(Sample, TextDefaultsToSubstring) {
    auto sp = span(0, 5, "");
    sp.erase("text");
    EXPECT_EQ(sample_from_json(record({sp})).spans[0].text, "Curie");
}

TEST(Sample, RejectsBadSpans) {
    EXPECT_EQ(code_of(record({span(20, 18, "x")})), Errc::SpanOutOfBounds);
    EXPECT_EQ(code_of(record({span(-1, 3, "x")})), Errc::SpanOutOfBounds);
    EXPECT_EQ(code_of(record({span(0, 99, "x")})), Errc::SpanOutOfBounds);
    EXPECT_EQ(code_of(record({span(18, 24, "Krakow")})), Errc::MalformedLine);
    EXPECT_EQ(code_of(record({span(18, 24, "Warsaw"), span(0, 5, "Curie")})), Errc::DuplicateId);
    auto unlabeled = span(18, 24, "Warsaw");
    unlabeled.erase("error_mechanism");
    EXPECT_EQ(code_of(record({unlabeled})), Errc::MalformedLine);
    auto wrong = span(18, 24, "Warsaw");
    wrong["hallucination_type"] = "Rumor";
    EXPECT_EQ(code_of(record({wrong})), Errc::UnknownLabel);
    EXPECT_EQ(code_of(json::array()), Errc::MalformedLine);
}

TEST(Sample, NonHallucinatedSpanNeedsNoLabels) {
    json sp = {{"span_id", "n1"}, {"begin", 0}, {"end", 5}, {"is_hallucination", false}};
    const auto s = sample_from_json(record({sp}));
    EXPECT_FALSE(s.spans[0].is_hallucination);
    EXPECT_FALSE(s.spans[0].hallucination_type.has_value());
}

TEST(Corpus, LookupAndDuplicates) {
    EvidenceCorpus c;
    c.add({"e1", "first", "wiki"});
    c.add({"e2", "second", ""});
    EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(c.at("e2").text, "second");
    EXPECT_EQ(c.find("e3"), nullptr);
    EXPECT_THROW(c.add({"e1", "again", ""}), Error);
    EXPECT_THROW(c.add({"", "x", ""}), Error);
    EXPECT_THROW(c.add({"e9", "", ""}), Error);
    try {
        c.at("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownDocId);
    }
}

TEST(Jsonl, RoundTripsAndReportsLineNumbers) {
    test::TempDir dir("corpus");
    EvidenceCorpus c;
    c.add({"e1", "alpha", "a"});
    c.add({"e2", "beta \xE2\x82\xAC", "b"});
    save_corpus(dir.file("ev.jsonl"), c);
    const auto back = load_corpus(dir.file("ev.jsonl"));
    EXPECT_EQ(back.docs(), c.docs());

    write_file(dir.file("bad.jsonl"), "{\"id\":\"e1\",\"text\":\"a\"}\n\n{\"id\":\"e1\",\"text\":\"b\"}\n");
    try {
        load_corpus(dir.file("bad.jsonl"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateId);
        EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
    }
    write_file(dir.file("junk.jsonl"), "{not json}\n");
    EXPECT_THROW(load_corpus(dir.file("junk.jsonl")), Error);
    EXPECT_THROW(load_corpus(dir.file("missing.jsonl")), Error);
}

TEST(Distribution, ProportionsSumToOne) {
    std::vector<Sample> data;
    for (int i = 0; i < 4; ++i) {
        auto s = sample_from_json(record({span(18, 24, "Warsaw")}));
        s.id = "s" + std::to_string(i);
        if (i == 3) s.spans[0].hallucination_type = HallucinationType::Logic;
        data.push_back(s);
    }
    const auto d = label_distribution(data);
    EXPECT_EQ(d.n_spans, 4u);
    EXPECT_DOUBLE_EQ(d.types.at(HallucinationType::Fact), 0.75);
    EXPECT_DOUBLE_EQ(d.types.at(HallucinationType::Logic), 0.25);
    EXPECT_DOUBLE_EQ(d.types.at(HallucinationType::Entity), 0.0);
    EXPECT_DOUBLE_EQ(d.mechanisms.at(ErrorMechanism::EntityMismatch), 1.0);
    EXPECT_THROW(label_distribution({}), Error);
}
