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

#include <numeric>

#include "hart/annotate.hpp"
#include "support.hpp"

using namespace hart;

namespace {

SelectionProblem random_problem(Rng& rng, std::size_t n, double lambda, std::size_t budget) {
    SelectionProblem p;
    p.lambda = lambda;
    p.budget = budget;
    std::vector<std::vector<float>> vecs;
    for (std::size_t i = 0; i < n; ++i) {
        p.ids.push_back(test::doc_id(i));
        p.rel.push_back(rng.uniform());
        auto v = test::random_vector(rng, 6);
        for (auto& x : v) x = std::abs(x);
        vecs.push_back(normalize(v).values);
    }
    p.sim.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) p.sim[i][j] = dot(vecs[i], vecs[j]);
    }
    return p;
}

NoiseWindow window(std::vector<std::string> a, std::vector<std::string> b, std::size_t w, double tau) {
    return {std::move(a), std::move(b), w, tau};
}

}  // namespace

TEST(Selection, ZeroLambdaIsTopByRelevance) {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_problem(rng, 2 + rng.below(12), 0.0, 1 + rng.below(5));
        std::vector<std::size_t> order(p.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p.rel[a] != p.rel[b] ? p.rel[a] > p.rel[b] : a < b; });
        order.resize(std::min(order.size(), p.budget));
        EXPECT_EQ(greedy_select(p), order);
    }
}

TEST(Selection, DuplicateTextSuppressedUnderLargeLambda) {
    BuiltinPairScorer rel;
    BuiltinEmbedder sim(64);
    SelectionObjective obj{.lambda = 10.0, .budget = 2, .relevance = &rel, .similarity = &sim};
    const std::vector<EvidenceDoc> cands{{"a", "Curie was born in Warsaw", ""}, {"b", "Curie was born in Warsaw", ""}};
    const auto out = select_evidence("Curie born Warsaw", cands, obj);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].id, "a");
    obj.lambda = 0.0;
    EXPECT_EQ(select_evidence("Curie born Warsaw", cands, obj).size(), 2u);
}

TEST(Selection, OutputIsDistinctAndWithinBudget) {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_problem(rng, 1 + rng.below(10), rng.uniform() * 2.0, 1 + rng.below(4));
        const auto s = greedy_select(p);
        EXPECT_LE(s.size(), p.budget);
        std::set<std::size_t> u(s.begin(), s.end());
        EXPECT_EQ(u.size(), s.size());
    }
}

TEST(Selection, GreedyNeverBeatsExhaustive) {
    Rng rng(43);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_problem(rng, 2 + rng.below(9), rng.uniform(), 1 + rng.below(3));
        const double g = objective_value(p, greedy_select(p));
        const auto ex = exhaustive_select(p);
        EXPECT_LE(g, ex.value + 1e-12);
        EXPECT_DOUBLE_EQ(objective_value(p, ex.subset), ex.value);
        worst = std::max(worst, ex.value - g);
    }
    RecordProperty("max_gap", std::to_string(worst));
}

TEST(Selection, RedundancyOfPairIsTheirSimilarity) {
    Rng rng(44);
    const auto p = random_problem(rng, 4, 1.0, 3);
    EXPECT_EQ(redundancy(p, {2}), 0.0);
    EXPECT_DOUBLE_EQ(redundancy(p, {1, 3}), p.sim[1][3]);
    EXPECT_DOUBLE_EQ(redundancy(p, {3, 1, 0}), redundancy(p, {0, 1, 3}));
}

TEST(Selection, Errors) {
    BuiltinPairScorer rel;
    BuiltinEmbedder sim(64);
    SelectionObjective obj{.relevance = &rel, .similarity = &sim};
    EXPECT_THROW(select_evidence("x", {}, obj), Error);
    try {
        select_evidence("x", {{"a", "t", ""}, {"a", "u", ""}}, obj);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DuplicateId);
    }
    obj.budget = 0;
    EXPECT_THROW(obj.validate(), Error);
    obj.budget = 1;
    obj.lambda = -1;
    EXPECT_THROW(obj.validate(), Error);
    Rng rng(45);
    EXPECT_THROW(exhaustive_select(random_problem(rng, 21, 0.5, 2)), Error);
}

TEST(Noise, Cases) {
    const auto same = noise_rate(window({"A", "B", "C", "D"}, {"A", "B", "C", "D"}, 4, 0.1));
    EXPECT_EQ(same.epsilon, 0.0);
    EXPECT_FALSE(same.triggered);
    const auto one = noise_rate(window({"A", "B", "C", "D"}, {"A", "X", "C", "D"}, 4, 0.2));
    EXPECT_DOUBLE_EQ(one.epsilon, 0.25);
    EXPECT_TRUE(one.triggered);
    EXPECT_FALSE(noise_rate(window({"A", "B", "C", "D"}, {"A", "X", "C", "D"}, 4, 0.25)).triggered);
    EXPECT_EQ(noise_rate(window({"A", "B"}, {"X", "Y"}, 2, 0.5)).epsilon, 1.0);
}

TEST(Noise, OnlyMostRecentWindowCounts) {
    const auto r = noise_rate(window({"X", "X", "A", "B"}, {"Y", "Y", "A", "B"}, 2, 0.0));
    EXPECT_EQ(r.disagreements, 0u);
    EXPECT_FALSE(r.triggered);
}

TEST(Noise, MonotoneInDisagreements) {
    std::vector<std::string> a(10, "A"), b(10, "A");
    double prev = -1.0;
    for (std::size_t i = 0; i <= 10; ++i) {
        if (i) b[i - 1] = "B";
        const double e = noise_rate(window(a, b, 10, 0.5)).epsilon;
        EXPECT_GT(e, prev);
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 1.0);
        prev = e;
    }
}

TEST(Noise, Errors) {
    auto code = [](const NoiseWindow& w) {
        try {
            noise_rate(w);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::Io;
    };
    EXPECT_EQ(code(window({"A"}, {"A", "B"}, 1, 0.1)), Errc::LengthMismatch);
    EXPECT_EQ(code(window({"A"}, {"A"}, 2, 0.1)), Errc::WindowTooLarge);
    EXPECT_EQ(code(window({"A"}, {"A"}, 0, 0.1)), Errc::WindowTooLarge);
    EXPECT_EQ(code(window({"A"}, {"A"}, 1, 1.5)), Errc::InvalidParams);
}
