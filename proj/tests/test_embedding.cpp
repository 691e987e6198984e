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

#include "hart/embedding.hpp"
#include "support.hpp"

using namespace hart;

TEST(Normalize, UnitNormAndScaleInvariance) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const auto v = test::random_vector(rng, 32);
        const auto u = normalize(v);
        EXPECT_NEAR(dot(u.values, u.values), 1.0, 1e-6);
        auto scaled = v;
        const double c = 0.01 + rng.uniform() * 100.0;
        for (auto& x : scaled) x = static_cast<float>(x * c);
        const auto us = normalize(scaled);
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(u.values[i], us.values[i], 1e-6);
    }
}

TEST(Normalize, Idempotent) {
    Rng rng(4);
    const auto u = normalize(test::random_vector(rng, 16));
    const auto uu = normalize(u.values);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(u.values[i], uu.values[i], 1e-7);
}

TEST(Normalize, ZeroVectorFallsBackToFirstAxis) {
    const std::vector<float> z(8, 0.0f);
    const auto u = normalize(z);
    EXPECT_TRUE(u.zero_fallback);
    EXPECT_EQ(u.values[0], 1.0f);
    EXPECT_EQ(dot(u.values, u.values), 1.0);
}

TEST(Cosine, MatchesDirectFormula) {
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto a = test::random_vector(rng, 24);
        const auto b = test::random_vector(rng, 24);
        double ab = 0, aa = 0, bb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ab += double(a[i]) * b[i];
            aa += double(a[i]) * a[i];
            bb += double(b[i]) * b[i];
        }
        EXPECT_NEAR(cosine(normalize(a), normalize(b)), ab / std::sqrt(aa * bb), 1e-6);
    }
}

TEST(Cosine, DimensionMismatch) {
    const auto a = normalize(std::vector<float>{1, 0, 0});
    const auto b = normalize(std::vector<float>{1, 0});
    try {
        cosine(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimMismatch);
    }
}

TEST(Builtin, DeterministicAndUnitNorm) {
    BuiltinEmbedder e(64);
    const auto a = e.embed("The bridge was completed in 1932.");
    const auto b = e.embed("The bridge was completed in 1932.");
    EXPECT_EQ(a.values, b.values);
    EXPECT_NEAR(dot(a.values, a.values), 1.0, 1e-6);
    EXPECT_EQ(a.values.size(), 64u);
    EXPECT_TRUE(e.embed("...").zero_fallback);
}

TEST(Builtin, BucketWeightsFollowLogCounts) {
    // Oracle: hash each token independently and rebuild the raw vector.
    const std::string text = "alpha beta alpha gamma alpha";
    std::vector<double> expect(97, 0.0);
    std::map<std::size_t, int> counts;
    for (const char* t : {"alpha", "beta", "alpha", "gamma", "alpha"}) ++counts[fnv1a64(t) % 97];
    for (auto [b, c] : counts) expect[b] = 1.0 + std::log(double(c));
    const auto raw = builtin_embed_raw(text, 97);
    for (std::size_t i = 0; i < 97; ++i) EXPECT_NEAR(raw[i], expect[i], 1e-6);
}

TEST(Builtin, SynonymsCollapseParaphrases) {
    auto syn = std::make_shared<SynonymTable>();
    syn->add("established", "founded");
    syn->add("firm", "company");
    BuiltinEmbedder plain(256), aware(256, syn);
    const std::string a = "Ada Lovelace founded the company Acme";
    const std::string b = "Ada Lovelace established the firm Acme";
    EXPECT_NEAR(cosine(aware.embed(a), aware.embed(b)), 1.0, 1e-6);
    EXPECT_LT(cosine(plain.embed(a), plain.embed(b)), 0.9);
    EXPECT_NE(plain.id(), aware.id());
}

TEST(Builtin, RejectsTinyDim) { EXPECT_THROW(BuiltinEmbedder(4), Error); }
