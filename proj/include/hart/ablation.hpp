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

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hart/classify.hpp"
#include "hart/evaluation.hpp"
#include "hart/parallel.hpp"
#include "hart/trace.hpp"

namespace hart {

struct AblationConfig {
    TraceConfig trace;  // windows and depths of the full system
    eval::HitRule rule;
    std::vector<std::size_t> ks{1, 2, 5, 10};
    bool bm25 = true;
    bool cross_encoder_only = true;

    nlohmann::json to_json() const {
        return {{"trace", trace.to_json()}, {"hit_rule", rule.to_json()}, {"ks", ks}, {"bm25", bm25},
                {"cross_encoder_only", cross_encoder_only}};
    }
};

/// Shared models. The classifiers are optional; without them Joint SR is 0.
/// The second dense encoder (with its own index) adds the DPR row.
struct AblationContext {
    const VectorIndex& index;
    const EvidenceCorpus& corpus;
    const EmbeddingProvider& provider;
    const PairScorer& scorer;
    const Classifier* type_classifier = nullptr;
    const Classifier* mechanism_classifier = nullptr;
    const EmbeddingProvider* alt_provider = nullptr;
    const VectorIndex* alt_index = nullptr;
};

struct ArmResult {
    std::string name;
    bool baseline = false;
    eval::MetricsReport report;
    std::optional<double> candidate_recall;  // over the untruncated candidate set
    double mean_candidates = 0.0;

    nlohmann::json to_json() const {
        auto j = report.to_json();
        j["name"] = name;
        j["baseline"] = baseline;
        j["candidate_recall"] = candidate_recall ? nlohmann::json(*candidate_recall) : nlohmann::json(nullptr);
        j["mean_candidates"] = mean_candidates;
        return j;
    }
};

struct AblationTable {
    std::vector<ArmResult> rows;

    const ArmResult& at(const std::string& name) const {
        for (const auto& r : rows) {
            if (r.name == name) return r;
        }
        raise(Errc::InvalidParams, "no ablation row named '" + name + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& r : rows) a.push_back(r.to_json());
        return a;
    }
};

inline constexpr const char* kArmDense = "Dense Embedding";
inline constexpr const char* kArmDenseRerank = "Dense Embedding + Cross-Encoder";
inline constexpr const char* kArmDenseMulti = "Dense Embedding + Multi-Query";
inline constexpr const char* kArmFull = "HART";
inline constexpr const char* kBaselineBm25 = "BM25";
inline constexpr const char* kBaselineDpr = "DPR";
inline constexpr const char* kBaselineCrossEncoder = "Cross-Encoder";

namespace detail {

struct SpanRef {
    const Sample* sample;
    const HallucinationSpan* span;
    std::u32string chars;
};

struct SpanRun {
    eval::EvaluatedSpan item;
    std::vector<std::string> candidates;  // untruncated, ranked
};

inline ArmResult score_arm(std::string name, bool baseline, const std::vector<SpanRun>& runs, const eval::GoldMap& gold,
                           const eval::HitJudge& judge, const std::vector<std::size_t>& ks, bool with_candidates) {
    ArmResult arm;
    arm.name = std::move(name);
    arm.baseline = baseline;
    std::vector<eval::EvaluatedSpan> items;
    std::size_t covered = 0;
    double n_cand = 0.0;
    for (const auto& r : runs) {
        items.push_back(r.item);
        n_cand += static_cast<double>(r.candidates.size());
        if (with_candidates) {
            const auto& g = gold.at(r.item.key).evidence_ids;
            const auto hits = judge.credited_hits(r.candidates, g);
            if (std::find(hits.begin(), hits.end(), true) != hits.end()) ++covered;
        }
    }
    arm.report = eval::evaluate(items, gold, judge, ks);
    if (!runs.empty()) {
        arm.mean_candidates = n_cand / static_cast<double>(runs.size());
        if (with_candidates) arm.candidate_recall = static_cast<double>(covered) / static_cast<double>(runs.size());
    }
    return arm;
}

}  // namespace detail

/// Runs the four system arms (single vs multi query, with and without
/// rerank) and the baselines over every hallucinated span. All rows share
/// the same label predictions, so Joint SR differences come from retrieval.
inline AblationTable run_ablation(const std::vector<Sample>& dataset, const AblationConfig& config, const AblationContext& ctx,
                                  unsigned threads = 1) {
    config.trace.validate();
    config.rule.validate();
    const auto gold = eval::gold_map(dataset);
    const eval::HitJudge judge(ctx.corpus, ctx.provider, config.rule);

    std::vector<detail::SpanRef> spans;
    for (const auto& s : dataset) {
        for (const auto& sp : s.spans) {
            if (sp.is_hallucination) spans.push_back({&s, &sp, utf8::decode(s.response)});
        }
    }

    std::vector<std::optional<HallucinationType>> ptype(spans.size());
    std::vector<std::optional<ErrorMechanism>> pmech(spans.size());
    if (ctx.type_classifier && ctx.mechanism_classifier) {
        parallel_for(spans.size(), threads, [&](std::size_t i) {
            const auto input = build_span_input(spans[i].chars, *spans[i].span, config.trace.class_window);
            const auto t = kHallucinationTypes.at(predict_map(*ctx.type_classifier, input).label);
            const auto& mc = *ctx.mechanism_classifier;
            ptype[i] = t;
            pmech[i] = kErrorMechanisms.at(predict_map(mc, mc.conditioned_on_type() ? with_type_hint(input, t) : input).label);
        });
    }

    auto run_all = [&](auto&& retrieve) {
        std::vector<detail::SpanRun> runs(spans.size());
        parallel_for(spans.size(), threads, [&](std::size_t i) {
            auto ranked = retrieve(spans[i]);
            auto& r = runs[i];
            r.candidates = ranked.ids();
            ranked.truncate(config.trace.top_k_final);
            r.item = {{spans[i].sample->id, spans[i].span->span_id}, ranked.ids(), ptype[i], pmech[i]};
        });
        return runs;
    };
    auto arm = [&](const std::vector<std::size_t>& windows, bool rerank) {
        return run_all([&, rerank](const detail::SpanRef& s) {
            return retrieve_for_span(s.chars, *s.span, windows, config.trace.k_per_query, ctx.index, ctx.provider, ctx.corpus,
                                     rerank ? &ctx.scorer : nullptr)
                .ranked;
        });
    };

    const std::vector<std::size_t> single{0};
    AblationTable table;
    table.rows.push_back(detail::score_arm(kArmDense, false, arm(single, false), gold, judge, config.ks, true));
    table.rows.push_back(detail::score_arm(kArmDenseRerank, false, arm(single, true), gold, judge, config.ks, true));
    table.rows.push_back(detail::score_arm(kArmDenseMulti, false, arm(config.trace.windows, false), gold, judge, config.ks, true));
    table.rows.push_back(detail::score_arm(kArmFull, false, arm(config.trace.windows, true), gold, judge, config.ks, true));

    if (config.bm25) {
        const eval::Bm25Index bm25(ctx.corpus);
        auto runs = run_all([&](const detail::SpanRef& s) { return bm25.rank(s.span->text, config.trace.top_k_final); });
        table.rows.push_back(detail::score_arm(kBaselineBm25, true, runs, gold, judge, config.ks, false));
    }
    if (ctx.alt_provider && ctx.alt_index) {
        auto runs = run_all([&](const detail::SpanRef& s) {
            return retrieve_for_span(s.chars, *s.span, single, config.trace.k_per_query, *ctx.alt_index, *ctx.alt_provider,
                                     ctx.corpus, nullptr)
                .ranked;
        });
        table.rows.push_back(detail::score_arm(kBaselineDpr, true, runs, gold, judge, config.ks, false));
    }
    if (config.cross_encoder_only) {
        std::vector<std::string> texts;
        texts.reserve(ctx.corpus.size());
        for (const auto& d : ctx.corpus.docs()) texts.push_back(d.text);
        auto runs = run_all([&](const detail::SpanRef& s) {
            const auto scores = ctx.scorer.score_batch(s.span->text, texts);
            if (scores.size() != texts.size()) raise(Errc::ScorerFailure, "pair scorer arity mismatch");
            RankedEvidence r;
            r.span_id = s.span->span_id;
            for (std::size_t d = 0; d < texts.size(); ++d) r.ranking.push_back({ctx.corpus[d].id, scores[d], 0});
            const auto take = std::min(config.trace.top_k_final, r.ranking.size());
            std::partial_sort(r.ranking.begin(), r.ranking.begin() + static_cast<std::ptrdiff_t>(take), r.ranking.end(),
                              [](const RankedItem& a, const RankedItem& b) { return hit_before(a.score, a.doc_id, b.score, b.doc_id); });
            r.truncate(take);
            return r;
        });
        table.rows.push_back(detail::score_arm(kBaselineCrossEncoder, true, runs, gold, judge, config.ks, false));
    }
    return table;
}

}  // namespace hart
