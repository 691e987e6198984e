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

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hart/classify.hpp"
#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/parallel.hpp"
#include "hart/retrieval.hpp"
#include "hart/vindex.hpp"

namespace hart {

struct TraceConfig {
    std::vector<std::size_t> windows{0, 32, 96};  // query context widths, in characters
    std::size_t k_per_query = 10;
    std::size_t top_k_final = 10;
    std::size_t class_window = kDefaultClassWindow;
    bool rerank = true;

    void validate() const {
        if (windows.empty()) raise(Errc::InvalidParams, "at least one query window is required");
        if (k_per_query == 0) raise(Errc::InvalidParams, "k_per_query must be >= 1");
        if (top_k_final == 0) raise(Errc::InvalidParams, "top_k_final must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"windows", windows}, {"k_per_query", k_per_query}, {"top_k_final", top_k_final},
                {"class_window", class_window}, {"rerank", rerank}};
    }
};

/// Everything a trace reads. All members are immutable during tracing and
/// shared between worker threads. `scorer` is only consulted when the
/// config asks for reranking.
struct TraceContext {
    const VectorIndex& index;
    const EvidenceCorpus& corpus;
    const EmbeddingProvider& provider;
    const PairScorer& scorer;
    const Classifier& type_classifier;
    const Classifier& mechanism_classifier;
};

/// One query per window: the span widened by w characters on each side,
/// clipped at the text boundaries. Window 0 is the bare span. Duplicate
/// strings keep their first position.
inline QuerySet generate_queries(const std::u32string& response_chars, const HallucinationSpan& span,
                                 const std::vector<std::size_t>& windows) {
    if (windows.empty()) raise(Errc::InvalidParams, "at least one query window is required");
    if (span.begin >= span.end || span.end > response_chars.size()) {
        raise(Errc::SpanOutOfBounds, span.span_id + " [" + std::to_string(span.begin) + ", " + std::to_string(span.end) + ")");
    }
    QuerySet qs;
    qs.span_id = span.span_id;
    for (std::size_t w : windows) {
        auto q = utf8::slice(response_chars, span.begin - std::min(span.begin, w), span.end + w);
        if (std::find(qs.queries.begin(), qs.queries.end(), q) == qs.queries.end()) qs.queries.push_back(std::move(q));
    }
    return qs;
}

inline QuerySet generate_queries(const std::string& response, const HallucinationSpan& span,
                                 const std::vector<std::size_t>& windows) {
    return generate_queries(utf8::decode(response), span, windows);
}

/// Query generation, fused coarse retrieval and (optionally) reranking for
/// one span. `ranked` is not truncated.
struct RetrievalOutcome {
    QuerySet queries;
    CandidateSet candidates;
    RankedEvidence ranked;
};

inline RetrievalOutcome retrieve_for_span(const std::u32string& response_chars, const HallucinationSpan& span,
                                          const std::vector<std::size_t>& windows, std::size_t k_per_query,
                                          const VectorIndex& index, const EmbeddingProvider& provider,
                                          const EvidenceCorpus& corpus, const PairScorer* scorer) {
    RetrievalOutcome out;
    out.queries = generate_queries(response_chars, span, windows);
    out.candidates = coarse_retrieve(out.queries, index, provider, k_per_query);
    out.ranked = scorer ? rerank(out.candidates, out.queries, corpus, *scorer) : rank_by_coarse(out.candidates);
    return out;
}

/// The traced quadruple (span, type, mechanism, evidence) plus diagnostics.
struct TraceResult {
    std::string sample_id;
    std::string span_id;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string span_text;
    HallucinationType predicted_type = HallucinationType::Entity;
    double type_probability = 0.0;
    ErrorMechanism predicted_mechanism = ErrorMechanism::EntityMismatch;
    double mechanism_probability = 0.0;
    RankedEvidence evidence;
    std::vector<std::string> queries;
    std::vector<std::size_t> hits_per_query;
    std::size_t n_candidates = 0;

    bool operator==(const TraceResult& o) const {
        return sample_id == o.sample_id && span_id == o.span_id && begin == o.begin && end == o.end &&
               span_text == o.span_text && predicted_type == o.predicted_type && type_probability == o.type_probability &&
               predicted_mechanism == o.predicted_mechanism && mechanism_probability == o.mechanism_probability &&
               evidence.span_id == o.evidence.span_id && evidence.ranking == o.evidence.ranking && queries == o.queries &&
               hits_per_query == o.hits_per_query && n_candidates == o.n_candidates;
    }
};

inline nlohmann::json to_json(const TraceResult& r) {
    nlohmann::json ev = nlohmann::json::array();
    for (std::size_t i = 0; i < r.evidence.ranking.size(); ++i) {
        const auto& it = r.evidence.ranking[i];
        ev.push_back({{"doc_id", it.doc_id}, {"score", it.score}, {"rank", i + 1}, {"best_query", it.best_query}});
    }
    return {{"sample_id", r.sample_id},
            {"span_id", r.span_id},
            {"begin", r.begin},
            {"end", r.end},
            {"span_text", r.span_text},
            {"pred_type", to_string(r.predicted_type)},
            {"pred_type_prob", r.type_probability},
            {"pred_mechanism", to_string(r.predicted_mechanism)},
            {"pred_mechanism_prob", r.mechanism_probability},
            {"evidence", std::move(ev)},
            {"diagnostics", {{"queries", r.queries}, {"hits_per_query", r.hits_per_query}, {"n_candidates", r.n_candidates}}}};
}

inline TraceResult trace_from_json(const nlohmann::json& j) {
    TraceResult r;
    r.sample_id = detail::field<std::string>(j, "sample_id");
    r.span_id = detail::field<std::string>(j, "span_id");
    r.begin = detail::optional_field<std::size_t>(j, "begin", 0);
    r.end = detail::optional_field<std::size_t>(j, "end", 0);
    r.span_text = detail::optional_field<std::string>(j, "span_text", "");
    r.predicted_type = parse_hallucination_type(detail::field<std::string>(j, "pred_type"));
    r.type_probability = detail::optional_field<double>(j, "pred_type_prob", 0.0);
    r.predicted_mechanism = parse_error_mechanism(detail::field<std::string>(j, "pred_mechanism"));
    r.mechanism_probability = detail::optional_field<double>(j, "pred_mechanism_prob", 0.0);
    r.evidence.span_id = r.span_id;
    auto ev = j.find("evidence");
    if (ev == j.end() || !ev->is_array()) raise(Errc::MalformedLine, "missing array 'evidence'");
    for (const auto& e : *ev) {
        r.evidence.ranking.push_back({detail::field<std::string>(e, "doc_id"), detail::field<double>(e, "score"),
                                      detail::optional_field<std::size_t>(e, "best_query", 0)});
    }
    if (auto d = j.find("diagnostics"); d != j.end() && d->is_object()) {
        r.queries = detail::optional_field<std::vector<std::string>>(*d, "queries", {});
        r.hits_per_query = detail::optional_field<std::vector<std::size_t>>(*d, "hits_per_query", {});
        r.n_candidates = detail::optional_field<std::size_t>(*d, "n_candidates", 0);
    }
    return r;
}

/// Runs the tracing steps for one hallucinated span, in order: MAP type,
/// MAP mechanism, query generation, per-query coarse retrieval with union,
/// rerank, top-k selection. Component errors are rethrown with the span id.
inline TraceResult trace_span(const Sample& sample, const HallucinationSpan& span, const TraceConfig& config,
                              const TraceContext& ctx) {
    if (!span.is_hallucination) raise(Errc::InvalidParams, sample.id + "/" + span.span_id + " is not a hallucination");
    try {
        config.validate();
        const auto chars = utf8::decode(sample.response);
        const auto input = build_span_input(chars, span, config.class_window);
        const auto type = predict_map(ctx.type_classifier, input);
        const auto predicted_type = kHallucinationTypes.at(type.label);
        const auto mech = predict_map(ctx.mechanism_classifier,
                                      ctx.mechanism_classifier.conditioned_on_type() ? with_type_hint(input, predicted_type) : input);

        auto outcome = retrieve_for_span(chars, span, config.windows, config.k_per_query, ctx.index, ctx.provider, ctx.corpus,
                                         config.rerank ? &ctx.scorer : nullptr);
        TraceResult r;
        r.sample_id = sample.id;
        r.span_id = span.span_id;
        r.begin = span.begin;
        r.end = span.end;
        r.span_text = input.span_text;
        r.predicted_type = predicted_type;
        r.type_probability = type.probability;
        r.predicted_mechanism = kErrorMechanisms.at(mech.label);
        r.mechanism_probability = mech.probability;
        r.n_candidates = outcome.candidates.size();
        r.hits_per_query = outcome.candidates.hits_per_query;
        r.queries = outcome.queries.queries;
        r.evidence = std::move(outcome.ranked);
        r.evidence.truncate(config.top_k_final);
        return r;
    } catch (const Error& e) {
        throw Error(e.code(), "span " + sample.id + "/" + span.span_id + ": " + e.detail());
    }
}

struct SpanFailure {
    std::string sample_id;
    std::string span_id;
    Errc code;
    std::string message;
};

struct TraceRun {
    std::vector<TraceResult> results;      // dataset order
    std::vector<SpanFailure> failures;     // dataset order
    std::size_t n_spans_total = 0;
    std::size_t n_skipped_non_hallucinated = 0;
};

/// Traces every hallucinated span. Spans are independent work items; a
/// failing span is recorded and the rest continue. Output order follows the
/// dataset regardless of `threads`.
inline TraceRun trace_dataset(const std::vector<Sample>& dataset, const TraceConfig& config, const TraceContext& ctx,
                              unsigned threads = 1) {
    config.validate();
    struct Unit {
        std::size_t sample;
        std::size_t span;
    };
    TraceRun run;
    std::vector<Unit> units;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < dataset[i].spans.size(); ++j) {
            ++run.n_spans_total;
            if (dataset[i].spans[j].is_hallucination) {
                units.push_back({i, j});
            } else {
                ++run.n_skipped_non_hallucinated;
            }
        }
    }
    std::vector<std::optional<TraceResult>> results(units.size());
    std::vector<std::optional<SpanFailure>> failures(units.size());
    parallel_for(units.size(), threads, [&](std::size_t u) {
        const auto& sample = dataset[units[u].sample];
        const auto& span = sample.spans[units[u].span];
        try {
            results[u] = trace_span(sample, span, config, ctx);
        } catch (const Error& e) {
            failures[u] = SpanFailure{sample.id, span.span_id, e.code(), e.what()};
        }
    });
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (results[u]) run.results.push_back(std::move(*results[u]));
        if (failures[u]) run.failures.push_back(std::move(*failures[u]));
    }
    return run;
}

inline nlohmann::json failures_json(const std::vector<SpanFailure>& failures) {
    auto arr = nlohmann::json::array();
    for (const auto& f : failures) {
        arr.push_back({{"sample_id", f.sample_id}, {"span_id", f.span_id}, {"code", errc_name(f.code)}, {"message", f.message}});
    }
    return arr;
}

/// traces.jsonl: a {"manifest": ...} record, then one trace per line.
inline void save_traces(const std::string& path, const nlohmann::json& manifest, const std::vector<TraceResult>& results) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::Io, "cannot write " + path);
    out << nlohmann::json{{"manifest", manifest}}.dump() << '\n';
    for (const auto& r : results) out << to_json(r).dump() << '\n';
    if (!out) raise(Errc::Io, "write failed for " + path);
}

inline std::vector<TraceResult> load_traces(const std::string& path, nlohmann::json* manifest = nullptr) {
    std::vector<TraceResult> out;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j) {
        if (j.is_object() && j.contains("manifest")) {
            if (manifest) *manifest = j["manifest"];
            return;
        }
        out.push_back(trace_from_json(j));
    });
    return out;
}

}  // namespace hart
