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

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/text.hpp"
#include "hart/vindex.hpp"

namespace hart {

inline constexpr std::size_t kMaxQueriesPerSpan = 16;

/// Query variants issued for one span, in window order.
struct QuerySet {
    std::string span_id;
    std::vector<std::string> queries;

    void validate(std::size_t max_queries = kMaxQueriesPerSpan) const {
        if (queries.empty() || queries.size() > max_queries) {
            raise(Errc::InvalidParams, "query set for '" + span_id + "' has " + std::to_string(queries.size()) + " queries");
        }
        for (const auto& q : queries) {
            if (q.empty()) raise(Errc::InvalidParams, "empty query for '" + span_id + "'");
        }
    }
};

struct Candidate {
    double coarse_score = -1.0;        // max inner product over queries
    std::size_t best_query = 0;        // first query reaching coarse_score
    std::set<std::size_t> source_queries;

    bool operator==(const Candidate&) const = default;
};

/// Fused stage-1 candidates, keyed (and therefore ordered) by doc id.
struct CandidateSet {
    std::string span_id;
    std::map<std::string, Candidate> candidates;
    std::vector<std::size_t> hits_per_query;

    std::size_t size() const { return candidates.size(); }
    bool contains(const std::string& id) const { return candidates.count(id) > 0; }
};

struct RankedItem {
    std::string doc_id;
    double score = 0.0;
    std::size_t best_query = 0;

    bool operator==(const RankedItem&) const = default;
};

/// Best-first evidence ranking; rank r is ranking[r - 1].
struct RankedEvidence {
    std::string span_id;
    std::vector<RankedItem> ranking;

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        out.reserve(ranking.size());
        for (const auto& r : ranking) out.push_back(r.doc_id);
        return out;
    }

    void truncate(std::size_t k) {
        if (ranking.size() > k) ranking.resize(k);
    }
};

inline void sort_ranking(std::vector<RankedItem>& items) {
    std::sort(items.begin(), items.end(),
              [](const RankedItem& a, const RankedItem& b) { return hit_before(a.score, a.doc_id, b.score, b.doc_id); });
}

/// Scores (query, document) pairs jointly. Implementations must be
/// deterministic per pair and safe for concurrent calls.
class PairScorer {
  public:
    virtual ~PairScorer() = default;
    virtual std::vector<double> score_batch(const std::string& query, std::span<const std::string> docs) const = 0;
    virtual std::string id() const = 0;
};

/// Stage 1: embed every query, search the index, and fuse the hit lists by
/// union with per-document max score.
inline CandidateSet coarse_retrieve(const QuerySet& queries, const VectorIndex& index, const EmbeddingProvider& provider,
                                    std::size_t k_per_query) {
    if (k_per_query == 0) raise(Errc::InvalidParams, "k_per_query must be >= 1");
    queries.validate();
    std::vector<EmbeddingVector> vecs;
    try {
        vecs = provider.embed_batch(queries.queries);
    } catch (const Error& e) {
        raise(is_runtime(e.code()) ? Errc::ProviderFailure : e.code(), e.detail());
    }
    if (vecs.size() != queries.queries.size()) raise(Errc::ProviderFailure, provider.id() + " returned wrong number of vectors");

    CandidateSet out;
    out.span_id = queries.span_id;
    for (std::size_t j = 0; j < vecs.size(); ++j) {
        const auto hits = index.search(vecs[j], k_per_query);
        out.hits_per_query.push_back(hits.size());
        for (const auto& h : hits) {
            auto [it, inserted] = out.candidates.try_emplace(h.doc_id);
            auto& c = it->second;
            if (inserted || h.score > c.coarse_score) {
                c.coarse_score = h.score;
                c.best_query = j;
            }
            c.source_queries.insert(j);
        }
    }
    return out;
}

/// Candidates ordered by their fused coarse score (the no-rerank path).
inline RankedEvidence rank_by_coarse(const CandidateSet& candidates) {
    RankedEvidence out;
    out.span_id = candidates.span_id;
    for (const auto& [id, c] : candidates.candidates) out.ranking.push_back({id, c.coarse_score, c.best_query});
    sort_ranking(out.ranking);
    return out;
}

/// Stage 2: each candidate's fine score is the max over queries of the pair
/// score. Membership is unchanged; only the order moves.
inline RankedEvidence rerank(const CandidateSet& candidates, const QuerySet& queries, const EvidenceCorpus& corpus,
                             const PairScorer& scorer) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    for (const auto& [id, c] : candidates.candidates) {
        const auto* doc = corpus.find(id);
        if (!doc) raise(Errc::UnknownDocId, id);
        ids.push_back(id);
        texts.push_back(doc->text);
    }
    RankedEvidence out;
    out.span_id = candidates.span_id;
    if (ids.empty()) return out;

    std::vector<double> best(ids.size(), 0.0);
    std::vector<std::size_t> best_q(ids.size(), 0);
    for (std::size_t j = 0; j < queries.queries.size(); ++j) {
        std::vector<double> scores;
        try {
            scores = scorer.score_batch(queries.queries[j], texts);
        } catch (const Error& e) {
            raise(is_runtime(e.code()) ? Errc::ScorerFailure : e.code(), e.detail());
        }
        if (scores.size() != ids.size()) {
            raise(Errc::ScorerFailure, scorer.id() + " returned " + std::to_string(scores.size()) + " scores for " +
                                           std::to_string(ids.size()) + " docs");
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (j == 0 || scores[i] > best[i]) {
                best[i] = scores[i];
                best_q[i] = j;
            }
        }
    }
    for (std::size_t i = 0; i < ids.size(); ++i) out.ranking.push_back({ids[i], best[i], best_q[i]});
    sort_ranking(out.ranking);
    return out;
}

/// Built-in stand-in for a cross-encoder. Cosine over exact (unhashed)
/// token counts with 1 + ln(count) weights, after rewriting each query
/// token to a synonym the document actually uses. A query run of three or
/// more consecutive tokens found verbatim in the document adds 0.05. The
/// result is clamped to [0, 1].
class BuiltinPairScorer final : public PairScorer {
  public:
    static constexpr double kPhraseBonus = 0.05;
    static constexpr std::size_t kPhraseMinTokens = 3;

    explicit BuiltinPairScorer(std::shared_ptr<const SynonymTable> synonyms = nullptr) : synonyms_(std::move(synonyms)) {}

    std::vector<double> score_batch(const std::string& query, std::span<const std::string> docs) const override {
        const auto qtokens = tokenize(query);
        std::vector<double> out;
        out.reserve(docs.size());
        for (const auto& d : docs) out.push_back(score_tokens(qtokens, *prepared(d)));
        return out;
    }

    double score(const std::string& query, const std::string& doc) const {
        return score_batch(query, std::span<const std::string>(&doc, 1)).front();
    }

    std::string id() const override {
        std::string s = "builtin-pair";
        if (synonyms_ && !synonyms_->empty()) s += "-syn" + hex64(synonyms_->digest()).substr(0, 8);
        return s;
    }

  private:
    struct PreparedDoc {
        std::vector<std::string> tokens;
        std::unordered_map<std::string, std::uint32_t> counts;
        double norm = 0.0;
    };

    static double weight(std::uint32_t count) { return 1.0 + std::log(static_cast<double>(count)); }

    std::shared_ptr<const PreparedDoc> prepared(const std::string& text) const {
        {
            std::shared_lock lock(cache_mu_);
            if (auto it = cache_.find(text); it != cache_.end()) return it->second;
        }
        auto p = std::make_shared<PreparedDoc>();
        p->tokens = tokenize(text);
        for (const auto& t : p->tokens) ++p->counts[t];
        double sq = 0.0;
        for (const auto& [t, c] : p->counts) sq += weight(c) * weight(c);
        p->norm = std::sqrt(sq);
        std::unique_lock lock(cache_mu_);
        return cache_.try_emplace(text, std::move(p)).first->second;
    }

    double score_tokens(const std::vector<std::string>& qtokens, const PreparedDoc& doc) const {
        if (qtokens.empty() || doc.tokens.empty()) return 0.0;
        std::vector<std::string> rewritten;
        rewritten.reserve(qtokens.size());
        for (const auto& q : qtokens) {
            if (synonyms_ && !doc.counts.count(q)) {
                if (const auto* cls = synonyms_->synonym_class(q)) {
                    auto hit = std::find_if(cls->begin(), cls->end(), [&](const std::string& t) { return doc.counts.count(t) > 0; });
                    if (hit != cls->end()) {
                        rewritten.push_back(*hit);
                        continue;
                    }
                }
            }
            rewritten.push_back(q);
        }
        std::map<std::string, std::uint32_t> qcounts;
        for (const auto& t : rewritten) ++qcounts[t];
        double qsq = 0.0;
        double num = 0.0;
        for (const auto& [t, c] : qcounts) {
            const double w = weight(c);
            qsq += w * w;
            if (auto it = doc.counts.find(t); it != doc.counts.end()) num += w * weight(it->second);
        }
        double s = num / (std::sqrt(qsq) * doc.norm);
        if (longest_common_run(rewritten, doc.tokens) >= kPhraseMinTokens) s += kPhraseBonus;
        return std::clamp(s, 0.0, 1.0);
    }

    static std::size_t longest_common_run(const std::vector<std::string>& a, const std::vector<std::string>& b) {
        std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
        std::size_t best = 0;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            for (std::size_t j = 1; j <= b.size(); ++j) {
                cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
                best = std::max(best, cur[j]);
            }
            std::swap(prev, cur);
        }
        return best;
    }

    std::shared_ptr<const SynonymTable> synonyms_;
    mutable std::shared_mutex cache_mu_;
    mutable std::unordered_map<std::string, std::shared_ptr<const PreparedDoc>> cache_;
};

}  // namespace hart
