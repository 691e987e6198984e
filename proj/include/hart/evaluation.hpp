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
#include <cmath>
#include <compare>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/retrieval.hpp"
#include "hart/rng.hpp"
#include "hart/text.hpp"

namespace hart::eval {

// ---------------------------------------------------------------------------
// Hit rule

/// A retrieved document counts as a hit for a gold document when the ids
/// match (if the shortcut is on) or their embeddings have cosine >= tau_hit.
struct HitRule {
    double tau_hit = 0.85;
    bool id_shortcut = true;

    void validate() const {
        if (!(tau_hit > 0.0 && tau_hit <= 1.0)) raise(Errc::InvalidParams, "tau_hit must be in (0, 1]");
    }

    nlohmann::json to_json() const { return {{"tau_hit", tau_hit}, {"id_shortcut", id_shortcut}}; }
};

inline bool is_hit(const EvidenceDoc& retrieved, std::span<const EvidenceDoc> gold, const HitRule& rule,
                   const EmbeddingProvider& provider) {
    rule.validate();
    if (gold.empty()) raise(Errc::MissingGold, "no gold evidence for " + retrieved.id);
    if (rule.id_shortcut) {
        for (const auto& g : gold) {
            if (g.id == retrieved.id) return true;
        }
    }
    const auto r = provider.embed(retrieved.text);
    for (const auto& g : gold) {
        if (cosine(r, provider.embed(g.text)) >= rule.tau_hit) return true;
    }
    return false;
}

/// Applies a HitRule against a corpus, memoizing document embeddings.
/// Thread-safe.
class HitJudge {
  public:
    HitJudge(const EvidenceCorpus& corpus, const EmbeddingProvider& provider, HitRule rule)
        : corpus_(corpus), provider_(provider), rule_(rule) {
        rule_.validate();
    }

    const HitRule& rule() const { return rule_; }

    bool matches(const std::string& retrieved_id, const std::string& gold_id) const {
        if (rule_.id_shortcut && retrieved_id == gold_id) return true;
        return cosine(embedding(retrieved_id), embedding(gold_id)) >= rule_.tau_hit;
    }

    /// Hit flags per rank. Each gold item is credited at most once, so the
    /// number of hits never exceeds the gold-set size.
    std::vector<bool> credited_hits(const std::vector<std::string>& ranked_ids, const std::vector<std::string>& gold_ids) const {
        std::vector<bool> used(gold_ids.size(), false);
        std::vector<bool> out(ranked_ids.size(), false);
        for (std::size_t r = 0; r < ranked_ids.size(); ++r) {
            std::optional<std::size_t> pick;
            if (rule_.id_shortcut) {
                for (std::size_t g = 0; g < gold_ids.size() && !pick; ++g) {
                    if (!used[g] && gold_ids[g] == ranked_ids[r]) pick = g;
                }
            }
            for (std::size_t g = 0; g < gold_ids.size() && !pick; ++g) {
                if (!used[g] && cosine(embedding(ranked_ids[r]), embedding(gold_ids[g])) >= rule_.tau_hit) pick = g;
            }
            if (pick) {
                used[*pick] = true;
                out[r] = true;
            }
        }
        return out;
    }

  private:
    EmbeddingVector embedding(const std::string& id) const {
        {
            std::lock_guard lock(mu_);
            if (auto it = cache_.find(id); it != cache_.end()) return it->second;
        }
        auto v = provider_.embed(corpus_.at(id).text);
        std::lock_guard lock(mu_);
        return cache_.try_emplace(id, std::move(v)).first->second;
    }

    const EvidenceCorpus& corpus_;
    const EmbeddingProvider& provider_;
    HitRule rule_;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

// ---------------------------------------------------------------------------
// Inputs

struct SpanKey {
    std::string sample_id;
    std::string span_id;
    auto operator<=>(const SpanKey&) const = default;
};

struct GoldSpan {
    std::vector<std::string> evidence_ids;
    std::optional<HallucinationType> type;
    std::optional<ErrorMechanism> mechanism;
};

using GoldMap = std::map<SpanKey, GoldSpan>;

/// Gold annotations of every hallucinated span.
inline GoldMap gold_map(const std::vector<Sample>& dataset) {
    GoldMap m;
    for (const auto& s : dataset) {
        for (const auto& sp : s.spans) {
            if (!sp.is_hallucination) continue;
            m[{s.id, sp.span_id}] = {sp.gold_evidence_ids, sp.hallucination_type, sp.error_mechanism};
        }
    }
    return m;
}

/// A system's output for one span: ranked ids and (optionally) labels.
struct EvaluatedSpan {
    SpanKey key;
    std::vector<std::string> ranked_ids;
    std::optional<HallucinationType> pred_type;
    std::optional<ErrorMechanism> pred_mechanism;
};

/// Per-span facts every metric is computed from.
struct SpanJudgement {
    std::vector<bool> credited;  // per rank
    std::size_t first_hit = 0;   // 1-based rank of the first hit, 0 if none
    std::size_t gold_size = 0;
    bool labels_correct = false;
};

inline SpanJudgement judge_span(const EvaluatedSpan& item, const GoldMap& gold, const HitJudge& judge) {
    auto it = gold.find(item.key);
    if (it == gold.end() || it->second.evidence_ids.empty()) {
        raise(Errc::MissingGold, item.key.sample_id + "/" + item.key.span_id);
    }
    const auto& g = it->second;
    SpanJudgement j;
    j.gold_size = g.evidence_ids.size();
    j.credited = judge.credited_hits(item.ranked_ids, g.evidence_ids);
    for (std::size_t r = 0; r < j.credited.size(); ++r) {
        if (j.credited[r]) {
            j.first_hit = r + 1;
            break;
        }
    }
    j.labels_correct = item.pred_type && item.pred_mechanism && g.type && g.mechanism && *item.pred_type == *g.type &&
                       *item.pred_mechanism == *g.mechanism;
    return j;
}

inline std::vector<SpanJudgement> judge_all(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge) {
    std::vector<SpanJudgement> out;
    out.reserve(items.size());
    for (const auto& it : items) out.push_back(judge_span(it, gold, judge));
    return out;
}

// ---------------------------------------------------------------------------
// Metrics over judgements. Averages sum per-span terms in input order.

inline void check_k(std::size_t k) {
    if (k == 0) raise(Errc::InvalidParams, "k must be >= 1");
}

template <class Term>
double mean_over(const std::vector<SpanJudgement>& js, Term term) {
    if (js.empty()) return 0.0;
    double s = 0.0;
    for (const auto& j : js) s += term(j);
    return s / static_cast<double>(js.size());
}

inline double recall_at_k(const std::vector<SpanJudgement>& js, std::size_t k) {
    check_k(k);
    return mean_over(js, [k](const SpanJudgement& j) { return j.first_hit != 0 && j.first_hit <= k ? 1.0 : 0.0; });
}

inline double mrr_at_k(const std::vector<SpanJudgement>& js, std::size_t k) {
    check_k(k);
    return mean_over(js, [k](const SpanJudgement& j) {
        return j.first_hit != 0 && j.first_hit <= k ? 1.0 / static_cast<double>(j.first_hit) : 0.0;
    });
}

/// Binary-relevance nDCG; the ideal ranking places min(k, |gold|) hits first.
inline double ndcg_at_k(const std::vector<SpanJudgement>& js, std::size_t k) {
    check_k(k);
    return mean_over(js, [k](const SpanJudgement& j) {
        double dcg = 0.0;
        for (std::size_t r = 1; r <= std::min(k, j.credited.size()); ++r) {
            if (j.credited[r - 1]) dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
        }
        double idcg = 0.0;
        for (std::size_t r = 1; r <= std::min(k, j.gold_size); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
        return idcg > 0.0 ? dcg / idcg : 0.0;
    });
}

/// Both labels exactly right and a hit within the top k.
inline double joint_sr_at_k(const std::vector<SpanJudgement>& js, std::size_t k) {
    check_k(k);
    return mean_over(js, [k](const SpanJudgement& j) {
        return j.labels_correct && j.first_hit != 0 && j.first_hit <= k ? 1.0 : 0.0;
    });
}

// Convenience overloads straight from system output.
inline double recall_at_k(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge, std::size_t k) {
    return recall_at_k(judge_all(items, gold, judge), k);
}
inline double ndcg_at_k(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge, std::size_t k) {
    return ndcg_at_k(judge_all(items, gold, judge), k);
}
inline double mrr_at_k(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge, std::size_t k) {
    return mrr_at_k(judge_all(items, gold, judge), k);
}
inline double joint_sr_at_k(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge, std::size_t k) {
    return joint_sr_at_k(judge_all(items, gold, judge), k);
}

struct KMetrics {
    double recall = 0.0;
    double ndcg = 0.0;
    double mrr = 0.0;
    double joint_sr = 0.0;
};

struct MetricsReport {
    std::map<std::size_t, KMetrics> by_k;
    std::size_t n_spans = 0;

    nlohmann::json to_json() const {
        nlohmann::json k = nlohmann::json::object();
        for (const auto& [kk, m] : by_k) {
            k[std::to_string(kk)] = {{"recall", m.recall}, {"ndcg", m.ndcg}, {"mrr", m.mrr}, {"joint_sr", m.joint_sr}};
        }
        return {{"k", std::move(k)}, {"n_spans", n_spans}};
    }
};

inline MetricsReport metrics_report(const std::vector<SpanJudgement>& js, const std::vector<std::size_t>& ks) {
    MetricsReport rep;
    rep.n_spans = js.size();
    for (std::size_t k : ks) rep.by_k[k] = {recall_at_k(js, k), ndcg_at_k(js, k), mrr_at_k(js, k), joint_sr_at_k(js, k)};
    return rep;
}

inline MetricsReport evaluate(const std::vector<EvaluatedSpan>& items, const GoldMap& gold, const HitJudge& judge,
                              const std::vector<std::size_t>& ks) {
    return metrics_report(judge_all(items, gold, judge), ks);
}

// ---------------------------------------------------------------------------
// Probability model for Recall@k

inline void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) raise(Errc::InvalidProbability, std::to_string(p));
}

/// P(at least one hit in k independent results) = 1 - (1 - p)^k.
inline double analytic_recall(double p, std::size_t k) {
    check_probability(p);
    check_k(k);
    return 1.0 - std::pow(1.0 - p, static_cast<double>(k));
}

/// Per-rank probabilities: 1 - prod_j (1 - p_j).
inline double analytic_recall(std::span<const double> per_rank) {
    double miss = 1.0;
    for (double p : per_rank) {
        check_probability(p);
        miss *= 1.0 - p;
    }
    return 1.0 - miss;
}

/// Several interchangeable gold items: a single result hits with
/// p = sum_g p_g, which must itself be a probability.
inline double analytic_recall_multi(std::span<const double> per_evidence, std::size_t k) {
    double p = 0.0;
    for (double pg : per_evidence) {
        check_probability(pg);
        p += pg;
    }
    if (p > 1.0 + 1e-12) raise(Errc::InvalidProbability, "sum of per-evidence probabilities is " + std::to_string(p));
    return analytic_recall(std::min(p, 1.0), k);
}

/// Fraction of `trials` in which at least one of k Bernoulli(p) draws
/// succeeds. All k draws are taken every trial.
inline double monte_carlo_recall(double p, std::size_t k, std::size_t trials, std::uint64_t seed) {
    check_probability(p);
    check_k(k);
    if (trials == 0) raise(Errc::InvalidTrials, "trials must be >= 1");
    Rng rng(seed);
    std::size_t successes = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        bool any = false;
        for (std::size_t j = 0; j < k; ++j) any = rng.bernoulli(p) || any;
        successes += any ? 1 : 0;
    }
    return static_cast<double>(successes) / static_cast<double>(trials);
}

// ---------------------------------------------------------------------------
// BM25 baseline

/// Okapi BM25 over the shared tokenizer, with idf = ln(1 + (N - n + 0.5) / (n + 0.5)).
class Bm25Index {
  public:
    explicit Bm25Index(const EvidenceCorpus& corpus, double k1 = 1.2, double b = 0.75) : corpus_(corpus), k1_(k1), b_(b) {
        doc_len_.reserve(corpus.size());
        double total = 0.0;
        for (std::uint32_t i = 0; i < corpus.size(); ++i) {
            const auto toks = tokenize(corpus[i].text);
            doc_len_.push_back(static_cast<double>(toks.size()));
            total += static_cast<double>(toks.size());
            std::map<std::string, std::uint32_t> tf;
            for (const auto& t : toks) ++tf[t];
            for (const auto& [t, c] : tf) postings_[t].emplace_back(i, c);
        }
        avgdl_ = corpus.empty() ? 0.0 : total / static_cast<double>(corpus.size());
    }

    double idf(const std::string& term) const {
        auto it = postings_.find(term);
        const double n = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
        const double N = static_cast<double>(corpus_.size());
        return std::log(1.0 + (N - n + 0.5) / (n + 0.5));
    }

    /// Scores of every document, in corpus order.
    std::vector<double> scores(const std::string& query) const {
        std::vector<double> s(corpus_.size(), 0.0);
        for (const auto& t : tokenize(query)) {
            auto it = postings_.find(t);
            if (it == postings_.end()) continue;
            const double w = idf(t);
            for (const auto& [doc, tf] : it->second) {
                const double f = static_cast<double>(tf);
                const double norm = k1_ * (1.0 - b_ + b_ * doc_len_[doc] / avgdl_);
                s[doc] += w * f * (k1_ + 1.0) / (f + norm);
            }
        }
        return s;
    }

    RankedEvidence rank(const std::string& query, std::size_t k) const {
        check_k(k);
        const auto s = scores(query);
        std::vector<std::uint32_t> order(s.size());
        for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
        const auto take = std::min<std::size_t>(k, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                          [&](std::uint32_t a, std::uint32_t b) { return hit_before(s[a], corpus_[a].id, s[b], corpus_[b].id); });
        RankedEvidence out;
        for (std::size_t r = 0; r < take; ++r) out.ranking.push_back({corpus_[order[r]].id, s[order[r]], 0});
        return out;
    }

  private:
    const EvidenceCorpus& corpus_;
    double k1_;
    double b_;
    double avgdl_ = 0.0;
    std::vector<double> doc_len_;
    std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::uint32_t>>> postings_;
};

inline RankedEvidence bm25_rank(const std::string& query, const EvidenceCorpus& corpus, std::size_t k) {
    return Bm25Index(corpus).rank(query, k);
}

}  // namespace hart::eval
