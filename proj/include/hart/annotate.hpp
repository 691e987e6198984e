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
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/retrieval.hpp"

namespace hart {

// ---------------------------------------------------------------------------
// Relevance-minus-redundancy evidence selection

/// Rel comes from a pair scorer against the span text, similarity from
/// embedding cosine.
struct SelectionObjective {
    double lambda = 0.5;
    std::size_t budget = 3;
    const PairScorer* relevance = nullptr;
    const EmbeddingProvider* similarity = nullptr;

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) raise(Errc::InvalidParams, "lambda must be finite and >= 0");
        if (budget == 0) raise(Errc::InvalidParams, "budget must be >= 1");
        if (!relevance || !similarity) raise(Errc::InvalidParams, "selection needs a relevance scorer and a similarity provider");
    }
};

/// Scored candidate pool: rel[i] and the symmetric sim matrix.
struct SelectionProblem {
    std::vector<std::string> ids;
    std::vector<double> rel;
    std::vector<std::vector<double>> sim;
    double lambda = 0.0;
    std::size_t budget = 1;

    std::size_t size() const { return ids.size(); }
};

inline SelectionProblem make_selection_problem(const std::string& span_text, const std::vector<EvidenceDoc>& candidates,
                                               const SelectionObjective& obj) {
    obj.validate();
    if (candidates.empty()) raise(Errc::InvalidParams, "no candidates to select from");
    std::set<std::string> seen;
    std::vector<std::string> texts;
    SelectionProblem p;
    p.lambda = obj.lambda;
    p.budget = obj.budget;
    for (const auto& c : candidates) {
        if (!seen.insert(c.id).second) raise(Errc::DuplicateId, c.id);
        p.ids.push_back(c.id);
        texts.push_back(c.text);
    }
    p.rel = obj.relevance->score_batch(span_text, texts);
    if (p.rel.size() != texts.size()) raise(Errc::ScorerFailure, "relevance scorer arity mismatch");
    const auto vecs = obj.similarity->embed_batch(texts);
    p.sim.assign(texts.size(), std::vector<double>(texts.size(), 0.0));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        for (std::size_t j = i; j < texts.size(); ++j) p.sim[i][j] = p.sim[j][i] = cosine(vecs[i], vecs[j]);
    }
    return p;
}

/// Red(S): redundancy accumulated when S is built one item at a time, each
/// new item paying its max similarity to those already present, minimized
/// over insertion orders so the value depends on the set alone.
inline double redundancy(const SelectionProblem& p, std::vector<std::size_t> subset) {
    if (subset.size() < 2) return 0.0;
    std::sort(subset.begin(), subset.end());
    double best = std::numeric_limits<double>::infinity();
    do {
        double red = 0.0;
        for (std::size_t a = 1; a < subset.size(); ++a) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < a; ++b) m = std::max(m, p.sim[subset[a]][subset[b]]);
            red += m;
        }
        best = std::min(best, red);
    } while (std::next_permutation(subset.begin(), subset.end()));
    return best;
}

inline double objective_value(const SelectionProblem& p, const std::vector<std::size_t>& subset) {
    double rel = 0.0;
    for (auto i : subset) rel += p.rel[i];
    return rel - p.lambda * redundancy(p, subset);
}

/// Greedy marginal-gain selection. Returns candidate indices in insertion
/// order; stops at the budget or once no candidate has positive gain.
inline std::vector<std::size_t> greedy_select(const SelectionProblem& p) {
    std::vector<std::size_t> chosen;
    std::vector<bool> used(p.size(), false);
    while (chosen.size() < p.budget) {
        std::size_t best = p.size();
        double best_gain = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (used[i]) continue;
            double red = 0.0;
            if (!chosen.empty()) {
                red = -std::numeric_limits<double>::infinity();
                for (auto c : chosen) red = std::max(red, p.sim[i][c]);
            }
            const double gain = p.rel[i] - p.lambda * red;
            if (best == p.size() || gain > best_gain || (gain == best_gain && p.ids[i] < p.ids[best])) {
                best = i;
                best_gain = gain;
            }
        }
        if (best == p.size() || !(best_gain > 0.0)) break;
        used[best] = true;
        chosen.push_back(best);
    }
    return chosen;
}

struct ExhaustiveOptimum {
    std::vector<std::size_t> subset;  // ascending indices
    double value = 0.0;
};

/// Best subset of size <= budget (the empty set scores 0). Exponential;
/// intended for small pools.
inline ExhaustiveOptimum exhaustive_select(const SelectionProblem& p) {
    if (p.size() > 20) raise(Errc::InvalidParams, "exhaustive selection is limited to 20 candidates");
    ExhaustiveOptimum best;
    for (std::uint32_t mask = 1; mask < (1u << p.size()); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) > p.budget) continue;
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (mask & (1u << i)) s.push_back(i);
        }
        const double v = objective_value(p, s);
        if (v > best.value) best = {std::move(s), v};
    }
    return best;
}

inline std::vector<EvidenceDoc> select_evidence(const std::string& span_text, const std::vector<EvidenceDoc>& candidates,
                                                const SelectionObjective& obj) {
    const auto p = make_selection_problem(span_text, candidates, obj);
    std::vector<EvidenceDoc> out;
    for (auto i : greedy_select(p)) out.push_back(candidates[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Annotation noise gate

struct NoiseWindow {
    std::vector<std::string> llm_labels;
    std::vector<std::string> human_labels;
    std::size_t window = 0;
    double tau = 0.1;
};

struct NoiseResult {
    double epsilon = 0.0;
    bool triggered = false;
    std::size_t disagreements = 0;
};

/// Disagreement rate over the last `window` aligned labels; relabeling is
/// triggered when it exceeds tau.
inline NoiseResult noise_rate(const NoiseWindow& win) {
    if (win.llm_labels.size() != win.human_labels.size()) {
        raise(Errc::LengthMismatch, std::to_string(win.llm_labels.size()) + " vs " + std::to_string(win.human_labels.size()) +
                                        " labels");
    }
    if (win.window == 0 || win.window > win.llm_labels.size()) {
        raise(Errc::WindowTooLarge, "window " + std::to_string(win.window) + " over " + std::to_string(win.llm_labels.size()) +
                                        " labels");
    }
    if (!(win.tau >= 0.0 && win.tau <= 1.0)) raise(Errc::InvalidParams, "tau must be in [0, 1]");
    NoiseResult r;
    for (std::size_t i = win.llm_labels.size() - win.window; i < win.llm_labels.size(); ++i) {
        if (win.llm_labels[i] != win.human_labels[i]) ++r.disagreements;
    }
    r.epsilon = static_cast<double>(r.disagreements) / static_cast<double>(win.window);
    r.triggered = r.epsilon > win.tau;
    return r;
}

}  // namespace hart
