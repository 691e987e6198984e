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

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hart/error.hpp"
#include "hart/text.hpp"

namespace hart {

/// Unit-L2-norm float vector. `zero_fallback` marks vectors that came from
/// an all-zero input and were replaced by e1.
struct EmbeddingVector {
    std::vector<float> values;
    bool zero_fallback = false;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// L2-normalizes `raw`. A zero (or non-finite-norm) input yields the basis
/// vector e1 with `zero_fallback` set rather than an error.
inline EmbeddingVector normalize(std::span<const float> raw) {
    if (raw.empty()) raise(Errc::InvalidParams, "cannot normalize a vector of dim 0");
    double sq = 0.0;
    for (float x : raw) sq += static_cast<double>(x) * static_cast<double>(x);
    EmbeddingVector v;
    v.values.assign(raw.size(), 0.0f);
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        v.values[0] = 1.0f;
        v.zero_fallback = true;
        return v;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        v.values[i] = static_cast<float>(static_cast<double>(raw[i]) / norm);
    }
    return v;
}

/// Inner product accumulated in double in index order. All similarity
/// computations in the library go through this so scores are comparable
/// bit-for-bit between code paths.
inline double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

/// Cosine of two normalized vectors, i.e. their inner product.
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        raise(Errc::DimMismatch, "cosine of dim " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
    return dot(a.values, b.values);
}

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string id() const = 0;

    EmbeddingVector embed(const std::string& text) const {
        auto out = embed_batch(std::span<const std::string>(&text, 1));
        if (out.size() != 1) raise(Errc::ProviderFailure, id() + " returned " + std::to_string(out.size()) + " vectors for 1 text");
        return std::move(out.front());
    }
};

inline constexpr std::size_t kDefaultBuiltinDim = 256;

/// Hashed bag-of-words vector before normalization: canonical tokens are
/// hashed with FNV-1a into `dim` buckets and each nonempty bucket gets
/// weight 1 + ln(count).
inline std::vector<float> builtin_embed_raw(std::string_view text, std::size_t dim, const SynonymTable* synonyms = nullptr) {
    if (dim < 8) raise(Errc::InvalidParams, "built-in embedder needs dim >= 8");
    std::vector<std::uint32_t> counts(dim, 0);
    for (const auto& tok : tokenize(text)) {
        const auto& canon = synonyms ? synonyms->canonical(tok) : tok;
        ++counts[fnv1a64(canon) % dim];
    }
    std::vector<float> raw(dim, 0.0f);
    for (std::size_t i = 0; i < dim; ++i) {
        if (counts[i] > 0) raw[i] = static_cast<float>(1.0 + std::log(static_cast<double>(counts[i])));
    }
    return raw;
}

inline EmbeddingVector builtin_embed(std::string_view text, std::size_t dim, const SynonymTable* synonyms = nullptr) {
    return normalize(builtin_embed_raw(text, dim, synonyms));
}

/// Deterministic feature-hashing embedder. Pure, so safe to share between
/// threads.
class BuiltinEmbedder final : public EmbeddingProvider {
  public:
    explicit BuiltinEmbedder(std::size_t dim = kDefaultBuiltinDim, std::shared_ptr<const SynonymTable> synonyms = nullptr)
        : dim_(dim), synonyms_(std::move(synonyms)) {
        if (dim_ < 8) raise(Errc::InvalidParams, "built-in embedder needs dim >= 8");
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(builtin_embed(t, dim_, synonyms_.get()));
        return out;
    }

    std::size_t dim() const override { return dim_; }

    std::string id() const override {
        std::string s = "builtin-fnv1a-d" + std::to_string(dim_);
        if (synonyms_ && !synonyms_->empty()) s += "-syn" + hex64(synonyms_->digest()).substr(0, 8);
        return s;
    }

    const SynonymTable* synonyms() const { return synonyms_.get(); }

  private:
    std::size_t dim_;
    std::shared_ptr<const SynonymTable> synonyms_;
};

}  // namespace hart
