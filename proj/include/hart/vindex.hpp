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
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <limits>
#include <unordered_set>
#include <vector>

#include "hart/binio.hpp"
#include "hart/parallel.hpp"
#include "hart/corpus.hpp"
#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/rng.hpp"
#include "hart/text.hpp"

namespace hart {

enum class IndexBackend { Flat, IVF };

struct IvfParams {
    std::size_t n_clusters = 0;  // 0 -> ceil(sqrt(N))
    std::size_t n_probe = 8;
    std::uint64_t seed = 42;
    int max_iter = 20;
};

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based

    bool operator==(const SearchHit&) const = default;
};

/// Orders (score, id) pairs best-first: higher score, then ascending id.
inline bool hit_before(double sa, const std::string& ia, double sb, const std::string& ib) {
    if (sa != sb) return sa > sb;
    return ia < ib;
}

/// Inner-product top-k index over unit vectors. Flat scans every entry;
/// IVF partitions entries with spherical k-means and scans only the
/// `n_probe` lists whose centroids score highest against the query.
/// Immutable after construction; search is safe from concurrent callers.
class VectorIndex {
  public:
    static constexpr char kMagic[8] = {'H', 'A', 'R', 'T', 'I', 'D', 'X', '\x01'};
    static constexpr std::uint32_t kFormatVersion = 1;

    VectorIndex() = default;

    static VectorIndex from_vectors(std::size_t dim, std::vector<std::string> ids, std::vector<float> data,
                                    IndexBackend backend = IndexBackend::Flat, const IvfParams& params = {}) {
        if (dim == 0) raise(Errc::InvalidParams, "index dim must be positive");
        if (data.size() != ids.size() * dim) raise(Errc::DimMismatch, "vector data does not match ids x dim");
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            if (!seen.insert(id).second) raise(Errc::DuplicateId, id);
        }
        VectorIndex idx;
        idx.dim_ = dim;
        idx.ids_ = std::move(ids);
        idx.data_ = std::move(data);
        idx.backend_ = backend;
        if (backend == IndexBackend::IVF) idx.train_ivf(params);
        return idx;
    }

    /// Embeds every document (in corpus order, parallel over documents) and
    /// builds the requested backend.
    static VectorIndex build(const EvidenceCorpus& corpus, const EmbeddingProvider& provider,
                             IndexBackend backend = IndexBackend::Flat, const IvfParams& params = {},
                             unsigned threads = 1, std::size_t batch = 256) {
        if (corpus.empty()) raise(Errc::EmptyCorpus, "cannot index an empty corpus");
        const std::size_t n = corpus.size();
        const std::size_t dim = provider.dim();
        std::vector<float> data(n * dim);
        std::vector<std::string> ids(n);
        const std::size_t n_batches = (n + batch - 1) / batch;
        parallel_for(n_batches, threads, [&](std::size_t b) {
            const std::size_t lo = b * batch;
            const std::size_t hi = std::min(n, lo + batch);
            std::vector<std::string> texts;
            for (std::size_t i = lo; i < hi; ++i) texts.push_back(corpus[i].text);
            std::vector<EmbeddingVector> vecs;
            try {
                vecs = provider.embed_batch(texts);
            } catch (const Error& e) {
                raise(is_runtime(e.code()) ? Errc::ProviderFailure : e.code(), e.detail());
            }
            if (vecs.size() != texts.size()) raise(Errc::ProviderFailure, "provider returned wrong number of vectors");
            for (std::size_t i = lo; i < hi; ++i) {
                const auto& v = vecs[i - lo];
                if (v.dim() != dim) raise(Errc::DimMismatch, "provider vector of dim " + std::to_string(v.dim()));
                std::copy(v.values.begin(), v.values.end(), data.begin() + static_cast<std::ptrdiff_t>(i * dim));
                ids[i] = corpus[i].id;
            }
        });
        return from_vectors(dim, std::move(ids), std::move(data), backend, params);
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    IndexBackend backend() const { return backend_; }
    const std::vector<std::string>& ids() const { return ids_; }
    std::span<const float> vector(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

    std::size_t n_clusters() const { return centroids_.size() / std::max<std::size_t>(dim_, 1); }
    std::size_t n_probe() const { return n_probe_; }
    void set_n_probe(std::size_t p) { n_probe_ = std::max<std::size_t>(1, p); }
    std::span<const float> centroid(std::size_t c) const { return {centroids_.data() + c * dim_, dim_}; }
    const std::vector<std::uint32_t>& assignments() const { return assignment_; }
    const std::vector<std::vector<std::uint32_t>>& lists() const { return lists_; }

    std::vector<SearchHit> search(const EmbeddingVector& query, std::size_t k) const {
        return search(std::span<const float>(query.values), k);
    }

    std::vector<SearchHit> search(std::span<const float> query, std::size_t k) const {
        if (query.size() != dim_) {
            raise(Errc::DimMismatch, "query dim " + std::to_string(query.size()) + " vs index dim " + std::to_string(dim_));
        }
        if (k == 0) raise(Errc::InvalidParams, "k must be >= 1");
        std::vector<std::pair<double, std::uint32_t>> scored;
        if (backend_ == IndexBackend::Flat || lists_.empty()) {
            scored.reserve(size());
            for (std::uint32_t i = 0; i < size(); ++i) scored.emplace_back(dot(query, vector(i)), i);
        } else {
            for (std::size_t c : probe_order(query)) {
                for (std::uint32_t i : lists_[c]) scored.emplace_back(dot(query, vector(i)), i);
            }
        }
        const std::size_t take = std::min(k, scored.size());
        auto better = [&](const auto& a, const auto& b) { return hit_before(a.first, ids_[a.second], b.first, ids_[b.second]); };
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
        std::vector<SearchHit> hits;
        hits.reserve(take);
        for (std::size_t r = 0; r < take; ++r) hits.push_back({ids_[scored[r].second], scored[r].first, r + 1});
        return hits;
    }

    void save(const std::string& path) const { binio::Writer w = serialize(); w.write_file(path); }

    binio::Writer serialize() const {
        binio::Writer w;
        w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(dim_));
        w.put<std::uint64_t>(ids_.size());
        for (std::size_t i = 0; i < ids_.size(); ++i) {
            w.put<std::uint32_t>(static_cast<std::uint32_t>(ids_[i].size()));
            w.put_bytes(ids_[i]);
            w.put_floats(vector(i));
        }
        const auto nc = backend_ == IndexBackend::IVF ? n_clusters() : 0;
        w.put<std::uint32_t>(static_cast<std::uint32_t>(nc));
        if (nc > 0) {
            w.put_floats(centroids_);
            for (auto a : assignment_) w.put<std::uint32_t>(a);
            w.put<std::uint32_t>(static_cast<std::uint32_t>(n_probe_));
        }
        return w;
    }

    static VectorIndex load(const std::string& path) { return deserialize(read_file(path)); }

    static VectorIndex deserialize(std::string_view bytes) {
        binio::Reader r(bytes);
        if (r.remaining() < sizeof(kMagic) || r.get_bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
            raise(Errc::BadMagic, "not a HARTIDX file");
        }
        const auto version = r.get<std::uint32_t>();
        if (version != kFormatVersion) raise(Errc::VersionUnsupported, "index format version " + std::to_string(version));
        VectorIndex idx;
        idx.dim_ = r.get<std::uint32_t>();
        if (idx.dim_ == 0) raise(Errc::Corrupt, "dim 0 at offset " + std::to_string(r.offset() - 4));
        const auto count = r.get<std::uint64_t>();
        // each record needs at least 4 + 4*dim bytes
        if (count > r.remaining() / (4 + 4 * idx.dim_)) raise(Errc::Corrupt, "entry count exceeds file size at offset " + std::to_string(r.offset() - 8));
        idx.ids_.reserve(count);
        idx.data_.resize(count * idx.dim_);
        std::unordered_set<std::string> seen;
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto at = r.offset();
            const auto len = r.get<std::uint32_t>();
            std::string id(r.get_bytes(len));
            if (!seen.insert(id).second) raise(Errc::Corrupt, "duplicate id '" + id + "' at offset " + std::to_string(at));
            idx.ids_.push_back(std::move(id));
            const auto vat = r.offset();
            r.get_floats(std::span<float>(idx.data_.data() + i * idx.dim_, idx.dim_));
            for (std::size_t d = 0; d < idx.dim_; ++d) {
                if (!std::isfinite(idx.data_[i * idx.dim_ + d])) raise(Errc::Corrupt, "non-finite value at offset " + std::to_string(vat));
            }
        }
        const auto nc = r.get<std::uint32_t>();
        if (nc > 0) {
            idx.backend_ = IndexBackend::IVF;
            if (nc > std::max<std::uint64_t>(count, 1)) raise(Errc::Corrupt, "more clusters than entries at offset " + std::to_string(r.offset() - 4));
            idx.centroids_.resize(static_cast<std::size_t>(nc) * idx.dim_);
            r.get_floats(idx.centroids_);
            idx.assignment_.resize(count);
            for (auto& a : idx.assignment_) {
                const auto at = r.offset();
                a = r.get<std::uint32_t>();
                if (a >= nc) raise(Errc::Corrupt, "cluster id out of range at offset " + std::to_string(at));
            }
            idx.n_probe_ = r.get<std::uint32_t>();
            idx.rebuild_lists();
        }
        if (!r.at_end()) raise(Errc::Corrupt, "trailing bytes at offset " + std::to_string(r.offset()));
        return idx;
    }

    bool operator==(const VectorIndex& o) const {
        return dim_ == o.dim_ && ids_ == o.ids_ && backend_ == o.backend_ && n_probe_ == o.n_probe_ &&
               centroids_ == o.centroids_ && assignment_ == o.assignment_ &&
               std::equal(data_.begin(), data_.end(), o.data_.begin(), o.data_.end(),
                          [](float a, float b) { return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b); });
    }

  private:
    std::vector<std::size_t> probe_order(std::span<const float> query) const {
        const std::size_t nc = n_clusters();
        std::vector<std::pair<double, std::size_t>> cs;
        cs.reserve(nc);
        for (std::size_t c = 0; c < nc; ++c) cs.emplace_back(dot(query, centroid(c)), c);
        const std::size_t take = std::min(n_probe_, nc);
        std::partial_sort(cs.begin(), cs.begin() + static_cast<std::ptrdiff_t>(take), cs.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < take; ++i) out.push_back(cs[i].second);
        return out;
    }

    std::uint32_t nearest_centroid(std::span<const float> v, double* sim = nullptr) const {
        std::uint32_t best = 0;
        double best_s = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n_clusters(); ++c) {
            const double s = dot(v, centroid(c));
            if (s > best_s) {
                best_s = s;
                best = static_cast<std::uint32_t>(c);
            }
        }
        if (sim) *sim = best_s;
        return best;
    }

    // Spherical k-means with a fixed seed. Empty clusters are reseeded with
    // the point farthest from its current centroid.
    void train_ivf(const IvfParams& params) {
        const std::size_t n = size();
        if (n == 0) raise(Errc::EmptyCorpus, "cannot train IVF on an empty index");
        std::size_t nc = params.n_clusters ? params.n_clusters
                                           : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
        nc = std::clamp<std::size_t>(nc, 1, n);
        n_probe_ = std::max<std::size_t>(1, params.n_probe);

        Rng rng(params.seed);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        centroids_.assign(nc * dim_, 0.0f);
        for (std::size_t c = 0; c < nc; ++c) {
            auto v = vector(perm[c]);
            std::copy(v.begin(), v.end(), centroids_.begin() + static_cast<std::ptrdiff_t>(c * dim_));
        }

        std::vector<std::uint32_t> assign(n, 0);
        std::vector<double> sim(n, 0.0);
        for (int it = 0; it < params.max_iter; ++it) {
            std::vector<std::uint32_t> next(n);
            for (std::size_t i = 0; i < n; ++i) next[i] = nearest_centroid(vector(i), &sim[i]);
            if (it > 0 && next == assign) break;
            assign = std::move(next);

            std::vector<std::size_t> members(nc, 0);
            for (auto a : assign) ++members[a];
            std::vector<bool> moved(n, false);
            for (std::size_t c = 0; c < nc; ++c) {
                if (members[c] > 0) continue;
                std::size_t far = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (moved[i] || members[assign[i]] <= 1) continue;
                    if (far == n || sim[i] < sim[far]) far = i;
                }
                if (far == n) continue;
                --members[assign[far]];
                assign[far] = static_cast<std::uint32_t>(c);
                members[c] = 1;
                moved[far] = true;
            }

            std::vector<double> sums(nc * dim_, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                auto v = vector(i);
                for (std::size_t d = 0; d < dim_; ++d) sums[assign[i] * dim_ + d] += v[d];
            }
            for (std::size_t c = 0; c < nc; ++c) {
                double sq = 0.0;
                for (std::size_t d = 0; d < dim_; ++d) sq += sums[c * dim_ + d] * sums[c * dim_ + d];
                if (!(sq > 0.0)) continue;  // keep the previous centroid
                const double norm = std::sqrt(sq);
                for (std::size_t d = 0; d < dim_; ++d) centroids_[c * dim_ + d] = static_cast<float>(sums[c * dim_ + d] / norm);
            }
        }
        assignment_.resize(n);
        for (std::size_t i = 0; i < n; ++i) assignment_[i] = nearest_centroid(vector(i));
        rebuild_lists();
    }

    void rebuild_lists() {
        lists_.assign(n_clusters(), {});
        for (std::uint32_t i = 0; i < assignment_.size(); ++i) lists_[assignment_[i]].push_back(i);
    }

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
    IndexBackend backend_ = IndexBackend::Flat;
    std::size_t n_probe_ = 8;
    std::vector<float> centroids_;
    std::vector<std::uint32_t> assignment_;
    std::vector<std::vector<std::uint32_t>> lists_;
};

}  // namespace hart
