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

// Shared fixtures and independent oracles for the test binaries.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "hart/hart.hpp"

namespace hart::test {

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hart-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline std::vector<float> random_vector(Rng& rng, std::size_t dim) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
}

inline std::string doc_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "d%05zu", i);
    return buf;
}

/// Random unit-vector index plus its raw rows for oracle use.
struct RandomIndex {
    std::vector<std::string> ids;
    std::vector<float> rows;
    std::size_t dim = 0;
};

inline RandomIndex random_index(Rng& rng, std::size_t n, std::size_t dim, bool quantize = false) {
    RandomIndex r;
    r.dim = dim;
    for (std::size_t i = 0; i < n; ++i) {
        auto v = random_vector(rng, dim);
        if (quantize) {
            // Few distinct values so that exact score ties occur.
            for (auto& x : v) x = std::round(x);
        }
        const auto u = normalize(v);
        r.ids.push_back(doc_id(i));
        r.rows.insert(r.rows.end(), u.values.begin(), u.values.end());
    }
    return r;
}

/// Exhaustive scan: every inner product, full sort by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> brute_force_topk(const RandomIndex& r, const std::vector<float>& q,
                                                                    std::size_t k) {
    std::vector<std::pair<std::string, double>> all;
    for (std::size_t i = 0; i < r.ids.size(); ++i) {
        double s = 0.0;
        for (std::size_t d = 0; d < r.dim; ++d) s += static_cast<double>(r.rows[i * r.dim + d]) * static_cast<double>(q[d]);
        all.emplace_back(r.ids[i], s);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

/// Text-free corpus: each doc is a bag of a few topic words, so a query
/// naming a topic has a known set of relevant docs.
inline EvidenceCorpus topic_corpus(Rng& rng, std::size_t n, std::size_t vocab) {
    EvidenceCorpus c;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        for (int w = 0; w < 6; ++w) text += "w" + std::to_string(rng.below(vocab)) + " ";
        c.add({doc_id(i), text, "test"});
    }
    return c;
}

/// Fixed classifier for tests that only care about retrieval.
class ConstantClassifier final : public Classifier {
  public:
    ConstantClassifier(LabelSpace space, std::size_t label) : space_(space), label_(label) {}
    std::vector<double> predict_proba(const SpanInput&) const override {
        std::vector<double> p(label_count(space_), 0.0);
        p[label_] = 1.0;
        return p;
    }
    LabelSpace label_space() const override { return space_; }
    std::string backend_id() const override { return "constant"; }

  private:
    LabelSpace space_;
    std::size_t label_;
};

}  // namespace hart::test
