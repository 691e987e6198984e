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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hart/binio.hpp"
#include "hart/corpus.hpp"
#include "hart/error.hpp"
#include "hart/rng.hpp"
#include "hart/text.hpp"

namespace hart {

inline constexpr std::size_t kDefaultClassWindow = 64;

/// A span with its left/right character context and the marked model input
/// "[CTXL] left [SPAN] span [/SPAN] right".
struct SpanInput {
    std::string span_text;
    std::string left_context;
    std::string right_context;
    std::size_t window = 0;
    std::string marked_text;
    std::optional<HallucinationType> type_hint;

    bool operator==(const SpanInput&) const = default;
};

inline std::string mark(const std::string& left, const std::string& span, const std::string& right) {
    return "[CTXL] " + left + " [SPAN] " + span + " [/SPAN] " + right;
}

inline SpanInput build_span_input(const std::u32string& response_chars, const HallucinationSpan& span, std::size_t w) {
    if (span.begin >= span.end || span.end > response_chars.size()) {
        raise(Errc::SpanOutOfBounds, span.span_id + " [" + std::to_string(span.begin) + ", " + std::to_string(span.end) +
                                         ") in text of length " + std::to_string(response_chars.size()));
    }
    SpanInput in;
    in.window = w;
    in.span_text = utf8::slice(response_chars, span.begin, span.end);
    in.left_context = utf8::slice(response_chars, span.begin - std::min(span.begin, w), span.begin);
    in.right_context = utf8::slice(response_chars, span.end, span.end + w);
    in.marked_text = mark(in.left_context, in.span_text, in.right_context);
    return in;
}

inline SpanInput build_span_input(const std::string& response, const HallucinationSpan& span, std::size_t w) {
    return build_span_input(utf8::decode(response), span, w);
}

/// Adds the type sentinel used by the type-conditioned mechanism mode.
inline SpanInput with_type_hint(SpanInput in, HallucinationType t) {
    in.type_hint = t;
    in.marked_text += " [TYPE=" + std::string(to_string(t)) + "]";
    return in;
}

enum class LabelSpace : std::uint32_t { HallucinationType = 0, ErrorMechanism = 1 };

inline constexpr std::size_t label_count(LabelSpace s) {
    return s == LabelSpace::HallucinationType ? kHallucinationTypes.size() : kErrorMechanisms.size();
}

inline std::string label_name(LabelSpace s, std::size_t i) {
    return s == LabelSpace::HallucinationType ? std::string(to_string(kHallucinationTypes.at(i)))
                                              : std::string(to_string(kErrorMechanisms.at(i)));
}

class Classifier {
  public:
    virtual ~Classifier() = default;
    /// Distribution over the label space, in enum declaration order.
    virtual std::vector<double> predict_proba(const SpanInput& input) const = 0;
    virtual LabelSpace label_space() const = 0;
    virtual std::string backend_id() const = 0;
    /// True when the classifier expects `SpanInput::type_hint`.
    virtual bool conditioned_on_type() const { return false; }
};

struct MapPrediction {
    std::size_t label = 0;
    double probability = 0.0;
};

/// Argmax of a probability vector; ties go to the lowest index.
inline MapPrediction argmax_label(const std::vector<double>& proba) {
    MapPrediction p;
    for (std::size_t i = 0; i < proba.size(); ++i) {
        if (i == 0 || proba[i] > p.probability) {
            p.label = i;
            p.probability = proba[i];
        }
    }
    return p;
}

inline MapPrediction predict_map(const Classifier& clf, const SpanInput& input) {
    const auto proba = clf.predict_proba(input);
    if (proba.size() != label_count(clf.label_space())) {
        raise(Errc::InvalidParams, clf.backend_id() + " returned " + std::to_string(proba.size()) + " probabilities");
    }
    return argmax_label(proba);
}

// ---------------------------------------------------------------------------
// Built-in multinomial logistic regression over hashed features.

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 15;

/// Sparse feature vector: (bucket, value) pairs, sorted by bucket.
using SparseFeatures = std::vector<std::pair<std::uint32_t, float>>;

/// Hashed bag of words of the marked input. Sentinels are whole tokens;
/// span tokens are tagged "s:" and context tokens "c:" so the model can tell
/// them apart. Counts are L2-normalized.
inline SparseFeatures hashed_features(const SpanInput& in, std::uint32_t feature_dim) {
    std::map<std::uint32_t, double> acc;
    auto add = [&](const std::string& tok) { acc[static_cast<std::uint32_t>(fnv1a64(tok) % feature_dim)] += 1.0; };
    add("[CTXL]");
    add("[SPAN]");
    add("[/SPAN]");
    for (const auto& t : tokenize(in.left_context)) add("c:" + t);
    for (const auto& t : tokenize(in.span_text)) add("s:" + t);
    for (const auto& t : tokenize(in.right_context)) add("c:" + t);
    if (in.type_hint) add("[TYPE=" + std::string(to_string(*in.type_hint)) + "]");
    double sq = 0.0;
    for (const auto& [k, v] : acc) sq += v * v;
    const double norm = std::sqrt(sq);
    SparseFeatures out;
    out.reserve(acc.size());
    for (const auto& [k, v] : acc) out.emplace_back(k, static_cast<float>(v / norm));
    return out;
}

struct TrainParams {
    std::uint32_t feature_dim = kDefaultFeatureDim;
    int epochs = 12;
    double learning_rate = 0.5;
    double l2 = 1e-6;
    std::uint64_t seed = 7;
};

class LinearClassifier final : public Classifier {
  public:
    static constexpr char kMagic[8] = {'H', 'A', 'R', 'T', 'C', 'L', 'F', '\x01'};
    static constexpr std::uint32_t kFormatVersion = 1;

    LinearClassifier() = default;
    LinearClassifier(LabelSpace space, std::uint32_t feature_dim, bool conditioned = false, std::uint32_t window = kDefaultClassWindow)
        : space_(space),
          n_classes_(static_cast<std::uint32_t>(label_count(space))),
          feature_dim_(feature_dim),
          conditioned_(conditioned),
          window_(window),
          weights_(static_cast<std::size_t>(n_classes_) * feature_dim, 0.0f),
          bias_(n_classes_, 0.0f) {}

    bool trained() const { return !weights_.empty(); }
    LabelSpace label_space() const override { return space_; }
    bool conditioned_on_type() const override { return conditioned_; }
    std::uint32_t window() const { return window_; }
    std::uint32_t feature_dim() const { return feature_dim_; }

    std::string backend_id() const override {
        return std::string("builtin-logreg-") + (space_ == LabelSpace::HallucinationType ? "type" : "mechanism") +
               (conditioned_ ? "-conditioned" : "");
    }

    std::vector<double> predict_proba(const SpanInput& input) const override {
        if (!trained()) raise(Errc::UntrainedModel, "classifier has no weights");
        if (conditioned_ && !input.type_hint) raise(Errc::InvalidParams, "type-conditioned classifier needs a type hint");
        return softmax(logits(hashed_features(conditioned_ ? input : strip_hint(input), feature_dim_)));
    }

    /// Plain SGD on cross-entropy, one example at a time in a seeded
    /// shuffled order per epoch. Single-threaded so weights are reproducible.
    void fit(const std::vector<std::pair<SpanInput, std::size_t>>& data, const TrainParams& params) {
        std::vector<SparseFeatures> feats;
        feats.reserve(data.size());
        for (const auto& [in, y] : data) {
            if (y >= n_classes_) raise(Errc::UnknownLabel, "label index " + std::to_string(y));
            feats.push_back(hashed_features(conditioned_ ? in : strip_hint(in), feature_dim_));
        }
        Rng rng(params.seed);
        std::vector<std::size_t> order(data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int epoch = 0; epoch < params.epochs; ++epoch) {
            rng.shuffle(order);
            const double lr = params.learning_rate / (1.0 + 0.1 * epoch);
            for (std::size_t idx : order) {
                const auto& x = feats[idx];
                const auto p = softmax(logits(x));
                for (std::uint32_t c = 0; c < n_classes_; ++c) {
                    const double g = p[c] - (c == data[idx].second ? 1.0 : 0.0);
                    float* row = &weights_[static_cast<std::size_t>(c) * feature_dim_];
                    for (const auto& [k, v] : x) {
                        row[k] = static_cast<float>(row[k] - lr * (g * v + params.l2 * row[k]));
                    }
                    bias_[c] = static_cast<float>(bias_[c] - lr * g);
                }
            }
        }
    }

    void save(const std::string& path) const { serialize().write_file(path); }

    binio::Writer serialize() const {
        if (!trained()) raise(Errc::UntrainedModel, "cannot save an untrained classifier");
        binio::Writer w;
        w.put_bytes(std::string_view(kMagic, sizeof(kMagic)));
        w.put<std::uint32_t>(kFormatVersion);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(space_));
        w.put<std::uint32_t>(n_classes_);
        w.put<std::uint32_t>(feature_dim_);
        w.put<std::uint32_t>(conditioned_ ? 1u : 0u);
        w.put<std::uint32_t>(window_);
        w.put_floats(weights_);
        w.put_floats(bias_);
        return w;
    }

    static LinearClassifier load(const std::string& path) { return deserialize(read_file(path)); }

    static LinearClassifier deserialize(std::string_view bytes) {
        binio::Reader r(bytes);
        if (r.remaining() < sizeof(kMagic) || r.get_bytes(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
            raise(Errc::BadMagic, "not a HARTCLF file");
        }
        const auto version = r.get<std::uint32_t>();
        if (version != kFormatVersion) raise(Errc::VersionUnsupported, "classifier format version " + std::to_string(version));
        const auto space = r.get<std::uint32_t>();
        if (space > 1) raise(Errc::Corrupt, "unknown label space at offset " + std::to_string(r.offset() - 4));
        const auto n_classes = r.get<std::uint32_t>();
        const auto dim = r.get<std::uint32_t>();
        const auto flags = r.get<std::uint32_t>();
        const auto window = r.get<std::uint32_t>();
        LinearClassifier clf(static_cast<LabelSpace>(space), dim, (flags & 1u) != 0, window);
        if (n_classes != clf.n_classes_ || dim == 0) raise(Errc::Corrupt, "inconsistent header");
        r.get_floats(clf.weights_);
        r.get_floats(clf.bias_);
        if (!r.at_end()) raise(Errc::Corrupt, "trailing bytes at offset " + std::to_string(r.offset()));
        return clf;
    }

  private:
    static SpanInput strip_hint(SpanInput in) {
        in.type_hint.reset();
        return in;
    }

    std::vector<double> logits(const SparseFeatures& x) const {
        std::vector<double> z(n_classes_);
        for (std::uint32_t c = 0; c < n_classes_; ++c) {
            const float* row = &weights_[static_cast<std::size_t>(c) * feature_dim_];
            double s = bias_[c];
            for (const auto& [k, v] : x) s += static_cast<double>(row[k]) * v;
            z[c] = s;
        }
        return z;
    }

    static std::vector<double> softmax(std::vector<double> z) {
        const double m = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (auto& v : z) {
            v = std::exp(v - m);
            sum += v;
        }
        for (auto& v : z) v /= sum;
        return z;
    }

    LabelSpace space_ = LabelSpace::HallucinationType;
    std::uint32_t n_classes_ = 0;
    std::uint32_t feature_dim_ = 0;
    bool conditioned_ = false;
    std::uint32_t window_ = kDefaultClassWindow;
    std::vector<float> weights_;
    std::vector<float> bias_;
};

/// Trains a built-in classifier. Needs at least two distinct labels.
inline LinearClassifier train_builtin(const std::vector<std::pair<SpanInput, std::size_t>>& data, LabelSpace space,
                                      const TrainParams& params = {}, bool conditioned = false,
                                      std::uint32_t window = kDefaultClassWindow) {
    std::set<std::size_t> labels;
    for (const auto& [in, y] : data) labels.insert(y);
    if (labels.size() < 2) raise(Errc::DegenerateLabels, "training data has " + std::to_string(labels.size()) + " distinct labels");
    LinearClassifier clf(space, params.feature_dim, conditioned, window);
    clf.fit(data, params);
    return clf;
}

/// (input, label index) pairs for every hallucinated span of the dataset.
/// In conditioned mode the gold type is attached as the type hint.
inline std::vector<std::pair<SpanInput, std::size_t>> training_examples(const std::vector<Sample>& dataset, LabelSpace space,
                                                                        std::size_t w = kDefaultClassWindow,
                                                                        bool conditioned = false) {
    std::vector<std::pair<SpanInput, std::size_t>> out;
    for (const auto& s : dataset) {
        const auto chars = utf8::decode(s.response);
        for (const auto& sp : s.spans) {
            if (!sp.is_hallucination || !sp.hallucination_type || !sp.error_mechanism) continue;
            auto in = build_span_input(chars, sp, w);
            if (space == LabelSpace::HallucinationType) {
                out.emplace_back(std::move(in), static_cast<std::size_t>(*sp.hallucination_type));
            } else {
                if (conditioned) in = with_type_hint(std::move(in), *sp.hallucination_type);
                out.emplace_back(std::move(in), static_cast<std::size_t>(*sp.error_mechanism));
            }
        }
    }
    return out;
}

/// Fraction of examples whose MAP label equals the given one.
inline double accuracy(const Classifier& clf, const std::vector<std::pair<SpanInput, std::size_t>>& data) {
    if (data.empty()) raise(Errc::EmptyDataset, "no examples to score");
    std::size_t right = 0;
    for (const auto& [in, y] : data) right += predict_map(clf, in).label == y ? 1 : 0;
    return static_cast<double>(right) / static_cast<double>(data.size());
}

}  // namespace hart
