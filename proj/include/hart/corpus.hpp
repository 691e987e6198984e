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

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hart/error.hpp"
#include "hart/text.hpp"

namespace hart {

enum class HallucinationType { Entity, Fact, Logic, Fabricate };
enum class ErrorMechanism { EntityMismatch, Overgeneralization, ReasoningFailure, ContextLeakage, FabricationHeuristic };

inline constexpr std::array kHallucinationTypes{HallucinationType::Entity, HallucinationType::Fact,
                                                HallucinationType::Logic, HallucinationType::Fabricate};
inline constexpr std::array kErrorMechanisms{ErrorMechanism::EntityMismatch, ErrorMechanism::Overgeneralization,
                                             ErrorMechanism::ReasoningFailure, ErrorMechanism::ContextLeakage,
                                             ErrorMechanism::FabricationHeuristic};

inline constexpr std::string_view to_string(HallucinationType t) {
    constexpr std::array<std::string_view, 4> names{"Entity", "Fact", "Logic", "Fabricate"};
    return names[static_cast<std::size_t>(t)];
}

inline constexpr std::string_view to_string(ErrorMechanism m) {
    constexpr std::array<std::string_view, 5> names{"EntityMismatch", "Overgeneralization", "ReasoningFailure",
                                                    "ContextLeakage", "FabricationHeuristic"};
    return names[static_cast<std::size_t>(m)];
}

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto lo = [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; };
        if (lo(a[i]) != lo(b[i])) return false;
    }
    return true;
}

template <class Enum, std::size_t N>
Enum parse_label(std::string_view value, const std::array<Enum, N>& all) {
    for (Enum e : all) {
        if (iequals(value, to_string(e))) return e;
    }
    raise(Errc::UnknownLabel, std::string(value));
}

}  // namespace detail

/// Case-insensitive parse; unknown strings are rejected.
inline HallucinationType parse_hallucination_type(std::string_view s) {
    return detail::parse_label(s, kHallucinationTypes);
}

inline ErrorMechanism parse_error_mechanism(std::string_view s) {
    return detail::parse_label(s, kErrorMechanisms);
}

/// One annotated character range of a response. Offsets count Unicode
/// scalar values, `end` is exclusive.
struct HallucinationSpan {
    std::string span_id;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
    bool is_hallucination = true;
    std::optional<HallucinationType> hallucination_type;
    std::optional<ErrorMechanism> error_mechanism;
    std::string attribution_source;
    std::vector<std::string> gold_evidence_ids;

    bool operator==(const HallucinationSpan&) const = default;
};

struct Sample {
    std::string id;
    std::string prompt;
    std::string response;
    std::vector<HallucinationSpan> spans;

    bool operator==(const Sample&) const = default;
};

struct EvidenceDoc {
    std::string id;
    std::string text;
    std::string source;

    bool operator==(const EvidenceDoc&) const = default;
};

/// Evidence documents in file order with an id lookup.
class EvidenceCorpus {
  public:
    EvidenceCorpus() = default;

    void add(EvidenceDoc doc) {
        if (doc.id.empty()) raise(Errc::MalformedLine, "evidence id is empty");
        if (doc.text.empty()) raise(Errc::MalformedLine, "evidence '" + doc.id + "' has empty text");
        if (by_id_.count(doc.id)) raise(Errc::DuplicateId, doc.id);
        by_id_.emplace(doc.id, docs_.size());
        docs_.push_back(std::move(doc));
    }

    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const std::vector<EvidenceDoc>& docs() const { return docs_; }
    const EvidenceDoc& operator[](std::size_t i) const { return docs_[i]; }

    const EvidenceDoc* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : &docs_[it->second];
    }

    const EvidenceDoc& at(const std::string& id) const {
        if (auto* d = find(id)) return *d;
        raise(Errc::UnknownDocId, id);
    }

  private:
    std::vector<EvidenceDoc> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// JSON mapping

inline nlohmann::json to_json(const HallucinationSpan& s) {
    nlohmann::json j = {{"span_id", s.span_id}, {"begin", s.begin}, {"end", s.end}, {"text", s.text},
                        {"is_hallucination", s.is_hallucination}};
    if (s.hallucination_type) j["hallucination_type"] = to_string(*s.hallucination_type);
    if (s.error_mechanism) j["error_mechanism"] = to_string(*s.error_mechanism);
    if (!s.attribution_source.empty()) j["attribution_source"] = s.attribution_source;
    if (s.is_hallucination || !s.gold_evidence_ids.empty()) j["gold_evidence_ids"] = s.gold_evidence_ids;
    return j;
}

inline nlohmann::json to_json(const Sample& s) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& sp : s.spans) spans.push_back(to_json(sp));
    return {{"id", s.id}, {"prompt", s.prompt}, {"response", s.response}, {"spans", std::move(spans)}};
}

inline nlohmann::json to_json(const EvidenceDoc& d) {
    return {{"id", d.id}, {"text", d.text}, {"source", d.source}};
}

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) raise(Errc::MalformedLine, std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(Errc::MalformedLine, std::string("field '") + key + "' has the wrong type");
    }
}

template <class T>
T optional_field(const nlohmann::json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(Errc::MalformedLine, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

/// Parses and validates one dataset record. Span offsets are checked
/// against the response decoded to scalar values.
inline Sample sample_from_json(const nlohmann::json& j) {
    if (!j.is_object()) raise(Errc::MalformedLine, "record is not a JSON object");
    Sample s;
    s.id = detail::field<std::string>(j, "id");
    s.prompt = detail::optional_field<std::string>(j, "prompt", "");
    s.response = detail::field<std::string>(j, "response");
    const auto chars = utf8::decode(s.response);

    auto spans = j.find("spans");
    if (spans == j.end() || !spans->is_array()) raise(Errc::MalformedLine, "missing array 'spans'");
    std::set<std::string> seen;
    for (const auto& js : *spans) {
        if (!js.is_object()) raise(Errc::MalformedLine, "span is not a JSON object");
        HallucinationSpan sp;
        sp.span_id = detail::field<std::string>(js, "span_id");
        const auto begin = detail::field<std::int64_t>(js, "begin");
        const auto end = detail::field<std::int64_t>(js, "end");
        if (begin < 0 || end <= begin || static_cast<std::size_t>(end) > chars.size()) {
            raise(Errc::SpanOutOfBounds, s.id + "/" + sp.span_id + " [" + std::to_string(begin) + ", " +
                                             std::to_string(end) + ") in response of length " +
                                             std::to_string(chars.size()));
        }
        sp.begin = static_cast<std::size_t>(begin);
        sp.end = static_cast<std::size_t>(end);
        const auto expected = utf8::slice(chars, sp.begin, sp.end);
        sp.text = detail::optional_field<std::string>(js, "text", expected);
        if (sp.text != expected) {
            raise(Errc::MalformedLine, s.id + "/" + sp.span_id + ": span text '" + sp.text +
                                           "' does not match response substring '" + expected + "'");
        }
        if (!seen.insert(sp.span_id).second) {
            raise(Errc::DuplicateId, s.id + "/" + sp.span_id);
        }
        sp.is_hallucination = detail::field<bool>(js, "is_hallucination");
        if (auto t = detail::optional_field<std::string>(js, "hallucination_type", ""); !t.empty()) {
            sp.hallucination_type = parse_hallucination_type(t);
        }
        if (auto m = detail::optional_field<std::string>(js, "error_mechanism", ""); !m.empty()) {
            sp.error_mechanism = parse_error_mechanism(m);
        }
        if (sp.is_hallucination && (!sp.hallucination_type || !sp.error_mechanism)) {
            raise(Errc::MalformedLine, s.id + "/" + sp.span_id + ": hallucinated span needs type and mechanism");
        }
        sp.attribution_source = detail::optional_field<std::string>(js, "attribution_source", "");
        sp.gold_evidence_ids =
            detail::optional_field<std::vector<std::string>>(js, "gold_evidence_ids", std::vector<std::string>{});
        s.spans.push_back(std::move(sp));
    }
    return s;
}

inline EvidenceDoc evidence_from_json(const nlohmann::json& j) {
    if (!j.is_object()) raise(Errc::MalformedLine, "record is not a JSON object");
    EvidenceDoc d;
    d.id = detail::field<std::string>(j, "id");
    d.text = detail::field<std::string>(j, "text");
    d.source = detail::optional_field<std::string>(j, "source", "");
    return d;
}

namespace detail {

/// Runs `fn(json, line_no)` for every nonblank line; parse failures and
/// validation errors are reported with their 1-based line number.
template <class Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    const auto content = read_file(path);
    const auto lines = split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = lines[i];
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        const auto line_no = i + 1;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::MalformedLine, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            fn(j);
        } catch (const Error& e) {
            throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.detail());
        }
    }
}

}  // namespace detail

inline std::vector<Sample> load_dataset(const std::string& path) {
    std::vector<Sample> out;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j) { out.push_back(sample_from_json(j)); });
    return out;
}

inline EvidenceCorpus load_corpus(const std::string& path) {
    EvidenceCorpus corpus;
    detail::for_each_jsonl(path, [&](const nlohmann::json& j) { corpus.add(evidence_from_json(j)); });
    return corpus;
}

template <class Range>
void write_jsonl(const std::string& path, const Range& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::Io, "cannot write " + path);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    if (!out) raise(Errc::Io, "write failed for " + path);
}

inline void save_dataset(const std::string& path, const std::vector<Sample>& samples) { write_jsonl(path, samples); }

inline void save_corpus(const std::string& path, const EvidenceCorpus& corpus) { write_jsonl(path, corpus.docs()); }

/// Per-category proportions over hallucinated spans, for both taxonomies.
/// Every category is present, including those with proportion 0.
struct LabelDistribution {
    std::map<HallucinationType, double> types;
    std::map<ErrorMechanism, double> mechanisms;
    std::size_t n_spans = 0;
};

inline LabelDistribution label_distribution(const std::vector<Sample>& dataset) {
    std::map<HallucinationType, std::size_t> tc;
    std::map<ErrorMechanism, std::size_t> mc;
    std::size_t n = 0;
    for (const auto& s : dataset) {
        for (const auto& sp : s.spans) {
            if (!sp.is_hallucination) continue;
            ++n;
            if (sp.hallucination_type) ++tc[*sp.hallucination_type];
            if (sp.error_mechanism) ++mc[*sp.error_mechanism];
        }
    }
    if (n == 0) raise(Errc::EmptyDataset, "no hallucinated spans");
    LabelDistribution d;
    d.n_spans = n;
    for (auto t : kHallucinationTypes) d.types[t] = static_cast<double>(tc[t]) / static_cast<double>(n);
    for (auto m : kErrorMechanisms) d.mechanisms[m] = static_cast<double>(mc[m]) / static_cast<double>(n);
    return d;
}

}  // namespace hart
