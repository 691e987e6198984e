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

// Seeded synthetic benchmark. Each sample's response carries one
// hallucinated span built from a relation template with one slot corrupted.
// The template fixes the hallucination type and a cue word after the subject
// fixes the mechanism, so both labels are decidable from the span surface.
// Gold evidence states the true fact in paraphrased wording; near-miss
// distractors reuse the span's wording about a person sharing one name.

#include <array>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hart/corpus.hpp"
#include "hart/error.hpp"
#include "hart/rng.hpp"
#include "hart/text.hpp"

namespace hart {

/// Target label proportions, in enum declaration order.
struct LabelMixture {
    std::array<double, 4> types{};
    std::array<double, 5> mechanisms{};
};

namespace detail {

template <std::size_t N>
std::array<double, N> normalized(std::array<double, N> w) {
    double s = 0.0;
    for (double x : w) s += x;
    for (double& x : w) x /= s;
    return w;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"qwen", "mistral", "uniform"};
    return names;
}

/// Label mixtures observed for two generator models, plus a flat one.
/// Weights are renormalized since the published proportions do not sum to
/// exactly one.
inline LabelMixture preset(std::string_view name) {
    LabelMixture m;
    if (name == "qwen") {
        m.types = {0.1676, 0.7263, 0.0033, 0.1028};
        m.mechanisms = {0.1228, 0.0261, 0.0172, 0.0054, 0.8426};
    } else if (name == "mistral") {
        m.types = {0.0999, 0.8309, 0.0087, 0.0605};
        m.mechanisms = {0.1086, 0.0244, 0.0168, 0.0076, 0.8436};
    } else if (name == "uniform") {
        m.types = {1, 1, 1, 1};
        m.mechanisms = {1, 1, 1, 1, 1};
    } else {
        raise(Errc::InvalidParams, "unknown preset '" + std::string(name) + "' (expected qwen, mistral or uniform)");
    }
    m.types = detail::normalized(m.types);
    m.mechanisms = detail::normalized(m.mechanisms);
    return m;
}

struct SynthConfig {
    std::size_t n_spans = 200;
    std::size_t n_docs = 5000;
    std::uint64_t seed = 7;
    std::string preset = "qwen";
    double neutral_rate = 0.4;  // samples that also carry a correct span
    std::size_t near_misses = 3;

    nlohmann::json to_json() const {
        return {{"spans", n_spans}, {"docs", n_docs}, {"seed", seed}, {"preset", preset}, {"neutral_rate", neutral_rate},
                {"near_misses", near_misses}};
    }
};

struct SynthOutput {
    std::vector<Sample> dataset;
    EvidenceCorpus corpus;
    SynonymTable synonyms;
};

namespace synth {

// Placeholders: {S} subject, {P} place, {O} organization, {T} topic,
// {R} river, {Y} year, {N} count, {X} device kind, {J} occupation.
struct Template {
    HallucinationType type;
    std::string_view canonical;
    std::string_view paraphrase;
    char corrupt;  // slot changed in the span, 0 when the wording itself is the error
};

inline const std::vector<Template>& templates() {
    using T = HallucinationType;
    static const std::vector<Template> t{
        {T::Entity, "{S} studied at the university of {P}", "{S} trained at the college of {P}", 'P'},
        {T::Entity, "{S} was born in the city of {P}", "{S} was born in the town of {P}", 'P'},
        {T::Entity, "{S} was elected mayor of {P}", "{S} was chosen mayor of {P}", 'P'},
        {T::Fact, "{S} founded the company {O} in {Y}", "{S} established the firm {O} in {Y}", 'Y'},
        {T::Fact, "{S} wrote {N} novels about {T}", "{S} authored {N} books about {T}", 'N'},
        {T::Fact, "{S} completed the bridge over the {R} in {Y}", "{S} finished the viaduct over the {R} in {Y}", 'Y'},
        {T::Logic, "{S} received the award in {Y} so never worked in {T}", "{S} obtained the prize in {Y} for work in {T}", 0},
        {T::Logic, "{S} completed the degree in {T} hence never studied", "{S} finished the degree in {T} after years of study", 0},
        {T::Fabricate, "{S} invented the {X} engine in {Y}", "{S} worked as a {J} and built no {X} engine", 0},
        {T::Fabricate, "{S} discovered the lost city of {P}", "{S} never visited the lost town of {P}", 0},
    };
    return t;
}

inline constexpr std::array<std::string_view, 5> kMechanismCues{"specifically", "invariably", "consequently", "as prompted",
                                                                 "reportedly"};

inline const std::vector<std::pair<std::string, std::string>>& synonym_pairs() {
    static const std::vector<std::pair<std::string, std::string>> p{
        {"trained", "studied"},  {"college", "university"}, {"town", "city"},      {"chosen", "elected"},
        {"established", "founded"}, {"firm", "company"},    {"authored", "wrote"}, {"books", "novels"},
        {"finished", "completed"}, {"viaduct", "bridge"},   {"obtained", "received"}, {"prize", "award"},
    };
    return p;
}

inline constexpr std::array<std::string_view, 40> kFirst{
    "Alma",  "Bruno", "Carla", "Dario",  "Elena", "Felix", "Greta",  "Hugo",  "Irene", "Jonas",
    "Karin", "Lukas", "Marta", "Nils",   "Olga",  "Pablo", "Quinn",  "Rosa",  "Stefan", "Tamara",
    "Ugo",   "Vera",  "Walter", "Xenia", "Yusuf", "Zora",  "Anton",  "Bianca", "Cyril", "Dora",
    "Emil",  "Flora", "Gustav", "Hanna", "Ivan",  "Julia", "Kurt",   "Lena",  "Milan", "Nora"};
inline constexpr std::array<std::string_view, 40> kLast{
    "Abbott", "Barros", "Castell", "Dumont",  "Eriksen", "Falk",    "Garber",  "Holm",   "Ibarra", "Jansen",
    "Kovac",  "Lindqvist", "Moreau", "Novak", "Olsen",   "Petrov",  "Quist",   "Rinaldi", "Sauer", "Toth",
    "Ulrich", "Varga",  "Weber",   "Xavier",  "Yilmaz",  "Zeller",  "Arndt",   "Brandt", "Conti",  "Dahl",
    "Engel",  "Fischer", "Gallo",  "Horvat",  "Iversen", "Jovanovic", "Keller", "Lange",  "Marin",  "Nagy"};
inline constexpr std::array<std::string_view, 30> kPlaces{
    "Arlen",    "Brevik",    "Calder",  "Dunmore",  "Eastwick",  "Fairholm", "Glenrock",    "Halden",    "Ironvale", "Jarrow",
    "Kestrel",  "Lowmoor",   "Marsden", "Northam",  "Oakridge",  "Pembury",  "Quarrington", "Redbank",   "Stonemoor", "Thornbury",
    "Upfield",  "Valemont",  "Westbrook", "Yardley", "Zennor",   "Ashby",    "Birchwood",   "Coldharbour", "Dovercourt", "Elmstead"};
inline constexpr std::array<std::string_view, 20> kOrgs{
    "Acmetron", "Borealis", "Cobaltix", "Deltanet", "Everline", "Fluxcore", "Granitek", "Helion",   "Ionics",   "Jadeworks",
    "Keystone", "Lumora",   "Meridian", "Novaris",  "Orbitek",  "Pinecrest", "Quantix", "Rivora",   "Solstice", "Terranova"};
inline constexpr std::array<std::string_view, 20> kTopics{
    "astronomy",  "botany",    "chemistry",   "dentistry", "economics",  "forestry",   "geology",    "history",
    "irrigation", "journalism", "linguistics", "mathematics", "navigation", "oceanography", "philosophy", "robotics",
    "sculpture",  "topology",  "urbanism",    "volcanology"};
inline constexpr std::array<std::string_view, 15> kRivers{"Amber", "Belt", "Crane", "Dove", "Esk",  "Fenn", "Gala", "Hale",
                                                          "Isla",  "Jura", "Kent",  "Lune", "Mole", "Nene", "Ouse"};
inline constexpr std::array<std::string_view, 10> kDevices{"solar",   "magnetic", "steam", "tidal",     "quantum",
                                                           "crystal", "sonic",    "thermal", "hydraulic", "ionic"};
inline constexpr std::array<std::string_view, 10> kJobs{"teacher", "farmer", "engineer", "nurse", "baker",
                                                        "pilot",   "lawyer", "painter",  "miner", "clerk"};

inline constexpr std::size_t kMaxSubjects = kFirst.size() * kLast.size();

struct Fill {
    std::string place, org, topic, river, year, count, device, job;

    std::string& slot(char c) {
        switch (c) {
            case 'P': return place;
            case 'O': return org;
            case 'T': return topic;
            case 'R': return river;
            case 'Y': return year;
            case 'N': return count;
            case 'X': return device;
            default: return job;
        }
    }
    const std::string& slot(char c) const { return const_cast<Fill*>(this)->slot(c); }
};

template <std::size_t N>
std::string draw(Rng& rng, const std::array<std::string_view, N>& pool) {
    return std::string(pool[rng.below(N)]);
}

inline std::string draw_slot(Rng& rng, char c) {
    switch (c) {
        case 'P': return draw(rng, kPlaces);
        case 'O': return draw(rng, kOrgs);
        case 'T': return draw(rng, kTopics);
        case 'R': return draw(rng, kRivers);
        case 'Y': return std::to_string(1900 + rng.below(116));
        case 'N': return std::to_string(2 + rng.below(39));
        case 'X': return draw(rng, kDevices);
        default: return draw(rng, kJobs);
    }
}

inline Fill random_fill(Rng& rng) {
    Fill f;
    for (char c : std::string_view("POTRYNXJ")) f.slot(c) = draw_slot(rng, c);
    return f;
}

/// Substitutes placeholders; `cue` goes right after the subject.
inline std::string render(std::string_view fmt, const std::string& subject, Fill f, std::string_view cue = {}) {
    std::string out;
    for (std::size_t i = 0; i < fmt.size(); ++i) {
        if (fmt[i] == '{' && i + 2 < fmt.size() && fmt[i + 2] == '}') {
            const char c = fmt[i + 1];
            if (c == 'S') {
                out += subject;
                if (!cue.empty()) out += " " + std::string(cue);
            } else {
                out += f.slot(c);
            }
            i += 2;
        } else {
            out += fmt[i];
        }
    }
    return out;
}

}  // namespace synth

inline SynonymTable synthetic_synonyms() {
    SynonymTable t;
    for (const auto& [surface, canonical] : synth::synonym_pairs()) t.add(surface, canonical);
    return t;
}

inline SynthOutput generate_synthetic(const SynthConfig& cfg) {
    using namespace synth;
    if (cfg.n_spans == 0) raise(Errc::InvalidParams, "spans must be >= 1");
    if (cfg.n_spans > kMaxSubjects) raise(Errc::InvalidParams, "spans must be <= " + std::to_string(kMaxSubjects));
    if (cfg.n_docs < cfg.n_spans) raise(Errc::InvalidParams, "docs must be >= spans");
    if (!(cfg.neutral_rate >= 0.0 && cfg.neutral_rate <= 1.0)) raise(Errc::InvalidParams, "neutral_rate must be in [0, 1]");
    const auto mix = preset(cfg.preset);
    const auto& tpls = templates();

    Rng rng(cfg.seed);
    std::vector<std::size_t> subjects(kMaxSubjects);
    for (std::size_t i = 0; i < subjects.size(); ++i) subjects[i] = i;
    rng.shuffle(subjects);
    auto name_of = [](std::size_t first, std::size_t last) { return std::string(kFirst[first]) + " " + std::string(kLast[last]); };

    struct PendingDoc {
        std::string text;
        std::size_t gold_of = SIZE_MAX;  // sample index for gold docs
    };
    std::vector<PendingDoc> docs;
    std::vector<std::size_t> tpl_of(cfg.n_spans);
    std::set<std::pair<std::string, std::size_t>> gold_facts;  // (subject, template)
    SynthOutput out;

    for (std::size_t i = 0; i < cfg.n_spans; ++i) {
        const std::size_t first = subjects[i] / kLast.size();
        const std::size_t last = subjects[i] % kLast.size();
        const auto subject = name_of(first, last);

        const auto type = kHallucinationTypes[rng.categorical(mix.types)];
        const auto mech = kErrorMechanisms[rng.categorical(mix.mechanisms)];
        std::vector<std::size_t> of_type;
        for (std::size_t t = 0; t < tpls.size(); ++t) {
            if (tpls[t].type == type) of_type.push_back(t);
        }
        const std::size_t ti = rng.pick(of_type);
        const auto& tpl = tpls[ti];
        tpl_of[i] = ti;
        gold_facts.emplace(subject, ti);

        const Fill truth = random_fill(rng);
        Fill wrong = truth;
        if (tpl.corrupt) {
            while (wrong.slot(tpl.corrupt) == truth.slot(tpl.corrupt)) wrong.slot(tpl.corrupt) = draw_slot(rng, tpl.corrupt);
        }
        const auto span_text = render(tpl.canonical, subject, wrong, kMechanismCues[static_cast<std::size_t>(mech)]);
        docs.push_back({render(tpl.paraphrase, subject, truth) + ".", i});

        Sample s;
        char id[32];
        std::snprintf(id, sizeof id, "s%05zu", i + 1);
        s.id = id;
        s.prompt = "Tell me about " + subject + ".";
        s.response = "Here is an overview of " + subject + ". ";
        HallucinationSpan h;
        h.span_id = "h1";
        h.begin = utf8::decode(s.response).size();
        h.end = h.begin + utf8::decode(span_text).size();
        h.text = span_text;
        h.is_hallucination = true;
        h.hallucination_type = type;
        h.error_mechanism = mech;
        h.attribution_source = "synthetic";
        s.response += span_text + ". ";
        s.spans.push_back(std::move(h));
        if (rng.bernoulli(cfg.neutral_rate)) {
            const std::string neutral = subject + " is often mentioned in regional archives";
            HallucinationSpan n;
            n.span_id = "n1";
            n.begin = utf8::decode(s.response).size();
            n.end = n.begin + utf8::decode(neutral).size();
            n.text = neutral;
            n.is_hallucination = false;
            s.response += neutral + ". ";
            s.spans.push_back(std::move(n));
        }
        s.response += "Let me know if you need more details.";
        out.dataset.push_back(std::move(s));
    }

    // Near misses: same wording as the span, about someone sharing one name.
    const std::size_t budget = cfg.n_docs - cfg.n_spans;
    const std::size_t per_span = std::min(cfg.near_misses, budget / cfg.n_spans);
    for (std::size_t i = 0; i < cfg.n_spans; ++i) {
        const std::size_t first = subjects[i] / kLast.size();
        const std::size_t last = subjects[i] % kLast.size();
        for (std::size_t m = 0; m < per_span; ++m) {
            for (;;) {
                const bool keep_first = (m % 2) == 0;
                const std::size_t f = keep_first ? first : rng.below(kFirst.size());
                const std::size_t l = keep_first ? rng.below(kLast.size()) : last;
                if (f == first && l == last) continue;
                const auto name = name_of(f, l);
                if (gold_facts.count({name, tpl_of[i]})) continue;
                docs.push_back({render(tpls[tpl_of[i]].canonical, name, random_fill(rng)) + "."});
                break;
            }
        }
    }
    // Background facts about anyone, in either wording.
    while (docs.size() < cfg.n_docs) {
        const auto name = name_of(rng.below(kFirst.size()), rng.below(kLast.size()));
        const std::size_t ti = rng.below(tpls.size());
        if (gold_facts.count({name, ti})) continue;
        const auto fmt = rng.bernoulli(0.5) ? tpls[ti].canonical : tpls[ti].paraphrase;
        docs.push_back({render(fmt, name, random_fill(rng)) + "."});
    }

    rng.shuffle(docs);
    for (std::size_t d = 0; d < docs.size(); ++d) {
        char id[32];
        std::snprintf(id, sizeof id, "e%05zu", d + 1);
        out.corpus.add({id, docs[d].text, "synthetic"});
        if (docs[d].gold_of != SIZE_MAX) out.dataset[docs[d].gold_of].spans[0].gold_evidence_ids.push_back(id);
    }
    out.synonyms = synthetic_synonyms();
    return out;
}

inline void write_synthetic(const SynthOutput& out, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) raise(Errc::Io, "cannot create " + dir + ": " + ec.message());
    const std::filesystem::path d(dir);
    save_dataset((d / "dataset.jsonl").string(), out.dataset);
    save_corpus((d / "evidence.jsonl").string(), out.corpus);
    write_file((d / "synonyms.json").string(), out.synonyms.to_json().dump(2) + "\n");
}

}  // namespace hart
