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

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hart/hart.hpp"

namespace hart::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

struct Globals {
    bool json = false;
    std::string config;
    unsigned threads = default_threads();
};

// ---------------------------------------------------------------------------
// Config file: a JSON object whose keys are flag names. Keys the command
// line does not already set are appended as flags, so flags win.

inline std::vector<std::string> inject_config(std::vector<std::string> args) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (path.empty()) return args;
    json cfg;
    try {
        cfg = json::parse(read_file(path));
    } catch (const json::exception& e) {
        raise(Errc::InvalidParams, "config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) raise(Errc::InvalidParams, "config " + path + " must hold a JSON object");
    auto present = [&](const std::string& flag) {
        for (const auto& a : args) {
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        }
        return false;
    };
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (key == "config" || present(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
            continue;
        }
        std::string v;
        if (value.is_array()) {
            for (const auto& x : value) v += (v.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
        } else {
            v = value.is_string() ? value.get<std::string>() : value.dump();
        }
        args.push_back(flag);
        args.push_back(v);
    }
    return args;
}

// ---------------------------------------------------------------------------
// Model selection shared by several commands

struct ModelFlags {
    std::string embedder = "builtin";
    std::string remote_url;
    std::string synonyms;
    std::size_t dim = kDefaultBuiltinDim;
    std::string reranker = "builtin";
    CLI::Option* o_embedder = nullptr;
    CLI::Option* o_remote = nullptr;
    CLI::Option* o_synonyms = nullptr;
    CLI::Option* o_dim = nullptr;
    CLI::Option* o_reranker = nullptr;

    void add(CLI::App* sub, bool with_reranker) {
        o_embedder = sub->add_option("--embedder", embedder, "builtin or remote")->check(CLI::IsMember({"builtin", "remote"}));
        o_remote = sub->add_option("--remote-url", remote_url, "model service URL (else $HART_REMOTE_URL)");
        o_synonyms = sub->add_option("--synonyms", synonyms, "synonym table JSON for the built-in models");
        o_dim = sub->add_option("--dim", dim, "built-in embedding dimension");
        if (with_reranker) {
            o_reranker = sub->add_option("--reranker", reranker, "builtin or remote")->check(CLI::IsMember({"builtin", "remote"}));
        }
    }

    /// Explicit flags over `base` (usually a manifest's record) over defaults.
    json resolve(const json& base) const {
        auto pick = [&](CLI::Option* o, const char* key, const auto& flag_value) -> json {
            if ((o && o->count()) || !base.contains(key)) return flag_value;
            return base[key];
        };
        json s = {{"embedder", pick(o_embedder, "embedder", embedder)},
                  {"remote_url", pick(o_remote, "remote_url", remote_url)},
                  {"synonyms", pick(o_synonyms, "synonyms", synonyms)},
                  {"dim", pick(o_dim, "dim", dim)},
                  {"reranker", pick(o_reranker, "reranker", reranker)}};
        const bool remote = s["embedder"] == "remote" || s["reranker"] == "remote";
        if (remote) s["remote_url"] = Endpoint::resolve(s["remote_url"].get<std::string>());
        return s;
    }
};

struct Models {
    std::shared_ptr<const SynonymTable> synonyms;
    std::unique_ptr<EmbeddingProvider> provider;
    std::unique_ptr<PairScorer> scorer;
};

inline Models make_models(const json& s) {
    Models m;
    if (const auto path = s.value("synonyms", std::string()); !path.empty()) {
        m.synonyms = std::make_shared<SynonymTable>(SynonymTable::load(path));
    }
    if (s.value("embedder", std::string("builtin")) == "remote") {
        m.provider = std::make_unique<RemoteEmbedder>(s.at("remote_url").get<std::string>());
    } else {
        m.provider = std::make_unique<BuiltinEmbedder>(s.value("dim", kDefaultBuiltinDim), m.synonyms);
    }
    if (s.value("reranker", std::string("builtin")) == "remote") {
        m.scorer = std::make_unique<RemotePairScorer>(s.at("remote_url").get<std::string>());
    } else {
        m.scorer = std::make_unique<BuiltinPairScorer>(m.synonyms);
    }
    return m;
}

inline std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

inline json read_manifest(const std::string& artifact) {
    const auto p = manifest_path(artifact);
    if (!std::filesystem::exists(p)) return json::object();
    return json::parse(read_file(p));
}

inline json recorded_models(const json& manifest) {
    if (manifest.contains("config") && manifest["config"].contains("models")) return manifest["config"]["models"];
    return json::object();
}

inline void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) raise(Errc::Io, "cannot create " + parent.string() + ": " + ec.message());
}

inline void write_json_file(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

inline void log(const Streams& io, const std::string& line) { io.err << "[hart] " << line << "\n"; }

inline std::string fmt(double v, int prec = 4) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

/// Method rows by metric columns, grouped per k.
inline std::string metrics_table(const std::vector<std::pair<std::string, eval::MetricsReport>>& rows) {
    if (rows.empty()) return "";
    std::size_t w = 6;
    for (const auto& [name, r] : rows) w = std::max(w, name.size());
    std::ostringstream os;
    char cell[32];
    os << std::string(w, ' ');
    for (const auto& [k, m] : rows.front().second.by_k) {
        for (const char* h : {"R@", "nDCG@", "JSR@", "MRR@"}) {
            std::snprintf(cell, sizeof cell, " %9s", (h + std::to_string(k)).c_str());
            os << cell;
        }
    }
    os << "\n";
    for (const auto& [name, r] : rows) {
        os << name << std::string(w - name.size(), ' ');
        for (const auto& [k, m] : r.by_k) {
            for (double v : {m.recall, m.ndcg, m.joint_sr, m.mrr}) {
                std::snprintf(cell, sizeof cell, " %9.4f", v);
                os << cell;
            }
        }
        os << "\n";
    }
    return os.str();
}

inline json inputs_digest(std::initializer_list<std::pair<const char*, std::string>> files) {
    json j = json::object();
    for (const auto& [name, path] : files) {
        if (!path.empty()) j[name] = file_digest(path);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Commands

struct SynthCmd {
    SynthConfig cfg;
    std::string out_dir;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("synth", "generate the seeded synthetic benchmark");
        s->add_option("--spans", cfg.n_spans, "hallucinated spans (one per sample)");
        s->add_option("--docs", cfg.n_docs, "evidence documents");
        s->add_option("--seed", cfg.seed);
        s->add_option("--preset", cfg.preset, "label mixture")->check(CLI::IsMember(preset_names()));
        s->add_option("--neutral-rate", cfg.neutral_rate, "share of samples with an extra correct span");
        s->add_option("--near-misses", cfg.near_misses, "confusable distractors per span");
        s->add_option("--out-dir", out_dir)->required();
    }

    int run(const Globals& g, const Streams& io) const {
        const auto out = generate_synthetic(cfg);
        write_synthetic(out, out_dir);
        const std::filesystem::path d(out_dir);
        auto manifest = base_manifest("synth", cfg.to_json());
        manifest["outputs"] = inputs_digest({{"dataset", (d / "dataset.jsonl").string()},
                                             {"evidence", (d / "evidence.jsonl").string()},
                                             {"synonyms", (d / "synonyms.json").string()}});
        write_json_file((d / "synth.manifest.json").string(), manifest);
        const auto dist = label_distribution(out.dataset);
        json summary = {{"manifest", manifest}, {"n_samples", out.dataset.size()}, {"n_docs", out.corpus.size()}};
        if (g.json) {
            io.out << summary.dump() << "\n";
        } else {
            io.out << "wrote " << out.dataset.size() << " samples and " << out.corpus.size() << " documents to " << out_dir << "\n";
            for (auto t : kHallucinationTypes) {
                io.out << "  " << to_string(t) << " " << fmt(dist.types.at(t)) << "\n";
            }
        }
        return kExitOk;
    }
};

struct BuildIndexCmd {
    std::string corpus, out, backend = "flat";
    IvfParams ivf;
    std::size_t batch = 256;
    ModelFlags models;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("build-index", "embed the evidence corpus and write a vector index");
        s->add_option("--corpus", corpus)->required();
        s->add_option("--out", out, "index file")->required();
        s->add_option("--backend", backend)->check(CLI::IsMember({"flat", "ivf"}));
        s->add_option("--n-clusters", ivf.n_clusters, "IVF clusters (0 = ceil(sqrt(N)))");
        s->add_option("--n-probe", ivf.n_probe);
        s->add_option("--ivf-seed", ivf.seed);
        s->add_option("--batch", batch, "embedding batch size");
        models.add(s, false);
    }

    int run(const Globals& g, const Streams& io) const {
        const auto settings = models.resolve(json::object());
        const auto m = make_models(settings);
        const auto c = load_corpus(corpus);
        log(io, "embedding " + std::to_string(c.size()) + " documents with " + m.provider->id());
        const auto idx = VectorIndex::build(c, *m.provider, backend == "ivf" ? IndexBackend::IVF : IndexBackend::Flat, ivf,
                                            g.threads, batch);
        ensure_parent(out);
        idx.save(out);
        json cfg = {{"backend", backend}, {"models", settings}, {"provider_id", m.provider->id()}};
        if (backend == "ivf") cfg["ivf"] = {{"n_clusters", ivf.n_clusters}, {"n_probe", ivf.n_probe}, {"seed", ivf.seed}};
        auto manifest = base_manifest("build-index", cfg);
        manifest["inputs"] = inputs_digest({{"corpus", corpus}});
        manifest["outputs"] = inputs_digest({{"index", out}});
        write_json_file(manifest_path(out), manifest);
        json summary = {{"manifest", manifest}, {"n_docs", idx.size()}, {"dim", idx.dim()}, {"n_clusters", idx.n_clusters()}};
        if (g.json) {
            io.out << summary.dump() << "\n";
        } else {
            io.out << "indexed " << idx.size() << " documents (dim " << idx.dim() << ", " << backend << ") into " << out << "\n";
        }
        return kExitOk;
    }
};

struct TrainCmd {
    std::string dataset, out_dir;
    TrainParams params;
    std::uint32_t window = kDefaultClassWindow;
    bool conditioned = false;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("train-classifiers", "fit the built-in type and mechanism classifiers");
        s->add_option("--dataset", dataset)->required();
        s->add_option("--out-dir", out_dir)->required();
        s->add_option("--window", window, "context characters on each side of the span");
        s->add_option("--epochs", params.epochs);
        s->add_option("--lr", params.learning_rate);
        s->add_option("--l2", params.l2);
        s->add_option("--seed", params.seed);
        s->add_flag("--conditioned-mechanism", conditioned, "condition the mechanism classifier on the predicted type");
    }

    int run(const Globals& g, const Streams& io) const {
        const auto data = load_dataset(dataset);
        const auto type_ex = training_examples(data, LabelSpace::HallucinationType, window);
        const auto mech_ex = training_examples(data, LabelSpace::ErrorMechanism, window, conditioned);
        if (type_ex.empty()) raise(Errc::EmptyDataset, dataset + " has no labeled hallucinated spans");
        const auto tclf = train_builtin(type_ex, LabelSpace::HallucinationType, params, false, window);
        const auto mclf = train_builtin(mech_ex, LabelSpace::ErrorMechanism, params, conditioned, window);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec) raise(Errc::Io, "cannot create " + out_dir + ": " + ec.message());
        const std::filesystem::path d(out_dir);
        tclf.save((d / "type.clf").string());
        mclf.save((d / "mechanism.clf").string());
        json cfg = {{"window", window}, {"epochs", params.epochs}, {"lr", params.learning_rate}, {"l2", params.l2},
                    {"seed", params.seed}, {"conditioned_mechanism", conditioned}, {"feature_dim", params.feature_dim}};
        auto manifest = base_manifest("train-classifiers", cfg);
        manifest["inputs"] = inputs_digest({{"dataset", dataset}});
        json summary = {{"manifest", manifest},
                        {"n_examples", type_ex.size()},
                        {"train_accuracy", {{"type", accuracy(tclf, type_ex)}, {"mechanism", accuracy(mclf, mech_ex)}}}};
        write_json_file((d / "classifiers.manifest.json").string(), summary);
        if (g.json) {
            io.out << summary.dump() << "\n";
        } else {
            io.out << "trained on " << type_ex.size() << " spans: type accuracy " << fmt(summary["train_accuracy"]["type"])
                   << ", mechanism accuracy " << fmt(summary["train_accuracy"]["mechanism"]) << "\n";
        }
        return kExitOk;
    }
};

/// Options shared by trace and ablate.
struct RetrievalFlags {
    std::string dataset, corpus, index, type_clf, mech_clf;
    TraceConfig trace;
    bool no_rerank = false;
    ModelFlags models;

    void add(CLI::App* s, bool rerank_flag) {
        s->add_option("--dataset", dataset)->required();
        s->add_option("--corpus", corpus)->required();
        s->add_option("--index", index)->required();
        s->add_option("--type-clf", type_clf, "defaults to type.clf next to the index");
        s->add_option("--mech-clf", mech_clf, "defaults to mechanism.clf next to the index");
        s->add_option("--windows", trace.windows, "query context widths")->delimiter(',');
        s->add_option("--k-per-query", trace.k_per_query);
        s->add_option("--top-k", trace.top_k_final, "evidence kept per span");
        if (rerank_flag) s->add_flag("--no-rerank", no_rerank, "rank by coarse score only");
        models.add(s, true);
    }

    std::string clf_path(const std::string& given, const char* name) const {
        if (!given.empty()) return given;
        return (std::filesystem::path(index).parent_path() / name).string();
    }
};

struct Loaded {
    std::vector<Sample> dataset;
    EvidenceCorpus corpus;
    VectorIndex index;
    json settings;
    Models models;
    LinearClassifier type_clf;
    LinearClassifier mech_clf;
    std::string type_path, mech_path;
};

inline Loaded load_inputs(const RetrievalFlags& f) {
    Loaded l;
    l.dataset = load_dataset(f.dataset);
    l.corpus = load_corpus(f.corpus);
    l.index = VectorIndex::load(f.index);
    const auto idx_manifest = read_manifest(f.index);
    l.settings = f.models.resolve(recorded_models(idx_manifest));
    l.models = make_models(l.settings);
    if (l.models.provider->dim() != l.index.dim()) {
        raise(Errc::DimMismatch, "provider dim " + std::to_string(l.models.provider->dim()) + " vs index dim " +
                                     std::to_string(l.index.dim()));
    }
    if (idx_manifest.contains("config") && idx_manifest["config"].value("provider_id", "") != l.models.provider->id()) {
        raise(Errc::InvalidParams, "index was built with " + idx_manifest["config"].value("provider_id", std::string("?")) +
                                       " but tracing would use " + l.models.provider->id());
    }
    const std::set<std::string> indexed(l.index.ids().begin(), l.index.ids().end());
    for (const auto& d : l.corpus.docs()) {
        if (!indexed.count(d.id)) raise(Errc::UnknownDocId, d.id + " is in the corpus but not in the index");
    }
    l.type_path = f.clf_path(f.type_clf, "type.clf");
    l.mech_path = f.clf_path(f.mech_clf, "mechanism.clf");
    l.type_clf = LinearClassifier::load(l.type_path);
    l.mech_clf = LinearClassifier::load(l.mech_path);
    if (l.type_clf.label_space() != LabelSpace::HallucinationType || l.mech_clf.label_space() != LabelSpace::ErrorMechanism) {
        raise(Errc::InvalidParams, "classifier files are swapped or of the wrong kind");
    }
    if (l.type_clf.window() != l.mech_clf.window()) raise(Errc::InvalidParams, "type and mechanism classifiers use different windows");
    return l;
}

struct TraceCmd {
    RetrievalFlags f;
    std::string out;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("trace", "trace every hallucinated span to type, mechanism and evidence");
        f.add(s, true);
        s->add_option("--out", out, "traces JSONL")->required();
    }

    int run(const Globals& g, const Streams& io) const {
        auto l = load_inputs(f);
        TraceConfig cfg = f.trace;
        cfg.rerank = !f.no_rerank;
        cfg.class_window = l.type_clf.window();
        cfg.validate();
        const TraceContext ctx{l.index, l.corpus, *l.models.provider, *l.models.scorer, l.type_clf, l.mech_clf};
        log(io, "tracing " + std::to_string(l.dataset.size()) + " samples on " + std::to_string(g.threads) + " threads");
        const auto run = trace_dataset(l.dataset, cfg, ctx, g.threads);
        auto manifest = base_manifest("trace", {{"trace", cfg.to_json()},
                                                {"models", l.settings},
                                                {"provider_id", l.models.provider->id()},
                                                {"scorer_id", l.models.scorer->id()},
                                                {"type_classifier", l.type_clf.backend_id()},
                                                {"mechanism_classifier", l.mech_clf.backend_id()}});
        manifest["inputs"] = inputs_digest({{"dataset", f.dataset}, {"corpus", f.corpus}, {"index", f.index},
                                            {"type_clf", l.type_path}, {"mech_clf", l.mech_path}});
        ensure_parent(out);
        save_traces(out, manifest, run.results);
        if (!run.failures.empty()) write_json_file(out + ".failures.json", failures_json(run.failures));
        json summary = {{"manifest", manifest},
                        {"n_traced", run.results.size()},
                        {"n_failed", run.failures.size()},
                        {"n_skipped_non_hallucinated", run.n_skipped_non_hallucinated}};
        if (g.json) {
            io.out << summary.dump() << "\n";
        } else {
            io.out << "traced " << run.results.size() << " spans (" << run.failures.size() << " failed, "
                   << run.n_skipped_non_hallucinated << " non-hallucinated skipped) into " << out << "\n";
        }
        for (const auto& fl : run.failures) log(io, "failed " + fl.sample_id + "/" + fl.span_id + ": " + fl.message);
        return run.failures.empty() ? kExitOk : kExitRuntime;
    }
};

struct HitFlags {
    std::vector<std::size_t> ks{1, 2, 5, 10};
    double tau_hit = 0.85;
    bool no_id_shortcut = false;
    std::string report = "table";
    std::string out;

    void add(CLI::App* s) {
        s->add_option("--k", ks, "cutoffs")->delimiter(',');
        s->add_option("--tau-hit", tau_hit, "cosine threshold for semantic hits");
        s->add_flag("--no-id-shortcut", no_id_shortcut, "count only similarity hits");
        s->add_option("--report", report)->check(CLI::IsMember({"json", "table"}));
        s->add_option("--out", out, "also write the JSON report here");
    }

    eval::HitRule rule() const {
        eval::HitRule r{tau_hit, !no_id_shortcut};
        r.validate();
        for (auto k : ks) eval::check_k(k);
        return r;
    }
};

struct EvalCmd {
    std::string traces, dataset, corpus;
    HitFlags hit;
    ModelFlags models;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("eval", "score traces against gold evidence and labels");
        s->add_option("--traces", traces)->required();
        s->add_option("--dataset", dataset)->required();
        s->add_option("--corpus", corpus)->required();
        hit.add(s);
        models.add(s, false);
    }

    int run(const Globals& g, const Streams& io) const {
        json tmanifest;
        const auto results = load_traces(traces, &tmanifest);
        const auto data = load_dataset(dataset);
        const auto c = load_corpus(corpus);
        const auto rule = hit.rule();
        json base = recorded_models(tmanifest);
        base["reranker"] = "builtin";  // unused here
        const auto settings = models.resolve(base);
        const auto m = make_models(settings);
        const auto gold = eval::gold_map(data);
        std::vector<eval::EvaluatedSpan> items;
        for (const auto& r : results) {
            items.push_back({{r.sample_id, r.span_id}, r.evidence.ids(), r.predicted_type, r.predicted_mechanism});
        }
        const eval::HitJudge judge(c, *m.provider, rule);
        const auto report = eval::evaluate(items, gold, judge, hit.ks);
        json cfg = {{"hit_rule", rule.to_json()}, {"ks", hit.ks}, {"models", settings}, {"provider_id", m.provider->id()}};
        auto manifest = base_manifest("eval", cfg);
        manifest["inputs"] = inputs_digest({{"traces", traces}, {"dataset", dataset}, {"corpus", corpus}});
        json j = report.to_json();
        j["manifest"] = manifest;
        if (!hit.out.empty()) {
            ensure_parent(hit.out);
            write_json_file(hit.out, j);
        }
        if (g.json || hit.report == "json") {
            io.out << j.dump() << "\n";
        } else {
            io.out << metrics_table({{"HART", report}});
            io.out << report.n_spans << " spans\n";
        }
        return kExitOk;
    }
};

struct AblateCmd {
    RetrievalFlags f;
    HitFlags hit;
    bool no_bm25 = false, no_cross = false, no_dpr = false;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("ablate", "compare retrieval arms and baselines");
        f.add(s, false);
        hit.add(s);
        s->add_flag("--no-bm25", no_bm25);
        s->add_flag("--no-cross-encoder", no_cross, "skip the exhaustive pair-scorer baseline");
        s->add_flag("--no-dpr", no_dpr, "skip the synonym-free dense baseline");
    }

    int run(const Globals& g, const Streams& io) const {
        auto l = load_inputs(f);
        AblationConfig cfg;
        cfg.trace = f.trace;
        cfg.trace.class_window = l.type_clf.window();
        cfg.rule = hit.rule();
        cfg.ks = hit.ks;
        cfg.bm25 = !no_bm25;
        cfg.cross_encoder_only = !no_cross;
        AblationContext ctx{l.index, l.corpus, *l.models.provider, *l.models.scorer, &l.type_clf, &l.mech_clf};
        std::unique_ptr<BuiltinEmbedder> plain;
        std::optional<VectorIndex> plain_index;
        if (!no_dpr && l.settings["embedder"] == "builtin") {
            plain = std::make_unique<BuiltinEmbedder>(l.index.dim());
            log(io, "building the synonym-free index for the DPR row");
            plain_index = VectorIndex::build(l.corpus, *plain, IndexBackend::Flat, {}, g.threads);
            ctx.alt_provider = plain.get();
            ctx.alt_index = &*plain_index;
        }
        const auto table = run_ablation(l.dataset, cfg, ctx, g.threads);
        auto manifest = base_manifest("ablate", {{"ablation", cfg.to_json()}, {"models", l.settings}});
        manifest["inputs"] = inputs_digest({{"dataset", f.dataset}, {"corpus", f.corpus}, {"index", f.index},
                                            {"type_clf", l.type_path}, {"mech_clf", l.mech_path}});
        json j = {{"manifest", manifest}, {"rows", table.to_json()}};
        if (!hit.out.empty()) {
            ensure_parent(hit.out);
            write_json_file(hit.out, j);
        }
        if (g.json || hit.report == "json") {
            io.out << j.dump() << "\n";
        } else {
            std::vector<std::pair<std::string, eval::MetricsReport>> rows;
            for (const auto& r : table.rows) rows.emplace_back(r.name, r.report);
            io.out << metrics_table(rows);
            for (const auto& r : table.rows) {
                if (r.candidate_recall) {
                    io.out << r.name << ": candidate recall " << fmt(*r.candidate_recall) << " over " << fmt(r.mean_candidates, 1)
                           << " candidates per span\n";
                }
            }
        }
        return kExitOk;
    }
};

inline std::vector<std::string> read_labels(const std::string& path) {
    const auto content = read_file(path);
    std::vector<std::string> out;
    for (auto line : split_lines(content)) out.emplace_back(line);
    return out;
}

struct NoiseCmd {
    std::string llm, human;
    std::size_t window = 0;
    double tau = 0.1;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("noise-check", "windowed disagreement between machine and human labels");
        s->add_option("--llm", llm, "one label per line")->required();
        s->add_option("--human", human, "one label per line")->required();
        s->add_option("--window", window)->required();
        s->add_option("--tau", tau, "relabeling threshold");
    }

    int run(const Globals& g, const Streams& io) const {
        const auto r = noise_rate({read_labels(llm), read_labels(human), window, tau});
        json j = {{"epsilon", r.epsilon}, {"triggered", r.triggered}, {"disagreements", r.disagreements}, {"window", window},
                  {"tau", tau}};
        if (g.json) {
            io.out << j.dump() << "\n";
        } else {
            io.out << "noise rate " << fmt(r.epsilon) << " over the last " << window << " labels ("
                   << (r.triggered ? "above" : "within") << " tau " << tau << ")\n";
        }
        return kExitOk;
    }
};

struct AnalyticCmd {
    double p = 0.0;
    std::size_t k = 1;
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    std::vector<double> p_g;

    void add(CLI::App& app) {
        auto* s = app.add_subcommand("analytic", "closed-form Recall@k against a Monte Carlo estimate");
        auto* op = s->add_option("--p", p, "per-result hit probability");
        s->add_option("--p-g", p_g, "per-evidence probabilities (summed into p)")->delimiter(',')->excludes(op);
        s->add_option("--k", k)->required();
        s->add_option("--trials", trials);
        s->add_option("--seed", seed);
    }

    int run(const Globals& g, const Streams& io) const {
        double pp = p;
        double closed = 0.0;
        if (!p_g.empty()) {
            closed = eval::analytic_recall_multi(p_g, k);
            pp = 0.0;
            for (double x : p_g) pp += x;
            pp = std::min(pp, 1.0);
        } else {
            closed = eval::analytic_recall(p, k);
        }
        const double mc = eval::monte_carlo_recall(pp, k, trials, seed);
        const double bound = 3.0 * std::sqrt(closed * (1.0 - closed) / static_cast<double>(trials));
        json j = {{"p", pp}, {"k", k}, {"trials", trials}, {"seed", seed}, {"closed_form", closed}, {"monte_carlo", mc},
                  {"abs_diff", std::abs(mc - closed)}, {"three_sigma", bound}, {"within_three_sigma", std::abs(mc - closed) <= bound}};
        if (g.json) {
            io.out << j.dump() << "\n";
        } else {
            io.out << "closed form  " << fmt(closed, 5) << "\nmonte carlo  " << fmt(mc, 5) << " (" << trials << " trials, |diff| "
                   << fmt(std::abs(mc - closed), 5) << ", 3 sigma " << fmt(bound, 5) << ")\n";
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const Streams io{out, err};
    CLI::App app{"Span-level hallucination tracing", "hart"};
    app.fallthrough();
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.set_version_flag("--version", std::string(kToolVersion));
    Globals g;
    app.add_flag("--json", g.json, "machine-readable output on stdout");
    app.add_option("--config", g.config, "JSON file of flag values (flags take precedence)");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    SynthCmd synth;
    BuildIndexCmd build;
    TrainCmd train;
    TraceCmd trace;
    EvalCmd evalc;
    AblateCmd ablate;
    NoiseCmd noise;
    AnalyticCmd analytic;
    synth.add(app);
    build.add(app);
    train.add(app);
    trace.add(app);
    evalc.add(app);
    ablate.add(app);
    noise.add(app);
    analytic.add(app);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = inject_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        const auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "synth") return synth.run(g, io);
        if (name == "build-index") return build.run(g, io);
        if (name == "train-classifiers") return train.run(g, io);
        if (name == "trace") return trace.run(g, io);
        if (name == "eval") return evalc.run(g, io);
        if (name == "ablate") return ablate.run(g, io);
        if (name == "noise-check") return noise.run(g, io);
        return analytic.run(g, io);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_runtime(e.code()) ? kExitRuntime : kExitValidation;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace hart::cli
