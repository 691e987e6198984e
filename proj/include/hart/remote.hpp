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

// Clients for the model sidecar's HTTP protocol:
//   POST /embed   {"texts": [...]}               -> {"dim": D, "vectors": [[...], ...]}
//   POST /rerank  {"query": "...", "docs": [...]} -> {"scores": [...]}
//   GET  /health                                  -> {"status": "ok", "embed_dim": D, ...}
// Non-200 responses carry {"error": "..."}.

#include <cstdlib>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "hart/embedding.hpp"
#include "hart/error.hpp"
#include "hart/retrieval.hpp"

namespace hart {

/// "http://host:port/prefix" split into the httplib origin and path prefix.
struct Endpoint {
    std::string origin;
    std::string prefix;

    static Endpoint parse(const std::string& url) {
        const auto scheme = url.find("://");
        if (scheme == std::string::npos) raise(Errc::InvalidParams, "remote URL needs a scheme: " + url);
        const auto path = url.find('/', scheme + 3);
        Endpoint e;
        e.origin = url.substr(0, path);
        if (path != std::string::npos) e.prefix = url.substr(path);
        while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
        return e;
    }

    /// Explicit URL, else $HART_REMOTE_URL.
    static std::string resolve(const std::string& explicit_url) {
        if (!explicit_url.empty()) return explicit_url;
        if (const char* env = std::getenv("HART_REMOTE_URL"); env && *env) return env;
        raise(Errc::InvalidParams, "no remote URL given and HART_REMOTE_URL is unset");
    }
};

namespace detail {

inline nlohmann::json http_json(const Endpoint& ep, const std::string& method, const std::string& path,
                                const nlohmann::json* body, int timeout_s) {
    httplib::Client cli(ep.origin);
    cli.set_connection_timeout(timeout_s, 0);
    cli.set_read_timeout(timeout_s, 0);
    cli.set_write_timeout(timeout_s, 0);
    const auto full = ep.prefix + path;
    auto res = method == "GET" ? cli.Get(full) : cli.Post(full, body->dump(), "application/json");
    if (!res) raise(Errc::Transport, method + " " + ep.origin + full + ": " + httplib::to_string(res.error()));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::ProtocolViolation, full + ": response is not JSON (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        std::string msg = j.is_object() && j.contains("error") && j["error"].is_string() ? j["error"].get<std::string>() : res->body;
        raise(Errc::ProtocolViolation, full + ": HTTP " + std::to_string(res->status) + ": " + msg);
    }
    if (!j.is_object()) raise(Errc::ProtocolViolation, full + ": response is not a JSON object");
    return j;
}

}  // namespace detail

/// Embedding provider backed by the sidecar's /embed endpoint. Output is
/// re-normalized locally whatever the server sends. The dimension comes from
/// the /health handshake (or, failing that, a one-text probe).
class RemoteEmbedder final : public EmbeddingProvider {
  public:
    explicit RemoteEmbedder(const std::string& url, std::size_t max_batch = 64, int timeout_s = 60)
        : url_(url), ep_(Endpoint::parse(url)), max_batch_(std::max<std::size_t>(1, max_batch)), timeout_s_(timeout_s) {}

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        const std::size_t d = dim();
        for (std::size_t lo = 0; lo < texts.size(); lo += max_batch_) {
            const auto chunk = texts.subspan(lo, std::min(max_batch_, texts.size() - lo));
            for (auto& v : request(chunk, d)) out.push_back(std::move(v));
        }
        return out;
    }

    std::size_t dim() const override {
        std::lock_guard lock(mu_);
        if (!dim_) dim_ = handshake();
        return *dim_;
    }

    std::string id() const override { return "remote-embed@" + url_; }

  private:
    std::size_t handshake() const {
        try {
            auto j = detail::http_json(ep_, "GET", "/health", nullptr, timeout_s_);
            if (j.contains("embed_dim") && j["embed_dim"].is_number_unsigned() && j["embed_dim"].get<std::size_t>() > 0) {
                return j["embed_dim"].get<std::size_t>();
            }
        } catch (const Error& e) {
            if (e.code() == Errc::Transport) throw;
        }
        const std::string probe = "dimension probe";
        auto j = post_embed(std::span<const std::string>(&probe, 1));
        return parse_dim(j);
    }

    nlohmann::json post_embed(std::span<const std::string> texts) const {
        nlohmann::json body = {{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
        return detail::http_json(ep_, "POST", "/embed", &body, timeout_s_);
    }

    static std::size_t parse_dim(const nlohmann::json& j) {
        if (!j.contains("dim") || !j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) {
            raise(Errc::ProtocolViolation, "/embed response lacks a positive integer 'dim'");
        }
        return j["dim"].get<std::size_t>();
    }

    std::vector<EmbeddingVector> request(std::span<const std::string> texts, std::size_t expected_dim) const {
        const auto j = post_embed(texts);
        const auto d = parse_dim(j);
        if (d != expected_dim) raise(Errc::DimMismatch, "expected " + std::to_string(expected_dim) + ", got " + std::to_string(d));
        if (!j.contains("vectors") || !j["vectors"].is_array()) raise(Errc::ProtocolViolation, "/embed response lacks 'vectors'");
        const auto& vs = j["vectors"];
        if (vs.size() != texts.size()) {
            raise(Errc::ProtocolViolation, "/embed returned " + std::to_string(vs.size()) + " vectors for " +
                                               std::to_string(texts.size()) + " texts");
        }
        std::vector<EmbeddingVector> out;
        out.reserve(vs.size());
        for (const auto& v : vs) {
            if (!v.is_array()) raise(Errc::ProtocolViolation, "/embed vector is not an array");
            if (v.size() != d) raise(Errc::DimMismatch, "expected " + std::to_string(d) + ", got " + std::to_string(v.size()));
            std::vector<float> raw;
            raw.reserve(d);
            for (const auto& x : v) {
                if (!x.is_number()) raise(Errc::ProtocolViolation, "/embed vector holds a non-number");
                raw.push_back(x.get<float>());
            }
            out.push_back(normalize(raw));
        }
        return out;
    }

    std::string url_;
    Endpoint ep_;
    std::size_t max_batch_;
    int timeout_s_;
    mutable std::mutex mu_;
    mutable std::optional<std::size_t> dim_;
};

/// Pair scorer backed by the sidecar's /rerank endpoint.
class RemotePairScorer final : public PairScorer {
  public:
    explicit RemotePairScorer(const std::string& url, std::size_t max_batch = 64, int timeout_s = 60)
        : url_(url), ep_(Endpoint::parse(url)), max_batch_(std::max<std::size_t>(1, max_batch)), timeout_s_(timeout_s) {}

    std::vector<double> score_batch(const std::string& query, std::span<const std::string> docs) const override {
        std::vector<double> out;
        out.reserve(docs.size());
        for (std::size_t lo = 0; lo < docs.size(); lo += max_batch_) {
            const auto chunk = docs.subspan(lo, std::min(max_batch_, docs.size() - lo));
            nlohmann::json body = {{"query", query}, {"docs", std::vector<std::string>(chunk.begin(), chunk.end())}};
            const auto j = detail::http_json(ep_, "POST", "/rerank", &body, timeout_s_);
            if (!j.contains("scores") || !j["scores"].is_array()) raise(Errc::ProtocolViolation, "/rerank response lacks 'scores'");
            const auto& s = j["scores"];
            if (s.size() != chunk.size()) {
                raise(Errc::ProtocolViolation, "/rerank returned " + std::to_string(s.size()) + " scores for " +
                                                   std::to_string(chunk.size()) + " docs");
            }
            for (const auto& x : s) {
                if (!x.is_number()) raise(Errc::ProtocolViolation, "/rerank score is not a number");
                out.push_back(x.get<double>());
            }
        }
        return out;
    }

    std::string id() const override { return "remote-rerank@" + url_; }

  private:
    std::string url_;
    Endpoint ep_;
    std::size_t max_batch_;
    int timeout_s_;
};

}  // namespace hart
