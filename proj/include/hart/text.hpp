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

#include <cstdint>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "hart/error.hpp"

namespace hart {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over raw bytes.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= kFnvPrime;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
        v >>= 4;
    }
    return out;
}

namespace utf8 {

/// Decodes UTF-8 into Unicode scalar values. Throws MalformedLine on
/// ill-formed input (overlongs, surrogates, truncation).
inline std::u32string decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    auto bad = [&]() { raise(Errc::MalformedLine, "invalid UTF-8 at byte " + std::to_string(i)); };
    while (i < s.size()) {
        const auto b0 = static_cast<std::uint8_t>(s[i]);
        char32_t cp;
        std::size_t len;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            bad();
        }
        if (i + len > s.size()) bad();
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<std::uint8_t>(s[i + k]);
            if ((b & 0xC0) != 0x80) bad();
            cp = (cp << 6) | (b & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
        if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad();
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append(out, cp);
    return out;
}

/// Substring by scalar-value offsets [begin, end), clipped to the text.
inline std::string slice(std::u32string_view cps, std::size_t begin, std::size_t end) {
    begin = std::min(begin, cps.size());
    end = std::min(std::max(begin, end), cps.size());
    return encode(cps.substr(begin, end - begin));
}

}  // namespace utf8

/// Lowercased tokens: maximal runs of ASCII letters/digits or non-ASCII
/// characters. Shared by the built-in embedder, the pair scorer and BM25.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        const auto b = static_cast<unsigned char>(c);
        if (b >= 0x80 || (b >= '0' && b <= '9') || (b >= 'a' && b <= 'z')) {
            cur.push_back(c);
        } else if (b >= 'A' && b <= 'Z') {
            cur.push_back(static_cast<char>(b - 'A' + 'a'));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Token -> canonical token rewrite table. Tokens absent from the table are
/// their own canonical form.
class SynonymTable {
  public:
    SynonymTable() = default;

    explicit SynonymTable(const std::map<std::string, std::string>& pairs) {
        for (const auto& [surface, canonical] : pairs) add(surface, canonical);
    }

    void add(std::string_view surface, std::string_view canonical) {
        auto s = lower(surface);
        auto c = lower(canonical);
        if (s == c) return;
        map_[s] = c;
        classes_[c].insert(c);
        classes_[c].insert(s);
    }

    const std::string& canonical(const std::string& token) const {
        auto it = map_.find(token);
        return it == map_.end() ? token : it->second;
    }

    bool empty() const { return map_.empty(); }
    std::size_t size() const { return map_.size(); }

    /// All surface forms sharing a canonical form (including the canonical
    /// token itself), sorted. Null when the token has no synonyms.
    const std::set<std::string>* synonym_class(const std::string& token) const {
        auto it = classes_.find(canonical(token));
        return it == classes_.end() ? nullptr : &it->second;
    }

    std::map<std::string, std::string> pairs() const { return {map_.begin(), map_.end()}; }

    /// Order-independent digest of the table contents.
    std::uint64_t digest() const {
        std::uint64_t h = kFnvOffset;
        for (const auto& [s, c] : pairs()) {
            h = fnv1a64(s, h);
            h = fnv1a64(std::string_view("\x1f", 1), h);
            h = fnv1a64(c, h);
            h = fnv1a64(std::string_view("\x1e", 1), h);
        }
        return h;
    }

    nlohmann::json to_json() const { return nlohmann::json(pairs()); }

    static SynonymTable from_json(const nlohmann::json& j) {
        if (!j.is_object()) raise(Errc::MalformedLine, "synonym table must be a JSON object");
        SynonymTable t;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!it.value().is_string()) raise(Errc::MalformedLine, "synonym target for '" + it.key() + "' is not a string");
            t.add(it.key(), it.value().get<std::string>());
        }
        return t;
    }

    static SynonymTable load(const std::string& path) {
        std::ifstream in(path);
        if (!in) raise(Errc::Io, "cannot open synonym table " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::MalformedLine, path + ": " + e.what());
        }
        return from_json(j);
    }

  private:
    static std::string lower(std::string_view s) {
        std::string out(s);
        for (char& c : out) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        return out;
    }

    std::unordered_map<std::string, std::string> map_;
    std::unordered_map<std::string, std::set<std::string>> classes_;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::Io, "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) raise(Errc::Io, "write failed for " + path);
}

/// Splits file contents into lines, accepting a missing trailing newline and
/// stripping a CR before LF.
inline std::vector<std::string_view> split_lines(std::string_view content) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < content.size()) {
        auto nl = content.find('\n', start);
        if (nl == std::string_view::npos) nl = content.size();
        auto line = content.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

}  // namespace hart
