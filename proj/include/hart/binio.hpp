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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "hart/error.hpp"

namespace hart::binio {

template <class T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

/// Little-endian append-only byte buffer.
class Writer {
  public:
    template <class T>
    void put(T v) {
        v = to_little(v);
        buf_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    void put_bytes(std::string_view bytes) { buf_.append(bytes.data(), bytes.size()); }

    void put_floats(std::span<const float> xs) {
        for (float x : xs) put(x);
    }

    const std::string& bytes() const { return buf_; }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::Io, "cannot write " + path);
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) raise(Errc::Io, "write failed for " + path);
    }

  private:
    std::string buf_;
};

/// Bounds-checked little-endian reader. Running past the end raises
/// Corrupt with the offset where the read was attempted.
class Reader {
  public:
    explicit Reader(std::string_view data) : data_(data) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }

    std::string_view get_bytes(std::size_t n) {
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    void get_floats(std::span<float> out) {
        need(out.size() * sizeof(float));
        for (auto& x : out) x = get<float>();
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

    void need(std::size_t n) const {
        if (n > remaining()) raise(Errc::Corrupt, "truncated at offset " + std::to_string(pos_));
    }

  private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace hart::binio
