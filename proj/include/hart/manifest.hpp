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

#include <string>

#include "json.hpp"

#include "hart/text.hpp"

namespace hart {

inline constexpr const char* kToolName = "hart";
inline constexpr const char* kToolVersion = "0.1.0";

/// Stable digest of a settings object. nlohmann::json keeps object keys
/// sorted, so the dump is a normal form.
inline std::string config_hash(const nlohmann::json& settings) { return hex64(fnv1a64(settings.dump())); }

inline std::string file_digest(const std::string& path) { return "fnv1a64:" + hex64(fnv1a64(read_file(path))); }

inline nlohmann::json base_manifest(const std::string& command, const nlohmann::json& settings) {
    return {{"tool", kToolName}, {"version", kToolVersion}, {"command", command}, {"config_hash", config_hash(settings)},
            {"config", settings}};
}

}  // namespace hart
