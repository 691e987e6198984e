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

#include <stdexcept>
#include <string>
#include <string_view>

namespace hart {

enum class Errc {
    // input validation
    MalformedLine,
    SpanOutOfBounds,
    UnknownLabel,
    DuplicateId,
    EmptyDataset,
    EmptyCorpus,
    DimMismatch,
    UnknownDocId,
    UntrainedModel,
    DegenerateLabels,
    MissingGold,
    InvalidProbability,
    InvalidTrials,
    LengthMismatch,
    WindowTooLarge,
    InvalidParams,
    BadMagic,
    VersionUnsupported,
    Corrupt,
    // runtime
    Io,
    Transport,
    ProtocolViolation,
    ProviderFailure,
    ScorerFailure,
};

inline constexpr std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::MalformedLine: return "MalformedLine";
        case Errc::SpanOutOfBounds: return "SpanOutOfBounds";
        case Errc::UnknownLabel: return "UnknownLabel";
        case Errc::DuplicateId: return "DuplicateId";
        case Errc::EmptyDataset: return "EmptyDataset";
        case Errc::EmptyCorpus: return "EmptyCorpus";
        case Errc::DimMismatch: return "DimMismatch";
        case Errc::UnknownDocId: return "UnknownDocId";
        case Errc::UntrainedModel: return "UntrainedModel";
        case Errc::DegenerateLabels: return "DegenerateLabels";
        case Errc::MissingGold: return "MissingGold";
        case Errc::InvalidProbability: return "InvalidProbability";
        case Errc::InvalidTrials: return "InvalidTrials";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::WindowTooLarge: return "WindowTooLarge";
        case Errc::InvalidParams: return "InvalidParams";
        case Errc::BadMagic: return "BadMagic";
        case Errc::VersionUnsupported: return "VersionUnsupported";
        case Errc::Corrupt: return "Corrupt";
        case Errc::Io: return "Io";
        case Errc::Transport: return "Transport";
        case Errc::ProtocolViolation: return "ProtocolViolation";
        case Errc::ProviderFailure: return "ProviderFailure";
        case Errc::ScorerFailure: return "ScorerFailure";
    }
    return "Unknown";
}

/// Runtime errors are failures of the environment (files, network, remote
/// models); everything else is a problem with the caller's input.
inline constexpr bool is_runtime(Errc code) {
    switch (code) {
        case Errc::Io:
        case Errc::Transport:
        case Errc::ProtocolViolation:
        case Errc::ProviderFailure:
        case Errc::ScorerFailure:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

  private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] inline void raise(Errc code, const std::string& detail) {
    throw Error(code, detail);
}

}  // namespace hart
