// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/attack.hpp"

#include <json.hpp>

namespace kpsca {

/// Candidate labels as hex, first slot most significant, left-padded with
/// zero bits to whole bytes.
inline std::string candidate_hex(std::span<const std::uint8_t> labels) { return bits_to_hex(labels, 8); }

inline nlohmann::ordered_json report_to_json(const AttackReport& rep) {
    using json = nlohmann::ordered_json;
    auto opt = [](const auto& o) -> json { return o ? json(*o) : json(nullptr); };
    json experiments = json::array();
    for (const auto& e : rep.experiments) {
        experiments.push_back({
            {"cycles_used", e.candidate.cycles_used},
            {"delta", opt(e.delta)},
            {"candidate_hex", candidate_hex(e.candidate.labels)},
            {"complement_hex", candidate_hex(complement(e.candidate.labels))},
            {"converged", opt(e.converged)},
        });
    }
    return json{
        {"attack", to_string(rep.attack)},
        {"method", to_string(rep.method)},
        {"geometry", {{"l", rep.geometry.slots}, {"D", rep.geometry.cycles}, {"S", rep.geometry.samples}}},
        {"compressed", rep.compressed},
        {"experiments", std::move(experiments)},
        {"best_delta", opt(rep.best_delta)},
        {"eta", opt(rep.eta)},
        {"num_high_candidates", opt(rep.num_high_candidates)},
        {"ranking", rep.ranking},
    };
}

} // namespace kpsca
