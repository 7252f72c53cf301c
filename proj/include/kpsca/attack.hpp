// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/kmeans.hpp"
#include "kpsca/obsmatrix.hpp"
#include "kpsca/parallel.hpp"
#include "kpsca/pca.hpp"
#include "kpsca/trace_io.hpp"
#include "kpsca/trace_model.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace kpsca {

enum class Method { kmeans, pca };
enum class AttackKind { attack1, attack2, attack3 };

inline std::string_view to_string(Method m) noexcept { return m == Method::kmeans ? "kmeans" : "pca"; }

inline std::string_view to_string(AttackKind a) noexcept {
    switch (a) {
    case AttackKind::attack1: return "attack1";
    case AttackKind::attack2: return "attack2";
    case AttackKind::attack3: return "attack3";
    }
    return "unknown";
}

inline Method parse_method(std::string_view s) {
    if (s == "kmeans") return Method::kmeans;
    if (s == "pca") return Method::pca;
    throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// Threshold on delta for counting a candidate as high-correctness (strict).
inline constexpr double kHighCandidateDelta = 0.95;

struct AttackConfig {
    Method method = Method::kmeans;
    KMeansConfig kmeans;
};

/// Class labels in slot order; label t belongs to key bit slot_bit(t).
struct KeyCandidate {
    std::vector<std::uint8_t> labels;
    Method method = Method::kmeans;
    AttackKind attack = AttackKind::attack1;
    /// Clock cycles (1-based, ascending) whose features were used.
    std::vector<std::size_t> cycles_used;

    friend bool operator==(const KeyCandidate&, const KeyCandidate&) = default;
};

struct Experiment {
    KeyCandidate candidate;
    std::optional<double> delta;
    /// K-means only.
    std::optional<bool> converged;
};

struct AttackReport {
    AttackKind attack = AttackKind::attack1;
    Method method = Method::kmeans;
    TraceGeometry geometry;
    bool compressed = false;
    std::vector<Experiment> experiments;
    std::optional<double> best_delta;
    std::optional<std::size_t> num_high_candidates;
    /// Attack3 only: retained cycle count of the smallest experiment reaching best_delta.
    std::optional<std::size_t> eta;
    /// Attack2: leakage ranking derived from the report. Attack3: ranking applied.
    std::vector<std::size_t> ranking;
};

/// Either view of one trace.
using AttackInput = std::variant<RawTrace, CompressedTrace>;

inline std::vector<std::uint8_t> complement(std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> out(labels.size());
    for (std::size_t t = 0; t < labels.size(); ++t) out[t] = labels[t] ? 0 : 1;
    return out;
}

/// max(m, l - m) / l for m matching bits; class naming is arbitrary, so a
/// candidate and its complement score the same.
inline double relative_correctness(std::span<const std::uint8_t> labels, const SecretKey& truth) {
    if (labels.size() != truth.analyzed_length())
        throw std::invalid_argument("relative_correctness: candidate has " + std::to_string(labels.size()) +
                                    " bits, key window has " + std::to_string(truth.analyzed_length()));
    std::size_t matches = 0;
    for (std::size_t t = 0; t < labels.size(); ++t) matches += (labels[t] != 0) == (truth.slot_bit(t) != 0);
    const std::size_t l = labels.size();
    return static_cast<double>(std::max(matches, l - matches)) / static_cast<double>(l);
}

inline double relative_correctness(const KeyCandidate& c, const SecretKey& truth) {
    return relative_correctness(c.labels, truth);
}

namespace detail {

struct MethodResult {
    std::vector<std::uint8_t> labels;
    std::optional<bool> converged;
};

inline MethodResult run_method(const StandardizedMatrix& m, const AttackConfig& cfg) {
    MethodResult r;
    if (cfg.method == Method::kmeans) {
        auto clustering = kmeans_restarted(m, cfg.kmeans);
        r.labels.resize(clustering.labels.size());
        for (std::size_t t = 0; t < r.labels.size(); ++t) r.labels[t] = clustering.labels[t] == 0 ? 0 : 1;
        r.converged = clustering.converged;
    } else {
        auto model = pca_fit(m, 1);
        if (model.components() == 0) r.labels.assign(m.rows(), 0);
        else r.labels = classify_pc1(project(m, model, 1));
    }
    return r;
}

inline const TraceGeometry& input_geometry(const AttackInput& in) {
    return std::visit([](const auto& t) -> const TraceGeometry& { return t.geometry(); }, in);
}

inline ObservationMatrix build_full(const AttackInput& in) {
    if (const auto* raw = std::get_if<RawTrace>(&in)) return build_x1(*raw);
    return build_x2(std::get<CompressedTrace>(in));
}

inline ObservationMatrix build_cycle(const AttackInput& in, std::size_t cycle) {
    if (const auto* raw = std::get_if<RawTrace>(&in)) return build_x3(*raw, cycle);
    return build_x4(std::get<CompressedTrace>(in), cycle);
}

inline Experiment make_experiment(MethodResult r, const AttackConfig& cfg, AttackKind kind,
                                  std::vector<std::size_t> cycles, const std::optional<SecretKey>& truth) {
    Experiment e;
    e.candidate = {std::move(r.labels), cfg.method, kind, std::move(cycles)};
    e.converged = r.converged;
    if (truth) e.delta = relative_correctness(e.candidate, *truth);
    return e;
}

inline AttackReport start_report(const AttackInput& in, const AttackConfig& cfg, AttackKind kind) {
    AttackReport rep;
    rep.attack = kind;
    rep.method = cfg.method;
    rep.geometry = input_geometry(in);
    rep.compressed = std::holds_alternative<CompressedTrace>(in);
    return rep;
}

inline void summarize(AttackReport& rep) {
    if (rep.experiments.empty() || !rep.experiments.front().delta) return;
    double best = 0.0;
    std::size_t high = 0;
    for (const auto& e : rep.experiments) {
        best = std::max(best, *e.delta);
        high += *e.delta > kHighCandidateDelta;
    }
    rep.best_delta = best;
    rep.num_high_candidates = high;
}

inline void check_truth(const AttackInput& in, const std::optional<SecretKey>& truth) {
    if (truth && truth->analyzed_length() != input_geometry(in).slots)
        throw std::invalid_argument("truth key window length does not match the trace slot count");
}

} // namespace detail

/// One candidate from all features of the trace (every sample, or every
/// compressed cycle).
inline AttackReport attack1(const AttackInput& in, const AttackConfig& cfg,
                            const std::optional<SecretKey>& truth = std::nullopt) {
    detail::check_truth(in, truth);
    auto rep = detail::start_report(in, cfg, AttackKind::attack1);
    const auto x = standardize(detail::build_full(in));
    std::vector<std::size_t> cycles(rep.geometry.cycles);
    std::iota(cycles.begin(), cycles.end(), 1);
    rep.experiments.push_back(
        detail::make_experiment(detail::run_method(x, cfg), cfg, AttackKind::attack1, std::move(cycles), truth));
    detail::summarize(rep);
    return rep;
}

/// Cycles ordered by per-cycle delta, strongest first; ties go to the lower cycle.
inline std::vector<std::size_t> rank_leakage(const AttackReport& report) {
    std::vector<std::pair<std::size_t, double>> scored;
    for (const auto& e : report.experiments) {
        if (e.candidate.cycles_used.size() != 1 || !e.delta)
            throw std::invalid_argument("rank_leakage: needs single-cycle experiments with known correctness");
        scored.emplace_back(e.candidate.cycles_used.front(), *e.delta);
    }
    std::ranges::stable_sort(scored, [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::size_t> order;
    for (const auto& [cycle, delta] : scored) order.push_back(cycle);
    return order;
}

/// One candidate per clock cycle, each from that cycle's features alone.
inline AttackReport attack2(const AttackInput& in, const AttackConfig& cfg, const std::optional<SecretKey>& truth) {
    if (!truth) throw std::invalid_argument("attack2 requires the true key");
    detail::check_truth(in, truth);
    auto rep = detail::start_report(in, cfg, AttackKind::attack2);
    const std::size_t cycles = rep.geometry.cycles;
    rep.experiments.resize(cycles);
    parallel_for(cycles, [&](std::size_t k) {
        const std::size_t cycle = k + 1;
        const auto x = standardize(detail::build_cycle(in, cycle));
        rep.experiments[k] =
            detail::make_experiment(detail::run_method(x, cfg), cfg, AttackKind::attack2, {cycle}, truth);
    });
    detail::summarize(rep);
    rep.ranking = rank_leakage(rep);
    return rep;
}

/// Attack1 repeated on shrinking feature sets: experiment e keeps the
/// top D - e + 1 cycles of `ranking` (strongest first).
inline AttackReport attack3(const AttackInput& in, const AttackConfig& cfg, std::span<const std::size_t> ranking,
                            const std::optional<SecretKey>& truth = std::nullopt) {
    detail::check_truth(in, truth);
    auto rep = detail::start_report(in, cfg, AttackKind::attack3);
    const std::size_t cycles = rep.geometry.cycles;
    {
        std::vector<std::size_t> sorted(ranking.begin(), ranking.end());
        std::ranges::sort(sorted);
        bool ok = sorted.size() == cycles;
        for (std::size_t k = 0; ok && k < cycles; ++k) ok = sorted[k] == k + 1;
        if (!ok) throw std::invalid_argument("attack3: ranking must list every cycle 1..D exactly once");
    }
    rep.ranking.assign(ranking.begin(), ranking.end());

    const auto full = standardize(detail::build_full(in));
    rep.experiments.resize(cycles);
    parallel_for(cycles, [&](std::size_t k) {
        std::vector<std::size_t> kept(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(cycles - k));
        std::ranges::sort(kept);
        const auto x = select_cycles(full, kept);
        rep.experiments[k] =
            detail::make_experiment(detail::run_method(x, cfg), cfg, AttackKind::attack3, std::move(kept), truth);
    });
    detail::summarize(rep);
    if (rep.best_delta) {
        std::size_t eta = cycles;
        for (const auto& e : rep.experiments)
            if (*e.delta == *rep.best_delta) eta = std::min(eta, e.candidate.cycles_used.size());
        rep.eta = eta;
    }
    return rep;
}

} // namespace kpsca
