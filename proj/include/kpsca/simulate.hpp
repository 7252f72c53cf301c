// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/rng.hpp"
#include "kpsca/trace_model.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kpsca {

/// Parametric leakage model for one main-loop trace.
///
/// Sample s of cycle i in slot j is
///
///   base[s] + A_i * g(k_j, k_prev) * leak_shape[s] + a_j * address_shape[s] + N(0, noise_sigma)
///
/// with A_i the leaky_cycles amplitude (0 elsewhere), g one of the levels
/// {0, 0.4p, 1, 1 + 0.4p} for p = pair_dependence, and a_j a key-independent
/// per-slot offset uniform in [-address_noise_amp, address_noise_amp].
struct LeakModel {
    TraceGeometry geometry;
    std::vector<double> base_waveform;
    std::vector<double> leak_shape;
    std::vector<double> address_shape;
    std::map<std::size_t, double> leaky_cycles;
    double pair_dependence = 0.0;
    double noise_sigma = 0.0;
    double address_noise_amp = 0.0;
    std::uint64_t seed = 0;

    static constexpr double kPairSpread = 0.4;

    double level(std::uint8_t bit, std::uint8_t previous) const noexcept {
        return static_cast<double>(bit) + kPairSpread * pair_dependence * static_cast<double>(previous);
    }

    double amplitude(std::size_t cycle) const noexcept {
        auto it = leaky_cycles.find(cycle);
        return it == leaky_cycles.end() ? 0.0 : it->second;
    }

    void validate() const {
        geometry.validate();
        const auto s = geometry.samples;
        if (base_waveform.size() != s || leak_shape.size() != s || address_shape.size() != s)
            throw std::invalid_argument("LeakModel: waveform lengths must equal samples per cycle");
        for (const auto& [cycle, amp] : leaky_cycles) {
            if (cycle < 1 || cycle > geometry.cycles)
                throw std::invalid_argument("LeakModel: leaky cycle " + std::to_string(cycle) + " out of range");
            if (!(amp >= 0.0)) throw std::invalid_argument("LeakModel: negative leakage amplitude");
        }
        if (!(pair_dependence >= 0.0 && pair_dependence <= 1.0))
            throw std::invalid_argument("LeakModel: pair_dependence must lie in [0, 1]");
        if (!(noise_sigma >= 0.0) || !(address_noise_amp >= 0.0))
            throw std::invalid_argument("LeakModel: noise amplitudes must be non-negative");
    }

    friend bool operator==(const LeakModel&, const LeakModel&) = default;
};

struct SimulatedTrace {
    RawTrace trace;
    SecretKey truth;
    LeakModel model;
};

/// Uniform random scalar of `bit_length` bits; the two most significant bits
/// fall outside the analyzed window.
inline SecretKey gen_key(std::uint64_t seed, std::size_t bit_length) {
    if (bit_length < 3) throw std::invalid_argument("gen_key: need at least 3 bits");
    Rng rng = Rng::stream(seed, 0x6B6579);
    std::vector<std::uint8_t> bits(bit_length);
    for (auto& b : bits) b = rng.bit() ? 1 : 0;
    return SecretKey(std::move(bits), KeyWindow::trailing(bit_length, bit_length - 2));
}

/// Per-slot address offsets a_j.
inline std::vector<double> address_offsets(const LeakModel& model) {
    Rng rng = Rng::stream(model.seed, 1);
    std::vector<double> offsets(model.geometry.slots);
    for (auto& a : offsets) a = model.address_noise_amp * (2.0 * rng.uniform() - 1.0);
    return offsets;
}

inline SimulatedTrace simulate_trace(const SecretKey& key, const LeakModel& model) {
    model.validate();
    const auto& g = model.geometry;
    if (key.analyzed_length() != g.slots)
        throw std::invalid_argument("simulate_trace: key window has " + std::to_string(key.analyzed_length()) +
                                    " bits, geometry has " + std::to_string(g.slots) + " slots");
    if (key.window().start == 0) throw std::invalid_argument("simulate_trace: key needs a bit before the window");

    const auto offsets = address_offsets(model);
    Rng noise = Rng::stream(model.seed, 2);
    std::vector<double> samples(g.raw_size());
    std::size_t n = 0;
    for (std::size_t j = 0; j < g.slots; ++j) {
        const double level = model.level(key.slot_bit(j), key.previous_bit(j));
        for (std::size_t i = 1; i <= g.cycles; ++i) {
            const double leak = model.amplitude(i) * level;
            for (std::size_t s = 0; s < g.samples; ++s) {
                double v = model.base_waveform[s] + leak * model.leak_shape[s] + offsets[j] * model.address_shape[s];
                if (model.noise_sigma > 0.0) v += model.noise_sigma * noise.normal();
                samples[n++] = v;
            }
        }
    }
    TraceMetadata meta;
    meta.key_hex = key_to_hex(key);
    meta.key_bits = static_cast<std::uint32_t>(key.bits().size());
    meta.description = "simulated kP main loop, model seed " + std::to_string(model.seed);
    return {RawTrace(g, std::move(samples), std::move(meta)), key, model};
}

/// Across-slot variance of the noise-free address and leakage contributions
/// to a slot's summed compressed values, for uniform random key bits.
struct TermVariances {
    double address = 0.0;
    double leakage = 0.0;
};

/// Exact when the leakage and address shapes have disjoint support, which
/// makes the two terms add in the sum of squares.
inline TermVariances compressed_term_variances(const LeakModel& model) {
    double bw = 0, ww = 0, bu = 0, uu = 0;
    for (std::size_t s = 0; s < model.geometry.samples; ++s) {
        bw += model.base_waveform[s] * model.leak_shape[s];
        ww += model.leak_shape[s] * model.leak_shape[s];
        bu += model.base_waveform[s] * model.address_shape[s];
        uu += model.address_shape[s] * model.address_shape[s];
    }
    TermVariances out;
    // Leakage: enumerate the four equiprobable (bit, previous) pairs.
    double m1 = 0, m2 = 0;
    for (std::uint8_t k = 0; k < 2; ++k)
        for (std::uint8_t p = 0; p < 2; ++p) {
            const double g = model.level(k, p);
            double total = 0;
            for (const auto& [cycle, amp] : model.leaky_cycles) total += 2 * amp * g * bw + amp * amp * g * g * ww;
            m1 += total / 4;
            m2 += total * total / 4;
        }
    out.leakage = m2 - m1 * m1;
    // Address: D * (2 a bu + a^2 uu) with a ~ U[-A, A]: E a^2 = A^2/3, E a^4 = A^4/5.
    const double a2 = model.address_noise_amp * model.address_noise_amp;
    const double d = static_cast<double>(model.geometry.cycles);
    out.address = d * d * (4 * bu * bu * a2 / 3 + uu * uu * (a2 * a2 / 5 - a2 * a2 / 9));
    return out;
}

/// Address-to-leakage variance ratio targeted by the design3_like preset.
inline constexpr double kDesign3AddressRatio = 6.0;

/// Regimes: "design1_like" (clean key-dependent leakage) and "design3_like"
/// (same leakage plus dominant key-independent address activity).
inline LeakModel preset(std::string_view name, TraceGeometry geometry = TraceGeometry::reference(),
                        std::uint64_t seed = 0) {
    if (name != "design1_like" && name != "design3_like")
        throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
    geometry.validate();
    if (geometry.cycles < 6) throw std::invalid_argument("preset: need at least 6 cycles per slot");

    LeakModel m;
    m.geometry = geometry;
    m.seed = seed;
    const std::size_t S = geometry.samples;
    m.base_waveform.resize(S);
    m.leak_shape.assign(S, 0.0);
    m.address_shape.assign(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const double x = static_cast<double>(s) / static_cast<double>(S);
        // Clock-edge spike on a flat floor; leakage rides on the edge, bus
        // activity sits in the middle third of the cycle.
        m.base_waveform[s] = 0.3 + 1.2 * std::exp(-x / 0.04);
        if (x < 0.25) m.leak_shape[s] = std::exp(-x / 0.05);
        if (x >= 1.0 / 3.0 && x < 2.0 / 3.0) m.address_shape[s] = std::sin(std::numbers::pi * (3.0 * x - 1.0));
    }
    static constexpr double amplitudes[6] = {0.50, 0.46, 0.54, 0.48, 0.52, 0.50};
    for (std::size_t k = 0; k < 6; ++k) m.leaky_cycles[1 + (2 * k + 1) * geometry.cycles / 12] = amplitudes[k];
    m.pair_dependence = 0.3;
    m.noise_sigma = 0.05;

    if (name == "design3_like") {
        // Smallest amplitude reaching the target ratio, by bisection.
        double lo = 0.0, hi = 1.0;
        auto ratio = [&](double amp) {
            m.address_noise_amp = amp;
            const auto v = compressed_term_variances(m);
            return v.address / v.leakage;
        };
        while (ratio(hi) < kDesign3AddressRatio) hi *= 2;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (ratio(mid) < kDesign3AddressRatio ? lo : hi) = mid;
        }
        m.address_noise_amp = hi;
    }
    return m;
}

inline void to_json(nlohmann::ordered_json& j, const LeakModel& m) {
    nlohmann::ordered_json leaky = nlohmann::ordered_json::object();
    for (const auto& [cycle, amp] : m.leaky_cycles) leaky[std::to_string(cycle)] = amp;
    j = nlohmann::ordered_json{
        {"geometry", {{"l", m.geometry.slots}, {"D", m.geometry.cycles}, {"S", m.geometry.samples}}},
        {"leaky_cycles", leaky},
        {"pair_dependence", m.pair_dependence},
        {"noise_sigma", m.noise_sigma},
        {"address_noise_amp", m.address_noise_amp},
        {"seed", m.seed},
        {"base_waveform", m.base_waveform},
        {"leak_shape", m.leak_shape},
        {"address_shape", m.address_shape},
    };
}

inline void from_json(const nlohmann::ordered_json& j, LeakModel& m) {
    const auto& g = j.at("geometry");
    m.geometry = {g.at("l").get<std::size_t>(), g.at("D").get<std::size_t>(), g.at("S").get<std::size_t>()};
    m.leaky_cycles.clear();
    for (const auto& [key, amp] : j.at("leaky_cycles").items())
        m.leaky_cycles[static_cast<std::size_t>(std::stoull(key))] = amp.get<double>();
    m.pair_dependence = j.at("pair_dependence").get<double>();
    m.noise_sigma = j.at("noise_sigma").get<double>();
    m.address_noise_amp = j.at("address_noise_amp").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.base_waveform = j.at("base_waveform").get<std::vector<double>>();
    m.leak_shape = j.at("leak_shape").get<std::vector<double>>();
    m.address_shape = j.at("address_shape").get<std::vector<double>>();
    m.validate();
}

} // namespace kpsca
