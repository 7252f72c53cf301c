// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kpsca {

/// Slot / clock-cycle / sample layout of one main-loop trace.
///
/// A trace covers `slots` key bits, each processed in `cycles` clock cycles
/// of `samples` points. Cycle numbers in the public API are 1-based
/// (1..cycles); slot and sample indices are 0-based.
struct TraceGeometry {
    std::size_t slots = 0;
    std::size_t cycles = 0;
    std::size_t samples = 0;

    static constexpr TraceGeometry reference() { return {230, 54, 625}; }

    void validate() const {
        if (slots < 2) throw std::invalid_argument("TraceGeometry: need at least 2 slots");
        if (cycles < 1) throw std::invalid_argument("TraceGeometry: need at least 1 cycle per slot");
        if (samples < 1) throw std::invalid_argument("TraceGeometry: need at least 1 sample per cycle");
    }

    std::size_t raw_size() const noexcept { return slots * cycles * samples; }
    std::size_t compressed_size() const noexcept { return slots * cycles; }

    /// Flat index of sample `s` in cycle `cycle` (1-based) of slot `slot`.
    std::size_t index(std::size_t slot, std::size_t cycle, std::size_t s) const noexcept {
        return (slot * cycles + (cycle - 1)) * samples + s;
    }

    friend bool operator==(const TraceGeometry&, const TraceGeometry&) = default;
};

/// Free-form trace annotations carried in the file header.
struct TraceMetadata {
    std::optional<std::string> key_hex;
    std::optional<std::uint32_t> key_bits;
    std::optional<std::string> description;

    friend bool operator==(const TraceMetadata&, const TraceMetadata&) = default;
};

namespace detail {
inline void require_finite(std::span<const double> values, const char* what) {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite sample");
}
} // namespace detail

/// Full sample stream, slot-major, then cycle, then sample.
class RawTrace {
public:
    RawTrace(TraceGeometry geometry, std::vector<double> samples, TraceMetadata metadata = {})
        : geometry_(geometry), samples_(std::move(samples)), metadata_(std::move(metadata)) {
        geometry_.validate();
        if (samples_.size() != geometry_.raw_size())
            throw std::invalid_argument("RawTrace: sample count does not match geometry");
        detail::require_finite(samples_, "RawTrace");
    }

    const TraceGeometry& geometry() const noexcept { return geometry_; }
    std::span<const double> samples() const noexcept { return samples_; }
    const TraceMetadata& metadata() const noexcept { return metadata_; }

    double at(std::size_t slot, std::size_t cycle, std::size_t s) const noexcept {
        return samples_[geometry_.index(slot, cycle, s)];
    }

    /// The S samples of one clock cycle.
    std::span<const double> cycle_samples(std::size_t slot, std::size_t cycle) const noexcept {
        return std::span<const double>(samples_).subspan(geometry_.index(slot, cycle, 0), geometry_.samples);
    }

    friend bool operator==(const RawTrace&, const RawTrace&) = default;

private:
    TraceGeometry geometry_;
    std::vector<double> samples_;
    TraceMetadata metadata_;
};

/// One sum-of-squares value per clock cycle, slot-major. The geometry's
/// sample count is always 0.
class CompressedTrace {
public:
    CompressedTrace(TraceGeometry geometry, std::vector<double> values, TraceMetadata metadata = {})
        : geometry_{geometry.slots, geometry.cycles, 0}, values_(std::move(values)), metadata_(std::move(metadata)) {
        if (geometry_.slots < 2) throw std::invalid_argument("CompressedTrace: need at least 2 slots");
        if (geometry_.cycles < 1) throw std::invalid_argument("CompressedTrace: need at least 1 cycle per slot");
        if (values_.size() != geometry_.compressed_size())
            throw std::invalid_argument("CompressedTrace: value count does not match geometry");
        detail::require_finite(values_, "CompressedTrace");
        for (double v : values_)
            if (v < 0.0) throw std::invalid_argument("CompressedTrace: negative sum of squares");
    }

    const TraceGeometry& geometry() const noexcept { return geometry_; }
    std::size_t slots() const noexcept { return geometry_.slots; }
    std::size_t cycles() const noexcept { return geometry_.cycles; }
    std::span<const double> values() const noexcept { return values_; }
    const TraceMetadata& metadata() const noexcept { return metadata_; }

    double at(std::size_t slot, std::size_t cycle) const noexcept {
        return values_[slot * geometry_.cycles + (cycle - 1)];
    }

    friend bool operator==(const CompressedTrace&, const CompressedTrace&) = default;

private:
    TraceGeometry geometry_;
    std::vector<double> values_;
    TraceMetadata metadata_;
};

/// Clock-cycle compression: each cycle becomes the sum of squares of its samples.
inline CompressedTrace compress(const RawTrace& trace) {
    const auto& g = trace.geometry();
    std::vector<double> values(g.compressed_size());
    const auto samples = trace.samples();
    for (std::size_t c = 0; c < values.size(); ++c) {
        double acc = 0.0;
        const double* p = samples.data() + c * g.samples;
        for (std::size_t s = 0; s < g.samples; ++s) acc += p[s] * p[s];
        values[c] = acc;
    }
    return CompressedTrace(g, std::move(values), trace.metadata());
}

/// Which bits of the scalar a trace covers: `length` bits starting at
/// `start` (index into the MSB-first bit sequence).
struct KeyWindow {
    std::size_t start = 0;
    std::size_t length = 0;

    /// The `length` least-significant bits of a `bit_length`-bit scalar.
    static KeyWindow trailing(std::size_t bit_length, std::size_t length) {
        if (length > bit_length) throw std::invalid_argument("KeyWindow: window longer than key");
        return {bit_length - length, length};
    }

    friend bool operator==(const KeyWindow&, const KeyWindow&) = default;
};

/// Scalar k as an MSB-first bit sequence plus the analyzed window.
///
/// Observation row t corresponds to bits()[window.start + t], i.e. the key
/// bits in processing order.
class SecretKey {
public:
    SecretKey(std::vector<std::uint8_t> bits, KeyWindow window) : bits_(std::move(bits)), window_(window) {
        for (auto b : bits_)
            if (b > 1) throw std::invalid_argument("SecretKey: bit values must be 0 or 1");
        if (window_.length == 0 || window_.start + window_.length > bits_.size())
            throw std::invalid_argument("SecretKey: analyzed window outside the bit sequence");
    }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    const KeyWindow& window() const noexcept { return window_; }
    std::size_t analyzed_length() const noexcept { return window_.length; }

    std::span<const std::uint8_t> analyzed_bits() const noexcept {
        return std::span<const std::uint8_t>(bits_).subspan(window_.start, window_.length);
    }

    /// Bit processed in slot row `t`.
    std::uint8_t slot_bit(std::size_t t) const noexcept { return bits_[window_.start + t]; }

    /// Bit processed just before slot row `t`; row 0 reads the last skipped bit.
    std::uint8_t previous_bit(std::size_t t) const {
        if (window_.start + t == 0) throw std::out_of_range("SecretKey: no bit precedes the first key bit");
        return bits_[window_.start + t - 1];
    }

    friend bool operator==(const SecretKey&, const SecretKey&) = default;

private:
    std::vector<std::uint8_t> bits_;
    KeyWindow window_;
};

/// Hex rendering of an MSB-first bit sequence, left-padded with zero bits
/// to a multiple of `pad_bits` (4 for nibbles, 8 for whole bytes).
inline std::string bits_to_hex(std::span<const std::uint8_t> bits, std::size_t pad_bits = 4) {
    static constexpr char digits[] = "0123456789abcdef";
    const std::size_t padded = (bits.size() + pad_bits - 1) / pad_bits * pad_bits;
    const std::size_t lead = padded - bits.size();
    std::string out;
    out.reserve(padded / 4);
    for (std::size_t n = 0; n < padded; n += 4) {
        unsigned nibble = 0;
        for (std::size_t b = 0; b < 4; ++b) {
            const std::size_t pos = n + b;
            const unsigned bit = pos < lead ? 0u : bits[pos - lead];
            nibble = (nibble << 1) | bit;
        }
        out.push_back(digits[nibble]);
    }
    return out;
}

inline std::string key_to_hex(const SecretKey& key) { return bits_to_hex(key.bits(), 4); }

/// Decodes `hex` and keeps its `bit_length` least-significant bits, MSB first.
/// An optional "0x" prefix is accepted.
inline SecretKey parse_key_hex(std::string_view hex, std::size_t bit_length, KeyWindow window) {
    if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
    std::vector<std::uint8_t> decoded;
    decoded.reserve(hex.size() * 4);
    for (char ch : hex) {
        unsigned v;
        if (ch >= '0' && ch <= '9') v = static_cast<unsigned>(ch - '0');
        else if (ch >= 'a' && ch <= 'f') v = static_cast<unsigned>(ch - 'a' + 10);
        else if (ch >= 'A' && ch <= 'F') v = static_cast<unsigned>(ch - 'A' + 10);
        else throw std::invalid_argument(std::string("parse_key_hex: non-hex character '") + ch + "'");
        for (int b = 3; b >= 0; --b) decoded.push_back(static_cast<std::uint8_t>((v >> b) & 1u));
    }
    if (bit_length == 0 || bit_length > decoded.size())
        throw std::invalid_argument("parse_key_hex: bit length " + std::to_string(bit_length) +
                                    " exceeds decoded width " + std::to_string(decoded.size()));
    std::vector<std::uint8_t> bits(decoded.end() - static_cast<std::ptrdiff_t>(bit_length), decoded.end());
    return SecretKey(std::move(bits), window);
}

} // namespace kpsca
