// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// KPT1 / KPC1 binary trace files.
//
//   offset  size  field
//   0       4     magic "KPT1" (raw) or "KPC1" (compressed)
//   4       4     l  slots              uint32 LE
//   8       4     D  cycles per slot    uint32 LE
//   12      4     S  samples per cycle  uint32 LE (0 for KPC1)
//   16      4     M  metadata length    uint32 LE
//   20      M     UTF-8 JSON object {"key_hex", "key_bits", "description"}, all optional
//   20+M    8*N   IEEE-754 binary64 LE values, N = l*D*S (KPT1) or l*D (KPC1)

#include "kpsca/trace_model.hpp"

#include <json.hpp>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace kpsca {

enum class FormatErrc {
    bad_magic,
    bad_geometry,
    bad_metadata,
    truncated,
    geometry_mismatch,
    non_finite_sample,
    wrong_variant,
    io_error,
};

inline const char* to_string(FormatErrc e) noexcept {
    switch (e) {
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::bad_geometry: return "bad geometry";
    case FormatErrc::bad_metadata: return "bad metadata";
    case FormatErrc::truncated: return "truncated file";
    case FormatErrc::geometry_mismatch: return "geometry does not match payload length";
    case FormatErrc::non_finite_sample: return "non-finite sample";
    case FormatErrc::wrong_variant: return "wrong trace variant";
    case FormatErrc::io_error: return "i/o error";
    }
    return "unknown";
}

class TraceFileError : public std::runtime_error {
public:
    TraceFileError(FormatErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    FormatErrc code() const noexcept { return code_; }

private:
    FormatErrc code_;
};

inline constexpr std::array<char, 4> kRawMagic{'K', 'P', 'T', '1'};
inline constexpr std::array<char, 4> kCompressedMagic{'K', 'P', 'C', '1'};
inline constexpr std::size_t kHeaderSize = 20;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) noexcept {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline double get_f64(const std::uint8_t* p) noexcept {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > 0xFFFFFFFFu) throw TraceFileError(FormatErrc::bad_geometry, std::string(what) + " exceeds 32 bits");
    return static_cast<std::uint32_t>(v);
}

inline std::string metadata_json(const TraceMetadata& meta) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (meta.key_hex) j["key_hex"] = *meta.key_hex;
    if (meta.key_bits) j["key_bits"] = *meta.key_bits;
    if (meta.description) j["description"] = *meta.description;
    return j.dump();
}

inline TraceMetadata parse_metadata(std::string_view text) {
    TraceMetadata meta;
    if (text.empty()) return meta;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw TraceFileError(FormatErrc::bad_metadata, e.what());
    }
    if (!j.is_object()) throw TraceFileError(FormatErrc::bad_metadata, "metadata is not a JSON object");
    try {
        if (j.contains("key_hex")) meta.key_hex = j.at("key_hex").get<std::string>();
        if (j.contains("key_bits")) meta.key_bits = j.at("key_bits").get<std::uint32_t>();
        if (j.contains("description")) meta.description = j.at("description").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TraceFileError(FormatErrc::bad_metadata, e.what());
    }
    return meta;
}

inline std::vector<std::uint8_t> encode(const std::array<char, 4>& magic, const TraceGeometry& g,
                                        const TraceMetadata& meta, std::span<const double> values) {
    const std::string json = metadata_json(meta);
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + json.size() + 8 * values.size());
    for (char c : magic) out.push_back(static_cast<std::uint8_t>(c));
    put_u32(out, checked_u32(g.slots, "slot count"));
    put_u32(out, checked_u32(g.cycles, "cycle count"));
    put_u32(out, checked_u32(g.samples, "sample count"));
    put_u32(out, checked_u32(json.size(), "metadata length"));
    out.insert(out.end(), json.begin(), json.end());
    for (double v : values) put_f64(out, v);
    return out;
}

struct Decoded {
    bool compressed = false;
    TraceGeometry geometry;
    TraceMetadata metadata;
    std::vector<double> values;
};

inline Decoded decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw TraceFileError(FormatErrc::truncated, "file shorter than the magic");
    Decoded d;
    if (std::memcmp(bytes.data(), kRawMagic.data(), 4) == 0) d.compressed = false;
    else if (std::memcmp(bytes.data(), kCompressedMagic.data(), 4) == 0) d.compressed = true;
    else throw TraceFileError(FormatErrc::bad_magic, "expected KPT1 or KPC1");
    if (bytes.size() < kHeaderSize) throw TraceFileError(FormatErrc::truncated, "incomplete header");

    d.geometry.slots = get_u32(bytes.data() + 4);
    d.geometry.cycles = get_u32(bytes.data() + 8);
    d.geometry.samples = get_u32(bytes.data() + 12);
    const std::size_t meta_len = get_u32(bytes.data() + 16);

    if (d.geometry.slots < 2 || d.geometry.cycles < 1)
        throw TraceFileError(FormatErrc::bad_geometry, "need l >= 2 and D >= 1");
    if (d.compressed && d.geometry.samples != 0)
        throw TraceFileError(FormatErrc::bad_geometry, "KPC1 requires S = 0");
    if (!d.compressed && d.geometry.samples < 1) throw TraceFileError(FormatErrc::bad_geometry, "KPT1 requires S >= 1");

    if (bytes.size() - kHeaderSize < meta_len) throw TraceFileError(FormatErrc::truncated, "incomplete metadata");
    const auto* meta_begin = reinterpret_cast<const char*>(bytes.data() + kHeaderSize);
    d.metadata = parse_metadata(std::string_view(meta_begin, meta_len));

    const std::uint64_t payload = bytes.size() - kHeaderSize - meta_len;
    const std::uint64_t per_slot_cycles = std::uint64_t{d.geometry.slots} * d.geometry.cycles;
    // l*D*S can exceed 64 bits for a corrupt header; compare by division first.
    if (!d.compressed && d.geometry.samples > payload / 8 / per_slot_cycles)
        throw TraceFileError(FormatErrc::truncated, "payload shorter than l*D*S*8 bytes");
    const std::uint64_t count = d.compressed ? per_slot_cycles : per_slot_cycles * d.geometry.samples;
    if (payload / 8 < count) throw TraceFileError(FormatErrc::truncated, "payload shorter than l*D*8 bytes");
    if (payload != count * 8) throw TraceFileError(FormatErrc::geometry_mismatch, "trailing bytes after payload");

    d.values.resize(count);
    const std::uint8_t* p = bytes.data() + kHeaderSize + meta_len;
    for (std::size_t i = 0; i < count; ++i, p += 8) {
        d.values[i] = get_f64(p);
        if (!std::isfinite(d.values[i]))
            throw TraceFileError(FormatErrc::non_finite_sample, "value #" + std::to_string(i));
    }
    return d;
}

} // namespace detail

inline std::vector<std::uint8_t> write_trace(const RawTrace& trace) {
    return detail::encode(kRawMagic, trace.geometry(), trace.metadata(), trace.samples());
}

inline std::vector<std::uint8_t> write_trace(const CompressedTrace& trace) {
    return detail::encode(kCompressedMagic, trace.geometry(), trace.metadata(), trace.values());
}

using AnyTrace = std::variant<RawTrace, CompressedTrace>;

inline AnyTrace read_any_trace(std::span<const std::uint8_t> bytes) {
    auto d = detail::decode(bytes);
    if (d.compressed) return CompressedTrace(d.geometry, std::move(d.values), std::move(d.metadata));
    return RawTrace(d.geometry, std::move(d.values), std::move(d.metadata));
}

inline RawTrace read_trace(std::span<const std::uint8_t> bytes) {
    auto any = read_any_trace(bytes);
    if (auto* raw = std::get_if<RawTrace>(&any)) return std::move(*raw);
    throw TraceFileError(FormatErrc::wrong_variant, "file is already compressed (KPC1)");
}

inline CompressedTrace read_compressed_trace(std::span<const std::uint8_t> bytes) {
    auto any = read_any_trace(bytes);
    if (auto* c = std::get_if<CompressedTrace>(&any)) return std::move(*c);
    throw TraceFileError(FormatErrc::wrong_variant, "file is an uncompressed trace (KPT1)");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceFileError(FormatErrc::io_error, "cannot open " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size)))
        throw TraceFileError(FormatErrc::io_error, "cannot read " + path.string());
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TraceFileError(FormatErrc::io_error, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw TraceFileError(FormatErrc::io_error, "cannot write " + path.string());
}

inline AnyTrace load_trace(const std::filesystem::path& path) { return read_any_trace(read_file_bytes(path)); }

template <typename Trace>
void save_trace(const std::filesystem::path& path, const Trace& trace) {
    write_file_bytes(path, write_trace(trace));
}

} // namespace kpsca
