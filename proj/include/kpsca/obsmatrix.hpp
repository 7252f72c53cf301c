// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/matrix.hpp"
#include "kpsca/trace_model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpsca {

/// Where a feature column came from. Both numbers are 1-based; `sample` is
/// empty for compressed features.
struct FeatureOrigin {
    std::size_t cycle = 0;
    std::optional<std::size_t> sample;

    friend bool operator==(const FeatureOrigin&, const FeatureOrigin&) = default;
};

/// Slots as rows, features as columns.
struct ObservationMatrix {
    MatrixD values;
    std::vector<FeatureOrigin> provenance;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
};

/// Column-standardized observations: zero mean and unit population standard
/// deviation per column, except `constant_columns`, which are all zero.
struct StandardizedMatrix {
    MatrixD values;
    std::vector<FeatureOrigin> provenance;
    std::vector<std::size_t> constant_columns;

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }
    std::size_t effective_dim() const noexcept { return cols() - constant_columns.size(); }
};

namespace detail {
inline void check_cycle(std::size_t cycle, std::size_t cycles) {
    if (cycle < 1 || cycle > cycles)
        throw std::out_of_range("cycle index " + std::to_string(cycle) + " outside [1, " + std::to_string(cycles) + "]");
}
} // namespace detail

/// Every sample of a slot as a feature: l x (S*D), cycle-major, sample-minor.
inline ObservationMatrix build_x1(const RawTrace& trace) {
    const auto& g = trace.geometry();
    const std::size_t d = g.cycles * g.samples;
    std::vector<double> data(trace.samples().begin(), trace.samples().end());
    ObservationMatrix m{MatrixD(g.slots, d, std::move(data)), {}};
    m.provenance.reserve(d);
    for (std::size_t i = 1; i <= g.cycles; ++i)
        for (std::size_t s = 1; s <= g.samples; ++s) m.provenance.push_back({i, s});
    return m;
}

/// Every compressed cycle of a slot as a feature: l x D.
inline ObservationMatrix build_x2(const CompressedTrace& ctrace) {
    std::vector<double> data(ctrace.values().begin(), ctrace.values().end());
    ObservationMatrix m{MatrixD(ctrace.slots(), ctrace.cycles(), std::move(data)), {}};
    for (std::size_t i = 1; i <= ctrace.cycles(); ++i) m.provenance.push_back({i, std::nullopt});
    return m;
}

/// The samples of clock cycle `cycle` (1-based) in every slot: l x S.
inline ObservationMatrix build_x3(const RawTrace& trace, std::size_t cycle) {
    const auto& g = trace.geometry();
    detail::check_cycle(cycle, g.cycles);
    ObservationMatrix m{MatrixD(g.slots, g.samples), {}};
    for (std::size_t j = 0; j < g.slots; ++j) std::ranges::copy(trace.cycle_samples(j, cycle), m.values.row(j).begin());
    for (std::size_t s = 1; s <= g.samples; ++s) m.provenance.push_back({cycle, s});
    return m;
}

/// Compressed clock cycle `cycle` (1-based) of every slot: l x 1.
inline ObservationMatrix build_x4(const CompressedTrace& ctrace, std::size_t cycle) {
    detail::check_cycle(cycle, ctrace.cycles());
    ObservationMatrix m{MatrixD(ctrace.slots(), 1), {{cycle, std::nullopt}}};
    for (std::size_t j = 0; j < ctrace.slots(); ++j) m.values(j, 0) = ctrace.at(j, cycle);
    return m;
}

/// Per-column (x - mean) / sigma with the population sigma (divisor l).
/// Columns with no spread map to zero and are listed in constant_columns.
inline StandardizedMatrix standardize(const ObservationMatrix& m) {
    const std::size_t l = m.rows();
    const std::size_t d = m.cols();
    std::vector<double> mean(d, 0.0), var(d, 0.0), lo(d), hi(d);
    if (l > 0) {
        auto first = m.values.row(0);
        std::ranges::copy(first, lo.begin());
        std::ranges::copy(first, hi.begin());
    }
    for (std::size_t j = 0; j < l; ++j) {
        auto row = m.values.row(j);
        for (std::size_t c = 0; c < d; ++c) {
            mean[c] += row[c];
            lo[c] = std::min(lo[c], row[c]);
            hi[c] = std::max(hi[c], row[c]);
        }
    }
    for (auto& v : mean) v /= static_cast<double>(l);
    for (std::size_t j = 0; j < l; ++j) {
        auto row = m.values.row(j);
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = row[c] - mean[c];
            var[c] += dev * dev;
        }
    }

    StandardizedMatrix out{MatrixD(l, d), m.provenance, {}};
    std::vector<double> scale(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        const double sigma = std::sqrt(var[c] / static_cast<double>(l));
        const double magnitude = std::max(std::abs(lo[c]), std::abs(hi[c]));
        // A spread at rounding level of the values is treated as no spread.
        if (lo[c] == hi[c] || sigma <= 1e-13 * magnitude) out.constant_columns.push_back(c);
        else scale[c] = 1.0 / sigma;
    }
    for (std::size_t j = 0; j < l; ++j) {
        auto src = m.values.row(j);
        auto dst = out.values.row(j);
        for (std::size_t c = 0; c < d; ++c) dst[c] = scale[c] == 0.0 ? 0.0 : (src[c] - mean[c]) * scale[c];
    }
    return out;
}

/// Keeps the columns whose cycle is in `cycles`, in their original order.
inline StandardizedMatrix select_cycles(const StandardizedMatrix& m, std::span<const std::size_t> cycles) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (std::ranges::find(cycles, m.provenance[c].cycle) != cycles.end()) keep.push_back(c);

    StandardizedMatrix out{MatrixD(m.rows(), keep.size()), {}, {}};
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.provenance.push_back(m.provenance[keep[k]]);
        if (std::ranges::binary_search(m.constant_columns, keep[k])) out.constant_columns.push_back(k);
    }
    for (std::size_t j = 0; j < m.rows(); ++j) {
        auto src = m.values.row(j);
        auto dst = out.values.row(j);
        for (std::size_t k = 0; k < keep.size(); ++k) dst[k] = src[keep[k]];
    }
    return out;
}

} // namespace kpsca
