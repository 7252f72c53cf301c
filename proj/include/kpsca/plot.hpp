// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// PC1/PC2 scatter output: a CSV table and a self-contained SVG.

#include "kpsca/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpsca {

struct ScatterPoint {
    std::size_t slot = 0;
    double pc1 = 0.0;
    double pc2 = 0.0;
    std::uint8_t label = 0;
    std::optional<std::uint8_t> truth_bit;
};

/// Points from an l x m score matrix (m >= 1; PC2 is 0 when m == 1).
inline std::vector<ScatterPoint> scatter_points(const MatrixD& scores, std::span<const std::uint8_t> labels,
                                                std::optional<std::span<const std::uint8_t>> truth = std::nullopt) {
    if (labels.size() != scores.rows()) throw std::invalid_argument("scatter_points: label count mismatch");
    std::vector<ScatterPoint> pts(scores.rows());
    for (std::size_t j = 0; j < scores.rows(); ++j) {
        pts[j].slot = j;
        pts[j].pc1 = scores.cols() > 0 ? scores(j, 0) : 0.0;
        pts[j].pc2 = scores.cols() > 1 ? scores(j, 1) : 0.0;
        pts[j].label = labels[j];
        if (truth) pts[j].truth_bit = (*truth)[j];
    }
    return pts;
}

namespace detail {
inline std::string fmt_num(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}
} // namespace detail

inline std::string scatter_csv(std::span<const ScatterPoint> pts) {
    const bool with_truth = !pts.empty() && pts.front().truth_bit.has_value();
    std::string out = with_truth ? "slot,pc1,pc2,label,truth_bit\n" : "slot,pc1,pc2,label\n";
    for (const auto& p : pts) {
        out += std::to_string(p.slot) + ',' + detail::fmt_num(p.pc1) + ',' + detail::fmt_num(p.pc2) + ',' +
               std::to_string(p.label);
        if (with_truth) out += ',' + std::to_string(p.truth_bit.value_or(0));
        out += '\n';
    }
    return out;
}

/// One circle per point, colored by predicted label.
inline std::string scatter_svg(std::span<const ScatterPoint> pts, const std::string& title) {
    constexpr double width = 640, height = 480, margin = 48;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.pc1), x1 = std::max(x1, p.pc1);
        y0 = std::min(y0, p.pc2), y1 = std::max(y1, p.pc2);
    }
    auto span = [](double lo, double hi) { return hi - lo > 0 ? hi - lo : 1.0; };
    const double sx = (width - 2 * margin) / span(x0, x1);
    const double sy = (height - 2 * margin) / span(y0, y1);
    auto px = [&](double v) { return detail::fmt_num(margin + (v - x0) * sx, "%.3f"); };
    auto py = [&](double v) { return detail::fmt_num(height - margin - (v - y0) * sy, "%.3f"); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
    out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + title +
           "</text>\n";
    out += "<line x1=\"" + px(x0) + "\" y1=\"" + py(0) + "\" x2=\"" + px(x1) + "\" y2=\"" + py(0) +
           "\" stroke=\"#999\"/>\n";
    out += "<line x1=\"" + px(0) + "\" y1=\"" + py(y0) + "\" x2=\"" + px(0) + "\" y2=\"" + py(y1) +
           "\" stroke=\"#999\"/>\n";
    out += "<text x=\"320\" y=\"470\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">PC1</text>\n";
    out += "<text x=\"14\" y=\"240\" font-family=\"sans-serif\" font-size=\"12\">PC2</text>\n";
    out += "<g>\n";
    for (const auto& p : pts) {
        out += "<circle cx=\"" + px(p.pc1) + "\" cy=\"" + py(p.pc2) + "\" r=\"3\" fill=\"" +
               (p.label ? "#d62728" : "#1f77b4") + "\"/>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

} // namespace kpsca
