// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/matrix.hpp"
#include "kpsca/obsmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpsca {

/// Feature count above which pca_fit always works on the l x l Gram matrix.
/// Matrices wider than they are tall also take the Gram route.
inline constexpr std::size_t kDualThreshold = 1024;

/// Eigenpairs of a symmetric matrix, sorted by non-increasing eigenvalue.
/// Column i of `vectors` belongs to `values[i]`.
struct EigenSystem {
    std::vector<double> values;
    MatrixD vectors;
    std::size_t sweeps = 0;
    /// Off-diagonal Frobenius norm before the first sweep and after each one.
    std::vector<double> off_norm_history;
};

enum class PcaRoute { automatic, direct, dual };

struct PcaModel {
    std::vector<double> eigenvalues;
    /// d x m, unit columns.
    MatrixD eigenvectors;
    std::size_t effective_dim = 0;
    PcaRoute method = PcaRoute::direct;

    std::size_t components() const noexcept { return eigenvalues.size(); }
};

/// Projections of the observations onto the leading components, l x m.
using Scores = MatrixD;

/// (X*^T X*) / l. For standardized input this is the correlation matrix of
/// the original features, with zero rows for constant columns.
inline MatrixD covariance_matrix(const StandardizedMatrix& m) {
    const std::size_t l = m.rows();
    const std::size_t d = m.cols();
    MatrixD sigma(d, d);
    for (std::size_t j = 0; j < l; ++j) {
        auto x = m.values.row(j);
        for (std::size_t a = 0; a < d; ++a) {
            const double xa = x[a];
            if (xa == 0.0) continue;
            auto dst = sigma.row(a);
            for (std::size_t b = a; b < d; ++b) dst[b] += xa * x[b];
        }
    }
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            sigma(a, b) *= inv;
            sigma(b, a) = sigma(a, b);
        }
    return sigma;
}

namespace detail {

inline double off_diagonal_norm(const MatrixD& a) {
    double acc = 0.0;
    for (std::size_t p = 0; p < a.rows(); ++p)
        for (std::size_t q = 0; q < a.cols(); ++q)
            if (p != q) acc += a(p, q) * a(p, q);
    return std::sqrt(acc);
}

/// Flips each column so that its largest-magnitude entry (first on ties) is positive.
inline void fix_signs(MatrixD& vectors) {
    for (std::size_t c = 0; c < vectors.cols(); ++c) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < vectors.rows(); ++r)
            if (std::abs(vectors(r, c)) > std::abs(vectors(arg, c))) arg = r;
        if (vectors.rows() > 0 && vectors(arg, c) < 0.0)
            for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, c) = -vectors(r, c);
    }
}

} // namespace detail

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps over all (p, q) pairs until the off-diagonal Frobenius norm falls
/// to 1e-14 of the matrix norm. Eigenvectors follow the largest-entry-positive
/// sign convention.
inline EigenSystem eigendecompose(const MatrixD& sigma, std::size_t max_sweeps = 100) {
    const std::size_t n = sigma.rows();
    if (sigma.cols() != n) throw std::invalid_argument("eigendecompose: matrix is not square");
    double scale = 1.0;
    for (double v : sigma.data()) scale = std::max(scale, std::abs(v));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
            if (std::abs(sigma(p, q) - sigma(q, p)) > 1e-9 * scale)
                throw std::invalid_argument("eigendecompose: matrix is not symmetric");

    MatrixD a = sigma;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) a(q, p) = a(p, q);
    MatrixD v = MatrixD::identity(n);
    EigenSystem out;

    double frob = 0.0;
    for (double x : a.data()) frob += x * x;
    frob = std::sqrt(frob);
    double off = detail::off_diagonal_norm(a);
    out.off_norm_history.push_back(off);

    while (off > 1e-14 * frob && out.sweeps < max_sweeps) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        ++out.sweeps;
        const double next = detail::off_diagonal_norm(a);
        out.off_norm_history.push_back(next);
        if (!(next < off)) break; // rounding floor
        off = next;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::ranges::stable_sort(order, [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
    out.values.resize(n);
    out.vectors = MatrixD(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = a(order[i], order[i]);
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = v(k, order[i]);
    }
    detail::fix_signs(out.vectors);
    return out;
}

/// (X* X*^T) / l, the l x l Gram matrix sharing the nonzero spectrum of the covariance.
inline MatrixD gram_matrix(const StandardizedMatrix& m) {
    const std::size_t l = m.rows();
    MatrixD g(l, l);
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t a = 0; a < l; ++a)
        for (std::size_t b = a; b < l; ++b) {
            g(a, b) = dot(m.values.row(a), m.values.row(b)) * inv;
            g(b, a) = g(a, b);
        }
    return g;
}

/// Principal components of a standardized matrix.
///
/// With d <= min(l, kDualThreshold) the covariance is decomposed directly and
/// min(l, effective_dim) pairs are kept. Wider matrices go through the Gram
/// matrix: each eigenvector u with eigenvalue above 1e-12 maps to
/// X*^T u / |X*^T u|. `max_components` = 0 keeps everything available.
inline PcaModel pca_fit(const StandardizedMatrix& m, std::size_t max_components = 0,
                        PcaRoute route = PcaRoute::automatic) {
    if (route == PcaRoute::automatic)
        route = m.cols() <= kDualThreshold && m.cols() <= m.rows() ? PcaRoute::direct : PcaRoute::dual;
    PcaModel model;
    model.effective_dim = m.effective_dim();
    model.method = route;

    std::size_t keep = 0;
    if (route == PcaRoute::direct) {
        auto eig = eigendecompose(covariance_matrix(m));
        keep = std::min(m.rows(), model.effective_dim);
        if (max_components != 0) keep = std::min(keep, max_components);
        model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(keep));
        model.eigenvectors = MatrixD(m.cols(), keep);
        for (std::size_t r = 0; r < m.cols(); ++r)
            for (std::size_t c = 0; c < keep; ++c) model.eigenvectors(r, c) = eig.vectors(r, c);
    } else {
        auto eig = eigendecompose(gram_matrix(m));
        while (keep < eig.values.size() && eig.values[keep] > 1e-12) ++keep;
        if (max_components != 0) keep = std::min(keep, max_components);
        model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(keep));
        model.eigenvectors = MatrixD(m.cols(), keep);
        for (std::size_t c = 0; c < keep; ++c) {
            for (std::size_t j = 0; j < m.rows(); ++j) {
                const double u = eig.vectors(j, c);
                auto x = m.values.row(j);
                for (std::size_t f = 0; f < m.cols(); ++f) model.eigenvectors(f, c) += u * x[f];
            }
            double norm = 0.0;
            for (std::size_t f = 0; f < m.cols(); ++f) norm += model.eigenvectors(f, c) * model.eigenvectors(f, c);
            norm = std::sqrt(norm);
            for (std::size_t f = 0; f < m.cols(); ++f) model.eigenvectors(f, c) /= norm;
        }
        detail::fix_signs(model.eigenvectors);
    }
    for (auto& lambda : model.eigenvalues)
        if (lambda < 0.0 && lambda >= -1e-9) lambda = 0.0;
    return model;
}

/// X* times the first `components` eigenvectors.
inline Scores project(const StandardizedMatrix& m, const PcaModel& model, std::size_t components) {
    if (components == 0 || components > model.components())
        throw std::out_of_range("project: " + std::to_string(components) + " components requested, " +
                                std::to_string(model.components()) + " available");
    if (model.eigenvectors.rows() != m.cols()) throw std::invalid_argument("project: model has a different width");
    Scores scores(m.rows(), components);
    for (std::size_t j = 0; j < m.rows(); ++j) {
        auto x = m.values.row(j);
        for (std::size_t f = 0; f < m.cols(); ++f) {
            const double xf = x[f];
            if (xf == 0.0) continue;
            for (std::size_t c = 0; c < components; ++c) scores(j, c) += xf * model.eigenvectors(f, c);
        }
    }
    return scores;
}

/// 1 where the first principal component score is positive, else 0.
inline std::vector<std::uint8_t> classify_pc1(const Scores& scores) {
    if (scores.cols() < 1) throw std::invalid_argument("classify_pc1: no components");
    std::vector<std::uint8_t> labels(scores.rows());
    for (std::size_t j = 0; j < scores.rows(); ++j) labels[j] = scores(j, 0) > 0.0 ? 1 : 0;
    return labels;
}

} // namespace kpsca
