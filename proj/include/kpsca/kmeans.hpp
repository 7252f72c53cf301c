// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "kpsca/matrix.hpp"
#include "kpsca/obsmatrix.hpp"
#include "kpsca/parallel.hpp"
#include "kpsca/rng.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpsca {

struct KMeansConfig {
    std::size_t clusters = 2;
    std::size_t max_iterations = 300;
    std::size_t restarts = 10;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (clusters < 1) throw std::invalid_argument("KMeansConfig: need at least one cluster");
        if (max_iterations < 1) throw std::invalid_argument("KMeansConfig: need at least one iteration");
        if (restarts < 1) throw std::invalid_argument("KMeansConfig: need at least one restart");
    }
};

struct Clustering {
    std::vector<std::size_t> labels;
    MatrixD centroids;
    double inertia = 0.0;
    bool converged = false;
    std::size_t iterations_used = 0;
    /// Inertia after each assignment step, against the centroids used for it.
    std::vector<double> inertia_history;
};

namespace detail {

inline void update_centroids(const MatrixD& x, const std::vector<std::size_t>& labels, MatrixD& centroids) {
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k, 0);
    MatrixD sums(k, x.cols());
    for (std::size_t j = 0; j < x.rows(); ++j) {
        auto dst = sums.row(labels[j]);
        auto src = x.row(j);
        for (std::size_t c = 0; c < x.cols(); ++c) dst[c] += src[c];
        ++counts[labels[j]];
    }
    for (std::size_t r = 0; r < k; ++r) {
        if (counts[r] == 0) continue;
        auto dst = centroids.row(r);
        auto src = sums.row(r);
        const double n = static_cast<double>(counts[r]);
        for (std::size_t c = 0; c < x.cols(); ++c) dst[c] = src[c] / n;
    }
}

} // namespace detail

/// One Lloyd run.
///
/// Starts from `clusters` distinct random rows, assigns every row to its
/// nearest centroid (ties go to the lower index), moves each centroid to the
/// mean of its rows, and stops once an assignment repeats the previous one or
/// after `max_iterations` assignment steps. A cluster left empty is reseeded
/// with the row farthest from its own centroid; it stays empty when every row
/// sits exactly on a centroid.
inline Clustering kmeans_single(const MatrixD& x, std::size_t clusters, std::size_t max_iterations, std::uint64_t seed) {
    const std::size_t l = x.rows();
    const std::size_t d = x.cols();
    if (clusters < 1 || max_iterations < 1) throw std::invalid_argument("kmeans: need K >= 1 and M >= 1");
    if (l < clusters)
        throw std::invalid_argument("kmeans: " + std::to_string(l) + " observations for " + std::to_string(clusters) +
                                    " clusters");

    Rng rng(seed);
    Clustering out;
    out.centroids = MatrixD(clusters, d);
    for (std::size_t r = 0; auto j : rng.sample_without_replacement(l, clusters)) {
        std::ranges::copy(x.row(j), out.centroids.row(r).begin());
        ++r;
    }

    std::vector<std::size_t> labels(l, 0), previous;
    std::vector<double> dist(l, 0.0);
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t iter = 1; iter <= max_iterations; ++iter) {
        std::ranges::fill(counts, 0);
        double inertia = 0.0;
        for (std::size_t j = 0; j < l; ++j) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_r = 0;
            for (std::size_t r = 0; r < clusters; ++r) {
                const double d2 = squared_distance(x.row(j), out.centroids.row(r));
                if (d2 < best) {
                    best = d2;
                    best_r = r;
                }
            }
            labels[j] = best_r;
            dist[j] = best;
            ++counts[best_r];
            inertia += best;
        }

        for (std::size_t r = 0; r < clusters; ++r) {
            if (counts[r] != 0) continue;
            std::size_t far = l;
            for (std::size_t j = 0; j < l; ++j)
                if (counts[labels[j]] > 1 && dist[j] > 0.0 && (far == l || dist[j] > dist[far])) far = j;
            if (far == l) break;
            inertia -= dist[far];
            --counts[labels[far]];
            labels[far] = r;
            dist[far] = 0.0;
            counts[r] = 1;
            std::ranges::copy(x.row(far), out.centroids.row(r).begin());
        }

        out.inertia_history.push_back(inertia);
        out.iterations_used = iter;
        out.inertia = inertia;
        if (iter > 1 && labels == previous) {
            out.converged = true;
            break;
        }
        previous = labels;
        detail::update_centroids(x, labels, out.centroids);
    }

    if (!out.converged) {
        double inertia = 0.0;
        for (std::size_t j = 0; j < l; ++j) inertia += squared_distance(x.row(j), out.centroids.row(labels[j]));
        out.inertia = inertia;
    }
    out.labels = std::move(labels);
    return out;
}

inline Clustering kmeans_single(const StandardizedMatrix& m, std::size_t clusters, std::size_t max_iterations,
                                std::uint64_t seed) {
    return kmeans_single(m.values, clusters, max_iterations, seed);
}

/// `restarts` runs seeded base_seed + r. Picks the converged run with the
/// least inertia, or the least-inertia run when none converged; the lower
/// restart index wins ties.
inline Clustering kmeans_restarted(const MatrixD& x, const KMeansConfig& cfg) {
    cfg.validate();
    if (x.rows() < cfg.clusters) throw std::invalid_argument("kmeans: fewer observations than clusters");
    std::vector<Clustering> runs(cfg.restarts);
    parallel_for(cfg.restarts, [&](std::size_t r) {
        runs[r] = kmeans_single(x, cfg.clusters, cfg.max_iterations, cfg.base_seed + r);
    });

    bool any_converged = false;
    for (const auto& run : runs) any_converged = any_converged || run.converged;
    std::size_t best = runs.size();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (any_converged && !runs[r].converged) continue;
        if (best == runs.size() || runs[r].inertia < runs[best].inertia) best = r;
    }
    return std::move(runs[best]);
}

inline Clustering kmeans_restarted(const StandardizedMatrix& m, const KMeansConfig& cfg) {
    return kmeans_restarted(m.values, cfg);
}

} // namespace kpsca
