// Copyright 2026 The kpsca Authors
// SPDX-License-Identifier: Apache-2.0

#include "kpsca/pca.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

namespace kpsca {
namespace {

StandardizedMatrix standardized(const MatrixD& x) {
    return standardize(ObservationMatrix{x, std::vector<FeatureOrigin>(x.cols())});
}

StandardizedMatrix random_standardized(Rng& rng, std::size_t l, std::size_t d) {
    return standardized(oracle::random_matrix(rng, l, d));
}

double residual(const MatrixD& a, const EigenSystem& e, std::size_t i) {
    double acc = 0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double av = 0;
        for (std::size_t c = 0; c < a.cols(); ++c) av += a(r, c) * e.vectors(c, i);
        acc += (av - e.values[i] * e.vectors(r, i)) * (av - e.values[i] * e.vectors(r, i));
    }
    return std::sqrt(acc);
}

void expect_orthonormal(const MatrixD& v, double tol) {
    for (std::size_t a = 0; a < v.cols(); ++a)
        for (std::size_t b = a; b < v.cols(); ++b) {
            double d = 0;
            for (std::size_t r = 0; r < v.rows(); ++r) d += v(r, a) * v(r, b);
            EXPECT_NEAR(d, a == b ? 1.0 : 0.0, tol);
        }
}

void expect_columns_match_up_to_sign(const MatrixD& a, const MatrixD& b, double tol) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        double same = 0, flipped = 0;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            same = std::max(same, std::abs(a(r, c) - b(r, c)));
            flipped = std::max(flipped, std::abs(a(r, c) + b(r, c)));
        }
        EXPECT_LE(std::min(same, flipped), tol) << "column " << c;
    }
}

TEST(Covariance, IdenticalAndNegatedColumns) {
    const auto m = standardized(MatrixD(4, 3, {1, 1, -1, 2, 2, -2, 5, 5, -5, 3, 3, -3}));
    const auto s = covariance_matrix(m);
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(s(0, 1), 1.0, 1e-12);
    EXPECT_NEAR(s(0, 2), -1.0, 1e-12);
    EXPECT_NEAR(s(1, 2), -1.0, 1e-12);
}

TEST(Covariance, IsCorrelationMatrix) {
    Rng rng(3);
    const auto x = oracle::random_matrix(rng, 25, 4);
    const auto s = covariance_matrix(standardized(x));
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b) {
            double ma = 0, mb = 0;
            for (std::size_t j = 0; j < 25; ++j) ma += x(j, a), mb += x(j, b);
            ma /= 25, mb /= 25;
            double sab = 0, saa = 0, sbb = 0;
            for (std::size_t j = 0; j < 25; ++j) {
                sab += (x(j, a) - ma) * (x(j, b) - mb);
                saa += (x(j, a) - ma) * (x(j, a) - ma);
                sbb += (x(j, b) - mb) * (x(j, b) - mb);
            }
            EXPECT_NEAR(s(a, b), sab / std::sqrt(saa * sbb), 1e-12);
        }
}

TEST(Eigendecompose, TwoByTwoClosedForm) {
    for (double rho : {0.0, 0.3, -0.7, 0.999}) {
        const auto e = eigendecompose(MatrixD(2, 2, {1, rho, rho, 1}));
        const double hi = 1 + std::abs(rho), lo = 1 - std::abs(rho);
        EXPECT_NEAR(e.values[0], hi, 1e-12);
        EXPECT_NEAR(e.values[1], lo, 1e-12);
        if (rho == 0.0) continue;
        const double r = std::numbers::sqrt2 / 2;
        const std::size_t plus = rho > 0 ? 0 : 1;
        EXPECT_NEAR(std::abs(e.vectors(0, plus)), r, 1e-12);
        EXPECT_NEAR(e.vectors(0, plus) * e.vectors(1, plus), 0.5, 1e-12);
        EXPECT_NEAR(e.vectors(0, 1 - plus) * e.vectors(1, 1 - plus), -0.5, 1e-12);
    }
}

TEST(Eigendecompose, Identity) {
    const auto e = eigendecompose(MatrixD::identity(6));
    for (double v : e.values) EXPECT_EQ(v, 1.0);
    EXPECT_EQ(e.vectors, MatrixD::identity(6));
}

TEST(Eigendecompose, MatchesCharacteristicPolynomialRoots) {
    Rng rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        const auto a = oracle::random_symmetric(rng, 5);
        auto roots = oracle::characteristic_roots(a);
        ASSERT_EQ(roots.size(), 5u);
        std::ranges::sort(roots, std::greater<>());
        const auto e = eigendecompose(a);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(e.values[i], roots[i], 1e-9);
    }
}

TEST(Eigendecompose, ResidualsOrthonormalityTraceAndConvergence) {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(12);
        const auto a = oracle::random_symmetric(rng, n);
        const auto e = eigendecompose(a);
        double trace = 0, sum = 0, frob = 0;
        for (std::size_t i = 0; i < n; ++i) trace += a(i, i), sum += e.values[i];
        for (double v : a.data()) frob += v * v;
        EXPECT_NEAR(sum, trace, 1e-6);
        for (std::size_t i = 0; i < n; ++i) EXPECT_LE(residual(a, e, i), 1e-8 * std::max(1.0, std::abs(e.values[i])));
        for (std::size_t i = 1; i < n; ++i) EXPECT_GE(e.values[i - 1], e.values[i]);
        expect_orthonormal(e.vectors, 1e-8);
        EXPECT_LE(e.off_norm_history.back(), 1e-10 * std::sqrt(frob));
        // The final entry may be the sweep that hit the rounding floor.
        const auto& h = e.off_norm_history;
        for (std::size_t k = 1; k + 1 < h.size(); ++k) EXPECT_LT(h[k], h[k - 1]);
        if (h.size() > 1 && h.back() >= h[h.size() - 2]) EXPECT_LE(h.back(), 1e-10 * std::sqrt(frob));
        else if (h.size() > 1) EXPECT_LT(h.back(), h[h.size() - 2]);
    }
}

TEST(Eigendecompose, SignConvention) {
    Rng rng(4);
    const auto e = eigendecompose(oracle::random_symmetric(rng, 7));
    for (std::size_t c = 0; c < 7; ++c) {
        std::size_t arg = 0;
        for (std::size_t r = 1; r < 7; ++r)
            if (std::abs(e.vectors(r, c)) > std::abs(e.vectors(arg, c))) arg = r;
        EXPECT_GT(e.vectors(arg, c), 0.0);
    }
}

TEST(Eigendecompose, RejectsNonSymmetric) {
    EXPECT_THROW(eigendecompose(MatrixD(2, 2, {1, 2, 3, 4})), std::invalid_argument);
    EXPECT_THROW(eigendecompose(MatrixD(2, 3)), std::invalid_argument);
}

TEST(PcaFit, SingleFeature) {
    const auto model = pca_fit(standardized(MatrixD(5, 1, {1, 4, 2, 8, 5})));
    ASSERT_EQ(model.components(), 1u);
    EXPECT_NEAR(model.eigenvalues[0], 1.0, 1e-12);
    EXPECT_NEAR(model.eigenvectors(0, 0), 1.0, 1e-12);
}

TEST(PcaFit, RankOne) {
    Rng rng(8);
    MatrixD x(12, 5);
    std::vector<double> v(5);
    for (auto& e : v) e = rng.uniform(0.5, 2) * (rng.bit() ? 1 : -1);
    for (std::size_t j = 0; j < 12; ++j) {
        const double t = rng.uniform(-3, 3);
        for (std::size_t c = 0; c < 5; ++c) x(j, c) = t * v[c];
    }
    const auto model = pca_fit(standardized(x));
    EXPECT_EQ(std::ranges::count_if(model.eigenvalues, [](double l) { return l > 1e-9; }), 1);
    EXPECT_NEAR(model.eigenvalues[0], 5.0, 1e-9);
}

TEST(PcaFit, ModelInvariants) {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t l = 2 + rng.uniform_index(30), d = 1 + rng.uniform_index(30);
        auto x = oracle::random_matrix(rng, l, d);
        if (d > 2)
            for (std::size_t j = 0; j < l; ++j) x(j, 1) = 3.0;
        const auto m = standardized(x);
        for (auto route : {PcaRoute::direct, PcaRoute::dual}) {
            const auto model = pca_fit(m, 0, route);
            EXPECT_EQ(model.effective_dim, m.effective_dim());
            double sum = 0;
            for (std::size_t i = 0; i < model.components(); ++i) {
                EXPECT_GE(model.eigenvalues[i], 0.0);
                if (i > 0) EXPECT_LE(model.eigenvalues[i], model.eigenvalues[i - 1]);
                sum += model.eigenvalues[i];
            }
            EXPECT_NEAR(sum, static_cast<double>(m.effective_dim()), 1e-6);
            expect_orthonormal(model.eigenvectors, 1e-8);
        }
    }
}

TEST(PcaFit, RouteSelection) {
    Rng rng(2);
    EXPECT_EQ(pca_fit(random_standardized(rng, 10, 4)).method, PcaRoute::direct);
    EXPECT_EQ(pca_fit(random_standardized(rng, 4, 10)).method, PcaRoute::dual);
}

TEST(PcaFit, DirectAndDualAgree) {
    Rng rng(5);
    auto check = [](const StandardizedMatrix& m) {
        const auto a = pca_fit(m, 0, PcaRoute::direct);
        const auto b = pca_fit(m, 0, PcaRoute::dual);
        std::size_t nz = 0;
        while (nz < a.components() && a.eigenvalues[nz] > 1e-9) ++nz;
        ASSERT_GE(b.components(), nz);
        for (std::size_t i = 0; i < nz; ++i) EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-8);
        for (std::size_t i = nz; i < b.components(); ++i) EXPECT_LE(b.eigenvalues[i], 1e-8);
        if (nz == 0) return;
        expect_columns_match_up_to_sign(project(m, a, nz), project(m, b, nz), 1e-7);
    };
    check(random_standardized(rng, 8, 5));
    for (int trial = 0; trial < 30; ++trial)
        check(random_standardized(rng, 2 + rng.uniform_index(39), 1 + rng.uniform_index(40)));
}

TEST(PcaFit, MaxComponents) {
    Rng rng(9);
    const auto m = random_standardized(rng, 20, 6);
    EXPECT_EQ(pca_fit(m, 2).components(), 2u);
    EXPECT_EQ(pca_fit(m, 0).components(), 6u);
    EXPECT_EQ(pca_fit(m, 2, PcaRoute::dual).components(), 2u);
}

TEST(Project, ReconstructsFullRank) {
    Rng rng(12);
    const auto m = random_standardized(rng, 15, 6);
    const auto model = pca_fit(m);
    const auto scores = project(m, model, model.components());
    for (std::size_t j = 0; j < 15; ++j)
        for (std::size_t f = 0; f < 6; ++f) {
            double back = 0;
            for (std::size_t c = 0; c < model.components(); ++c) back += scores(j, c) * model.eigenvectors(f, c);
            EXPECT_NEAR(back, m.values(j, f), 1e-8);
        }
}

TEST(Project, FirstScoreVarianceIsLeadingEigenvalue) {
    Rng rng(13);
    const auto m = random_standardized(rng, 40, 7);
    const auto model = pca_fit(m);
    const auto scores = project(m, model, 1);
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < 40; ++j) mean += scores(j, 0);
    mean /= 40;
    for (std::size_t j = 0; j < 40; ++j) var += (scores(j, 0) - mean) * (scores(j, 0) - mean);
    var /= 40;
    EXPECT_NEAR(var / model.eigenvalues[0], 1.0, 1e-6);
}

TEST(Project, ComponentCountChecked) {
    Rng rng(14);
    const auto m = random_standardized(rng, 10, 3);
    const auto model = pca_fit(m);
    EXPECT_THROW(project(m, model, 0), std::out_of_range);
    EXPECT_THROW(project(m, model, 4), std::out_of_range);
}

TEST(ClassifyPc1, SignRule) {
    EXPECT_EQ(classify_pc1(MatrixD(4, 1, {-2.0, 0.0, 1e-300, 3.0})), (std::vector<std::uint8_t>{0, 0, 1, 1}));
}

TEST(ClassifyPc1, SeparatesTwoBlobs) {
    Rng rng(15);
    MatrixD x(30, 4);
    for (std::size_t j = 0; j < 30; ++j)
        for (std::size_t c = 0; c < 4; ++c) x(j, c) = rng.normal() * 0.1 + (j % 3 == 0 ? 5.0 : 0.0);
    const auto m = standardized(x);
    const auto labels = classify_pc1(project(m, pca_fit(m), 1));
    for (std::size_t j = 1; j < 30; ++j) EXPECT_EQ(labels[j] == labels[0], j % 3 == 0);
}

TEST(ClassifyPc1, UnchangedByCovarianceScaling) {
    Rng rng(16);
    const auto m = random_standardized(rng, 30, 5);
    const auto sigma = covariance_matrix(m);
    const auto base = eigendecompose(sigma);
    for (double k : {1e-3, 0.5, 7.0, 1e5}) {
        MatrixD scaled = sigma;
        for (auto& v : scaled.data()) v *= k;
        const auto e = eigendecompose(scaled);
        for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(e.values[i], k * base.values[i], 1e-9 * k);
        for (std::size_t r = 0; r < 5; ++r) EXPECT_NEAR(e.vectors(r, 0), base.vectors(r, 0), 1e-9);
        PcaModel scaled_model{{e.values[0]}, MatrixD(5, 1), 5, PcaRoute::direct};
        PcaModel base_model{{base.values[0]}, MatrixD(5, 1), 5, PcaRoute::direct};
        for (std::size_t r = 0; r < 5; ++r) {
            scaled_model.eigenvectors(r, 0) = e.vectors(r, 0);
            base_model.eigenvectors(r, 0) = base.vectors(r, 0);
        }
        EXPECT_EQ(classify_pc1(project(m, scaled_model, 1)), classify_pc1(project(m, base_model, 1)));
    }
}

} // namespace
} // namespace kpsca
