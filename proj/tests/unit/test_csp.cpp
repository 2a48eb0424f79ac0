#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracle/oracle.hpp"
#include "sgfb/csp.hpp"
#include "sgfb/error.hpp"
#include "sgfb/linalg.hpp"

namespace sgfb {
namespace {

double quad(const Matrix& s, const Vector& w) {
    return dot(w, s * w);
}

EegEpoch random_epoch(Rng& rng, std::size_t channels, std::size_t samples, int label) {
    return EegEpoch{oracle::random_matrix(rng, channels, samples), 100.0, label};
}

TEST(NormalizedCovariance, WorkedExamples) {
    EXPECT_EQ(normalized_covariance(Matrix::identity(2)), (Matrix{{0.5, 0.0}, {0.0, 0.5}}));
    EXPECT_EQ(normalized_covariance(Matrix{{1.0, 1.0}, {1.0, -1.0}}), (Matrix{{0.5, 0.0}, {0.0, 0.5}}));
}

TEST(NormalizedCovariance, UnitTraceAndSymmetry) {
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const Matrix c = normalized_covariance(oracle::random_matrix(rng, 4, 50));
        EXPECT_NEAR(trace(c), 1.0, 1e-12);
        EXPECT_EQ(c, c.transposed());
    }
}

TEST(NormalizedCovariance, ZeroEpochThrows) {
    EXPECT_THROW(normalized_covariance(Matrix(3, 10)), NumericError);
}

TEST(ClassCovariance, SingleAndRepeatedTrial) {
    Rng rng(8);
    const EegEpoch e = random_epoch(rng, 3, 40, 1);
    const Matrix single = normalized_covariance(remove_row_means(e.data));
    const std::vector<EegEpoch> one{e};
    EXPECT_LE(max_abs_diff(class_covariance(one, 1), single), 1e-15);
    const std::vector<EegEpoch> two{e, e};
    EXPECT_LE(max_abs_diff(class_covariance(two, 1), single), 1e-15);
}

TEST(ClassCovariance, MatchesBruteForceAverage) {
    Rng rng(9);
    std::vector<EegEpoch> trials;
    for (int i = 0; i < 5; ++i) {
        trials.push_back(random_epoch(rng, 3, 30, i % 2 == 0 ? 1 : 2));
    }
    // Trials 0, 2, 4 are class 1.
    Matrix expect(3, 3);
    for (int i : {0, 2, 4}) {
        const Matrix& x = trials[static_cast<std::size_t>(i)].data;
        Matrix centred(3, 30);
        double tr = 0.0;
        for (std::size_t r = 0; r < 3; ++r) {
            double mean = 0.0;
            for (std::size_t t = 0; t < 30; ++t) mean += x(r, t);
            mean /= 30.0;
            for (std::size_t t = 0; t < 30; ++t) centred(r, t) = x(r, t) - mean;
        }
        Matrix outer(3, 3);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                for (std::size_t t = 0; t < 30; ++t) outer(a, b) += centred(a, t) * centred(b, t);
            }
            tr += outer(a, a);
        }
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) expect(a, b) += outer(a, b) / tr / 3.0;
        }
    }
    EXPECT_LE(max_abs_diff(class_covariance(trials, 1), expect), 1e-12);
    EXPECT_THROW(class_covariance(std::span<const EegEpoch>(trials.data(), 1), 2), EmptyClassError);
}

TEST(Shrink, PreservesTraceAndBlendsTowardIdentity) {
    const Matrix s{{3.0, 1.0}, {1.0, 1.0}};
    const Matrix r = shrink(s, 0.5);
    EXPECT_DOUBLE_EQ(trace(r), 4.0);
    EXPECT_DOUBLE_EQ(r(0, 0), 2.5);
    EXPECT_DOUBLE_EQ(r(0, 1), 0.5);
}

TEST(FitCsp, EqualClassesGiveHalfEigenvalues) {
    const Matrix half{{0.5, 0.0}, {0.0, 0.5}};
    for (double ev : csp_eigenvalues(half, half, 0.0)) {
        EXPECT_NEAR(ev, 0.5, 1e-12);
    }
}

TEST(FitCsp, AnalyticTwoByTwo) {
    const double scale = 3.0;
    const Matrix s1{{4.0 / 5.0 * scale, 0.0}, {0.0, 1.0 / 5.0 * scale}};
    const Matrix s2{{1.0 / 5.0 * scale, 0.0}, {0.0, 4.0 / 5.0 * scale}};
    const Matrix w = fit_csp(s1, s2, 1, 0.0);
    ASSERT_EQ(w.cols(), 2u);
    // Generalized eigenvalues 4/5 and 1/5 on e1 and e2; w^T (S1+S2) w = 1 fixes |w| = 1/sqrt(scale).
    EXPECT_NEAR(std::abs(w(0, 0)), 1.0 / std::sqrt(scale), 1e-12);
    EXPECT_NEAR(w(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(w(0, 1), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(w(1, 1)), 1.0 / std::sqrt(scale), 1e-12);
    const Vector ev = csp_eigenvalues(s1, s2, 0.0);
    EXPECT_NEAR(ev[0], 0.8, 1e-12);
    EXPECT_NEAR(ev[1], 0.2, 1e-12);
}

TEST(FitCsp, PairingAndWhitenedOrthogonality) {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix s1 = oracle::random_spd(rng, 6, 0.2);
        const Matrix s2 = oracle::random_spd(rng, 6, 0.2);
        const double gamma = 1e-4;
        const Matrix w = fit_csp(s1, s2, 3, gamma);
        const Matrix a = shrink(s1, gamma);
        const Matrix b = shrink(s2, gamma);
        const Matrix sum = a + b;
        EXPECT_LE(max_abs_diff(w.transposed() * sum * w, Matrix::identity(6)), 1e-7);
        const Vector ev = csp_eigenvalues(s1, s2, gamma);
        for (std::size_t m = 0; m < 6; ++m) {
            const Vector col = w.col(m);
            const double l1 = quad(a, col) / quad(sum, col);
            const double l2 = quad(b, col) / quad(sum, col);
            EXPECT_GT(l1, 0.0);
            EXPECT_LT(l1, 1.0);
            EXPECT_NEAR(l1 + l2, 1.0, 1e-8);
            EXPECT_NEAR(l1, ev[m], 1e-8);
            const Vector lhs = a * col;
            const Vector rhs = sum * col;
            for (std::size_t k = 0; k < 6; ++k) {
                EXPECT_NEAR(lhs[k], l1 * rhs[k], 1e-8);
            }
        }
        // M largest then M smallest, descending throughout.
        for (std::size_t m = 0; m + 1 < 6; ++m) {
            EXPECT_GE(ev[m], ev[m + 1]);
        }
    }
}

TEST(FitCsp, TopFilterBeatsRandomDirections) {
    Rng rng(41);
    const Matrix s1 = oracle::random_spd(rng, 4, 0.3);
    const Matrix s2 = oracle::random_spd(rng, 4, 0.3);
    const Matrix w = fit_csp(s1, s2, 1, 0.0);
    const Matrix sum = s1 + s2;
    const double best = quad(s1, w.col(0)) / quad(sum, w.col(0));
    const double worst = quad(s1, w.col(1)) / quad(sum, w.col(1));
    for (int i = 0; i < 10000; ++i) {
        const Vector v = oracle::random_vector(rng, 4, 1.0);
        const double q = quad(s1, v) / quad(sum, v);
        EXPECT_LE(q, best + 1e-12);
        EXPECT_GE(q, worst - 1e-12);
    }
}

TEST(FitCsp, Errors) {
    EXPECT_THROW(fit_csp(Matrix::identity(3), Matrix::identity(3), 2), ParameterError);
    const Matrix singular{{1.0, 1.0}, {1.0, 1.0}};
    EXPECT_THROW(fit_csp(singular, singular, 1, 0.0), RankDeficiencyError);
    EXPECT_EQ(effective_m_pairs(16, 5), 2);
    EXPECT_EQ(effective_m_pairs(2, 118), 2);
}

CspModel single_band_model(const Matrix& w) {
    CspModel model;
    model.per_band = {w};
    model.m_pairs = static_cast<int>(w.cols() / 2);
    return model;
}

TEST(ExtractFeatures, LogVarianceValues) {
    // Projection on channel 0 is +-1 (variance 1), on channel 1 is +-10 (variance 100).
    Matrix x(2, 4);
    const double s0[] = {1.0, -1.0, 1.0, -1.0};
    for (std::size_t t = 0; t < 4; ++t) {
        x(0, t) = s0[t];
        x(1, t) = 10.0 * s0[t];
    }
    const std::vector<EegEpoch> bands{{x, 100.0, 1}};
    const FeatureVector f = extract_features(single_band_model(Matrix::identity(2)), bands);
    ASSERT_EQ(f.per_band.size(), 1u);
    EXPECT_NEAR(f.per_band[0][0], 0.0, 1e-15);
    EXPECT_NEAR(f.per_band[0][1], 4.60517018598809, 1e-12);
    EXPECT_EQ(f.label, 1);
    EXPECT_EQ(f.floored, 0);
}

TEST(ExtractFeatures, ScalingShiftsByTwoLogC) {
    Rng rng(12);
    const Matrix w = oracle::random_matrix(rng, 3, 2);
    const EegEpoch e = random_epoch(rng, 3, 60, 2);
    EegEpoch scaled = e;
    scaled.data = 7.0 * e.data;
    const CspModel model = single_band_model(w);
    const FeatureVector a = extract_features(model, std::span<const EegEpoch>(&e, 1));
    const FeatureVector b = extract_features(model, std::span<const EegEpoch>(&scaled, 1));
    for (std::size_t m = 0; m < 2; ++m) {
        EXPECT_NEAR(b.per_band[0][m] - a.per_band[0][m], 2.0 * std::log(7.0), 1e-12);
    }
}

TEST(ExtractFeatures, DcOffsetInvariant) {
    Rng rng(13);
    const Matrix w = oracle::random_matrix(rng, 3, 2);
    const EegEpoch e = random_epoch(rng, 3, 60, 1);
    EegEpoch shifted = e;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t t = 0; t < 60; ++t) shifted.data(c, t) += 5.0 * static_cast<double>(c + 1);
    }
    const CspModel model = single_band_model(w);
    const FeatureVector a = extract_features(model, std::span<const EegEpoch>(&e, 1));
    const FeatureVector b = extract_features(model, std::span<const EegEpoch>(&shifted, 1));
    for (std::size_t m = 0; m < 2; ++m) {
        EXPECT_NEAR(a.per_band[0][m], b.per_band[0][m], 1e-10);
    }
}

TEST(ExtractFeatures, ZeroVarianceIsFlooredAndCounted) {
    const EegEpoch flat{Matrix(2, 10), 100.0, 1};
    const FeatureVector f = extract_features(single_band_model(Matrix::identity(2)), std::span<const EegEpoch>(&flat, 1));
    EXPECT_EQ(f.floored, 2);
    EXPECT_NEAR(f.per_band[0][0], std::log(1e-12), 1e-12);
}

TEST(TrainCsp, SeparatesTenHertzPowerByChannel) {
    Rng rng(77);
    const std::size_t channels = 4;
    const std::size_t samples = 200;
    std::vector<EegEpoch> trials;
    for (int i = 0; i < 40; ++i) {
        const int label = i % 2 == 0 ? 1 : 2;
        Matrix x = oracle::random_matrix(rng, channels, samples);
        const std::size_t carrier = label == 1 ? 0 : 1;
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t t = 0; t < samples; ++t) {
            x(carrier, t) += 3.0 * std::sin(2.0 * std::numbers::pi * 10.0 * static_cast<double>(t) / 100.0 + phase);
        }
        trials.push_back({x, 100.0, label});
    }
    const CspModel model = train_csp({trials}, CspOptions{1, 1e-4});
    ASSERT_EQ(model.per_band.size(), 1u);
    ASSERT_EQ(model.per_band[0].cols(), 2u);

    std::vector<double> f1;
    std::vector<double> f2;
    for (const EegEpoch& e : trials) {
        const FeatureVector f = extract_features(model, std::span<const EegEpoch>(&e, 1));
        (e.label == 1 ? f1 : f2).push_back(f.per_band[0][0]);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto ss = [](const std::vector<double>& v, double m) {
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s;
    };
    const double m1 = mean(f1);
    const double m2 = mean(f2);
    const double pooled = std::sqrt((ss(f1, m1) + ss(f2, m2)) / static_cast<double>(f1.size() + f2.size() - 2));
    EXPECT_GE(std::abs(m1 - m2), 3.0 * pooled);
}

TEST(TrainCsp, ClampsPairsAndValidatesLabels) {
    Rng rng(5);
    std::vector<EegEpoch> trials;
    for (int i = 0; i < 6; ++i) {
        trials.push_back(random_epoch(rng, 3, 50, i % 2 == 0 ? 1 : 2));
    }
    const CspModel model = train_csp({trials}, CspOptions{16, 1e-4});
    EXPECT_EQ(model.m_pairs, 1);
    EXPECT_EQ(model.feature_dim(), 2u);
    trials[0].label = 3;
    EXPECT_ANY_THROW(train_csp({trials}, CspOptions{}));
}

}  // namespace
}  // namespace sgfb
