#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracle/oracle.hpp"
#include "sgfb/classify.hpp"
#include "sgfb/error.hpp"

namespace sgfb {
namespace {

TEST(Classify, SelfRepresentationPicksOwnClass) {
    Rng rng(50);
    const BandDictionary dict =
        oracle::dictionary_from_blocks({oracle::random_unit_columns(rng, 6, 10), oracle::random_unit_columns(rng, 6, 10)});
    SgfbHyperparams hp;
    hp.lambda = 1e-4;
    hp.lambda1 = 0.0;
    for (std::size_t col : {1u, 3u, 6u, 8u}) {
        const std::vector<Vector> y{dict.blocks[0].col(col), dict.blocks[1].col(col)};
        const Classification c = classify(y, dict, sgfb_solve(y, dict, hp));
        EXPECT_EQ(c.label, dict.column_class[col]);
        EXPECT_LE(c.residuals[static_cast<std::size_t>(c.label - 1)], 1e-3);
        EXPECT_FALSE(c.tie);
    }
}

TEST(Classify, ZeroCodeIsTieTowardClassOne) {
    const BandDictionary dict = oracle::dictionary_from_blocks({Matrix{{1.0, 0.0}, {0.0, 1.0}}, Matrix{{0.0, 1.0}, {1.0, 0.0}}});
    const std::vector<Vector> y{{3.0, 0.0}, {0.0, 4.0}};
    SparseCode code;
    code.coeffs = Matrix(2, 2);
    const Classification c = classify(y, dict, code);
    EXPECT_TRUE(c.tie);
    EXPECT_EQ(c.label, 1);
    EXPECT_DOUBLE_EQ(c.residuals[0], 5.0);
    EXPECT_DOUBLE_EQ(c.residuals[1], 5.0);
}

TEST(Classify, ShapeMismatchThrows) {
    const BandDictionary dict = oracle::dictionary_from_blocks({Matrix{{1.0, 0.0}, {0.0, 1.0}}});
    SparseCode code;
    code.coeffs = Matrix(3, 1);
    const std::vector<Vector> y{{1.0, 0.0}};
    EXPECT_THROW(classify(y, dict, code), DimensionError);
}

// Two classes around opposite mean directions in every band.
struct Synthetic {
    std::vector<std::vector<Vector>> samples;  // [trial][band]
    std::vector<int> labels;
};

Synthetic separable(Rng& rng, std::size_t trials, std::size_t bands, std::size_t dim,
                    const std::vector<Vector>& centres) {
    Synthetic s;
    for (std::size_t t = 0; t < trials; ++t) {
        const int label = t % 2 == 0 ? 1 : 2;
        std::vector<Vector> y;
        for (std::size_t b = 0; b < bands; ++b) {
            Vector v = centres[b * 2 + static_cast<std::size_t>(label - 1)];
            for (double& x : v) x += 0.25 * rng.normal();
            y.push_back(cap_unit_norm(v));
        }
        s.samples.push_back(std::move(y));
        s.labels.push_back(label);
    }
    return s;
}

TEST(Classify, AgreesWithNearestNeighbourOnSeparableData) {
    Rng rng(51);
    const std::size_t bands = 3;
    const std::size_t dim = 4;
    std::vector<Vector> centres;
    for (std::size_t i = 0; i < 2 * bands; ++i) {
        centres.push_back(oracle::random_vector(rng, dim, 1.0));
    }
    const Synthetic train = separable(rng, 40, bands, dim, centres);
    const Synthetic test = separable(rng, 60, bands, dim, centres);

    std::vector<FeatureVector> features;
    for (std::size_t t = 0; t < train.samples.size(); ++t) {
        FeatureVector f;
        f.per_band = train.samples[t];
        f.label = train.labels[t];
        features.push_back(f);
    }
    const BandDictionary dict = normalize_columns(build_dictionary(features));
    const auto grams = dictionary_grams(dict);
    SgfbHyperparams hp;
    hp.lambda = 0.05;
    hp.lambda1 = 0.1;

    int agree = 0;
    for (std::size_t t = 0; t < test.samples.size(); ++t) {
        const auto& y = test.samples[t];
        const Classification c = classify(y, dict, sgfb_solve(y, dict, grams, hp));
        double best = std::numeric_limits<double>::infinity();
        int nn = 0;
        for (std::size_t j = 0; j < train.samples.size(); ++j) {
            double d = 0.0;
            for (std::size_t b = 0; b < bands; ++b) {
                for (std::size_t k = 0; k < dim; ++k) {
                    const double e = y[b][k] - train.samples[j][b][k];
                    d += e * e;
                }
            }
            if (d < best) {
                best = d;
                nn = train.labels[j];
            }
        }
        agree += c.label == nn ? 1 : 0;
    }
    EXPECT_GE(agree, 54);
}

TEST(SrcClassify, SelfRepresentationAndNullCode) {
    Rng rng(52);
    const Matrix x = oracle::random_unit_columns(rng, 5, 8);
    const std::vector<int> cls{1, 1, 1, 1, 2, 2, 2, 2};
    for (std::size_t col : {0u, 5u}) {
        const Vector y = x.col(col);
        const Vector theta = src_solve(y, x, 1e-4);
        EXPECT_EQ(src_classify(y, x, cls, theta).label, cls[col]);
    }
    const Vector y = x.col(2);
    const Classification c = src_classify(y, x, cls, Vector(8, 0.0));
    EXPECT_TRUE(c.tie);
    EXPECT_EQ(c.label, 1);
}

}  // namespace
}  // namespace sgfb
