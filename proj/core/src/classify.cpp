#include "sgfb/classify.hpp"

#include <algorithm>
#include <cmath>

#include "sgfb/error.hpp"

namespace sgfb {

namespace {

double class_residual_sq(std::span<const double> y, const Matrix& d, std::span<const int> column_class,
                         std::span<const double> code, int label) {
    Vector r(y.begin(), y.end());
    for (std::size_t j = 0; j < d.cols(); ++j) {
        if (column_class[j] != label || code[j] == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < d.rows(); ++i) {
            r[i] -= d(i, j) * code[j];
        }
    }
    return dot(r, r);
}

Classification decide(double r1_sq, double r2_sq) {
    Classification out;
    out.residuals = {std::sqrt(r1_sq), std::sqrt(r2_sq)};
    const double scale = std::max({1.0, out.residuals[0], out.residuals[1]});
    out.tie = std::abs(out.residuals[0] - out.residuals[1]) <= 1e-12 * scale;
    out.label = (out.tie || out.residuals[0] < out.residuals[1]) ? 1 : 2;
    return out;
}

}  // namespace

Classification classify(std::span<const Vector> y_bands, const BandDictionary& dict, const SparseCode& code) {
    if (y_bands.size() != dict.band_count() || code.coeffs.rows() != dict.columns() ||
        code.coeffs.cols() != dict.band_count()) {
        throw DimensionError("classify: sample, dictionary and code shapes disagree");
    }
    double r1 = 0.0;
    double r2 = 0.0;
    for (std::size_t b = 0; b < dict.band_count(); ++b) {
        if (y_bands[b].size() != dict.blocks[b].rows()) {
            throw DimensionError("classify: band vector length disagrees with the dictionary");
        }
        const Vector ub = code.coeffs.col(b);
        r1 += class_residual_sq(y_bands[b], dict.blocks[b], dict.column_class, ub, 1);
        r2 += class_residual_sq(y_bands[b], dict.blocks[b], dict.column_class, ub, 2);
    }
    return decide(r1, r2);
}

Classification src_classify(std::span<const double> y, const Matrix& x, std::span<const int> column_class,
                            std::span<const double> code) {
    if (y.size() != x.rows() || column_class.size() != x.cols() || code.size() != x.cols()) {
        throw DimensionError("src_classify: sample, dictionary and code shapes disagree");
    }
    return decide(class_residual_sq(y, x, column_class, code, 1), class_residual_sq(y, x, column_class, code, 2));
}

}  // namespace sgfb
