#include "sgfb/dictionary.hpp"

#include <cmath>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

BandDictionary build_dictionary(std::span<const FeatureVector> train, std::span<const int> trial_ids) {
    if (!trial_ids.empty() && trial_ids.size() != train.size()) {
        throw DimensionError("build_dictionary: trial id count does not match training vectors");
    }
    if (train.empty()) {
        throw EmptyClassError("build_dictionary: no training vectors");
    }
    const std::size_t bands = train.front().per_band.size();
    if (bands == 0 || train.front().per_band.front().empty()) {
        throw DimensionError("build_dictionary: feature vectors are empty");
    }
    const std::size_t dim = train.front().per_band.front().size();

    std::vector<std::size_t> order;
    for (int label : {1, 2}) {
        const std::size_t before = order.size();
        for (std::size_t i = 0; i < train.size(); ++i) {
            if (!train[i].label) {
                throw ParameterError("build_dictionary: training vector " + std::to_string(i) + " has no label");
            }
            if (*train[i].label == label) {
                order.push_back(i);
            }
        }
        if (order.size() == before) {
            throw EmptyClassError("build_dictionary: no training vectors for class " + std::to_string(label));
        }
    }
    if (order.size() != train.size()) {
        throw ParameterError("build_dictionary: labels must be 1 or 2");
    }

    BandDictionary dict;
    dict.blocks.assign(bands, Matrix(dim, order.size()));
    dict.column_scale.assign(bands, Vector(order.size(), 1.0));
    for (std::size_t col = 0; col < order.size(); ++col) {
        const FeatureVector& fv = train[order[col]];
        if (fv.per_band.size() != bands) {
            throw DimensionError("build_dictionary: inconsistent band count");
        }
        for (std::size_t b = 0; b < bands; ++b) {
            if (fv.per_band[b].size() != dim) {
                throw DimensionError("build_dictionary: inconsistent feature dimension");
            }
            dict.blocks[b].set_col(col, fv.per_band[b]);
        }
        dict.column_class.push_back(*fv.label);
        dict.column_trial.push_back(trial_ids.empty() ? static_cast<int>(order[col]) : trial_ids[order[col]]);
    }
    return dict;
}

BandDictionary normalize_columns(BandDictionary dict) {
    dict.zero_columns.clear();
    dict.column_scale.assign(dict.band_count(), Vector(dict.columns(), 1.0));
    for (std::size_t b = 0; b < dict.band_count(); ++b) {
        Matrix& block = dict.blocks[b];
        for (std::size_t j = 0; j < block.cols(); ++j) {
            const double n = norm2(block.col(j));
            if (n == 0.0) {
                dict.zero_columns.emplace_back(b, j);
            } else if (n > 1.0) {
                const double s = 1.0 / n;
                for (std::size_t r = 0; r < block.rows(); ++r) {
                    block(r, j) *= s;
                }
                dict.column_scale[b][j] = s;
            }
        }
    }
    return dict;
}

Vector cap_unit_norm(Vector v) {
    const double n = norm2(v);
    if (n > 1.0) {
        for (double& x : v) {
            x /= n;
        }
    }
    return v;
}

std::vector<Vector> normalize_sample(std::vector<Vector> y_bands) {
    for (Vector& y : y_bands) {
        y = cap_unit_norm(std::move(y));
    }
    return y_bands;
}

double mutual_coherence(const Matrix& dl, const Matrix& dr) {
    if (dl.rows() != dr.rows()) {
        throw DimensionError("mutual_coherence: row counts " + std::to_string(dl.rows()) + " and " +
                             std::to_string(dr.rows()) + " differ");
    }
    double best = 0.0;
    for (std::size_t j = 0; j < dl.cols(); ++j) {
        for (std::size_t k = 0; k < dr.cols(); ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < dl.rows(); ++r) {
                s += dl(r, j) * dr(r, k);
            }
            best = std::max(best, std::abs(s));
        }
    }
    return best;
}

Matrix class_columns(const BandDictionary& dict, std::size_t band, int label) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < dict.columns(); ++j) {
        if (dict.column_class[j] == label) {
            cols.push_back(j);
        }
    }
    if (cols.empty()) {
        throw EmptyClassError("class_columns: no columns for class " + std::to_string(label));
    }
    const Matrix& block = dict.blocks.at(band);
    Matrix out(block.rows(), cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
        for (std::size_t r = 0; r < block.rows(); ++r) {
            out(r, k) = block(r, cols[k]);
        }
    }
    return out;
}

}  // namespace sgfb
