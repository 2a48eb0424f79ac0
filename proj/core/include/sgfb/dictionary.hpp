#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sgfb/csp.hpp"
#include "sgfb/matrix.hpp"

namespace sgfb {

// Composite dictionary: one 2M x N block per band, all blocks sharing the
// same N training columns. Columns are grouped class 1 first, then class 2.
struct BandDictionary {
    std::vector<Matrix> blocks;
    std::vector<int> column_class;
    std::vector<int> column_trial;
    // Factor applied to each column by normalize_columns (1 when untouched).
    std::vector<Vector> column_scale;
    // (band, column) pairs whose norm was zero at normalisation time.
    std::vector<std::pair<std::size_t, std::size_t>> zero_columns;

    std::size_t band_count() const noexcept { return blocks.size(); }
    std::size_t columns() const noexcept { return column_class.size(); }
    std::size_t feature_dim() const noexcept { return blocks.empty() ? 0 : blocks.front().rows(); }
};

// Block b column i holds band b of the i-th training vector after grouping by
// class (stable within a class). trial_ids, when given, label the columns;
// otherwise the input position is used. Throws EmptyClassError when either
// class is missing.
BandDictionary build_dictionary(std::span<const FeatureVector> train, std::span<const int> trial_ids = {});

// Scales every column whose l2 norm exceeds 1 down to unit norm; shorter
// columns are left alone. Zero columns stay zero and are flagged.
BandDictionary normalize_columns(BandDictionary dict);

// Same rule applied to a test vector.
Vector cap_unit_norm(Vector v);
std::vector<Vector> normalize_sample(std::vector<Vector> y_bands);

// max_{j,k} |<dl_j, dr_k>|
double mutual_coherence(const Matrix& dl, const Matrix& dr);

// Columns of band `band` whose column_class equals `label`.
Matrix class_columns(const BandDictionary& dict, std::size_t band, int label);

}  // namespace sgfb
