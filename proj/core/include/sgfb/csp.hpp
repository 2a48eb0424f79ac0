#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sgfb/epoch.hpp"
#include "sgfb/matrix.hpp"

namespace sgfb {

struct CspOptions {
    int m_pairs = 16;
    double shrinkage = 1e-4;
};

struct CspModel {
    std::vector<Matrix> per_band;  // channels x 2M spatial filters per band
    int m_pairs = 0;

    std::size_t band_count() const noexcept { return per_band.size(); }
    std::size_t feature_dim() const noexcept { return 2 * static_cast<std::size_t>(m_pairs); }
};

struct FeatureVector {
    std::vector<Vector> per_band;  // log-variance features, 2M per band
    std::optional<int> label;
    int floored = 0;               // projections whose variance hit the 1e-12 floor

    Vector flattened() const;
};

// X X^T / trace(X X^T). Throws NumericError when the trace is zero.
Matrix normalized_covariance(const Matrix& x);

// Copy of x with every row's mean subtracted.
Matrix remove_row_means(const Matrix& x);

// Mean over the trials of `label` of the trace-normalised covariance of each
// mean-removed trial. Throws EmptyClassError when no trial carries `label`.
Matrix class_covariance(std::span<const EegEpoch> trials, int label);

// (1 - gamma) S + gamma * trace(S)/n * I
Matrix shrink(const Matrix& s, double gamma);

// Spatial filters W solving Sigma1 w = lambda (Sigma1 + Sigma2) w through
// whitening of the composite covariance. Columns hold the M filters with the
// largest eigenvalues followed by the M with the smallest, each normalised so
// w^T (Sigma1 + Sigma2) w = 1 (covariances taken after shrinkage).
Matrix fit_csp(const Matrix& sigma1, const Matrix& sigma2, int m_pairs, double shrinkage = 1e-4);

// Generalized eigenvalues of fit_csp in the same column order (diagnostic).
Vector csp_eigenvalues(const Matrix& sigma1, const Matrix& sigma2, double shrinkage = 1e-4);

// M actually used for `channels`: min(requested, channels / 2).
int effective_m_pairs(int requested, std::size_t channels);

// band_trials[b][i] is trial i filtered into band b. Labels must be 1 or 2.
CspModel train_csp(const std::vector<std::vector<EegEpoch>>& band_trials, const CspOptions& options);

// z_b[m] = log(var(w_m^T X_b)), biased variance after mean removal. Variances
// below 1e-12 are floored and counted in FeatureVector::floored.
FeatureVector extract_features(const CspModel& model, std::span<const EegEpoch> band_epochs);

}  // namespace sgfb
