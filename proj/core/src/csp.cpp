#include "sgfb/csp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgfb/error.hpp"
#include "sgfb/linalg.hpp"

namespace sgfb {

namespace {

constexpr double kVarianceFloor = 1e-12;

struct CspSolution {
    Vector eigenvalues;
    Matrix filters;  // all channels' filters, descending eigenvalue order
};

CspSolution solve_generalized(const Matrix& sigma1, const Matrix& sigma2, double shrinkage) {
    if (sigma1.rows() != sigma2.rows() || !sigma1.is_square() || !sigma2.is_square()) {
        throw DimensionError("fit_csp: class covariances must be square and equally sized");
    }
    const Matrix s1 = shrink(sigma1, shrinkage);
    const Matrix s2 = shrink(sigma2, shrinkage);
    const Matrix composite = s1 + s2;

    Matrix p;
    try {
        p = whiten(composite);
    } catch (const RankDeficiencyError& e) {
        throw RankDeficiencyError(std::string("fit_csp: composite covariance is rank deficient after shrinkage: ") +
                                      e.what(),
                                  e.eigenvalue());
    }
    Matrix whitened = p * s1 * p.transposed();
    // Symmetrise away rounding before the symmetric solver.
    for (std::size_t i = 0; i < whitened.rows(); ++i) {
        for (std::size_t j = i + 1; j < whitened.cols(); ++j) {
            const double m = 0.5 * (whitened(i, j) + whitened(j, i));
            whitened(i, j) = m;
            whitened(j, i) = m;
        }
    }
    SymEigResult eig = sym_eig(whitened);
    return {std::move(eig.eigenvalues), p.transposed() * eig.eigenvectors};
}

}  // namespace

Vector FeatureVector::flattened() const {
    Vector out;
    for (const Vector& z : per_band) {
        out.insert(out.end(), z.begin(), z.end());
    }
    return out;
}

Matrix normalized_covariance(const Matrix& x) {
    Matrix c = gram_rows(x);
    const double tr = trace(c);
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw NumericError("normalized_covariance: trace of X X^T is zero (all-zero epoch)");
    }
    return (1.0 / tr) * c;
}

Matrix remove_row_means(const Matrix& x) {
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        double mean = 0.0;
        for (double v : row) {
            mean += v;
        }
        mean /= static_cast<double>(row.size());
        for (double& v : row) {
            v -= mean;
        }
    }
    return out;
}

Matrix class_covariance(std::span<const EegEpoch> trials, int label) {
    Matrix sum;
    std::size_t count = 0;
    for (const EegEpoch& trial : trials) {
        if (trial.label != label) {
            continue;
        }
        Matrix c = normalized_covariance(remove_row_means(trial.data));
        if (sum.empty()) {
            sum = std::move(c);
        } else {
            if (c.rows() != sum.rows()) {
                throw DimensionError("class_covariance: trials disagree on channel count");
            }
            sum = sum + c;
        }
        ++count;
    }
    if (count == 0) {
        throw EmptyClassError("class_covariance: no trials for class " + std::to_string(label));
    }
    return (1.0 / static_cast<double>(count)) * sum;
}

Matrix shrink(const Matrix& s, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ParameterError("shrinkage must lie in [0, 1]");
    }
    Matrix out = (1.0 - gamma) * s;
    const double target = gamma * trace(s) / static_cast<double>(s.rows());
    for (std::size_t i = 0; i < out.rows(); ++i) {
        out(i, i) += target;
    }
    return out;
}

Matrix fit_csp(const Matrix& sigma1, const Matrix& sigma2, int m_pairs, double shrinkage) {
    const std::size_t channels = sigma1.rows();
    if (m_pairs < 1 || 2 * static_cast<std::size_t>(m_pairs) > channels) {
        throw ParameterError("fit_csp: 2M = " + std::to_string(2 * m_pairs) + " must lie in [2, " +
                             std::to_string(channels) + "]");
    }
    const CspSolution sol = solve_generalized(sigma1, sigma2, shrinkage);
    const auto m = static_cast<std::size_t>(m_pairs);
    Matrix w(channels, 2 * m);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t r = 0; r < channels; ++r) {
            w(r, k) = sol.filters(r, k);
            w(r, m + k) = sol.filters(r, channels - m + k);
        }
    }
    return w;
}

Vector csp_eigenvalues(const Matrix& sigma1, const Matrix& sigma2, double shrinkage) {
    return solve_generalized(sigma1, sigma2, shrinkage).eigenvalues;
}

int effective_m_pairs(int requested, std::size_t channels) {
    return std::max(1, std::min(requested, static_cast<int>(channels / 2)));
}

CspModel train_csp(const std::vector<std::vector<EegEpoch>>& band_trials, const CspOptions& options) {
    if (band_trials.empty() || band_trials.front().empty()) {
        throw ParameterError("train_csp: no training trials");
    }
    const std::size_t channels = band_trials.front().front().channels();
    CspModel model;
    model.m_pairs = effective_m_pairs(options.m_pairs, channels);
    model.per_band.reserve(band_trials.size());
    for (const auto& trials : band_trials) {
        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (trials[i].label != 1 && trials[i].label != 2) {
                throw ParameterError("train_csp: trial " + std::to_string(i) + " has label " +
                                     std::to_string(trials[i].label) + ", expected 1 or 2");
            }
        }
        const Matrix sigma1 = class_covariance(trials, 1);
        const Matrix sigma2 = class_covariance(trials, 2);
        model.per_band.push_back(fit_csp(sigma1, sigma2, model.m_pairs, options.shrinkage));
    }
    return model;
}

FeatureVector extract_features(const CspModel& model, std::span<const EegEpoch> band_epochs) {
    if (band_epochs.size() != model.band_count()) {
        throw DimensionError("extract_features: expected " + std::to_string(model.band_count()) +
                             " band epochs, got " + std::to_string(band_epochs.size()));
    }
    FeatureVector fv;
    fv.per_band.reserve(model.band_count());
    if (!band_epochs.empty() && band_epochs.front().label != 0) {
        fv.label = band_epochs.front().label;
    }
    for (std::size_t b = 0; b < model.band_count(); ++b) {
        const Matrix& w = model.per_band[b];
        const Matrix& x = band_epochs[b].data;
        if (x.rows() != w.rows()) {
            throw DimensionError("extract_features: epoch has " + std::to_string(x.rows()) +
                                 " channels, model expects " + std::to_string(w.rows()));
        }
        const std::size_t samples = x.cols();
        Vector z(w.cols());
        Vector projected(samples);
        for (std::size_t m = 0; m < w.cols(); ++m) {
            std::fill(projected.begin(), projected.end(), 0.0);
            for (std::size_t c = 0; c < x.rows(); ++c) {
                const double wc = w(c, m);
                const auto row = x.row(c);
                for (std::size_t t = 0; t < samples; ++t) {
                    projected[t] += wc * row[t];
                }
            }
            double mean = 0.0;
            for (double v : projected) {
                mean += v;
            }
            mean /= static_cast<double>(samples);
            double var = 0.0;
            for (double v : projected) {
                var += (v - mean) * (v - mean);
            }
            var /= static_cast<double>(samples);
            if (var < kVarianceFloor) {
                var = kVarianceFloor;
                ++fv.floored;
            }
            z[m] = std::log(var);
        }
        fv.per_band.push_back(std::move(z));
    }
    return fv;
}

}  // namespace sgfb
