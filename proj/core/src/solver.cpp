#include "sgfb/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "sgfb/error.hpp"
#include "sgfb/linalg.hpp"

namespace sgfb {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Quadratic-plus-l1 model with Hessian h + shift * I, restricted to `support`.
class LassoModel {
public:
    LassoModel(const Matrix& h, double shift, std::span<const double> c, double lambda)
        : h_(h), shift_(shift), c_(c), lambda_(lambda) {}

    double hess(std::size_t i, std::size_t j) const { return h_(i, j) + (i == j ? shift_ : 0.0); }
    double lambda() const { return lambda_; }
    std::size_t size() const { return c_.size(); }
    double linear(std::size_t i) const { return c_[i]; }

    // Objective with x zero outside `support`.
    double value(std::span<const double> x, std::span<const std::size_t> support) const {
        double quad = 0.0;
        double lin = 0.0;
        double l1 = 0.0;
        for (std::size_t a : support) {
            const double xa = x[a];
            if (xa == 0.0) {
                continue;
            }
            lin += c_[a] * xa;
            l1 += std::abs(xa);
            double row = 0.0;
            for (std::size_t b : support) {
                row += hess(a, b) * x[b];
            }
            quad += xa * row;
        }
        return 0.5 * quad + lin + lambda_ * l1;
    }

    // Gradient of the smooth part, x zero outside `support`.
    Vector gradient(std::span<const double> x, std::span<const std::size_t> support) const {
        Vector g(c_.begin(), c_.end());
        for (std::size_t b : support) {
            const double xb = x[b];
            if (xb == 0.0) {
                continue;
            }
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += h_(i, b) * xb;
            }
            g[b] += shift_ * xb;
        }
        return g;
    }

private:
    const Matrix& h_;
    double shift_;
    std::span<const double> c_;
    double lambda_;
};

class FeatureSignSearch {
public:
    FeatureSignSearch(const LassoModel& model, std::span<const double> x0, const FeatureSignOptions& options)
        : model_(model),
          n_(model.size()),
          x_(n_, 0.0),
          theta_(n_, 0.0),
          blocked_(n_, false),
          options_(options) {
        if (!x0.empty()) {
            if (x0.size() != n_) {
                throw DimensionError("feature_sign_search: warm start has wrong length");
            }
            for (std::size_t i = 0; i < n_; ++i) {
                if (x0[i] != 0.0) {
                    x_[i] = x0[i];
                    theta_[i] = sign_of(x0[i]);
                    active_.push_back(i);
                }
            }
        }
        double scale = std::max(1.0, model.lambda());
        for (std::size_t i = 0; i < n_; ++i) {
            scale = std::max(scale, std::abs(model.linear(i)));
        }
        tol_ = options.optimality_tol * scale;
    }

    FeatureSignResult run() {
        FeatureSignResult result;
        const int max_steps = options_.max_steps > 0 ? options_.max_steps : static_cast<int>(20 * n_ + 200);
        for (; result.steps < max_steps; ++result.steps) {
            const Vector g = model_.gradient(x_, active_);
            const bool active_optimal = std::all_of(active_.begin(), active_.end(), [&](std::size_t j) {
                return std::abs(g[j] + model_.lambda() * theta_[j]) <= tol_;
            });
            if (active_optimal && !activate_best(g)) {
                break;
            }
            if (!feature_sign_step(g, result)) {
                break;
            }
        }
        result.x = x_;
        result.converged = is_optimal();
        return result;
    }

private:
    // Activates the inactive coordinate with the largest gradient magnitude
    // above lambda. Returns false when there is none.
    bool activate_best(std::span<const double> g) {
        std::size_t best = n_;
        double best_mag = model_.lambda() + tol_;
        for (std::size_t j = 0; j < n_; ++j) {
            if (x_[j] != 0.0 || blocked_[j] || is_active(j)) {
                continue;
            }
            if (std::abs(g[j]) > best_mag) {
                best = j;
                best_mag = std::abs(g[j]);
            }
        }
        if (best == n_) {
            return false;
        }
        theta_[best] = g[best] > 0.0 ? -1.0 : 1.0;
        active_.push_back(best);
        return true;
    }

    bool is_active(std::size_t j) const { return std::find(active_.begin(), active_.end(), j) != active_.end(); }

    bool feature_sign_step(std::span<const double> g, FeatureSignResult& result) {
        const std::size_t k = active_.size();
        Matrix ha(k, k);
        Vector rhs(k);
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                ha(a, b) = model_.hess(active_[a], active_[b]);
            }
            rhs[a] = -(model_.linear(active_[a]) + model_.lambda() * theta_[active_[a]]);
        }

        Vector target;
        try {
            target = solve_spd(ha, rhs);
        } catch (const DegenerateSystemError&) {
            ++result.degenerate_steps;
            return null_space_step(ha, g);
        }

        const double current = model_.value(x_, active_);
        std::vector<double> breaks{1.0};
        for (std::size_t a = 0; a < k; ++a) {
            const double from = x_[active_[a]];
            if (from != 0.0 && sign_of(target[a]) != sign_of(from)) {
                breaks.push_back(from / (from - target[a]));
            }
        }
        std::sort(breaks.begin(), breaks.end());

        Vector best_x = x_;
        double best_value = current;
        bool improved = false;
        Vector trial = x_;
        for (double t : breaks) {
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t j = active_[a];
                const double from = x_[j];
                double v = from + t * (target[a] - from);
                if (from != 0.0 && sign_of(target[a]) != sign_of(from) && from / (from - target[a]) == t) {
                    v = 0.0;
                }
                trial[j] = v;
            }
            const double value = model_.value(trial, active_);
            if (value < best_value) {
                best_value = value;
                best_x = trial;
                improved = true;
            }
        }
        if (!improved) {
            // Only rounding can leave the model without descent here.
            return false;
        }
        x_ = std::move(best_x);
        std::fill(blocked_.begin(), blocked_.end(), false);
        prune();
        return true;
    }

    // Singular active system: follow a null direction of the active Hessian,
    // oriented downhill, to the first coefficient that reaches zero. When no
    // downhill crossing exists, the most recently activated zero coefficient
    // is dropped and barred from re-entry until the next descent step.
    bool null_space_step(const Matrix& ha, std::span<const double> g) {
        const std::size_t k = active_.size();
        const SymEigResult eig = sym_eig(ha);
        Vector dir(k);
        for (std::size_t a = 0; a < k; ++a) {
            dir[a] = eig.eigenvectors(a, k - 1);
        }
        auto slope = [&](double s) {
            double v = 0.0;
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t j = active_[a];
                const double d = s * dir[a];
                v += g[j] * d + model_.lambda() * (x_[j] != 0.0 ? sign_of(x_[j]) * d : std::abs(d));
            }
            return v;
        };
        const double orient = slope(1.0) <= slope(-1.0) ? 1.0 : -1.0;
        const double rate = slope(orient);

        double step = std::numeric_limits<double>::infinity();
        std::size_t hit = k;
        for (std::size_t a = 0; a < k; ++a) {
            const double xj = x_[active_[a]];
            const double d = orient * dir[a];
            if (xj != 0.0 && xj * d < 0.0) {
                const double t = -xj / d;
                if (t < step) {
                    step = t;
                    hit = a;
                }
            }
        }

        if (hit < k && rate <= tol_) {
            Vector moved = x_;
            for (std::size_t a = 0; a < k; ++a) {
                moved[active_[a]] += step * orient * dir[a];
            }
            moved[active_[hit]] = 0.0;
            if (model_.value(moved, active_) <= model_.value(x_, active_)) {
                x_ = std::move(moved);
                std::fill(blocked_.begin(), blocked_.end(), false);
                prune();
                return true;
            }
        }

        for (std::size_t a = k; a-- > 0;) {
            const std::size_t j = active_[a];
            if (x_[j] == 0.0) {
                blocked_[j] = true;
                theta_[j] = 0.0;
                active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(a));
                return true;
            }
        }
        return false;
    }

    void prune() {
        std::vector<std::size_t> kept;
        kept.reserve(active_.size());
        for (std::size_t j : active_) {
            if (x_[j] != 0.0) {
                kept.push_back(j);
                theta_[j] = sign_of(x_[j]);
            } else {
                theta_[j] = 0.0;
            }
        }
        active_ = std::move(kept);
    }

    bool is_optimal() const {
        const Vector g = model_.gradient(x_, active_);
        for (std::size_t j = 0; j < n_; ++j) {
            const double r = x_[j] != 0.0 ? std::abs(g[j] + model_.lambda() * sign_of(x_[j]))
                                          : std::abs(g[j]) - model_.lambda();
            if (r > 1e3 * tol_) {
                return false;
            }
        }
        return true;
    }

    const LassoModel& model_;
    std::size_t n_;
    Vector x_;
    Vector theta_;
    std::vector<bool> blocked_;
    std::vector<std::size_t> active_;  // activation order
    FeatureSignOptions options_;
    double tol_ = 0.0;
};

void check_problem(std::span<const Vector> y_bands, const BandDictionary& dict) {
    if (dict.band_count() == 0 || dict.columns() == 0) {
        throw DimensionError("sgfb: dictionary is empty");
    }
    if (y_bands.size() != dict.band_count()) {
        throw DimensionError("sgfb: expected " + std::to_string(dict.band_count()) + " band vectors, got " +
                             std::to_string(y_bands.size()));
    }
    for (std::size_t b = 0; b < y_bands.size(); ++b) {
        if (y_bands[b].size() != dict.blocks[b].rows() || dict.blocks[b].cols() != dict.columns()) {
            throw DimensionError("sgfb: band " + std::to_string(b) + " shape disagrees with the dictionary");
        }
        require_finite(y_bands[b], "sgfb: test vector");
    }
}

Vector band_column(const Matrix& u, std::size_t b) { return u.col(b); }

std::string trace_text(const Vector& trace) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << (i ? "," : "") << trace[i];
    }
    return os.str();
}

}  // namespace

void validate(const SgfbHyperparams& hp) {
    if (!std::isfinite(hp.lambda) || hp.lambda < 0.0) {
        throw ParameterError("lambda must be finite and non-negative");
    }
    if (!std::isfinite(hp.lambda1) || hp.lambda1 < 0.0) {
        throw ParameterError("lambda1 must be finite and non-negative");
    }
    if (hp.max_outer_iters < 1) {
        throw ParameterError("max_outer_iters must be at least 1");
    }
    if (!(hp.tol >= 0.0) || !(hp.tol_kkt > 0.0)) {
        throw ParameterError("solver tolerances must be non-negative (tol_kkt positive)");
    }
}

Matrix centering_matrix(std::size_t bands) {
    if (bands == 0) {
        throw DimensionError("centering_matrix: need at least one band");
    }
    Matrix c = Matrix::identity(bands);
    const double inv = 1.0 / static_cast<double>(bands);
    for (double& v : c.data()) {
        v -= inv;
    }
    return c * c;
}

double centering_sum(const Matrix& u) {
    const std::size_t n = u.rows();
    const std::size_t bands = u.cols();
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double mean = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            mean += u(r, b);
        }
        mean /= static_cast<double>(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            const double d = u(r, b) - mean;
            total += d * d;
        }
    }
    return total;
}

double centering_trace(const Matrix& u, const Matrix& m) {
    if (m.rows() != u.cols() || !m.is_square()) {
        throw DimensionError("centering_trace: M must be B x B for u of width B");
    }
    double tr = 0.0;
    for (std::size_t r = 0; r < u.rows(); ++r) {
        const auto ur = u.row(r);
        for (std::size_t a = 0; a < m.rows(); ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < m.cols(); ++b) {
                s += m(a, b) * ur[b];
            }
            tr += ur[a] * s;
        }
    }
    return tr;
}

double objective_value(const Matrix& u, std::span<const Vector> y_bands, const BandDictionary& dict,
                       const SgfbHyperparams& hp) {
    check_problem(y_bands, dict);
    if (u.rows() != dict.columns() || u.cols() != dict.band_count()) {
        throw DimensionError("objective_value: u must be N x B");
    }
    double data = 0.0;
    double l1 = 0.0;
    for (std::size_t b = 0; b < dict.band_count(); ++b) {
        const Matrix& d = dict.blocks[b];
        Vector r = y_bands[b];
        for (std::size_t j = 0; j < d.cols(); ++j) {
            const double ujb = u(j, b);
            if (ujb == 0.0) {
                continue;
            }
            l1 += std::abs(ujb);
            for (std::size_t i = 0; i < d.rows(); ++i) {
                r[i] -= d(i, j) * ujb;
            }
        }
        data += 0.5 * dot(r, r);
    }
    double coupling = 0.0;
    if (hp.lambda1 != 0.0) {
        coupling = 0.5 * hp.lambda1 * centering_trace(u, centering_matrix(dict.band_count()));
    }
    return data + hp.lambda * l1 + coupling;
}

std::vector<Matrix> dictionary_grams(const BandDictionary& dict) {
    std::vector<Matrix> grams;
    grams.reserve(dict.band_count());
    for (const Matrix& block : dict.blocks) {
        grams.push_back(gram_cols(block));
    }
    return grams;
}

double kkt_violation(const Matrix& u, std::span<const Vector> y_bands, const BandDictionary& dict,
                     const SgfbHyperparams& hp) {
    check_problem(y_bands, dict);
    const std::size_t bands = dict.band_count();
    const Matrix m = centering_matrix(bands);
    double worst = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
        const Matrix& d = dict.blocks[b];
        const Vector ub = band_column(u, b);
        Vector r = d * ub;
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] -= y_bands[b][i];
        }
        Vector grad = multiply_transposed(d, r);
        for (std::size_t j = 0; j < grad.size(); ++j) {
            double coupling = 0.0;
            for (std::size_t a = 0; a < bands; ++a) {
                coupling += m(b, a) * u(j, a);
            }
            grad[j] += hp.lambda1 * coupling;
            const double v = ub[j] != 0.0 ? std::abs(grad[j] + hp.lambda * sign_of(ub[j]))
                                          : std::max(0.0, std::abs(grad[j]) - hp.lambda);
            worst = std::max(worst, v);
        }
    }
    return worst;
}

FeatureSignResult feature_sign_search(const Matrix& h, std::span<const double> c, double lambda,
                                      std::span<const double> x0, const FeatureSignOptions& options) {
    if (!h.is_square() || h.rows() != c.size()) {
        throw DimensionError("feature_sign_search: Hessian and linear term disagree");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ParameterError("feature_sign_search: lambda must be finite and non-negative");
    }
    const LassoModel model(h, 0.0, c, lambda);
    return FeatureSignSearch(model, x0, options).run();
}

SparseCode sgfb_solve(std::span<const Vector> y_bands, const BandDictionary& dict, const SgfbHyperparams& hp) {
    const std::vector<Matrix> grams = dictionary_grams(dict);
    return sgfb_solve(y_bands, dict, grams, hp);
}

SparseCode sgfb_solve(std::span<const Vector> y_bands, const BandDictionary& dict, std::span<const Matrix> grams,
                      const SgfbHyperparams& hp) {
    validate(hp);
    check_problem(y_bands, dict);
    const std::size_t bands = dict.band_count();
    const std::size_t n = dict.columns();
    if (grams.size() != bands) {
        throw DimensionError("sgfb_solve: one Gram matrix per band required");
    }

    const Matrix m = centering_matrix(bands);
    std::vector<Vector> dty;
    dty.reserve(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        dty.push_back(multiply_transposed(dict.blocks[b], y_bands[b]));
    }

    SparseCode code;
    code.coeffs = Matrix(n, bands);
    double f = objective_value(code.coeffs, y_bands, dict, hp);
    code.objective_trace.push_back(f);

    Vector h(n);
    Vector c(n);
    for (int sweep = 1; sweep <= hp.max_outer_iters; ++sweep) {
        const double before = f;
        for (std::size_t b = 0; b < bands; ++b) {
            for (std::size_t j = 0; j < n; ++j) {
                double s = 0.0;
                for (std::size_t a = 0; a < bands; ++a) {
                    if (a != b) {
                        s += m(b, a) * code.coeffs(j, a);
                    }
                }
                h[j] = hp.lambda1 * s;
                c[j] = h[j] - dty[b][j];
            }
            const LassoModel model(grams[b], hp.lambda1 * m(b, b), c, hp.lambda);
            const Vector warm = code.coeffs.col(b);
            FeatureSignResult block = FeatureSignSearch(model, warm, FeatureSignOptions{}).run();
            code.degenerate_steps += block.degenerate_steps;

            Matrix candidate = code.coeffs;
            candidate.set_col(b, block.x);
            const double f_candidate = objective_value(candidate, y_bands, dict, hp);
            if (!std::isfinite(f_candidate)) {
                throw NumericError("sgfb_solve: objective became non-finite in sweep " + std::to_string(sweep) +
                                   ", band " + std::to_string(b) + "; trace: " + trace_text(code.objective_trace));
            }
            if (f_candidate <= f) {
                code.coeffs = std::move(candidate);
                f = f_candidate;
            }
        }
        code.objective_trace.push_back(f);
        code.iterations = sweep;
        code.kkt_violation = kkt_violation(code.coeffs, y_bands, dict, hp);
        if (before - f <= hp.tol * std::max(1.0, std::abs(before)) && code.kkt_violation <= hp.tol_kkt) {
            code.converged = true;
            break;
        }
    }

    code.objective = f;
    code.signs = Matrix(n, bands);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t b = 0; b < bands; ++b) {
            code.signs(j, b) = sign_of(code.coeffs(j, b));
        }
    }
    return code;
}

Vector src_solve(std::span<const double> y, const Matrix& x, double lambda) {
    if (y.size() != x.rows()) {
        throw DimensionError("src_solve: sample length does not match dictionary rows");
    }
    const Matrix gram = gram_cols(x);
    Vector c = multiply_transposed(x, y);
    for (double& v : c) {
        v = -v;
    }
    return feature_sign_search(gram, c, lambda).x;
}

}  // namespace sgfb
