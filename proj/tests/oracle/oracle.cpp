#include "oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgfb::oracle {

namespace {

// In-place elimination on an n x n row-major buffer with right-hand side.
bool eliminate(std::vector<double>& a, std::vector<double>& b, std::size_t n, double rel_pivot) {
    double scale = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) {
        scale = std::max(scale, std::abs(a[i]));
    }
    if (scale == 0.0) {
        return false;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) {
                piv = r;
            }
        }
        if (std::abs(a[piv * n + col]) < rel_pivot * scale) {
            return false;
        }
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(a[piv * n + k], a[col * n + k]);
            }
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) {
                continue;
            }
            for (std::size_t k = col; k < n; ++k) {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    return true;
}

}  // namespace

bool gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x,
                 double rel_pivot) {
    const std::size_t n = b.size();
    std::vector<double> flat(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != n) {
            throw std::invalid_argument("gauss_solve: matrix is not square");
        }
        std::copy(a[i].begin(), a[i].end(), flat.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    if (!eliminate(flat, b, n, rel_pivot)) {
        return false;
    }
    x = std::move(b);
    return true;
}

double reference_objective(const Matrix& u, const std::vector<Matrix>& blocks, const std::vector<Vector>& y,
                           double lambda, double lambda1) {
    const std::size_t bands = blocks.size();
    const std::size_t n = u.rows();
    double total = 0.0;
    for (std::size_t b = 0; b < bands; ++b) {
        for (std::size_t i = 0; i < blocks[b].rows(); ++i) {
            double fit = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                fit += blocks[b](i, j) * u(j, b);
            }
            total += 0.5 * (y[b][i] - fit) * (y[b][i] - fit);
        }
        for (std::size_t j = 0; j < n; ++j) {
            total += lambda * std::abs(u(j, b));
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double mean = 0.0;
        for (std::size_t b = 0; b < bands; ++b) {
            mean += u(j, b);
        }
        mean /= static_cast<double>(bands);
        for (std::size_t b = 0; b < bands; ++b) {
            total += 0.5 * lambda1 * (u(j, b) - mean) * (u(j, b) - mean);
        }
    }
    return total;
}

EnumerationResult enumerate_signs(const std::vector<Matrix>& blocks, const std::vector<Vector>& y, double lambda,
                                  double lambda1) {
    const std::size_t bands = blocks.size();
    const std::size_t n = blocks.front().cols();
    const std::size_t p = n * bands;

    // Hessian and linear term over vec(u), index b * n + j.
    std::vector<double> hess(p * p, 0.0);
    std::vector<double> lin(p, 0.0);
    for (std::size_t b = 0; b < bands; ++b) {
        const Matrix& d = blocks[b];
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < n; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < d.rows(); ++i) {
                    s += d(i, j) * d(i, k);
                }
                hess[(b * n + j) * p + b * n + k] += s;
            }
            double s = 0.0;
            for (std::size_t i = 0; i < d.rows(); ++i) {
                s += d(i, j) * y[b][i];
            }
            lin[b * n + j] = -s;
        }
    }
    const double inv_b = 1.0 / static_cast<double>(bands);
    for (std::size_t a = 0; a < bands; ++a) {
        for (std::size_t b = 0; b < bands; ++b) {
            const double m = (a == b ? 1.0 : 0.0) - inv_b;
            for (std::size_t j = 0; j < n; ++j) {
                hess[(a * n + j) * p + b * n + j] += lambda1 * m;
            }
        }
    }

    EnumerationResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<int> pattern(p, 0);
    std::vector<std::size_t> free_idx;
    std::vector<double> sub;
    std::vector<double> rhs;
    Matrix u(n, bands);

    std::size_t total = 1;
    for (std::size_t i = 0; i < p; ++i) {
        total *= 3;
    }
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        free_idx.clear();
        for (std::size_t i = 0; i < p; ++i) {
            const int digit = static_cast<int>(c % 3);
            c /= 3;
            pattern[i] = digit == 0 ? 0 : (digit == 1 ? 1 : -1);
            if (pattern[i] != 0) {
                free_idx.push_back(i);
            }
        }
        const std::size_t f = free_idx.size();
        std::fill(u.data().begin(), u.data().end(), 0.0);
        if (f > 0) {
            sub.assign(f * f, 0.0);
            rhs.assign(f, 0.0);
            for (std::size_t r = 0; r < f; ++r) {
                for (std::size_t s = 0; s < f; ++s) {
                    sub[r * f + s] = hess[free_idx[r] * p + free_idx[s]];
                }
                rhs[r] = -(lin[free_idx[r]] + lambda * pattern[free_idx[r]]);
            }
            if (!eliminate(sub, rhs, f, 1e-10)) {
                continue;
            }
            bool consistent = true;
            for (std::size_t r = 0; r < f; ++r) {
                if (rhs[r] * pattern[free_idx[r]] < 0.0) {
                    consistent = false;
                    break;
                }
            }
            if (!consistent) {
                continue;
            }
            for (std::size_t r = 0; r < f; ++r) {
                const std::size_t idx = free_idx[r];
                u(idx % n, idx / n) = rhs[r];
            }
        }
        const double value = reference_objective(u, blocks, y, lambda, lambda1);
        if (value < best.objective) {
            best.objective = value;
            best.u = u;
        }
    }
    return best;
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = rng.normal();
    }
    return m;
}

Matrix random_symmetric(Rng& rng, std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = rng.normal();
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Matrix random_spd(Rng& rng, std::size_t n, double ridge) {
    const Matrix a = random_matrix(rng, n, n);
    Matrix s(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                v += a(i, k) * a(j, k);
            }
            s(i, j) = v + (i == j ? ridge : 0.0);
        }
    }
    return s;
}

Matrix random_unit_columns(Rng& rng, std::size_t rows, std::size_t cols) {
    Matrix m = random_matrix(rng, rows, cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            s += m(i, j) * m(i, j);
        }
        s = std::sqrt(s);
        for (std::size_t i = 0; i < rows; ++i) {
            m(i, j) /= s;
        }
    }
    return m;
}

Vector random_vector(Rng& rng, std::size_t n, double norm) {
    Vector v(n);
    double s = 0.0;
    for (double& x : v) {
        x = rng.normal();
        s += x * x;
    }
    s = std::sqrt(s);
    for (double& x : v) {
        x *= norm / s;
    }
    return v;
}

BandDictionary dictionary_from_blocks(std::vector<Matrix> blocks) {
    BandDictionary dict;
    const std::size_t n = blocks.front().cols();
    for (std::size_t j = 0; j < n; ++j) {
        dict.column_class.push_back(2 * j < n ? 1 : 2);
        dict.column_trial.push_back(static_cast<int>(j));
    }
    dict.column_scale.assign(blocks.size(), Vector(n, 1.0));
    dict.blocks = std::move(blocks);
    return dict;
}

}  // namespace sgfb::oracle
