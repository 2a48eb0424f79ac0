#include "sgfb/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

namespace {

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                s += a(i, j) * a(i, j);
            }
        }
    }
    return std::sqrt(s);
}

void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) {
        return;
    }
    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const std::size_t n = a.rows();

    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

SymEigResult sym_eig(const Matrix& input, const JacobiOptions& options) {
    if (input.empty() || !input.is_square()) {
        throw DimensionError("sym_eig: matrix must be square, got " + std::to_string(input.rows()) + "x" +
                             std::to_string(input.cols()));
    }
    require_finite(input.data(), "sym_eig");
    const std::size_t n = input.rows();

    const double scale = max_abs(input);
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            asym = std::max(asym, std::abs(input(i, j) - input(j, i)));
        }
    }
    if (asym > 1e-10 * scale) {
        throw AsymmetryError("sym_eig: asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }

    Matrix a = input;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double m = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = m;
            a(j, i) = m;
        }
    }
    Matrix v = Matrix::identity(n);

    const double threshold = options.relative_tol * frobenius_norm(a);
    bool converged = off_diagonal_norm(a) <= threshold;
    for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                rotate(a, v, p, q);
            }
        }
        converged = off_diagonal_norm(a) <= threshold;
    }
    if (!converged) {
        throw ConvergenceError("sym_eig: Jacobi iteration did not converge within " +
                                   std::to_string(options.max_sweeps) + " sweeps",
                               options.max_sweeps);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    SymEigResult out{Vector(n), Matrix(n, n)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.eigenvalues[k] = a(src, src);
        std::size_t arg = 0;
        for (std::size_t r = 1; r < n; ++r) {
            if (std::abs(v(r, src)) > std::abs(v(arg, src))) {
                arg = r;
            }
        }
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t r = 0; r < n; ++r) {
            out.eigenvectors(r, k) = sign * v(r, src);
        }
    }
    return out;
}

double positive_definite_floor(const Matrix& c) {
    return 1e-10 * trace(c) / static_cast<double>(c.rows());
}

Matrix whiten(const Matrix& c) {
    const SymEigResult eig = sym_eig(c);
    const double floor = positive_definite_floor(c);
    const double smallest = eig.eigenvalues.back();
    if (!(smallest > floor)) {
        throw RankDeficiencyError("whiten: eigenvalue " + std::to_string(smallest) +
                                      " is not above the positive-definite floor " + std::to_string(floor),
                                  smallest);
    }
    const std::size_t n = c.rows();
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv_sqrt = 1.0 / std::sqrt(eig.eigenvalues[i]);
        for (std::size_t j = 0; j < n; ++j) {
            p(i, j) = inv_sqrt * eig.eigenvectors(j, i);
        }
    }
    return p;
}

namespace {

// Lower-triangular Cholesky factor, row-major.
Matrix cholesky(const Matrix& a) {
    const std::size_t n = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, std::abs(a(i, i)));
    }
    const double pivot_floor = 1e-13 * max_diag;
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) {
            d -= l(j, k) * l(j, k);
        }
        if (!(d > pivot_floor)) {
            throw DegenerateSystemError("solve_spd: pivot " + std::to_string(j) + " collapsed to " +
                                        std::to_string(d) + "; matrix is singular or indefinite");
        }
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= l(i, k) * l(j, k);
            }
            l(i, j) = s / ljj;
        }
    }
    return l;
}

Vector cholesky_solve(const Matrix& l, std::span<const double> b) {
    const std::size_t n = l.rows();
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            y[i] -= l(i, k) * y[k];
        }
        y[i] /= l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) {
            y[ii] -= l(k, ii) * y[k];
        }
        y[ii] /= l(ii, ii);
    }
    return y;
}

}  // namespace

Vector solve_spd(const Matrix& a, std::span<const double> b) {
    if (a.empty() || !a.is_square() || a.rows() != b.size()) {
        throw DimensionError("solve_spd: expected square matrix matching right-hand side length");
    }
    const Matrix l = cholesky(a);
    Vector x = cholesky_solve(l, b);

    Vector residual = a * x;
    for (std::size_t i = 0; i < residual.size(); ++i) {
        residual[i] = b[i] - residual[i];
    }
    const Vector correction = cholesky_solve(l, residual);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += correction[i];
    }
    if (!all_finite(x)) {
        throw DegenerateSystemError("solve_spd: solution is not finite");
    }
    return x;
}

}  // namespace sgfb
