#include "sgfb/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sgfb/error.hpp"

namespace sgfb {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()));
    }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be at least 1x1");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be at least 1x1");
    }
    if (data_.size() != rows * cols) {
        throw DimensionError("matrix data size " + std::to_string(data_.size()) + " does not match " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    if (rows_ == 0 || cols_ == 0) {
        throw DimensionError("matrix dimensions must be at least 1x1");
    }
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw DimensionError("ragged matrix initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(i, i) = diag[i];
    }
    return m;
}

Vector Matrix::col(std::size_t c) const {
    Vector out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

void Matrix::set_col(std::size_t c, std::span<const double> values) {
    if (values.size() != rows_) {
        throw DimensionError("set_col: length mismatch");
    }
    for (std::size_t r = 0; r < rows_; ++r) {
        (*this)(r, c) = values[r];
    }
}

Matrix Matrix::transposed() const {
    if (empty()) {
        return {};
    }
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matrix product: inner dimensions " + std::to_string(a.cols()) + " and " +
                             std::to_string(b.rows()) + " differ");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) {
                continue;
            }
            const auto brow = b.row(k);
            auto crow = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                crow[j] += aik * brow[j];
            }
        }
    }
    return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "matrix sum");
    Matrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) {
        cd[i] += bd[i];
    }
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "matrix difference");
    Matrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) {
        cd[i] -= bd[i];
    }
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (double& v : c.data()) {
        v *= s;
    }
    return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) {
        throw DimensionError("matrix-vector product: length mismatch");
    }
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        y[i] = dot(a.row(i), x);
    }
    return y;
}

Vector multiply_transposed(const Matrix& a, std::span<const double> x) {
    if (a.rows() != x.size()) {
        throw DimensionError("transposed matrix-vector product: length mismatch");
    }
    Vector y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        const auto arow = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            y[j] += arow[j] * xi;
        }
    }
    return y;
}

Matrix gram_rows(const Matrix& a) {
    Matrix g(a.rows(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i; j < a.rows(); ++j) {
            const double v = dot(a.row(i), a.row(j));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Matrix gram_cols(const Matrix& a) {
    Matrix g(a.cols(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto arow = a.row(r);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double ai = arow[i];
            for (std::size_t j = i; j < a.cols(); ++j) {
                g(i, j) += ai * arow[j];
            }
        }
    }
    for (std::size_t i = 0; i < a.cols(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            g(i, j) = g(j, i);
        }
    }
    return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("dot: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> v) {
    double scale = 0.0;
    for (double x : v) {
        scale = std::max(scale, std::abs(x));
    }
    if (scale == 0.0) {
        return 0.0;
    }
    double s = 0.0;
    for (double x : v) {
        const double t = x / scale;
        s += t * t;
    }
    return scale * std::sqrt(s);
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double trace(const Matrix& a) {
    if (!a.is_square()) {
        throw DimensionError("trace: matrix is not square");
    }
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        t += a(i, i);
    }
    return t;
}

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double max_abs(const Matrix& a) { return norm_inf(a.data()); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < ad.size(); ++i) {
        m = std::max(m, std::abs(ad[i] - bd[i]));
    }
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            throw NumericError(std::string(what) + ": non-finite entry at flat index " + std::to_string(i));
        }
    }
}

}  // namespace sgfb
