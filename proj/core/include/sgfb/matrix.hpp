#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace sgfb {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. A default-constructed matrix is empty
// (0 x 0); every other matrix has at least one row and one column.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }
    bool is_square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    Vector col(std::size_t c) const;
    void set_col(std::size_t c, std::span<const double> values);

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    Matrix transposed() const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Vector operator*(const Matrix& a, std::span<const double> x);

// a^T x without forming the transpose.
Vector multiply_transposed(const Matrix& a, std::span<const double> x);
// a a^T
Matrix gram_rows(const Matrix& a);
// a^T a
Matrix gram_cols(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double trace(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
// max_ij |a_ij - b_ij|
double max_abs_diff(const Matrix& a, const Matrix& b);

bool all_finite(std::span<const double> v);
// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(std::span<const double> v, const char* what);

}  // namespace sgfb
