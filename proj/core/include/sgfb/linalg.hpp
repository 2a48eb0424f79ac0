#pragma once

#include <span>

#include "sgfb/matrix.hpp"

namespace sgfb {

struct SymEigResult {
    Vector eigenvalues;  // descending
    Matrix eigenvectors; // column i pairs with eigenvalues[i]
};

struct JacobiOptions {
    int max_sweeps = 100;
    double relative_tol = 1e-12;  // off-diagonal Frobenius norm relative to ||A||_F
};

// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
//
// Eigenvalues come back in descending order. Each eigenvector is flipped so
// that its largest-magnitude entry is positive, which makes results
// reproducible across platforms. Throws DimensionError for non-square input,
// AsymmetryError when max|a_ij - a_ji| exceeds 1e-10 * max|a_ij|, and
// ConvergenceError when the sweep cap is exhausted.
SymEigResult sym_eig(const Matrix& a, const JacobiOptions& options = {});

// Smallest eigenvalue admitted by whiten(): 1e-10 * trace(C) / rows.
double positive_definite_floor(const Matrix& c);

// Whitening transform P with P C P^T = I, built as diag(lambda^-1/2) V^T.
// Throws RankDeficiencyError carrying the offending eigenvalue when the
// smallest eigenvalue is at or below positive_definite_floor(c).
Matrix whiten(const Matrix& c);

// Solves A x = b for symmetric positive-definite A via Cholesky with one step
// of iterative refinement. Throws DegenerateSystemError when a pivot collapses
// (singular or indefinite A).
Vector solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace sgfb
