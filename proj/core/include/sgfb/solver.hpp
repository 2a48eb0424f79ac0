#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sgfb/dictionary.hpp"
#include "sgfb/matrix.hpp"

namespace sgfb {

struct SgfbHyperparams {
    double lambda = 0.1;   // l1 weight
    double lambda1 = 0.1;  // cross-band centering weight
    int max_outer_iters = 200;
    double tol = 1e-8;      // relative objective decrease per sweep
    double tol_kkt = 1e-6;  // stationarity tolerance required at exit
};

void validate(const SgfbHyperparams& hp);

// (I - 11^T / B)^2 for B bands.
Matrix centering_matrix(std::size_t bands);

// sum_b ||u_b - mean_j u_j||^2 over the columns u_b of u (N x B).
double centering_sum(const Matrix& u);
// Tr(u M u^T)
double centering_trace(const Matrix& u, const Matrix& m);

// F(u) = sum_b 1/2 ||y_b - D_b u_b||^2 + lambda sum_b ||u_b||_1
//        + lambda1 / 2 * Tr(u M u^T)
double objective_value(const Matrix& u, std::span<const Vector> y_bands, const BandDictionary& dict,
                       const SgfbHyperparams& hp);

struct SparseCode {
    Matrix coeffs;  // N x B; column b is the code for band b
    Matrix signs;   // entries in {-1, 0, +1}
    double objective = 0.0;
    int iterations = 0;            // block-coordinate sweeps performed
    Vector objective_trace;        // F before the first sweep and after each sweep
    double kkt_violation = 0.0;    // max stationarity residual at exit
    bool converged = false;        // decrease below tol and KKT within tol_kkt
    int degenerate_steps = 0;      // singular active sets resolved along a null direction
};

// Per-band Gram matrices D_b^T D_b, reusable across test samples.
std::vector<Matrix> dictionary_grams(const BandDictionary& dict);

// Block coordinate descent over band columns; each block
//   1/2 ||y_b - D_b u_b||^2 + lambda1/2 M_bb u_b^T u_b + u_b^T h_b + lambda ||u_b||_1,
//   h_b = lambda1 sum_{j != b} M_bj u_j,
// is solved exactly by feature-sign search. Throws NumericError if the
// objective becomes non-finite and ParameterError/DimensionError on bad input.
SparseCode sgfb_solve(std::span<const Vector> y_bands, const BandDictionary& dict, const SgfbHyperparams& hp);
SparseCode sgfb_solve(std::span<const Vector> y_bands, const BandDictionary& dict, std::span<const Matrix> grams,
                      const SgfbHyperparams& hp);

// Max over all coefficients of the stationarity residual of F at u:
// |grad_j + lambda sign(u_j)| for u_j != 0, max(0, |grad_j| - lambda) else.
double kkt_violation(const Matrix& u, std::span<const Vector> y_bands, const BandDictionary& dict,
                     const SgfbHyperparams& hp);

struct FeatureSignOptions {
    int max_steps = 0;           // 0 selects 20 n + 200
    double optimality_tol = 1e-11;
};

struct FeatureSignResult {
    Vector x;
    int steps = 0;
    int degenerate_steps = 0;
    bool converged = false;
};

// Feature-sign search for min 1/2 x^T H x + c^T x + lambda ||x||_1 with H
// symmetric positive semi-definite, started from x0 (zero when empty).
//
// Each step activates the zero coefficient with the largest gradient
// magnitude once the active coefficients are optimal, solves the
// sign-fixed quadratic on the active set, and line-searches the segment to
// the new point over the sign-change points. A singular active system is
// resolved by moving along its null direction to the first zero crossing.
FeatureSignResult feature_sign_search(const Matrix& h, std::span<const double> c, double lambda,
                                      std::span<const double> x0 = {}, const FeatureSignOptions& options = {});

// Single-task l1 code: argmin 1/2 ||y - X t||^2 + lambda ||t||_1.
Vector src_solve(std::span<const double> y, const Matrix& x, double lambda);

}  // namespace sgfb
