#pragma once

#include <array>
#include <span>

#include "sgfb/dictionary.hpp"
#include "sgfb/solver.hpp"

namespace sgfb {

struct Classification {
    int label = 0;
    std::array<double, 2> residuals{};  // r_1, r_2
    bool tie = false;                   // residuals equal; label falls back to class 1
};

// r_l = sqrt(sum_b ||y_b - D_b delta_l(u_b)||^2), where delta_l keeps only
// the coefficients of class-l columns; the label minimises r_l.
Classification classify(std::span<const Vector> y_bands, const BandDictionary& dict, const SparseCode& code);

// Single-task counterpart for a code from src_solve over dictionary x whose
// columns carry `column_class`.
Classification src_classify(std::span<const double> y, const Matrix& x, std::span<const int> column_class,
                            std::span<const double> code);

}  // namespace sgfb
