#include <gtest/gtest.h>

#include <cmath>

#include "oracle/oracle.hpp"
#include "sgfb/error.hpp"
#include "sgfb/linalg.hpp"

namespace sgfb {
namespace {

double orthonormality_error(const Matrix& v) {
    return max_abs_diff(v.transposed() * v, Matrix::identity(v.cols()));
}

TEST(SymEig, IdentityHasUnitSpectrumAndIdentityBasis) {
    const SymEigResult r = sym_eig(Matrix::identity(3));
    for (double ev : r.eigenvalues) {
        EXPECT_EQ(ev, 1.0);
    }
    EXPECT_EQ(r.eigenvectors, Matrix::identity(3));
}

TEST(SymEig, DiagonalMatrixSortsDescending) {
    const double d[] = {2.0, -1.0, 5.0};
    const SymEigResult r = sym_eig(Matrix::diagonal(d));
    EXPECT_EQ(r.eigenvalues, (Vector{5.0, 2.0, -1.0}));
    EXPECT_EQ(r.eigenvectors.col(0), (Vector{0.0, 0.0, 1.0}));
    EXPECT_EQ(r.eigenvectors.col(1), (Vector{1.0, 0.0, 0.0}));
    EXPECT_EQ(r.eigenvectors.col(2), (Vector{0.0, 1.0, 0.0}));
}

TEST(SymEig, RandomSymmetricReconstructs) {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::random_symmetric(rng, 6);
        const SymEigResult r = sym_eig(a);
        const Matrix recon = r.eigenvectors * Matrix::diagonal(r.eigenvalues) * r.eigenvectors.transposed();
        EXPECT_LE(max_abs_diff(recon, a), 1e-8);
        EXPECT_LE(orthonormality_error(r.eigenvectors), 1e-8);
        EXPECT_TRUE(std::is_sorted(r.eigenvalues.rbegin(), r.eigenvalues.rend()));

        double sum = 0.0;
        for (double ev : r.eigenvalues) {
            sum += ev;
        }
        EXPECT_LE(std::abs(sum - trace(a)), 1e-8 * std::max(1.0, std::abs(trace(a))));

        for (std::size_t i = 0; i < 6; ++i) {
            const Vector v = r.eigenvectors.col(i);
            const Vector av = a * v;
            double resid = 0.0;
            for (std::size_t k = 0; k < 6; ++k) {
                resid = std::max(resid, std::abs(av[k] - r.eigenvalues[i] * v[k]));
            }
            EXPECT_LE(resid, 1e-7 * std::max(1.0, max_abs(a)));
            // Largest-magnitude entry is positive.
            std::size_t arg = 0;
            for (std::size_t k = 1; k < 6; ++k) {
                if (std::abs(v[k]) > std::abs(v[arg])) {
                    arg = k;
                }
            }
            EXPECT_GT(v[arg], 0.0);
        }
    }
}

TEST(SymEig, IsBitwiseDeterministic) {
    Rng rng(5);
    const Matrix a = oracle::random_symmetric(rng, 7);
    const SymEigResult r1 = sym_eig(a);
    const SymEigResult r2 = sym_eig(a);
    EXPECT_EQ(r1.eigenvalues, r2.eigenvalues);
    EXPECT_EQ(r1.eigenvectors, r2.eigenvectors);
}

TEST(SymEig, RejectsNonSquareAndAsymmetric) {
    EXPECT_THROW(sym_eig(Matrix(2, 3)), DimensionError);
    EXPECT_THROW(sym_eig(Matrix{{1.0, 2.0}, {2.1, 1.0}}), AsymmetryError);
}

TEST(SymEig, ReportsSweepCapOnNonConvergence) {
    Rng rng(3);
    const Matrix a = oracle::random_symmetric(rng, 8);
    try {
        sym_eig(a, JacobiOptions{1, 1e-12});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.cap(), 1);
        EXPECT_NE(std::string(e.what()).find("1 sweeps"), std::string::npos);
    }
}

TEST(Whiten, IdentityAndDiagonal) {
    EXPECT_EQ(whiten(Matrix::identity(3)), Matrix::identity(3));
    const Matrix p = whiten(Matrix{{4.0, 0.0}, {0.0, 1.0}});
    EXPECT_LE(max_abs_diff(p, Matrix{{0.5, 0.0}, {0.0, 1.0}}), 1e-15);
}

TEST(Whiten, RandomSpdWhitensToIdentity) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix c = oracle::random_spd(rng, 5);
        const Matrix p = whiten(c);
        const Matrix w = p * c * p.transposed();
        EXPECT_LE(max_abs_diff(w, Matrix::identity(5)), 1e-8);
        for (double ev : sym_eig(w).eigenvalues) {
            EXPECT_NEAR(ev, 1.0, 1e-8);
        }
    }
}

TEST(Whiten, RankDeficiencyCarriesEigenvalue) {
    const Matrix c{{1.0, 1.0}, {1.0, 1.0}};
    try {
        whiten(c);
        FAIL() << "expected RankDeficiencyError";
    } catch (const RankDeficiencyError& e) {
        EXPECT_NEAR(e.eigenvalue(), 0.0, 1e-12);
    }
}

TEST(SolveSpd, IdentityAndDiagonal) {
    const Vector b1{3.0, 4.0};
    EXPECT_EQ(solve_spd(Matrix::identity(2), b1), b1);
    const Vector x = solve_spd(Matrix{{2.0, 0.0}, {0.0, 5.0}}, Vector{2.0, 10.0});
    EXPECT_DOUBLE_EQ(x[0], 1.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveSpd, RandomResidualMeetsBound) {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix a = oracle::random_spd(rng, 4, 0.1);
        const Vector b = oracle::random_vector(rng, 4, 3.0);
        const Vector x = solve_spd(a, b);
        Vector r = a * x;
        for (std::size_t i = 0; i < r.size(); ++i) {
            r[i] -= b[i];
        }
        EXPECT_LE(norm2(r), 1e-9 * (1.0 + norm2(b)));
    }
}

TEST(SolveSpd, SingularAndIndefiniteAreDegenerate) {
    EXPECT_THROW(solve_spd(Matrix{{1.0, 1.0}, {1.0, 1.0}}, Vector{1.0, 1.0}), DegenerateSystemError);
    EXPECT_THROW(solve_spd(Matrix{{1.0, 0.0}, {0.0, -1.0}}, Vector{1.0, 1.0}), DegenerateSystemError);
}

TEST(Matrix, RejectsEmptyDimensions) {
    EXPECT_THROW(Matrix(0, 3), DimensionError);
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0}), DimensionError);
}

TEST(Matrix, RequireFiniteFlagsNaN) {
    Matrix m(2, 2);
    m(1, 0) = std::nan("");
    EXPECT_FALSE(all_finite(m.data()));
    EXPECT_THROW(require_finite(m.data(), "m"), NumericError);
}

}  // namespace
}  // namespace sgfb
