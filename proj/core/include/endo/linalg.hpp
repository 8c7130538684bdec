#pragma once

#include <span>
#include <vector>

#include "endo/errors.hpp"

namespace endo::linalg {

/// Dense row-major matrix, sized for the small systems this library needs
/// (node-level d x J blocks, model-level d x d volatilities).
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

Matrix matmul(const Matrix& x, const Matrix& y);
Matrix transpose(const Matrix& x);

/// Singular values in descending order, via one-sided Jacobi. Exact enough
/// for the 2 x J node matrices the rank diagnostic feeds it.
std::vector<double> singular_values(Matrix m);

/// Minimum-norm least-squares solution of A x = b through the SVD
/// pseudo-inverse; singular values below rel_tol * sigma_max are dropped.
std::vector<double> lstsq_minnorm(const Matrix& A, std::span<const double> b,
                                  double rel_tol = 1e-12);

/// Smallest singular value (convenience wrapper).
double smallest_singular_value(const Matrix& m);

/// Banded square matrix with half-bandwidth `half`, stored row-compressed:
/// row i holds columns [i-half, i+2*half] so Gaussian elimination with row
/// pivoting can fill in place.
class BandMatrix {
public:
    BandMatrix(int n, int half);

    int size() const { return n_; }
    int half_bandwidth() const { return half_; }

    void clear();
    double& at(int i, int j);
    void add(int i, int j, double v) { at(i, j) += v; }

    /// In-place LU with partial pivoting. Throws NumericError on singularity.
    void factor();
    /// Solves with the factored matrix (overwrites rhs with the solution).
    void solve(std::span<double> rhs) const;

private:
    int n_, half_, width_;
    std::vector<double> data_;      // n x width
    std::vector<int> pivot_;
    bool factored_ = false;
};

}  // namespace endo::linalg
