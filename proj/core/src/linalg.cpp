#include "endo/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace endo::linalg {

Matrix matmul(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw InputError("matmul: shape mismatch");
    Matrix z(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            double xv = x(i, k);
            if (xv == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) z(i, j) += xv * y(k, j);
        }
    return z;
}

Matrix transpose(const Matrix& x) {
    Matrix z(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) z(j, i) = x(i, j);
    return z;
}

namespace {

// One-sided Jacobi on columns of m (rows >= cols after transposing as
// needed): orthogonalizes column pairs until rotations vanish.
void jacobi_orthogonalize(Matrix& m) {
    const int n = m.cols;
    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < m.rows; ++i) {
                    app += m(i, p) * m(i, p);
                    aqq += m(i, q) * m(i, q);
                    apq += m(i, p) * m(i, q);
                }
                if (std::fabs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                off = std::max(off, std::fabs(apq));
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (int i = 0; i < m.rows; ++i) {
                    double vp = m(i, p), vq = m(i, q);
                    m(i, p) = c * vp - s * vq;
                    m(i, q) = s * vp + c * vq;
                }
            }
        }
        if (off == 0.0) break;
    }
}

}  // namespace

std::vector<double> singular_values(Matrix m) {
    if (m.rows == 0 || m.cols == 0) return {};
    if (m.rows < m.cols) m = transpose(m);
    jacobi_orthogonalize(m);
    std::vector<double> sv(static_cast<std::size_t>(m.cols));
    for (int j = 0; j < m.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < m.rows; ++i) s += m(i, j) * m(i, j);
        sv[static_cast<std::size_t>(j)] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

double smallest_singular_value(const Matrix& m) {
    auto sv = singular_values(m);
    return sv.empty() ? 0.0 : sv.back();
}

std::vector<double> lstsq_minnorm(const Matrix& A, std::span<const double> b, double rel_tol) {
    if (static_cast<int>(b.size()) != A.rows) throw InputError("lstsq: shape mismatch");
    // Work on the thin side: U from Jacobi on A (rows >= cols) or on A^T.
    // Full SVD via Jacobi: rotate columns of M (m x n, m >= n) to get
    // M V = U diag(s); we reconstruct V by accumulating rotations. For the
    // small matrices here it is simplest to redo Jacobi while tracking V.
    bool transposed = A.rows < A.cols;
    Matrix M = transposed ? transpose(A) : A;
    const int n = M.cols;
    Matrix V(n, n);
    for (int i = 0; i < n; ++i) V(i, i) = 1.0;

    const double eps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < M.rows; ++i) {
                    app += M(i, p) * M(i, p);
                    aqq += M(i, q) * M(i, q);
                    apq += M(i, p) * M(i, q);
                }
                if (std::fabs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                for (int i = 0; i < M.rows; ++i) {
                    double vp = M(i, p), vq = M(i, q);
                    M(i, p) = c * vp - s * vq;
                    M(i, q) = s * vp + c * vq;
                }
                for (int i = 0; i < n; ++i) {
                    double vp = V(i, p), vq = V(i, q);
                    V(i, p) = c * vp - s * vq;
                    V(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> s(static_cast<std::size_t>(n));
    double smax = 0.0;
    for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int i = 0; i < M.rows; ++i) acc += M(i, j) * M(i, j);
        s[static_cast<std::size_t>(j)] = std::sqrt(acc);
        smax = std::max(smax, s[static_cast<std::size_t>(j)]);
    }

    // A (m x k): columns of M are u_j * s_j. Pseudo-inverse applied to b:
    //   x = sum_j (u_j . b) / s_j * v_j        (A = U S V^T, M = A or A^T)
    // When transposed, roles of U and V swap.
    std::vector<double> x(static_cast<std::size_t>(A.cols), 0.0);
    for (int j = 0; j < n; ++j) {
        double sj = s[static_cast<std::size_t>(j)];
        if (sj <= rel_tol * smax || sj == 0.0) continue;
        if (!transposed) {
            // u_j = M(:,j)/sj lives in R^rows, v_j = V(:,j) in R^cols
            double ub = 0.0;
            for (int i = 0; i < A.rows; ++i) ub += M(i, j) / sj * b[static_cast<std::size_t>(i)];
            for (int i = 0; i < A.cols; ++i) x[static_cast<std::size_t>(i)] += ub / sj * V(i, j);
        } else {
            // A^T = U' S V'^T with U' = M(:,j)/sj in R^cols(A), V' in R^rows(A)
            double vb = 0.0;
            for (int i = 0; i < A.rows; ++i) vb += V(i, j) * b[static_cast<std::size_t>(i)];
            for (int i = 0; i < A.cols; ++i)
                x[static_cast<std::size_t>(i)] += vb / sj * M(i, j) / sj;
        }
    }
    return x;
}

// ---------------------------------------------------------------------------
// Banded LU
// ---------------------------------------------------------------------------

BandMatrix::BandMatrix(int n, int half)
    : n_(n), half_(half), width_(3 * half + 1),
      data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(3 * half + 1), 0.0),
      pivot_(static_cast<std::size_t>(n), 0) {}

void BandMatrix::clear() {
    std::fill(data_.begin(), data_.end(), 0.0);
    factored_ = false;
}

double& BandMatrix::at(int i, int j) {
    int off = j - i + half_;
    if (off < 0 || off >= width_) throw InputError("BandMatrix: entry outside band");
    return data_[static_cast<std::size_t>(i) * width_ + off];
}

void BandMatrix::factor() {
    // Gaussian elimination with partial pivoting; only rows within the lower
    // bandwidth can hold a nonzero in the current column.
    for (int k = 0; k < n_; ++k) {
        int pmax = std::min(n_ - 1, k + half_);
        int piv = k;
        double vmax = std::fabs(data_[static_cast<std::size_t>(k) * width_ + half_]);
        for (int i = k + 1; i <= pmax; ++i) {
            double v = std::fabs(data_[static_cast<std::size_t>(i) * width_ + (k - i + half_)]);
            if (v > vmax) { vmax = v; piv = i; }
        }
        if (vmax == 0.0) throw NumericError("banded LU: singular matrix");
        pivot_[static_cast<std::size_t>(k)] = piv;
        if (piv != k) {
            // Swap the row segments covering columns k .. k+2*half.
            for (int j = k; j <= std::min(n_ - 1, k + 2 * half_); ++j) {
                std::swap(data_[static_cast<std::size_t>(k) * width_ + (j - k + half_)],
                          data_[static_cast<std::size_t>(piv) * width_ + (j - piv + half_)]);
            }
        }
        double pivot_val = data_[static_cast<std::size_t>(k) * width_ + half_];
        for (int i = k + 1; i <= pmax; ++i) {
            double& lik = data_[static_cast<std::size_t>(i) * width_ + (k - i + half_)];
            if (lik == 0.0) continue;
            double m = lik / pivot_val;
            lik = m;  // store the multiplier in place
            for (int j = k + 1; j <= std::min(n_ - 1, k + 2 * half_); ++j) {
                data_[static_cast<std::size_t>(i) * width_ + (j - i + half_)] -=
                    m * data_[static_cast<std::size_t>(k) * width_ + (j - k + half_)];
            }
        }
    }
    factored_ = true;
}

void BandMatrix::solve(std::span<double> rhs) const {
    if (!factored_) throw NumericError("BandMatrix::solve before factor");
    if (static_cast<int>(rhs.size()) != n_) throw InputError("BandMatrix::solve: size mismatch");
    // Forward substitution with the recorded row swaps.
    for (int k = 0; k < n_; ++k) {
        int piv = pivot_[static_cast<std::size_t>(k)];
        if (piv != k) std::swap(rhs[static_cast<std::size_t>(k)], rhs[static_cast<std::size_t>(piv)]);
        int imax = std::min(n_ - 1, k + half_);
        double rk = rhs[static_cast<std::size_t>(k)];
        if (rk == 0.0) continue;
        for (int i = k + 1; i <= imax; ++i) {
            rhs[static_cast<std::size_t>(i)] -=
                data_[static_cast<std::size_t>(i) * width_ + (k - i + half_)] * rk;
        }
    }
    // Back substitution.
    for (int k = n_ - 1; k >= 0; --k) {
        double acc = rhs[static_cast<std::size_t>(k)];
        int jmax = std::min(n_ - 1, k + 2 * half_);
        for (int j = k + 1; j <= jmax; ++j)
            acc -= data_[static_cast<std::size_t>(k) * width_ + (j - k + half_)] *
                   rhs[static_cast<std::size_t>(j)];
        rhs[static_cast<std::size_t>(k)] = acc / data_[static_cast<std::size_t>(k) * width_ + half_];
    }
}

}  // namespace endo::linalg
