#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "errors.hpp"
#include "qseries.hpp"

namespace ellstab {

// Dense row-major complex matrix. Sized for the small systems this library
// meets (restriction matrices, n^2 x n^2 Sylvester lifts), not for BLAS work.
struct CMatrix {
    int rows = 0, cols = 0;
    std::vector<Complex> a;

    CMatrix() = default;
    CMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

    static CMatrix identity(int n) {
        CMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Complex& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    const Complex& operator()(int i, int j) const {
        return a[static_cast<size_t>(i) * cols + j];
    }

    bool square() const { return rows == cols; }
};

inline CMatrix operator*(const CMatrix& A, const CMatrix& B) {
    if (A.cols != B.rows) throw config_invalid("matmul: shape mismatch");
    CMatrix C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const Complex aik = A(i, k);
            if (aik == Complex(0.0)) continue;
            for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
        }
    return C;
}

inline CMatrix operator+(const CMatrix& A, const CMatrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw config_invalid("matadd: shape mismatch");
    CMatrix C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
    return C;
}

inline CMatrix operator-(const CMatrix& A, const CMatrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw config_invalid("matsub: shape mismatch");
    CMatrix C = A;
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] -= B.a[i];
    return C;
}

inline CMatrix operator*(Complex s, const CMatrix& A) {
    CMatrix C = A;
    for (auto& v : C.a) v *= s;
    return C;
}

inline double max_abs(const CMatrix& A) {
    double m = 0.0;
    for (const auto& v : A.a) m = std::max(m, std::abs(v));
    return m;
}

inline Complex trace(const CMatrix& A) {
    Complex t = 0.0;
    for (int i = 0; i < std::min(A.rows, A.cols); ++i) t += A(i, i);
    return t;
}

// PA = LU with partial pivoting, stored packed.
struct LU {
    CMatrix lu;
    std::vector<int> perm;
    int sign = 1;
};

inline LU lu_decompose(CMatrix A, double pivot_floor = 0.0) {
    if (!A.square()) throw config_invalid("lu: square matrix required");
    const int n = A.rows;
    LU f{std::move(A), std::vector<int>(n), 1};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    double scale = max_abs(f.lu);
    if (scale == 0.0) throw singular_matrix("lu: zero matrix");
    const double floor = pivot_floor > 0.0 ? pivot_floor : scale * 1e-300;
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(f.lu(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(f.lu(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (!(best > floor)) throw singular_matrix("lu: singular pivot");
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
            std::swap(f.perm[k], f.perm[p]);
            f.sign = -f.sign;
        }
        const Complex piv = f.lu(k, k);
        for (int i = k + 1; i < n; ++i) {
            const Complex m = f.lu(i, k) / piv;
            f.lu(i, k) = m;
            for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
        }
    }
    return f;
}

inline std::vector<Complex> lu_solve(const LU& f, const std::vector<Complex>& b) {
    const int n = f.lu.rows;
    if (static_cast<int>(b.size()) != n) throw config_invalid("lu_solve: size mismatch");
    std::vector<Complex> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (int i = 1; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

inline Complex det(const CMatrix& A) {
    LU f;
    try {
        f = lu_decompose(A);
    } catch (const singular_matrix&) {
        return 0.0;
    }
    Complex d = static_cast<double>(f.sign);
    for (int i = 0; i < A.rows; ++i) d *= f.lu(i, i);
    return d;
}

inline std::vector<Complex> solve(const CMatrix& A, const std::vector<Complex>& b) {
    return lu_solve(lu_decompose(A), b);
}

inline CMatrix inverse(const CMatrix& A) {
    const LU f = lu_decompose(A);
    const int n = A.rows;
    CMatrix inv(n, n);
    std::vector<Complex> e(n), col;
    for (int j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), Complex(0.0));
        e[j] = 1.0;
        col = lu_solve(f, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    return inv;
}

// Coefficients c[0..n] of det(xI - A) = sum_k c[k] x^k, monic, by the
// Faddeev-LeVerrier recursion.
inline std::vector<Complex> charpoly(const CMatrix& A) {
    if (!A.square()) throw config_invalid("charpoly: square matrix required");
    const int n = A.rows;
    std::vector<Complex> c(n + 1);
    c[n] = 1.0;
    CMatrix M = CMatrix::identity(n);
    for (int k = 1; k <= n; ++k) {
        CMatrix AM = A * M;
        const Complex ck = -trace(AM) / static_cast<double>(k);
        c[n - k] = ck;
        M = std::move(AM);
        for (int i = 0; i < n; ++i) M(i, i) += ck;
    }
    return c;
}

// All roots of sum_k c[k] x^k by the Durand-Kerner iteration. Deterministic:
// fixed starting configuration, lexicographic (re, im) ordering of results.
inline std::vector<Complex> poly_roots(std::vector<Complex> c, int max_iter = 1000) {
    while (!c.empty() && std::abs(c.back()) == 0.0) c.pop_back();
    if (c.size() < 2) throw config_invalid("poly_roots: degree must be >= 1");
    const int deg = static_cast<int>(c.size()) - 1;
    const Complex lead = c.back();
    for (auto& v : c) v /= lead;
    double radius = 0.0;
    for (int k = 0; k < deg; ++k) radius = std::max(radius, std::abs(c[k]));
    radius = 1.0 + radius;
    auto eval = [&](Complex x) {
        Complex p = 1.0;
        for (int k = deg - 1; k >= 0; --k) p = p * x + c[k];
        return p;
    };
    std::vector<Complex> z(deg);
    const Complex seed(0.4, 0.9);
    Complex w = 1.0;
    for (int k = 0; k < deg; ++k) {
        w *= seed;
        z[k] = radius * w;
    }
    for (int it = 0; it < max_iter; ++it) {
        double worst = 0.0;
        for (int i = 0; i < deg; ++i) {
            Complex denom = 1.0;
            for (int j = 0; j < deg; ++j)
                if (j != i) denom *= z[i] - z[j];
            const Complex delta = eval(z[i]) / denom;
            z[i] -= delta;
            worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(z[i])));
        }
        if (worst < 1e-14) {
            std::sort(z.begin(), z.end(), [](Complex a, Complex b) {
                if (a.real() != b.real()) return a.real() < b.real();
                return a.imag() < b.imag();
            });
            return z;
        }
    }
    throw no_convergence("poly_roots: Durand-Kerner stalled");
}

struct EigenSystem {
    std::vector<Complex> values;  // sorted lexicographically by (re, im)
    CMatrix vectors;              // column k is an eigenvector for values[k]
};

// Eigenpairs via characteristic polynomial roots plus inverse iteration.
// Intended for the small, generically diagonalizable matrices that arise as
// leading q-difference coefficients.
inline EigenSystem eig(const CMatrix& A) {
    if (!A.square()) throw config_invalid("eig: square matrix required");
    const int n = A.rows;
    EigenSystem es;
    es.values = poly_roots(charpoly(A));
    es.vectors = CMatrix(n, n);
    const double scale = std::max(max_abs(A), 1e-30);
    for (int k = 0; k < n; ++k) {
        const Complex lam = es.values[k];
        bool ok = false;
        for (const double nudge : {1e-11, 1e-9, 1e-7}) {
            CMatrix B = A;
            const Complex shift = lam + Complex(nudge, 0.5 * nudge) * scale;
            for (int i = 0; i < n; ++i) B(i, i) -= shift;
            LU f;
            try {
                f = lu_decompose(B);
            } catch (const singular_matrix&) {
                continue;
            }
            // fixed, mildly irrational start vector
            std::vector<Complex> v(n);
            for (int i = 0; i < n; ++i)
                v[i] = Complex(1.0 + 0.137 * i, 0.29 - 0.111 * i);
            for (int rep = 0; rep < 4; ++rep) {
                v = lu_solve(f, v);
                double mx = 0.0;
                for (const auto& c : v) mx = std::max(mx, std::abs(c));
                for (auto& c : v) c /= mx;
            }
            // residual check |Av - lam v|
            double res = 0.0, vn = 0.0;
            for (int i = 0; i < n; ++i) {
                Complex r = -lam * v[i];
                for (int j = 0; j < n; ++j) r += A(i, j) * v[j];
                res = std::max(res, std::abs(r));
                vn = std::max(vn, std::abs(v[i]));
            }
            if (res <= 1e-7 * scale * vn) {
                for (int i = 0; i < n; ++i) es.vectors(i, k) = v[i];
                ok = true;
                break;
            }
        }
        if (!ok) throw no_convergence("eig: inverse iteration failed");
    }
    return es;
}

// Solves alpha X M - M X = R for X (all square, same size) by assembling the
// n^2 x n^2 linear system. Singular exactly when alpha equals a ratio of
// eigenvalues of M, which is the resonance the q-difference solver rejects.
inline CMatrix sylvester_scaled(Complex alpha, const CMatrix& M, const CMatrix& R) {
    if (!M.square() || M.rows != R.rows || M.cols != R.cols)
        throw config_invalid("sylvester: shape mismatch");
    const int n = M.rows;
    const int N = n * n;
    CMatrix big(N, N);
    std::vector<Complex> rhs(N);
    auto idx = [n](int i, int j) { return i * n + j; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const int row = idx(i, j);
            rhs[row] = R(i, j);
            for (int k = 0; k < n; ++k) {
                big(row, idx(i, k)) += alpha * M(k, j);
                big(row, idx(k, j)) -= M(i, k);
            }
        }
    const std::vector<Complex> x = solve(big, rhs);
    CMatrix X(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = x[idx(i, j)];
    return X;
}

}  // namespace ellstab
