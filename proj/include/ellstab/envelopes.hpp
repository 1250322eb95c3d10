#pragma once

#include <bit>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "qseries.hpp"

namespace ellstab {

// Chamber of the framing torus: positive orders the fixed points F_1 < ... < F_n,
// negative reverses it.
enum class Chamber { positive, negative };

// Polarization choice. It moves only the hbar exponent riding on the Kahler
// parameter inside the envelope; the attracting theta pattern is fixed by the
// chamber alone.
enum class Polarization { standard, opposite };

struct EnvelopeParams {
    std::vector<MultPoint> a;  // framing torus logs
    MultPoint hbar;
    MultPoint z;  // Kahler log

    int n() const { return static_cast<int>(a.size()); }
};

// One theta factor of a product formula; power +1 numerator, -1 denominator.
struct ThetaFactor {
    MultPoint arg;
    int power;
};

inline Complex eval_theta_factors(const std::vector<ThetaFactor>& fs, const QContext& ctx) {
    Complex num(1.0), den(1.0);
    for (const auto& f : fs) {
        if (f.power < 0 && near_theta_zero(f.arg.u, ctx.log_q, 1e-10))
            throw denominator_vanishes("theta denominator evaluated on its zero lattice");
        const Complex t = theta(f.arg, ctx);
        for (int p = f.power; p > 0; --p) num *= t;
        for (int p = f.power; p < 0; ++p) den *= t;
    }
    return num / den;
}

// Genericity gate shared by ingestion paths and parameter draws: rejects
// configurations within eps (in log distance) of the divisors where envelope
// denominators vanish or restriction formulas degenerate.
inline void validate_envelope_params(const EnvelopeParams& p, const QContext& ctx,
                                     double eps = 1e-8) {
    const int n = p.n();
    if (n < 1) throw config_invalid("params: empty framing torus");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (near_theta_zero((p.a[i] / p.a[j]).u, ctx.log_q, eps))
                throw config_invalid("params: a_i / a_j on the q-lattice");
        }
    if (near_theta_zero(p.hbar.u, ctx.log_q, eps))
        throw config_invalid("params: hbar on the q-lattice");
    for (int m = -(n + 2); m <= n + 2; ++m)
        if (near_theta_zero((p.z * p.hbar.pow(m)).u, ctx.log_q, eps))
            throw config_invalid("params: z hbar^m on the q-lattice (resonant Kahler)");
}

// hbar exponent on the Kahler parameter for the k-th fixed point (0-based) of
// T*P^{n-1}. Standard polarization counts attracting directions with a minus
// sign; the opposite polarization reflects that count through the chamber.
inline int kahler_hbar_exponent(int k, int n, Chamber ch, Polarization pol) {
    const int k1 = k + 1;
    if (ch == Chamber::positive) return pol == Polarization::standard ? k1 - n : k1;
    return pol == Polarization::standard ? 1 - k1 : n - k1 + 1;
}

// Elliptic stable envelope of the k-th coordinate point of T*P^{n-1} as a
// function of the Chern root s of O(-1). Coordinates on the chamber's
// near side of k enter as theta(s a_i), far side as theta(s a_i hbar); the
// Kahler theta pins the z-degree.
inline std::vector<ThetaFactor> stab_tpn_factors(int k, MultPoint s, const EnvelopeParams& p,
                                                 Chamber ch,
                                                 Polarization pol = Polarization::standard) {
    const int n = p.n();
    if (k < 0 || k >= n) throw config_invalid("stab_tpn: fixed point index out of range");
    std::vector<ThetaFactor> fs;
    fs.reserve(static_cast<size_t>(n) + 1);
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const bool near_side = (ch == Chamber::positive) ? (i < k) : (i > k);
        fs.push_back({near_side ? s * p.a[i] : s * p.a[i] * p.hbar, +1});
    }
    const MultPoint zs = p.z * p.hbar.pow(kahler_hbar_exponent(k, n, ch, pol));
    fs.push_back({s * p.a[k] * zs, +1});
    fs.push_back({zs, -1});
    return fs;
}

inline Complex stab_tpn(int k, MultPoint s, const EnvelopeParams& p, const QContext& ctx,
                        Chamber ch, Polarization pol = Polarization::standard) {
    return eval_theta_factors(stab_tpn_factors(k, s, p, ch, pol), ctx);
}

// Restriction matrix M(j, k) = Stab(F_k)|_{F_j}, the fixed point F_j meaning
// s = a_j^{-1}. In the positive chamber the j < k entries contain
// theta(a_j/a_j) and vanish exactly, not merely to rounding.
inline CMatrix restriction_matrix_tpn(const EnvelopeParams& p, const QContext& ctx, Chamber ch,
                                      Polarization pol = Polarization::standard) {
    const int n = p.n();
    CMatrix M(n, n);
    for (int j = 0; j < n; ++j) {
        const MultPoint s = p.a[j].inv();
        for (int k = 0; k < n; ++k) M(j, k) = stab_tpn(k, s, p, ctx, ch, pol);
    }
    return M;
}

// Restriction matrix together with its basis labels. Bases are always stored
// in chamber order (the negative chamber lists F_n first), which makes
// triangularity of the envelope lower-triangularity of the stored entries in
// either chamber rather than a relabeling convention.
struct RestrictionMatrix {
    CMatrix entries;                 // entries(r, c) = Stab(basis[c]) at basis[r]
    std::vector<std::string> basis;  // fixed point labels, chamber order
};

inline RestrictionMatrix restriction_matrix(const EnvelopeParams& p, const QContext& ctx,
                                            Chamber ch,
                                            Polarization pol = Polarization::standard) {
    const int n = p.n();
    const CMatrix M = restriction_matrix_tpn(p, ctx, ch, pol);
    RestrictionMatrix R{CMatrix(n, n), {}};
    R.basis.reserve(static_cast<size_t>(n));
    for (int r = 0; r < n; ++r) {
        const int jr = (ch == Chamber::positive) ? r : n - 1 - r;
        R.basis.push_back("F" + std::to_string(jr + 1));
        for (int c = 0; c < n; ++c) {
            const int kc = (ch == Chamber::positive) ? c : n - 1 - c;
            R.entries(r, c) = M(jr, kc);
        }
    }
    return R;
}

// Ratio M(j, k)(qz) / M(j, k)(z). Both Kahler thetas shift by one power of q
// and their monomial multipliers cancel down to s^{-1} = a_j at the fixed
// point, divided by the a_k riding along with s.
inline Complex z_quasiperiodicity_factor(int j, int k, const EnvelopeParams& p) {
    return (p.a[j] / p.a[k]).value();
}

// Closed form of the diagonal restriction: the product of theta over the
// repelling half of the tangent space at F_k.
inline Complex stab_tpn_diagonal(int k, const EnvelopeParams& p, const QContext& ctx,
                                 Chamber ch) {
    Complex d(1.0);
    for (int i = 0; i < p.n(); ++i) {
        if (i == k) continue;
        const bool near_side = (ch == Chamber::positive) ? (i < k) : (i > k);
        const MultPoint r = p.a[i] / p.a[k];
        d *= theta(near_side ? r : r * p.hbar, ctx);
    }
    return d;
}

// Predicted ratio (shifted product) / (base product) when each argument moves
// by an exact integer power of q, using
//   theta(q^e y) = (-1)^e q^{-e^2/2} y^{-e} theta(y).
// This is the structural quasi-periodicity statement; tests compare it with
// the directly evaluated ratio.
inline Complex predicted_quasi_period_factor(const std::vector<ThetaFactor>& base,
                                             const std::vector<ThetaFactor>& shifted,
                                             const QContext& ctx) {
    if (base.size() != shifted.size())
        throw config_invalid("quasi-period: factor lists of different shape");
    Complex mult(1.0);
    for (size_t f = 0; f < base.size(); ++f) {
        if (base[f].power != shifted[f].power)
            throw config_invalid("quasi-period: factor powers differ");
        const Complex d = (shifted[f].arg.u - base[f].arg.u) / ctx.log_q;
        const long e = std::lround(d.real());
        if (std::abs(d - Complex(static_cast<double>(e), 0.0)) > 1e-9)
            throw config_invalid("quasi-period: shift is not an integer q-power");
        if (e == 0) continue;
        const double ed = static_cast<double>(e);
        Complex m = std::exp(-(ed * ed / 2.0) * ctx.log_q - ed * base[f].arg.u);
        if (e & 1) m = -m;
        for (int p = base[f].power; p > 0; --p) mult *= m;
        for (int p = base[f].power; p < 0; ++p) mult /= m;
    }
    return mult;
}

struct TriangleFactorization {
    CMatrix candidate;  // M(z) * B(z)^{-1}
    CMatrix block;      // B(z)
};

// Probe of the factorization through the subvariety spanned by the first m
// coordinate points: B embeds the restriction matrix of that T*P^{m-1},
// taken at Kahler parameter z hbar^{m-n}, as the leading block.
inline TriangleFactorization triangle_candidate(const EnvelopeParams& p, const QContext& ctx,
                                                int m) {
    const int n = p.n();
    if (m < 1 || m > n) throw config_invalid("triangle_candidate: need 1 <= m <= n");
    EnvelopeParams sub;
    sub.a.assign(p.a.begin(), p.a.begin() + m);
    sub.hbar = p.hbar;
    sub.z = p.z * p.hbar.pow(m - n);
    const CMatrix Msub = restriction_matrix_tpn(sub, ctx, Chamber::positive);
    CMatrix B = CMatrix::identity(n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) B(i, j) = Msub(i, j);
    const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
    return {M * inverse(B), B};
}

// Whether the factorization candidate M B^{-1} must vanish at (j, k): inside
// the block it is diagonal; in block columns below the block it carries the
// ambient envelope's attracting tail and is genuinely nonzero.
inline bool triangle_zero_expected(int j, int k, int m) {
    return (k < m) ? (j < m && j != k) : (j < k);
}

// Predicted diagonal of the candidate: for j inside the block only the theta
// over directions leaving the subvariety survive; outside, the full repelling
// product of F_j.
inline Complex triangle_diagonal_predicted(int j, int m, const EnvelopeParams& p,
                                           const QContext& ctx) {
    Complex d(1.0);
    if (j < m) {
        for (int i = m; i < p.n(); ++i) d *= theta(p.a[i] / p.a[j] * p.hbar, ctx);
    } else {
        d = stab_tpn_diagonal(j, p, ctx, Chamber::positive);
    }
    return d;
}

struct TriangleCheck {
    double zero_residual;      // largest asserted-zero entry over the product scale
    double diagonal_residual;  // worst relative error of the predicted diagonal
    double shift_residual;     // worst relative deviation of the z-shift monomial
};

// The three structural identities of the factorization probe, as residuals.
inline TriangleCheck triangle_factorization_check(const EnvelopeParams& p, const QContext& ctx,
                                                  int m) {
    const int n = p.n();
    const TriangleFactorization tf = triangle_candidate(p, ctx, m);
    const CMatrix& C = tf.candidate;
    const double scale =
        max_abs(restriction_matrix_tpn(p, ctx, Chamber::positive)) * max_abs(inverse(tf.block));
    TriangleCheck r{0.0, 0.0, 0.0};
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            if (triangle_zero_expected(j, k, m))
                r.zero_residual = std::max(r.zero_residual, std::abs(C(j, k)) / scale);
    for (int j = 0; j < n; ++j) {
        const Complex want = triangle_diagonal_predicted(j, m, p, ctx);
        r.diagonal_residual =
            std::max(r.diagonal_residual, std::abs(C(j, j) - want) / std::abs(want));
    }
    EnvelopeParams pq = p;
    pq.z = p.z * MultPoint{ctx.log_q};
    const CMatrix Cq = triangle_candidate(pq, ctx, m).candidate;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            if (triangle_zero_expected(j, k, m)) continue;
            const Complex want = z_quasiperiodicity_factor(j, k, p) * C(j, k);
            r.shift_residual =
                std::max(r.shift_residual, std::abs(Cq(j, k) - want) / std::abs(want));
        }
    return r;
}

// ---------------------------------------------------------------------------
// Hypertoric spaces, data driven: the variety enters only through its weight
// matrix (for the smoothness gate) and per-fixed-point envelope data.

// Multiplicative character of the framing torus times the hbar circle.
struct TChar {
    std::vector<int> a_exp;
    int hbar_exp = 0;
};

// Monomial in the Chern roots s_i twisted by a character: a theta argument.
struct SRoot {
    std::vector<int> s_exp;
    TChar tw;
};

struct HypertoricFixedPoint {
    std::vector<TChar> alpha;        // restriction of each Chern root s_i
    std::vector<SRoot> m1_roots;     // arguments of the attracting theta block
    std::vector<int> z_hbar_shift;   // hbar exponent on each Kahler parameter
    std::string label;
};

struct HypertoricParams {
    std::vector<MultPoint> a;
    MultPoint hbar;
    std::vector<MultPoint> z;  // one per quotient circle
};

struct HypertoricData {
    std::vector<std::vector<int>> weight_matrix;  // quotient torus weights, rows x coords
    std::vector<HypertoricFixedPoint> fixed_points;

    int circles() const { return static_cast<int>(weight_matrix.size()); }
};

// Exact integer determinant by fraction-free elimination.
inline long long int_det(std::vector<std::vector<long long>> m) {
    const int n = static_cast<int>(m.size());
    long long prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m[k][k] == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i)
                if (m[i][k] != 0) {
                    p = i;
                    break;
                }
            if (p < 0) return 0;
            std::swap(m[k], m[p]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j)
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

// Smoothness gate: every square minor of the weight matrix must be 0 or +-1.
inline void validate_weight_matrix(const std::vector<std::vector<int>>& W) {
    const int d = static_cast<int>(W.size());
    if (d == 0) throw config_invalid("weight matrix: no rows");
    const int n = static_cast<int>(W[0].size());
    for (const auto& row : W)
        if (static_cast<int>(row.size()) != n)
            throw config_invalid("weight matrix: ragged rows");
    if (d > 12 || n > 12) throw config_invalid("weight matrix: dimensions beyond support");
    const int rmax = std::min(d, n);
    std::vector<int> rsel, csel;
    for (int r = 1; r <= rmax; ++r) {
        for (unsigned rm = 0; rm < (1u << d); ++rm) {
            if (std::popcount(rm) != r) continue;
            rsel.clear();
            for (int i = 0; i < d; ++i)
                if (rm & (1u << i)) rsel.push_back(i);
            for (unsigned cm = 0; cm < (1u << n); ++cm) {
                if (std::popcount(cm) != r) continue;
                csel.clear();
                for (int j = 0; j < n; ++j)
                    if (cm & (1u << j)) csel.push_back(j);
                std::vector<std::vector<long long>> sub(r, std::vector<long long>(r));
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < r; ++j) sub[i][j] = W[rsel[i]][csel[j]];
                const long long dmin = int_det(std::move(sub));
                if (dmin < -1 || dmin > 1)
                    throw config_invalid("weight matrix: minor outside {0, +-1}");
            }
        }
    }
}

inline MultPoint tchar_eval(const TChar& c, const HypertoricParams& par) {
    if (c.a_exp.size() != par.a.size()) throw config_invalid("tchar: wrong a dimension");
    Complex u(0.0);
    for (size_t i = 0; i < par.a.size(); ++i)
        u += static_cast<double>(c.a_exp[i]) * par.a[i].u;
    u += static_cast<double>(c.hbar_exp) * par.hbar.u;
    return {u};
}

inline Complex stab_hypertoric(const HypertoricData& hd, int fp,
                               const std::vector<MultPoint>& s, const HypertoricParams& par,
                               const QContext& ctx) {
    const auto& F = hd.fixed_points.at(static_cast<size_t>(fp));
    const size_t d = static_cast<size_t>(hd.circles());
    if (s.size() != d || F.alpha.size() != d || F.z_hbar_shift.size() != d ||
        par.z.size() != d)
        throw config_invalid("stab_hypertoric: circle dimension mismatch");
    Complex v(1.0);
    for (const SRoot& r : F.m1_roots) {
        if (r.s_exp.size() != d) throw config_invalid("stab_hypertoric: root dimension");
        Complex u = tchar_eval(r.tw, par).u;
        for (size_t i = 0; i < d; ++i) u += static_cast<double>(r.s_exp[i]) * s[i].u;
        v *= theta(MultPoint{u}, ctx);
    }
    for (size_t i = 0; i < d; ++i) {
        const MultPoint zi = par.z[i] * par.hbar.pow(F.z_hbar_shift[i]);
        if (near_theta_zero(zi.u, ctx.log_q, 1e-10))
            throw denominator_vanishes("stab_hypertoric: resonant Kahler parameter");
        const MultPoint ai = tchar_eval(F.alpha[i], par);
        v *= theta(s[i] * zi / ai, ctx) / theta(zi, ctx);
    }
    return v;
}

inline CMatrix restriction_matrix_hypertoric(const HypertoricData& hd,
                                             const HypertoricParams& par,
                                             const QContext& ctx) {
    validate_weight_matrix(hd.weight_matrix);
    const int N = static_cast<int>(hd.fixed_points.size());
    CMatrix M(N, N);
    std::vector<MultPoint> s;
    for (int j = 0; j < N; ++j) {
        s.clear();
        for (const TChar& c : hd.fixed_points[j].alpha) s.push_back(tchar_eval(c, par));
        for (int k = 0; k < N; ++k) M(j, k) = stab_hypertoric(hd, k, s, par, ctx);
    }
    return M;
}

// T*P^{n-1} as hypertoric data: a single quotient circle of weights (1,...,1).
inline HypertoricData encode_tpn(int n) {
    HypertoricData hd;
    hd.weight_matrix = {std::vector<int>(n, 1)};
    for (int k = 0; k < n; ++k) {
        HypertoricFixedPoint F;
        F.label = "F" + std::to_string(k + 1);
        TChar alpha;
        alpha.a_exp.assign(n, 0);
        alpha.a_exp[k] = -1;
        F.alpha = {alpha};
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            SRoot r;
            r.s_exp = {1};
            r.tw.a_exp.assign(n, 0);
            r.tw.a_exp[i] = 1;
            r.tw.hbar_exp = (i < k) ? 0 : 1;
            F.m1_roots.push_back(std::move(r));
        }
        F.z_hbar_shift = {k + 1 - n};
        hd.fixed_points.push_back(std::move(F));
    }
    return hd;
}

// Product space: block weight matrix, concatenated coordinates, fixed point
// (iA, iB) stored at index iA * |B| + iB.
inline HypertoricData hypertoric_product(const HypertoricData& A, const HypertoricData& B) {
    const int nA = A.weight_matrix.empty() ? 0 : static_cast<int>(A.weight_matrix[0].size());
    const int nB = B.weight_matrix.empty() ? 0 : static_cast<int>(B.weight_matrix[0].size());
    const int dA = A.circles(), dB = B.circles();
    HypertoricData P;
    for (const auto& row : A.weight_matrix) {
        auto r = row;
        r.resize(static_cast<size_t>(nA + nB), 0);
        P.weight_matrix.push_back(std::move(r));
    }
    for (const auto& row : B.weight_matrix) {
        std::vector<int> r(static_cast<size_t>(nA), 0);
        r.insert(r.end(), row.begin(), row.end());
        P.weight_matrix.push_back(std::move(r));
    }
    auto pad_char = [&](const TChar& c, bool left) {
        TChar o;
        o.hbar_exp = c.hbar_exp;
        if (left) {
            o.a_exp = c.a_exp;
            o.a_exp.resize(static_cast<size_t>(nA + nB), 0);
        } else {
            o.a_exp.assign(static_cast<size_t>(nA), 0);
            o.a_exp.insert(o.a_exp.end(), c.a_exp.begin(), c.a_exp.end());
        }
        return o;
    };
    auto pad_root = [&](const SRoot& r, bool left) {
        SRoot o;
        o.tw = pad_char(r.tw, left);
        if (left) {
            o.s_exp = r.s_exp;
            o.s_exp.resize(static_cast<size_t>(dA + dB), 0);
        } else {
            o.s_exp.assign(static_cast<size_t>(dA), 0);
            o.s_exp.insert(o.s_exp.end(), r.s_exp.begin(), r.s_exp.end());
        }
        return o;
    };
    for (const auto& FA : A.fixed_points)
        for (const auto& FB : B.fixed_points) {
            HypertoricFixedPoint F;
            F.label = FA.label + "x" + FB.label;
            for (const auto& c : FA.alpha) F.alpha.push_back(pad_char(c, true));
            for (const auto& c : FB.alpha) F.alpha.push_back(pad_char(c, false));
            for (const auto& r : FA.m1_roots) F.m1_roots.push_back(pad_root(r, true));
            for (const auto& r : FB.m1_roots) F.m1_roots.push_back(pad_root(r, false));
            F.z_hbar_shift = FA.z_hbar_shift;
            F.z_hbar_shift.insert(F.z_hbar_shift.end(), FB.z_hbar_shift.begin(),
                                  FB.z_hbar_shift.end());
            P.fixed_points.push_back(std::move(F));
        }
    return P;
}

}  // namespace ellstab
