#pragma once

#include <array>
#include <functional>
#include <utility>

#include "envelopes.hpp"
#include "linalg.hpp"
#include "qseries.hpp"

namespace ellstab {

// Rank-one wall R-matrix on C^2(a_1) (x) C^2(a_2), presented on the weight
// basis e11, e12, e21, e22. The corner weight spaces sit over point components
// of the fixed locus, so the matrix is the identity there and all content
// lives in the middle 2x2 block. u = a_1/a_2 throughout; z is the dynamical
// (Kahler) parameter.
enum class RKind { from_stab, closed_form, felder };

inline CMatrix embed_weight_block(const CMatrix& b) {
    if (b.rows != 2 || b.cols != 2) throw config_invalid("embed_weight_block: need 2x2");
    CMatrix m = CMatrix::identity(4);
    m(1, 1) = b(0, 0);
    m(1, 2) = b(0, 1);
    m(2, 1) = b(1, 0);
    m(2, 2) = b(1, 1);
    return m;
}

// The chamber restriction matrices of the underlying T*P^1, written as closed
// triangular 2x2 forms after the framing parameters are inverted (the framing
// acts on Hom(W, V), so its characters enter the tensor-product picture
// through their inverses). The repelling chamber is upper triangular, the
// attracting one lower; the R-matrix is their ratio.
inline CMatrix r_chamber_factor(Chamber ch, MultPoint u, MultPoint hbar, MultPoint z,
                                const QContext& ctx) {
    CMatrix m(2, 2);
    if (ch == Chamber::negative) {
        m(0, 0) = eval_theta_factors({{u, +1}}, ctx);
        m(0, 1) = eval_theta_factors({{hbar, +1}, {z * u, +1}, {z, -1}}, ctx);
        m(1, 0) = 0.0;
        m(1, 1) = eval_theta_factors({{hbar / u, +1}}, ctx);
    } else {
        m(0, 0) = eval_theta_factors({{u * hbar, +1}}, ctx);
        m(0, 1) = 0.0;
        m(1, 0) = eval_theta_factors({{hbar, +1}, {z / u, +1}, {z, -1}}, ctx);
        m(1, 1) = eval_theta_factors({{u.inv(), +1}}, ctx);
    }
    return m;
}

// R-matrix as the envelope construction produces it: restriction matrices of
// T*P^1 for the two chambers, with framing characters inverted and the Kahler
// parameter offset by one hbar so that the product lands on the conventions
// of the closed form.
inline CMatrix r_from_stab(MultPoint u, MultPoint hbar, MultPoint z, const QContext& ctx) {
    if (near_theta_zero((u / hbar).u, ctx.log_q, 1e-8))
        throw singular_matrix("r_from_stab: repelling restriction matrix is singular");
    EnvelopeParams p;
    p.a = {u.inv(), MultPoint{}};
    p.hbar = hbar;
    p.z = z * hbar;
    const CMatrix neg = restriction_matrix_tpn(p, ctx, Chamber::negative);
    const CMatrix pos = restriction_matrix_tpn(p, ctx, Chamber::positive);
    return embed_weight_block(inverse(neg) * pos);
}

// Closed form of the same ratio; the top-left entry is the one the three-term
// relation with (A, B, C) = (z, u, hbar) collapses.
inline CMatrix r_closed_form(MultPoint u, MultPoint hbar, MultPoint z, const QContext& ctx) {
    CMatrix b(2, 2);
    b(0, 0) = eval_theta_factors(
        {{z * hbar, +1}, {z / hbar, +1}, {u, +1}, {z, -1}, {z, -1}, {u / hbar, -1}}, ctx);
    b(0, 1) = -eval_theta_factors({{hbar, +1}, {z * u, +1}, {z, -1}, {u / hbar, -1}}, ctx);
    b(1, 0) = -eval_theta_factors({{hbar, +1}, {z / u, +1}, {z, -1}, {u / hbar, -1}}, ctx);
    b(1, 1) = eval_theta_factors({{u, +1}, {u / hbar, -1}}, ctx);
    return embed_weight_block(b);
}

// The textbook dynamical R-matrix in the same variables. Differs from the
// closed form by a z-dependent rescaling of the diagonal of the weight-zero
// block (by theta(z/hbar)/theta(z) and its inverse); the off-diagonal entries
// agree on the nose.
inline CMatrix r_felder(MultPoint u, MultPoint hbar, MultPoint z, const QContext& ctx) {
    CMatrix b(2, 2);
    b(0, 0) = eval_theta_factors({{z * hbar, +1}, {u.inv(), +1}, {hbar / u, -1}, {z, -1}}, ctx);
    b(0, 1) = eval_theta_factors({{z * u, +1}, {hbar, +1}, {hbar / u, -1}, {z, -1}}, ctx);
    b(1, 0) = eval_theta_factors({{z / u, +1}, {hbar, +1}, {hbar / u, -1}, {z, -1}}, ctx);
    b(1, 1) = eval_theta_factors({{hbar / z, +1}, {u, +1}, {hbar / u, -1}, {z, -1}}, ctx);
    return embed_weight_block(b);
}

inline CMatrix r_matrix(RKind kind, MultPoint u, MultPoint hbar, MultPoint z,
                        const QContext& ctx) {
    switch (kind) {
        case RKind::from_stab: return r_from_stab(u, hbar, z, ctx);
        case RKind::closed_form: return r_closed_form(u, hbar, z, ctx);
        case RKind::felder: return r_felder(u, hbar, z, ctx);
    }
    throw config_invalid("r_matrix: unknown kind");
}

// Determinant of the weight-zero block. Shared by all three presentations:
// the diagonal gauge between them has determinant one, and on the triangular
// factors it is just the ratio of their diagonal products.
inline Complex r_weight_block_det(MultPoint u, MultPoint hbar, const QContext& ctx) {
    return eval_theta_factors({{u * hbar, +1}, {u / hbar, -1}}, ctx);
}

// Evaluator in the dynamical parameter at frozen (u, hbar). The dynamical
// Yang-Baxter machinery below composes these at shifted arguments.
using REvaluator = std::function<CMatrix(const MultPoint&)>;

inline REvaluator r_evaluator(RKind kind, MultPoint u, MultPoint hbar, QContext ctx) {
    return [kind, u, hbar, ctx](const MultPoint& z) { return r_matrix(kind, u, hbar, z, ctx); };
}

// Dynamical argument shifted by a fixed power of hbar (the determinant of the
// index bundle of the wall). Zero shift returns an evaluator with identical
// values; a shift composed with its inverse is again the identity.
inline REvaluator wall_shift(REvaluator r, MultPoint hbar, int ind_det) {
    return [r = std::move(r), hbar, ind_det](const MultPoint& z) {
        return r(z * hbar.pow(-ind_det));
    };
}

// Gauge action on the diagonal of the weight-zero block: the (1,1) entry
// picks up f(z), the (2,2) entry 1/f(z). This is the dynamical diagonal
// twist, and it preserves solutions of the dynamical Yang-Baxter equation for
// an arbitrary scalar function f (entrywise the matrix of course changes).
// The two closed presentations above differ by exactly this action with
// f(z) = theta(z/hbar)/theta(z).
inline REvaluator gauge_weight_diagonal(REvaluator r, std::function<Complex(const MultPoint&)> f) {
    return [r = std::move(r), f = std::move(f)](const MultPoint& z) {
        CMatrix m = r(z);
        const Complex fz = f(z);
        m(1, 1) *= fz;
        m(2, 2) /= fz;
        return m;
    };
}

// Two-site swap on C^2 (x) C^2.
inline CMatrix flip_two_site() {
    CMatrix f(4, 4);
    f(0, 0) = 1.0;
    f(1, 2) = 1.0;
    f(2, 1) = 1.0;
    f(3, 3) = 1.0;
    return f;
}

// Residual of R_21(u^{-1}) R(u) = 1, the two-chamber instance of the braid
// relation (going around the unique wall and coming back). Exactly zero when
// both inputs are the identity. Normalized by the bilinear scale of the
// product: reduced theta factors grow fast with the real part of the log
// arguments, and an absolute measure would report that roundoff
// amplification instead of the identity.
inline double unitarity_residual(const CMatrix& r_at_u, const CMatrix& r_at_u_inv) {
    const CMatrix f = flip_two_site();
    const CMatrix prod = f * r_at_u_inv * f * r_at_u;
    const CMatrix diff = prod - CMatrix::identity(4);
    return max_abs(diff) / std::max(1.0, max_abs(r_at_u) * max_abs(r_at_u_inv));
}

inline double check_unitarity(RKind kind, MultPoint u, MultPoint hbar, MultPoint z,
                              const QContext& ctx) {
    return unitarity_residual(r_matrix(kind, u, hbar, z, ctx),
                              r_matrix(kind, u.inv(), hbar, z, ctx));
}

// Weights of the C^2 basis states: mu drives the dynamical shifts of the
// Yang-Baxter equation, v is the Kahler weight the wall bookkeeping uses
// (mu = w - C v with w = 1 and Cartan matrix (2)). State 0 is the charged
// one, state 1 the vacuum: the first fixed point of the underlying T*P^1 is
// the charge sitting at the first framing site, which puts the charged state
// first in each factor.
inline constexpr int mu_weight(int j) { return j == 0 ? -1 : +1; }
inline constexpr int v_weight(int j) { return j == 0 ? 1 : 0; }

// Lift a two-site matrix to (C^2)^{(x)3} acting on tensor factors f < g with
// spectator s, the two-site matrix being allowed to depend on the spectator's
// basis state (that is how operator-valued dynamical shifts act).
inline CMatrix lift_two_site(const CMatrix& r_s0, const CMatrix& r_s1, int f, int g, int s) {
    CMatrix out(8, 8);
    for (int bo = 0; bo < 8; ++bo) {
        const std::array<int, 3> jo{(bo >> 2) & 1, (bo >> 1) & 1, bo & 1};
        for (int bi = 0; bi < 8; ++bi) {
            const std::array<int, 3> ji{(bi >> 2) & 1, (bi >> 1) & 1, bi & 1};
            if (jo[s] != ji[s]) continue;
            const CMatrix& r = ji[s] == 0 ? r_s0 : r_s1;
            out(bo, bi) = r(2 * jo[f] + jo[g], 2 * ji[f] + ji[g]);
        }
    }
    return out;
}

namespace detail {

// R acting on factors (f, g) with the dynamical argument shifted per
// spectator state by hbar^{-shift(j_s)}.
inline CMatrix lift_shifted(const REvaluator& r, int f, int g, int s, const MultPoint& z,
                            const MultPoint& hbar, const std::array<int, 2>& shift) {
    const CMatrix r0 = r(z * hbar.pow(-shift[0]));
    const CMatrix r1 = r(z * hbar.pow(-shift[1]));
    return lift_two_site(r0, r1, f, g, s);
}

inline constexpr std::array<int, 2> kNoShift{0, 0};
inline constexpr std::array<int, 2> kMuShift{mu_weight(0), mu_weight(1)};

}  // namespace detail

// The two sides of the dynamical Yang-Baxter equation
//   R_12(z) R_13(z hbar^{-mu^(2)}) R_23(z) =
//   R_23(z hbar^{-mu^(1)}) R_13(z) R_12(z hbar^{-mu^(3)})
// with the dynamical shift acting blockwise through the spectator's weight.
inline CMatrix dyb_lhs(const REvaluator& r12, const REvaluator& r13, const REvaluator& r23,
                       const MultPoint& z, const MultPoint& hbar) {
    using namespace detail;
    return lift_shifted(r12, 0, 1, 2, z, hbar, kNoShift) *
           lift_shifted(r13, 0, 2, 1, z, hbar, kMuShift) *
           lift_shifted(r23, 1, 2, 0, z, hbar, kNoShift);
}

inline CMatrix dyb_rhs(const REvaluator& r12, const REvaluator& r13, const REvaluator& r23,
                       const MultPoint& z, const MultPoint& hbar) {
    using namespace detail;
    return lift_shifted(r23, 1, 2, 0, z, hbar, kMuShift) *
           lift_shifted(r13, 0, 2, 1, z, hbar, kNoShift) *
           lift_shifted(r12, 0, 1, 2, z, hbar, kMuShift);
}

inline double dyb_residual(const REvaluator& r12, const REvaluator& r13, const REvaluator& r23,
                           const MultPoint& z, const MultPoint& hbar) {
    const CMatrix lhs = dyb_lhs(r12, r13, r23, z, hbar);
    const CMatrix rhs = dyb_rhs(r12, r13, r23, z, hbar);
    const double scale = std::max({1.0, max_abs(lhs), max_abs(rhs)});
    return max_abs(lhs - rhs) / scale;
}

inline double check_dyb(RKind kind, MultPoint a1, MultPoint a2, MultPoint a3, MultPoint hbar,
                        MultPoint z, const QContext& ctx) {
    return dyb_residual(r_evaluator(kind, a1 / a2, hbar, ctx),
                        r_evaluator(kind, a1 / a3, hbar, ctx),
                        r_evaluator(kind, a2 / a3, hbar, ctx), z, hbar);
}

// Composite of the three wall crossings from the dominant chamber of three
// framing parameters to the opposite one, in the wall matrices' own dynamical
// variables: each crossing is shifted by the spectator's weights (v for the
// outer crossings, mu + v for the middle one), and at the end the global
// substitution z -> z hbar^{V} is applied per total-v sector V. The result
// must reproduce the left side of the Yang-Baxter equation above, which is
// how the braid relation becomes that equation.
inline CMatrix wall_chain(const REvaluator& rw12, const REvaluator& rw13, const REvaluator& rw23,
                          const MultPoint& z, const MultPoint& hbar) {
    CMatrix out(8, 8);
    const auto total_v = [](int b) {
        return v_weight((b >> 2) & 1) + v_weight((b >> 1) & 1) + v_weight(b & 1);
    };
    for (int sector = 0; sector <= 3; ++sector) {
        const MultPoint base = z * hbar.pow(sector);
        const std::array<int, 2> v_shift{v_weight(0), v_weight(1)};
        const std::array<int, 2> mv_shift{mu_weight(0) + v_weight(0), mu_weight(1) + v_weight(1)};
        const CMatrix c = detail::lift_shifted(rw12, 0, 1, 2, base, hbar, v_shift) *
                          detail::lift_shifted(rw13, 0, 2, 1, base, hbar, mv_shift) *
                          detail::lift_shifted(rw23, 1, 2, 0, base, hbar, v_shift);
        for (int bo = 0; bo < 8; ++bo)
            for (int bi = 0; bi < 8; ++bi)
                if (total_v(bo) == sector && total_v(bi) == sector) out(bo, bi) = c(bo, bi);
    }
    return out;
}

inline double wall_chain_residual(const REvaluator& r12, const REvaluator& r13,
                                  const REvaluator& r23, const MultPoint& z,
                                  const MultPoint& hbar) {
    // On the weight-zero block of a pair the Kahler weight is one, so the wall
    // matrix is the Yang-Baxter matrix at a single-power shift; the corner
    // blocks are constant and never see the argument.
    const CMatrix lhs = wall_chain(wall_shift(r12, hbar, 1), wall_shift(r13, hbar, 1),
                                   wall_shift(r23, hbar, 1), z, hbar);
    const CMatrix rhs = dyb_lhs(r12, r13, r23, z, hbar);
    const double scale = std::max({1.0, max_abs(lhs), max_abs(rhs)});
    return max_abs(lhs - rhs) / scale;
}

}  // namespace ellstab
