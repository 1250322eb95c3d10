#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "envelopes.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "qseries.hpp"

namespace ellstab {

// ---------------------------------------------------------------------------
// Vertex functions of T*P^{n-1}: the quasimap z-series at each fixed point,
// its exponential-times-phi prefactor, a single-valued contour form of the
// same function, and the transport that subtracts the poles on the divisors
// a_i/a_j = q^{-m}. Everything is evaluated through logs (MultPoint), so the
// half powers and branch pairings the formulas rely on stay exact.

// Kahler parameter shifted by the half weight of the polarization:
// z_# = z * twist.value(). The twist (-hbar^{1/2})^n is carried as a formal
// half power whose base is hbar with the log moved by 2 pi i; its half is
// then -hbar^{1/2} exactly, and squares stay on the principal branch.
struct SharpKahler {
    MultPoint z_sharp;
    HalfWeight twist;
};

inline SharpKahler sharp_kahler(const EnvelopeParams& p) {
    const int n = p.n();
    const MultPoint base{p.hbar.u + Complex(0.0, 2.0 * std::numbers::pi)};
    const HalfWeight twist{base, n};
    return {MultPoint{p.z.u + base.u * (0.5 * n)}, twist};
}

// Whether u lies within eps of the zero locus of phi, which is the half
// lattice {m log q + 2 pi i k : m <= -1} (phi(x) = 0 exactly at x = q^{-m},
// m >= 1). Same rounding scan as near_theta_zero, restricted to that side.
inline bool near_phi_zero(Complex u, Complex log_q, double eps = 1e-8) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double mf = u.real() / log_q.real();
    const double kf = (u.imag() - mf * log_q.imag()) / two_pi;
    const long m0 = std::lround(mf);
    const long k0 = std::lround(kf);
    for (long m = m0 - 1; m <= m0 + 1; ++m) {
        if (m >= 0) continue;
        for (long k = k0 - 1; k <= k0 + 1; ++k) {
            const Complex r = u - static_cast<double>(m) * log_q -
                              Complex(0.0, static_cast<double>(k) * two_pi);
            if (std::abs(r) < eps) return true;
        }
    }
    return false;
}

// Truncated z-expansion of the vertex at one fixed point. Coefficients are
// numbers at the given (a, hbar, q); the degree-zero term is exactly 1.
struct VertexSeries {
    int fixed_point = 0;
    std::vector<Complex> coeffs;

    int order() const { return static_cast<int>(coeffs.size()) - 1; }

    Complex eval(Complex z) const {
        Complex v(0.0);
        for (int d = order(); d >= 0; --d) v = v * z + coeffs[d];
        return v;
    }
};

// Degree-d coefficient ratio, product over all n coordinates:
//   c_d / c_{d-1} = (-q hbar^{-1/2})^n prod_i (1 - hbar x_i q^{d-1}) / (1 - x_i q^d),
// x_i = a_i / a_k. The denominator vanishes exactly when a_i/a_k = q^{-d},
// the resonance this gate rejects with the offending pair named.
inline VertexSeries vertex_tpn(int k, int order, const EnvelopeParams& p, const QContext& ctx) {
    const int n = p.n();
    if (k < 0 || k >= n) throw config_invalid("vertex_tpn: fixed point index out of range");
    if (order < 0) throw config_invalid("vertex_tpn: negative truncation order");
    const Complex q = ctx.q();
    const Complex step = std::exp(static_cast<double>(n) *
                                  (ctx.log_q - 0.5 * p.hbar.u + Complex(0.0, std::numbers::pi)));
    std::vector<Complex> num(n), den(n);
    for (int i = 0; i < n; ++i) {
        const Complex x = (p.a[i] / p.a[k]).value();
        num[i] = p.hbar.value() * x;  // hbar x_i q^{d-1} at d = 1
        den[i] = q * x;               // x_i q^d at d = 1
    }
    VertexSeries s{k, {Complex(1.0)}};
    s.coeffs.reserve(static_cast<size_t>(order) + 1);
    for (int d = 1; d <= order; ++d) {
        Complex r = step;
        for (int i = 0; i < n; ++i) {
            const Complex dfac = Complex(1.0) - den[i];
            if (std::abs(dfac) < 1e-10 * std::max(1.0, std::abs(den[i])))
                throw resonant("vertex_tpn: a_" + std::to_string(i + 1) + "/a_" +
                               std::to_string(k + 1) + " at q^{-" + std::to_string(d) + "}");
            r *= (Complex(1.0) - num[i]) / dfac;
            num[i] *= q;
            den[i] *= q;
        }
        s.coeffs.push_back(s.coeffs.back() * r);
    }
    return s;
}

// Full prefactor at F_{k+1}: the bilinear exponential of z_# against a_k
// times prod_{i != k} phi(q hbar^{-1} a_k/a_i) / phi(a_k/a_i). The phi
// denominator puts the prefactor's pole exactly at a_k/a_i = q^{-m}, m >= 0.
inline Complex vertex_prefactor(int k, const EnvelopeParams& p, const QContext& ctx) {
    const int n = p.n();
    if (k < 0 || k >= n) throw config_invalid("vertex_prefactor: fixed point index out of range");
    const SharpKahler zs = sharp_kahler(p);
    Complex v = bilinear_exp(zs.z_sharp, p.a[k], ctx);
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const MultPoint r = p.a[k] / p.a[i];
        if (near_phi_zero(r.u, ctx.log_q))
            throw denominator_vanishes("vertex_prefactor: a_k/a_i on q^{-m}, m >= 0");
        v *= phi(std::exp(ctx.log_q - p.hbar.u + r.u), ctx) / phi(r, ctx);
    }
    return v;
}

// Prefactor times series at the params' own Kahler point.
inline Complex vertex_value(int k, int order, const EnvelopeParams& p, const QContext& ctx) {
    return vertex_prefactor(k, p, ctx) * vertex_tpn(k, order, p, ctx).eval(p.z.value());
}

// Contour form of the same function. The residue formula's multivalued
// kernel exp(ln z_# ln s / ln q) is traded for the single-valued
//   (s a_k)^{1/2} theta(s a_k zeta) / theta(zeta),  zeta = q^{1-n} hbar^n / z_#,
// which has the same multiplier under s -> qs; summing residues over the
// family s = q^d/a_k then reproduces prefactor * series exactly, with the
// normalization constant
//   C_k = e(z_#)|_{a_k} phi(hbar) phi(q)
//         prod_{i != k} phi(q hbar^{-1} a_k/a_i) phi(hbar a_i/a_k)
//               / (phi(a_k/a_i) phi(q a_i/a_k)).
// The inner pole family {q^d/a_k} accumulates at s = 0 and the outer family
// {q^{-d}/(hbar a_i)} at infinity; the quadrature circle is the geometric
// mean of the gap, and a closed gap is reported as pinched, which happens
// exactly on a_k/a_i = hbar q^{m}, m in Z.
inline Complex vertex_contour(int k, const EnvelopeParams& p, const QContext& ctx,
                              int quad_points = 512) {
    const int n = p.n();
    if (k < 0 || k >= n) throw config_invalid("vertex_contour: fixed point index out of range");
    if (quad_points < 8) throw config_invalid("vertex_contour: too few quadrature nodes");
    const SharpKahler zs = sharp_kahler(p);
    const MultPoint zeta{(1.0 - n) * ctx.log_q + static_cast<double>(n) * p.hbar.u -
                         zs.z_sharp.u};
    if (near_theta_zero(zeta.u, ctx.log_q))
        throw denominator_vanishes("vertex_contour: kernel parameter on the theta lattice");
    const double log_inner = -p.a[k].u.real();
    double log_outer = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        log_outer = std::min(log_outer, -(p.hbar.u + p.a[i].u).real());
    const double margin = std::log(1.05);
    if (!(log_inner + margin < log_outer - margin))
        throw contour_pinched("vertex_contour: pole families leave no separating circle");
    const double log_r = 0.5 * (log_inner + log_outer);
    const Complex theta_zeta = theta(zeta, ctx);
    Complex acc(0.0);
    for (int j = 0; j < quad_points; ++j) {
        const Complex us(log_r, 2.0 * std::numbers::pi * j / quad_points);
        const Complex w = us + p.a[k].u;  // log(s a_k)
        Complex f = std::exp(0.5 * w) * theta(MultPoint{w + zeta.u}, ctx) / theta_zeta;
        f /= phi(std::exp(-w), ctx) * phi(std::exp(p.hbar.u + w), ctx);
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            const Complex ui = us + p.a[i].u;
            f *= phi(std::exp(ctx.log_q + ui), ctx) / phi(std::exp(p.hbar.u + ui), ctx);
        }
        acc += f;
    }
    acc /= static_cast<double>(quad_points);
    Complex c = bilinear_exp(zs.z_sharp, p.a[k], ctx) * phi(p.hbar, ctx) * phi(ctx.q(), ctx);
    for (int i = 0; i < n; ++i) {
        if (i == k) continue;
        const Complex r = (p.a[k] / p.a[i]).u;
        c *= phi(std::exp(ctx.log_q - p.hbar.u + r), ctx) * phi(std::exp(p.hbar.u - r), ctx) /
             (phi(std::exp(r), ctx) * phi(std::exp(ctx.log_q - r), ctx));
    }
    return c * acc;
}

// ---------------------------------------------------------------------------
// Pole subtraction. T is lower triangular and G_k(z) = sum_{j<=k} T[k][j] S_j(z)
// is regular across the divisors a_i/a_j = q^{-m} even though each column has
// a simple pole there (the j < k columns through 1/phi(a_j/a_k), the diagonal
// through the series denominators). Entries are the residue sums of the
// theta-kernel contour form over each inner pole family; the kernel ratio's
// quasi-periodicity in z supplies exactly the z_#^m twist that aligns the
// columns' z-gradings on the m-th divisor.

inline CMatrix pole_subtraction_transport(const EnvelopeParams& p, const QContext& ctx) {
    const int n = p.n();
    const SharpKahler zs = sharp_kahler(p);
    const Complex phi_h = phi(p.hbar, ctx);
    const Complex phi_q = phi(ctx.q(), ctx);
    const Complex phi_qh = phi(std::exp(ctx.log_q - p.hbar.u), ctx);
    CMatrix t(n, n);
    for (int k = 0; k < n; ++k) {
        const MultPoint kernel{-zs.z_sharp.u + static_cast<double>(n - k) * p.hbar.u};
        for (int j = 0; j <= k; ++j) {
            Complex v(1.0);
            for (int i = k + 1; i < n; ++i) v *= (p.a[i] / p.a[j]).value();
            for (int i = 0; i < k; ++i) {
                if (i == j) continue;
                const Complex r = (p.a[j] / p.a[i]).u;
                v *= phi(std::exp(ctx.log_q - p.hbar.u + r), ctx) / phi(std::exp(r), ctx);
            }
            for (int i = k + 1; i < n; ++i) {
                const Complex r = (p.a[i] / p.a[j]).u;
                v *= phi(std::exp(ctx.log_q + r), ctx) / phi(std::exp(p.hbar.u + r), ctx);
            }
            if (j == k) {
                v /= phi_h * phi_q;
            } else {
                if (near_theta_zero(kernel.u, ctx.log_q, 1e-10))
                    throw denominator_vanishes(
                        "pole_subtraction_transport: kernel theta on its zero lattice");
                const MultPoint rkj = p.a[k] / p.a[j];
                v *= phi_qh / phi_q;
                v *= rkj.half_pow(1);
                v *= theta_reduced(MultPoint{kernel.u + rkj.u}, ctx) /
                     theta_reduced(kernel, ctx);
                v /= phi(std::exp(-rkj.u), ctx) * phi(std::exp(p.hbar.u + rkj.u), ctx);
            }
            t(k, j) = v;
        }
    }
    return t;
}

// Fixed point weights (det of the opposite polarization)^{-1/2} / Phi(T^dual):
// identically equal to (phi prefactor) / Theta(opposite polarization) there,
// which is what makes the transport a rescaling of the K-theoretic envelope.
inline std::vector<Complex> pole_subtraction_weights(const EnvelopeParams& p,
                                                     const QContext& ctx) {
    const int n = p.n();
    std::vector<Complex> w(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        Complex v = p.hbar.half_pow(n - 1);
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const MultPoint r = p.a[i] / p.a[j];
            v *= r.half_pow(1);
            v /= phi(r.inv(), ctx) * phi(MultPoint{p.hbar.u + r.u}, ctx);
        }
        w[static_cast<size_t>(j)] = v;
    }
    return w;
}

// The dual envelope in its K-theoretic normalization: transport with the
// fixed point weights divided out of each column. Inverse (up to the duality
// twist conjugation) of the opposite-polarization envelope at z_#.
inline CMatrix stab_sharp(const EnvelopeParams& p, const QContext& ctx) {
    CMatrix t = pole_subtraction_transport(p, ctx);
    const std::vector<Complex> w = pole_subtraction_weights(p, ctx);
    for (int k = 0; k < t.rows; ++k)
        for (int j = 0; j <= k; ++j) t(k, j) /= w[static_cast<size_t>(j)];
    return t;
}

// Diagonal of the twist K^{1/2} Phi(q (TX + T^dual X)) at the fixed points,
// with the scalar hbar power dropped: it cancels in every conjugation this
// twist enters. Tangent weights at F_k are {a_i/a_k, hbar^{-1} a_k/a_i}.
inline std::vector<Complex> duality_twist_diagonal(const EnvelopeParams& p,
                                                   const QContext& ctx) {
    const int n = p.n();
    std::vector<Complex> f(static_cast<size_t>(n), Complex(1.0));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            const Complex r = (p.a[i] / p.a[k]).u;
            f[static_cast<size_t>(k)] *= phi(std::exp(ctx.log_q + r), ctx) *
                                         phi(std::exp(ctx.log_q - p.hbar.u - r), ctx) *
                                         phi(std::exp(ctx.log_q - r), ctx) *
                                         phi(std::exp(ctx.log_q + p.hbar.u + r), ctx);
        }
    return f;
}

// The full pole subtraction operator
//   P[k][j] = e(z_{#,C})|_{a_k} prod_{i>k} e(hbar, a_i) T[k][j]
//             / (e(z_#)|_{a_j} Phipref_j),
// with z_{#,C}|_k = z_# hbar^{k+1-n}. The hbar pairings against the far
// framing variables come from the determinant monomial of the repelling
// polarization half riding on the shifted Kahler weight; without them each
// a_i -> q a_i shift with i > k would leave a bare hbar on the row. With
// them P is doubly q-periodic: invariant under z -> qz and under
// a_l -> q a_l for every l, and lower triangular in the original labels,
// which is the order opposite to ample.
inline CMatrix pole_subtraction_matrix(const EnvelopeParams& p, const QContext& ctx) {
    const int n = p.n();
    const SharpKahler zs = sharp_kahler(p);
    CMatrix t = pole_subtraction_transport(p, ctx);
    for (int k = 0; k < n; ++k) {
        const MultPoint zc{zs.z_sharp.u + static_cast<double>(k + 1 - n) * p.hbar.u};
        Complex row = bilinear_exp(zc, p.a[k], ctx);
        for (int i = k + 1; i < n; ++i) row *= bilinear_exp(p.hbar, p.a[i], ctx);
        for (int j = 0; j <= k; ++j) t(k, j) *= row;
    }
    for (int j = 0; j < n; ++j) {
        const Complex col = vertex_prefactor(j, p, ctx);
        for (int k = j; k < n; ++k) t(k, j) /= col;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Residue probes across a_1/a_2 = q^{-m} for the rank-one torus.

struct PoleProbeReport {
    int m = 0;                 // divisor a_1/a_2 = q^{-m}
    double residue = 0.0;      // worst relative residue of the subtracted pair
    double control = 0.0;      // same measure for the unsubtracted column alone
    double control_abs = 0.0;  // largest absolute control residue, for stability
    double scale = 0.0;        // largest per-coefficient normalization used
    bool vanished = false;     // residue < tol
};

// Residues in a of the transported pair G = T S, extracted per z-Laurent
// coefficient by a small log-circle around the divisor. The z-coefficients
// are circle DFTs on |z| = |q|^{-3/2}: the kernel ratio has theta zeros and
// poles accumulating at z = 0, so a Taylor view does not exist, and that
// radius sits between two lattice rings while roughly flattening the
// coefficient sizes. The control is the unsubtracted second column
// T[2][2] S_2: its residue must stay visibly nonzero (>= 1000 tol) or the
// cancellation certifies nothing and control_degenerate is thrown.
inline std::vector<PoleProbeReport> pole_cancellation_check(
    const EnvelopeParams& p, const QContext& ctx, int order, int m_max, double tol = 1e-7,
    double log_radius = 1e-3, int a_nodes = 16, int z_nodes = 64) {
    if (p.n() != 2) throw config_invalid("pole_cancellation_check: rank-one torus only");
    if (m_max < 1) throw config_invalid("pole_cancellation_check: need m_max >= 1");
    if (order < m_max + 2) throw config_invalid("pole_cancellation_check: need order >= m_max + 2");
    const int guard = 10;  // extra series degrees so kernel mixing of the tail stays negligible
    const int work_order = order + guard;
    if (z_nodes < 2 * work_order + 2)
        throw config_invalid("pole_cancellation_check: too few z nodes for the order");
    const double two_pi = 2.0 * std::numbers::pi;
    const double log_rz = -1.5 * ctx.log_q.real();
    std::vector<PoleProbeReport> out;
    out.reserve(static_cast<size_t>(m_max));
    for (int m = 1; m <= m_max; ++m) {
        const Complex u_star = p.a[1].u - static_cast<double>(m) * ctx.log_q;
        const double abs_x_star = std::exp((u_star - p.a[1].u).real());
        std::vector<Complex> res_g1(static_cast<size_t>(order) + 1),
            res_g2(static_cast<size_t>(order) + 1), res_ctl(static_cast<size_t>(order) + 1);
        std::vector<double> mag(static_cast<size_t>(order) + 1, 0.0);
        for (int l = 0; l < a_nodes; ++l) {
            const Complex w =
                log_radius * std::exp(Complex(0.0, two_pi * l / a_nodes));
            EnvelopeParams pl = p;
            pl.a[0] = MultPoint{u_star + w};
            const VertexSeries s1 = vertex_tpn(0, work_order, pl, ctx);
            const VertexSeries s2 = vertex_tpn(1, work_order, pl, ctx);
            std::vector<Complex> g1(static_cast<size_t>(z_nodes)),
                g2(static_cast<size_t>(z_nodes)), ctl(static_cast<size_t>(z_nodes));
            for (int zj = 0; zj < z_nodes; ++zj) {
                pl.z = MultPoint{Complex(log_rz, two_pi * zj / z_nodes)};
                const CMatrix t = pole_subtraction_transport(pl, ctx);
                const Complex zv = pl.z.value();
                const Complex v1 = s1.eval(zv), v2 = s2.eval(zv);
                g1[static_cast<size_t>(zj)] = t(0, 0) * v1;
                ctl[static_cast<size_t>(zj)] = t(1, 1) * v2;
                g2[static_cast<size_t>(zj)] = t(1, 0) * v1 + ctl[static_cast<size_t>(zj)];
            }
            const Complex x_l = std::exp(u_star + w - p.a[1].u);
            const Complex measure = x_l * w;  // x dw on the log-circle
            for (int d = 0; d <= order; ++d) {
                Complex c1(0.0), c2(0.0), cc(0.0);
                for (int zj = 0; zj < z_nodes; ++zj) {
                    const Complex ph =
                        std::exp(Complex(0.0, -two_pi * d * zj / z_nodes));
                    c1 += g1[static_cast<size_t>(zj)] * ph;
                    c2 += g2[static_cast<size_t>(zj)] * ph;
                    cc += ctl[static_cast<size_t>(zj)] * ph;
                }
                const Complex norm =
                    std::exp(Complex(-log_rz * d, 0.0)) / static_cast<double>(z_nodes);
                c1 *= norm;
                c2 *= norm;
                cc *= norm;
                res_g1[static_cast<size_t>(d)] += c1 * measure;
                res_g2[static_cast<size_t>(d)] += c2 * measure;
                res_ctl[static_cast<size_t>(d)] += cc * measure;
                mag[static_cast<size_t>(d)] =
                    std::max({mag[static_cast<size_t>(d)], std::abs(c1), std::abs(c2),
                              std::abs(cc)});
            }
        }
        double mag_max = 0.0;
        for (double v : mag) mag_max = std::max(mag_max, v);
        PoleProbeReport rep;
        rep.m = m;
        for (int d = 0; d <= order; ++d) {
            const double floor = std::max(mag[static_cast<size_t>(d)], 1e-6 * mag_max);
            const double scale_d = floor * abs_x_star * log_radius;
            const double r1 = std::abs(res_g1[static_cast<size_t>(d)]) /
                              (static_cast<double>(a_nodes) * scale_d);
            const double r2 = std::abs(res_g2[static_cast<size_t>(d)]) /
                              (static_cast<double>(a_nodes) * scale_d);
            const double rc = std::abs(res_ctl[static_cast<size_t>(d)]) /
                              (static_cast<double>(a_nodes) * scale_d);
            rep.residue = std::max({rep.residue, r1, r2});
            rep.control = std::max(rep.control, rc);
            rep.control_abs = std::max(
                rep.control_abs,
                std::abs(res_ctl[static_cast<size_t>(d)]) / static_cast<double>(a_nodes));
            rep.scale = std::max(rep.scale, scale_d);
        }
        rep.vanished = rep.residue < tol;
        if (rep.control < 1e3 * tol)
            throw control_degenerate("pole_cancellation_check: unsubtracted residue too small");
        out.push_back(rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// The a -> 0 limit of the subtracted pair along a chamber progression.

struct ALimitReport {
    int fixed_point = 0;
    Complex limit;                  // z^0 ratio against the point vertex, deepest step
    double drift = 0.0;             // last-step relative change, coefficients 0 and 1
    double shift_residual = 0.0;    // |(r_1/r_0) - sigma_k| / |sigma_k|
    int hbar_half_power = 0;        // nearest j with |limit| = |hbar|^{j/2}
    double modulus_residual = 0.0;  // relative distance of |limit| to that power
};

// Along a_1 = (a_1/a_2)_0 q^{-t} a_2 the transported pair, rescaled by the
// monomial a_k^{n-1-k} that converts e(z_{#,C}) to the analytic normalizer
// e(z_{#,C} q^{-repelling count}), converges coefficient by coefficient to
//   const_k * S_pt(sigma_k z) / (phi(hbar) phi(q)),
// where S_pt is the rank-one (point) vertex series and the substitution
// monomial is sigma_k = (-q hbar^{-1/2})^{n-1} (hbar/q)^k. The report keeps
// the measured limit, its convergence drift, the measured substitution
// monomial against sigma_k, and the nearest half power of |hbar| to |limit|
// (exact when the progression is drawn with unit-modulus a).
inline std::vector<ALimitReport> a_limit_check(const EnvelopeParams& p, const QContext& ctx,
                                               int steps = 11, int order = 8,
                                               int z_nodes = 16) {
    if (p.n() != 2) throw config_invalid("a_limit_check: rank-one torus only");
    if (steps < 3) throw config_invalid("a_limit_check: need at least 3 steps");
    const double two_pi = 2.0 * std::numbers::pi;
    const double log_rz = 0.5 * ctx.log_q.real();
    const Complex phi_hq = phi(p.hbar, ctx) * phi(ctx.q(), ctx);
    // point vertex coefficients 0 and 1
    const Complex s_pt_1 = std::exp(ctx.log_q - 0.5 * p.hbar.u + Complex(0.0, std::numbers::pi)) *
                           (Complex(1.0) - p.hbar.value()) / (Complex(1.0) - ctx.q());
    std::vector<std::vector<Complex>> r0(2), r1(2);
    for (int t = 0; t < steps; ++t) {
        EnvelopeParams pl = p;
        pl.a[0] = MultPoint{p.a[0].u - static_cast<double>(t) * ctx.log_q};
        const VertexSeries s1 = vertex_tpn(0, order, pl, ctx);
        const VertexSeries s2 = vertex_tpn(1, order, pl, ctx);
        for (int k = 0; k < 2; ++k) {
            Complex c0(0.0), c1(0.0);
            for (int zj = 0; zj < z_nodes; ++zj) {
                pl.z = MultPoint{Complex(log_rz, two_pi * zj / z_nodes)};
                const CMatrix tr = pole_subtraction_transport(pl, ctx);
                const Complex zv = pl.z.value();
                Complex wv = (k == 0) ? pl.a[0].value() * tr(0, 0) * s1.eval(zv)
                                      : tr(1, 0) * s1.eval(zv) + tr(1, 1) * s2.eval(zv);
                c0 += wv;
                c1 += wv * std::exp(Complex(0.0, -two_pi * zj / z_nodes));
            }
            c0 /= static_cast<double>(z_nodes);
            c1 *= std::exp(Complex(-log_rz, 0.0)) / static_cast<double>(z_nodes);
            r0[static_cast<size_t>(k)].push_back(c0 * phi_hq);
            r1[static_cast<size_t>(k)].push_back(c1 * phi_hq / s_pt_1);
        }
    }
    std::vector<ALimitReport> out;
    for (int k = 0; k < 2; ++k) {
        const auto& a0 = r0[static_cast<size_t>(k)];
        const auto& a1 = r1[static_cast<size_t>(k)];
        ALimitReport rep;
        rep.fixed_point = k;
        rep.limit = a0.back();
        const size_t last = a0.size() - 1;
        rep.drift = std::max(std::abs(a0[last] - a0[last - 1]) / std::abs(a0[last]),
                             std::abs(a1[last] - a1[last - 1]) / std::abs(a1[last]));
        const Complex sigma = std::exp(ctx.log_q - 0.5 * p.hbar.u + Complex(0.0, std::numbers::pi) +
                                       static_cast<double>(k) * (p.hbar.u - ctx.log_q));
        rep.shift_residual = std::abs(a1[last] / a0[last] - sigma) / std::abs(sigma);
        const double lm = std::log(std::abs(rep.limit));
        const double lh = 0.5 * p.hbar.u.real();
        const int j = static_cast<int>(std::lround(lm / lh));
        rep.hbar_half_power = j;
        const double want = std::exp(lh * j);
        rep.modulus_residual = std::abs(std::abs(rep.limit) - want) / want;
        out.push_back(rep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regular q-difference systems f(qx) = M(x) f(x) with M(0) invertible.

struct QDiffSystem {
    std::vector<CMatrix> coeffs;  // M(x) = sum_m coeffs[m] x^m

    int dim() const { return coeffs.empty() ? 0 : coeffs.front().rows; }

    CMatrix eval(Complex x) const {
        if (coeffs.empty()) throw config_invalid("qdiff system: no coefficients");
        CMatrix v = coeffs.back();
        for (int m = static_cast<int>(coeffs.size()) - 2; m >= 0; --m)
            v = x * v + coeffs[static_cast<size_t>(m)];
        return v;
    }
};

struct QDiffSolution {
    std::vector<CMatrix> series;     // B_d with B_0 = I
    std::vector<Complex> exponents;  // eigenvalues of M(0): the q-monodromy weights
    CMatrix basis, basis_inv;        // M(0) = basis diag(exponents) basis_inv
    Complex log_q{};

    // B(x) exp(ln M(0) ln x / ln q), branch of ln x supplied by the caller.
    CMatrix eval(Complex log_x) const {
        const int n = basis.rows;
        const Complex x = std::exp(log_x);
        CMatrix b = series.back();
        for (int d = static_cast<int>(series.size()) - 2; d >= 0; --d)
            b = x * b + series[static_cast<size_t>(d)];
        CMatrix e(n, n);
        for (int c = 0; c < n; ++c) {
            const Complex lam =
                std::exp(std::log(exponents[static_cast<size_t>(c)]) * log_x / log_q);
            for (int r = 0; r < n; ++r) e(r, c) = basis(r, c) * lam;
        }
        return b * (e * basis_inv);
    }
};

// Frobenius-type series solution at the regular singular point x = 0:
// B_0 = I and q^d B_d M_0 - M_0 B_d = sum_{m=1}^{d} M_m B_{d-m}, which is
// the scaled Sylvester equation and is solvable exactly when no eigenvalue
// ratio of M(0) equals q^d. That resonance, and a singular M(0), are gated.
inline QDiffSolution qdiff_series_solve(const QDiffSystem& sys, int order,
                                        const QContext& ctx) {
    if (sys.coeffs.empty()) throw config_invalid("qdiff_series_solve: empty system");
    const int n = sys.dim();
    for (const CMatrix& c : sys.coeffs)
        if (!c.square() || c.rows != n)
            throw config_invalid("qdiff_series_solve: coefficient shape mismatch");
    const CMatrix& m0 = sys.coeffs.front();
    QDiffSolution sol;
    sol.log_q = ctx.log_q;
    EigenSystem es = eig(m0);
    for (const Complex& mu : es.values)
        if (std::abs(mu) < 1e-300)
            throw config_invalid("qdiff_series_solve: leading matrix not invertible");
    for (int d = 1; d <= order; ++d) {
        const Complex qd = ctx.q_pow(d);
        for (const Complex& mi : es.values)
            for (const Complex& mj : es.values)
                if (std::abs(qd * mi - mj) <=
                    1e-10 * std::max(std::abs(qd * mi), std::abs(mj)))
                    throw resonant("qdiff_series_solve: eigenvalue ratio on q^" +
                                   std::to_string(d));
    }
    sol.exponents = es.values;
    sol.basis = es.vectors;
    sol.basis_inv = inverse(es.vectors);
    sol.series.push_back(CMatrix::identity(n));
    const int m_top = static_cast<int>(sys.coeffs.size()) - 1;
    for (int d = 1; d <= order; ++d) {
        CMatrix rhs(n, n);
        for (int m = 1; m <= std::min(d, m_top); ++m)
            rhs = rhs + sys.coeffs[static_cast<size_t>(m)] *
                            sol.series[static_cast<size_t>(d - m)];
        sol.series.push_back(sylvester_scaled(ctx.q_pow(d), m0, rhs));
    }
    return sol;
}

// Relative defect |F(qx) - M(x) F(x)| / max(1, |F(qx)|) of a solution at one
// point, branch-consistent because the shift acts on the log.
inline double qdiff_residual(const QDiffSystem& sys, const QDiffSolution& sol,
                             Complex log_x, const QContext& ctx) {
    const CMatrix lhs = sol.eval(log_x + ctx.log_q);
    const CMatrix rhs = sys.eval(std::exp(log_x)) * sol.eval(log_x);
    return max_abs(lhs - rhs) / std::max(1.0, max_abs(lhs));
}

}  // namespace ellstab
