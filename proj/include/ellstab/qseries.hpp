#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "errors.hpp"

namespace ellstab {

template <class Real>
using Cplx = std::complex<Real>;

using Complex = Cplx<double>;

// Magnitudes are clamped into this band when estimating product tails, so a
// wildly scaled argument degrades the estimate instead of the truncation
// order. Code that can meet the band (everything in this library) should.
inline constexpr double kBandLo = 1e-6;
inline constexpr double kBandHi = 1e6;

// A point of the torus carried by its logarithm. Half-integer powers such as
// x^{1/2} are then single valued, and products of points never lose the
// branch: multiplying points adds logs.
template <class Real>
struct BasicMultPoint {
    Cplx<Real> u{};  // value() == exp(u)

    static BasicMultPoint from_log(Cplx<Real> log_value) { return {log_value}; }
    static BasicMultPoint from_value(Cplx<Real> value) { return {std::log(value)}; }

    Cplx<Real> value() const { return std::exp(u); }
    // x^{num/2}
    Cplx<Real> half_pow(int num) const { return std::exp(u * (Real(num) / Real(2))); }
    BasicMultPoint pow(int m) const { return {u * Real(m)}; }
    BasicMultPoint inv() const { return {-u}; }

    friend BasicMultPoint operator*(BasicMultPoint a, BasicMultPoint b) { return {a.u + b.u}; }
    friend BasicMultPoint operator/(BasicMultPoint a, BasicMultPoint b) { return {a.u - b.u}; }
};

using MultPoint = BasicMultPoint<double>;

// A formal half-integer power base^{num2/2} of a torus point, kept unevaluated
// so that squares and sign conventions stay exact.
template <class Real>
struct BasicHalfWeight {
    BasicMultPoint<Real> base{};
    int num2 = 1;  // exponent numerator over 2

    Cplx<Real> value() const { return base.half_pow(num2); }
    BasicMultPoint<Real> square() const { return {base.u * Real(num2)}; }
};

using HalfWeight = BasicHalfWeight<double>;

// Shared evaluation state: the base q (as a log, |q| < 1 strictly), the
// truncation order for infinite products, and the tolerance those products
// are expected to deliver.
template <class Real>
struct BasicQContext {
    Cplx<Real> log_q{};
    int trunc = 0;
    Real tol = Real(1e-12);

    Cplx<Real> q() const { return std::exp(log_q); }
    Cplx<Real> q_pow(int m) const { return std::exp(log_q * Real(m)); }
    BasicMultPoint<Real> q_point(int m = 1) const { return {log_q * Real(m)}; }

    // Smallest truncation order whose worst-case tail over the band stays
    // below tol: the dropped part of log phi is at most |q|^N |x| / (1-|q|).
    static int suggest_trunc(Real abs_q, Real tol) {
        const Real target = std::log1p(tol) * (Real(1) - abs_q) / Real(kBandHi);
        const Real n = std::log(target) / std::log(abs_q);
        const int cap = 200000;
        if (!(n < Real(cap))) throw config_invalid("qcontext: |q| too close to 1 for the tolerance");
        return std::max(static_cast<int>(std::ceil(n)) + 1, 8);
    }

    static BasicQContext make(Cplx<Real> q, Real tol = Real(1e-12), int trunc_override = 0) {
        const Real aq = std::abs(q);
        if (!(aq > Real(0)) || !(aq < Real(1) - Real(1e-14)))
            throw config_invalid("qcontext: need 0 < |q| < 1");
        return make_from_log(std::log(q), tol, trunc_override);
    }

    static BasicQContext make_from_log(Cplx<Real> log_q, Real tol = Real(1e-12),
                                       int trunc_override = 0) {
        const Real aq = std::exp(log_q.real());
        if (!(aq > Real(0)) || !(aq < Real(1) - Real(1e-14)))
            throw config_invalid("qcontext: need 0 < |q| < 1");
        if (!(tol > Real(0))) throw config_invalid("qcontext: tol must be positive");
        BasicQContext ctx;
        ctx.log_q = log_q;
        ctx.tol = tol;
        ctx.trunc = trunc_override > 0 ? trunc_override : suggest_trunc(aq, tol);
        return ctx;
    }
};

using QContext = BasicQContext<double>;

// Finite q-Pochhammer (x; q)_n = prod_{i=0}^{n-1} (1 - q^i x).
template <class Real>
Cplx<Real> qpochhammer(Cplx<Real> x, int n, const BasicQContext<Real>& ctx) {
    if (n < 0) throw config_invalid("qpochhammer: need n >= 0");
    const Cplx<Real> q = ctx.q();
    Cplx<Real> p(1);
    Cplx<Real> t = x;
    for (int i = 0; i < n; ++i) {
        p *= Real(1) - t;
        t *= q;
    }
    return p;
}

// phi(x) = (x; q)_infty, truncated at ctx.trunc factors. The dropped tail is
// checked against ctx.tol; a violation throws rather than silently degrading.
template <class Real>
Cplx<Real> phi(Cplx<Real> x, const BasicQContext<Real>& ctx) {
    const Cplx<Real> q = ctx.q();
    const Real aq = std::abs(q);
    Cplx<Real> p(1);
    Cplx<Real> t = x;
    for (int i = 0; i < ctx.trunc; ++i) {
        p *= Real(1) - t;
        t *= q;
    }
    const Real clamped =
        std::clamp(std::abs(x), Real(kBandLo), Real(kBandHi));
    const Real tail = std::pow(aq, Real(ctx.trunc)) * clamped / (Real(1) - aq);
    if (!(std::expm1(tail) < ctx.tol))
        throw truncation_insufficient("phi: truncation tail above tolerance");
    return p;
}

template <class Real>
Cplx<Real> qpochhammer(const BasicMultPoint<Real>& x, int n, const BasicQContext<Real>& ctx) {
    return qpochhammer(x.value(), n, ctx);
}

template <class Real>
Cplx<Real> phi(const BasicMultPoint<Real>& x, const BasicQContext<Real>& ctx) {
    return phi(x.value(), ctx);
}

// theta(x) = (x^{1/2} - x^{-1/2}) phi(qx) phi(q/x), evaluated through the log
// coordinate so that theta(1) is exactly zero and the odd symmetry
// theta(1/x) = -theta(x) is exact.
template <class Real>
Cplx<Real> theta(const BasicMultPoint<Real>& x, const BasicQContext<Real>& ctx) {
    const Cplx<Real> s = Real(2) * std::sinh(x.u / Real(2));
    return s * phi(std::exp(ctx.log_q + x.u), ctx) * phi(std::exp(ctx.log_q - x.u), ctx);
}

// theta with the argument first reduced along the q-direction, using
// theta(q^m y) = (-1)^m q^{-m^2/2} y^{-m} theta(y). Keeps arguments of the
// underlying products inside the band when formulas supply large q-powers.
template <class Real>
Cplx<Real> theta_reduced(const BasicMultPoint<Real>& x, const BasicQContext<Real>& ctx) {
    const Cplx<Real> L = ctx.log_q;
    const Real proj =
        (x.u.real() * L.real() + x.u.imag() * L.imag()) / std::norm(L);
    const long mr = std::lround(proj);
    if (mr == 0) return theta(x, ctx);
    const Real m = Real(mr);
    const BasicMultPoint<Real> y{x.u - m * L};
    Cplx<Real> mult = std::exp(-(m * m / Real(2)) * L - m * y.u);
    if (mr & 1) mult = -mult;
    return mult * theta(y, ctx);
}

// Whether u lies within eps of the lattice {m log q + 2 pi i k}, i.e. of the
// zero locus of theta in log coordinates. Coordinates of u in the lattice
// basis are exact (the basis is triangular), so a 3x3 rounding scan suffices.
inline bool near_theta_zero(Complex u, Complex log_q, double eps = 1e-8) {
    const double two_pi = 2.0 * std::numbers::pi;
    const double mf = u.real() / log_q.real();
    const double kf = (u.imag() - mf * log_q.imag()) / two_pi;
    const long m0 = std::lround(mf);
    const long k0 = std::lround(kf);
    for (long m = m0 - 1; m <= m0 + 1; ++m)
        for (long k = k0 - 1; k <= k0 + 1; ++k) {
            const Complex r = u - static_cast<double>(m) * log_q -
                              Complex(0.0, static_cast<double>(k) * two_pi);
            if (std::abs(r) < eps) return true;
        }
    return false;
}

// e(y, a) = exp(-log y log a / log q): the symmetric bilinear exponential
// with e(qy, a) = e(y, a) / a and e(y, qa) = e(y, a) / y.
template <class Real>
Cplx<Real> bilinear_exp(const BasicMultPoint<Real>& y, const BasicMultPoint<Real>& a,
                        const BasicQContext<Real>& ctx) {
    return std::exp(-y.u * a.u / ctx.log_q);
}

template <class Real>
struct ThreeTermCheck {
    Cplx<Real> residual;  // sum of the three terms; identically zero
    Real scale;           // largest term magnitude, for relative comparison
};

// Weierstrass three-term relation in multiplicative form:
//   th(AB) th(A/B) th(C)^2 + th(BC) th(B/C) th(A)^2 + th(CA) th(C/A) th(B)^2 = 0.
template <class Real>
ThreeTermCheck<Real> theta_three_term(const BasicMultPoint<Real>& A,
                                      const BasicMultPoint<Real>& B,
                                      const BasicMultPoint<Real>& C,
                                      const BasicQContext<Real>& ctx) {
    auto term = [&](const BasicMultPoint<Real>& X, const BasicMultPoint<Real>& Y,
                    const BasicMultPoint<Real>& Z) {
        const Cplx<Real> tz = theta(Z, ctx);
        return theta(X * Y, ctx) * theta(X / Y, ctx) * tz * tz;
    };
    const Cplx<Real> t1 = term(A, B, C);
    const Cplx<Real> t2 = term(B, C, A);
    const Cplx<Real> t3 = term(C, A, B);
    const Real scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3)});
    return {t1 + t2 + t3, scale};
}

}  // namespace ellstab
