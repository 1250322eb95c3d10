#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "envelopes.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "qseries.hpp"

namespace ellstab {

// ---------------------------------------------------------------------------
// q -> 0 limits. The Kahler parameter is steered along z = q^{-L} zeta with L
// fixed, and the limiting objects quantize on the integer bands of L: theta
// ratios tend to a^{k+1/2} for L in (k, k+1), and envelope entries lose all
// but a window of their Laurent support in the framing variable.

struct ThetaLimitReport {
    int band = 0;         // k with L in (k, k+1)
    Complex limit;        // extrapolated ratio
    Complex predicted;    // a^{k+1/2} on the continuous branch
    double residual = 0;  // relative gap between the two
    std::vector<double> tail_gaps;  // per-rung raw gap to the prediction, coarse to fine
};

namespace detail {

// First `count` exponents of the semigroup generated by {d1, d2}: these are
// the correction powers of q the ratio actually carries, so fitting exactly
// them makes the extrapolation land on the constant term. Near d1 = d2 the
// generated set collapses gracefully instead of going singular.
inline std::vector<double> correction_exponents(double d1, double d2, int count) {
    std::vector<double> e;
    for (int i = 0; i <= count; ++i)
        for (int j = 0; j <= count; ++j) e.push_back(i * d1 + j * d2);
    std::sort(e.begin(), e.end());
    std::vector<double> out;
    for (double v : e)
        if (out.empty() || v - out.back() > 1e-9) out.push_back(v);
    out.resize(static_cast<size_t>(count));
    return out;
}

}  // namespace detail

// ratio theta(a z)/theta(z) at z = q^{-L} zeta, extrapolated to q = 0 through
// the ladder q = 10^{-j}, j_min <= j <= j_max, by solving for the coefficients
// of sum_t c_t q^{e_t} over the correction exponents generated by
// d1 = L - floor(L) and d2 = 1 - d1. Integer L is a wall: both neighboring
// exponents survive there and no single power wins.
inline ThetaLimitReport theta_ratio_limit(const MultPoint& a, const MultPoint& zeta, double L,
                                          int j_min = 3, int j_max = 8) {
    const long kr = std::lround(L);
    if (std::abs(L - static_cast<double>(kr)) < 1e-6)
        throw slope_on_wall("theta_ratio_limit: L within 1e-6 of an integer wall");
    if (j_min < 1 || j_max <= j_min) throw config_invalid("theta_ratio_limit: bad ladder");
    const int k = static_cast<int>(std::floor(L));
    const double d1 = L - k, d2 = 1.0 - d1;
    const int samples = j_max - j_min + 1;
    const std::vector<double> exps = detail::correction_exponents(d1, d2, samples);
    CMatrix v(samples, samples);
    CMatrix rhs(samples, 1);
    for (int s = 0; s < samples; ++s) {
        const double q = std::pow(10.0, -(j_min + s));
        QContext ctx = QContext::make(Complex(q, 0.0));
        const MultPoint z{-L * ctx.log_q + zeta.u};
        const Complex ratio =
            theta_reduced(MultPoint{z.u + a.u}, ctx) / theta_reduced(z, ctx);
        rhs(s, 0) = ratio;
        for (int t = 0; t < samples; ++t)
            v(s, t) = std::pow(q, exps[static_cast<size_t>(t)]);
    }
    const CMatrix c = inverse(v) * rhs;
    ThetaLimitReport rep;
    rep.band = k;
    rep.limit = c(0, 0);
    rep.predicted = std::exp(a.u * (k + 0.5));
    rep.residual = std::abs(rep.limit - rep.predicted) / std::abs(rep.predicted);
    for (int s = 0; s < samples; ++s)
        rep.tail_gaps.push_back(std::abs(rhs(s, 0) - rep.predicted) / std::abs(rep.predicted));
    return rep;
}

// ---------------------------------------------------------------------------
// Sections of the degree-N q-line: f_k(z) = z^k sum_n q^{N n^2/2 + beta n} w^{-n} z^{N n}
// with beta = k - N/2 - alpha. Each f_k satisfies f(qz) = q^alpha w z^{-N} f(z)
// exactly; its q -> 0 growth exponent is min_n (N n^2/2 + beta n), which is 0
// precisely when k lies in the open window (alpha, alpha + N).

inline Complex growth_section(int k, int N, double alpha, const MultPoint& w,
                              const MultPoint& z, const QContext& ctx) {
    if (N < 1) throw config_invalid("growth_section: need N >= 1");
    const double beta = k - 0.5 * N - alpha;
    // |terms| = |q|^{N n^2/2 + beta n}: everything beyond the minimum by 40
    // decades of |q| is invisible in double precision
    const double lq = -ctx.log_q.real();
    const int n_max = static_cast<int>(std::ceil(2.0 * (std::abs(beta) / N + 1.0) +
                                                 std::sqrt(2.0 * 40.0 * std::log(10.0) /
                                                           (N * lq)))) +
                      2;
    Complex f(0.0);
    for (int n = -n_max; n <= n_max; ++n) {
        const Complex lg = static_cast<double>(k + N * n) * z.u +
                           ctx.log_q * (0.5 * N * n * n + beta * n) -
                           static_cast<double>(n) * w.u;
        f += std::exp(lg);
    }
    return f;
}

// Relative defect of the exact transformation law f_k(qz) = q^alpha w z^{-N} f_k(z),
// meaningful at moderate q where many lattice terms contribute.
inline double section_shift_residual(int k, int N, double alpha, const MultPoint& w,
                                     const MultPoint& z, const QContext& ctx) {
    const Complex lhs = growth_section(k, N, alpha, w, MultPoint{z.u + ctx.log_q}, ctx);
    const Complex rhs = std::exp(ctx.log_q * alpha - static_cast<double>(N) * z.u + w.u) *
                        growth_section(k, N, alpha, w, z, ctx);
    return std::abs(lhs - rhs) / std::abs(lhs);
}

struct GrowthVerdict {
    int k = 0;
    bool window_predicted = false;  // alpha < k < alpha + N
    bool window_measured = false;   // growth slope indistinguishable from zero
    double slope = 0;               // measured d log|f| / d log q
};

// Growth classification of f_k for k across the window and one slot beyond
// each edge. Measured on the ladder q = {1e-10, 1e-12}; bounded sections have
// slope 0, escaped ones slope <= -(distance of alpha from the wall), so the
// classification threshold sits between. alpha on a wall has no verdict.
inline std::vector<GrowthVerdict> section_growth_check(int N, double alpha, const MultPoint& w,
                                                       double wall_eps = 1e-3,
                                                       double threshold = 0.025) {
    if (N < 1 || N > 8) throw config_invalid("section_growth_check: need 1 <= N <= 8");
    if (std::abs(alpha - std::lround(alpha)) < wall_eps)
        throw slope_on_wall("section_growth_check: alpha within the wall margin of an integer");
    const MultPoint z{Complex(0.0, 0.41)};  // unit modulus keeps |z^m| = 1
    std::vector<GrowthVerdict> out;
    QContext c1 = QContext::make(Complex(1e-10, 0.0));
    QContext c2 = QContext::make(Complex(1e-12, 0.0));
    const int k_lo = static_cast<int>(std::floor(alpha));
    for (int k = k_lo; k <= k_lo + N + 1; ++k) {
        GrowthVerdict gv;
        gv.k = k;
        gv.window_predicted = (alpha < k) && (k < alpha + N);
        const double f1 = std::abs(growth_section(k, N, alpha, w, z, c1));
        const double f2 = std::abs(growth_section(k, N, alpha, w, z, c2));
        gv.slope = (std::log(f2) - std::log(f1)) / (c2.log_q.real() - c1.log_q.real());
        gv.window_measured = gv.slope > -threshold;
        out.push_back(gv);
    }
    return out;
}

struct SpanReport {
    std::vector<Complex> coefficients;  // f_N expanded over f_0 .. f_{N-1}
    Complex predicted;                  // the exact relation: f_N = w q^alpha f_0
    double residual = 0;                // worst relative defect of the expansion
};

// f_0 .. f_{N-1} are independent (distinct Laurent supports mod N) and f_N is
// exactly w q^alpha f_0. Solving for f_N over the basis at N generic points
// certifies both at once: the solve must succeed and return (w q^alpha, 0...).
inline SpanReport section_span_check(int N, double alpha, const MultPoint& w,
                                     const QContext& ctx) {
    if (N < 1 || N > 8) throw config_invalid("section_span_check: need 1 <= N <= 8");
    CMatrix v(N, N);
    CMatrix rhs(N, 1);
    for (int i = 0; i < N; ++i) {
        const MultPoint z{Complex(0.0, 0.3 + 2.0 * std::numbers::pi * i / N)};
        for (int k = 0; k < N; ++k) v(i, k) = growth_section(k, N, alpha, w, z, ctx);
        rhs(i, 0) = growth_section(N, N, alpha, w, z, ctx);
    }
    const CMatrix x = inverse(v) * rhs;
    SpanReport rep;
    rep.predicted = w.value() * std::exp(ctx.log_q * alpha);
    double scale = std::abs(rep.predicted);
    rep.residual = std::abs(x(0, 0) - rep.predicted) / scale;
    rep.coefficients.push_back(x(0, 0));
    for (int k = 1; k < N; ++k) {
        rep.coefficients.push_back(x(k, 0));
        rep.residual = std::max(rep.residual, std::abs(x(k, 0)) / scale);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Support windows of the T*P^1 envelope as q -> 0 along z = q^{-L} zeta.

struct SupportWindow {
    int row = 0, col = 0;
    std::vector<int> slots;       // probed Laurent exponents in a_1/a_2
    std::vector<double> weights;  // limiting coefficient sizes, normalized per entry
    std::vector<int> support;     // slots whose normalized weight survives
    double fit_residual = 0;      // relative sample mass outside the probed window, ladder floor
};

// Laurent support in x = a_1/a_2 of the half-monomial-normalized envelope
// x^{±1/2} Stab, positive chamber, per entry. The theta kernel's coefficient
// of x^r scales as q^{r^2/2 - L r}, so a single half-integer slot r = k + 1/2
// survives on the band L in (k, k+1) and the normalizer shifts it to the
// integer floor(L) on the off-diagonal row; the diagonal windows {0, 1} and
// {-1, 0} do not move with L. Walls sit at integer L where two slots tie.
// Coefficients are probed by a roots-of-unity transform over the unit circle
// of a_1 with two guard slots on each side of the expected window, and the
// survivor classification compares the ladder's smallest-q weights.
inline std::vector<SupportWindow> stab_support_limit(
    const MultPoint& zeta, const MultPoint& hbar, double L,
    const std::vector<double>& q_ladder = {1e-3, 1e-4, 1e-5}, int guard = 2,
    int nodes = 32) {
    const long kr = std::lround(L);
    if (std::abs(L - static_cast<double>(kr)) < 1e-6)
        throw slope_on_wall("stab_support_limit: L within 1e-6 of an integer wall");
    if (q_ladder.size() < 2)
        throw config_invalid("stab_support_limit: need at least two ladder samples");
    if (guard < 0) throw config_invalid("stab_support_limit: negative guard");
    if (nodes < 2 * (guard + 1))
        throw fit_underdetermined("stab_support_limit: fewer a-samples than window slots");
    const int kb = static_cast<int>(std::floor(L));
    const double two_pi = 2.0 * std::numbers::pi;

    struct Probe {
        int row, col, center;
        double half;  // row normalizer exponent on x
    };
    const std::vector<Probe> probes = {
        {0, 0, 0, +0.5},   // window {0, 1}
        {1, 0, kb, -0.5},  // window {floor(L)}
        {1, 1, -1, -0.5},  // window {-1, 0}
    };
    std::vector<SupportWindow> out;
    for (const Probe& pr : probes) {
        SupportWindow win;
        win.row = pr.row;
        win.col = pr.col;
        const int lo = pr.center - guard, hi = pr.center + 1 + guard;
        for (int m = lo; m <= hi; ++m) win.slots.push_back(m);
        std::vector<std::vector<double>> weight_ladder;
        for (double q : q_ladder) {
            QContext ctx = QContext::make(Complex(q, 0.0));
            EnvelopeParams p;
            p.a = {MultPoint{Complex(0.0, 0.0)}, MultPoint{Complex(0.0, 0.0)}};
            p.hbar = hbar;
            p.z = MultPoint{-L * ctx.log_q + zeta.u};
            std::vector<Complex> samples(static_cast<size_t>(nodes));
            std::vector<Complex> coef(win.slots.size(), Complex(0.0));
            for (int j = 0; j < nodes; ++j) {
                const Complex ux(0.0, two_pi * j / nodes + 0.37 / nodes);
                p.a[0] = MultPoint{ux};
                const Complex e = stab_tpn(pr.col, p.a[pr.row].inv(), p, ctx,
                                           Chamber::positive) *
                                  std::exp(pr.half * ux);
                samples[static_cast<size_t>(j)] = e;
                for (size_t t = 0; t < win.slots.size(); ++t)
                    coef[t] += e * std::exp(-ux * static_cast<double>(win.slots[t]));
            }
            for (Complex& c : coef) c /= static_cast<double>(nodes);
            double top = 0.0, scale = 0.0;
            for (Complex& c : coef) top = std::max(top, std::abs(c));
            std::vector<double> wrow;
            for (Complex& c : coef) wrow.push_back(std::abs(c) / top);
            weight_ladder.push_back(std::move(wrow));
            // mass the window fails to reconstruct at the ladder floor
            double defect = 0.0;
            for (int j = 0; j < nodes; ++j) {
                const Complex ux(0.0, two_pi * j / nodes + 0.37 / nodes);
                Complex rec(0.0);
                for (size_t t = 0; t < win.slots.size(); ++t)
                    rec += coef[t] * std::exp(ux * static_cast<double>(win.slots[t]));
                defect = std::max(defect, std::abs(samples[static_cast<size_t>(j)] - rec));
                scale = std::max(scale, std::abs(samples[static_cast<size_t>(j)]));
            }
            win.fit_residual = defect / scale;
        }
        win.weights = weight_ladder.back();
        for (size_t t = 0; t < win.slots.size(); ++t) {
            const double last = weight_ladder.back()[t];
            const double prev = weight_ladder[weight_ladder.size() - 2][t];
            // survivors hold their normalized size; the rest decay by q^{gap}
            if (last > 0.25 && last > 0.5 * prev) win.support.push_back(win.slots[t]);
        }
        out.push_back(std::move(win));
    }
    return out;
}

}  // namespace ellstab
