#pragma once

// Named verification suites over every module. A fixed seed pins all draws,
// so two runs at the same precision settings produce byte-identical reports.
// Each check records {check_id, params_digest, residual, tolerance, verdict};
// verdict is pass exactly when residual < tolerance, and no check is omitted
// on failure. Wall times are measured per check for diagnostics but stay out
// of the serialized report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "draws.hpp"
#include "envelopes.hpp"
#include "errors.hpp"
#include "grassmann.hpp"
#include "io.hpp"
#include "ktheory.hpp"
#include "linalg.hpp"
#include "qseries.hpp"
#include "rmatrix.hpp"
#include "vertex.hpp"

namespace ellstab {

struct SuiteConfig {
    std::uint64_t seed = 7;
    std::vector<std::string> suites;   // empty or "all" selects every suite
    int m_max = 3;                     // pole-subtraction residue depth
    std::string precision = "double";  // "double" | "wide"
};

struct CheckRecord {
    std::string check_id;
    std::string params_digest;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double runtime_ms = 0.0;  // diagnostic only, excluded from the report JSON
};

struct VerificationReport {
    int schema_version = 1;
    std::uint64_t seed = 7;
    std::string precision = "double";
    std::vector<CheckRecord> records;

    bool all_pass() const {
        for (const auto& r : records)
            if (!r.pass) return false;
        return true;
    }
};

// Generic draw for the full T*P^{n-1} parameter stack: every theta argument
// the restriction matrix meets (a_i/a_j, hbar a_i/a_j, Kahler shifts by hbar
// powers, with and without an extra a_k/a_j) keeps a log-space distance of at
// least margin from the theta zero lattice.
inline EnvelopeParams draw_generic(SplitMix64& rng, int n, const QContext& ctx,
                                   double margin = 1e-3, int extra_shift = 2) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        EnvelopeParams p;
        for (int i = 0; i < n; ++i) p.a.push_back(MultPoint{draw_log(rng, 1.0)});
        p.hbar = MultPoint{draw_log(rng, 0.8)};
        p.z = MultPoint{draw_log(rng, 1.0)};
        bool ok = true;
        auto bad = [&](Complex u) { return near_theta_zero(u, ctx.log_q, margin); };
        for (int i = 0; i < n && ok; ++i)
            for (int j = 0; j < n && ok; ++j) {
                if (i == j) continue;
                const Complex r = p.a[i].u - p.a[j].u;
                if (bad(r) || bad(r + p.hbar.u)) ok = false;
            }
        for (int e = -(n + extra_shift); e <= n + extra_shift && ok; ++e) {
            const Complex zs = p.z.u + static_cast<double>(e) * p.hbar.u;
            if (bad(zs)) ok = false;
            for (int k = 0; k < n && ok; ++k)
                for (int j = 0; j < n && ok; ++j) {
                    if (k == j) continue;
                    if (bad(zs + p.a[k].u - p.a[j].u)) ok = false;
                }
        }
        if (ok) return p;
    }
    throw draw_exhausted("draw_generic: no admissible point found");
}

// Deliberately degenerate draw: a_1/a_2 = hbar q collapses the annulus
// between the contour's inner and outer pole families. Negative tests use it
// to confirm the guards fire.
inline EnvelopeParams draw_pinched(SplitMix64& rng, int n, const QContext& ctx) {
    EnvelopeParams p = draw_generic(rng, n, ctx);
    p.a[0] = MultPoint{p.a[1].u + p.hbar.u + ctx.log_q};
    return p;
}

// Envelope draw additionally kept clear of the pole-subtraction kernel's
// theta lattice and the dual-chamber envelope's Kahler thetas at 1/z_#.
inline EnvelopeParams draw_sharp_generic(SplitMix64& rng, int n, const QContext& ctx) {
    for (int tries = 0; tries < 200; ++tries) {
        EnvelopeParams p = draw_generic(rng, n, ctx);
        const SharpKahler zs = sharp_kahler(p);
        bool ok = true;
        for (int e = 1; e <= n && ok; ++e) {
            const Complex ue = -zs.z_sharp.u + static_cast<double>(e) * p.hbar.u;
            if (near_theta_zero(ue, ctx.log_q, 1e-3)) ok = false;
            for (int k = 0; k < n && ok; ++k)
                for (int j = 0; j < n && ok; ++j) {
                    if (j == k) continue;
                    if (near_theta_zero(ue + p.a[k].u - p.a[j].u, ctx.log_q, 1e-3)) ok = false;
                }
        }
        if (ok) return p;
    }
    throw draw_exhausted("draw_sharp_generic: no admissible point found");
}

// Contour-friendly draw: moduli pinned so the annulus between the inner pole
// family {q^d / a_k} and the outer one {q^{-d} / (hbar a_i)} stays open with
// a wide gap and |z| <= 0.1.
inline EnvelopeParams draw_vertex_band(SplitMix64& rng, int n, const QContext& ctx) {
    constexpr double pi = std::numbers::pi;
    for (int tries = 0; tries < 1000; ++tries) {
        EnvelopeParams p;
        for (int i = 0; i < n; ++i)
            p.a.push_back(MultPoint{Complex(rng.uniform(-0.25, 0.25), rng.uniform(-pi, pi))});
        p.hbar = MultPoint{Complex(rng.uniform(-1.3, -0.8), rng.uniform(-pi, pi))};
        p.z = MultPoint{Complex(rng.uniform(-4.0, -2.31), rng.uniform(-pi, pi))};
        const SharpKahler zs = sharp_kahler(p);
        const Complex zeta_u =
            (1.0 - n) * ctx.log_q + static_cast<double>(n) * p.hbar.u - zs.z_sharp.u;
        bool ok = !near_theta_zero(zeta_u, ctx.log_q, 1e-3);
        for (int k = 0; k < n && ok; ++k)
            for (int i = 0; i < n && ok; ++i) {
                if (i == k) continue;
                const Complex r = (p.a[k] / p.a[i]).u;
                if (near_phi_zero(r, ctx.log_q, 1e-3)) ok = false;
                if (near_theta_zero(r + p.hbar.u, ctx.log_q, 1e-3)) ok = false;
            }
        if (ok) return p;
    }
    throw draw_exhausted("draw_vertex_band: no admissible point found");
}

namespace verify_detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char c : s) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

inline std::uint64_t suite_seed(const SuiteConfig& cfg, const std::string& name) {
    return cfg.seed * 0x9E3779B97F4A7C15ull + fnv1a(name);
}

inline double rel(Complex got, Complex want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double rel_mat(const CMatrix& got, const CMatrix& want) {
    return max_abs(got - want) / std::max(max_abs(want), 1e-300);
}

template <class Eval>
void run_check(std::vector<CheckRecord>& out, const std::string& id, const Json& params,
               double tolerance, Eval&& eval) {
    const auto t0 = std::chrono::steady_clock::now();
    const double residual = eval();
    const auto t1 = std::chrono::steady_clock::now();
    CheckRecord rec;
    rec.check_id = id;
    rec.params_digest = hex64(fnv1a(params.dump()));
    rec.residual = residual;
    rec.tolerance = tolerance;
    rec.pass = residual < tolerance;
    rec.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.push_back(std::move(rec));
}

template <class Real>
Cplx<Real> widen(Complex u) {
    return {static_cast<Real>(u.real()), static_cast<Real>(u.imag())};
}

template <class Real>
Real series_tol() {
    return sizeof(Real) > sizeof(double) ? Real(1e-16) : Real(1e-12);
}

// --- theta suite ----------------------------------------------------------

template <class Real>
double theta_three_term_worst(std::uint64_t seed) {
    SplitMix64 rng(seed);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
        const double lq_re = rng.uniform(std::log(0.05), std::log(0.5));
        const double lq_im = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const auto ctx = BasicQContext<Real>::make_from_log(
            Cplx<Real>(static_cast<Real>(lq_re), static_cast<Real>(lq_im)), series_tol<Real>());
        const BasicMultPoint<Real> A{widen<Real>(draw_log(rng, 1.0))};
        const BasicMultPoint<Real> B{widen<Real>(draw_log(rng, 1.0))};
        const BasicMultPoint<Real> C{widen<Real>(draw_log(rng, 1.0))};
        const auto check = theta_three_term(A, B, C, ctx);
        if (static_cast<double>(check.scale) < 1e-20) continue;  // degenerate triple; redraw
        worst = std::max(worst,
                         static_cast<double>(std::abs(check.residual)) /
                             static_cast<double>(check.scale));
        ++done;
    }
    return worst;
}

template <class Real>
double theta_oddness_worst(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto ctx =
        BasicQContext<Real>::make(Cplx<Real>(Real(0.45), Real(0.2)), series_tol<Real>());
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const BasicMultPoint<Real> x{widen<Real>(draw_log(rng))};
        const Cplx<Real> want = -theta(x, ctx);
        const Cplx<Real> got = theta(x.inv(), ctx);
        worst = std::max(worst, static_cast<double>(std::abs(got - want)) /
                                    std::max(static_cast<double>(std::abs(want)), 1e-300));
    }
    return worst;
}

template <class Real>
double theta_quasi_period_worst(std::uint64_t seed) {
    SplitMix64 rng(seed);
    const auto ctx =
        BasicQContext<Real>::make(Cplx<Real>(Real(0.37), Real(-0.21)), series_tol<Real>());
    const Cplx<Real> L = ctx.log_q;
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const Cplx<Real> u = widen<Real>(draw_log(rng, 1.0));
        const Cplx<Real> base = theta(BasicMultPoint<Real>{u}, ctx);
        for (const int m : {1, -1}) {
            const Real md = static_cast<Real>(m);
            const Cplx<Real> mult = -std::exp(-(md * md / Real(2)) * L - md * u);
            const Cplx<Real> got = theta(BasicMultPoint<Real>{u + md * L}, ctx);
            const Cplx<Real> want = mult * base;
            worst = std::max(worst, static_cast<double>(std::abs(got - want)) /
                                        std::max(static_cast<double>(std::abs(want)), 1e-300));
        }
    }
    return worst;
}

inline void suite_theta(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    const bool wide = cfg.precision == "wide";
    const std::uint64_t seed = suite_seed(cfg, "theta");
    run_check(out, "theta.three_term", Json{{"seed", seed}, {"triples", 100}}, 1e-10, [&] {
        return wide ? theta_three_term_worst<long double>(seed)
                    : theta_three_term_worst<double>(seed);
    });
    run_check(out, "theta.oddness", Json{{"seed", seed}, {"draws", 25}}, 1e-12, [&] {
        return wide ? theta_oddness_worst<long double>(seed) : theta_oddness_worst<double>(seed);
    });
    run_check(out, "theta.quasi_periodicity", Json{{"seed", seed}, {"draws", 25}}, 1e-12, [&] {
        return wide ? theta_quasi_period_worst<long double>(seed)
                    : theta_quasi_period_worst<double>(seed);
    });
}

// --- envelope suite -------------------------------------------------------

inline void suite_envelope(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    const Complex q(0.31, 0.17);
    const auto ctx = QContext::make(q);
    SplitMix64 rng(suite_seed(cfg, "envelope"));
    const Json base{{"seed", suite_seed(cfg, "envelope")},
                    {"q", Json{{"re", q.real()}, {"im", q.imag()}}}};

    run_check(out, "envelope.triangularity", base, 1e-12, [&] {
        double worst = 0.0;
        for (int n = 2; n <= 6; ++n) {
            const auto p = draw_generic(rng, n, ctx);
            const CMatrix Mp = restriction_matrix_tpn(p, ctx, Chamber::positive);
            const CMatrix Mn = restriction_matrix_tpn(p, ctx, Chamber::negative);
            const double scale = std::max(std::max(max_abs(Mp), max_abs(Mn)), 1e-300);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    if (j < k) worst = std::max(worst, std::abs(Mp(j, k)) / scale);
                    if (j > k) worst = std::max(worst, std::abs(Mn(j, k)) / scale);
                }
        }
        return worst;
    });

    run_check(out, "envelope.diagonal", base, 1e-12, [&] {
        double worst = 0.0;
        for (int n = 2; n <= 6; ++n) {
            const auto p = draw_generic(rng, n, ctx);
            for (const Chamber ch : {Chamber::positive, Chamber::negative}) {
                const CMatrix M = restriction_matrix_tpn(p, ctx, ch);
                for (int k = 0; k < n; ++k)
                    worst = std::max(worst, rel(M(k, k), stab_tpn_diagonal(k, p, ctx, ch)));
            }
        }
        return worst;
    });

    run_check(out, "envelope.z_shift", base, 1e-12, [&] {
        double worst = 0.0;
        for (const int n : {2, 3, 4}) {
            const auto p = draw_generic(rng, n, ctx);
            EnvelopeParams pq = p;
            pq.z = p.z * ctx.q_point();
            const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
            const CMatrix Mq = restriction_matrix_tpn(pq, ctx, Chamber::positive);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k <= j; ++k) {
                    const Complex factor = z_quasiperiodicity_factor(j, k, p);
                    worst = std::max(worst, rel(Mq(j, k), factor * M(j, k)));
                    const MultPoint s = p.a[j].inv();
                    const Complex pred = predicted_quasi_period_factor(
                        stab_tpn_factors(k, s, p, Chamber::positive),
                        stab_tpn_factors(k, s, pq, Chamber::positive), ctx);
                    worst = std::max(worst, rel(pred, factor));
                }
        }
        return worst;
    });

    run_check(out, "envelope.a_shift", base, 1e-12, [&] {
        double worst = 0.0;
        const int n = 3;
        const auto p = draw_generic(rng, n, ctx);
        const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
        for (int m = 0; m < n; ++m) {
            EnvelopeParams pm = p;
            pm.a[m] = p.a[m] * ctx.q_point();
            const CMatrix Mm = restriction_matrix_tpn(pm, ctx, Chamber::positive);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k <= j; ++k) {
                    const auto fac_base = stab_tpn_factors(k, p.a[j].inv(), p, Chamber::positive);
                    const auto fac_shift =
                        stab_tpn_factors(k, pm.a[j].inv(), pm, Chamber::positive);
                    const Complex pred = predicted_quasi_period_factor(fac_base, fac_shift, ctx);
                    if (std::abs(M(j, k)) == 0.0) continue;
                    worst = std::max(worst, rel(Mm(j, k), pred * M(j, k)));
                }
        }
        return worst;
    });

    run_check(out, "envelope.hypertoric_match", base, 1e-12, [&] {
        double worst = 0.0;
        for (const int n : {2, 3, 4}) {
            const auto p = draw_generic(rng, n, ctx);
            const HypertoricData hd = encode_tpn(n);
            const HypertoricParams hp{p.a, p.hbar, {p.z}};
            const CMatrix Mh = restriction_matrix_hypertoric(hd, hp, ctx);
            const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
            const double scale = std::max(max_abs(M), 1e-300);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    if (M(j, k) == Complex(0.0))
                        worst = std::max(worst, std::abs(Mh(j, k)) / scale);
                    else
                        worst = std::max(worst, rel(Mh(j, k), M(j, k)));
                }
        }
        return worst;
    });

    // Triangle-lemma factorization through the coordinate subvariety at the
    // shifted Kahler point z hbar^{m-n}: support, diagonal, and shift law are
    // checked on the same 20 draws and reported separately.
    double tri_zero = 0.0, tri_diag = 0.0, tri_shift = 0.0;
    {
        const int n = 3;
        for (int rep = 0; rep < 10; ++rep)
            for (const int m : {1, 2}) {
                const auto p = draw_generic(rng, n, ctx, 1e-3, n + 2);
                const TriangleCheck tc = triangle_factorization_check(p, ctx, m);
                tri_zero = std::max(tri_zero, tc.zero_residual);
                tri_diag = std::max(tri_diag, tc.diagonal_residual);
                tri_shift = std::max(tri_shift, tc.shift_residual);
            }
    }
    const Json tri_params{{"seed", suite_seed(cfg, "envelope")}, {"n", 3}, {"draws", 20}};
    run_check(out, "envelope.triangle_support", tri_params, 1e-10, [&] { return tri_zero; });
    run_check(out, "envelope.triangle_diagonal", tri_params, 1e-10, [&] { return tri_diag; });
    run_check(out, "envelope.triangle_shift", tri_params, 1e-10, [&] { return tri_shift; });
}

// --- grass suite ----------------------------------------------------------

inline void suite_grass(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    const Complex q(0.29, 0.13);
    const auto ctx = QContext::make(q);
    SplitMix64 rng(suite_seed(cfg, "grass"));
    const Json base{{"seed", suite_seed(cfg, "grass")},
                    {"q", Json{{"re", q.real()}, {"im", q.imag()}}}};

    auto draw_grass = [&](int k, int n, double margin) {
        GrassParams gp;
        gp.env = draw_generic(rng, n, ctx, margin, n + 2);
        gp.k = k;
        return gp;
    };

    run_check(out, "grass.triangularity", base, 1e-10, [&] {
        double worst = 0.0;
        for (const int n : {3, 4}) {
            const GrassParams gp = draw_grass(2, n, 1e-3);
            const auto subs = ksubsets(n, 2);
            const CMatrix M = restriction_matrix_grass_core(gp, ctx);
            const double scale = std::max(max_abs(M), 1e-300);
            for (std::size_t r = 0; r < subs.size(); ++r)
                for (std::size_t c = 0; c < subs.size(); ++c) {
                    if (dominates(subs[r], subs[c])) continue;
                    worst = std::max(worst, std::abs(M(static_cast<int>(r),
                                                       static_cast<int>(c))) /
                                                scale);
                }
        }
        return worst;
    });

    run_check(out, "grass.diagonal", base, 1e-9, [&] {
        double worst = 0.0;
        for (const int n : {3, 4}) {
            const GrassParams gp = draw_grass(2, n, 1e-3);
            const auto subs = ksubsets(n, 2);
            const CMatrix M = restriction_matrix_grass_core(gp, ctx);
            for (std::size_t r = 0; r < subs.size(); ++r) {
                const Complex want = grass_diagonal_predicted(subs[r], gp, ctx);
                worst = std::max(worst,
                                 rel(M(static_cast<int>(r), static_cast<int>(r)), want));
            }
        }
        return worst;
    });

    run_check(out, "grass.rank_one", base, 1e-12, [&] {
        double worst = 0.0;
        for (const int n : {2, 3, 4}) {
            const GrassParams gp = draw_grass(1, n, 1e-3);
            for (const Chamber ch : {Chamber::positive, Chamber::negative}) {
                const CMatrix G = restriction_matrix_grass_core(gp, ctx, ch);
                const CMatrix M = restriction_matrix_tpn(gp.env, ctx, ch);
                const double scale = std::max(max_abs(M), 1e-300);
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) {
                        if (M(j, k) == Complex(0.0))
                            worst = std::max(worst, std::abs(G(j, k)) / scale);
                        else
                            worst = std::max(worst, rel(G(j, k), M(j, k)));
                    }
            }
        }
        return worst;
    });

    // Collision probes: symmetrization keeps s_i -> s_j regular while the
    // control family s_i -> s_j / hbar stays a genuine simple pole.
    double reg_change = 0.0, reg_margin = 0.0;
    {
        const GrassParams gp = draw_grass(2, 4, 1e-2);
        const std::vector<int> mu{1, 3};
        const std::vector<MultPoint> s{MultPoint{draw_log(rng, 1.0)},
                                       MultPoint{draw_log(rng, 1.0)}};
        const auto probe = regularity_probe(mu, 0, 1, false, s, 1e-3, gp, ctx);
        const auto control = regularity_probe(mu, 0, 1, true, s, 1e-3, gp, ctx);
        reg_change = probe.rel_change;
        reg_margin = std::max(1.5 / probe.control_growth, 1.5 / control.control_growth);
    }
    run_check(out, "grass.regularity", base, 1e-2, [&] { return reg_change; });
    run_check(out, "grass.regularity_control", base, 1.0, [&] { return reg_margin; });
}

// --- rmatrix suite --------------------------------------------------------

inline void suite_rmatrix(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    SplitMix64 rng(suite_seed(cfg, "rmatrix"));
    const Json base{{"seed", suite_seed(cfg, "rmatrix")}, {"draws", 50}};

    auto rank_one = [&](const QContext& ctx) {
        const auto p = draw_generic(rng, 2, ctx, 1e-3, 3);
        return std::tuple{p.a[0] / p.a[1], p.hbar, p.z};
    };

    run_check(out, "rmatrix.product_vs_closed", base, 1e-10, [&] {
        const auto ctx = QContext::make(Complex(0.29, -0.18));
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto [u, hbar, z] = rank_one(ctx);
            worst = std::max(worst, rel_mat(r_from_stab(u, hbar, z, ctx),
                                            r_closed_form(u, hbar, z, ctx)));
        }
        return worst;
    });

    run_check(out, "rmatrix.unitarity", base, 1e-10, [&] {
        const auto ctx = QContext::make(Complex(0.31, -0.2));
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto [u, hbar, z] = rank_one(ctx);
            for (const RKind kind : {RKind::closed_form, RKind::felder})
                worst = std::max(worst, check_unitarity(kind, u, hbar, z, ctx));
        }
        return worst;
    });

    run_check(out, "rmatrix.dyb_closed", base, 1e-9, [&] {
        const auto ctx = QContext::make(Complex(0.24, 0.14));
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto p = draw_generic(rng, 3, ctx, 1e-3, 4);
            worst = std::max(worst, check_dyb(RKind::closed_form, p.a[0], p.a[1], p.a[2],
                                              p.hbar, p.z, ctx));
        }
        return worst;
    });

    run_check(out, "rmatrix.dyb_felder", base, 1e-9, [&] {
        const auto ctx = QContext::make(Complex(0.24, 0.14));
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const auto p = draw_generic(rng, 3, ctx, 1e-3, 4);
            worst = std::max(worst,
                             check_dyb(RKind::felder, p.a[0], p.a[1], p.a[2], p.hbar, p.z, ctx));
        }
        return worst;
    });
}

// --- vertex suite ---------------------------------------------------------

inline void suite_vertex(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    const auto ctx = QContext::make(Complex(0.21, 0.14));
    SplitMix64 rng(suite_seed(cfg, "vertex"));
    const Json base{{"seed", suite_seed(cfg, "vertex")}, {"order", 12}};

    run_check(out, "vertex.contour_match", base, 1e-8, [&] {
        double worst = 0.0;
        for (const int n : {2, 2, 2, 3, 3}) {
            const EnvelopeParams p = draw_vertex_band(rng, n, ctx);
            for (int k = 0; k < n; ++k)
                worst = std::max(worst,
                                 rel(vertex_contour(k, p, ctx), vertex_value(k, 12, p, ctx)));
        }
        return worst;
    });

    run_check(out, "vertex.refinement", base, 1e-10, [&] {
        const EnvelopeParams p = draw_vertex_band(rng, 2, ctx);
        double worst = 0.0;
        for (int k = 0; k < 2; ++k)
            worst = std::max(worst,
                             rel(vertex_contour(k, p, ctx, 512), vertex_contour(k, p, ctx, 1024)));
        return worst;
    });
}

// --- tps suite ------------------------------------------------------------

inline void suite_tps(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    SplitMix64 rng(suite_seed(cfg, "tps"));
    const Json base{{"seed", suite_seed(cfg, "tps")}, {"m_max", cfg.m_max}, {"order", 12}};

    // Residue vanishing of the pole-subtracted 2-vector on a_1/a_2 = q^{-m},
    // with the unsubtracted control staying three decades above tolerance.
    std::vector<PoleProbeReport> probes;
    {
        const auto ctx = QContext::make(Complex(0.2, 0.0));
        EnvelopeParams p;
        p.a = {MultPoint{Complex(0.3, 1.1)}, MultPoint{Complex(0.0, 0.45)}};
        p.hbar = MultPoint{Complex(-0.35, 0.3)};
        p.z = MultPoint{Complex(-0.9, 0.4)};
        probes = pole_cancellation_check(p, ctx, cfg.m_max + 9, cfg.m_max);
    }
    for (const auto& pr : probes) {
        run_check(out, "tps.residue_m" + std::to_string(pr.m), base, 1e-7,
                  [&] { return pr.residue; });
    }
    run_check(out, "tps.control_margin", base, 1.0, [&] {
        double worst = 0.0;
        for (const auto& pr : probes) worst = std::max(worst, 1e-4 / pr.control);
        return worst;
    });

    run_check(out, "tps.double_periodicity", base, 1e-10, [&] {
        const auto ctx = QContext::make(Complex(0.23, 0.15));
        double worst = 0.0;
        for (const int n : {2, 3}) {
            const EnvelopeParams p = draw_sharp_generic(rng, n, ctx);
            const CMatrix P = pole_subtraction_matrix(p, ctx);
            EnvelopeParams pz = p;
            pz.z = p.z * ctx.q_point();
            worst = std::max(worst, rel_mat(pole_subtraction_matrix(pz, ctx), P));
            for (int m = 0; m < n; ++m) {
                EnvelopeParams pa = p;
                pa.a[m] = p.a[m] * ctx.q_point();
                worst = std::max(worst, rel_mat(pole_subtraction_matrix(pa, ctx), P));
            }
        }
        return worst;
    });

    run_check(out, "tps.opposite_order_triangularity", base, 1e-8, [&] {
        const auto ctx = QContext::make(Complex(0.23, 0.15));
        double worst = 0.0;
        for (const int n : {2, 3, 4}) {
            const EnvelopeParams p = draw_sharp_generic(rng, n, ctx);
            const CMatrix t = pole_subtraction_transport(p, ctx);
            const double scale = std::max(max_abs(t), 1e-300);
            for (int k = 0; k < n; ++k)
                for (int j = k + 1; j < n; ++j)
                    worst = std::max(worst, std::abs(t(k, j)) / scale);
            if (n < 3) continue;
            // entrywise ratios against the dual-chamber envelope at 1/z_#
            // have rank one on the support: Q[k][j] Q[j][0] = Q[k][0] Q[j][j]
            const SharpKahler zs = sharp_kahler(p);
            EnvelopeParams pd = p;
            pd.z = MultPoint{-zs.z_sharp.u};
            const CMatrix nd =
                restriction_matrix_tpn(pd, ctx, Chamber::negative, Polarization::opposite);
            CMatrix qr(n, n);
            for (int k = 0; k < n; ++k)
                for (int j = 0; j <= k; ++j) qr(k, j) = t(k, j) / nd(j, k);
            for (int k = 2; k < n; ++k)
                for (int j = 1; j < k; ++j)
                    worst = std::max(worst, rel(qr(k, j), qr(k, 0) * qr(j, j) / qr(j, 0)));
        }
        return worst;
    });

    // Kahler limit at a -> 0 along hbar-shift progressions: drift of the
    // normalized solution, its q-shift consistency, and the half-integer
    // hbar power carried by the modulus.
    std::vector<ALimitReport> limits;
    {
        const auto ctx = QContext::make(Complex(0.15, 0.0));
        EnvelopeParams p;
        p.a = {MultPoint{Complex(0.5 * std::log(0.15), 1.2)}, MultPoint{Complex(0.0, 0.3)}};
        p.hbar = MultPoint{Complex(-0.357, 0.4)};
        p.z = MultPoint{Complex(-0.9, 0.5)};
        limits = a_limit_check(p, ctx);
    }
    run_check(out, "tps.a0_drift", base, 1e-6, [&] {
        double worst = 0.0;
        for (const auto& r : limits) worst = std::max(worst, r.drift);
        return worst;
    });
    run_check(out, "tps.a0_shift", base, 1e-6, [&] {
        double worst = 0.0;
        for (const auto& r : limits) worst = std::max(worst, r.shift_residual);
        return worst;
    });
    run_check(out, "tps.a0_modulus", base, 1e-6, [&] {
        double worst = 0.0;
        for (const auto& r : limits) worst = std::max(worst, r.modulus_residual);
        return worst;
    });
}

// --- limits suite ---------------------------------------------------------

inline void suite_limits(const SuiteConfig& cfg, std::vector<CheckRecord>& out) {
    SplitMix64 rng(suite_seed(cfg, "limits"));
    const Json base{{"seed", suite_seed(cfg, "limits")}};

    run_check(out, "limits.theta_ratio", base, 1e-6, [&] {
        const MultPoint a{Complex(0.31, 0.83)};
        const MultPoint zeta{Complex(0.11, 0.57)};
        double worst = 0.0;
        for (int k = 0; k <= 2; ++k)
            for (const double frac : {0.3, 0.7}) {
                const auto rep = theta_ratio_limit(a, zeta, k + frac);
                worst = std::max(worst, rep.residual);
                if (rep.band != k) worst = std::max(worst, 1.0);
            }
        return worst;
    });

    run_check(out, "limits.growth_verdicts", base, 0.5, [&] {
        int mismatches = 0;
        for (int n_weight = 1; n_weight <= 4; ++n_weight)
            for (int rep = 0; rep < 5; ++rep) {
                double alpha = 0.0;
                for (int tries = 0;; ++tries) {
                    alpha = rng.uniform(-2.0, n_weight + 2.0);
                    const double wall = std::abs(alpha - std::floor(alpha + 0.5));
                    if (wall > 0.05) break;
                    if (tries > 200) throw draw_exhausted("growth draw: alpha stuck on walls");
                }
                const MultPoint w{Complex(0.0, rng.uniform(0.0, 6.28))};
                for (const auto& verdict : section_growth_check(n_weight, alpha, w))
                    if (verdict.window_measured != verdict.window_predicted) ++mismatches;
            }
        return static_cast<double>(mismatches);
    });

    run_check(out, "limits.span", base, 1e-8, [&] {
        const auto ctx = QContext::make(Complex(1e-3, 0.0));
        const MultPoint w{Complex(0.0, 0.93)};
        double worst = 0.0;
        for (int n_weight = 1; n_weight <= 4; ++n_weight) {
            const double alpha = 0.37 + 0.11 * n_weight;
            const auto span = section_span_check(n_weight, alpha, w, ctx);
            worst = std::max(worst, span.residual);
            worst = std::max(worst, rel(span.coefficients[0], span.predicted));
        }
        return worst;
    });

    run_check(out, "limits.shift_law", base, 1e-10, [&] {
        const auto ctx = QContext::make(Complex(0.2, 0.0));
        const MultPoint w{Complex(0.0, 0.93)};
        const MultPoint z{Complex(0.0, 0.73)};
        double worst = 0.0;
        for (int n_weight = 1; n_weight <= 4; ++n_weight) {
            const double alpha = 0.41 + 0.07 * n_weight;
            for (int k = -1; k <= n_weight + 1; ++k)
                worst = std::max(worst,
                                 section_shift_residual(k, n_weight, alpha, w, z, ctx));
        }
        return worst;
    });

    // Support windows of the normalized envelope in the small-q limit: the
    // diagonal windows are frozen, the off-diagonal one slides with floor(L)
    // and jumps exactly at integer walls.
    double window_mismatch = 0.0, fit_worst = 0.0;
    {
        const MultPoint zeta{Complex(0.07, 0.61)};
        const MultPoint hbar{Complex(-0.35, 0.25)};
        auto survivors_match = [](const SupportWindow& w, std::vector<int> want) {
            return w.support == want;
        };
        for (const double L : {1.25, 1.5, 1.75, 0.5, 2.3, -0.7}) {
            const auto wins = stab_support_limit(zeta, hbar, L);
            for (const auto& w : wins) fit_worst = std::max(fit_worst, w.fit_residual);
            const int fl = static_cast<int>(std::floor(L));
            for (const auto& w : wins) {
                std::vector<int> want;
                if (w.row == 0 && w.col == 0) want = {0, 1};
                else if (w.row == 1 && w.col == 1) want = {-1, 0};
                else want = {fl};
                if (!survivors_match(w, want)) window_mismatch += 1.0;
            }
        }
    }
    run_check(out, "limits.support_window", base, 0.5, [&] { return window_mismatch; });
    run_check(out, "limits.support_fit", base, 1e-6, [&] { return fit_worst; });
}

}  // namespace verify_detail

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"theta",  "envelope", "grass", "rmatrix",
                                                "vertex", "tps",      "limits"};
    return names;
}

inline VerificationReport run_suite(const SuiteConfig& cfg) {
    if (cfg.precision != "double" && cfg.precision != "wide")
        throw config_invalid("run_suite: precision must be \"double\" or \"wide\"");
    if (cfg.m_max < 1 || cfg.m_max > 6)
        throw config_invalid("run_suite: m_max must lie in 1..6");

    std::vector<std::string> wanted = cfg.suites;
    bool all = wanted.empty();
    for (const auto& name : wanted) {
        if (name == "all") {
            all = true;
            continue;
        }
        if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
            throw config_invalid("run_suite: unknown suite \"" + name + "\"");
    }
    auto selected = [&](const std::string& name) {
        return all || std::find(wanted.begin(), wanted.end(), name) != wanted.end();
    };

    VerificationReport rep;
    rep.seed = cfg.seed;
    rep.precision = cfg.precision;
    if (selected("theta")) verify_detail::suite_theta(cfg, rep.records);
    if (selected("envelope")) verify_detail::suite_envelope(cfg, rep.records);
    if (selected("grass")) verify_detail::suite_grass(cfg, rep.records);
    if (selected("rmatrix")) verify_detail::suite_rmatrix(cfg, rep.records);
    if (selected("vertex")) verify_detail::suite_vertex(cfg, rep.records);
    if (selected("tps")) verify_detail::suite_tps(cfg, rep.records);
    if (selected("limits")) verify_detail::suite_limits(cfg, rep.records);

    std::sort(rep.records.begin(), rep.records.end(),
              [](const CheckRecord& x, const CheckRecord& y) { return x.check_id < y.check_id; });
    return rep;
}

inline Json report_to_json(const VerificationReport& rep) {
    Json checks = Json::array();
    for (const auto& r : rep.records) {
        checks.push_back(Json{{"check_id", r.check_id},
                              {"params_digest", r.params_digest},
                              {"residual", r.residual},
                              {"tolerance", r.tolerance},
                              {"verdict", r.pass ? "pass" : "fail"}});
    }
    return Json{{"schema_version", rep.schema_version},
                {"seed", rep.seed},
                {"precision", rep.precision},
                {"checks", checks}};
}

}  // namespace ellstab
