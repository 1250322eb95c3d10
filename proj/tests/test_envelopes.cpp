#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include <ellstab/envelopes.hpp>

#include "test_support.hpp"

using namespace ellstab;
using testsupport::draw_envelope_params;
using testsupport::rel_err;

TEST_CASE("restriction matrix is exactly triangular in each chamber") {
    SplitMix64 rng(11);
    const auto ctx = QContext::make(Complex(0.31, 0.17));
    for (int n = 2; n <= 6; ++n) {
        const auto p = draw_envelope_params(rng, n, ctx);
        const CMatrix Mp = restriction_matrix_tpn(p, ctx, Chamber::positive);
        const CMatrix Mn = restriction_matrix_tpn(p, ctx, Chamber::negative);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (j < k) REQUIRE(Mp(j, k) == Complex(0.0, 0.0));
                if (j > k) REQUIRE(Mn(j, k) == Complex(0.0, 0.0));
            }
    }
}

TEST_CASE("diagonal restrictions match the repelling-normal product") {
    SplitMix64 rng(12);
    const auto ctx = QContext::make(Complex(0.4, -0.12));
    for (int n = 2; n <= 6; ++n) {
        const auto p = draw_envelope_params(rng, n, ctx);
        for (const Chamber ch : {Chamber::positive, Chamber::negative}) {
            const CMatrix M = restriction_matrix_tpn(p, ctx, ch);
            for (int k = 0; k < n; ++k)
                REQUIRE(rel_err(M(k, k), stab_tpn_diagonal(k, p, ctx, ch)) < 1e-12);
        }
    }
}

TEST_CASE("n = 2 restriction matrix matches the hand formulas") {
    SplitMix64 rng(13);
    const auto ctx = QContext::make(Complex(0.27, 0.2));
    const auto p = draw_envelope_params(rng, 2, ctx);
    const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
    const MultPoint a1 = p.a[0], a2 = p.a[1], h = p.hbar, z = p.z;

    REQUIRE(rel_err(M(0, 0), theta(h * a2 / a1, ctx)) < 1e-12);
    REQUIRE(M(0, 1) == Complex(0.0, 0.0));
    // column of F_1 restricted to F_2: theta(hbar) times the Kahler ratio at
    // z hbar^{-1}
    const Complex want10 = theta(h, ctx) *
                           theta(z * a1 / (h * a2), ctx) / theta(z / h, ctx);
    REQUIRE(rel_err(M(1, 0), want10) < 1e-12);
    REQUIRE(rel_err(M(1, 1), theta(a1 / a2, ctx)) < 1e-12);
}

TEST_CASE("Kahler quasi-periodicity of matrix entries is a_j / a_k") {
    SplitMix64 rng(14);
    const auto ctx = QContext::make(Complex(0.36, 0.09));
    for (const int n : {2, 3, 4}) {
        const auto p = draw_envelope_params(rng, n, ctx);
        EnvelopeParams pq = p;
        pq.z = p.z * ctx.q_point();
        const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
        const CMatrix Mq = restriction_matrix_tpn(pq, ctx, Chamber::positive);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k <= j; ++k) {
                const Complex want = (p.a[j] / p.a[k]).value() * M(j, k);
                REQUIRE(rel_err(Mq(j, k), want) < 1e-11);
                // the factor-list predictor reproduces the same multiplier
                const MultPoint s = p.a[j].inv();
                const Complex pred = predicted_quasi_period_factor(
                    stab_tpn_factors(k, s, p, Chamber::positive),
                    stab_tpn_factors(k, s, pq, Chamber::positive), ctx);
                REQUIRE(rel_err(pred, (p.a[j] / p.a[k]).value()) < 1e-12);
            }
    }
}

TEST_CASE("equivariant quasi-periodicity follows the factor-list predictor") {
    SplitMix64 rng(15);
    const auto ctx = QContext::make(Complex(0.33, -0.21));
    const int n = 3;
    const auto p = draw_envelope_params(rng, n, ctx);
    for (int m = 0; m < n; ++m) {
        EnvelopeParams pm = p;
        pm.a[m] = p.a[m] * ctx.q_point();
        for (int j = 0; j < n; ++j)
            for (int k = 0; k <= j; ++k) {
                const auto base = stab_tpn_factors(k, p.a[j].inv(), p, Chamber::positive);
                const auto shifted =
                    stab_tpn_factors(k, pm.a[j].inv(), pm, Chamber::positive);
                const Complex pred = predicted_quasi_period_factor(base, shifted, ctx);
                const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
                const CMatrix Mm = restriction_matrix_tpn(pm, ctx, Chamber::positive);
                if (std::abs(M(j, k)) == 0.0) continue;
                REQUIRE(rel_err(Mm(j, k), pred * M(j, k)) < 1e-10);
            }
    }
}

TEST_CASE("perturbing a column breaks the Kahler degree law") {
    SplitMix64 rng(16);
    const auto ctx = QContext::make(Complex(0.3, 0.1));
    const int n = 3;
    const auto p = draw_envelope_params(rng, n, ctx);
    EnvelopeParams pq = p;
    pq.z = p.z * ctx.q_point();
    const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
    const CMatrix Mq = restriction_matrix_tpn(pq, ctx, Chamber::positive);
    // candidate column for F_3 contaminated by the (admissible-support) F_1
    const int k = 2, jprobe = 0;
    const Complex c(0.7, 0.2);
    const Complex pert = M(jprobe, k) + c * M(jprobe, jprobe);
    const Complex pert_q = Mq(jprobe, k) + c * Mq(jprobe, jprobe);
    const Complex lawful = (p.a[jprobe] / p.a[k]).value() * pert;
    // the true envelope obeys the law ...
    REQUIRE(rel_err(Mq(jprobe, k), (p.a[jprobe] / p.a[k]).value() * M(jprobe, k)) < 1e-11);
    // ... the perturbed candidate does not
    REQUIRE(rel_err(pert_q, lawful) > 1e-2);
}

TEST_CASE("factorization through a coordinate subvariety") {
    SplitMix64 rng(17);
    const auto ctx = QContext::make(Complex(0.29, 0.13));
    for (const int n : {3, 4}) {
        const auto p = draw_envelope_params(rng, n, ctx, 1e-3, n + 2);
        const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
        for (int m = 1; m <= n; ++m) {
            const auto tf = triangle_candidate(p, ctx, m);
            const double scale = max_abs(M) * max_abs(inverse(tf.block));
            // zero pattern: within the block the candidate acts diagonally
            // (multiplication by the repelling normal class), and columns
            // beyond the block vanish strictly above the diagonal; entries
            // below the block in block columns are the outer envelope's tail
            // and stay generically nonzero
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const bool zero = (k < m) ? (j < m && j != k) : (j < k);
                    if (zero) REQUIRE(std::abs(tf.candidate(j, k)) < 1e-9 * scale);
                }
            // diagonal: repelling product relative to the subvariety for
            // j < m, the full one for j >= m
            for (int j = 0; j < n; ++j) {
                Complex want(1.0);
                if (j < m) {
                    for (int i = m; i < n; ++i)
                        want *= theta(p.hbar * p.a[i] / p.a[j], ctx);
                } else {
                    want = stab_tpn_diagonal(j, p, ctx, Chamber::positive);
                }
                REQUIRE(rel_err(tf.candidate(j, j), want) < 1e-9);
            }
        }
        // m = 1 leaves the matrix untouched, m = n moves all of it into B
        const auto t1 = triangle_candidate(p, ctx, 1);
        REQUIRE(max_abs(t1.candidate - M) < 1e-11 * max_abs(M));
        const auto tn = triangle_candidate(p, ctx, n);
        REQUIRE(max_abs(tn.block - M) < 1e-14 * max_abs(M));
        REQUIRE(max_abs(tn.candidate - CMatrix::identity(n)) < 1e-10);
    }
}

TEST_CASE("Kahler shifts of the factorization candidate") {
    SplitMix64 rng(18);
    const auto ctx = QContext::make(Complex(0.34, -0.08));
    const int n = 3;
    const auto p = draw_envelope_params(rng, n, ctx, 1e-3, n + 2);
    EnvelopeParams pq = p;
    pq.z = p.z * ctx.q_point();
    for (int m = 1; m <= n; ++m) {
        const auto tf = triangle_candidate(p, ctx, m);
        const auto tfq = triangle_candidate(pq, ctx, m);
        const double scale = max_abs(tf.candidate);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (std::abs(tf.candidate(j, k)) < 1e-8 * scale) continue;
                const Complex want = (p.a[j] / p.a[k]).value() * tf.candidate(j, k);
                REQUIRE(rel_err(tfq.candidate(j, k), want) < 1e-8);
            }
    }
}

TEST_CASE("hypertoric encoding of T*P^{n-1} reproduces the direct formula") {
    SplitMix64 rng(19);
    const auto ctx = QContext::make(Complex(0.26, 0.18));
    for (const int n : {2, 3, 4}) {
        const auto p = draw_envelope_params(rng, n, ctx);
        const HypertoricData hd = encode_tpn(n);
        HypertoricParams hp{p.a, p.hbar, {p.z}};
        const CMatrix Mh = restriction_matrix_hypertoric(hd, hp, ctx);
        const CMatrix M = restriction_matrix_tpn(p, ctx, Chamber::positive);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                if (M(j, k) == Complex(0.0)) {
                    REQUIRE(Mh(j, k) == Complex(0.0));
                } else {
                    REQUIRE(rel_err(Mh(j, k), M(j, k)) < 1e-13);
                }
            }
    }
}

TEST_CASE("product of hypertoric spaces has Kronecker restriction matrix") {
    SplitMix64 rng(20);
    const auto ctx = QContext::make(Complex(0.32, 0.11));
    const auto pA = draw_envelope_params(rng, 2, ctx);
    const auto pB = draw_envelope_params(rng, 2, ctx);
    const HypertoricData prod = hypertoric_product(encode_tpn(2), encode_tpn(2));
    REQUIRE(prod.fixed_points.size() == 4);
    REQUIRE(prod.fixed_points[1].label == "F1xF2");

    HypertoricParams hp;
    hp.a = pA.a;
    hp.a.insert(hp.a.end(), pB.a.begin(), pB.a.end());
    hp.hbar = pA.hbar;
    hp.z = {pA.z, pB.z};
    const CMatrix MP = restriction_matrix_hypertoric(prod, hp, ctx);

    HypertoricParams hA{pA.a, pA.hbar, {pA.z}};
    HypertoricParams hB{pB.a, pA.hbar, {pB.z}};
    const CMatrix MA = restriction_matrix_hypertoric(encode_tpn(2), hA, ctx);
    const CMatrix MB = restriction_matrix_hypertoric(encode_tpn(2), hB, ctx);
    for (int jA = 0; jA < 2; ++jA)
        for (int jB = 0; jB < 2; ++jB)
            for (int kA = 0; kA < 2; ++kA)
                for (int kB = 0; kB < 2; ++kB) {
                    const Complex want = MA(jA, kA) * MB(jB, kB);
                    const Complex got = MP(jA * 2 + jB, kA * 2 + kB);
                    if (want == Complex(0.0)) {
                        REQUIRE(got == Complex(0.0));
                    } else {
                        REQUIRE(rel_err(got, want) < 1e-12);
                    }
                }
}

TEST_CASE("chamber-ordered storage is lower triangular in both chambers") {
    SplitMix64 rng(21);
    const auto ctx = QContext::make(Complex(0.3, 0.14));
    const int n = 4;
    const auto p = draw_envelope_params(rng, n, ctx);
    const auto Rp = restriction_matrix(p, ctx, Chamber::positive);
    const auto Rn = restriction_matrix(p, ctx, Chamber::negative);
    REQUIRE(Rp.basis.front() == "F1");
    REQUIRE(Rn.basis.front() == "F4");
    for (int r = 0; r < n; ++r)
        for (int c = r + 1; c < n; ++c) {
            REQUIRE(Rp.entries(r, c) == Complex(0.0));
            REQUIRE(Rn.entries(r, c) == Complex(0.0));
        }
    // negative-chamber entries are the original matrix with both indices
    // reversed
    const CMatrix Mn = restriction_matrix_tpn(p, ctx, Chamber::negative);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            REQUIRE(Rn.entries(r, c) == Mn(n - 1 - r, n - 1 - c));
}

TEST_CASE("genericity gate on envelope parameters") {
    SplitMix64 rng(22);
    const auto ctx = QContext::make(Complex(0.28, 0.1));
    const auto p = draw_envelope_params(rng, 3, ctx);
    REQUIRE_NOTHROW(validate_envelope_params(p, ctx));

    EnvelopeParams bad_a = p;
    bad_a.a[1] = p.a[0] * ctx.q_point(2);
    REQUIRE_THROWS_AS(validate_envelope_params(bad_a, ctx), config_invalid);

    EnvelopeParams bad_h = p;
    bad_h.hbar = ctx.q_point(-1);
    REQUIRE_THROWS_AS(validate_envelope_params(bad_h, ctx), config_invalid);

    EnvelopeParams bad_z = p;
    bad_z.z = ctx.q_point(1) * p.hbar.pow(2);
    REQUIRE_THROWS_AS(validate_envelope_params(bad_z, ctx), config_invalid);
}

TEST_CASE("resonant Kahler parameter raises the denominator guard") {
    SplitMix64 rng(23);
    const auto ctx = QContext::make(Complex(0.3, -0.15));
    const auto p = draw_envelope_params(rng, 2, ctx);
    // k = 0 in the standard polarization carries z hbar^{-1}; make that a
    // plain power of q
    EnvelopeParams bad = p;
    bad.z = ctx.q_point(1) * p.hbar;
    REQUIRE_THROWS_AS(stab_tpn(0, p.a[1].inv(), bad, ctx, Chamber::positive),
                      denominator_vanishes);
    REQUIRE_NOTHROW(stab_tpn(1, p.a[1].inv(), bad, ctx, Chamber::positive));
}

TEST_CASE("bundled factorization check reports small residuals") {
    SplitMix64 rng(24);
    const auto ctx = QContext::make(Complex(0.25, 0.12));
    const int n = 3;
    for (int rep = 0; rep < 3; ++rep) {
        const auto p = draw_envelope_params(rng, n, ctx, 1e-2, n + 2);
        for (int m = 1; m <= 2; ++m) {
            const TriangleCheck tc = triangle_factorization_check(p, ctx, m);
            REQUIRE(tc.zero_residual < 1e-10);
            REQUIRE(tc.diagonal_residual < 1e-10);
            REQUIRE(tc.shift_residual < 1e-10);
        }
    }
}

TEST_CASE("weight matrix smoothness gate") {
    REQUIRE_NOTHROW(validate_weight_matrix({{1, 1, 1}}));
    REQUIRE_NOTHROW(validate_weight_matrix({{1, 0, 1, -1}, {0, 1, 1, 0}}));
    REQUIRE_THROWS_AS(validate_weight_matrix({{1, 2}}), config_invalid);
    // 2x2 minor equal to 2
    REQUIRE_THROWS_AS(validate_weight_matrix({{1, 1, 0}, {1, -1, 1}}), config_invalid);
    REQUIRE_THROWS_AS(validate_weight_matrix({{1, 1}, {1, 1, 1}}), config_invalid);
}
