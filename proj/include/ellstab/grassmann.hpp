#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "envelopes.hpp"

namespace ellstab {

// Reading of the trailing product in the component weight function: over the
// coordinates beyond the component index (the consistent reading), or beyond
// the rank. The second is a literal transcription kept so the test suite can
// demonstrate which reading the reduction to T*P^{n-1} characterizes.
enum class FWeightTrailing { beyond_component, beyond_rank };

// Ladder of hbar exponents distributed over the symmetrized variables:
// rank-centered k + 1 - 2i, or ambient n + 1 - 2i. The two differ by a global
// shift of the Kahler parameter, which the k = 1 reduction detects.
enum class RhoConvention { rank_centered, ambient };

struct GrassParams {
    EnvelopeParams env;
    int k = 1;
    FWeightTrailing trailing = FWeightTrailing::beyond_component;
    RhoConvention rho = RhoConvention::rank_centered;

    int n() const { return env.n(); }
};

inline void validate_grass_params(const GrassParams& gp, const QContext& ctx,
                                  double eps = 1e-8) {
    if (gp.k < 1 || gp.k > gp.n()) throw config_invalid("grass: need 1 <= k <= n");
    validate_envelope_params(gp.env, ctx, eps);
}

// k-subsets of {0..n-1}, each ascending, in lexicographic order. Lex order is
// a linear extension of the componentwise dominance order, so dominance
// triangularity shows up as lower-triangular storage.
inline std::vector<std::vector<int>> ksubsets(int n, int k) {
    if (k < 0 || k > n) throw config_invalid("ksubsets: need 0 <= k <= n");
    std::vector<std::vector<int>> out;
    std::vector<int> c(static_cast<size_t>(k));
    std::iota(c.begin(), c.end(), 0);
    while (true) {
        out.push_back(c);
        int i = k - 1;
        while (i >= 0 && c[static_cast<size_t>(i)] == n - k + i) --i;
        if (i < 0) break;
        ++c[static_cast<size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            c[static_cast<size_t>(j)] = c[static_cast<size_t>(j - 1)] + 1;
    }
    return out;
}

// nu >= mu componentwise on the sorted tuples.
inline bool dominates(const std::vector<int>& nu, const std::vector<int>& mu) {
    if (nu.size() != mu.size()) throw config_invalid("dominates: size mismatch");
    for (size_t i = 0; i < nu.size(); ++i)
        if (nu[i] < mu[i]) return false;
    return true;
}

inline void validate_ksubset(const std::vector<int>& mu, const GrassParams& gp) {
    if (static_cast<int>(mu.size()) != gp.k)
        throw config_invalid("ksubset: wrong cardinality");
    for (size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] < 0 || mu[i] >= gp.n()) throw config_invalid("ksubset: index out of range");
        if (i > 0 && mu[i] <= mu[i - 1])
            throw config_invalid("ksubset: indices must strictly increase");
    }
}

// hbar exponent the i-th symmetrized variable adds to the Kahler parameter
// (0-based i).
inline int rho_ladder_exponent(int i, const GrassParams& gp) {
    return gp.rho == RhoConvention::rank_centered ? gp.k - 1 - 2 * i : gp.n() - 1 - 2 * i;
}

// Weight function of one T*P^{n-1} factor of the abelianized space, for the
// component with fixed point m (0-based): coordinates before m contribute a
// plain theta, coordinates after m an hbar-shifted one, and the Kahler theta
// carries z_shift times the component's own hbar exponent. With z_shift = z
// this is exactly the T*P^{n-1} envelope of F_{m+1}.
inline std::vector<ThetaFactor> f_weight_factors(int m, MultPoint s, MultPoint z_shift,
                                                 const GrassParams& gp) {
    const int n = gp.n();
    if (m < 0 || m >= n) throw config_invalid("f_weight: component index out of range");
    std::vector<ThetaFactor> fs;
    fs.reserve(static_cast<size_t>(n) + 1);
    if (gp.trailing == FWeightTrailing::beyond_rank) {
        // literal reading: the trailing product runs over coordinates beyond
        // the rank instead of beyond m, double-counting or skipping the ones
        // in between
        for (int i = 0; i < n; ++i) {
            if (i == m) continue;
            if (i < m) fs.push_back({s * gp.env.a[i], +1});
            if (i >= gp.k) fs.push_back({s * gp.env.a[i] * gp.env.hbar, +1});
        }
    } else {
        for (int i = 0; i < n; ++i) {
            if (i == m) continue;
            fs.push_back({i < m ? s * gp.env.a[i] : s * gp.env.a[i] * gp.env.hbar, +1});
        }
    }
    const MultPoint zs =
        z_shift * gp.env.hbar.pow(kahler_hbar_exponent(m, n, Chamber::positive,
                                                       Polarization::standard));
    fs.push_back({s * gp.env.a[m] * zs, +1});
    fs.push_back({zs, -1});
    return fs;
}

inline Complex f_weight(int m, MultPoint s, MultPoint z_shift, const GrassParams& gp,
                        const QContext& ctx) {
    return eval_theta_factors(f_weight_factors(m, s, z_shift, gp), ctx);
}

// One term of the symmetrized sum, with the variables assigned to the
// components of mu in the order given: the i-th variable feeds the weight
// function of component mu(i) at Kahler shift hbar^{2 rho_i}, divided by the
// two theta families over variable pairs.
inline Complex stab_grass_term(const std::vector<int>& mu, const std::vector<MultPoint>& s,
                               const GrassParams& gp, const QContext& ctx) {
    const int k = gp.k;
    validate_ksubset(mu, gp);
    if (static_cast<int>(s.size()) != k) throw config_invalid("stab_grass: need k variables");
    std::vector<ThetaFactor> fs;
    for (int i = 0; i < k; ++i) {
        const MultPoint zshift = gp.env.z * gp.env.hbar.pow(rho_ladder_exponent(i, gp));
        const auto fi =
            f_weight_factors(mu[static_cast<size_t>(i)], s[static_cast<size_t>(i)], zshift, gp);
        fs.insert(fs.end(), fi.begin(), fi.end());
    }
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
            fs.push_back({s[static_cast<size_t>(i)] / s[static_cast<size_t>(j)], -1});
            fs.push_back(
                {s[static_cast<size_t>(j)] / (s[static_cast<size_t>(i)] * gp.env.hbar), -1});
        }
    return eval_theta_factors(fs, ctx);
}

// Symmetrization over all k! assignments of the variables. Apparent poles of
// the per-term denominators cancel in the sum; the regularity probe verifies
// that numerically.
inline Complex stab_grass(const std::vector<int>& mu, const std::vector<MultPoint>& s,
                          const GrassParams& gp, const QContext& ctx) {
    const int k = gp.k;
    validate_ksubset(mu, gp);
    if (static_cast<int>(s.size()) != k) throw config_invalid("stab_grass: need k variables");
    std::vector<int> perm(static_cast<size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<MultPoint> t(static_cast<size_t>(k));
    Complex total(0.0);
    do {
        for (int i = 0; i < k; ++i)
            t[static_cast<size_t>(i)] = s[static_cast<size_t>(perm[static_cast<size_t>(i)])];
        total += stab_grass_term(mu, t, gp, ctx);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

inline GrassParams reversed_grass(const GrassParams& gp) {
    GrassParams r = gp;
    std::reverse(r.env.a.begin(), r.env.a.end());
    return r;
}

inline std::vector<int> mirror_subset(const std::vector<int>& mu, int n) {
    std::vector<int> out;
    out.reserve(mu.size());
    for (auto it = mu.rbegin(); it != mu.rend(); ++it) out.push_back(n - 1 - *it);
    return out;
}

// Entries indexed by the lex list of k-subsets in the original labels:
// entry(r, c) = stab_grass(subset c, restricted to the fixed point of subset
// r), the restriction substituting s_i = a_{nu(i)}^{-1}. The negative chamber
// is evaluated by reversing the a-sequence and mirroring the subsets, which
// keeps every convention tied to the positive-chamber formula.
inline CMatrix restriction_matrix_grass_core(const GrassParams& gp, const QContext& ctx,
                                             Chamber ch = Chamber::positive) {
    const int n = gp.n(), k = gp.k;
    const auto subsets = ksubsets(n, k);
    const int N = static_cast<int>(subsets.size());
    CMatrix M(N, N);
    if (ch == Chamber::negative) {
        const CMatrix P = restriction_matrix_grass_core(reversed_grass(gp), ctx);
        std::map<std::vector<int>, int> index;
        for (int r = 0; r < N; ++r) index[subsets[static_cast<size_t>(r)]] = r;
        std::vector<int> mir(static_cast<size_t>(N));
        for (int r = 0; r < N; ++r)
            mir[static_cast<size_t>(r)] = index.at(mirror_subset(subsets[static_cast<size_t>(r)], n));
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < N; ++c)
                M(r, c) = P(mir[static_cast<size_t>(r)], mir[static_cast<size_t>(c)]);
        return M;
    }
    std::vector<MultPoint> s(static_cast<size_t>(k));
    for (int r = 0; r < N; ++r) {
        for (int i = 0; i < k; ++i)
            s[static_cast<size_t>(i)] =
                gp.env.a[static_cast<size_t>(subsets[static_cast<size_t>(r)][static_cast<size_t>(i)])]
                    .inv();
        for (int c = 0; c < N; ++c)
            M(r, c) = stab_grass(subsets[static_cast<size_t>(c)], s, gp, ctx);
    }
    return M;
}

inline std::string subset_label(const std::vector<int>& mu) {
    std::string s = "F{";
    for (size_t i = 0; i < mu.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(mu[i] + 1);
    }
    s += "}";
    return s;
}

// Chamber-ordered form: the basis lists subsets in the chamber's dominance
// direction (lex ascending for the positive chamber, descending for the
// negative one), making the stored entries lower triangular.
inline RestrictionMatrix restriction_matrix_grass(const GrassParams& gp, const QContext& ctx,
                                                  Chamber ch = Chamber::positive) {
    const auto subsets = ksubsets(gp.n(), gp.k);
    const int N = static_cast<int>(subsets.size());
    const CMatrix M = restriction_matrix_grass_core(gp, ctx, ch);
    RestrictionMatrix R{CMatrix(N, N), {}};
    R.basis.reserve(static_cast<size_t>(N));
    for (int r = 0; r < N; ++r) {
        const int jr = (ch == Chamber::positive) ? r : N - 1 - r;
        R.basis.push_back(subset_label(subsets[static_cast<size_t>(jr)]));
        for (int c = 0; c < N; ++c) {
            const int kc = (ch == Chamber::positive) ? c : N - 1 - c;
            R.entries(r, c) = M(jr, kc);
        }
    }
    return R;
}

// Independent enumerator of the diagonal restriction: theta over the
// repelling tangent directions of T*Gr at the fixed point, running over
// member/non-member coordinate pairs.
inline Complex grass_diagonal_predicted(const std::vector<int>& mu, const GrassParams& gp,
                                        const QContext& ctx) {
    std::vector<char> in(static_cast<size_t>(gp.n()), 0);
    for (int m : mu) in[static_cast<size_t>(m)] = 1;
    Complex d(1.0);
    for (int m : mu)
        for (int j = 0; j < gp.n(); ++j) {
            if (in[static_cast<size_t>(j)]) continue;
            const MultPoint r = gp.env.a[static_cast<size_t>(j)] / gp.env.a[static_cast<size_t>(m)];
            d *= theta(j < m ? r : r * gp.env.hbar, ctx);
        }
    return d;
}

// Predicted ratio entry(q z) / entry(z) for the restriction matrix.
inline Complex z_quasiperiodicity_factor_grass(const std::vector<int>& nu,
                                               const std::vector<int>& mu,
                                               const GrassParams& gp) {
    MultPoint r{Complex(0.0)};
    for (int i : nu) r = r * gp.env.a[static_cast<size_t>(i)];
    for (int i : mu) r = r / gp.env.a[static_cast<size_t>(i)];
    return r.value();
}

struct RegularityProbe {
    Complex value_eps;      // symmetrized value at offset eps
    Complex value_half;     // and at eps / 2
    double rel_change;      // |v(eps) - v(eps/2)| / |v(eps)|: O(eps) if regular
    double control_growth;  // |T(eps/2)| / |T(eps)| for one bare term: ~2 at a pole
};

// Drives the variables into a collision s_i -> s_j (or s_i -> s_j / hbar for
// the dual denominator family) and measures whether the symmetrized sum stays
// regular while a single term blows up.
inline RegularityProbe regularity_probe(const std::vector<int>& mu, int i, int j,
                                        bool dual_family, std::vector<MultPoint> s,
                                        double eps, const GrassParams& gp,
                                        const QContext& ctx) {
    if (i == j || i < 0 || j < 0 || i >= gp.k || j >= gp.k)
        throw config_invalid("regularity_probe: bad variable pair");
    const MultPoint target =
        dual_family ? s[static_cast<size_t>(j)] / gp.env.hbar : s[static_cast<size_t>(j)];
    auto at = [&](double e) {
        s[static_cast<size_t>(i)] = MultPoint{target.u + Complex(e, 0.0)};
        return s;
    };
    const auto se = at(eps);
    const auto sh = at(eps / 2.0);
    RegularityProbe r;
    r.value_eps = stab_grass(mu, se, gp, ctx);
    r.value_half = stab_grass(mu, sh, gp, ctx);
    r.rel_change = std::abs(r.value_eps - r.value_half) / std::abs(r.value_eps);
    const double te = std::abs(stab_grass_term(mu, se, gp, ctx));
    const double th = std::abs(stab_grass_term(mu, sh, gp, ctx));
    r.control_growth = th / te;
    return r;
}

}  // namespace ellstab
