// Command line front end. Subcommands mirror the library layers: theta and
// verify run the named check suites, stab / grass / vertex / limits compute
// objects from a params file, rmatrix streams residual records for drawn
// parameter triples. All output is JSON; reports are byte-identical across
// runs at a fixed seed and precision, so per-check wall times go to stderr.
//
// Exit codes: 0 success, 1 at least one check failed (the report is still
// written), 2 bad configuration or usage, 3 a numeric guard fired (resonance,
// contour pinch, exhausted draws, wall collisions, ...).

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <ellstab/verify.hpp>

namespace {

using namespace ellstab;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_invalid("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_invalid("cannot write file: " + path);
    out << text;
}

// JSON goes to stdout unless --out redirects it to a file.
void emit(const Json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_file(out_path, text);
}

std::string env_precision() {
    const char* v = std::getenv("ELLSTAB_PRECISION");
    if (v == nullptr || *v == '\0') return "double";
    const std::string s{v};
    if (s != "double" && s != "wide")
        throw config_invalid("ELLSTAB_PRECISION must be 'double' or 'wide', got '" + s + "'");
    return s;
}

Json load_doc(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw config_invalid(std::string("params file is not valid JSON: ") + e.what());
    }
}

void check_rank(const ParamsDoc& doc, int n_flag) {
    if (n_flag > 0 && doc.params.n() != n_flag)
        throw config_invalid("--n " + std::to_string(n_flag) + " disagrees with a_log size " +
                             std::to_string(doc.params.n()));
}

Chamber chamber_of(const std::string& s) {
    if (s == "positive") return Chamber::positive;
    if (s == "negative") return Chamber::negative;
    throw config_invalid("chamber must be 'positive' or 'negative', got '" + s + "'");
}

Polarization polarization_of(const std::string& s) {
    if (s == "standard") return Polarization::standard;
    if (s == "opposite") return Polarization::opposite;
    throw config_invalid("polarization must be 'standard' or 'opposite', got '" + s + "'");
}

RKind rkind_of(const std::string& s) {
    if (s == "closed") return RKind::closed_form;
    if (s == "felder") return RKind::felder;
    if (s == "stab") return RKind::from_stab;
    throw config_invalid("kind must be 'closed', 'felder', or 'stab', got '" + s + "'");
}

int emit_report(const VerificationReport& rep, const std::string& out_path) {
    double total_ms = 0.0;
    for (const auto& r : rep.records) {
        std::fprintf(stderr, "# %-36s %9.3f ms\n", r.check_id.c_str(), r.runtime_ms);
        total_ms += r.runtime_ms;
    }
    std::fprintf(stderr, "# total %.3f ms\n", total_ms);
    emit(report_to_json(rep), out_path);
    int failed = 0;
    for (const auto& r : rep.records)
        if (!r.pass) ++failed;
    if (failed > 0)
        std::fprintf(stderr, "partial failure: %d of %zu checks failed\n", failed,
                     rep.records.size());
    return failed > 0 ? 1 : 0;
}

int run_verify(std::uint64_t seed, const std::vector<std::string>& suites, int m_max,
               const std::string& out_path) {
    SuiteConfig cfg;
    cfg.seed = seed;
    cfg.suites = suites;
    cfg.m_max = m_max;
    cfg.precision = env_precision();
    return emit_report(run_suite(cfg), out_path);
}

int run_stab(const std::string& space, int n_flag, const std::string& params_path,
             const std::string& chamber, const std::string& polarization,
             const std::string& out_path, const std::string& csv_path) {
    const Json raw = load_doc(params_path);
    const ParamsDoc doc = parse_params(raw);
    check_rank(doc, n_flag);

    RestrictionMatrix rm;
    if (space == "tpn") {
        rm = restriction_matrix(doc.params, doc.ctx, chamber_of(chamber),
                                polarization_of(polarization));
    } else if (space == "hypertoric") {
        if (!doc.has_hypertoric)
            throw config_invalid("--space hypertoric needs weight_matrix and fixed_points "
                                 "in the params file");
        validate_weight_matrix(doc.hypertoric.weight_matrix);
        std::vector<MultPoint> zs;
        if (raw.contains("z_logs")) {
            const Json& arr = raw.at("z_logs");
            if (!arr.is_array())
                throw config_invalid("params.z_logs: expected an array of {u_re, u_im}");
            for (std::size_t i = 0; i < arr.size(); ++i)
                zs.push_back(log_from_json(arr[i], "params.z_logs[" + std::to_string(i) + "]"));
        } else {
            zs.assign(static_cast<std::size_t>(doc.hypertoric.circles()), doc.params.z);
        }
        if (static_cast<int>(zs.size()) != doc.hypertoric.circles())
            throw config_invalid("params.z_logs size must equal the number of circles");
        const HypertoricParams hp{doc.params.a, doc.params.hbar, zs};
        rm.entries = restriction_matrix_hypertoric(doc.hypertoric, hp, doc.ctx);
        for (std::size_t i = 0; i < doc.hypertoric.fixed_points.size(); ++i) {
            const std::string& label = doc.hypertoric.fixed_points[i].label;
            rm.basis.push_back(label.empty() ? "F" + std::to_string(i + 1) : label);
        }
    } else {
        throw config_invalid("--space must be 'tpn' or 'hypertoric', got '" + space + "'");
    }

    if (!csv_path.empty()) write_file(csv_path, restriction_matrix_to_csv(rm));
    emit(restriction_matrix_to_json(rm), out_path);
    return 0;
}

int run_grass(int k_flag, int n_flag, const std::string& params_path,
              const std::string& chamber, const std::string& out_path,
              const std::string& csv_path) {
    const Json raw = load_doc(params_path);
    const ParamsDoc doc = parse_params(raw);
    check_rank(doc, n_flag);

    GrassParams gp;
    gp.env = doc.params;
    gp.k = k_flag > 0 ? k_flag : raw.value("k", 1);
    if (gp.k < 1 || gp.k > gp.n())
        throw config_invalid("grass rank k must lie in 1..n, got " + std::to_string(gp.k));

    const RestrictionMatrix rm = restriction_matrix_grass(gp, doc.ctx, chamber_of(chamber));
    if (!csv_path.empty()) write_file(csv_path, restriction_matrix_to_csv(rm));
    emit(restriction_matrix_to_json(rm), out_path);
    return 0;
}

int run_rmatrix(const std::string& check, const std::string& kind_name, int draws,
                std::uint64_t seed, const std::string& out_path) {
    if (draws < 1) throw config_invalid("--draws must be positive");
    const RKind kind = rkind_of(kind_name);
    SplitMix64 rng(seed);

    Complex q;
    double tolerance = 0.0;
    if (check == "dyb") {
        q = Complex(0.24, 0.14);
        tolerance = 1e-9;
    } else if (check == "unitarity") {
        q = Complex(0.31, -0.2);
        tolerance = 1e-10;
    } else if (check == "product") {
        q = Complex(0.29, -0.18);
        tolerance = 1e-10;
    } else {
        throw config_invalid("--check must be 'dyb', 'unitarity', or 'product', got '" +
                             check + "'");
    }
    const auto ctx = QContext::make(q);

    Json records = Json::array();
    double worst = 0.0;
    for (int d = 0; d < draws; ++d) {
        double residual = 0.0;
        if (check == "dyb") {
            const auto p = draw_generic(rng, 3, ctx, 1e-3, 4);
            residual = check_dyb(kind, p.a[0], p.a[1], p.a[2], p.hbar, p.z, ctx);
        } else {
            const auto p = draw_generic(rng, 2, ctx, 1e-3, 3);
            const MultPoint u = p.a[0] / p.a[1];
            if (check == "unitarity") {
                residual = check_unitarity(kind, u, p.hbar, p.z, ctx);
            } else {
                const CMatrix rs = r_from_stab(u, p.hbar, p.z, ctx);
                const CMatrix rc = r_closed_form(u, p.hbar, p.z, ctx);
                residual = max_abs(rs - rc) / std::max(max_abs(rc), 1e-300);
            }
        }
        worst = std::max(worst, residual);
        records.push_back(Json{{"draw", d}, {"residual", residual}});
    }

    const bool pass = worst < tolerance;
    Json out{{"check", check},    {"draws", draws},
             {"seed", seed},      {"q", json_complex(q)},
             {"records", records}, {"max_residual", worst},
             {"tolerance", tolerance}, {"verdict", pass ? "pass" : "fail"}};
    if (check != "product") out["kind"] = kind_name;
    emit(out, out_path);
    return pass ? 0 : 1;
}

int run_vertex(int n_flag, int k_flag, int order, bool with_contour, int quad_points,
               const std::string& params_path, const std::string& out_path) {
    const Json raw = load_doc(params_path);
    const ParamsDoc doc = parse_params(raw);
    check_rank(doc, n_flag);
    const int n = doc.params.n();
    if (k_flag < 1 || k_flag > n)
        throw config_invalid("--k indexes fixed points 1..n, got " + std::to_string(k_flag));
    if (order < 1) throw config_invalid("--order must be positive");

    const int k = k_flag - 1;
    const VertexSeries series = vertex_tpn(k, order, doc.params, doc.ctx);
    Json out = vertex_series_to_json(series);
    const Complex value = vertex_value(k, order, doc.params, doc.ctx);
    out["value"] = json_complex(value);
    if (with_contour) {
        const Complex loop = vertex_contour(k, doc.params, doc.ctx, quad_points);
        out["contour"] = json_complex(loop);
        out["rel_diff"] = std::abs(value - loop) / std::max(std::abs(loop), 1e-300);
    }
    emit(out, out_path);
    return 0;
}

int run_limits(const std::vector<double>& theta_ratio, const std::vector<double>& growth,
               const std::vector<double>& stab_support, const std::string& out_path) {
    const int modes = (theta_ratio.empty() ? 0 : 1) + (growth.empty() ? 0 : 1) +
                      (stab_support.empty() ? 0 : 1);
    if (modes != 1)
        throw config_invalid("pick exactly one of --theta-ratio L, --growth N ALPHA, "
                             "--stab-support L");

    if (!theta_ratio.empty()) {
        const MultPoint a{Complex(0.31, 0.83)};
        const MultPoint zeta{Complex(0.11, 0.57)};
        const auto rep = theta_ratio_limit(a, zeta, theta_ratio[0]);
        emit(Json{{"L", theta_ratio[0]},
                  {"band", rep.band},
                  {"limit", json_complex(rep.limit)},
                  {"predicted", json_complex(rep.predicted)},
                  {"residual", rep.residual},
                  {"tail_gaps", rep.tail_gaps}},
             out_path);
        return 0;
    }

    if (!growth.empty()) {
        const int nw = static_cast<int>(growth[0]);
        if (static_cast<double>(nw) != growth[0])
            throw config_invalid("--growth N must be an integer");
        const double alpha = growth[1];
        const MultPoint w{Complex(0.0, 0.93)};
        Json verdicts = Json::array();
        for (const auto& v : section_growth_check(nw, alpha, w))
            verdicts.push_back(Json{{"k", v.k},
                                    {"predicted", v.window_predicted},
                                    {"measured", v.window_measured},
                                    {"slope", v.slope}});
        emit(Json{{"N", nw}, {"alpha", alpha}, {"verdicts", verdicts}}, out_path);
        return 0;
    }

    const MultPoint zeta{Complex(0.07, 0.61)};
    const MultPoint hbar{Complex(-0.35, 0.25)};
    Json windows = Json::array();
    for (const auto& w : stab_support_limit(zeta, hbar, stab_support[0]))
        windows.push_back(Json{{"row", w.row},
                               {"col", w.col},
                               {"slots", w.slots},
                               {"weights", w.weights},
                               {"support", w.support},
                               {"fit_residual", w.fit_residual}});
    emit(Json{{"L", stab_support[0]}, {"windows", windows}}, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"elliptic stable envelopes, R-matrices, and vertex functions"};
    app.require_subcommand(1);

    // verify / theta
    std::uint64_t seed = 7;
    std::vector<std::string> suites;
    int m_max = 3;
    std::string out_path;
    auto* verify_cmd = app.add_subcommand("verify", "run verification suites");
    verify_cmd->add_option("--suite", suites,
                           "suites to run: all, theta, envelope, grass, rmatrix, vertex, "
                           "tps, limits (repeatable)");
    verify_cmd->add_option("--seed", seed, "draw seed");
    verify_cmd->add_option("--m-max", m_max, "pole-subtraction residue depth");
    verify_cmd->add_option("--out", out_path, "write the report to a file instead of stdout");

    std::uint64_t theta_seed = 7;
    std::string theta_out;
    auto* theta_cmd = app.add_subcommand("theta", "run the theta identity checks");
    theta_cmd->add_option("--seed", theta_seed, "draw seed");
    theta_cmd->add_option("--out", theta_out, "write the report to a file instead of stdout");

    // stab
    std::string stab_space = "tpn", stab_params, stab_chamber = "positive";
    std::string stab_polarization = "standard", stab_out, stab_csv;
    int stab_n = 0;
    auto* stab_cmd = app.add_subcommand("stab", "restriction matrix of the stable envelope");
    stab_cmd->add_option("--space", stab_space, "tpn | hypertoric");
    stab_cmd->add_option("--n", stab_n, "expected torus rank (validated against a_log)");
    stab_cmd->add_option("--params", stab_params, "params JSON file")->required();
    stab_cmd->add_option("--chamber", stab_chamber, "positive | negative");
    stab_cmd->add_option("--polarization", stab_polarization, "standard | opposite");
    stab_cmd->add_option("--out", stab_out, "write JSON to a file instead of stdout");
    stab_cmd->add_option("--csv", stab_csv, "also write the matrix as CSV");

    // grass
    std::string grass_params, grass_chamber = "positive", grass_out, grass_csv;
    int grass_k = 0, grass_n = 0;
    auto* grass_cmd =
        app.add_subcommand("grass", "restriction matrix on the cotangent Grassmannian");
    grass_cmd->add_option("--k", grass_k, "rank of the tautological subspace");
    grass_cmd->add_option("--n", grass_n, "expected torus rank (validated against a_log)");
    grass_cmd->add_option("--params", grass_params, "params JSON file")->required();
    grass_cmd->add_option("--chamber", grass_chamber, "positive | negative");
    grass_cmd->add_option("--out", grass_out, "write JSON to a file instead of stdout");
    grass_cmd->add_option("--csv", grass_csv, "also write the matrix as CSV");

    // rmatrix
    std::string rm_check, rm_kind = "closed", rm_out;
    int rm_draws = 50;
    std::uint64_t rm_seed = 7;
    auto* rm_cmd = app.add_subcommand("rmatrix", "R-matrix residual records over drawn triples");
    rm_cmd->add_option("--check", rm_check, "dyb | unitarity | product")->required();
    rm_cmd->add_option("--kind", rm_kind, "closed | felder | stab");
    rm_cmd->add_option("--draws", rm_draws, "number of parameter draws");
    rm_cmd->add_option("--seed", rm_seed, "draw seed");
    rm_cmd->add_option("--out", rm_out, "write JSON to a file instead of stdout");

    // vertex
    std::string vx_space = "tpn", vx_params, vx_out;
    int vx_n = 0, vx_k = 1, vx_order = 12, vx_quad = 512;
    bool vx_contour = false;
    auto* vx_cmd = app.add_subcommand("vertex", "vertex function series and contour values");
    vx_cmd->add_option("--space", vx_space, "tpn");
    vx_cmd->add_option("--n", vx_n, "expected torus rank (validated against a_log)");
    vx_cmd->add_option("--k", vx_k, "fixed point index, 1-based");
    vx_cmd->add_option("--order", vx_order, "series truncation degree");
    vx_cmd->add_option("--params", vx_params, "params JSON file")->required();
    vx_cmd->add_flag("--contour", vx_contour, "also evaluate the contour integral");
    vx_cmd->add_option("--quad", vx_quad, "contour quadrature nodes");
    vx_cmd->add_option("--out", vx_out, "write JSON to a file instead of stdout");

    // limits
    std::vector<double> lim_theta_ratio, lim_growth, lim_support;
    std::string lim_out;
    auto* lim_cmd = app.add_subcommand("limits", "small-q limit probes");
    lim_cmd->add_option("--theta-ratio", lim_theta_ratio,
                        "theta ratio limit at slope L")
        ->expected(1);
    lim_cmd->add_option("--growth", lim_growth, "growth verdicts for weight N at shift alpha")
        ->expected(2);
    lim_cmd->add_option("--stab-support", lim_support, "support windows at slope L")
        ->expected(1);
    lim_cmd->add_option("--out", lim_out, "write JSON to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (verify_cmd->parsed()) return run_verify(seed, suites, m_max, out_path);
        if (theta_cmd->parsed()) return run_verify(theta_seed, {"theta"}, 3, theta_out);
        if (stab_cmd->parsed())
            return run_stab(stab_space, stab_n, stab_params, stab_chamber, stab_polarization,
                            stab_out, stab_csv);
        if (grass_cmd->parsed())
            return run_grass(grass_k, grass_n, grass_params, grass_chamber, grass_out,
                             grass_csv);
        if (rm_cmd->parsed()) return run_rmatrix(rm_check, rm_kind, rm_draws, rm_seed, rm_out);
        if (vx_cmd->parsed()) {
            if (vx_space != "tpn")
                throw config_invalid("--space must be 'tpn', got '" + vx_space + "'");
            return run_vertex(vx_n, vx_k, vx_order, vx_contour, vx_quad, vx_params, vx_out);
        }
        if (lim_cmd->parsed())
            return run_limits(lim_theta_ratio, lim_growth, lim_support, lim_out);
    } catch (const config_invalid& e) {
        std::fprintf(stderr, "error: %s\nrun with --help for usage\n", e.what());
        return 2;
    } catch (const error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
