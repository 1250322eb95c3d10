#pragma once

#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "envelopes.hpp"
#include "errors.hpp"
#include "grassmann.hpp"
#include "linalg.hpp"
#include "qseries.hpp"
#include "vertex.hpp"

namespace ellstab {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSON conventions: complex values as {re, im}, multiplicative group elements
// as log coordinates {u_re, u_im}. Branches live in the logs, so round trips
// through a document cannot silently move a parameter to another sheet.

inline Json json_complex(Complex v) { return Json{{"re", v.real()}, {"im", v.imag()}}; }

inline Json json_log(const MultPoint& p) {
    return Json{{"u_re", p.u.real()}, {"u_im", p.u.imag()}};
}

namespace detail {

inline const Json& field(const Json& j, const char* name, const std::string& where) {
    const auto it = j.find(name);
    if (it == j.end()) throw config_invalid(where + ": missing field '" + name + "'");
    return *it;
}

inline double number_at(const Json& j, const char* name, const std::string& where) {
    const Json& v = field(j, name, where);
    if (!v.is_number()) throw config_invalid(where + ": field '" + name + "' is not a number");
    return v.get<double>();
}

}  // namespace detail

inline Complex complex_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw config_invalid(where + ": expected a {re, im} object");
    return {detail::number_at(j, "re", where), detail::number_at(j, "im", where)};
}

inline MultPoint log_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw config_invalid(where + ": expected a {u_re, u_im} object");
    return MultPoint{Complex(detail::number_at(j, "u_re", where),
                             detail::number_at(j, "u_im", where))};
}

// ---------------------------------------------------------------------------
// Parameter documents. Required: q {re, im}, a_log [{u_re, u_im}...],
// hbar_half_log {u_re, u_im}, z_log {u_re, u_im}. Optional: trunc (series
// truncation override), tol (q-series tail tolerance), and the hypertoric
// block weight_matrix + fixed_points[].

struct ParamsDoc {
    EnvelopeParams params;
    HalfWeight hbar_half;
    QContext ctx;
    bool has_hypertoric = false;
    HypertoricData hypertoric;
};

namespace detail {

inline std::vector<int> int_list(const Json& j, const std::string& where) {
    if (!j.is_array()) throw config_invalid(where + ": expected an integer array");
    std::vector<int> v;
    for (const Json& e : j) {
        if (!e.is_number_integer()) throw config_invalid(where + ": non-integer entry");
        v.push_back(e.get<int>());
    }
    return v;
}

inline TChar tchar_from_json(const Json& j, const std::string& where) {
    TChar c;
    c.a_exp = int_list(field(j, "a_exp", where), where + ".a_exp");
    c.hbar_exp = field(j, "hbar_exp", where).get<int>();
    return c;
}

}  // namespace detail

inline HypertoricData hypertoric_from_json(const Json& doc) {
    HypertoricData hd;
    const std::string where = "params.weight_matrix";
    for (const Json& row : detail::field(doc, "weight_matrix", where))
        hd.weight_matrix.push_back(detail::int_list(row, where));
    int idx = 0;
    for (const Json& fp : detail::field(doc, "fixed_points", "params.fixed_points")) {
        const std::string w = "params.fixed_points[" + std::to_string(idx++) + "]";
        HypertoricFixedPoint f;
        for (const Json& al : detail::field(fp, "alpha", w))
            f.alpha.push_back(detail::tchar_from_json(al, w + ".alpha"));
        for (const Json& rt : detail::field(fp, "m1_roots", w)) {
            SRoot r;
            r.s_exp = detail::int_list(detail::field(rt, "s_exp", w), w + ".s_exp");
            r.tw = detail::tchar_from_json(detail::field(rt, "tw", w), w + ".tw");
            f.m1_roots.push_back(std::move(r));
        }
        f.z_hbar_shift =
            detail::int_list(detail::field(fp, "z_hbar_shift", w), w + ".z_hbar_shift");
        if (fp.contains("label")) f.label = fp.at("label").get<std::string>();
        hd.fixed_points.push_back(std::move(f));
    }
    return hd;
}

inline ParamsDoc parse_params(const Json& doc) {
    if (!doc.is_object()) throw config_invalid("params: expected a JSON object");
    ParamsDoc out;
    const Complex q = complex_from_json(detail::field(doc, "q", "params"), "params.q");
    double tol = 1e-12;
    int trunc = 0;
    if (doc.contains("tol")) tol = doc.at("tol").get<double>();
    if (doc.contains("trunc")) trunc = doc.at("trunc").get<int>();
    out.ctx = QContext::make(q, tol, trunc);

    const Json& alog = detail::field(doc, "a_log", "params");
    if (!alog.is_array() || alog.empty())
        throw config_invalid("params.a_log: expected a nonempty array");
    for (size_t i = 0; i < alog.size(); ++i)
        out.params.a.push_back(
            log_from_json(alog[i], "params.a_log[" + std::to_string(i) + "]"));

    const MultPoint half =
        log_from_json(detail::field(doc, "hbar_half_log", "params"), "params.hbar_half_log");
    out.hbar_half = HalfWeight{MultPoint{2.0 * half.u}, 1};
    out.params.hbar = MultPoint{2.0 * half.u};
    out.params.z = log_from_json(detail::field(doc, "z_log", "params"), "params.z_log");

    if (doc.contains("weight_matrix") || doc.contains("fixed_points")) {
        out.hypertoric = hypertoric_from_json(doc);
        out.has_hypertoric = true;
    }
    return out;
}

inline ParamsDoc parse_params_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw config_invalid(std::string("params: not valid JSON: ") + e.what());
    }
    return parse_params(doc);
}

inline Json params_to_json(const EnvelopeParams& p, const QContext& ctx) {
    Json a = Json::array();
    for (const MultPoint& ai : p.a) a.push_back(json_log(ai));
    return Json{{"q", json_complex(ctx.q())},
                {"a_log", a},
                {"hbar_half_log", json_log(MultPoint{0.5 * p.hbar.u})},
                {"z_log", json_log(p.z)},
                {"tol", ctx.tol},
                {"trunc", ctx.trunc}};
}

// ---------------------------------------------------------------------------
// Matrix and series exports.

inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (int r = 0; r < m.rows; ++r) {
        Json row = Json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(json_complex(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json restriction_matrix_to_json(const RestrictionMatrix& m) {
    return Json{{"basis", m.basis}, {"entries", matrix_to_json(m.entries)}};
}

inline std::string restriction_matrix_to_csv(const RestrictionMatrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "row_basis,col_basis,re,im\n";
    for (int r = 0; r < m.entries.rows; ++r)
        for (int c = 0; c < m.entries.cols; ++c)
            os << m.basis[static_cast<size_t>(r)] << ',' << m.basis[static_cast<size_t>(c)]
               << ',' << m.entries(r, c).real() << ',' << m.entries(r, c).imag() << '\n';
    return os.str();
}

inline Json vertex_series_to_json(const VertexSeries& s) {
    Json coeffs = Json::array();
    for (const Complex& c : s.coeffs) coeffs.push_back(json_complex(c));
    return Json{{"fixed_point", s.fixed_point + 1},
                {"order", s.order()},
                {"coefficients", coeffs}};
}

}  // namespace ellstab
