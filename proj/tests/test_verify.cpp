#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>

#include <ellstab/verify.hpp>

#include "test_support.hpp"

using namespace ellstab;

TEST_CASE("default suite run is green, sorted, and complete") {
    const VerificationReport rep = run_suite(SuiteConfig{});
    REQUIRE(rep.records.size() == 37);
    REQUIRE(rep.all_pass());
    REQUIRE(std::is_sorted(rep.records.begin(), rep.records.end(),
                           [](const CheckRecord& x, const CheckRecord& y) {
                               return x.check_id < y.check_id;
                           }));
    for (const auto& name : suite_names()) {
        const bool seen = std::any_of(rep.records.begin(), rep.records.end(),
                                      [&](const CheckRecord& r) {
                                          return r.check_id.rfind(name + ".", 0) == 0;
                                      });
        REQUIRE(seen);
    }
    for (const auto& r : rep.records) {
        REQUIRE(r.params_digest.size() == 16);
        REQUIRE(r.tolerance > 0.0);
        REQUIRE(r.pass == (r.residual < r.tolerance));
    }
}

TEST_CASE("reports are byte-identical across runs at a fixed seed") {
    SuiteConfig cfg;
    cfg.seed = 7;
    const std::string a = report_to_json(run_suite(cfg)).dump(2);
    const std::string b = report_to_json(run_suite(cfg)).dump(2);
    REQUIRE(a == b);
}

TEST_CASE("suite selection and the residue depth knob") {
    SuiteConfig theta_only;
    theta_only.suites = {"theta"};
    const auto trep = run_suite(theta_only);
    REQUIRE(trep.records.size() == 3);
    for (const auto& r : trep.records) REQUIRE(r.check_id.rfind("theta.", 0) == 0);

    SuiteConfig tps_only;
    tps_only.suites = {"tps"};
    tps_only.m_max = 2;
    const auto prep = run_suite(tps_only);
    REQUIRE(prep.records.size() == 8);
    REQUIRE(std::none_of(prep.records.begin(), prep.records.end(), [](const CheckRecord& r) {
        return r.check_id == "tps.residue_m3";
    }));
    REQUIRE(std::any_of(prep.records.begin(), prep.records.end(), [](const CheckRecord& r) {
        return r.check_id == "tps.residue_m2";
    }));
}

TEST_CASE("config gates reject bad suites, precision, and depth") {
    SuiteConfig bad;
    bad.suites = {"theta", "nonsense"};
    REQUIRE_THROWS_AS(run_suite(bad), config_invalid);

    SuiteConfig prec;
    prec.precision = "quad";
    REQUIRE_THROWS_AS(run_suite(prec), config_invalid);

    SuiteConfig depth;
    depth.m_max = 0;
    REQUIRE_THROWS_AS(run_suite(depth), config_invalid);
}

TEST_CASE("wide precision reruns the theta suite in extended arithmetic") {
    SuiteConfig cfg;
    cfg.suites = {"theta"};
    cfg.precision = "wide";
    const auto rep = run_suite(cfg);
    REQUIRE(rep.precision == "wide");
    REQUIRE(rep.all_pass());
    // extended precision pushes the identity residuals below double rounding
    for (const auto& r : rep.records) REQUIRE(r.residual < 1e-16);
}

TEST_CASE("report serialization carries the schema and verdicts") {
    SuiteConfig cfg;
    cfg.suites = {"vertex"};
    const auto rep = run_suite(cfg);
    const Json j = report_to_json(rep);
    REQUIRE(j.at("schema_version").get<int>() == 1);
    REQUIRE(j.at("seed").get<std::uint64_t>() == 7);
    REQUIRE(j.at("precision").get<std::string>() == "double");
    REQUIRE(j.at("checks").size() == rep.records.size());
    for (const auto& c : j.at("checks")) {
        REQUIRE(c.contains("check_id"));
        REQUIRE(c.contains("params_digest"));
        REQUIRE(c.contains("residual"));
        REQUIRE(c.contains("tolerance"));
        REQUIRE(c.at("verdict").get<std::string>() == "pass");
    }
}

TEST_CASE("pinched draws sit exactly on the collapsing divisor") {
    const auto ctx = QContext::make(Complex(0.21, 0.14));
    SplitMix64 rng(99);
    const EnvelopeParams p = draw_pinched(rng, 2, ctx);
    const Complex ratio = p.a[0].u - p.a[1].u;
    REQUIRE(testsupport::rel_err(MultPoint{ratio}.value(),
                                 p.hbar.value() * ctx.q()) < 1e-14);
    REQUIRE_THROWS_AS(vertex_contour(0, p, ctx), contour_pinched);
}
