#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "nsk/bubble.hpp"
#include "nsk/errors.hpp"
#include "nsk/field.hpp"
#include "nsk/flow.hpp"
#include "oracles.hpp"

using namespace nsk;
using namespace nsk_test;

namespace {
AnalysisConfig tiny_cfg() {
    AnalysisConfig cfg;
    cfg.epsilon0 = 0.6;
    cfg.c0 = 4.0;
    cfg.lambda_ladder = {2.0, 4.0};
    cfg.gauge_window_nx = 256;
    cfg.blowup_nx = 128;
    cfg.blowup_half_width = 4.0;
    return cfg;
}
}  // namespace

TEST_CASE("analysis config validation and the default detection radius") {
    AnalysisConfig good;
    good.validate();
    GridSpec g = square_grid(64, 1.0);
    CHECK(good.detection_radius(g) == doctest::Approx(0.05).epsilon(1e-12));
    good.detect_radius = 0.2;
    CHECK(good.detection_radius(g) == 0.2);
    CHECK(good.extraction_level() ==
          doctest::Approx(good.epsilon0 * good.epsilon0 / good.c0).epsilon(1e-14));

    AnalysisConfig bad = good;
    bad.epsilon0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.c0 = 0.5;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.delta = 2.5;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.lambda_ladder = {};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.lambda_ladder = {2.0, 2.0};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.lambda_ladder = {0.5};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.m_cap = 0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = good;
    bad.e0_cap = 0.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("concentration function matches the closed-form ball energy") {
    GridSpec g = square_grid(256, 1.0);
    const double s = 0.05;
    ManifoldMap u = rational_bubble(deg1_bubble(s), g);
    double c02 = concentration_function(u, 0.2);
    CHECK(c02 == doctest::Approx(deg1_ball_energy(s, 0.2)).epsilon(0.03));
    CHECK(concentration_function(u, 0.1) <= c02 * (1.0 + 1e-12));
    CHECK(c02 <= concentration_function(u, 0.3) * (1.0 + 1e-12));

    auto prof = concentration_profile(u, 8);
    REQUIRE(prof.size() >= 2);
    for (size_t k = 1; k < prof.size(); ++k) {
        CHECK(prof[k].first > prof[k - 1].first);
        CHECK(prof[k].second >= prof[k - 1].second * (1.0 - 1e-12));
    }
}

TEST_CASE("concentration detection: points, threshold, and budget gates") {
    GridSpec g = square_grid(512, 1.0);
    ManifoldMap u = rational_bubble(deg1_bubble(0.02), g);
    AnalysisConfig cfg = tiny_cfg();

    ConcentrationReport rep = detect_concentration({&u}, cfg);
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.threshold == doctest::Approx(0.36).epsilon(1e-14));
    CHECK(rep.r_min == doctest::Approx(cfg.detection_radius(g)).epsilon(1e-14));
    CHECK(std::hypot(rep.points[0].x.x, rep.points[0].x.y) <= rep.r_min);
    CHECK(rep.points[0].ball_energy >= rep.threshold);
    CHECK(rep.points[0].cells >= 1);
    CHECK(std::abs(rep.total_energy - 8.0 * kPi) <= 0.05 * 8.0 * kPi);

    AnalysisConfig broke = cfg;
    broke.e0_cap = 1.0;
    CHECK_THROWS_AS(detect_concentration({&u}, broke), BubbleError);

    // Two separated bubbles: m_cap = 1 trips, m_cap = 4 reports both.
    ManifoldMap base = constant_map(g, 2, 1.0);
    BubbleSpec left = deg1_bubble(0.02, {-0.5, 0.0});
    BubbleSpec right = deg1_bubble(0.02, {0.5, 0.0});
    GluedMember two = glue_member(base, {left, right}, 0);
    AnalysisConfig capped = cfg;
    capped.m_cap = 1;
    CHECK_THROWS_AS(detect_concentration({&two.u}, capped), BubbleError);
    ConcentrationReport both = detect_concentration({&two.u}, cfg);
    REQUIRE(both.points.size() == 2);
    CHECK(both.points[0].x.x < both.points[1].x.x);
    CHECK(std::abs(both.points[0].x.x + 0.5) <= 2.0 * both.r_min);
    CHECK(std::abs(both.points[1].x.x - 0.5) <= 2.0 * both.r_min);
}

TEST_CASE("blow-up extraction: level match and scale equivariance") {
    GridSpec g = square_grid(512, 1.0);
    AnalysisConfig cfg = tiny_cfg();

    auto extract_at = [&](double s) {
        ManifoldMap u = rational_bubble(deg1_bubble(s), g);
        GridField tau = tension_field(u).tau;
        return extract_blowup(u, tau, {0.0, 0.0}, cfg.detection_radius(g), cfg);
    };
    BlowupResult b3 = extract_at(0.03);
    CHECK(b3.level == doctest::Approx(cfg.extraction_level()).epsilon(0.01));
    CHECK(std::abs(b3.window_energy_b1 - b3.level) <= 0.15 * b3.level);
    CHECK(!b3.radius_floor_hit);
    CHECK(std::hypot(b3.x.x, b3.x.y) <= cfg.detection_radius(g));
    CHECK(b3.v.spec().nx == cfg.blowup_nx);
    CHECK(b3.tau_v.ncomp() == 3);

    BlowupResult b6 = extract_at(0.06);
    CHECK(b6.r / b3.r == doctest::Approx(2.0).epsilon(0.05));

    // A diffuse map never reaches the extraction level.
    GridSpec gs = square_grid(128, 1.0);
    ManifoldMap flat = geodesic_map(gs, 0.1);
    GridField ft = tension_field(flat).tau;
    CHECK_THROWS_AS(extract_blowup(flat, ft, {0.0, 0.0}, 0.1, cfg), BubbleError);
}

TEST_CASE("identity residuals of a well-glued member are small and positive") {
    GridSpec g = square_grid(512, 1.0);
    ManifoldMap base = constant_map(g, 2, 1.0);
    GluedMember m = glue_member(base, {deg1_bubble(0.0625)}, 4);
    IdentityRow row = verify_identities(m, base);
    CHECK(row.n == 4);
    CHECK(row.energy == doctest::Approx(m.energy).epsilon(1e-9));
    CHECK(row.window_energy > 0.0);
    CHECK(row.residual_e > 0.0);
    CHECK(row.residual_e <= 0.25 * row.window_energy);
    CHECK(row.window_l21 > 0.0);
    CHECK(std::isfinite(row.residual_21));
    CHECK(row.residual_osc > 0.0);
    CHECK(row.residual_osc < 1.0);
    CHECK(row.window_hess > 0.0);
    CHECK(std::isfinite(row.residual_hess));
}

TEST_CASE("neck ledger: rows per lambda, flags, and nested-annulus monotonicity") {
    GridSpec g = square_grid(512, 1.0);
    ManifoldMap base = constant_map(g, 2, 1.0);
    GluedMember m = glue_member(base, {deg1_bubble(0.0625)}, 4);

    AnalysisConfig cfg = tiny_cfg();
    cfg.lambda_ladder = {2.0, 3.0, 8.0};
    std::vector<NeckLedgerRow> rows = neck_ledger(m, cfg);
    REQUIRE(rows.size() == 3);
    for (size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].n == 4);
        CHECK(rows[k].kind == "body");
        CHECK(rows[k].i == 0);
        CHECK(rows[k].j == -1);
        CHECK(rows[k].rep.lambda == cfg.lambda_ladder[k]);
    }
    // Body annulus is (0.0625, 0.9): lambda 2 and 3 shrink to nested
    // non-empty annuli, lambda 8 empties out.
    CHECK(!rows[0].rep.annulus_empty);
    CHECK(!rows[1].rep.annulus_empty);
    CHECK(rows[2].rep.annulus_empty);
    CHECK(rows[1].rep.l2_energy < rows[0].rep.l2_energy);
    CHECK(rows[0].rep.l2_energy > 0.0);
    // The annulus energy dwarfs epsilon0^2, so analytic columns cannot be
    // produced honestly; the row must say so rather than print numbers.
    for (int k : {0, 1}) {
        CHECK(!rows[k].rep.bounds_available);
        CHECK(!rows[k].flag.empty());
    }

    std::string csv = neck_ledger_csv(rows);
    CHECK(csv.rfind("n,kind,i,j,lambda,r,annulus_empty,l2_energy,l21_norm,hessian_l1,"
                    "a0,c_lambda,a_minus_1,energy_bound,l21_bound,hessian_bound,"
                    "bounds_available,flag\n",
                    0) == 0);

    AnalysisConfig silly = cfg;
    silly.neck_inner_factor = 100.0;
    std::vector<NeckLedgerRow> flagged = neck_ledger(m, silly);
    REQUIRE(flagged.size() == 3);
    for (const NeckLedgerRow& r : flagged) {
        CHECK(r.flag == "unresolvable");
        CHECK(r.rep.annulus_empty);
    }

    CHECK_THROWS_AS(neck_ledger(GluedMember{}, cfg), UsageError);
}

TEST_CASE("epsilon0 calibration runs a sorted corpus and lands in a sane range") {
    CalibrationResult cal = calibrate_epsilon0(96);
    REQUIRE(!cal.samples.empty());
    for (size_t k = 1; k < cal.samples.size(); ++k)
        CHECK(cal.samples[k].energy >= cal.samples[k - 1].energy);
    CHECK(cal.epsilon0 > 0.1);
    CHECK(cal.epsilon0 < 2.0);
    CHECK_THROWS_AS(calibrate_epsilon0(32), UsageError);
}

TEST_CASE("end-to-end tiny glued analysis produces a coherent report") {
    SequenceSpec s;
    s.kind = "glued";
    s.first = 3;
    s.last = 3;
    s.base_nx = 16;
    s.nx_cap = 256;
    s.base = "constant:z";
    s.bubbles = {deg1_bubble(1.0)};

    SequenceAnalysis a = analyze_sequence(s, tiny_cfg());
    CHECK(a.identity_expected);
    REQUIRE(a.residuals.size() == 1);
    CHECK(a.residuals[0].n == 3);
    CHECK(!a.ledger.empty());
    REQUIRE(a.blowups.size() == 1);
    REQUIRE(a.blowup_scale_ratio.size() == 1);
    CHECK(a.blowup_scale_ratio[0] >= 0.02);
    CHECK(a.blowup_scale_ratio[0] <= 0.2);
    REQUIRE(a.detection.points.size() == 1);

    nlohmann::json j = nlohmann::json::parse(decomposition_json(a));
    CHECK(j.contains("sequence"));
    CHECK(j.contains("members"));
    CHECK(j.contains("detection"));
    CHECK(j["members"].size() == 1);
    CHECK(j["sequence"]["kind"] == "glued");
}

TEST_CASE("the negative control is labeled as such by the pipeline") {
    SequenceSpec s = parker_counterexample_sequence();
    s.first = 3;
    s.last = 3;
    s.base_nx = 16;
    s.nx_cap = 256;

    SequenceAnalysis a = analyze_sequence(s, tiny_cfg());
    CHECK(!a.identity_expected);
    REQUIRE(a.residuals.size() == 1);
    // The seam deliberately breaks the energy identity.
    CHECK(!a.energy_identity_pass);
}
