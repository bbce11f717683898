#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "nsk/errors.hpp"
#include "nsk/norms.hpp"
#include "oracles.hpp"

using namespace nsk;
using namespace nsk_test;

TEST_CASE("L2 and L21 of ball indicators hit sqrt(pi) r") {
    GridSpec g = square_grid(256, 2.0);
    Region all = Region::all();
    for (double r : {0.5, 1.0}) {
        GridField chi = indicator_ball(g, {0.0, 0.0}, r);
        CHECK(l2_norm(chi, all) == doctest::Approx(std::sqrt(kPi) * r).epsilon(0.02));
        CHECK(lorentz21_norm(chi, all) == doctest::Approx(std::sqrt(kPi) * r).epsilon(0.02));
    }
}

TEST_CASE("L21 of a two-level function: exact step-distribution integral") {
    GridSpec g = square_grid(256, 2.0);
    GridField f = GridField::scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double rho = dist(g.cell_center(i, j), {0.0, 0.0});
            f.at(i, j, 0) = rho <= 0.5 ? 2.0 : (rho <= 1.0 ? 1.0 : 0.0);
        }
    // int_0^2 lambda(t)^{1/2} dt = 1*sqrt(pi) + 1*sqrt(pi/4) = 1.5 sqrt(pi)
    CHECK(lorentz21_norm(f, Region::all()) ==
          doctest::Approx(1.5 * std::sqrt(kPi)).epsilon(0.02));
}

TEST_CASE("weak-L2 of indicators and of 1/|z|") {
    GridSpec g = square_grid(256, 2.0);
    GridField chi = indicator_ball(g, {0.0, 0.0}, 1.0);
    CHECK(lorentz2inf_norm(chi, Region::all()) ==
          doctest::Approx(std::sqrt(kPi)).epsilon(0.02));

    // 1/|z| on the unit disk: t sqrt(lambda(t)) = sqrt(pi) at every level once
    // the few cells nearest the origin are excluded (they quantize lambda).
    GridSpec g2 = square_grid(256, 1.0);
    GridField inv = inverse_abs(g2);
    Region ann = Region::annulus({0.0, 0.0}, 12.0 * g2.h(), 1.0);
    CHECK(lorentz2inf_norm(inv, ann) == doctest::Approx(std::sqrt(kPi)).epsilon(0.02));
}

TEST_CASE("L log L of the unit-ball indicator is pi log 3") {
    GridSpec g = square_grid(256, 2.0);
    GridField chi = indicator_ball(g, {0.0, 0.0}, 1.0);
    CHECK(llogl_norm(chi, Region::all()) == doctest::Approx(kPi * std::log(3.0)).epsilon(0.02));
}

TEST_CASE("homogeneity and norm comparisons") {
    GridSpec g = square_grid(128, 2.0);
    GridField f = smooth_bump(g);
    Region all = Region::all();
    const double s = 2.7;
    GridField sf = f;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) sf.at(i, j, 0) *= s;
    CHECK(lorentz21_norm(sf, all) ==
          doctest::Approx(s * lorentz21_norm(f, all)).epsilon(1e-12));
    CHECK(l2_norm(sf, all) == doctest::Approx(s * l2_norm(f, all)).epsilon(1e-12));

    // ||f||_{L2} <= ||f||_{L21} for step distributions.
    CHECK(l2_norm(f, all) <= lorentz21_norm(f, all) * (1.0 + 1e-12));
    GridSpec g2 = square_grid(128, 1.0);
    GridField inv = inverse_abs(g2);
    Region ann = Region::annulus({0.0, 0.0}, 0.1, 0.9);
    CHECK(l2_norm(inv, ann) <= lorentz21_norm(inv, ann) * (1.0 + 1e-12));

    // Region monotonicity.
    CHECK(lorentz21_norm(f, Region::disk({0.0, 0.0}, 0.5)) <=
          lorentz21_norm(f, Region::disk({0.0, 0.0}, 1.0)) * (1.0 + 1e-12));
    CHECK(lorentz21_norm(f, Region::disk({0.0, 0.0}, 1.0)) <=
          lorentz21_norm(f, all) * (1.0 + 1e-12));
}

TEST_CASE("Morrey growth of the unit-ball indicator at delta = 2 is pi") {
    GridSpec g = square_grid(256, 2.0);
    GridField chi = indicator_ball(g, {0.0, 0.0}, 1.0);
    Region all = Region::all();
    CHECK(morrey_norm(chi, 1.0, 2.0, all) == doctest::Approx(kPi).epsilon(0.025));
    CHECK(weak_morrey_norm(chi, 1.0, 2.0, all) == doctest::Approx(kPi).epsilon(0.025));
    // Weak variant never exceeds the strong one on the same data.
    GridField f = smooth_bump(g);
    CHECK(weak_morrey_norm(f, 1.0, 1.5, all) <=
          morrey_norm(f, 1.0, 1.5, all) * (1.0 + 1e-12));
}

TEST_CASE("distribution: frozen step data on a tiny grid") {
    GridSpec g = square_grid(8, 1.0);
    GridField f = GridField::scalar(g);
    f.at(0, 0, 0) = 2.0;
    f.at(1, 0, 0) = 2.0;
    f.at(2, 0, 0) = 2.0;
    for (int i = 3; i < 8; ++i) f.at(i, 0, 0) = 1.0;
    auto d = distribution(f, Region::all());
    REQUIRE(d.size() == 2);
    double h2 = g.h() * g.h();
    CHECK(d[0].first == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d[0].second == doctest::Approx(8 * h2).epsilon(1e-15));
    CHECK(d[1].first == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(d[1].second == doctest::Approx(3 * h2).epsilon(1e-15));
}

TEST_CASE("norm report json carries the individual values") {
    GridSpec g = square_grid(64, 2.0);
    GridField chi = indicator_ball(g, {0.0, 0.0}, 1.0);
    Region all = Region::all();
    NormReport r = compute_norms(chi, all, 1.0, 1.5);
    CHECK(r.l2 == doctest::Approx(l2_norm(chi, all)).epsilon(1e-14));
    CHECK(r.lorentz21 == doctest::Approx(lorentz21_norm(chi, all)).epsilon(1e-14));
    CHECK(r.llogl == doctest::Approx(llogl_norm(chi, all)).epsilon(1e-14));
    CHECK(r.morrey == doctest::Approx(morrey_norm(chi, 1.0, 1.5, all)).epsilon(1e-14));
    CHECK(r.morrey_root == doctest::Approx(r.morrey).epsilon(1e-14));  // p = 1
    auto j = nlohmann::json::parse(norm_report_json(r));
    CHECK(j.contains("l2"));
    CHECK(j.contains("lorentz21"));
    CHECK(j["l2"].get<double>() == doctest::Approx(r.l2).epsilon(1e-12));
}
