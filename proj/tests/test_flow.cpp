#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "nsk/errors.hpp"
#include "nsk/field.hpp"
#include "nsk/flow.hpp"
#include "oracles.hpp"

using namespace nsk;
using namespace nsk_test;

TEST_CASE("polynomial evaluation, reversal, resultant") {
    Polynomial p;  // 1 + 2z
    p.c = {cplx(1, 0), cplx(2, 0)};
    CHECK(p.degree() == 1);
    CHECK(std::abs(p.eval(cplx(2, 0)) - cplx(5, 0)) <= 1e-15);
    // w^d p(1/w): 0.5 * (1 + 2/0.5) = 2.5
    CHECK(std::abs(p.eval_reversed(cplx(0.5, 0), 1) - cplx(2.5, 0)) <= 1e-15);
    // padded to degree 3: 2^3 * (1 + 2/2) = 16
    CHECK(std::abs(p.eval_reversed(cplx(2, 0), 3) - cplx(16, 0)) <= 1e-12);

    Polynomial z, one;
    z.c = {cplx(0, 0), cplx(1, 0)};
    one.c = {cplx(1, 0)};
    CHECK(std::abs(resultant(z, one)) > 1e-10);
    CHECK(std::abs(resultant(z, z)) <= 1e-12);  // shared root
}

TEST_CASE("bubble spec validation rejects degenerate data") {
    Polynomial z, one, z2;
    z.c = {cplx(0, 0), cplx(1, 0)};
    one.c = {cplx(1, 0)};
    z2.c = {cplx(0, 0), cplx(0, 0), cplx(1, 0)};

    BubbleSpec deg0;
    deg0.P = one;
    deg0.Q = one;
    CHECK_THROWS_AS(deg0.validate(), UsageError);

    BubbleSpec shared;  // z^2 / z: common root at 0
    shared.P = z2;
    shared.Q = z;
    CHECK_THROWS_AS(shared.validate(), UsageError);

    BubbleSpec flat;
    flat.P = z;
    flat.Q = one;
    flat.scale = 0.0;
    CHECK_THROWS_AS(flat.validate(), UsageError);
}

TEST_CASE("bubble lift: chart seam continuity, landmarks, energy") {
    BubbleSpec id = deg1_bubble(1.0);       // phi = z
    BubbleSpec inv;                         // phi = 1/z
    inv.P.c = {cplx(1, 0)};
    inv.Q.c = {cplx(0, 0), cplx(1, 0)};
    BubbleSpec sq = deg2_bubble(1.0);       // phi = z^2

    for (const BubbleSpec* b : {&id, &inv, &sq}) {
        for (double t : {0.3, 1.9, 3.7, 5.2}) {
            cplx lo = std::polar(1.0 - 1e-9, t), hi = std::polar(1.0 + 1e-9, t);
            double a[3], c[3];
            bubble_value(*b, lo, a);
            bubble_value(*b, hi, c);
            double d = std::hypot(a[0] - c[0], std::hypot(a[1] - c[1], a[2] - c[2]));
            CHECK(d <= 1e-8);
        }
        // Finite and exactly unit at a pole-prone point.
        double v[3];
        bubble_value(*b, cplx(0.0, 0.0), v);
        CHECK(std::abs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0) <= 1e-12);
    }

    double v[3];
    bubble_value(id, cplx(1.0, 0.0), v);  // phi = 1 -> equator point (1,0,0)
    CHECK(std::abs(v[0] - 1.0) <= 1e-14);
    CHECK(std::abs(v[1]) <= 1e-14);
    CHECK(std::abs(v[2]) <= 1e-14);

    bubble_infinity(id, v);  // phi -> inf -> north pole
    CHECK(std::abs(v[2] - 1.0) <= 1e-14);
    bubble_infinity(inv, v);  // phi -> 0 -> south pole
    CHECK(std::abs(v[2] + 1.0) <= 1e-14);

    Polynomial z3;
    z3.c = {cplx(0, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0)};
    BubbleSpec cu;
    cu.P = z3;
    cu.Q.c = {cplx(1, 0)};
    CHECK(bubble_energy(id) == doctest::Approx(8.0 * kPi).epsilon(1e-14));
    CHECK(bubble_energy(sq) == doctest::Approx(16.0 * kPi).epsilon(1e-14));
    CHECK(bubble_energy(cu) == doctest::Approx(24.0 * kPi).epsilon(1e-14));
}

TEST_CASE("sampled bubble: unit norm and most of 8 pi on a wide window") {
    GridSpec g = square_grid(512, 4.0);
    ManifoldMap u = rational_bubble(deg1_bubble(1.0), g);
    double worst = 0;
    const GridField& f = u.field();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s = f.at(i, j, 0) * f.at(i, j, 0) + f.at(i, j, 1) * f.at(i, j, 1) +
                       f.at(i, j, 2) * f.at(i, j, 2);
            worst = std::max(worst, std::abs(s - 1.0));
        }
    CHECK(worst <= 1e-12);

    GridField e = energy_density(u);
    double E = integrate_cells(g, Region::all(),
                               [&](int i, int j, Point) { return e.at(i, j, 0); });
    // Ball of radius 4 carries 16/17 of 8 pi; the square corners add a bit.
    CHECK(E >= 0.93 * 8.0 * kPi);
    CHECK(E <= 0.98 * 8.0 * kPi);
}

TEST_CASE("base maps: constants and equator geodesics") {
    GridSpec g = square_grid(48, 1.0);
    ManifoldMap c = constant_map(g, 2, -1.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            CHECK(c.field().at(i, j, 0) == 0.0);
            CHECK(c.field().at(i, j, 1) == 0.0);
            CHECK(c.field().at(i, j, 2) == -1.0);
        }
    const double a = 0.7;
    ManifoldMap geo = geodesic_map(g, a);
    GridField e = energy_density(geo);
    double E = integrate_cells(g, Region::all(),
                               [&](int i, int j, Point) { return e.at(i, j, 0); });
    CHECK(E == doctest::Approx(4.0 * a * a).epsilon(0.01));
}

TEST_CASE("glued member: bookkeeping and near-quantized energy") {
    GridSpec g = square_grid(256, 1.0);
    ManifoldMap base = constant_map(g, 2, 1.0);
    GluedMember m = glue_member(base, {deg1_bubble(0.0625)}, 4);
    CHECK(m.n == 4);
    REQUIRE(m.centers.size() == 1);
    CHECK(m.centers[0].x == 0.0);
    CHECK(m.scales[0] == 0.0625);
    CHECK(std::isinf(m.separation));
    CHECK(!m.cutoff_shrunk);
    CHECK(m.identity_expected);
    CHECK(m.tau.ncomp() == 3);
    // The cutoff band starts at sqrt(s)/2, where the bubble still keeps the
    // tail fraction s^2/(s^2 + s/4) ~ 4s ~ 25% of 8 pi; the band interpolation
    // trades that for comparable energy, so the deviation is O(4s), not O(h).
    CHECK(std::abs(m.energy - 8.0 * kPi) <= 0.3 * 8.0 * kPi);
    CHECK(m.energy > 8.0 * kPi * 0.95);
}

TEST_CASE("scale separation quantity") {
    CHECK(std::isinf(scale_separation({{0.0, 0.0}}, {0.1})));
    // r/r + r/r + d^2/r^2 = 1 + 1 + 25
    CHECK(scale_separation({{0.0, 0.0}, {0.5, 0.0}}, {0.1, 0.1}) ==
          doctest::Approx(27.0).epsilon(1e-12));
    CHECK_THROWS_AS(scale_separation({{0.0, 0.0}}, {0.1, 0.2}), UsageError);
}

TEST_CASE("sequence spec: grids, bases, glued limit") {
    SequenceSpec s;
    s.base_nx = 32;
    s.nx_cap = 4096;
    s.domain_half_width = 1.0;
    CHECK(s.member_grid(3).nx == 256);
    CHECK(s.member_grid(8).nx == 4096);  // 32 << 8 hits the cap
    GridSpec g3 = s.member_grid(3);
    CHECK(g3.width == doctest::Approx(2.0).epsilon(1e-14));

    s.base = "constant:z-";
    ManifoldMap down = s.make_base(g3);
    CHECK(down.field().at(0, 0, 2) == -1.0);
    s.base = "geodesic:0.4";
    ManifoldMap geo = s.make_base(g3);
    CHECK(geo.field().at(0, 0, 2) == 0.0);
    s.base = "constant:";
    CHECK_THROWS_AS(s.make_base(g3), UsageError);
    s.base = "constant:w";
    CHECK_THROWS_AS(s.make_base(g3), UsageError);
    s.base = "wavy:1";
    CHECK_THROWS_AS(s.make_base(g3), UsageError);

    s.base = "constant:z";
    s.kind = "glued";
    ManifoldMap lim = sequence_limit(s, g3);
    CHECK(sup_diff(lim.field(), s.make_base(g3).field()) == 0.0);

    s.bubbles = {deg1_bubble(1.0)};
    CHECK_THROWS_AS(glued_sequence_member(s, 99), UsageError);
}

TEST_CASE("parker control: spiral limit, seam member, tension scale") {
    SequenceSpec s = parker_counterexample_sequence();
    CHECK(s.kind == "parker");
    CHECK(!s.identity_expected);
    CHECK(s.first == 3);
    CHECK(s.last == 8);

    GridSpec g = s.member_grid(3);
    REQUIRE(g.nx == 256);
    ManifoldMap lim = sequence_limit(s, g);
    // theta(rho) = alpha ln(rho/eta) inside the neck.
    const double rho = 0.3;
    const double theta = s.spiral_alpha * std::log(rho / s.neck_eta);
    double got[3];
    lim.field().value({rho, 0.0}, got);
    CHECK(std::abs(got[0] - std::sin(theta)) <= 5e-3);
    CHECK(std::abs(got[1]) <= 1e-12);
    CHECK(std::abs(got[2] - std::cos(theta)) <= 5e-3);

    GluedMember m3 = parker_member(s, 3);
    CHECK(!m3.identity_expected);
    const GridField& mf = m3.u.field();
    // Outside the seam band (rho >= 2 K r_3 = 0.5) the member IS the spiral.
    int compared = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            double r = std::hypot(p.x, p.y);
            if (r <= 0.55 || r >= 0.58) continue;
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(mf.at(i, j, c) - lim.field().at(i, j, c)) <= 1e-12);
            ++compared;
        }
    CHECK(compared > 100);
    // Unit norm at every node.
    double worst = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            worst = std::max(worst, std::abs(mf.magnitude(i, j) - 1.0));
    CHECK(worst <= 1e-12);

    auto tau_l1 = [](const GluedMember& m) {
        const GridSpec& gs = m.u.spec();
        return integrate_cells(gs, Region::all(),
                               [&](int i, int j, Point) { return m.tau.magnitude(i, j); });
    };
    GluedMember m4 = parker_member(s, 4);
    double ratio = tau_l1(m4) / tau_l1(m3);
    CHECK(ratio >= 1.0 / 2.01);
    CHECK(ratio <= 2.01);
}

TEST_CASE("heat flow dissipates energy and respects the step gate") {
    GridSpec g = square_grid(64, 1.0);
    ManifoldMap u0 = polar_cap(g, 0.9);
    FlowResult r = heat_flow(u0, 60, 0.15, 10, BoundaryMode::OneSided);
    CHECK(r.dt == doctest::Approx(0.15 * g.h() * g.h()).epsilon(1e-14));
    CHECK(r.steps == 60);
    REQUIRE(r.trajectory.size() >= 3);
    CHECK(r.trajectory.front().step == 0);
    CHECK(r.trajectory.back().step == 60);
    for (size_t k = 1; k < r.trajectory.size(); ++k)
        CHECK(r.trajectory[k].energy <= r.trajectory[k - 1].energy * (1.0 + 1e-9));
    CHECK(r.trajectory.back().energy < r.trajectory.front().energy);

    CHECK_THROWS_AS(heat_flow(u0, 5, 0.25, 1, BoundaryMode::OneSided), StabilityError);
    CHECK_THROWS_AS(heat_flow(u0, 5, 0.0, 1, BoundaryMode::OneSided), UsageError);
    CHECK_THROWS_AS(heat_flow(u0, 5, -1.0, 1, BoundaryMode::OneSided), UsageError);
}

TEST_CASE("heat flow leaves harmonic and constant data in place") {
    GridSpec g = square_grid(64, 1.0);
    ManifoldMap geo = geodesic_map(g, kPi);
    FlowResult r = heat_flow(geo, 25, 0.15, 5, BoundaryMode::OneSided);
    CHECK(sup_diff(r.u.field(), geo.field()) <= 1e-3);

    ManifoldMap c = constant_map(g, 1, 1.0);
    FlowResult rc = heat_flow(c, 10, 0.15, 5, BoundaryMode::OneSided);
    CHECK(std::memcmp(rc.u.field().data(), c.field().data(),
                      sizeof(double) * size_t(g.nx) * g.ny * 3) == 0);
    CHECK(rc.trajectory.back().energy <= 1e-20);
    CHECK(rc.trajectory.back().tau_l1 <= 1e-12);
}

TEST_CASE("trajectory stride bookkeeping and CSV header") {
    GridSpec g = square_grid(32, 1.0);
    ManifoldMap u0 = polar_cap(g, 0.5);
    FlowResult r = heat_flow(u0, 7, 0.1, 3, BoundaryMode::OneSided);
    REQUIRE(r.trajectory.size() == 4);
    CHECK(r.trajectory[0].step == 0);
    CHECK(r.trajectory[1].step == 3);
    CHECK(r.trajectory[2].step == 6);
    CHECK(r.trajectory[3].step == 7);
    CHECK(r.trajectory[1].time == doctest::Approx(3.0 * r.dt).epsilon(1e-14));

    std::string csv = trajectory_csv(r);
    CHECK(csv.rfind("step,time,energy,tau_l1,tau_llogl,tau_morrey\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}
