#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "nsk/errors.hpp"
#include "nsk/fft.hpp"
#include "nsk/field.hpp"
#include "nsk/gauge.hpp"
#include "oracles.hpp"

using namespace nsk;
using namespace nsk_test;

TEST_CASE("cauchy transform maps the disk indicator to zbar inside, 1/z outside") {
    GridSpec g = square_grid(128, 2.0);
    GridField chi = GridField::complex_scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            chi.cset(i, j, 0, cplx(std::hypot(p.x, p.y) <= 1.0 ? 1.0 : 0.0, 0.0));
        }
    GridField w = cauchy_transform(chi);
    const double h = g.h();
    double sup_in = 0, sup_out = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            cplx z(p.x, p.y);
            double rho = std::abs(z);
            if (rho <= 1.0 - 4 * h)
                sup_in = std::max(sup_in, std::abs(w.cat(i, j, 0) - std::conj(z)));
            else if (rho >= 1.2 && rho <= 1.7)
                sup_out = std::max(sup_out, std::abs(w.cat(i, j, 0) - 1.0 / z));
        }
    CHECK(sup_in <= 3 * h);
    CHECK(sup_out <= 4 * h);
}

TEST_CASE("cauchy transform inverts dzbar on a smooth bump") {
    GridSpec g = square_grid(128, 2.0);
    GridField f = GridField::complex_scalar(g);
    GridField bump = smooth_bump(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.cset(i, j, 0, cplx(bump.at(i, j, 0), 0.0));
    GridField w = cauchy_transform(f);
    GridField back = dz_dzbar(w).dzbar;
    double err = 0, mass = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            err += std::abs(0.5 * back.cat(i, j, 0) - f.cat(i, j, 0));
            mass += std::abs(f.cat(i, j, 0));
        }
    CHECK(err / mass <= 0.05);
}

TEST_CASE("equator geodesic: the whole gauge pipeline is exact") {
    GridSpec g = square_grid(96, 1.0);
    const double a = 0.8;
    ManifoldMap u = geodesic_map(g, a);
    GaugeData d = dbar_decompose(u);

    // The frame locks onto the z pole; e1 is constant so omega vanishes
    // identically and B stays at the identity.
    CHECK(d.frame.pole_axis == 2);
    CHECK(d.kappa <= 1e-12);
    CHECK(d.b.b_dist <= 1e-12);
    CHECK(d.b.bt_b_drift <= 1e-12);

    // Frame orthonormality and tangency at the nodes.
    double sup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double e1u = 0, e12 = 0, n1 = 0;
            for (int c = 0; c < 3; ++c) {
                e1u += d.frame.e1.at(i, j, c) * u.field().at(i, j, c);
                e12 += d.frame.e1.at(i, j, c) * d.frame.e2.at(i, j, c);
                n1 += d.frame.e1.at(i, j, c) * d.frame.e1.at(i, j, c);
            }
            sup = std::max({sup, std::abs(e1u), std::abs(e12), std::abs(n1 - 1.0)});
        }
    CHECK(sup <= 1e-9);

    // |G| = |grad_z u| = a in any orthonormal tangent frame.
    double gerr = 0;
    for (int j = 2; j < g.ny - 2; ++j)
        for (int i = 2; i < g.nx - 2; ++i)
            gerr = std::max(gerr, std::abs(d.G.magnitude(i, j) - a));
    CHECK(gerr <= 1e-3);

    // Tension is pure discretization noise, so G1 is tiny and G2 is
    // holomorphic to the same accuracy.
    double g1sup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) g1sup = std::max(g1sup, d.G1.magnitude(i, j));
    CHECK(g1sup <= 5e-3);
    CHECK(d.g2_dbar_residual <= 5e-2);
    CHECK(d.frame.solver_residual <= d.frame.solver_tol);
}

TEST_CASE("polar cap: contraction ratios and multiplier bounds") {
    GridSpec g = square_grid(96, 1.0);
    ManifoldMap u = polar_cap(g, 0.9);
    GaugeData d = dbar_decompose(u);
    CHECK(d.kappa < 0.9);
    CHECK(d.b.b_dist <= 0.5);
    CHECK(d.b.bt_b_drift <= 0.25);
    CHECK(d.b.final_delta <= 1e-9);
    // Successive iterate gaps contract at least at rate kappa/2 (+ slack),
    // ignoring steps already at the convergence floor.
    for (size_t k = 1; k < d.b.trace.size(); ++k) {
        if (d.b.trace[k - 1] <= 1e-8) break;
        CHECK(d.b.trace[k] <= (0.5 * d.kappa + 0.1) * d.b.trace[k - 1]);
    }
    // G2 = B^t G - G1 by construction.
    double iderr = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            for (int c = 0; c < 2; ++c) {
                // (B^t G)_c = sum_a B_{a c} G_a; channels row-major (11,12,21,22)
                cplx bt_g = d.b.B.cat(i, j, c) * d.G.cat(i, j, 0) +
                            d.b.B.cat(i, j, 2 + c) * d.G.cat(i, j, 1);
                cplx lhs = d.G1.cat(i, j, c) + d.G2.cat(i, j, c);
                iderr = std::max(iderr, std::abs(lhs - bt_g));
            }
    CHECK(iderr <= 1e-10);
}

TEST_CASE("sphere-covering maps reject every pole") {
    // Identity-scale bubble on [-1,1]^2: cell centers land within 0.023 of
    // all six coordinate poles (south at z ~ 0, x/y poles at z ~ +-1, +-i),
    // inside the 0.05 clearance, so no admissible frame reference exists.
    GridSpec g = square_grid(64, 1.0);
    BubbleSpec b = deg1_bubble(1.0);
    ManifoldMap u = rational_bubble(b, g);
    CHECK_THROWS_AS(coulomb_frame(u), GaugeError);
}

TEST_CASE("t_operator is linear and vanishes on zero") {
    GridSpec g = square_grid(48, 1.0);
    GridField omega = GridField::complex_scalar(g);
    GridField X = GridField::complex_vector(g, 4);
    GridField Y = GridField::complex_vector(g, 4);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            omega.cset(i, j, 0, cplx(std::sin(p.x), std::cos(2 * p.y)));
            for (int c = 0; c < 4; ++c) {
                X.cset(i, j, c, cplx(p.x + c, p.y - c));
                Y.cset(i, j, c, cplx(std::cos(p.y) * (c + 1), std::sin(p.x)));
            }
        }
    GridField tx = t_operator(omega, X);
    GridField ty = t_operator(omega, Y);
    GridField XY = X;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            for (int c = 0; c < 4; ++c) XY.cset(i, j, c, X.cat(i, j, c) + Y.cat(i, j, c));
    GridField txy = t_operator(omega, XY);
    double sup = 0, scale = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            for (int c = 0; c < 4; ++c) {
                sup = std::max(sup,
                               std::abs(txy.cat(i, j, c) - tx.cat(i, j, c) - ty.cat(i, j, c)));
                scale = std::max(scale, std::abs(txy.cat(i, j, c)));
            }
    CHECK(sup <= 1e-10 * std::max(1.0, scale));

    GridField zero = GridField::complex_vector(g, 4);
    GridField tz = t_operator(omega, zero);
    double zsup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) zsup = std::max(zsup, tz.magnitude(i, j));
    CHECK(zsup == 0.0);
}

TEST_CASE("tau override: zero tension forces G1 = 0") {
    GridSpec g = square_grid(64, 1.0);
    ManifoldMap u = polar_cap(g, 0.5);
    GridField zero_tau = GridField::vector(g, 3);
    GaugeData d = dbar_decompose(u, &zero_tau);
    double g1sup = 0, tsup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            g1sup = std::max(g1sup, d.G1.magnitude(i, j));
            tsup = std::max(tsup, d.T.magnitude(i, j));
        }
    CHECK(tsup == 0.0);
    CHECK(g1sup <= 1e-14);
}

TEST_CASE("riesz potential: singular cell average and far field") {
    GridSpec g = square_grid(64, 1.0);
    GridField f = GridField::scalar(g);
    const int i0 = 32, j0 = 32;  // center at (h/2, h/2)
    f.at(i0, j0, 0) = 1.0;
    GridField r = riesz_potential(f);
    const double h = g.h();
    CHECK(r.at(i0, j0, 0) ==
          doctest::Approx(4.0 * std::log(1.0 + std::sqrt(2.0)) * h).epsilon(1e-10));
    Point src = g.cell_center(i0, j0);
    Point far = g.cell_center(i0 + 16, j0 + 8);
    CHECK(r.at(i0 + 16, j0 + 8, 0) ==
          doctest::Approx(h * h / dist(src, far)).epsilon(0.02));
}
