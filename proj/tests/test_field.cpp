#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <cstring>

#include "doctest.h"
#include "nsk/errors.hpp"
#include "nsk/fft.hpp"
#include "nsk/field.hpp"
#include "nsk/field_io.hpp"
#include "nsk/kernels.hpp"
#include "oracles.hpp"

using namespace nsk;
using namespace nsk_test;

TEST_CASE("grid layout: cell centers and validation") {
    GridSpec g = square_grid(8, 1.0);
    CHECK(g.h() == doctest::Approx(0.25).epsilon(1e-15));
    Point p = g.cell_center(0, 0);
    CHECK(p.x == doctest::Approx(-0.875).epsilon(1e-15));
    CHECK(p.y == doctest::Approx(-0.875).epsilon(1e-15));
    Point q = g.cell_center(7, 7);
    CHECK(q.x == doctest::Approx(0.875).epsilon(1e-15));

    GridSpec bad = g;
    bad.nx = 4;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    GridSpec skew = g;
    skew.height = 3.0;  // non-square cells
    CHECK_THROWS_AS(skew.validate(), UsageError);
}

TEST_CASE("gradient and laplacian are exact on quadratics (interior and one-sided rows)") {
    GridSpec g = square_grid(64, 1.0);
    GridField f = scalar_field(
        g, [](Point p) { return 2 * p.x * p.x + 3 * p.x * p.y - p.y * p.y + p.x - 2 * p.y + 1; });
    FieldGradient d = gradient(f);
    GridField lap = laplacian(f);
    double e1 = 0, e2 = 0, e3 = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            e1 = std::max(e1, std::abs(d.dx.at(i, j, 0) - (4 * p.x + 3 * p.y + 1)));
            e2 = std::max(e2, std::abs(d.dy.at(i, j, 0) - (3 * p.x - 2 * p.y - 2)));
            e3 = std::max(e3, std::abs(lap.at(i, j, 0) - 2.0));
        }
    CHECK(e1 <= 1e-10);
    CHECK(e2 <= 1e-10);
    CHECK(e3 <= 1e-8);
}

TEST_CASE("wirtinger pair: dz(z) = 2, dzbar(z) = 0 and the conjugate convention") {
    GridSpec g = square_grid(32, 1.0);
    GridField z = complex_field(g, [](cplx w) { return w; });
    GridField zb = complex_field(g, [](cplx w) { return std::conj(w); });
    WirtingerPair dz = dz_dzbar(z);
    WirtingerPair dzb = dz_dzbar(zb);
    double e = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            e = std::max(e, std::abs(dz.dz.cat(i, j, 0) - cplx(2.0, 0.0)));
            e = std::max(e, std::abs(dz.dzbar.cat(i, j, 0)));
            e = std::max(e, std::abs(dzb.dz.cat(i, j, 0)));
            e = std::max(e, std::abs(dzb.dzbar.cat(i, j, 0) - cplx(2.0, 0.0)));
        }
    CHECK(e <= 1e-9);
}

TEST_CASE("energy density and tension of an equator geodesic") {
    GridSpec g = square_grid(128, 1.0);
    const double a = 0.8;
    ManifoldMap u = geodesic_map(g, a);
    GridField e = energy_density(u);
    double sup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) sup = std::max(sup, std::abs(e.at(i, j, 0) - a * a));
    CHECK(sup <= 1e-3);
    double total = integrate_cells(g, Region::all(), [&](int i, int j, Point) {
        return e.at(i, j, 0);
    });
    CHECK(total == doctest::Approx(a * a * 4.0).epsilon(1e-2));

    TensionField t = tension_field(u);
    double sup_tau = 0, sup_tan = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            sup_tau = std::max(sup_tau, t.tau.magnitude(i, j));
            sup_tan = std::max(sup_tan, std::abs(t.tangency.at(i, j, 0)));
        }
    CHECK(sup_tau <= 1e-2);
    CHECK(sup_tan <= 1e-2);
}

TEST_CASE("hessian magnitude on a quadratic (cross term twice)") {
    GridSpec g = square_grid(32, 1.0);
    GridField f = scalar_field(g, [](Point p) { return 0.5 * p.x * p.x + p.x * p.y; });
    GridField h = hessian_magnitude(f);
    // fxx = 1, fxy = 1, fyy = 0 -> sqrt(1 + 2*1 + 0)
    double want = std::sqrt(3.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            CHECK(h.at(i, j, 0) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("project_to_sphere normalizes and rejects degenerate input") {
    GridSpec g = square_grid(16, 1.0);
    GridField v = GridField::vector(g, 3);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            v.at(i, j, 0) = 2.0;
            v.at(i, j, 1) = 1.0;
        }
    ManifoldMap u = project_to_sphere(v);
    double n = std::sqrt(5.0);
    CHECK(u.field().at(3, 3, 0) == doctest::Approx(2.0 / n).epsilon(1e-14));
    CHECK(u.field().magnitude(5, 7) == doctest::Approx(1.0).epsilon(1e-14));

    GridField small = GridField::vector(g, 3);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) small.at(i, j, 2) = 0.05;
    CHECK_THROWS_AS(project_to_sphere(small, 0.1), StabilityError);

    GridField off = v;  // still the raw (2,1,0) field: nowhere unit
    CHECK_THROWS_AS(ManifoldMap{off}, StabilityError);
}

TEST_CASE("crop_ball preserves cell centers bitwise") {
    GridSpec g = square_grid(64, 1.0);
    GridField f = scalar_field(g, [](Point p) { return std::sin(3 * p.x) + p.y * p.y; });
    GridField c = crop_ball(f, {0.3, -0.2}, 0.35, 3);
    const GridSpec& cg = c.spec();
    CHECK(cg.h() == doctest::Approx(g.h()).epsilon(1e-14));
    for (int j = 0; j < cg.ny; ++j)
        for (int i = 0; i < cg.nx; ++i) {
            Point p = cg.cell_center(i, j);
            int si = (int)std::lround((p.x - g.origin.x) / g.h() - 0.5);
            int sj = (int)std::lround((p.y - g.origin.y) / g.h() - 0.5);
            CHECK(c.at(i, j, 0) == f.at(si, sj, 0));
        }
    // The ball (plus margin) is inside the crop.
    CHECK(Region::disk({0.3, -0.2}, 0.35).admits_ball({0.3, -0.2}, 0.35, cg));
    CHECK_THROWS_AS(crop(f, -1, 0, 16, 16), UsageError);
}

TEST_CASE("box_average: exact on linear fields and mass preserving") {
    GridSpec g = square_grid(64, 1.0);
    GridField f = scalar_field(g, [](Point p) { return p.x + 2 * p.y; });
    GridField b = box_average(f, 2);
    CHECK(b.spec().nx == 32);
    CHECK(b.spec().h() == doctest::Approx(2 * g.h()).epsilon(1e-14));
    double sup = 0;
    for (int j = 0; j < b.spec().ny; ++j)
        for (int i = 0; i < b.spec().nx; ++i) {
            Point p = b.spec().cell_center(i, j);
            sup = std::max(sup, std::abs(b.at(i, j, 0) - (p.x + 2 * p.y)));
        }
    CHECK(sup <= 1e-12);

    // Mass over the trimmed block is preserved exactly (k = 3 trims 64 -> 63).
    GridField b3 = box_average(f, 3);
    CHECK(b3.spec().nx == 21);
    double mass_small = 0, mass_big = 0;
    double hb = b3.spec().h();
    for (int j = 0; j < b3.spec().ny; ++j)
        for (int i = 0; i < b3.spec().nx; ++i) mass_small += hb * hb * b3.at(i, j, 0);
    for (int j = 0; j < 63; ++j)
        for (int i = 0; i < 63; ++i) mass_big += g.h() * g.h() * f.at(i, j, 0);
    CHECK(mass_small == doctest::Approx(mass_big).epsilon(1e-12));
    CHECK_THROWS_AS(box_average(f, 0), UsageError);
    CHECK_THROWS_AS(box_average(f, 11), UsageError);  // 64/11 = 5 cells < 8
}

TEST_CASE("resample: identity layout reproduces the field") {
    GridSpec g = square_grid(32, 1.0);
    GridField f = scalar_field(g, [](Point p) { return std::cos(2 * p.x) * p.y; });
    GridField r = resample(f, g);
    CHECK(sup_diff(f, r) <= 1e-12);
}

TEST_CASE("bilinear value(): exact on linear fields, clamps outside the hull") {
    GridSpec g = square_grid(16, 1.0);
    GridField f = scalar_field(g, [](Point p) { return 3 * p.x - p.y + 0.5; });
    double out = 0;
    f.value({0.123, -0.456}, &out);
    CHECK(out == doctest::Approx(3 * 0.123 + 0.456 + 0.5).epsilon(1e-12));
    double edge = 0, far_val = 0;
    f.value({2.0, 0.0}, &far_val);  // clamped to the hull edge
    f.value({1.0 - 0.5 * g.h(), 0.0}, &edge);
    CHECK(far_val == doctest::Approx(edge).epsilon(1e-12));
}

TEST_CASE("integrate_cells and region_area count disk cells") {
    GridSpec g = square_grid(256, 1.0);
    Region disk = Region::disk({0.0, 0.0}, 0.8);
    double area = region_area(g, disk);
    CHECK(area == doctest::Approx(kPi * 0.64).epsilon(0.025));
    double integ = integrate_cells(g, disk, [](int, int, Point) { return 1.0; });
    CHECK(integ == doctest::Approx(area).epsilon(1e-12));
}

TEST_CASE("NSK1 round trip is bitwise; CSV round trip preserves doubles") {
    GridSpec g = square_grid(16, 1.5);
    GridField f = GridField::complex_vector(g, 2);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            f.cset(i, j, 0, cplx(std::sin(p.x), p.y * p.y));
            f.cset(i, j, 1, cplx(1.0 / (2.0 + p.x), std::exp(p.y)));
        }
    write_field("tmp_roundtrip.nsk", f);
    GridField r = read_field("tmp_roundtrip.nsk");
    REQUIRE(r.spec().same_layout(f.spec()));
    REQUIRE(r.kind() == f.kind());
    REQUIRE(r.ncomp() == f.ncomp());
    CHECK(std::memcmp(r.data(), f.data(), f.size() * sizeof(double)) == 0);

    GridField s = scalar_field(g, [](Point p) { return std::atan2(p.y, p.x + 3.0); });
    write_field("tmp_roundtrip.csv", s);
    GridField rs = read_field("tmp_roundtrip.csv");
    REQUIRE(rs.spec().same_layout(s.spec()));
    CHECK(std::memcmp(rs.data(), s.data(), s.size() * sizeof(double)) == 0);

    CHECK_THROWS_AS(read_field("no_such_file_here.nsk"), IoError);
    std::remove("tmp_roundtrip.nsk");
    std::remove("tmp_roundtrip.csv");
}

TEST_CASE("periodic stencils wrap") {
    GridSpec g = square_grid(128, 1.0);
    GridField f = scalar_field(g, [](Point p) { return std::sin(kPi * p.x); });
    FieldGradient d = gradient(f, BoundaryMode::Periodic);
    double sup = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.cell_center(i, j);
            sup = std::max(sup, std::abs(d.dx.at(i, j, 0) - kPi * std::cos(kPi * p.x)));
        }
    // Centered-difference truncation for sin(pi x): (h^2/6) pi^3, plus 5% slack.
    double bound = g.h() * g.h() / 6.0 * kPi * kPi * kPi * 1.05;
    CHECK(sup <= bound);
}

TEST_CASE("parallel kernels agree bitwise with the serial reference") {
    GridSpec g = square_grid(96, 1.0);
    ManifoldMap u = polar_cap(g, 0.9);
    const GridField& uf = u.field();

    auto expect_same = [](const GridField& a, const GridField& b) {
        REQUIRE(a.size() == b.size());
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    };

    GridField dx1 = GridField::vector(g, 3), dy1 = GridField::vector(g, 3);
    GridField dx2 = GridField::vector(g, 3), dy2 = GridField::vector(g, 3);
    kernels::gradient(uf, BoundaryMode::OneSided, dx1, dy1);
    ref::gradient(uf, BoundaryMode::OneSided, dx2, dy2);
    expect_same(dx1, dx2);
    expect_same(dy1, dy2);

    GridField l1 = GridField::vector(g, 3), l2f = GridField::vector(g, 3);
    kernels::laplacian(uf, BoundaryMode::OneSided, l1);
    ref::laplacian(uf, BoundaryMode::OneSided, l2f);
    expect_same(l1, l2f);

    GridField h1 = GridField::scalar(g), h2 = GridField::scalar(g);
    kernels::hessian_magnitude(uf, BoundaryMode::OneSided, h1);
    ref::hessian_magnitude(uf, BoundaryMode::OneSided, h2);
    expect_same(h1, h2);

    GridField t1 = GridField::vector(g, 3), tg1 = GridField::scalar(g);
    GridField t2 = GridField::vector(g, 3), tg2 = GridField::scalar(g);
    kernels::tension(uf, BoundaryMode::OneSided, t1, tg1);
    ref::tension(uf, BoundaryMode::OneSided, t2, tg2);
    expect_same(t1, t2);
    expect_same(tg1, tg2);

    GridField e1 = GridField::scalar(g), e2 = GridField::scalar(g);
    kernels::energy_density(uf, BoundaryMode::OneSided, e1);
    ref::energy_density(uf, BoundaryMode::OneSided, e2);
    expect_same(e1, e2);

    GridField p1 = GridField::vector(g, 3), p2 = GridField::vector(g, 3);
    kernels::project_sphere(uf, 0.1, p1);
    ref::project_sphere(uf, 0.1, p2);
    expect_same(p1, p2);

    Region disk = Region::disk({0.1, -0.2}, 0.6);
    double i1 = kernels::integrate_pow(e1, disk, 1.0);
    double i2 = ref::integrate_pow(e2, disk, 1.0);
    CHECK(i1 == i2);
}

TEST_CASE("disk scan matches brute-force ball sums at admissible centers") {
    GridSpec g = square_grid(48, 1.0);
    GridField f = scalar_field(g, [](Point p) { return 1.0 + std::sin(2 * p.x) * std::cos(p.y); });
    const double r = 7.3 * g.h();  // r/h stays clear of lattice-distance ties
    DiskScan scan(f);
    GridField s = scan.sums(r);
    Region all = Region::all();
    int checked = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point c = g.cell_center(i, j);
            if (!all.admits_ball(c, r, g)) continue;
            double brute = 0;
            for (int l = 0; l < g.ny; ++l)
                for (int k = 0; k < g.nx; ++k)
                    if (dist(g.cell_center(k, l), c) <= r) brute += f.at(k, l, 0);
            CHECK(s.at(i, j, 0) == doctest::Approx(brute).epsilon(1e-9));
            ++checked;
        }
    CHECK(checked > 100);
}
