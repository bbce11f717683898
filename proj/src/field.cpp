#include "nsk/field.hpp"

#include <cmath>

#include "nsk/kernels.hpp"
#include "nsk/parallel.hpp"

namespace nsk {

GridField::GridField(GridSpec spec, FieldKind kind, int ncomp)
    : spec_(spec), kind_(kind), ncomp_(ncomp) {
    spec_.validate();
    if (ncomp_ < 1) throw UsageError("field: component count must be positive");
    if ((kind == FieldKind::Scalar || kind == FieldKind::Complex) && ncomp != 1)
        throw UsageError("field: scalar/complex fields have one channel");
    data_.assign(static_cast<size_t>(spec_.nx) * spec_.ny * rcomp(), 0.0);
}

double GridField::magnitude(int i, int j) const {
    const double* p = data_.data() + idx(i, j);
    double s = 0.0;
    for (int c = 0; c < rcomp(); ++c) s += p[c] * p[c];
    return std::sqrt(s);
}

void GridField::value(Point p, double* out) const {
    double h = spec_.h();
    double fx = (p.x - spec_.origin.x) / h - 0.5;
    double fy = (p.y - spec_.origin.y) / h - 0.5;
    fx = std::min(std::max(fx, 0.0), static_cast<double>(spec_.nx - 1));
    fy = std::min(std::max(fy, 0.0), static_cast<double>(spec_.ny - 1));
    int i0 = std::min(static_cast<int>(fx), spec_.nx - 2);
    int j0 = std::min(static_cast<int>(fy), spec_.ny - 2);
    if (spec_.nx < 2 || spec_.ny < 2) throw UsageError("field: interpolation needs a 2x2 grid");
    double ax = fx - i0, ay = fy - j0;
    const double* q00 = data_.data() + idx(i0, j0);
    const double* q10 = data_.data() + idx(i0 + 1, j0);
    const double* q01 = data_.data() + idx(i0, j0 + 1);
    const double* q11 = data_.data() + idx(i0 + 1, j0 + 1);
    for (int c = 0; c < rcomp(); ++c) {
        out[c] = (1 - ax) * (1 - ay) * q00[c] + ax * (1 - ay) * q10[c] +
                 (1 - ax) * ay * q01[c] + ax * ay * q11[c];
    }
}

cplx GridField::cvalue(Point p, int c) const {
    if (!is_complex()) throw UsageError("field: cvalue on a real field");
    std::vector<double> buf(static_cast<size_t>(rcomp()));
    value(p, buf.data());
    return {buf[2 * static_cast<size_t>(c)], buf[2 * static_cast<size_t>(c) + 1]};
}

bool GridField::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void GridField::require_finite(const char* who) const {
    if (!all_finite()) throw StabilityError(std::string(who) + ": non-finite values in field");
}

ManifoldMap::ManifoldMap(GridField f, double unit_tol) : f_(std::move(f)) {
    if (f_.kind() != FieldKind::Vector || f_.ncomp() < 2)
        throw UsageError("map: needs a real vector field with L >= 2");
    f_.require_finite("map");
    const GridSpec& g = f_.spec();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double m = f_.magnitude(i, j);
            if (std::abs(m - 1.0) > unit_tol)
                throw StabilityError("map: |u| deviates from 1 beyond tolerance at a node");
        }
}

std::string Region::describe() const {
    char buf[160];
    switch (shape) {
        case Shape::All: return "all";
        case Shape::Disk:
            std::snprintf(buf, sizeof buf, "disk c=(%.6g,%.6g) r=%.6g", center.x, center.y, r_out);
            return buf;
        case Shape::Annulus:
            std::snprintf(buf, sizeof buf, "annulus c=(%.6g,%.6g) r=[%.6g,%.6g]", center.x,
                          center.y, r_in, r_out);
            return buf;
    }
    return "?";
}

FieldGradient gradient(const GridField& f, BoundaryMode bc) {
    f.require_finite("gradient");
    GridField dx(f.spec(), f.kind(), f.ncomp());
    GridField dy(f.spec(), f.kind(), f.ncomp());
    kernels::gradient(f, bc, dx, dy);
    return {std::move(dx), std::move(dy)};
}

GridField laplacian(const GridField& f, BoundaryMode bc) {
    f.require_finite("laplacian");
    GridField out(f.spec(), f.kind(), f.ncomp());
    kernels::laplacian(f, bc, out);
    return out;
}

GridField hessian_magnitude(const GridField& f, BoundaryMode bc) {
    f.require_finite("hessian");
    GridField out = GridField::scalar(f.spec());
    kernels::hessian_magnitude(f, bc, out);
    return out;
}

WirtingerPair dz_dzbar(const GridField& f, BoundaryMode bc) {
    if (f.kind() == FieldKind::Scalar)
        throw UsageError("dz_dzbar: input must be complex or vector");
    FieldGradient g = gradient(f, bc);
    int L = f.ncomp();
    GridField dz = GridField::complex_vector(f.spec(), L);
    GridField dzb = GridField::complex_vector(f.spec(), L);
    if (L == 1 && f.is_complex()) {
        dz = GridField::complex_scalar(f.spec());
        dzb = GridField::complex_scalar(f.spec());
    }
    const GridSpec& s = f.spec();
    bool cx = f.is_complex();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i)
            for (int c = 0; c < L; ++c) {
                cplx fx = cx ? g.dx.cat(i, j, c) : cplx(g.dx.at(i, j, c), 0.0);
                cplx fy = cx ? g.dy.cat(i, j, c) : cplx(g.dy.at(i, j, c), 0.0);
                dz.cset(i, j, c, fx - cplx(0, 1) * fy);
                dzb.cset(i, j, c, fx + cplx(0, 1) * fy);
            }
    return {std::move(dz), std::move(dzb)};
}

TensionField tension_field(const ManifoldMap& u, BoundaryMode bc) {
    GridField tau(u.spec(), FieldKind::Vector, u.L());
    GridField tang = GridField::scalar(u.spec());
    kernels::tension(u.field(), bc, tau, tang);
    return {std::move(tau), std::move(tang)};
}

GridField energy_density(const ManifoldMap& u, BoundaryMode bc) {
    GridField out = GridField::scalar(u.spec());
    kernels::energy_density(u.field(), bc, out);
    return out;
}

ManifoldMap project_to_sphere(const GridField& v, double floor) {
    v.require_finite("project");
    if (v.kind() != FieldKind::Vector) throw UsageError("project: needs a real vector field");
    GridField out(v.spec(), FieldKind::Vector, v.ncomp());
    kernels::project_sphere(v, floor, out);
    return ManifoldMap(std::move(out));
}

GridField crop(const GridField& f, int i0, int j0, int nx, int ny) {
    const GridSpec& s = f.spec();
    if (i0 < 0 || j0 < 0 || i0 + nx > s.nx || j0 + ny > s.ny || nx < 8 || ny < 8)
        throw UsageError("crop: window outside grid or smaller than 8 cells");
    GridSpec w;
    w.origin = {s.origin.x + i0 * s.h(), s.origin.y + j0 * s.h()};
    w.width = nx * s.h();
    w.height = ny * s.h();
    w.nx = nx;
    w.ny = ny;
    GridField out(w, f.kind(), f.ncomp());
    int rc = f.rcomp();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int c = 0; c < rc; ++c)
                out.data()[out.idx(i, j) + c] = f.data()[f.idx(i0 + i, j0 + j) + c];
    return out;
}

GridField crop_ball(const GridField& f, Point c, double r, int margin_cells) {
    const GridSpec& s = f.spec();
    double h = s.h();
    int i0 = static_cast<int>(std::floor((c.x - r - s.origin.x) / h)) - margin_cells;
    int i1 = static_cast<int>(std::ceil((c.x + r - s.origin.x) / h)) + margin_cells;
    int j0 = static_cast<int>(std::floor((c.y - r - s.origin.y) / h)) - margin_cells;
    int j1 = static_cast<int>(std::ceil((c.y + r - s.origin.y) / h)) + margin_cells;
    i0 = std::max(i0, 0);
    j0 = std::max(j0, 0);
    i1 = std::min(i1, s.nx);
    j1 = std::min(j1, s.ny);
    if (i1 - i0 < 8 || j1 - j0 < 8) throw UsageError("crop_ball: window too small");
    return crop(f, i0, j0, i1 - i0, j1 - j0);
}

GridField box_average(const GridField& f, int k) {
    if (k < 1) throw UsageError("box_average: k must be >= 1");
    if (k == 1) return f;
    const GridSpec& s = f.spec();
    const int nx = s.nx / k, ny = s.ny / k;
    if (nx < 8 || ny < 8) throw UsageError("box_average: result grid too small");
    GridSpec d;
    d.origin = s.origin;
    d.nx = nx;
    d.ny = ny;
    d.width = static_cast<double>(nx) * k * s.h();
    d.height = static_cast<double>(ny) * k * s.h();
    d.validate();
    GridField out(d, f.kind(), f.ncomp());
    const int rc = f.rcomp();
    const double inv = 1.0 / (static_cast<double>(k) * k);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int c = 0; c < rc; ++c) {
                double acc = 0.0;
                for (int jj = 0; jj < k; ++jj)
                    for (int ii = 0; ii < k; ++ii) acc += f.at(i * k + ii, j * k + jj, c);
                out.at(i, j, c) = acc * inv;
            }
    return out;
}

GridField resample(const GridField& f, const GridSpec& dst) {
    dst.validate();
    GridField out(dst, f.kind(), f.ncomp());
    const int rc = f.rcomp();
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < dst.ny; ++j) {
        std::vector<double> buf(static_cast<size_t>(rc));
        for (int i = 0; i < dst.nx; ++i) {
            f.value(dst.cell_center(i, j), buf.data());
            for (int c = 0; c < rc; ++c) out.at(i, j, c) = buf[c];
        }
    }
    return out;
}

double region_area(const GridSpec& spec, const Region& region) {
    double h2 = spec.h() * spec.h();
    double n = det_row_sum(spec.ny, [&](int j) {
        double c = 0;
        for (int i = 0; i < spec.nx; ++i)
            if (region.contains(spec.cell_center(i, j))) c += 1.0;
        return c;
    });
    return n * h2;
}

double integrate_cells(const GridSpec& spec, const Region& region,
                       const std::function<double(int, int, Point)>& f) {
    double h2 = spec.h() * spec.h();
    double s = det_row_sum(spec.ny, [&](int j) {
        double acc = 0;
        for (int i = 0; i < spec.nx; ++i) {
            Point p = spec.cell_center(i, j);
            if (region.contains(p)) acc += f(i, j, p);
        }
        return acc;
    });
    return s * h2;
}

} // namespace nsk
