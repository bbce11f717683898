#include <cmath>

#include "nsk/kernels.hpp"

// Serial reference builds of the grid kernels. Kept deliberately plain so
// they can be audited line by line; the OpenMP builds must match bitwise.

namespace nsk::ref {

using stencil::d1;
using stencil::d2;

void gradient(const GridField& f, BoundaryMode bc, GridField& dx, GridField& dy) {
    const GridSpec& s = f.spec();
    int rc = f.rcomp();
    ptrdiff_t sx = rc, sy = static_cast<ptrdiff_t>(s.nx) * rc;
    double h = s.h();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const double* base = f.data() + f.idx(i, j);
            double* px = dx.data() + dx.idx(i, j);
            double* py = dy.data() + dy.idx(i, j);
            for (int c = 0; c < rc; ++c) {
                const double* line_x = base + c - static_cast<ptrdiff_t>(i) * sx;
                const double* line_y = base + c - static_cast<ptrdiff_t>(j) * sy;
                px[c] = d1(line_x, i, s.nx, sx, h, bc);
                py[c] = d1(line_y, j, s.ny, sy, h, bc);
            }
        }
}

void laplacian(const GridField& f, BoundaryMode bc, GridField& out) {
    const GridSpec& s = f.spec();
    int rc = f.rcomp();
    ptrdiff_t sx = rc, sy = static_cast<ptrdiff_t>(s.nx) * rc;
    double h = s.h();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const double* base = f.data() + f.idx(i, j);
            double* po = out.data() + out.idx(i, j);
            for (int c = 0; c < rc; ++c) {
                const double* line_x = base + c - static_cast<ptrdiff_t>(i) * sx;
                const double* line_y = base + c - static_cast<ptrdiff_t>(j) * sy;
                po[c] = d2(line_x, i, s.nx, sx, h, bc) + d2(line_y, j, s.ny, sy, h, bc);
            }
        }
}

void hessian_magnitude(const GridField& f, BoundaryMode bc, GridField& out) {
    const GridSpec& s = f.spec();
    int rc = f.rcomp();
    ptrdiff_t sx = rc, sy = static_cast<ptrdiff_t>(s.nx) * rc;
    double h = s.h();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const double* base = f.data() + f.idx(i, j);
            double acc = 0.0;
            for (int c = 0; c < rc; ++c) {
                const double* line_x = base + c - static_cast<ptrdiff_t>(i) * sx;
                const double* line_y = base + c - static_cast<ptrdiff_t>(j) * sy;
                double fxx = d2(line_x, i, s.nx, sx, h, bc);
                double fyy = d2(line_y, j, s.ny, sy, h, bc);
                double gplus, gminus, fxy;
                if (bc == BoundaryMode::Periodic) {
                    int jp = (j + 1) % s.ny, jm = (j + s.ny - 1) % s.ny;
                    gplus = d1(f.data() + f.idx(0, jp) + c, i, s.nx, sx, h, bc);
                    gminus = d1(f.data() + f.idx(0, jm) + c, i, s.nx, sx, h, bc);
                    fxy = (gplus - gminus) / (2.0 * h);
                } else if (j == 0) {
                    double g0 = d1(f.data() + f.idx(0, 0) + c, i, s.nx, sx, h, bc);
                    double g1 = d1(f.data() + f.idx(0, 1) + c, i, s.nx, sx, h, bc);
                    double g2 = d1(f.data() + f.idx(0, 2) + c, i, s.nx, sx, h, bc);
                    fxy = (-3.0 * g0 + 4.0 * g1 - g2) / (2.0 * h);
                } else if (j == s.ny - 1) {
                    double g0 = d1(f.data() + f.idx(0, j) + c, i, s.nx, sx, h, bc);
                    double g1 = d1(f.data() + f.idx(0, j - 1) + c, i, s.nx, sx, h, bc);
                    double g2 = d1(f.data() + f.idx(0, j - 2) + c, i, s.nx, sx, h, bc);
                    fxy = (3.0 * g0 - 4.0 * g1 + g2) / (2.0 * h);
                } else {
                    gplus = d1(f.data() + f.idx(0, j + 1) + c, i, s.nx, sx, h, bc);
                    gminus = d1(f.data() + f.idx(0, j - 1) + c, i, s.nx, sx, h, bc);
                    fxy = (gplus - gminus) / (2.0 * h);
                }
                acc += fxx * fxx + 2.0 * fxy * fxy + fyy * fyy;
            }
            out.data()[out.idx(i, j)] = std::sqrt(acc);
        }
}

void tension(const GridField& u, BoundaryMode bc, GridField& tau, GridField& tangency) {
    const GridSpec& s = u.spec();
    int L = u.ncomp();
    ptrdiff_t sx = L, sy = static_cast<ptrdiff_t>(s.nx) * L;
    double h = s.h();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const double* base = u.data() + u.idx(i, j);
            double* pt = tau.data() + tau.idx(i, j);
            double e = 0.0;
            for (int c = 0; c < L; ++c) {
                const double* line_x = base + c - static_cast<ptrdiff_t>(i) * sx;
                const double* line_y = base + c - static_cast<ptrdiff_t>(j) * sy;
                double ux = d1(line_x, i, s.nx, sx, h, bc);
                double uy = d1(line_y, j, s.ny, sy, h, bc);
                e += ux * ux + uy * uy;
                pt[c] = d2(line_x, i, s.nx, sx, h, bc) + d2(line_y, j, s.ny, sy, h, bc);
            }
            double dot = 0.0;
            for (int c = 0; c < L; ++c) {
                pt[c] += e * base[c];
                dot += pt[c] * base[c];
            }
            tangency.data()[tangency.idx(i, j)] = dot;
        }
}

void energy_density(const GridField& u, BoundaryMode bc, GridField& out) {
    const GridSpec& s = u.spec();
    int rc = u.rcomp();
    ptrdiff_t sx = rc, sy = static_cast<ptrdiff_t>(s.nx) * rc;
    double h = s.h();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            const double* base = u.data() + u.idx(i, j);
            double e = 0.0;
            for (int c = 0; c < rc; ++c) {
                const double* line_x = base + c - static_cast<ptrdiff_t>(i) * sx;
                const double* line_y = base + c - static_cast<ptrdiff_t>(j) * sy;
                double ux = d1(line_x, i, s.nx, sx, h, bc);
                double uy = d1(line_y, j, s.ny, sy, h, bc);
                e += ux * ux + uy * uy;
            }
            out.data()[out.idx(i, j)] = e;
        }
}

void project_sphere(const GridField& v, double floor, GridField& out) {
    const GridSpec& s = v.spec();
    int L = v.ncomp();
    for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) {
            double m = v.magnitude(i, j);
            if (m < floor)
                throw StabilityError("project: |v| below floor (degenerate projection)");
            const double* pv = v.data() + v.idx(i, j);
            double* po = out.data() + out.idx(i, j);
            for (int c = 0; c < L; ++c) po[c] = pv[c] / m;
        }
}

double integrate_pow(const GridField& f, const Region& region, double pow) {
    const GridSpec& s = f.spec();
    double h2 = s.h() * s.h();
    // Same row-partial structure as the parallel build so sums agree bitwise.
    double total = 0.0;
    for (int j = 0; j < s.ny; ++j) {
        double acc = 0.0;
        for (int i = 0; i < s.nx; ++i) {
            if (!region.contains(s.cell_center(i, j))) continue;
            double m = f.magnitude(i, j);
            acc += (pow == 1.0) ? m : (pow == 2.0 ? m * m : std::pow(m, pow));
        }
        total += acc;
    }
    return total * h2;
}

} // namespace nsk::ref
