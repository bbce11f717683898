#pragma once
#include "nsk/field.hpp"

// Grid kernels come in two builds: nsk::kernels (OpenMP, used by the public
// ops) and nsk::ref (plain serial loops kept as the reference
// implementation). Tests assert bitwise agreement; bench/ compares timing.

namespace nsk {
namespace stencil {

// One-dimensional second-order stencils on a line of n samples with
// stride s (in doubles). Boundary rows use one-sided second-order forms;
// Periodic wraps. Exact on quadratics (first derivative: on cubics at
// interior nodes).
inline double d1(const double* p, int i, int n, ptrdiff_t s, double h, BoundaryMode bc) {
    if (bc == BoundaryMode::Periodic) {
        int ip = (i + 1) % n, im = (i + n - 1) % n;
        return (p[ip * s] - p[im * s]) / (2.0 * h);
    }
    if (i == 0) return (-3.0 * p[0] + 4.0 * p[s] - p[2 * s]) / (2.0 * h);
    if (i == n - 1) return (3.0 * p[i * s] - 4.0 * p[(i - 1) * s] + p[(i - 2) * s]) / (2.0 * h);
    return (p[(i + 1) * s] - p[(i - 1) * s]) / (2.0 * h);
}

inline double d2(const double* p, int i, int n, ptrdiff_t s, double h, BoundaryMode bc) {
    double h2 = h * h;
    if (bc == BoundaryMode::Periodic) {
        int ip = (i + 1) % n, im = (i + n - 1) % n;
        return (p[ip * s] - 2.0 * p[i * s] + p[im * s]) / h2;
    }
    if (i == 0) return (2.0 * p[0] - 5.0 * p[s] + 4.0 * p[2 * s] - p[3 * s]) / h2;
    if (i == n - 1)
        return (2.0 * p[i * s] - 5.0 * p[(i - 1) * s] + 4.0 * p[(i - 2) * s] - p[(i - 3) * s]) / h2;
    return (p[(i + 1) * s] - 2.0 * p[i * s] + p[(i - 1) * s]) / h2;
}

} // namespace stencil

namespace kernels {

void gradient(const GridField& f, BoundaryMode bc, GridField& dx, GridField& dy);
void laplacian(const GridField& f, BoundaryMode bc, GridField& out);
void hessian_magnitude(const GridField& f, BoundaryMode bc, GridField& out);
void tension(const GridField& u, BoundaryMode bc, GridField& tau, GridField& tangency);
void energy_density(const GridField& u, BoundaryMode bc, GridField& out);
void project_sphere(const GridField& v, double floor, GridField& out);
// Integral of |f|^pow over region cells (pow = 1 or 2), deterministic order.
double integrate_pow(const GridField& f, const Region& region, double pow);

} // namespace kernels

namespace ref {

void gradient(const GridField& f, BoundaryMode bc, GridField& dx, GridField& dy);
void laplacian(const GridField& f, BoundaryMode bc, GridField& out);
void hessian_magnitude(const GridField& f, BoundaryMode bc, GridField& out);
void tension(const GridField& u, BoundaryMode bc, GridField& tau, GridField& tangency);
void energy_density(const GridField& u, BoundaryMode bc, GridField& out);
void project_sphere(const GridField& v, double floor, GridField& out);
double integrate_pow(const GridField& f, const Region& region, double pow);

} // namespace ref
} // namespace nsk
