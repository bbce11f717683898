// Timing comparison of the OpenMP kernels against the serial reference
// implementation, with a bitwise-agreement check on every pair.
//
//   nsk-bench [nx] [reps]     (defaults 1024, 5)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "nsk/field.hpp"
#include "nsk/geometry.hpp"
#include "nsk/kernels.hpp"
#include "nsk/parallel.hpp"

using namespace nsk;

namespace {

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_best(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_seconds();
        f();
        best = std::min(best, now_seconds() - t0);
    }
    return best;
}

bool bitwise_equal(const GridField& a, const GridField& b) {
    if (!a.spec().same_layout(b.spec()) || a.rcomp() != b.rcomp()) return false;
    const size_t n = static_cast<size_t>(a.spec().nx) * a.spec().ny * a.rcomp();
    return std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0;
}

void report(const char* name, double t_par, double t_ser, bool agree) {
    std::printf("%-18s  omp %8.2f ms   serial %8.2f ms   speedup %5.2fx   %s\n", name,
                1e3 * t_par, 1e3 * t_ser, t_ser / t_par,
                agree ? "bitwise-equal" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    const int nx = argc > 1 ? std::atoi(argv[1]) : 1024;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
    if (nx < 16 || reps < 1) {
        std::fprintf(stderr, "usage: nsk-bench [nx >= 16] [reps >= 1]\n");
        return 2;
    }

    GridSpec g;
    g.nx = nx;
    g.ny = nx;
    g.validate();

    // A smooth sphere-valued test map and a smooth scalar.
    GridField u(g, FieldKind::Vector, 3);
    GridField s = GridField::scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Point p = g.cell_center(i, j);
            const double a = 1.3 * p.x + 0.7 * std::sin(2.0 * p.y);
            const double b = 0.9 * p.y;
            u.at(i, j, 0) = std::cos(a) * std::cos(b);
            u.at(i, j, 1) = std::sin(a) * std::cos(b);
            u.at(i, j, 2) = std::sin(b);
            s.at(i, j, 0) = std::sin(3.0 * p.x) * std::cos(2.0 * p.y);
        }

    const BoundaryMode bc = BoundaryMode::OneSided;
    std::printf("grid %dx%d, %d reps, %d threads\n", nx, nx, reps, thread_count());

    int mismatches = 0;
    {
        GridField dx1 = GridField::vector(g, 3), dy1 = GridField::vector(g, 3);
        GridField dx2 = GridField::vector(g, 3), dy2 = GridField::vector(g, 3);
        const double tp = time_best(reps, [&] { kernels::gradient(u, bc, dx1, dy1); });
        const double ts = time_best(reps, [&] { ref::gradient(u, bc, dx2, dy2); });
        const bool ok = bitwise_equal(dx1, dx2) && bitwise_equal(dy1, dy2);
        mismatches += !ok;
        report("gradient", tp, ts, ok);
    }
    {
        GridField o1 = GridField::scalar(g), o2 = GridField::scalar(g);
        const double tp = time_best(reps, [&] { kernels::laplacian(s, bc, o1); });
        const double ts = time_best(reps, [&] { ref::laplacian(s, bc, o2); });
        const bool ok = bitwise_equal(o1, o2);
        mismatches += !ok;
        report("laplacian", tp, ts, ok);
    }
    {
        GridField o1 = GridField::scalar(g), o2 = GridField::scalar(g);
        const double tp = time_best(reps, [&] { kernels::hessian_magnitude(u, bc, o1); });
        const double ts = time_best(reps, [&] { ref::hessian_magnitude(u, bc, o2); });
        const bool ok = bitwise_equal(o1, o2);
        mismatches += !ok;
        report("hessian", tp, ts, ok);
    }
    {
        GridField t1 = GridField::vector(g, 3), n1 = GridField::scalar(g);
        GridField t2 = GridField::vector(g, 3), n2 = GridField::scalar(g);
        const double tp = time_best(reps, [&] { kernels::tension(u, bc, t1, n1); });
        const double ts = time_best(reps, [&] { ref::tension(u, bc, t2, n2); });
        const bool ok = bitwise_equal(t1, t2) && bitwise_equal(n1, n2);
        mismatches += !ok;
        report("tension", tp, ts, ok);
    }
    {
        GridField o1 = GridField::scalar(g), o2 = GridField::scalar(g);
        const double tp = time_best(reps, [&] { kernels::energy_density(u, bc, o1); });
        const double ts = time_best(reps, [&] { ref::energy_density(u, bc, o2); });
        const bool ok = bitwise_equal(o1, o2);
        mismatches += !ok;
        report("energy-density", tp, ts, ok);
    }
    {
        GridField o1 = GridField::vector(g, 3), o2 = GridField::vector(g, 3);
        const double tp = time_best(reps, [&] { kernels::project_sphere(u, 0.1, o1); });
        const double ts = time_best(reps, [&] { ref::project_sphere(u, 0.1, o2); });
        const bool ok = bitwise_equal(o1, o2);
        mismatches += !ok;
        report("project-sphere", tp, ts, ok);
    }
    {
        const Region disk = Region::disk({0.0, 0.0}, 0.8);
        double v1 = 0.0, v2 = 0.0;
        const double tp = time_best(reps, [&] { v1 = kernels::integrate_pow(s, disk, 2.0); });
        const double ts = time_best(reps, [&] { v2 = ref::integrate_pow(s, disk, 2.0); });
        const bool ok = v1 == v2;
        mismatches += !ok;
        report("integrate-pow", tp, ts, ok);
    }

    if (mismatches) {
        std::fprintf(stderr, "%d kernel pair(s) disagree bitwise\n", mismatches);
        return 1;
    }
    return 0;
}
