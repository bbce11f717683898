#include "nsk/hopf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "nsk/errors.hpp"
#include "nsk/norms.hpp"
#include "nsk/parallel.hpp"

#include "json.hpp"

namespace nsk {
namespace {

int laurent_samples(int n_min, int n_max) {
    const int nabs = std::max(std::abs(n_min), std::abs(n_max));
    return 4 * (nabs + 8);
}

// Quadrature nodes along a grid-sampled contour: at least the analytic floor,
// and at least two samples per cell crossed so the bilinear kinks are resolved.
int grid_samples(const GridSpec& spec, double radius, int n_min, int n_max) {
    const int floor_m = laurent_samples(n_min, n_max);
    const int per_cell = static_cast<int>(std::ceil(2.0 * M_PI * radius / spec.h())) * 2;
    return std::max(floor_m, per_cell);
}

LaurentSeries accumulate_series(const std::function<void(double, cplx*)>& sample_at,
                                int nchan, Point center, double radius, int n_min, int n_max,
                                int M) {
    LaurentSeries s;
    s.center = center;
    s.radius = radius;
    s.n_min = n_min;
    s.n_max = n_max;
    s.nchan = nchan;
    s.samples = M;
    s.coeffs.assign(static_cast<size_t>(n_max - n_min + 1) * nchan, cplx(0.0, 0.0));
    std::vector<cplx> val(nchan);
    for (int j = 0; j < M; ++j) {
        const double t = 2.0 * M_PI * j / M;
        sample_at(t, val.data());
        for (int n = n_min; n <= n_max; ++n) {
            // R^{-n} e^{-i n t} / M
            const cplx w = std::polar(std::pow(radius, -n), -n * t) / static_cast<double>(M);
            for (int c = 0; c < nchan; ++c)
                s.coeffs[static_cast<size_t>(n - n_min) * nchan + c] += val[c] * w;
        }
    }
    return s;
}

} // namespace

cplx LaurentSeries::coeff(int n, int c) const {
    if (n < n_min || n > n_max || c < 0 || c >= nchan)
        throw UsageError("laurent coefficient index outside the computed window");
    return coeffs[static_cast<size_t>(n - n_min) * nchan + c];
}

double LaurentSeries::abs_coeff(int n) const {
    double s = 0.0;
    for (int c = 0; c < nchan; ++c) s += std::norm(coeff(n, c));
    return std::sqrt(s);
}

GridField hopf_differential(const ManifoldMap& u) {
    const GridField& f = u.field();
    const GridSpec& spec = f.spec();
    FieldGradient g = gradient(f);
    GridField H = GridField::complex_scalar(spec);
    const int nx = spec.nx, ny = spec.ny, nc = f.ncomp();
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double xx = 0.0, yy = 0.0, xy = 0.0;
            for (int c = 0; c < nc; ++c) {
                const double dx = g.dx.at(i, j, c), dy = g.dy.at(i, j, c);
                xx += dx * dx;
                yy += dy * dy;
                xy += dx * dy;
            }
            H.cset(i, j, 0, cplx(xx - yy, -2.0 * xy));
        }
    return H;
}

LaurentSeries laurent_coefficients(const std::function<void(cplx, cplx*)>& g, int nchan,
                                   Point center, double radius, int n_min, int n_max) {
    if (!(radius > 0.0) || n_min > n_max || nchan < 1)
        throw UsageError("laurent_coefficients: bad contour or index window");
    const int M = laurent_samples(n_min, n_max);
    return accumulate_series(
        [&](double t, cplx* out) {
            g(cplx(center.x, center.y) + std::polar(radius, t), out);
        },
        nchan, center, radius, n_min, n_max, M);
}

LaurentSeries laurent_coefficients(const GridField& g, Point center, double radius,
                                   int n_min, int n_max) {
    if (g.kind() != FieldKind::Complex && g.kind() != FieldKind::ComplexVector)
        throw UsageError("laurent_coefficients: complex field required");
    if (!(radius > 0.0) || n_min > n_max)
        throw UsageError("laurent_coefficients: bad contour or index window");
    const int nchan = g.ncomp();
    const int M = grid_samples(g.spec(), radius, n_min, n_max);
    return accumulate_series(
        [&](double t, cplx* out) {
            const Point p{center.x + radius * std::cos(t), center.y + radius * std::sin(t)};
            for (int c = 0; c < nchan; ++c) out[c] = g.cvalue(p, c);
        },
        nchan, center, radius, n_min, n_max, M);
}

std::vector<cplx> circle_average(const GridField& g, Point center, double radius) {
    LaurentSeries s = laurent_coefficients(g, center, radius, 0, 0);
    std::vector<cplx> out(s.nchan);
    for (int c = 0; c < s.nchan; ++c) out[c] = s.coeff(0, c);
    return out;
}

cplx series_product_coeff(const LaurentSeries& a, int n) {
    cplx b(0.0, 0.0);
    const int lo = std::max(a.n_min, n - a.n_max);
    const int hi = std::min(a.n_max, n - a.n_min);
    for (int m = lo; m <= hi; ++m)
        for (int c = 0; c < a.nchan; ++c) b += a.coeff(m, c) * a.coeff(n - m, c);
    return b;
}

HolomorphicFit holomorphic_approx(const GridField& H, Point center, double radius,
                                  int max_degree) {
    if (H.kind() != FieldKind::Complex)
        throw UsageError("holomorphic_approx: complex scalar field required");
    if (!(radius > 0.0) || max_degree < 0)
        throw UsageError("holomorphic_approx: bad disk or degree");
    const GridSpec& spec = H.spec();
    Region disk = Region::disk(center, radius);
    disk.validate_inside(spec);

    // Candidate Taylor coefficients from the mid-disk contour.
    LaurentSeries taylor = laurent_coefficients(H, center, 0.5 * radius, 0, max_degree);

    // Cells of the disk, with their offsets from the center.
    struct Cell { cplx z; cplx h; };
    std::vector<Cell> cells;
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            const Point p = spec.cell_center(i, j);
            if (!disk.contains(p)) continue;
            cells.push_back({cplx(p.x - center.x, p.y - center.y), H.cat(i, j, 0)});
        }
    const double area = spec.h() * spec.h();

    // Degree chosen to minimize the measured L1 misfit (the residual is the
    // honest objective; high degrees amplify contour noise and are rejected
    // by the measurement itself).
    HolomorphicFit best;
    best.degree = -1;
    std::vector<cplx> acc(cells.size(), cplx(0.0, 0.0));
    std::vector<cplx> zpow(cells.size(), cplx(1.0, 0.0));
    for (int k = 0; k <= max_degree; ++k) {
        const cplx ck = taylor.coeff(k, 0);
        double res = 0.0;
        for (size_t m = 0; m < cells.size(); ++m) {
            acc[m] += ck * zpow[m];
            zpow[m] *= cells[m].z;
            res += std::abs(cells[m].h - acc[m]);
        }
        res *= area;
        if (best.degree < 0 || res < best.residual_l1) {
            best.residual_l1 = res;
            best.degree = k;
        }
    }
    best.coeffs.resize(best.degree + 1);
    for (int k = 0; k <= best.degree; ++k) best.coeffs[k] = taylor.coeff(k, 0);
    return best;
}

A0Breakdown a0_functional(const GridField& H, const GridField& tau, const AnnulusSpec& A,
                          double delta) {
    if (A.empty() || !(A.r_in > 0.0))
        throw HopfError("a0_functional: degenerate annulus");
    A0Breakdown out;
    out.r = A.r_in / A.r_out;
    out.misfit_l1 = holomorphic_approx(H, A.center, 2.0 * A.r_in).residual_l1;
    // The Morrey sup only needs the ball B_{r_out}; crop to it, and when the
    // window is still huge, block-average |tau| first (ball integrals are
    // preserved to cell-boundary accuracy, so the sup moves by a few percent
    // while the FFT scan cost drops by k^2).
    const double h = tau.spec().h();
    const int k = std::max(1, static_cast<int>(std::ceil((2.0 * A.r_out / h) / 768.0)));
    GridField twin = crop_ball(tau, A.center, A.r_out, std::max(4, 2 * k));
    if (k > 1) {
        // Average the pointwise magnitude, not the components, so the mass
        // of |tau| in each ball is what survives the coarsening.
        GridField mag = GridField::scalar(twin.spec());
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < mag.spec().ny; ++j)
            for (int i = 0; i < mag.spec().nx; ++i) mag.at(i, j, 0) = twin.magnitude(i, j);
        twin = box_average(mag, k);
    }
    const double tau_m = morrey_norm(twin, 1.0, delta, Region::disk(A.center, A.r_out));
    out.tension_term = std::pow(A.r_in, 2.0 - delta) * tau_m;
    out.value = out.misfit_l1 + out.tension_term;
    return out;
}

double c_lambda(double lambda) {
    if (!(lambda > 1.0)) throw UsageError("c_lambda: lambda > 1 required");
    const double x = 1.0 / (lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k < 100000; ++k) {
        const double term = 2.0 * k * std::pow(x, k);
        sum += term;
        // Tail of sum 2 k x^k is below term * x (1 + ...) / (1-x)^2-ish; the
        // crude geometric bound keeps the stop criterion simple and safe.
        if (term / (1.0 - x) <= 1e-10 * sum) break;
    }
    return std::sqrt(sum);
}

double llogl_scaled(const GridField& f, const Region& region, double s2) {
    region.validate_inside(f.spec());
    return integrate_cells(f.spec(), region, [&](int i, int j, Point) {
        const double m = f.magnitude(i, j);
        return m * std::log(2.0 + s2 * m);
    });
}

NeckContext make_neck_context(const ManifoldMap& u, const GridField& tau,
                              const AnnulusSpec& A, double delta) {
    if (A.empty() || !(A.r_in > 0.0)) throw HopfError("neck_bounds: degenerate annulus");
    const GridSpec& spec = u.spec();
    Region::disk(A.center, A.r_out).validate_inside(spec);

    NeckContext cx;
    cx.A = A;
    cx.delta = delta;
    cx.e = energy_density(u);
    cx.gm = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) cx.gm.at(i, j, 0) = std::sqrt(cx.e.at(i, j, 0));
    cx.hess = hessian_magnitude(u.field());

    GridField H = hopf_differential(u);
    cx.a0 = a0_functional(H, tau, A, delta);
    // a0's tension term already holds the Morrey sup, scaled by r_in^{2-delta};
    // reuse it at the outer-radius normalization instead of scanning twice.
    cx.tau_morrey =
        std::pow(A.r_out / A.r_in, 2.0 - delta) * cx.a0.tension_term;
    cx.tau_llogl = llogl_scaled(tau, Region::disk(A.center, A.r_out), A.r_out * A.r_out);
    cx.energy_A = integrate_cells(spec, A.region(), [&](int i, int j, Point) {
        return cx.e.at(i, j, 0);
    });
    return cx;
}

NeckReport neck_bounds(const NeckContext& cx, const GaugeData* gauge, double lambda,
                       double epsilon0) {
    if (!(lambda > 1.0)) throw UsageError("neck_bounds: lambda > 1 required");
    const AnnulusSpec& A = cx.A;
    const GridSpec& spec = cx.e.spec();

    NeckReport rep;
    rep.lambda = lambda;
    rep.r = A.r_in / A.r_out;

    const AnnulusSpec As = A.shrunk(lambda);
    if (As.empty()) {
        rep.annulus_empty = true;
        rep.note = "shrunk annulus is empty at this lambda";
        return rep;
    }
    const Region ring = As.region();

    rep.l2_energy = integrate_cells(spec, ring, [&](int i, int j, Point) {
        return cx.e.at(i, j, 0);
    });
    rep.l21_norm = lorentz21_norm(cx.gm, ring);
    rep.hessian_l1 = integrate_cells(spec, ring, [&](int i, int j, Point) {
        return cx.hess.at(i, j, 0);
    });

    // Gauge-independent analytic columns.
    rep.a0 = cx.a0.value;
    rep.c_lam = c_lambda(lambda);
    const double lnr = std::abs(std::log(rep.r));
    const double l2A = std::sqrt(cx.energy_A);
    rep.terms.a0_lnr = (cx.a0.value + rep.r) * lnr;
    rep.terms.sqrt_a0_lnr = (std::sqrt(cx.a0.value) + std::sqrt(rep.r)) * lnr;
    rep.terms.c_lambda_l2 = rep.c_lam * l2A;
    rep.terms.lam2_l2 = cx.energy_A / (lambda * lambda);
    rep.terms.tau_morrey = cx.tau_morrey;
    rep.terms.tau_llogl = cx.tau_llogl;

    if (!gauge) {
        rep.note = "gauge data not supplied; bound columns unavailable";
        return rep;
    }

    // The bound columns certify the neck lemma, whose hypothesis is the
    // small-energy gate on the full annulus.
    if (l2A > epsilon0) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "neck_bounds: annulus energy %.6g exceeds the small-energy gate %.6g",
                      l2A, epsilon0);
        throw HopfError(msg);
    }

    rep.a_minus_1 =
        laurent_coefficients(gauge->G2, A.center, std::sqrt(A.r_in * A.r_out), -1, -1)
            .abs_coeff(-1);
    rep.energy_bound = rep.terms.a0_lnr + rep.terms.lam2_l2 +
                       rep.terms.tau_morrey * rep.terms.tau_morrey;
    rep.l21_bound = rep.terms.sqrt_a0_lnr + rep.terms.c_lambda_l2 + rep.terms.tau_llogl;
    rep.hessian_bound = rep.terms.sqrt_a0_lnr + (rep.c_lam + 1.0 / lambda) * l2A +
                        rep.terms.tau_llogl;
    rep.bounds_available = true;
    return rep;
}

NeckReport neck_bounds(const ManifoldMap& u, const GridField& tau, const GaugeData* gauge,
                       const AnnulusSpec& A, double delta, double lambda, double epsilon0) {
    if (!(lambda > 1.0)) throw UsageError("neck_bounds: lambda > 1 required");
    NeckContext cx = make_neck_context(u, tau, A, delta);
    return neck_bounds(cx, gauge, lambda, epsilon0);
}

std::string neck_report_json(const std::vector<NeckReport>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const NeckReport& r : rows) {
        nlohmann::json j;
        j["lambda"] = r.lambda;
        j["r"] = r.r;
        j["annulus_empty"] = r.annulus_empty;
        j["bounds_available"] = r.bounds_available;
        if (!r.note.empty()) j["note"] = r.note;
        j["l2_energy"] = r.l2_energy;
        j["l21_norm"] = r.l21_norm;
        j["hessian_l1"] = r.hessian_l1;
        if (!r.annulus_empty) {
            j["a0"] = r.a0;
            j["c_lambda"] = r.c_lam;
            j["terms"] = {{"a0_lnr", r.terms.a0_lnr},
                          {"sqrt_a0_lnr", r.terms.sqrt_a0_lnr},
                          {"c_lambda_l2", r.terms.c_lambda_l2},
                          {"lambda2_l2", r.terms.lam2_l2},
                          {"tau_morrey", r.terms.tau_morrey},
                          {"tau_llogl", r.terms.tau_llogl}};
        }
        if (r.bounds_available) {
            j["a_minus_1"] = r.a_minus_1;
            j["energy_bound"] = r.energy_bound;
            j["l21_bound"] = r.l21_bound;
            j["hessian_bound"] = r.hessian_bound;
        }
        arr.push_back(std::move(j));
    }
    return arr.dump(2);
}

} // namespace nsk
