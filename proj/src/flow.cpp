#include "nsk/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "nsk/errors.hpp"
#include "nsk/norms.hpp"
#include "nsk/parallel.hpp"

namespace nsk {
namespace {

// Quintic smoothstep: sigma(0) = 0, sigma(1) = 1, first and second
// derivatives vanish at both ends.
double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// Stereographic lift of the homogeneous pair (a, b) ~ P/Q.
void lift(cplx a, cplx b, double out[3]) {
    const double na = std::norm(a), nb = std::norm(b);
    const double den = na + nb;
    if (den == 0.0) {  // coprime pairs never hit this; roundoff guard
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = 1.0;
        return;
    }
    const cplx ab = a * std::conj(b);
    out[0] = 2.0 * ab.real() / den;
    out[1] = 2.0 * ab.imag() / den;
    out[2] = (na - nb) / den;
}

} // namespace

int Polynomial::degree() const {
    for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k)
        if (c[k] != cplx(0.0, 0.0)) return k;
    return -1;
}

cplx Polynomial::eval(cplx z) const {
    cplx acc(0.0, 0.0);
    for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) acc = acc * z + c[k];
    return acc;
}

cplx Polynomial::eval_reversed(cplx w, int d) const {
    // w^d p(1/w) = sum_k c_k w^{d-k}, coefficients padded with zeros up to d.
    cplx acc(0.0, 0.0);
    for (int k = 0; k <= d; ++k) {
        const cplx ck = (k < static_cast<int>(c.size())) ? c[k] : cplx(0.0, 0.0);
        acc = acc * w + ck;
    }
    return acc;
}

cplx resultant(const Polynomial& P, const Polynomial& Q) {
    const int dp = P.degree(), dq = Q.degree();
    if (dp < 0 || dq < 0) return cplx(0.0, 0.0);
    const int n = dp + dq;
    if (n == 0) return cplx(1.0, 0.0);
    // Sylvester matrix, rows of Q-shifts then P-shifts.
    std::vector<cplx> m(static_cast<size_t>(n) * n, cplx(0.0, 0.0));
    auto at = [&](int r, int col) -> cplx& { return m[static_cast<size_t>(r) * n + col]; };
    for (int r = 0; r < dq; ++r)
        for (int k = 0; k <= dp; ++k) at(r, r + k) = P.c[dp - k];
    for (int r = 0; r < dp; ++r)
        for (int k = 0; k <= dq; ++k) at(dq + r, r + k) = Q.c[dq - k];
    // Gaussian elimination with partial pivoting.
    cplx det(1.0, 0.0);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(at(r, col)) > std::abs(at(piv, col))) piv = r;
        if (std::abs(at(piv, col)) == 0.0) return cplx(0.0, 0.0);
        if (piv != col) {
            for (int k = col; k < n; ++k) std::swap(at(piv, k), at(col, k));
            det = -det;
        }
        det *= at(col, col);
        for (int r = col + 1; r < n; ++r) {
            const cplx f = at(r, col) / at(col, col);
            for (int k = col; k < n; ++k) at(r, k) -= f * at(col, k);
        }
    }
    return det;
}

int BubbleSpec::degree() const { return std::max(P.degree(), Q.degree()); }

void BubbleSpec::validate() const {
    if (degree() < 1) throw UsageError("bubble: rational map of degree >= 1 required");
    if (!(scale > 0.0)) throw UsageError("bubble: positive scale required");
    if (std::abs(resultant(P, Q)) <= 1e-10)
        throw UsageError("bubble: P and Q share a root (resultant below 1e-10)");
}

void bubble_value(const BubbleSpec& b, cplx y, double out[3]) {
    if (std::abs(y) <= 1.0) {
        lift(b.P.eval(y), b.Q.eval(y), out);
    } else {
        const int d = b.degree();
        const cplx w = cplx(1.0, 0.0) / y;
        lift(b.P.eval_reversed(w, d), b.Q.eval_reversed(w, d), out);
    }
}

void bubble_infinity(const BubbleSpec& b, double out[3]) {
    const int d = b.degree();
    lift(b.P.eval_reversed(cplx(0.0, 0.0), d), b.Q.eval_reversed(cplx(0.0, 0.0), d), out);
}

double bubble_energy(const BubbleSpec& b) { return 8.0 * M_PI * b.degree(); }

ManifoldMap rational_bubble(const BubbleSpec& b, const GridSpec& grid) {
    b.validate();
    GridField f(grid, FieldKind::Vector, 3);
    const cplx rot = std::polar(1.0, b.orientation);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Point p = grid.cell_center(i, j);
            const cplx y = rot * cplx(p.x - b.center.x, p.y - b.center.y) / b.scale;
            double v[3];
            bubble_value(b, y, v);
            for (int c = 0; c < 3; ++c) f.at(i, j, c) = v[c];
        }
    return ManifoldMap(std::move(f));
}

ManifoldMap constant_map(const GridSpec& grid, int axis, double sign) {
    if (axis < 0 || axis > 2) throw UsageError("constant_map: axis 0..2");
    GridField f(grid, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) f.at(i, j, axis) = sign;
    return ManifoldMap(std::move(f));
}

ManifoldMap geodesic_map(const GridSpec& grid, double amp) {
    GridField f(grid, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Point p = grid.cell_center(i, j);
            const double t = amp * p.x;
            f.at(i, j, 0) = std::cos(t);
            f.at(i, j, 1) = std::sin(t);
            f.at(i, j, 2) = 0.0;
        }
    return ManifoldMap(std::move(f));
}

double scale_separation(const std::vector<Point>& centers, const std::vector<double>& scales) {
    if (centers.size() != scales.size())
        throw UsageError("scale_separation: centers and scales must pair up");
    if (centers.size() < 2) return std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < centers.size(); ++i)
        for (size_t j = i + 1; j < centers.size(); ++j) {
            const double d2 = (centers[i].x - centers[j].x) * (centers[i].x - centers[j].x) +
                              (centers[i].y - centers[j].y) * (centers[i].y - centers[j].y);
            const double s = scales[i] / scales[j] + scales[j] / scales[i] +
                             d2 / (scales[i] * scales[j]);
            best = std::min(best, s);
        }
    return best;
}

namespace {

GridField glue_superpose(const ManifoldMap& base, const std::vector<BubbleSpec>& bubbles,
                         double band_scale) {
    const GridSpec& grid = base.spec();
    GridField v = base.field();
    for (const BubbleSpec& b : bubbles) {
        const double a = band_scale * std::sqrt(b.scale) * 0.5;  // chi == 1 inside
        const double s = band_scale * std::sqrt(b.scale);        // support radius
        Region::disk(b.center, s).validate_inside(grid);
        double winf[3];
        bubble_infinity(b, winf);
        const cplx rot = std::polar(1.0, b.orientation);
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                const Point p = grid.cell_center(i, j);
                const double rho = dist(p, b.center);
                if (rho >= s) continue;
                const double chi = 1.0 - smoothstep((rho - a) / (s - a));
                if (chi == 0.0) continue;
                const cplx y = rot * cplx(p.x - b.center.x, p.y - b.center.y) / b.scale;
                double w[3];
                bubble_value(b, y, w);
                for (int c = 0; c < 3; ++c) v.at(i, j, c) += chi * (w[c] - winf[c]);
            }
    }
    return v;
}

} // namespace

GluedMember glue_member(const ManifoldMap& base, const std::vector<BubbleSpec>& bubbles,
                        int n) {
    for (const BubbleSpec& b : bubbles) b.validate();
    GluedMember m;
    m.n = n;
    bool shrunk = false;
    ManifoldMap u = [&] {
        try {
            return project_to_sphere(glue_superpose(base, bubbles, 1.0));
        } catch (const StabilityError&) {
            shrunk = true;
            return project_to_sphere(glue_superpose(base, bubbles, 0.5));
        }
    }();
    m.cutoff_shrunk = shrunk;
    m.tau = tension_field(u).tau;
    GridField e = energy_density(u);
    m.energy = integrate_cells(u.spec(), Region::all(), [&](int i, int j, Point) {
        return e.at(i, j, 0);
    });
    for (const BubbleSpec& b : bubbles) {
        m.centers.push_back(b.center);
        m.scales.push_back(b.scale);
    }
    m.separation = scale_separation(m.centers, m.scales);
    m.u = std::move(u);
    return m;
}

GridSpec SequenceSpec::member_grid(int n) const {
    GridSpec g;
    g.origin = {-domain_half_width, -domain_half_width};
    g.width = 2.0 * domain_half_width;
    g.height = 2.0 * domain_half_width;
    long nx = static_cast<long>(base_nx) << std::max(0, n);
    nx = std::min<long>(nx, nx_cap);
    g.nx = static_cast<int>(nx);
    g.ny = static_cast<int>(nx);
    g.validate();
    return g;
}

ManifoldMap SequenceSpec::make_base(const GridSpec& grid) const {
    if (base.rfind("constant:", 0) == 0) {
        const std::string which = base.substr(9);
        if (which.empty()) throw UsageError("sequence base: constant:<axis>[-]");
        const char ax = which[0];
        const double sign = (which.size() > 1 && which[1] == '-') ? -1.0 : 1.0;
        const int axis = ax == 'x' ? 0 : ax == 'y' ? 1 : ax == 'z' ? 2 : -1;
        if (axis < 0) throw UsageError("sequence base: axis must be x, y, or z");
        return constant_map(grid, axis, sign);
    }
    if (base.rfind("geodesic:", 0) == 0) {
        const double amp = std::strtod(base.c_str() + 9, nullptr);
        return geodesic_map(grid, amp);
    }
    throw UsageError("sequence base: expected constant:<axis> or geodesic:<amp>");
}

GluedMember glued_sequence_member(const SequenceSpec& spec, int n) {
    if (n < spec.first || n > spec.last)
        throw UsageError("sequence member index outside [first, last]");
    const GridSpec grid = spec.member_grid(n);
    ManifoldMap base = spec.make_base(grid);
    std::vector<BubbleSpec> placed = spec.bubbles;
    for (BubbleSpec& b : placed) b.scale *= std::pow(spec.scale_ratio, n);
    GluedMember m = glue_member(base, placed, n);
    m.identity_expected = spec.identity_expected;
    return m;
}

GluedMember parker_member(const SequenceSpec& spec, int n) {
    if (n < spec.first || n > spec.last)
        throw UsageError("sequence member index outside [first, last]");
    if (spec.bubbles.size() != 1)
        throw UsageError("parker sequence: exactly one bubble");
    const GridSpec grid = spec.member_grid(n);
    BubbleSpec b = spec.bubbles[0];
    b.validate();
    const double r = b.scale * std::pow(spec.scale_ratio, n);
    const double K = spec.seam_k, alpha = spec.spiral_alpha, gamma = spec.seam_gamma;
    const double eta = spec.neck_eta;
    if (!(2.0 * K * r < eta))
        throw UsageError("parker sequence: seam band must sit inside the spiral");
    Region::disk(b.center, eta).validate_inside(grid);

    const double theta_in = alpha * std::log(K * r / eta) + gamma;
    const double ci = std::cos(theta_in), si = std::sin(theta_in);

    GridField v(grid, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Point p = grid.cell_center(i, j);
            const double rho = dist(p, b.center);
            // Neck angle: harmonic spiral theta = alpha ln(rho/eta), frozen
            // below the seam, plus the designed seam mismatch ramp.
            double theta;
            if (rho >= eta) {
                theta = 0.0;
            } else if (rho >= 2.0 * K * r) {
                theta = alpha * std::log(rho / eta);
            } else if (rho >= K * r) {
                theta = alpha * std::log(rho / eta) +
                        gamma * (1.0 - smoothstep((rho - K * r) / (K * r)));
            } else {
                theta = theta_in;
            }
            double out[3] = {std::sin(theta), 0.0, std::cos(theta)};
            if (rho < 2.0 * K * r) {
                // Blend in the rotated bubble: w = 1 inside B_{K r}.
                const double w =
                    rho <= K * r ? 1.0 : 1.0 - smoothstep((rho - K * r) / (K * r));
                const cplx y = cplx(p.x - b.center.x, p.y - b.center.y) / r;
                double bv[3];
                bubble_value(b, y, bv);
                // Rotation about the y-axis by theta_in (takes the bubble's
                // north-pole far field onto the frozen neck value).
                const double rb0 = ci * bv[0] + si * bv[2];
                const double rb2 = -si * bv[0] + ci * bv[2];
                out[0] += w * (rb0 - si);
                out[1] += w * bv[1];
                out[2] += w * (rb2 - ci);
            }
            for (int c = 0; c < 3; ++c) v.at(i, j, c) = out[c];
        }

    GluedMember m;
    m.n = n;
    ManifoldMap u = project_to_sphere(std::move(v));
    m.tau = tension_field(u).tau;
    GridField e = energy_density(u);
    m.energy = integrate_cells(grid, Region::all(), [&](int i, int j, Point) {
        return e.at(i, j, 0);
    });
    m.centers = {b.center};
    m.scales = {r};
    m.separation = scale_separation(m.centers, m.scales);
    m.identity_expected = false;
    m.u = std::move(u);
    return m;
}

SequenceSpec parker_counterexample_sequence() {
    SequenceSpec s;
    s.name = "parker-negative-control";
    s.kind = "parker";
    s.first = 3;
    s.last = 8;
    s.scale_ratio = 0.5;
    s.base_nx = 32;
    s.nx_cap = 4096;
    s.base = "constant:z";
    s.identity_expected = false;
    BubbleSpec b;
    b.P.c = {cplx(0.0, 0.0), cplx(1.0, 0.0)};  // phi = z
    b.Q.c = {cplx(1.0, 0.0)};
    b.center = {0.0, 0.0};
    b.scale = 1.0;
    s.bubbles = {b};
    return s;
}

GluedMember sequence_member(const SequenceSpec& spec, int n) {
    if (spec.kind == "glued") return glued_sequence_member(spec, n);
    if (spec.kind == "parker") return parker_member(spec, n);
    throw UsageError("sequence kind must be glued or parker");
}

ManifoldMap sequence_limit(const SequenceSpec& spec, const GridSpec& grid) {
    if (spec.kind == "glued") return spec.make_base(grid);
    if (spec.kind != "parker") throw UsageError("sequence kind must be glued or parker");
    // Pointwise limit of the parker ladder: the bare log-spiral neck (the
    // seam and bubble collapse to the puncture). Sampled at cell centers the
    // angle stays finite; its grid energy grows with resolution, which is
    // exactly the non-compactness the negative control exhibits.
    if (spec.bubbles.size() != 1)
        throw UsageError("parker sequence: exactly one bubble");
    const Point c = spec.bubbles[0].center;
    const double alpha = spec.spiral_alpha, eta = spec.neck_eta;
    GridField v(grid, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const Point p = grid.cell_center(i, j);
            const double rho = std::max(dist(p, c), 1e-12);  // cell centers miss c, but stay finite regardless
            const double theta = rho >= eta ? 0.0 : alpha * std::log(rho / eta);
            v.at(i, j, 0) = std::sin(theta);
            v.at(i, j, 1) = 0.0;
            v.at(i, j, 2) = std::cos(theta);
        }
    return ManifoldMap(std::move(v) /* already unit */, 1e-10);
}

FlowResult heat_flow(const ManifoldMap& u0, int steps, double dt_factor, int stride,
                     BoundaryMode bc, double morrey_delta) {
    if (!(dt_factor > 0.0)) throw UsageError("heat_flow: dt factor must be positive");
    if (dt_factor > 0.2) {
        char msg[120];
        std::snprintf(msg, sizeof msg,
                      "heat_flow: dt factor %.6g exceeds the stability bound 0.2 "
                      "(rejected at step 0)",
                      dt_factor);
        throw StabilityError(msg);
    }
    if (steps < 0 || stride < 1) throw UsageError("heat_flow: steps >= 0, stride >= 1");
    const GridSpec& spec = u0.spec();
    const double h = spec.h();
    const double dt = dt_factor * h * h;

    FlowResult res;
    res.dt = dt;
    ManifoldMap u = u0;

    auto energy_of = [&](const ManifoldMap& m) {
        GridField e = energy_density(m, bc);
        return integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
            return e.at(i, j, 0);
        });
    };
    auto record = [&](int step, const GridField& tau, double energy) {
        FlowRecord rec;
        rec.step = step;
        rec.time = step * dt;
        rec.energy = energy;
        rec.tau_l1 = integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
            return tau.magnitude(i, j);
        });
        rec.tau_llogl = llogl_norm(tau, Region::all());
        rec.tau_morrey = morrey_norm(tau, 1.0, morrey_delta, Region::all());
        res.trajectory.push_back(rec);
    };

    double energy = energy_of(u);
    {
        TensionField t0 = tension_field(u, bc);
        record(0, t0.tau, energy);
    }

    for (int k = 1; k <= steps; ++k) {
        TensionField tf = tension_field(u, bc);
        GridField v = u.field();
        const int nx = spec.nx, ny = spec.ny;
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (int c = 0; c < 3; ++c)
                    v.at(i, j, c) += dt * tf.tau.at(i, j, c);
        ManifoldMap un = project_to_sphere(std::move(v));
        if (bc == BoundaryMode::OneSided) {
            // Fixed-Dirichlet: boundary ring pinned to the initial data.
            GridField f = un.field();
            for (int i = 0; i < nx; ++i)
                for (int c = 0; c < 3; ++c) {
                    f.at(i, 0, c) = u0.field().at(i, 0, c);
                    f.at(i, ny - 1, c) = u0.field().at(i, ny - 1, c);
                }
            for (int j = 0; j < ny; ++j)
                for (int c = 0; c < 3; ++c) {
                    f.at(0, j, c) = u0.field().at(0, j, c);
                    f.at(nx - 1, j, c) = u0.field().at(nx - 1, j, c);
                }
            un = ManifoldMap(std::move(f));
        }
        const double en = energy_of(un);
        if (en > energy * (1.0 + 1e-6)) {
            char msg[160];
            std::snprintf(msg, sizeof msg,
                          "heat_flow: energy increased from %.12g to %.12g at step %d",
                          energy, en, k);
            throw StabilityError(msg);
        }
        u = std::move(un);
        energy = en;
        res.steps = k;
        if (k % stride == 0 || k == steps) {
            TensionField tk = tension_field(u, bc);
            record(k, tk.tau, energy);
        }
    }
    res.u = std::move(u);
    return res;
}

std::string trajectory_csv(const FlowResult& r) {
    std::string out = "step,time,energy,tau_l1,tau_llogl,tau_morrey\n";
    char line[256];
    for (const FlowRecord& rec : r.trajectory) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", rec.step,
                      rec.time, rec.energy, rec.tau_l1, rec.tau_llogl, rec.tau_morrey);
        out += line;
    }
    return out;
}

} // namespace nsk
