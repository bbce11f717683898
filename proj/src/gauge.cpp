#include "nsk/gauge.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nsk/errors.hpp"
#include "nsk/fft.hpp"
#include "nsk/field_io.hpp"
#include "nsk/norms.hpp"
#include "nsk/parallel.hpp"

#include "json.hpp"

namespace nsk {
namespace {

constexpr double kPoleClearance = 0.05;  // min node distance to +-pole
constexpr double kKappaGate = 0.9;       // smallness gate for the B fixed point
constexpr int kMaxBIters = 200;
constexpr double kBTol = 1e-9;           // sup-norm step tolerance for the fixed point

double sup_magnitude(const GridField& f) {
    return det_row_max(f.spec().ny, [&](int j) {
        double m = 0.0;
        for (int i = 0; i < f.spec().nx; ++i) m = std::max(m, f.magnitude(i, j));
        return m;
    });
}

// <a, b> over real vector channels at each node.
GridField dot_field(const GridField& a, const GridField& b) {
    GridField out = GridField::scalar(a.spec());
    const int nx = a.spec().nx, ny = a.spec().ny, nc = a.ncomp();
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double s = 0.0;
            for (int c = 0; c < nc; ++c) s += a.at(i, j, c) * b.at(i, j, c);
            out.at(i, j, 0) = s;
        }
    return out;
}

// Omega X for the skew matrix Omega = [[0, w], [-w, 0]]: row 1 of the result
// is w times row 2 of X, row 2 is -w times row 1.
GridField omega_times(const GridField& omega, const GridField& X) {
    GridField Y = GridField::complex_vector(X.spec(), 4);
    const int nx = X.spec().nx, ny = X.spec().ny;
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const cplx w = omega.cat(i, j, 0);
            Y.cset(i, j, 0, w * X.cat(i, j, 2));
            Y.cset(i, j, 1, w * X.cat(i, j, 3));
            Y.cset(i, j, 2, -w * X.cat(i, j, 0));
            Y.cset(i, j, 3, -w * X.cat(i, j, 1));
        }
    return Y;
}

// B^t V for a 2-vector V: (B^t V)_a = sum_b B_{ba} V_b.
GridField bt_times(const GridField& B, const GridField& V) {
    GridField out = GridField::complex_vector(V.spec(), 2);
    const int nx = V.spec().nx, ny = V.spec().ny;
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const cplx v0 = V.cat(i, j, 0), v1 = V.cat(i, j, 1);
            out.cset(i, j, 0, B.cat(i, j, 0) * v0 + B.cat(i, j, 2) * v1);
            out.cset(i, j, 1, B.cat(i, j, 1) * v0 + B.cat(i, j, 3) * v1);
        }
    return out;
}

GridField identity_matrix_field(const GridSpec& spec) {
    GridField B = GridField::complex_vector(spec, 4);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            B.cset(i, j, 0, cplx(1.0, 0.0));
            B.cset(i, j, 3, cplx(1.0, 0.0));
        }
    return B;
}

BSolve solve_b_impl(const SingularConv& conv, const GridField& omega) {
    BSolve res;
    res.kappa = lorentz21_norm(omega, Region::all()) / std::sqrt(M_PI);
    if (!(res.kappa < kKappaGate)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "connection too large for the multiplier fixed point: kappa = %.6g >= %.2g",
                      res.kappa, kKappaGate);
        throw GaugeError(msg);
    }

    const GridSpec& spec = omega.spec();
    GridField I = identity_matrix_field(spec);
    GridField B = I;
    double delta = 0.0;
    int it = 0;
    for (; it < kMaxBIters; ++it) {
        GridField TB = conv.apply(omega_times(omega, B));  // cauchy_transform(Omega B)
        GridField Bn = I;
        const int nx = spec.nx, ny = spec.ny;
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (int c = 0; c < 4; ++c)
                    Bn.cset(i, j, c, Bn.cat(i, j, c) + 0.5 * TB.cat(i, j, c));
        GridField diff = Bn;
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                for (int c = 0; c < 4; ++c)
                    diff.cset(i, j, c, diff.cat(i, j, c) - B.cat(i, j, c));
        delta = sup_magnitude(diff);
        res.trace.push_back(delta);
        B = std::move(Bn);
        if (delta <= kBTol) {
            ++it;
            break;
        }
    }
    if (delta > kBTol) {
        char msg[128];
        std::snprintf(msg, sizeof msg, "multiplier fixed point stalled: delta = %.3g after %d iterations",
                      delta, it);
        throw GaugeError(msg);
    }
    res.iterations = it;
    res.final_delta = delta;

    GridField BmI = B;
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i) {
            BmI.cset(i, j, 0, BmI.cat(i, j, 0) - 1.0);
            BmI.cset(i, j, 3, BmI.cat(i, j, 3) - 1.0);
        }
    res.b_dist = sup_magnitude(BmI);

    // B^t B = I holds for the continuum fixed point (B^t B is holomorphic and
    // tends to I); the grid drift is reported, not assumed.
    res.bt_b_drift = det_row_max(spec.ny, [&](int j) {
        double m = 0.0;
        for (int i = 0; i < spec.nx; ++i) {
            const cplx b11 = B.cat(i, j, 0), b12 = B.cat(i, j, 1);
            const cplx b21 = B.cat(i, j, 2), b22 = B.cat(i, j, 3);
            const cplx d11 = b11 * b11 + b21 * b21 - 1.0;
            const cplx d12 = b11 * b12 + b21 * b22;
            const cplx d22 = b12 * b12 + b22 * b22 - 1.0;
            m = std::max(m, std::sqrt(std::norm(d11) + 2.0 * std::norm(d12) + std::norm(d22)));
        }
        return m;
    });

    // Residual of the equation itself: (1/2) dzbar B vs Omega B.
    WirtingerPair dB = dz_dzbar(B);
    GridField OB = omega_times(omega, B);
    GridField r = dB.dzbar;
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i)
            for (int c = 0; c < 4; ++c)
                r.cset(i, j, c, 0.5 * r.cat(i, j, c) - OB.cat(i, j, c));
    const double denom = std::max(l2_norm(OB, Region::all()), 1e-300);
    res.dbar_residual = l2_norm(r, Region::all()) / denom;
    res.B = std::move(B);
    return res;
}

} // namespace

CoulombFrame coulomb_frame(const ManifoldMap& u) {
    if (u.L() != 3) throw UsageError("coulomb_frame: sphere target with L = 3 required");
    const GridField& uf = u.field();
    const GridSpec& spec = uf.spec();
    const int nx = spec.nx, ny = spec.ny;

    // Pole: the coordinate axis whose +-directions stay farthest from the
    // image of u (smallest max |<u, p>|).
    int best_axis = -1;
    double best_maxdot = 2.0;
    for (int axis = 0; axis < 3; ++axis) {
        const double maxdot = det_row_max(ny, [&](int j) {
            double m = 0.0;
            for (int i = 0; i < nx; ++i) m = std::max(m, std::abs(uf.at(i, j, axis)));
            return m;
        });
        if (maxdot < best_maxdot) {
            best_maxdot = maxdot;
            best_axis = axis;
        }
    }
    // dist(u, +-p)^2 = 2 -+ 2<u,p>; clearance 0.05 needs |<u,p>| <= 1 - c^2/2.
    if (best_maxdot > 1.0 - 0.5 * kPoleClearance * kPoleClearance)
        throw GaugeError("coulomb_frame: map approaches every coordinate pole; no admissible frame reference");

    CoulombFrame fr;
    fr.pole_axis = best_axis;
    fr.pole_sign = 1.0;

    // Raw frame from the pole.
    GridField e1(spec, FieldKind::Vector, 3), e2(spec, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double du = uf.at(i, j, best_axis);  // <p, u>
            double v[3];
            for (int c = 0; c < 3; ++c) v[c] = (c == best_axis ? 1.0 : 0.0) - du * uf.at(i, j, c);
            const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            for (int c = 0; c < 3; ++c) e1.at(i, j, c) = v[c] / n;
            const double a0 = uf.at(i, j, 0), a1 = uf.at(i, j, 1), a2 = uf.at(i, j, 2);
            e2.at(i, j, 0) = a1 * e1.at(i, j, 2) - a2 * e1.at(i, j, 1);
            e2.at(i, j, 1) = a2 * e1.at(i, j, 0) - a0 * e1.at(i, j, 2);
            e2.at(i, j, 2) = a0 * e1.at(i, j, 1) - a1 * e1.at(i, j, 0);
        }

    // Rotation theta killing div<grad e1, e2> (mirror-ghost 5-point solve).
    FieldGradient ge1 = gradient(e1);
    GridField wx = dot_field(ge1.dx, e2);
    GridField wy = dot_field(ge1.dy, e2);
    FieldGradient gwx = gradient(wx);
    FieldGradient gwy = gradient(wy);
    GridField rhs = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            rhs.at(i, j, 0) = -(gwx.dx.at(i, j, 0) + gwy.dy.at(i, j, 0));

    GridField theta = solve_neumann_poisson(rhs);

    // The solve is checked against the operator it actually inverted.
    const double mean = integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
                            return rhs.at(i, j, 0);
                        }) /
                        (spec.width * spec.height);
    GridField lap = apply_neumann_laplacian(theta);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            lap.at(i, j, 0) -= rhs.at(i, j, 0) - mean;
    fr.solver_residual = l2_norm(lap, Region::all());

    GridField edens = energy_density(u);
    const double grad_l2 = std::sqrt(integrate_cells(
        spec, Region::all(), [&](int i, int j, Point) { return edens.at(i, j, 0); }));
    fr.solver_tol = 1e-6 * grad_l2 / spec.h();
    if (fr.solver_residual > fr.solver_tol) {
        char msg[160];
        std::snprintf(msg, sizeof msg, "coulomb_frame: Poisson residual %.3g exceeds gate %.3g",
                      fr.solver_residual, fr.solver_tol);
        throw GaugeError(msg);
    }

    // Rotate the frame in the tangent plane.
    fr.e1 = GridField(spec, FieldKind::Vector, 3);
    fr.e2 = GridField(spec, FieldKind::Vector, 3);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double c = std::cos(theta.at(i, j, 0)), s = std::sin(theta.at(i, j, 0));
            for (int k = 0; k < 3; ++k) {
                const double a = e1.at(i, j, k), b = e2.at(i, j, k);
                fr.e1.at(i, j, k) = c * a + s * b;
                fr.e2.at(i, j, k) = -s * a + c * b;
            }
        }
    fr.theta = std::move(theta);

    // Honest divergence of the rotated connection (one-sided stencils differ
    // from the solver's mirror-ghost operator by O(h^2)).
    GridField omega = connection_form(fr);
    GridField ox = GridField::scalar(spec), oy = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            ox.at(i, j, 0) = omega.cat(i, j, 0).real();
            oy.at(i, j, 0) = omega.cat(i, j, 0).imag();
        }
    FieldGradient gox = gradient(ox);
    FieldGradient goy = gradient(oy);
    GridField divw = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            divw.at(i, j, 0) = gox.dx.at(i, j, 0) + goy.dy.at(i, j, 0);
    fr.frame_residual = l2_norm(divw, Region::all());

    // Measured frame energy against the map energy (the frame inherits
    // integrability from u; the constant is reported, not assumed).
    FieldGradient g1r = gradient(fr.e1);
    FieldGradient g2r = gradient(fr.e2);
    fr.frame_energy = integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) {
            s += g1r.dx.at(i, j, c) * g1r.dx.at(i, j, c) + g1r.dy.at(i, j, c) * g1r.dy.at(i, j, c);
            s += g2r.dx.at(i, j, c) * g2r.dx.at(i, j, c) + g2r.dy.at(i, j, c) * g2r.dy.at(i, j, c);
        }
        return s;
    });
    fr.map_energy = grad_l2 * grad_l2;
    return fr;
}

GridField connection_form(const CoulombFrame& frame) {
    const GridSpec& spec = frame.e1.spec();
    FieldGradient g = gradient(frame.e1);
    GridField wx = dot_field(g.dx, frame.e2);
    GridField wy = dot_field(g.dy, frame.e2);
    GridField omega = GridField::complex_scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec.ny; ++j)
        for (int i = 0; i < spec.nx; ++i)
            omega.cset(i, j, 0, cplx(wx.at(i, j, 0), wy.at(i, j, 0)));
    return omega;
}

GridField cauchy_transform(const GridField& f) {
    return SingularConv::cauchy(f.spec()).apply(f);
}

GridField t_operator(const GridField& omega, const GridField& X) {
    if (X.kind() != FieldKind::ComplexVector || X.ncomp() != 4)
        throw UsageError("t_operator: X must be a ComplexVector(4) matrix field");
    if (omega.kind() != FieldKind::Complex)
        throw UsageError("t_operator: omega must be a Complex field");
    return SingularConv::cauchy(X.spec()).apply(omega_times(omega, X));
}

GridField riesz_potential(const GridField& f) {
    return SingularConv::riesz(f.spec()).apply_real(f);
}

BSolve solve_b(const GridField& omega) {
    if (omega.kind() != FieldKind::Complex)
        throw UsageError("solve_b: omega must be a Complex field");
    SingularConv conv = SingularConv::cauchy(omega.spec());
    return solve_b_impl(conv, omega);
}

GaugeData dbar_decompose(const ManifoldMap& u, const GridField* tau_override) {
    if (tau_override && (!tau_override->spec().same_layout(u.spec()) ||
                         tau_override->kind() != FieldKind::Vector || tau_override->ncomp() != 3))
        throw UsageError("dbar_decompose: tau override must be a Vector(3) field on the map's grid");
    GaugeData d;
    d.frame = coulomb_frame(u);
    d.omega = connection_form(d.frame);

    SingularConv conv = SingularConv::cauchy(u.spec());
    d.b = solve_b_impl(conv, d.omega);
    d.kappa = d.b.kappa;

    const GridSpec& spec = u.spec();
    const int nx = spec.nx, ny = spec.ny;

    WirtingerPair du = dz_dzbar(u.field());
    d.G = GridField::complex_vector(spec, 2);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            cplx g0(0.0, 0.0), g1(0.0, 0.0);
            for (int c = 0; c < 3; ++c) {
                const cplx dz = du.dz.cat(i, j, c);
                g0 += dz * d.frame.e1.at(i, j, c);
                g1 += dz * d.frame.e2.at(i, j, c);
            }
            d.G.cset(i, j, 0, g0);
            d.G.cset(i, j, 1, g1);
        }

    GridField tau = tau_override ? *tau_override : tension_field(u).tau;
    d.T = GridField::complex_vector(spec, 2);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double t0 = 0.0, t1 = 0.0;
            for (int c = 0; c < 3; ++c) {
                t0 += tau.at(i, j, c) * d.frame.e1.at(i, j, c);
                t1 += tau.at(i, j, c) * d.frame.e2.at(i, j, c);
            }
            d.T.cset(i, j, 0, cplx(t0, 0.0));
            d.T.cset(i, j, 1, cplx(t1, 0.0));
        }

    // G1 = S(B^t T), S = half Cauchy transform; G2 = B^t G - G1.
    GridField btT = bt_times(d.b.B, d.T);
    GridField G1 = conv.apply(btT);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int c = 0; c < 2; ++c) G1.cset(i, j, c, 0.5 * G1.cat(i, j, c));
    d.G1 = std::move(G1);

    GridField btG = bt_times(d.b.B, d.G);
    d.G2 = GridField::complex_vector(spec, 2);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int c = 0; c < 2; ++c)
                d.G2.cset(i, j, c, btG.cat(i, j, c) - d.G1.cat(i, j, c));

    d.g2_dbar_residual = l2_norm(dz_dzbar(d.G2).dzbar, Region::all());
    return d;
}

std::string gauge_summary_json(const GaugeData& d) {
    nlohmann::json j;
    j["pole_axis"] = d.frame.pole_axis;
    j["pole_sign"] = d.frame.pole_sign;
    j["poisson_residual"] = d.frame.solver_residual;
    j["poisson_gate"] = d.frame.solver_tol;
    j["frame_div_l2"] = d.frame.frame_residual;
    j["frame_energy"] = d.frame.frame_energy;
    j["map_energy"] = d.frame.map_energy;
    j["kappa"] = d.kappa;
    j["b_iterations"] = d.b.iterations;
    j["b_final_delta"] = d.b.final_delta;
    j["b_dist_to_identity"] = d.b.b_dist;
    j["b_dbar_residual"] = d.b.dbar_residual;
    j["bt_b_drift"] = d.b.bt_b_drift;
    j["b_trace"] = d.b.trace;
    j["g2_dbar_l2"] = d.g2_dbar_residual;
    return j.dump(2);
}

std::string dump_gauge(const GaugeData& d, const std::string& dir) {
    write_nsk1(dir + "/e1.nsk", d.frame.e1);
    write_nsk1(dir + "/e2.nsk", d.frame.e2);
    write_nsk1(dir + "/theta.nsk", d.frame.theta);
    write_nsk1(dir + "/omega.nsk", d.omega);
    write_nsk1(dir + "/G.nsk", d.G);
    write_nsk1(dir + "/T.nsk", d.T);
    write_nsk1(dir + "/B.nsk", d.b.B);
    write_nsk1(dir + "/G1.nsk", d.G1);
    write_nsk1(dir + "/G2.nsk", d.G2);
    std::string js = gauge_summary_json(d);
    std::ofstream os(dir + "/gauge.json");
    if (!os) throw IoError("cannot write gauge summary in " + dir);
    os << js << "\n";
    return js;
}

} // namespace nsk
