#pragma once
#include <string>
#include <vector>

#include "nsk/field.hpp"

namespace nsk {

// Coulomb-gauge machinery for sphere-valued maps (L = 3).
//
// Frame: e1 = normalize(p - <p,u> u), e2 = u x e1 for a reference pole p,
// rotated in the tangent plane by the zero-Neumann Poisson solve that kills
// div <grad e1, e2>. The connection scalar is
//     omega = <d_x e1, e2> + i <d_y e1, e2>,
// and with the unnormalized Wirtinger convention (dzbar = dx + i dy) the
// frame components G_a = <dz u, e_a> satisfy
//     dzbar G = Omega G + T,   Omega = [[0, omega], [-omega, 0]],
//     T_a = <tau(u), e_a>.
// The multiplier B solves dzbar B = Omega B by the fixed point
// B = I + S(Omega B), where S inverts dzbar (half the Cauchy transform
// below). Then dzbar(B^t G) = B^t T, so G1 = S(B^t T) carries the tension
// part and G2 = B^t G - G1 is holomorphic up to discretization.

struct CoulombFrame {
    GridField e1;  // Vector(3)
    GridField e2;  // Vector(3)
    GridField theta;  // Scalar rotation from the Poisson solve
    Point pole{0.0, 0.0};  // stored as index pair (axis, sign) in pole_axis/pole_sign
    int pole_axis = 2;
    double pole_sign = 1.0;
    double solver_residual = 0.0;  // L2 residual of the discrete Poisson solve
    double solver_tol = 0.0;       // gate the solve was checked against
    double frame_residual = 0.0;   // L2 of div<grad e1, e2> recomputed from the frame
    double frame_energy = 0.0;     // sum_a int |grad e_a|^2 (measured, not assumed)
    double map_energy = 0.0;       // int |grad u|^2 over the same grid
};

// Builds the Coulomb frame. The pole is chosen among the coordinate axes to
// maximize distance from the image of u; construction fails (GaugeError) if
// every candidate comes within 0.05 of +-p at some node.
CoulombFrame coulomb_frame(const ManifoldMap& u);

// Connection scalar omega (Complex field) of a frame.
GridField connection_form(const CoulombFrame& frame);

// Cauchy transform: w(x) = h^2 sum_j f(xi_j) / (pi (x - xi_j)), channelwise.
// Inverts dzbar up to the factor 2: (1/2) dzbar (cauchy_transform f) = f in
// the continuum.
GridField cauchy_transform(const GridField& f);

// T X = cauchy_transform(Omega X) for a 2x2 complex matrix field X stored as
// ComplexVector(4), channels (11, 12, 21, 22) row-major.
GridField t_operator(const GridField& omega, const GridField& X);

// Riesz potential  (I_1 f)(x) = h^2 sum_j |f(xi_j)| / |x - xi_j|  of a
// scalar field (pointwise-bound diagnostics).
GridField riesz_potential(const GridField& f);

struct BSolve {
    GridField B;  // ComplexVector(4)
    double kappa = 0.0;           // ||omega||_{L^{2,1}} / sqrt(pi)
    int iterations = 0;
    double final_delta = 0.0;     // sup |B_{k+1} - B_k| at exit
    double b_dist = 0.0;          // sup |B - I|
    double dbar_residual = 0.0;   // rel. L2 of (1/2) dzbar B - Omega B
    double bt_b_drift = 0.0;      // sup |B^t B - I| (continuum identity; grid drift)
    std::vector<double> trace;    // sup |B_{k+1} - B_k| per iteration
};

// Fixed point for dzbar B = Omega B, iterated until sup|B_{k+1}-B_k| <= 1e-9
// or 200 iterations. Throws GaugeError when the smallness gate kappa < 0.9
// fails (the iteration contracts with factor kappa/2) or the loop stalls.
BSolve solve_b(const GridField& omega);

struct GaugeData {
    CoulombFrame frame;
    GridField omega;  // Complex
    GridField G;      // ComplexVector(2), G_a = <dz u, e_a>
    GridField T;      // ComplexVector(2), T_a = <tau, e_a> (real-valued slots)
    BSolve b;
    GridField G1;     // ComplexVector(2): S(B^t T)
    GridField G2;     // ComplexVector(2): B^t G - G1
    double g2_dbar_residual = 0.0;  // L2 of dzbar G2 (holomorphy check)
    double kappa = 0.0;
};

// Full decomposition pipeline. When tau_override is non-null it replaces the
// stencil tension of u (Vector(3) on the same grid) — used for rescaled
// blow-up maps whose tension is transported exactly from the source grid
// rather than re-differentiated from an interpolant.
GaugeData dbar_decompose(const ManifoldMap& u, const GridField* tau_override = nullptr);

// Writes e1/e2/theta/omega/G/B/G1/G2 as NSK1 files into dir (created by the
// caller) and returns the JSON summary written alongside as gauge.json.
std::string dump_gauge(const GaugeData& d, const std::string& dir);
std::string gauge_summary_json(const GaugeData& d);

} // namespace nsk
