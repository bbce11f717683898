#pragma once
#include <functional>
#include <string>
#include <vector>

#include "nsk/field.hpp"
#include "nsk/geometry.hpp"

namespace nsk {

// Complex polynomial, coefficients ascending in degree.
struct Polynomial {
    std::vector<cplx> c;
    int degree() const;
    cplx eval(cplx z) const;
    cplx eval_reversed(cplx w, int d) const;  // w^d * p(1/w), padded to degree d
};

// Resultant of two polynomials (Sylvester determinant); nonzero iff coprime.
cplx resultant(const Polynomial& P, const Polynomial& Q);

// Rational sphere map: the stereographic lift of phi = P/Q evaluated
// homogeneously, placed at `center` with scale and domain rotation:
//   y = e^{i orientation} (x - center) / scale,  u = lift(P(y), Q(y)).
struct BubbleSpec {
    Polynomial P, Q;
    Point center{0.0, 0.0};
    double scale = 1.0;
    double orientation = 0.0;
    int degree() const;    // max(deg P, deg Q) — the topological degree of the lift
    void validate() const; // degree >= 1, coprimality, positive scale
};

// Lift value at a bubble coordinate y (center/scale/orientation NOT applied);
// |y| > 1 is evaluated through the reversed-coefficient pair so the value is
// exact and finite for every y including poles of phi.
void bubble_value(const BubbleSpec& b, cplx y, double out[3]);
// Limit value at y = infinity.
void bubble_infinity(const BubbleSpec& b, double out[3]);
// Full-plane continuum energy of the lift: 8 pi degree.
double bubble_energy(const BubbleSpec& b);

// Samples the placed bubble on a grid (exactly unit norm at every node).
ManifoldMap rational_bubble(const BubbleSpec& b, const GridSpec& grid);

// Base maps for gluing.
ManifoldMap constant_map(const GridSpec& grid, int axis, double sign);
// Geodesic sweep: u(x) = (cos(a x), sin(a x), 0)-type equator arc of
// amplitude `amp` along the first coordinate.
ManifoldMap geodesic_map(const GridSpec& grid, double amp);

// One glued-sequence member:
//   v = Pi( base + sum_i chi_i (omega_i((x - x_i)/r_i) - omega_i(inf)) ),
// chi_i a quintic smoothstep equal to 1 on B_{sqrt(r_i)/2}(x_i) and supported
// in B_{sqrt(r_i)}(x_i).  If the superposition drops below the projection
// floor, the cutoff band is halved and the member rebuilt once
// (StabilityError if still degenerate).  The tension is computed, never
// prescribed.
struct GluedMember {
    ManifoldMap u;
    GridField tau;       // Vector(3), stencil tension of u
    double energy = 0.0;
    int n = 0;
    std::vector<Point> centers;
    std::vector<double> scales;
    double separation = 0.0;  // min pairwise scale-separation quantity
    bool cutoff_shrunk = false;
    bool identity_expected = true;
};
GluedMember glue_member(const ManifoldMap& base, const std::vector<BubbleSpec>& bubbles,
                        int n);

// Pairwise scale-separation quantity
//   sep = min_{i != j} ( r_i/r_j + r_j/r_i + |x_i - x_j|^2 / (r_i r_j) ),
// +inf for a single bubble.
double scale_separation(const std::vector<Point>& centers, const std::vector<double>& scales);

// Sequence recipe (parsed from INI by the config module, or built in code).
struct SequenceSpec {
    std::string name = "sequence";
    std::string kind = "glued";  // glued | parker
    int first = 3, last = 7;
    double scale_ratio = 0.5;    // r_{i,n} = scale_i * scale_ratio^n
    int base_nx = 32;            // member grid: base_nx * 2^n, capped
    int nx_cap = 4096;
    double domain_half_width = 1.0;
    std::string base = "constant:z";  // constant:x|y|z[-] or geodesic:<amp>
    std::vector<BubbleSpec> bubbles;  // scale fields hold scale_i
    bool identity_expected = true;
    // parker knobs
    double spiral_alpha = 0.8;  // fixed angular speed of the harmonic spiral
    double seam_gamma = 1.0;    // designed seam mismatch angle
    double neck_eta = 0.6;      // outer spiral radius
    double seam_k = 2.0;        // seam band [K r_n, 2 K r_n]

    GridSpec member_grid(int n) const;
    ManifoldMap make_base(const GridSpec& grid) const;
};

// Member n of the glued ladder described by spec (kind "glued").
GluedMember glued_sequence_member(const SequenceSpec& spec, int n);

// Negative-control ladder member (kind "parker"): an exactly harmonic
// log-spiral great-circle neck joined to a rotated degree-1 bubble across a
// deliberate seam.  Tension is measured from the grid map; the energy
// identity is expected to fail (identity_expected = false).
GluedMember parker_member(const SequenceSpec& spec, int n);

// Convenience: the spec for the shipped negative control.
SequenceSpec parker_counterexample_sequence();

// Dispatch on spec.kind.
GluedMember sequence_member(const SequenceSpec& spec, int n);

// The limit map of the ladder on a given grid: the base map for glued
// sequences, the bare log-spiral neck for the parker control (whose grid
// energy is resolution-dependent — the designed loss of compactness).
ManifoldMap sequence_limit(const SequenceSpec& spec, const GridSpec& grid);

// Explicit-Euler harmonic map heat flow u <- Pi(u + dt tau(u)), dt = c h^2
// with c <= 0.2.  Records (step, energy, |tau|_L1, |tau|_LlogL,
// |tau|_{M^{1,delta}}) every `stride` steps.  A relative energy increase
// beyond 1e-6 in one step raises StabilityError.
struct FlowRecord {
    int step = 0;
    double time = 0.0;
    double energy = 0.0;
    double tau_l1 = 0.0;
    double tau_llogl = 0.0;
    double tau_morrey = 0.0;
};
struct FlowResult {
    ManifoldMap u;
    std::vector<FlowRecord> trajectory;
    double dt = 0.0;
    int steps = 0;
};
FlowResult heat_flow(const ManifoldMap& u0, int steps, double dt_factor, int stride,
                     BoundaryMode bc, double morrey_delta = 1.5);

std::string trajectory_csv(const FlowResult& r);

} // namespace nsk
