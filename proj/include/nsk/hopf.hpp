#pragma once
#include <functional>
#include <string>
#include <vector>

#include "nsk/field.hpp"
#include "nsk/gauge.hpp"
#include "nsk/geometry.hpp"

namespace nsk {

// Hopf differential of a sphere-valued map in the unnormalized Wirtinger
// convention:  H = <dz u, dz u> = (|u_x|^2 - |u_y|^2) - 2 i <u_x, u_y>.
// Complex scalar field on the map's grid.
GridField hopf_differential(const ManifoldMap& u);

// Laurent coefficients a_n, n in [n_min, n_max], of a complex field sampled
// on the circle |z - center| = radius:
//   a_n = (1/M) sum_j g(center + R e^{i t_j}) R^{-n} e^{-i n t_j},
// with M >= 4 (max(|n_min|, |n_max|) + 8) equispaced nodes.
struct LaurentSeries {
    Point center{0.0, 0.0};
    double radius = 1.0;
    int n_min = 0, n_max = 0;
    int nchan = 1;
    int samples = 0;
    std::vector<cplx> coeffs;  // (n_max - n_min + 1) x nchan, n-major

    cplx coeff(int n, int c = 0) const;
    double abs_coeff(int n) const;  // Euclidean norm across channels
};

// Analytic sampler form: g(z, out) fills nchan complex values.
LaurentSeries laurent_coefficients(const std::function<void(cplx, cplx*)>& g, int nchan,
                                   Point center, double radius, int n_min, int n_max);
// Grid form: bilinear samples of a Complex/ComplexVector field along the contour.
LaurentSeries laurent_coefficients(const GridField& g, Point center, double radius,
                                   int n_min, int n_max);

// Mean of g over the circle |z - center| = radius (one value per complex channel).
std::vector<cplx> circle_average(const GridField& g, Point center, double radius);

// Coefficient products b_n = sum_m <a_m, a_{n-m}> (unconjugated sum across
// channels), index ranges clipped to the series window. For a gauge component
// series these are the Laurent coefficients of the Hopf differential.
cplx series_product_coeff(const LaurentSeries& a, int n);

// Best holomorphic L^1 approximation on a disk (upper bound for the inf):
// Taylor coefficients are read off a contour at half the disk radius, the
// polynomial degree is chosen in [0, max_degree] to minimize the measured
// cellwise L^1 residual on the disk.
struct HolomorphicFit {
    std::vector<cplx> coeffs;  // degree+1 Taylor coefficients about the center
    int degree = 0;
    double residual_l1 = 0.0;  // int_disk |H - h| dA at the chosen degree
};
HolomorphicFit holomorphic_approx(const GridField& H, Point center, double radius,
                                  int max_degree = 24);

// Neck-quality functional of an annulus (scale-invariant):
//   A0 = inf_h ||H - h||_{L1(B_{2 r_in}(c))}  +  r_in^{2-delta} ||tau||_{M^{1,delta}(B_{r_out}(c))}
// with the inf upper-bounded by holomorphic_approx.
struct A0Breakdown {
    double value = 0.0;
    double misfit_l1 = 0.0;
    double tension_term = 0.0;
    double r = 0.0;  // r_in / r_out
};
A0Breakdown a0_functional(const GridField& H, const GridField& tau, const AnnulusSpec& A,
                          double delta);

// Interpolation constant C(lambda), lambda > 1, summed as a series until the
// relative tail is below 1e-10:
//   C(lambda)^2 = sum_{n <= -2} |n+1| lambda^{2(n+1)} + sum_{n >= 0} (n+1) lambda^{-2(n+1)}.
// Strictly decreasing, C(lambda) <= C / lambda.
double c_lambda(double lambda);

// L log L with a scale-normalized logarithm: int_region |f| log(2 + s2 |f|).
// Used to report tension norms of the unit-rescaled annulus without resampling.
double llogl_scaled(const GridField& f, const Region& region, double s2);

// Measured norms and analytic bound terms for the shrunk annulus
// A_lambda = B_{r_out/lambda} \ B_{lambda r_in}.  The gauge pointer may be
// null (bound columns flagged unavailable).  With gauge present the
// small-energy precondition ||grad u||_{L2(A)} <= epsilon0 is enforced
// (HopfError).  All reported quantities are invariant under rescaling the
// annulus to unit outer radius; tension norms are reported in that
// normalization.
struct NeckBoundTerms {
    double sqrt_a0_lnr = 0.0;  // (A0^{1/2} + r^{1/2}) |ln r|
    double a0_lnr = 0.0;       // (A0 + r) |ln r|
    double c_lambda_l2 = 0.0;  // C(lambda) ||grad u||_{L2(A)}
    double lam2_l2 = 0.0;      // lambda^{-2} ||grad u||^2_{L2(A)}
    double tau_morrey = 0.0;   // r_out^{2-delta} ||tau||_{M^{1,delta}(B_{r_out})}
    double tau_llogl = 0.0;    // scale-normalized ||tau||_{L log L(B_{r_out})}
};
struct NeckReport {
    double lambda = 1.0;
    double r = 0.0;            // r_in / r_out
    bool annulus_empty = false;
    bool bounds_available = false;
    std::string note;

    // Measured on A_lambda.
    double l2_energy = 0.0;    // int |grad u|^2
    double l21_norm = 0.0;     // L^{2,1} of |grad u|
    double hessian_l1 = 0.0;   // int |grad^2 u|

    // Analytic side (gauge present only).
    double a_minus_1 = 0.0;    // |a_{-1}| of G2, geometric-mean contour
    double a0 = 0.0;
    double c_lam = 0.0;
    NeckBoundTerms terms;
    double energy_bound = 0.0;   // (A0+r)|ln r| + lambda^{-2} E(A) + tau_M^2
    double l21_bound = 0.0;      // (sqrt(A0)+sqrt(r))|ln r| + C(lambda)||grad u|| + tau_LlogL
    double hessian_bound = 0.0;  // ... + (C(lambda)+1/lambda)||grad u|| + tau_LlogL
};
NeckReport neck_bounds(const ManifoldMap& u, const GridField& tau, const GaugeData* gauge,
                       const AnnulusSpec& A, double delta, double lambda, double epsilon0);

// Per-annulus precomputation shared across a lambda ladder: the derivative
// fields and every lambda-independent quantity (A0, tension norms, annulus
// energy) are computed once, so ladder rows cost only ring restrictions.
struct NeckContext {
    AnnulusSpec A;
    double delta = 1.5;
    GridField e;     // |grad u|^2
    GridField gm;    // |grad u|
    GridField hess;  // |grad^2 u|
    A0Breakdown a0;
    double tau_morrey = 0.0;  // r_out^{2-delta} ||tau||_{M^{1,delta}(B_{r_out})}
    double tau_llogl = 0.0;   // scale-normalized L log L of tau on B_{r_out}
    double energy_A = 0.0;    // int_A |grad u|^2 (small-energy gate input)
};
NeckContext make_neck_context(const ManifoldMap& u, const GridField& tau,
                              const AnnulusSpec& A, double delta);
NeckReport neck_bounds(const NeckContext& cx, const GaugeData* gauge, double lambda,
                       double epsilon0);

std::string neck_report_json(const std::vector<NeckReport>& rows);

} // namespace nsk
