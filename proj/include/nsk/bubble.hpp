#pragma once
#include <string>
#include <vector>

#include "nsk/field.hpp"
#include "nsk/flow.hpp"
#include "nsk/geometry.hpp"
#include "nsk/hopf.hpp"

namespace nsk {

// Knobs of the bubbling analysis. epsilon0 is the calibrated small-energy
// threshold (see calibrate_epsilon0); C0 divides it down to the extraction
// level epsilon0^2 / C0.
struct AnalysisConfig {
    double epsilon0 = 0.9;     // calibrate_epsilon0(192): 0.5 sqrt(e*) with e* = 3.24
    double c0 = 4.0;
    double delta = 1.5;        // Morrey exponent used for tension terms
    std::vector<double> lambda_ladder = {2.0, 4.0, 8.0};
    int m_cap = 4;             // max bubbles per analysis
    double e0_cap = 100.0;     // energy budget gate
    double detect_radius = -1.0;   // detection ball radius; <=0 means 2.5% of extent
    double neck_inner_factor = 1.0;  // body-bubble neck inner radius = factor * r_n
    int gauge_window_nx = 1024;      // resample cap for per-annulus gauge solves
    int blowup_nx = 512;             // blow-up window resolution
    double blowup_half_width = 8.0;  // blow-up window is |y| <= this

    double detection_radius(const GridSpec& spec) const;
    double extraction_level() const { return epsilon0 * epsilon0 / c0; }
    void validate() const;
};

// Ball energy sums of |grad u|^2 at radius r for every admissible grid-node
// center (max over centers = the concentration function).
double concentration_function(const ManifoldMap& u, double r);
// Sampled version for plot data: (r, max ball energy) rows.
std::vector<std::pair<double, double>> concentration_profile(const ManifoldMap& u,
                                                             int n_radii);

struct ConcentrationPoint {
    Point x{0.0, 0.0};       // cluster centroid
    double ball_energy = 0.0;  // peak min-over-members ball energy in the cluster
    int cells = 0;           // cluster size on the detection lattice
};
struct ConcentrationReport {
    double r_min = 0.0;      // detection radius used
    double threshold = 0.0;  // epsilon0^2
    double total_energy = 0.0;  // of the newest member
    std::vector<ConcentrationPoint> points;
};

// Detection over the trailing members (up to three, possibly on different
// grids over the same physical domain): lattice cells whose min-over-members
// ball energy exceeds epsilon0^2, 4-connected clustering, centroids.
// Throws BubbleError when the cluster count exceeds m_cap or the energy
// budget e0_cap is blown.
ConcentrationReport detect_concentration(const std::vector<const ManifoldMap*>& members,
                                         const AnalysisConfig& cfg);

// Blow-up extraction at a detected point: bisect the ball radius until the
// max ball energy over centers near `seed` equals epsilon0^2/C0 within 1%,
// then resample u and the exactly rescaled tension r^2 tau(x + r y) onto the
// blow-up window (tension is transported, never re-differentiated).
// Sub-cell radii are handled by exact cell/disk overlap quadrature of the
// energy density; the radius floor only triggers on single-cell spikes.
struct BlowupResult {
    ManifoldMap v;          // window map on [-W, W]^2
    GridField tau_v;        // Vector(3): r^2 tau(x + r y) on the window
    Point x{0.0, 0.0};
    double r = 0.0;
    bool radius_floor_hit = false;
    double window_energy_b1 = 0.0;  // int_{B_1(0)} |grad v|^2 on the window
    double level = 0.0;             // target level the bisection matched
};
BlowupResult extract_blowup(const ManifoldMap& u, const GridField& tau, Point seed,
                            double search_radius, const AnalysisConfig& cfg);

// Measured bubbling-identity residuals of one sequence member against the
// limit map, with bubble windows B_{sqrt(r_i/2)}(x_i):
//   residual_e    = E(u) - E(limit) - sum_i E(u; B_i)
//   residual_21   = same accounting for the L^{2,1} norm of |grad u|
//   residual_osc  = sup over the complement of the windows of |u - limit|
//   residual_hess = same accounting for int |grad^2 u|
struct IdentityRow {
    int n = 0;
    double residual_e = 0.0;
    double residual_21 = 0.0;
    double residual_osc = 0.0;
    double residual_hess = 0.0;
    double window_energy = 0.0;  // sum_i E(u; B_i)
    double window_l21 = 0.0;     // sum_i L^{2,1}(|grad u|; B_i)
    double window_hess = 0.0;    // sum_i int_{B_i} |grad^2 u|
    double energy = 0.0;         // E(u)
};
IdentityRow verify_identities(const GluedMember& member, const ManifoldMap& limit);

// Neck ledger of one member: for each bubble a body-bubble annulus
// (B_eta(x_i) \ B_{factor r_i}) and for nearby bubble pairs the
// between-scales annulus, each measured across the lambda ladder through
// neck_bounds with one gauge solve per annulus (resampled to the gauge
// window cap).  Rows that cannot be resolved carry a flag instead of
// numbers.
struct NeckLedgerRow {
    int n = 0;
    std::string kind;  // "body" or "pair"
    int i = 0, j = -1;
    NeckReport rep;
    std::string flag;  // empty when fully resolved
};
std::vector<NeckLedgerRow> neck_ledger(const GluedMember& member, const AnalysisConfig& cfg);
std::string neck_ledger_csv(const std::vector<NeckLedgerRow>& rows);
std::string residuals_csv(const std::vector<IdentityRow>& rows);

// The body-bubble annulus of bubble i exactly as the ledger builds it:
// inner radius factor * r_i, outer radius capped by the domain edge and by
// half the distance to the nearest other bubble.
AnnulusSpec body_annulus(const GluedMember& member, const AnalysisConfig& cfg, size_t i);

// The gauge solve the ledger runs for one annulus: crop to B_{r_out}, swap
// the bubble core for a tame cap, resample down to the gauge window, and
// decompose. Throws (GaugeError et al.) when the window resists.
GaugeData annulus_gauge(const GluedMember& member, const AnnulusSpec& A,
                        const AnalysisConfig& cfg);

// epsilon0 calibration: over a deterministic corpus of small-window maps of
// increasing energy, the largest energy for which every gauge solve kept
// kappa < 0.5, halved.
struct CalibrationSample {
    std::string name;
    double energy = 0.0;
    double kappa = 0.0;
    bool converged = false;
};
struct CalibrationResult {
    double epsilon0 = 0.0;
    std::vector<CalibrationSample> samples;
};
CalibrationResult calibrate_epsilon0(int nx = 192);

// Full pipeline over a generated sequence: per-member identity residuals and
// neck ledgers, detection over the trailing members, blow-up extraction per
// detected point, double-limit decay fits.
struct SequenceAnalysis {
    SequenceSpec spec;
    AnalysisConfig cfg;
    ConcentrationReport detection;
    std::vector<IdentityRow> residuals;
    std::vector<NeckLedgerRow> ledger;
    std::vector<BlowupResult> blowups;       // for the final member
    std::vector<double> blowup_scale_ratio;  // extracted r / generator r_n, per member
    double neck_l2_slope = 0.0;   // d ln(neck L2) / d ln(lambda) at the final member
    double neck_l21_slope = 0.0;
    bool identity_expected = true;
    // Verdicts evaluated on the final member (fractions of total bubble energy).
    bool energy_identity_pass = false;
    bool l21_identity_pass = false;
    bool osc_identity_pass = false;
    bool hess_identity_pass = false;
};
SequenceAnalysis analyze_sequence(const SequenceSpec& spec, const AnalysisConfig& cfg);

std::string decomposition_json(const SequenceAnalysis& a);

} // namespace nsk
