#pragma once
#include <string>
#include <utility>
#include <vector>

#include "nsk/field.hpp"

namespace nsk {

// Norms of the pointwise magnitude |f| over a region, computed from the
// sampled step distribution lambda(t) = h^2 #{cells in region : |f| >= t}.
// Lorentz integrals are evaluated exactly for that step function (plateau
// levels contribute rectangles, so indicator fixtures come out exact up to
// cell counting).

// Sorted distinct positive levels with their measures: (v_k, lambda(v_k)).
std::vector<std::pair<double, double>> distribution(const GridField& f, const Region& region);

double l2_norm(const GridField& f, const Region& region);
double lorentz21_norm(const GridField& f, const Region& region);
double lorentz2inf_norm(const GridField& f, const Region& region);
double llogl_norm(const GridField& f, const Region& region); // h^2 sum |f| log(2+|f|)

// Morrey growth functional  sup_B r^{delta-2} int_{B cap region} |f|^p
// over balls B = B_r(x) contained in the region, scanned on a geometric
// radius ladder (ratio sqrt 2) from the region inradius down to 2h.
// Returns the sup of the growth quantity itself; take the p-th root via
// MorreyReport for the norm-convention value.
double morrey_norm(const GridField& f, double p, double delta, const Region& region);

// Weak variant: replaces the integral by  t^p lambda_{B}(t), scanned over a
// level ladder (ratio 2^{1/4}, 12 octaves below max |f|).
double weak_morrey_norm(const GridField& f, double p, double delta, const Region& region);

struct NormReport {
    double l2 = 0.0;
    double lorentz21 = 0.0;
    double lorentz2inf = 0.0;
    double llogl = 0.0;
    double morrey = 0.0;           // sup of the growth quantity
    double morrey_root = 0.0;      // morrey^{1/p}
    double weak_morrey = 0.0;
    double weak_morrey_root = 0.0;
    double p = 1.0;
    double delta = 1.0;
    std::string region_desc;
};

NormReport compute_norms(const GridField& f, const Region& region, double p, double delta);
std::string norm_report_json(const NormReport& r);

} // namespace nsk
