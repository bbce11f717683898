#pragma once
#include <algorithm>
#include <cmath>
#include <string>

#include "nsk/errors.hpp"

namespace nsk {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(Point a, Point b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Uniform cell-centered grid over [origin.x, origin.x+width] x
// [origin.y, origin.y+height]. Sample (i,j) sits at the center of cell
// (i,j); every quadrature below weights samples by h^2. Cells are square.
struct GridSpec {
    Point origin{-1.0, -1.0};
    double width = 2.0;
    double height = 2.0;
    int nx = 64;
    int ny = 64;

    double h() const { return width / nx; }

    Point cell_center(int i, int j) const {
        return {origin.x + (i + 0.5) * h(), origin.y + (j + 0.5) * h()};
    }

    Point center() const { return {origin.x + 0.5 * width, origin.y + 0.5 * height}; }

    bool same_layout(const GridSpec& o) const {
        return nx == o.nx && ny == o.ny && std::abs(origin.x - o.origin.x) < 1e-12 &&
               std::abs(origin.y - o.origin.y) < 1e-12 && std::abs(width - o.width) < 1e-12 &&
               std::abs(height - o.height) < 1e-12;
    }

    void validate() const {
        if (nx < 8 || ny < 8) throw UsageError("grid: nx, ny must be at least 8");
        if (!(width > 0) || !(height > 0)) throw UsageError("grid: extent must be positive");
        double hx = width / nx, hy = height / ny;
        if (std::abs(hx - hy) > 1e-9 * std::max(hx, hy))
            throw UsageError("grid: cells must be square (width/nx == height/ny)");
    }
};

// Analysis regions. Norms and scans restrict to cells whose centers lie in
// the region; ball families for Morrey-type sups require the ball to be
// contained in the region.
struct Region {
    enum class Shape { All, Disk, Annulus };
    Shape shape = Shape::All;
    Point center{0.0, 0.0};
    double r_in = 0.0;
    double r_out = 0.0;

    static Region all() { return Region{}; }
    static Region disk(Point c, double r) { return Region{Shape::Disk, c, 0.0, r}; }
    static Region annulus(Point c, double rin, double rout) {
        return Region{Shape::Annulus, c, rin, rout};
    }

    bool contains(Point p) const {
        switch (shape) {
            case Shape::All: return true;
            case Shape::Disk: return dist(p, center) <= r_out;
            case Shape::Annulus: {
                double d = dist(p, center);
                return d >= r_in && d <= r_out;
            }
        }
        return false;
    }

    // Whether the closed ball B_r(x) lies inside the region (and hence
    // inside the grid, given region_inside_grid was checked).
    bool admits_ball(Point x, double r, const GridSpec& g) const {
        switch (shape) {
            case Shape::All: {
                double lx = x.x - g.origin.x, rx = g.origin.x + g.width - x.x;
                double ly = x.y - g.origin.y, uy = g.origin.y + g.height - x.y;
                return std::min(std::min(lx, rx), std::min(ly, uy)) >= r;
            }
            case Shape::Disk: return dist(x, center) + r <= r_out;
            case Shape::Annulus: {
                double d = dist(x, center);
                return d - r >= r_in && d + r <= r_out;
            }
        }
        return false;
    }

    // Largest admissible ball radius over all centers.
    double inradius(const GridSpec& g) const {
        switch (shape) {
            case Shape::All: return 0.5 * std::min(g.width, g.height);
            case Shape::Disk: return r_out;
            case Shape::Annulus: return 0.5 * (r_out - r_in);
        }
        return 0.0;
    }

    void validate_inside(const GridSpec& g) const {
        if (shape == Shape::All) return;
        if (shape == Shape::Annulus && !(r_in >= 0 && r_out > r_in))
            throw UsageError("region: annulus requires 0 <= r_in < r_out");
        if (shape == Shape::Disk && !(r_out > 0)) throw UsageError("region: disk radius must be positive");
        double x0 = g.origin.x, x1 = g.origin.x + g.width;
        double y0 = g.origin.y, y1 = g.origin.y + g.height;
        if (center.x - r_out < x0 - 1e-12 || center.x + r_out > x1 + 1e-12 ||
            center.y - r_out < y0 - 1e-12 || center.y + r_out > y1 + 1e-12)
            throw UsageError("region: must lie inside the grid domain");
    }

    std::string describe() const;
};

// Annulus with its analysis ladder attached; the shrunken annulus at factor
// lambda is B_{r_out/lambda} \ B_{lambda * r_in}.
struct AnnulusSpec {
    Point center{0.0, 0.0};
    double r_in = 0.0;
    double r_out = 0.0;

    Region region() const { return Region::annulus(center, r_in, r_out); }

    // Shrunken annulus; empty (r_in >= r_out) annuli are the caller's
    // responsibility to skip.
    AnnulusSpec shrunk(double lambda) const {
        return AnnulusSpec{center, lambda * r_in, r_out / lambda};
    }

    bool empty() const { return !(r_in < r_out); }
    double ratio() const { return r_in / r_out; }
};

} // namespace nsk
