#pragma once
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "nsk/geometry.hpp"

namespace nsk {

using cplx = std::complex<double>;

// Sample layout. Scalar and Vector fields hold real channels; Complex and
// ComplexVector hold interleaved (re, im) pairs per channel.
enum class FieldKind : int {
    Scalar = 0,
    Complex = 1,
    Vector = 2,
    ComplexVector = 3,
};

inline bool kind_is_complex(FieldKind k) {
    return k == FieldKind::Complex || k == FieldKind::ComplexVector;
}

// Dense row-major sample array on a GridSpec. Row = y scanline; channel
// fastest. All grid data in the library flows through this type.
class GridField {
  public:
    GridField() = default;
    GridField(GridSpec spec, FieldKind kind, int ncomp);

    static GridField scalar(GridSpec spec) { return GridField(spec, FieldKind::Scalar, 1); }
    static GridField complex_scalar(GridSpec spec) { return GridField(spec, FieldKind::Complex, 1); }
    static GridField vector(GridSpec spec, int ncomp) { return GridField(spec, FieldKind::Vector, ncomp); }
    static GridField complex_vector(GridSpec spec, int ncomp) {
        return GridField(spec, FieldKind::ComplexVector, ncomp);
    }

    const GridSpec& spec() const { return spec_; }
    FieldKind kind() const { return kind_; }
    int ncomp() const { return ncomp_; }
    bool is_complex() const { return kind_is_complex(kind_); }
    // Real slots per sample.
    int rcomp() const { return is_complex() ? 2 * ncomp_ : ncomp_; }

    size_t size() const { return data_.size(); }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    size_t idx(int i, int j) const {
        return (static_cast<size_t>(j) * spec_.nx + i) * rcomp();
    }

    double& at(int i, int j, int c = 0) { return data_[idx(i, j) + c]; }
    double at(int i, int j, int c = 0) const { return data_[idx(i, j) + c]; }

    cplx cat(int i, int j, int c = 0) const {
        size_t k = idx(i, j) + 2 * static_cast<size_t>(c);
        return {data_[k], data_[k + 1]};
    }
    void cset(int i, int j, int c, cplx v) {
        size_t k = idx(i, j) + 2 * static_cast<size_t>(c);
        data_[k] = v.real();
        data_[k + 1] = v.imag();
    }

    // Euclidean magnitude over all real slots of the sample.
    double magnitude(int i, int j) const;

    // Bilinear interpolation at an interior point; each real slot is
    // interpolated independently. Clamps to the cell-center hull.
    void value(Point p, double* out) const;
    cplx cvalue(Point p, int c = 0) const;

    bool all_finite() const;
    void require_finite(const char* who) const;

  private:
    GridSpec spec_;
    FieldKind kind_ = FieldKind::Scalar;
    int ncomp_ = 1;
    std::vector<double> data_;
};

// Map into the unit sphere S^{L-1} subset R^L (L = 3 throughout the
// analysis paths). Construction checks |u| = 1 within tol at every node.
class ManifoldMap {
  public:
    ManifoldMap() = default;
    explicit ManifoldMap(GridField f, double unit_tol = 1e-10);

    const GridField& field() const { return f_; }
    GridField& field() { return f_; }
    const GridSpec& spec() const { return f_.spec(); }
    int L() const { return f_.ncomp(); }

  private:
    GridField f_;
};

enum class BoundaryMode { OneSided, Periodic };

struct FieldGradient {
    GridField dx;
    GridField dy;
};

struct TensionField {
    GridField tau;       // Vector(L)
    GridField tangency;  // Scalar diagnostic <tau, u>
};

// Derivative kernels: centered second-order differences in the interior,
// one-sided second-order at the boundary (or wrap for Periodic).
FieldGradient gradient(const GridField& f, BoundaryMode bc = BoundaryMode::OneSided);
GridField laplacian(const GridField& f, BoundaryMode bc = BoundaryMode::OneSided);

// Unnormalized Wirtinger pair: d/dz = dx - i dy, d/dzbar = dx + i dy
// (so dz applied to f = z gives 2). Input must be Complex or Vector;
// output is Complex / ComplexVector with the same channel count.
struct WirtingerPair {
    GridField dz;
    GridField dzbar;
};
WirtingerPair dz_dzbar(const GridField& f, BoundaryMode bc = BoundaryMode::OneSided);

// Second derivatives, same stencil policy; returns |D^2 f| as a scalar
// field (Frobenius norm over channels and index pairs, cross term twice).
GridField hessian_magnitude(const GridField& f, BoundaryMode bc = BoundaryMode::OneSided);

// tau(u) = Lap u + |grad u|^2 u for sphere targets, with the pointwise
// tangency diagnostic <tau, u>.
TensionField tension_field(const ManifoldMap& u, BoundaryMode bc = BoundaryMode::OneSided);

// |grad u|^2 as a scalar field (sum over components of |du/dx|^2+|du/dy|^2).
GridField energy_density(const ManifoldMap& u, BoundaryMode bc = BoundaryMode::OneSided);

// v / |v| nodewise; rejects |v| < floor (degenerate projection).
ManifoldMap project_to_sphere(const GridField& v, double floor = 0.1);

// Restriction to a sub-window [i0, i0+nx) x [j0, j0+ny); origin shifts so
// cell centers are preserved exactly.
GridField crop(const GridField& f, int i0, int j0, int nx, int ny);
// Smallest crop containing the closed disk B_r(c) plus margin cells.
GridField crop_ball(const GridField& f, Point c, double r, int margin_cells);

// Exact k x k block average; the grid is trimmed (high side) to multiples
// of k first, so cells stay square with size k h. Integrals over regions
// well inside the box are preserved to cell-boundary accuracy.
GridField box_average(const GridField& f, int k);

// Bilinear resampling onto a new layout (clamped at the source hull, like
// GridField::value).
GridField resample(const GridField& f, const GridSpec& dst);

// Cell-count and area of a region on a grid.
double region_area(const GridSpec& spec, const Region& region);

// Deterministic integral of a cell function over region cells.
double integrate_cells(const GridSpec& spec, const Region& region,
                       const std::function<double(int, int, Point)>& f);

} // namespace nsk
