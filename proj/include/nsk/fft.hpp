#pragma once
#include <memory>
#include <vector>

#include "nsk/field.hpp"

namespace nsk {

// FFT-backed grid transforms. FFTW plans are created with FFTW_ESTIMATE
// (deterministic plan choice) under a global mutex; execution is
// single-threaded FFTW, OpenMP is applied to the surrounding copy /
// multiply loops.

// Convolution with a fixed singular kernel on a zero-padded doubled grid.
// The kernel is sampled at cell-offset midpoints, with cell-averaged values
// near the singular cell and the exact average at the singular cell itself.
class SingularConv {
  public:
    // 1/(pi z): the Cauchy kernel. Its singular-cell average is 0 by
    // antisymmetry.
    static SingularConv cauchy(const GridSpec& spec);
    // 1/|z|: the Riesz kernel; singular-cell average 4 ln(1+sqrt 2)/h.
    static SingularConv riesz(const GridSpec& spec);

    ~SingularConv();
    SingularConv(SingularConv&&) noexcept;
    SingularConv& operator=(SingularConv&&) noexcept;
    SingularConv(const SingularConv&) = delete;

    const GridSpec& spec() const { return spec_; }

    // w(x_i) = h^2 sum_j K(x_i - xi_j) f(xi_j), per complex channel.
    // Input Complex/ComplexVector; same shape out.
    GridField apply(const GridField& f) const;
    // Real input |f|-style; returns a real scalar field (kernel must be
    // real, i.e. the Riesz build).
    GridField apply_real(const GridField& f) const;

  private:
    SingularConv() = default;
    static SingularConv build(const GridSpec& spec, cplx (*kernel)(double, double),
                              cplx center_avg, bool real_kernel);
    struct Impl;
    GridSpec spec_;
    std::unique_ptr<Impl> impl_;
};

// Unpadded circular disk-sum scan: for a fixed real cell function g,
// sums(r)(x) = sum over cells y with |y - x| <= r of g(y). Valid at centers
// whose ball stays inside the grid (callers restrict to admissible centers;
// wraparound cannot reach them).
class DiskScan {
  public:
    explicit DiskScan(const GridField& g);
    ~DiskScan();
    DiskScan(DiskScan&&) noexcept;
    DiskScan(const DiskScan&) = delete;

    GridField sums(double radius) const;
    // Replace the data field, keeping the grid layout (reuses plans).
    void reset_data(const GridField& g);

  private:
    struct Impl;
    GridSpec spec_;
    std::unique_ptr<Impl> impl_;
};

// Zero-Neumann Poisson solve on the cell-centered grid via DCT-II:
// returns the zero-mean theta with  Lap_N theta = rhs - mean(rhs), where
// Lap_N is the compact 5-point Laplacian with mirror ghosts.
GridField solve_neumann_poisson(const GridField& rhs);

// Applies the same mirror-ghost 5-point operator (for residual checks).
GridField apply_neumann_laplacian(const GridField& theta);

} // namespace nsk
