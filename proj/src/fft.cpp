#include "nsk/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>

#include "nsk/errors.hpp"
#include "nsk/parallel.hpp"

namespace nsk {
namespace {

// FFTW plan creation/destruction is not thread-safe; execution on distinct
// buffers is. All plans use FFTW_ESTIMATE so the chosen algorithm (and
// therefore the bitwise output) does not depend on measurement noise.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

struct PlanGuard {
    std::lock_guard<std::mutex> lock;
    PlanGuard() : lock(plan_mutex()) {}
};

constexpr double kSubsampleBand = 6.0; // cell-average the kernel within this many h of 0
constexpr int kSubsampleN = 16;

} // namespace

// ---------------------------------------------------------------------------
// SingularConv
// ---------------------------------------------------------------------------

struct SingularConv::Impl {
    int P = 0, Q = 0; // padded dims (2 nx, 2 ny)
    bool real_kernel = false;
    std::vector<cplx> khat;  // kernel spectrum, inverse normalization folded in
    std::vector<cplx> buf;   // shared work buffer (guarded by run_mutex)
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    mutable std::mutex run_mutex;

    ~Impl() {
        PlanGuard g;
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

namespace {

// Kernel value at spatial offset zeta (not the singular cell).
cplx cauchy_kernel(double x, double y) {
    const cplx z(x, y);
    return 1.0 / (M_PI * z);
}

cplx riesz_kernel(double x, double y) {
    return cplx(1.0 / std::hypot(x, y), 0.0);
}

} // namespace

SingularConv SingularConv::build(const GridSpec& spec, cplx (*k)(double, double),
                                 cplx center_avg, bool real_kernel) {
    spec.validate();
    if (static_cast<long long>(spec.nx) * spec.ny > (2048LL * 2048LL))
        throw StabilityError("singular convolution grid exceeds 2048x2048; window the field first");

    auto impl = std::make_unique<SingularConv::Impl>();
    impl->P = 2 * spec.nx;
    impl->Q = 2 * spec.ny;
    impl->real_kernel = real_kernel;
    const int P = impl->P, Q = impl->Q;
    const double h = spec.h();

    std::vector<cplx> table(static_cast<size_t>(P) * Q, cplx(0.0, 0.0));
    // Offsets dx in (-nx, nx), dy in (-ny, ny) map to unique padded indices,
    // so the circular convolution on the doubled grid is alias-free for
    // outputs in the original window.
    #pragma omp parallel for schedule(static)
    for (int dy = -spec.ny + 1; dy <= spec.ny - 1; ++dy) {
        for (int dx = -spec.nx + 1; dx <= spec.nx - 1; ++dx) {
            cplx v;
            if (dx == 0 && dy == 0) {
                v = center_avg;
            } else if (std::abs(dx) <= kSubsampleBand && std::abs(dy) <= kSubsampleBand) {
                // Cell-average over the offset cell; the kernel varies fast here.
                cplx acc(0.0, 0.0);
                for (int sy = 0; sy < kSubsampleN; ++sy)
                    for (int sx = 0; sx < kSubsampleN; ++sx) {
                        const double ox = (dx + (sx + 0.5) / kSubsampleN - 0.5) * h;
                        const double oy = (dy + (sy + 0.5) / kSubsampleN - 0.5) * h;
                        acc += k(ox, oy);
                    }
                v = acc / static_cast<double>(kSubsampleN * kSubsampleN);
            } else {
                v = k(dx * h, dy * h);
            }
            const int ix = (dx + P) % P;
            const int iy = (dy + Q) % Q;
            table[static_cast<size_t>(iy) * P + ix] = v * (h * h);
        }
    }

    impl->khat.resize(table.size());
    impl->buf.resize(table.size());
    {
        PlanGuard g;
        impl->fwd = fftw_plan_dft_2d(Q, P,
                                     reinterpret_cast<fftw_complex*>(impl->buf.data()),
                                     reinterpret_cast<fftw_complex*>(impl->buf.data()),
                                     FFTW_FORWARD, FFTW_ESTIMATE);
        impl->bwd = fftw_plan_dft_2d(Q, P,
                                     reinterpret_cast<fftw_complex*>(impl->buf.data()),
                                     reinterpret_cast<fftw_complex*>(impl->buf.data()),
                                     FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (!impl->fwd || !impl->bwd) throw StabilityError("fftw plan creation failed");

    std::memcpy(impl->buf.data(), table.data(), table.size() * sizeof(cplx));
    fftw_execute(impl->fwd);
    const double inv = 1.0 / (static_cast<double>(P) * Q);
    #pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(table.size()); ++i)
        impl->khat[i] = impl->buf[i] * inv;

    SingularConv conv;
    conv.spec_ = spec;
    conv.impl_ = std::move(impl);
    return conv;
}

SingularConv SingularConv::cauchy(const GridSpec& spec) {
    // Singular-cell average of 1/(pi z) over a centered square is 0 by the
    // antisymmetry z -> -z.
    return build(spec, cauchy_kernel, cplx(0.0, 0.0), false);
}

SingularConv SingularConv::riesz(const GridSpec& spec) {
    // Exact average of 1/|z| over the centered h-cell: 4 ln(1+sqrt 2)/h.
    const double avg = 4.0 * std::log(1.0 + std::sqrt(2.0)) / spec.h();
    return build(spec, riesz_kernel, cplx(avg, 0.0), true);
}

SingularConv::~SingularConv() = default;
SingularConv::SingularConv(SingularConv&&) noexcept = default;
SingularConv& SingularConv::operator=(SingularConv&&) noexcept = default;

GridField SingularConv::apply(const GridField& f) const {
    if (!kind_is_complex(f.kind()))
        throw UsageError("SingularConv::apply expects a complex field");
    if (!f.spec().same_layout(spec_))
        throw UsageError("SingularConv::apply: field layout does not match the prepared kernel");
    f.require_finite("SingularConv input");

    GridField out = (f.kind() == FieldKind::Complex)
                        ? GridField::complex_scalar(spec_)
                        : GridField::complex_vector(spec_, f.ncomp());
    const int nx = spec_.nx, ny = spec_.ny;
    const int P = impl_->P;

    std::lock_guard<std::mutex> run(impl_->run_mutex);
    for (int c = 0; c < f.ncomp(); ++c) {
        std::fill(impl_->buf.begin(), impl_->buf.end(), cplx(0.0, 0.0));
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                impl_->buf[static_cast<size_t>(j) * P + i] = f.cat(i, j, c);
        fftw_execute(impl_->fwd);
        #pragma omp parallel for schedule(static)
        for (long long k = 0; k < static_cast<long long>(impl_->buf.size()); ++k)
            impl_->buf[k] *= impl_->khat[k];
        fftw_execute(impl_->bwd);
        #pragma omp parallel for schedule(static)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                out.cset(i, j, c, impl_->buf[static_cast<size_t>(j) * P + i]);
    }
    return out;
}

GridField SingularConv::apply_real(const GridField& f) const {
    if (!impl_->real_kernel)
        throw UsageError("SingularConv::apply_real needs a real kernel build");
    if (f.kind() != FieldKind::Scalar)
        throw UsageError("SingularConv::apply_real expects a scalar field");
    GridField fc = GridField::complex_scalar(spec_);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec_.ny; ++j)
        for (int i = 0; i < spec_.nx; ++i)
            fc.cset(i, j, 0, cplx(f.at(i, j, 0), 0.0));
    GridField wc = apply(fc);
    GridField out = GridField::scalar(spec_);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec_.ny; ++j)
        for (int i = 0; i < spec_.nx; ++i)
            out.at(i, j, 0) = wc.cat(i, j, 0).real();
    return out;
}

// ---------------------------------------------------------------------------
// DiskScan
// ---------------------------------------------------------------------------

struct DiskScan::Impl {
    int nx = 0, ny = 0, nk = 0; // nk = nx/2 + 1 (r2c width)
    std::vector<double> real_buf;
    std::vector<cplx> spec_buf;
    std::vector<cplx> data_hat;
    fftw_plan fwd = nullptr; // real_buf -> spec_buf
    fftw_plan bwd = nullptr; // spec_buf -> real_buf
    mutable std::mutex run_mutex;

    ~Impl() {
        PlanGuard g;
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

DiskScan::DiskScan(const GridField& g) {
    if (g.ncomp() != 1 || g.kind() != FieldKind::Scalar)
        throw UsageError("DiskScan expects a scalar field");
    spec_ = g.spec();
    impl_ = std::make_unique<Impl>();
    impl_->nx = spec_.nx;
    impl_->ny = spec_.ny;
    impl_->nk = spec_.nx / 2 + 1;
    impl_->real_buf.resize(static_cast<size_t>(spec_.nx) * spec_.ny);
    impl_->spec_buf.resize(static_cast<size_t>(impl_->nk) * spec_.ny);
    impl_->data_hat.resize(impl_->spec_buf.size());
    {
        PlanGuard guard;
        impl_->fwd = fftw_plan_dft_r2c_2d(spec_.ny, spec_.nx, impl_->real_buf.data(),
                                          reinterpret_cast<fftw_complex*>(impl_->spec_buf.data()),
                                          FFTW_ESTIMATE);
        impl_->bwd = fftw_plan_dft_c2r_2d(spec_.ny, spec_.nx,
                                          reinterpret_cast<fftw_complex*>(impl_->spec_buf.data()),
                                          impl_->real_buf.data(), FFTW_ESTIMATE);
    }
    if (!impl_->fwd || !impl_->bwd) throw StabilityError("fftw plan creation failed");
    reset_data(g);
}

DiskScan::~DiskScan() = default;
DiskScan::DiskScan(DiskScan&&) noexcept = default;

void DiskScan::reset_data(const GridField& g) {
    if (!g.spec().same_layout(spec_))
        throw UsageError("DiskScan::reset_data: layout mismatch");
    g.require_finite("DiskScan input");
    std::lock_guard<std::mutex> run(impl_->run_mutex);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < spec_.ny; ++j)
        for (int i = 0; i < spec_.nx; ++i)
            impl_->real_buf[static_cast<size_t>(j) * spec_.nx + i] = g.at(i, j, 0);
    fftw_execute(impl_->fwd);
    std::memcpy(impl_->data_hat.data(), impl_->spec_buf.data(),
                impl_->spec_buf.size() * sizeof(cplx));
}

GridField DiskScan::sums(double radius) const {
    if (!(radius > 0.0)) throw UsageError("DiskScan::sums: radius must be positive");
    const int nx = spec_.nx, ny = spec_.ny;
    const double h = spec_.h();
    // Tiny tolerance so a cell center exactly on the rim counts stably.
    const double r2 = (radius + 1e-9 * h) * (radius + 1e-9 * h);

    std::lock_guard<std::mutex> run(impl_->run_mutex);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        const int wy = (j <= ny / 2) ? j : j - ny;
        const double oy = wy * h;
        for (int i = 0; i < nx; ++i) {
            const int wx = (i <= nx / 2) ? i : i - nx;
            const double ox = wx * h;
            impl_->real_buf[static_cast<size_t>(j) * nx + i] =
                (ox * ox + oy * oy <= r2) ? 1.0 : 0.0;
        }
    }
    fftw_execute(impl_->fwd);
    const double inv = 1.0 / (static_cast<double>(nx) * ny);
    // Disk mask is even, so correlation equals convolution.
    #pragma omp parallel for schedule(static)
    for (long long k = 0; k < static_cast<long long>(impl_->spec_buf.size()); ++k)
        impl_->spec_buf[k] = impl_->spec_buf[k] * impl_->data_hat[k] * inv;
    fftw_execute(impl_->bwd);

    GridField out = GridField::scalar(spec_);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            out.at(i, j, 0) = impl_->real_buf[static_cast<size_t>(j) * nx + i];
    return out;
}

// ---------------------------------------------------------------------------
// Neumann Poisson
// ---------------------------------------------------------------------------

GridField solve_neumann_poisson(const GridField& rhs) {
    if (rhs.kind() != FieldKind::Scalar)
        throw UsageError("solve_neumann_poisson expects a scalar field");
    rhs.require_finite("Poisson rhs");
    const GridSpec& spec = rhs.spec();
    const int nx = spec.nx, ny = spec.ny;
    const double h = spec.h();

    // Project out the mean: the zero-Neumann operator only reaches mean-free
    // right-hand sides.
    const double mean = integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
                            return rhs.at(i, j, 0);
                        }) /
                        (spec.width * spec.height);

    std::vector<double> buf(static_cast<size_t>(nx) * ny);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            buf[static_cast<size_t>(j) * nx + i] = rhs.at(i, j, 0) - mean;

    fftw_plan fwd, bwd;
    {
        PlanGuard g;
        fwd = fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), FFTW_REDFT10, FFTW_REDFT10,
                               FFTW_ESTIMATE);
        bwd = fftw_plan_r2r_2d(ny, nx, buf.data(), buf.data(), FFTW_REDFT01, FFTW_REDFT01,
                               FFTW_ESTIMATE);
    }
    if (!fwd || !bwd) throw StabilityError("fftw plan creation failed");
    fftw_execute(fwd);

    // Cosine modes diagonalize the mirror-ghost 5-point Laplacian:
    // eigenvalue (2 cos(pi k / n) - 2)/h^2 per direction.
    const double scale = 1.0 / (4.0 * static_cast<double>(nx) * ny); // REDFT01(REDFT10) = 4 nx ny id
    #pragma omp parallel for schedule(static)
    for (int ky = 0; ky < ny; ++ky) {
        const double ly = (2.0 * std::cos(M_PI * ky / ny) - 2.0) / (h * h);
        for (int kx = 0; kx < nx; ++kx) {
            const size_t idx = static_cast<size_t>(ky) * nx + kx;
            if (kx == 0 && ky == 0) {
                buf[idx] = 0.0; // constant mode: pinned by the zero-mean convention
                continue;
            }
            const double lx = (2.0 * std::cos(M_PI * kx / nx) - 2.0) / (h * h);
            buf[idx] *= scale / (lx + ly);
        }
    }
    fftw_execute(bwd);
    {
        PlanGuard g;
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }

    GridField theta = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            theta.at(i, j, 0) = buf[static_cast<size_t>(j) * nx + i];
    // Remove the roundoff-level mean left by the transform pair.
    const double tmean = integrate_cells(spec, Region::all(), [&](int i, int j, Point) {
                             return theta.at(i, j, 0);
                         }) /
                         (spec.width * spec.height);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            theta.at(i, j, 0) -= tmean;
    return theta;
}

GridField apply_neumann_laplacian(const GridField& theta) {
    if (theta.kind() != FieldKind::Scalar)
        throw UsageError("apply_neumann_laplacian expects a scalar field");
    const GridSpec& spec = theta.spec();
    const int nx = spec.nx, ny = spec.ny;
    const double ih2 = 1.0 / (spec.h() * spec.h());
    GridField out = GridField::scalar(spec);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            // Mirror ghosts: the boundary neighbor folds back onto the cell.
            const double c = theta.at(i, j, 0);
            const double w = theta.at(i > 0 ? i - 1 : 0, j, 0);
            const double e = theta.at(i < nx - 1 ? i + 1 : nx - 1, j, 0);
            const double s = theta.at(i, j > 0 ? j - 1 : 0, 0);
            const double n = theta.at(i, j < ny - 1 ? j + 1 : ny - 1, 0);
            out.at(i, j, 0) = (w + e + s + n - 4.0 * c) * ih2;
        }
    return out;
}

} // namespace nsk
