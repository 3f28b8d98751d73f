#pragma once

// Direct solver for (alpha I + beta L) phi = r on the periodic channel:
// real FFT in x, one tridiagonal solve in y per wavenumber. L is the
// five-point Laplacian with homogeneous wall conditions of the given kind.
// Also a preconditioned conjugate-gradient driver for variable-coefficient
// problems, preconditioned by this solver.

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "oblimit/errors.hpp"
#include "oblimit/grid.hpp"

namespace oblimit {

enum class WallCondition {
    cell_dirichlet,  ///< cell-centred unknowns, phi = 0 on the wall via ghost cells
    cell_neumann,    ///< cell-centred unknowns, zero normal derivative
    node_dirichlet,  ///< wall-node unknowns (w), rows 0 and ny fixed at 0
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

class ChannelSolver {
public:
    ChannelSolver(const Grid& g, WallCondition bc) : grid_(g), bc_(bc) {
        g.validate();
        rows_ = bc == WallCondition::node_dirichlet ? g.ny - 1 : g.ny;
        modes_ = g.nx / 2 + 1;
        real_ = static_cast<double*>(fftw_malloc(sizeof(double) * std::size_t(rows_) * g.nx));
        spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * std::size_t(rows_) * modes_));
        if (!real_ || !spec_) throw Error("memory", "ChannelSolver: fftw_malloc failed");
        int n[1] = {g.nx};
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_many_dft_r2c(1, n, rows_, real_, nullptr, 1, g.nx, spec_, nullptr, 1, modes_,
                                          FFTW_ESTIMATE);
        backward_ = fftw_plan_many_dft_c2r(1, n, rows_, spec_, nullptr, 1, modes_, real_, nullptr, 1, g.nx,
                                           FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw Error("fftw", "ChannelSolver: FFTW planning failed");
        eig_.resize(modes_);
        const double dx = g.dx();
        for (int k = 0; k < modes_; ++k) {
            const double s = std::sin(std::numbers::pi * k / g.nx);
            eig_[k] = -4.0 * s * s / (dx * dx);
        }
        work_c_.resize(rows_);
        work_rhs_.resize(rows_);
    }

    ChannelSolver(const ChannelSolver&) = delete;
    ChannelSolver& operator=(const ChannelSolver&) = delete;

    ~ChannelSolver() {
        {
            std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
            if (forward_) fftw_destroy_plan(forward_);
            if (backward_) fftw_destroy_plan(backward_);
        }
        fftw_free(real_);
        fftw_free(spec_);
    }

    const Grid& grid() const { return grid_; }
    WallCondition wall_condition() const { return bc_; }

    /// Solves (alpha I + beta L) phi = rhs. For a singular Neumann problem
    /// (alpha = 0) the rhs mean is removed and the returned phi has zero mean.
    void solve(double alpha, double beta, const Field2D& rhs, Field2D& phi) {
        const int nx = grid_.nx;
        const int off = bc_ == WallCondition::node_dirichlet ? 1 : 0;
        const int expect_rows = bc_ == WallCondition::node_dirichlet ? grid_.ny + 1 : grid_.ny;
        if (rhs.nx() != nx || rhs.ny() != expect_rows) throw ParameterError("ChannelSolver: rhs shape mismatch");
        if (!phi.same_shape(rhs)) phi = Field2D(nx, expect_rows);
        const bool singular = alpha == 0.0 && bc_ == WallCondition::cell_neumann;

        double shift = 0;
        if (singular) shift = rhs.mean();
        for (int j = 0; j < rows_; ++j)
            for (int i = 0; i < nx; ++i) real_[std::size_t(j) * nx + i] = rhs(i, j + off) - shift;
        fftw_execute(forward_);

        const double dy2 = grid_.dy() * grid_.dy();
        const double off_diag = beta / dy2;
        const double wall_diag = bc_ == WallCondition::cell_dirichlet ? -3.0 : (bc_ == WallCondition::cell_neumann ? -1.0 : -2.0);
        for (int k = 0; k < modes_; ++k) {
            const double centre = alpha + beta * (eig_[k] - 2.0 / dy2);
            const double edge = alpha + beta * (eig_[k] + wall_diag / dy2);
            for (int j = 0; j < rows_; ++j) {
                const fftw_complex& z = spec_[std::size_t(j) * modes_ + k];
                work_rhs_[j] = {z[0], z[1]};
            }
            const bool pin = singular && k == 0;
            // Thomas algorithm with constant off-diagonals
            auto diag = [&](int j) { return (j == 0 || j == rows_ - 1) ? edge : centre; };
            double b0 = diag(0);
            double c0 = off_diag;
            if (pin) {
                b0 = 1.0;
                c0 = 0.0;
                work_rhs_[0] = 0.0;
            }
            if (rows_ == 1) {
                work_rhs_[0] /= b0;
            } else {
                work_c_[0] = c0 / b0;
                work_rhs_[0] /= b0;
                for (int j = 1; j < rows_; ++j) {
                    const double denom = diag(j) - off_diag * work_c_[j - 1];
                    work_c_[j] = off_diag / denom;
                    work_rhs_[j] = (work_rhs_[j] - off_diag * work_rhs_[j - 1]) / denom;
                }
                for (int j = rows_ - 2; j >= 0; --j) work_rhs_[j] -= work_c_[j] * work_rhs_[j + 1];
            }
            for (int j = 0; j < rows_; ++j) {
                fftw_complex& z = spec_[std::size_t(j) * modes_ + k];
                z[0] = work_rhs_[j].real();
                z[1] = work_rhs_[j].imag();
            }
        }
        fftw_execute(backward_);
        const double norm = 1.0 / nx;
        for (int j = 0; j < rows_; ++j)
            for (int i = 0; i < nx; ++i) phi(i, j + off) = real_[std::size_t(j) * nx + i] * norm;
        if (bc_ == WallCondition::node_dirichlet) {
            for (int i = 0; i < nx; ++i) {
                phi(i, 0) = 0.0;
                phi(i, grid_.ny) = 0.0;
            }
        }
        if (singular) {
            const double m = phi.mean();
            for (std::size_t k = 0; k < phi.size(); ++k) phi[k] -= m;
        }
    }

private:
    Grid grid_;
    WallCondition bc_;
    int rows_{0};
    int modes_{0};
    double* real_{nullptr};
    fftw_complex* spec_{nullptr};
    fftw_plan forward_{nullptr};
    fftw_plan backward_{nullptr};
    std::vector<double> eig_;
    std::vector<double> work_c_;
    std::vector<std::complex<double>> work_rhs_;
};

struct PcgResult {
    int iterations{0};
    double relative_residual{0};
};

inline double dot(const Field2D& a, const Field2D& b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

/// Preconditioned CG for a symmetric positive definite operator. `x` holds
/// the initial guess on entry. Throws ConvergenceError past `max_iter`.
template <class Op, class Prec>
PcgResult pcg(Op&& apply, Prec&& precondition, const Field2D& b, Field2D& x, double rel_tol, int max_iter) {
    Field2D r = b;
    Field2D ax(b.nx(), b.ny());
    apply(x, ax);
    r -= ax;
    const double bnorm = std::sqrt(dot(b, b));
    const double scale = bnorm > 0 ? bnorm : 1.0;
    double rnorm = std::sqrt(dot(r, r));
    if (rnorm <= rel_tol * scale) return {0, rnorm / scale};
    Field2D z(b.nx(), b.ny());
    precondition(r, z);
    Field2D d = z;
    double rz = dot(r, z);
    Field2D ad(b.nx(), b.ny());
    for (int it = 1; it <= max_iter; ++it) {
        apply(d, ad);
        const double dad = dot(d, ad);
        if (!(dad > 0)) throw ConvergenceError("pcg: operator not positive definite along search direction", it, rnorm / scale);
        const double step = rz / dad;
        x.axpy(step, d);
        r.axpy(-step, ad);
        rnorm = std::sqrt(dot(r, r));
        if (!std::isfinite(rnorm)) throw ConvergenceError("pcg: residual is not finite", it, rnorm);
        if (rnorm <= rel_tol * scale) return {it, rnorm / scale};
        precondition(r, z);
        const double rz_new = dot(r, z);
        const double mix = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = z[k] + mix * d[k];
    }
    throw ConvergenceError("pcg: no convergence within " + std::to_string(max_iter) + " iterations", max_iter,
                           rnorm / scale);
}

}  // namespace oblimit
