#pragma once

// Time integration of three nondimensional systems on the periodic channel
// (periodic in x, no-slip walls at y = 0, 1, theta = +1/2 at the bottom and
// -1/2 at the top, body-force potential f = -y):
//
//   ob         div v = 0,
//              v_t + (v.grad)v - Re_mu^-1 div D + grad p = (1 - theta) grad f,
//              c0 theta-dot = (Pr Re_mu)^-1 lap theta
//   expansion  same, with A (v-dot - Re_mu^-1 div D) + grad p = (1 - A theta) grad f
//   full       the variable-coefficient system with the example coefficients
//
// Each step is a two-stage Heun scheme: explicit advection and forcing,
// Crank-Nicolson for the constant-coefficient diffusion, and an incremental
// pressure projection after every stage. The full system writes
// p = f/gamma + A q and enforces its mass constraint through a
// variable-coefficient pressure equation solved by PCG.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "oblimit/channel_solver.hpp"
#include "oblimit/coefficients.hpp"
#include "oblimit/errors.hpp"
#include "oblimit/grid.hpp"
#include "oblimit/nondim.hpp"
#include "oblimit/operators.hpp"

namespace oblimit {

enum class SystemKind { ob, expansion, full };

inline std::string to_string(SystemKind k) {
    switch (k) {
        case SystemKind::ob: return "ob";
        case SystemKind::expansion: return "expansion";
        case SystemKind::full: return "full";
    }
    return "?";
}

inline SystemKind system_from_string(const std::string& s) {
    if (s == "ob") return SystemKind::ob;
    if (s == "expansion") return SystemKind::expansion;
    if (s == "full") return SystemKind::full;
    throw ParameterError("unknown system '" + s + "' (expected ob, expansion or full)");
}

enum class AdvectionScheme { central, upwind };

/// Additive source terms at one time, in the form the step adds them:
///   u, w     momentum (full system: multiplied by 1/R like the other forces)
///   theta    temperature (ob/expansion: added to theta_t; full: to C theta-dot)
///   mass     added to the right side of the full-system mass constraint
struct SourceTerms {
    Field2D u, w, theta, mass;

    explicit SourceTerms(const Grid& g) : u(make_u(g)), w(make_w(g)), theta(make_scalar(g)), mass(make_scalar(g)) {}
};

using SourceFunction = std::function<void(double t, SourceTerms& out)>;

struct ProblemSetup {
    Grid grid{64, 64, 1.0};
    nondim::DimensionlessGroups groups;
    double theta_bottom{0.5};
    double theta_top{-0.5};
    double dt{1e-3};
    double t_end{0.5};
    AdvectionScheme advection{AdvectionScheme::central};
    SourceFunction sources;  ///< optional, e.g. manufactured solutions
    double pcg_tol{1e-10};
    int pcg_max_iter{500};
    double cfl_limit{1.0};

    double nu() const { return 0.5 / groups.re_mu; }
    double kappa() const { return 1.0 / (groups.pr * groups.re_mu); }
    /// OB/expansion temperature diffusivity (Pr Re_mu c0)^-1
    double kappa_ob() const { return kappa() / groups.c0; }
    double grad_div_coefficient() const { return nu() + groups.inv_re_lambda(); }
    ops::WallValues theta_walls() const { return {theta_bottom, theta_top}; }

    nondim::ExampleCoefficients coefficients() const {
        return nondim::ExampleCoefficients::make(groups.A, groups.B, groups.theta_r, groups.c0);
    }

    /// Construction-time checks: positive dt, theta + theta_r > 0 between the
    /// wall values, and the parameter ranges each system needs.
    void validate(SystemKind kind) const {
        grid.validate();
        groups.validate();
        if (!(dt > 0) || !std::isfinite(dt)) throw ParameterError("ProblemSetup: dt must be finite and > 0");
        if (!(t_end >= 0)) throw ParameterError("ProblemSetup: t_end must be >= 0");
        if (!(std::min(theta_bottom, theta_top) + groups.theta_r > 0))
            throw DomainError("ProblemSetup: theta + theta_r > 0 violated at the wall values");
        if (kind == SystemKind::expansion && !(groups.A > 0))
            throw ParameterError("ProblemSetup: the expansion system needs A > 0");
        if (kind == SystemKind::full) {
            if (!(groups.A > 0) || !(groups.B > 0))
                throw ParameterError("ProblemSetup: the full system needs A > 0 and B > 0");
        }
    }
};

/// dt = 0.4 min(dx, dy) / max(|v|_inf, 1), capped by 0.25 h^2 / nu_explicit.
inline double auto_dt(const Grid& g, double vmax, double nu_explicit = 0.0) {
    const double h = std::min(g.dx(), g.dy());
    double dt = 0.4 * h / std::max(vmax, 1.0);
    if (nu_explicit > 0) dt = std::min(dt, 0.25 * h * h / nu_explicit);
    return dt;
}

inline double max_speed(const FieldState& s) { return std::max(s.u.max_abs(), s.w.max_abs()); }

struct Diagnostics {
    double t{0};
    double div_norm{0};
    double kinetic_energy{0};
    double theta_min{0};
    double theta_max{0};
    double p_mean{0};
};

inline Diagnostics diagnostics(const FieldState& s) {
    const Grid& g = s.grid;
    Diagnostics d;
    d.t = s.t;
    Field2D div = make_scalar(g);
    ops::divergence(g, s.u, s.w, div);
    d.div_norm = ops::l2_centre(g, div);
    const double uu = ops::l2_u(g, s.u), ww = ops::l2_w(g, s.w);
    d.kinetic_energy = 0.5 * (uu * uu + ww * ww);
    d.theta_min = std::numeric_limits<double>::infinity();
    d.theta_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.theta.size(); ++k) {
        d.theta_min = std::min(d.theta_min, s.theta[k]);
        d.theta_max = std::max(d.theta_max, s.theta[k]);
    }
    d.p_mean = s.p.mean();
    return d;
}

/// Algebraic residuals of the last full-system step, in discrete L2.
struct StepReport {
    int pcg_iterations{0};
    double mass_residual{0};
    double momentum_residual{0};
    double energy_residual{0};
};

/// Owns the transforms and work arrays for one ProblemSetup. Not thread-safe;
/// use one Stepper per thread.
class Stepper {
public:
    explicit Stepper(ProblemSetup setup, SystemKind kind = SystemKind::ob)
        : setup_(std::move(setup)),
          g_(setup_.grid),
          solve_u_(g_, WallCondition::cell_dirichlet),
          solve_w_(g_, WallCondition::node_dirichlet),
          solve_theta_(g_, WallCondition::cell_dirichlet),
          solve_p_(g_, WallCondition::cell_neumann) {
        setup_.validate(kind);
    }

    const ProblemSetup& setup() const { return setup_; }
    const StepReport& last_report() const { return report_; }

    /// f = -y at cell centres.
    Field2D body_potential() const {
        Field2D f = make_scalar(g_);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) f(i, j) = -g_.yc(j);
        return f;
    }

    FieldState ob_step(const FieldState& s) {
        check_state(s);
        FieldState out = s;
        incompressible_step(out, -1.0);
        finish(out);
        return out;
    }

    /// Advances the expansion system. Its pressure relates to the kernel
    /// pressure pi of the divided momentum equation by p = A pi + f.
    FieldState expansion_step(const FieldState& s) {
        check_state(s);
        const double A = setup_.groups.A;
        if (!(A > 0)) throw ParameterError("expansion_step: A must be > 0");
        const Field2D f = body_potential();
        FieldState out = s;
        for (std::size_t k = 0; k < out.p.size(); ++k) out.p[k] = (s.p[k] - f[k]) / A;
        incompressible_step(out, 0.0);
        for (std::size_t k = 0; k < out.p.size(); ++k) out.p[k] = A * out.p[k] + f[k];
        finish(out);
        return out;
    }

    FieldState full_step(const FieldState& s) {
        check_state(s);
        if (!s.has_full_state()) throw ParameterError("full_step: state lacks q; call initialize_full first");
        FieldState out = s;
        full_kernel(out);
        finish(out);
        return out;
    }

    FieldState step(SystemKind kind, const FieldState& s) {
        switch (kind) {
            case SystemKind::ob: return ob_step(s);
            case SystemKind::expansion: return expansion_step(s);
            case SystemKind::full: return full_step(s);
        }
        throw ParameterError("unknown system");
    }

    /// Pressure making the initial tendency divergence free (ob/expansion).
    void initialize_pressure(FieldState& s, SystemKind kind) {
        if (kind == SystemKind::full) {
            initialize_full(s);
            return;
        }
        const double buoyancy = kind == SystemKind::ob ? -1.0 : 0.0;
        Field2D eu = make_u(g_), ew = make_w(g_), et = make_scalar(g_);
        explicit_tendency(s.u, s.w, s.theta, s.t, buoyancy, eu, ew, et);
        Field2D lu = make_u(g_), lw = make_w(g_);
        ops::laplacian_dirichlet(g_, s.u, {}, lu);
        ops::laplacian_w(g_, s.w, lw);
        eu.axpy(setup_.nu(), lu);
        ew.axpy(setup_.nu(), lw);
        zero_wall_rows(ew);
        Field2D div = make_scalar(g_), pi = make_scalar(g_);
        ops::divergence(g_, eu, ew, div);
        solve_p_.solve(0.0, 1.0, div, pi);
        if (kind == SystemKind::ob) {
            s.p = pi;
        } else {
            const Field2D f = body_potential();
            for (std::size_t k = 0; k < pi.size(); ++k) s.p[k] = setup_.groups.A * pi[k] + f[k];
        }
    }

    /// Column-wise discrete hydrostatic q for the given temperature: the w
    /// equation at rest, gamma dq/dy = -(R - 1)/A on every interior face,
    /// with zero column means.
    Field2D hydrostatic_q(const Field2D& theta) const {
        const auto coef = setup_.coefficients();
        const double gamma = setup_.groups.gamma, A = setup_.groups.A, dy = g_.dy();
        Field2D q = make_scalar(g_);
        for (int i = 0; i < g_.nx; ++i) {
            for (int iter = 0; iter < 100; ++iter) {
                double change = 0;
                for (int j = 1; j < g_.ny; ++j) {
                    const double pf = -g_.yn(j) / gamma + A * 0.5 * (q(i, j) + q(i, j - 1));
                    const double tf = 0.5 * (theta(i, j) + theta(i, j - 1));
                    const double next = q(i, j - 1) - dy / gamma * coef.density_excess_over_A(pf, tf);
                    change = std::max(change, std::abs(next - q(i, j)));
                    q(i, j) = next;
                }
                double m = 0;
                for (int j = 0; j < g_.ny; ++j) m += q(i, j);
                m /= g_.ny;
                for (int j = 0; j < g_.ny; ++j) q(i, j) -= m;
                if (change < 1e-13 * (1 + std::abs(m))) break;
            }
        }
        return q;
    }

    /// Starts the full system from (v, theta): q starts hydrostatic and is
    /// then set by two restarted first steps, the rate history from the last one.
    void initialize_full(FieldState& s) {
        s.ensure_full_state();
        s.q = hydrostatic_q(s.theta);
        s.q_rate.fill(0.0);
        s.q_rate_prev.fill(0.0);
        const double dt = setup_.dt;
        for (int pass = 0; pass < 2; ++pass) {
            FieldState trial = s;
            trial.p = pressure_from_q(trial.q);
            full_kernel(trial);
            Field2D rate = trial.q;
            rate -= s.q;
            rate *= 1.0 / dt;
            s.q = trial.q;
            s.q_rate = rate;
            s.q_rate_prev = rate;
        }
        s.p = pressure_from_q(s.q);
    }

    Field2D pressure_from_q(const Field2D& q) const {
        const double gamma = setup_.groups.gamma, A = setup_.groups.A;
        Field2D p = make_scalar(g_);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) p(i, j) = -g_.yc(j) / gamma + A * q(i, j);
        return p;
    }

    Field2D q_from_pressure(const Field2D& p) const {
        const double gamma = setup_.groups.gamma, A = setup_.groups.A;
        Field2D q = make_scalar(g_);
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) q(i, j) = (p(i, j) + g_.yc(j) / gamma) / A;
        return q;
    }

    double cfl(const FieldState& s) const {
        double worst = 0;
        for (int j = 0; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i)
                worst = std::max(worst, std::abs(ops::u_at_centre(g_, s.u, i, j)) / g_.dx() +
                                            std::abs(ops::w_at_centre(s.w, i, j)) / g_.dy());
        return worst * setup_.dt;
    }

private:
    void check_state(const FieldState& s) const {
        if (s.grid != g_) throw ParameterError("step: state grid differs from the setup grid");
        if (!s.all_finite()) throw StabilityError("step: state contains non-finite values");
        const double c = cfl(s);
        if (c > setup_.cfl_limit)
            throw StabilityError("step: CFL number " + std::to_string(c) + " exceeds " + std::to_string(setup_.cfl_limit));
    }

    void finish(FieldState& s) const {
        s.t += setup_.dt;
        if (!s.all_finite()) throw StabilityError("step: non-finite values after the update");
    }

    static void zero_wall_rows(Field2D& w) {
        const int top = w.ny() - 1;
        for (int i = 0; i < w.nx(); ++i) {
            w(i, 0) = 0;
            w(i, top) = 0;
        }
    }

    // -- ob / expansion ------------------------------------------------------

    /// Explicit tendencies: -(v.grad)v + buoyancy + sources for velocity,
    /// -v.grad theta + sources for theta. The w forcing is theta + buoyancy
    /// (ob: (1 - theta) grad f = (0, theta - 1); expansion: -theta grad f).
    void explicit_tendency(const Field2D& u, const Field2D& w, const Field2D& theta, double t, double buoyancy,
                           Field2D& eu, Field2D& ew, Field2D& et) {
        ops::advect_u(g_, u, w, eu);
        ops::advect_w(g_, u, w, ew);
        eu *= -1.0;
        ew *= -1.0;
        for (int j = 1; j < g_.ny; ++j)
            for (int i = 0; i < g_.nx; ++i) ew(i, j) += 0.5 * (theta(i, j) + theta(i, j - 1)) + buoyancy;
        if (setup_.advection == AdvectionScheme::upwind)
            ops::advect_scalar_upwind(g_, u, w, theta, setup_.theta_walls(), et);
        else
            ops::advect_scalar(g_, u, w, theta, setup_.theta_walls(), et);
        et *= -1.0;
        if (setup_.sources) {
            SourceTerms src(g_);
            setup_.sources(t, src);
            eu += src.u;
            ew += src.w;
            et += src.theta;
        }
        zero_wall_rows(ew);
    }

    /// Crank-Nicolson velocity predictor: (I - c L) v* = v + dt rhs + c L v.
    void velocity_predictor(const Field2D& u, const Field2D& w, const Field2D& ru, const Field2D& rw, double nu,
                            Field2D& us, Field2D& ws, double* residual = nullptr) {
        const double dt = setup_.dt;
        const double c = 0.5 * dt * nu;
        Field2D lu = make_u(g_), lw = make_w(g_);
        ops::laplacian_dirichlet(g_, u, {}, lu);
        ops::laplacian_w(g_, w, lw);
        Field2D bu = u, bw = w;
        bu.axpy(dt, ru);
        bu.axpy(c, lu);
        bw.axpy(dt, rw);
        bw.axpy(c, lw);
        zero_wall_rows(bw);
        solve_u_.solve(1.0, -c, bu, us);
        solve_w_.solve(1.0, -c, bw, ws);
        if (residual) {
            ops::laplacian_dirichlet(g_, us, {}, lu);
            ops::laplacian_w(g_, ws, lw);
            Field2D eu = us, ew = ws;
            eu.axpy(-c, lu);
            eu -= bu;
            ew.axpy(-c, lw);
            ew -= bw;
            zero_wall_rows(ew);
            *residual = std::hypot(ops::l2_u(g_, eu), ops::l2_w(g_, ew));
        }
    }

    /// Crank-Nicolson temperature update with the Dirichlet wall values.
    void theta_cn(const Field2D& theta, const Field2D& rhs, double kappa, Field2D& out, double* residual = nullptr) {
        const double dt = setup_.dt;
        const double c = 0.5 * dt * kappa;
        Field2D lap = make_scalar(g_), wall = make_scalar(g_), zero = make_scalar(g_);
        ops::laplacian_dirichlet(g_, theta, setup_.theta_walls(), lap);
        ops::laplacian_dirichlet(g_, zero, setup_.theta_walls(), wall);
        Field2D b = theta;
        b.axpy(dt, rhs);
        b.axpy(c, lap);
        b.axpy(c, wall);
        solve_theta_.solve(1.0, -c, b, out);
        if (residual) {
            ops::laplacian_dirichlet(g_, out, {}, lap);
            Field2D e = out;
            e.axpy(-c, lap);
            e -= b;
            *residual = ops::l2_centre(g_, e);
        }
    }

    /// Backward-Euler temperature update (monotone path).
    void theta_implicit_euler(const Field2D& rhs_state, double kappa, Field2D& out) {
        const double dt = setup_.dt;
        Field2D wall = make_scalar(g_), zero = make_scalar(g_);
        ops::laplacian_dirichlet(g_, zero, setup_.theta_walls(), wall);
        Field2D b = rhs_state;
        b.axpy(dt * kappa, wall);
        solve_theta_.solve(1.0, -dt * kappa, b, out);
    }

    /// Projects (us, ws) onto discretely divergence-free fields; returns phi
    /// with v = v* - dt grad phi.
    void project(Field2D& us, Field2D& ws, Field2D& phi) {
        const double dt = setup_.dt;
        Field2D div = make_scalar(g_);
        ops::divergence(g_, us, ws, div);
        div *= 1.0 / dt;
        solve_p_.solve(0.0, 1.0, div, phi);
        Field2D gx = make_u(g_), gy = make_w(g_);
        ops::grad_x(g_, phi, gx);
        ops::grad_y(g_, phi, gy);
        us.axpy(-dt, gx);
        ws.axpy(-dt, gy);
        zero_wall_rows(ws);
    }

    /// One Heun step of the incompressible kernel; s.p holds the kernel pressure.
    void incompressible_step(FieldState& s, double buoyancy) {
        const double dt = setup_.dt, nu = setup_.nu(), kappa = setup_.kappa_ob();
        const bool monotone = setup_.advection == AdvectionScheme::upwind;
        Field2D eu0 = make_u(g_), ew0 = make_w(g_), et0 = make_scalar(g_);
        explicit_tendency(s.u, s.w, s.theta, s.t, buoyancy, eu0, ew0, et0);

        Field2D gx = make_u(g_), gy = make_w(g_);
        ops::grad_x(g_, s.p, gx);
        ops::grad_y(g_, s.p, gy);
        Field2D ru = eu0 - gx, rw = ew0 - gy;
        Field2D u1 = make_u(g_), w1 = make_w(g_), th1 = make_scalar(g_), phi = make_scalar(g_);
        velocity_predictor(s.u, s.w, ru, rw, nu, u1, w1);
        if (monotone) {
            Field2D b = s.theta;
            b.axpy(dt, et0);
            theta_implicit_euler(b, kappa, th1);
        } else {
            theta_cn(s.theta, et0, kappa, th1);
        }
        project(u1, w1, phi);
        Field2D p1 = s.p + phi;

        Field2D eu1 = make_u(g_), ew1 = make_w(g_), et1 = make_scalar(g_);
        explicit_tendency(u1, w1, th1, s.t + dt, buoyancy, eu1, ew1, et1);
        ops::grad_x(g_, p1, gx);
        ops::grad_y(g_, p1, gy);
        for (std::size_t k = 0; k < ru.size(); ++k) ru[k] = 0.5 * (eu0[k] + eu1[k]) - gx[k];
        for (std::size_t k = 0; k < rw.size(); ++k) rw[k] = 0.5 * (ew0[k] + ew1[k]) - gy[k];
        Field2D u2 = make_u(g_), w2 = make_w(g_), th2 = make_scalar(g_);
        velocity_predictor(s.u, s.w, ru, rw, nu, u2, w2);
        if (monotone) {
            Field2D b = th1;
            b.axpy(dt, et1);
            theta_implicit_euler(b, kappa, th2);
            for (std::size_t k = 0; k < th2.size(); ++k) th2[k] = 0.5 * (s.theta[k] + th2[k]);
        } else {
            Field2D et = et0;
            et += et1;
            et *= 0.5;
            theta_cn(s.theta, et, kappa, th2);
        }
        project(u2, w2, phi);
        s.u = std::move(u2);
        s.w = std::move(w2);
        s.theta = std::move(th2);
        s.p = p1 + phi;
    }

    // -- full system ---------------------------------------------------------
    //
    // Momentum and energy are advanced in their weighted form
    //   R (v_t + (v.grad)v) = nu lap v + nu' grad div v - gamma grad q - ((R - 1)/A) e_y + s_v
    //   C (theta_t + v.grad theta) = kappa lap theta + (theta + theta_r)(A/N) p-dot + A diss + s_E
    // with the diffusion Crank-Nicolson and the weights frozen per stage, so
    // each implicit solve is (W - c L) x = b with W > 0, done by PCG.

    struct FullTendency {
        Field2D fu, fw, g;  // weighted explicit forces (no nu lap v, no grad q, no kappa lap theta)
        Field2D r_u, r_w;  // R on faces
        Field2D cap;  // C at centres
        Field2D mass_rhs;  // S: right side of the mass constraint without the q_t term
        Field2D compress;  // A beta_s at centres, the q_t coefficient
    };

    FullTendency full_tendency(const Field2D& u, const Field2D& w, const Field2D& theta, const Field2D& q, double t,
                               const Field2D& q_rate) {
        const auto& gr = setup_.groups;
        const auto coef = setup_.coefficients();
        const double A = gr.A, B = gr.B, gamma = gr.gamma, nu_gd = setup_.grad_div_coefficient();
        const double kappa = setup_.kappa();
        const double inv_mu = 1.0 / (gamma * gr.re_mu), inv_lam = gr.inv_re_lambda() / gamma;

        FullTendency out{make_u(g_), make_w(g_), make_scalar(g_), make_u(g_), make_w(g_),
                         make_scalar(g_), make_scalar(g_), make_scalar(g_)};
        const Field2D p = pressure_from_q(q);
        for (std::size_t k = 0; k < p.size(); ++k) coef.require_admissible(p[k], theta[k]);

        SourceTerms src(g_);
        if (setup_.sources) setup_.sources(t, src);

        Field2D lap_t = make_scalar(g_), adv_t = make_scalar(g_), adv_q = make_scalar(g_), div = make_scalar(g_),
                diss = make_scalar(g_);
        ops::laplacian_dirichlet(g_, theta, setup_.theta_walls(), lap_t);
        ops::advect_scalar(g_, u, w, theta, setup_.theta_walls(), adv_t);
        ops::advect_scalar_free(g_, u, w, q, adv_q);
        ops::divergence(g_, u, w, div);
        ops::strain_squared(g_, u, w, diss);

        for (int j = 0; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const double pp = p(i, j), th = theta(i, j);
                const double n = coef.bracket(pp, th);
                const double cap = coef.heat_capacity(pp, th);
                const double wbar = ops::w_at_centre(w, i, j);
                const double pdot = A * (q_rate(i, j) + adv_q(i, j)) - wbar / gamma;
                const double dissipation = inv_mu * diss(i, j) + inv_lam * div(i, j) * div(i, j);
                const double heat = A * dissipation + src.theta(i, j);
                out.cap(i, j) = cap;
                out.g(i, j) = -cap * adv_t(i, j) + (th + gr.theta_r) * (A / n) * pdot + heat;
                // theta-dot eliminated with the energy equation: the p-dot
                // coefficient becomes the isentropic one
                const double beta_s = B / n - (A / n) * (A / n) * (th + gr.theta_r) / cap;
                if (!(beta_s > 0)) throw_unstable(pp, th, beta_s);
                const double conductive = (kappa * lap_t(i, j) + heat) / cap;
                out.mass_rhs(i, j) =
                    (A / n) * conductive - beta_s * (A * adv_q(i, j) - wbar / gamma) + src.mass(i, j);
                out.compress(i, j) = A * beta_s;
            }
        }

        Field2D gdx = make_u(g_), gdy = make_w(g_);
        ops::advect_u(g_, u, w, out.fu);
        ops::advect_w(g_, u, w, out.fw);
        ops::grad_x(g_, div, gdx);
        ops::grad_y(g_, div, gdy);
        for (int j = 0; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const int im = g_.wrap(i - 1);
                const double r = coef.density(0.5 * (p(i, j) + p(im, j)), 0.5 * (theta(i, j) + theta(im, j)));
                out.r_u(i, j) = r;
                out.fu(i, j) = -r * out.fu(i, j) + nu_gd * gdx(i, j) + src.u(i, j);
            }
        }
        for (int i = 0; i < g_.nx; ++i) out.r_w(i, 0) = out.r_w(i, g_.ny) = 1.0;
        for (int j = 1; j < g_.ny; ++j) {
            for (int i = 0; i < g_.nx; ++i) {
                const double pf = 0.5 * (p(i, j) + p(i, j - 1)), tf = 0.5 * (theta(i, j) + theta(i, j - 1));
                out.r_w(i, j) = coef.density(pf, tf);
                // ((R - 1)/A) grad f with grad f = (0, -1)
                out.fw(i, j) = -out.r_w(i, j) * out.fw(i, j) + nu_gd * gdy(i, j) -
                               coef.density_excess_over_A(pf, tf) + src.w(i, j);
            }
        }
        zero_wall_rows(out.fw);
        return out;
    }

    [[noreturn]] static void throw_unstable(double p, double theta, double beta_s) {
        std::ostringstream os;
        os.precision(6);
        os << "isentropic compressibility " << beta_s << " <= 0 at (p=" << p << ", theta=" << theta
           << "): the model is thermodynamically unstable here; increase c0 or B";
        throw DomainError(os.str());
    }

    /// Solves (W - c L) x = b by PCG, L the Laplacian of the solver's wall
    /// condition; x holds the initial guess. Returns the relative residual.
    double weighted_solve(ChannelSolver& pre, const Field2D& weight, double c, const Field2D& b, Field2D& x,
                          int& iterations) {
        const bool nodes = pre.wall_condition() == WallCondition::node_dirichlet;
        Field2D lap(x.nx(), x.ny());
        auto apply = [&](const Field2D& v, Field2D& y) {
            if (nodes)
                ops::laplacian_w(g_, v, lap);
            else
                ops::laplacian_dirichlet(g_, v, {}, lap);
            for (std::size_t k = 0; k < y.size(); ++k) y[k] = weight[k] * v[k] - c * lap[k];
            if (nodes) {
                for (int i = 0; i < g_.nx; ++i) {
                    y(i, 0) = v(i, 0);
                    y(i, g_.ny) = v(i, g_.ny);
                }
            }
        };
        double wbar = 0;
        if (nodes) {
            for (int j = 1; j < g_.ny; ++j)
                for (int i = 0; i < g_.nx; ++i) wbar += weight(i, j);
            wbar /= double(g_.nx) * (g_.ny - 1);
        } else {
            wbar = weight.mean();
        }
        auto precondition = [&](const Field2D& r, Field2D& z) { pre.solve(wbar, -c, r, z); };
        const PcgResult res = pcg(apply, precondition, b, x, setup_.pcg_tol, setup_.pcg_max_iter);
        iterations += res.iterations;
        return res.relative_residual;
    }

    /// Solves -dt div((gamma/R) grad dq) + (D/dt) dq = rhs and corrects (us, ws).
    int full_projection(Field2D& us, Field2D& ws, const Field2D& r_u, const Field2D& r_w, const Field2D& compress,
                        const Field2D& rhs, Field2D& dq) {
        const double dt = setup_.dt, gamma = setup_.groups.gamma;
        Field2D cu = make_u(g_), cw = make_w(g_);
        for (std::size_t k = 0; k < cu.size(); ++k) cu[k] = dt * gamma / r_u[k];
        for (std::size_t k = 0; k < cw.size(); ++k) cw[k] = dt * gamma / r_w[k];
        Field2D diag = compress;
        diag *= 1.0 / dt;
        const double cbar = cu.mean(), dbar = diag.mean();

        Field2D gx = make_u(g_), gy = make_w(g_), div = make_scalar(g_);
        auto apply = [&](const Field2D& x, Field2D& y) {
            ops::grad_x(g_, x, gx);
            ops::grad_y(g_, x, gy);
            for (std::size_t k = 0; k < gx.size(); ++k) gx[k] *= cu[k];
            for (std::size_t k = 0; k < gy.size(); ++k) gy[k] *= cw[k];
            ops::divergence(g_, gx, gy, div);
            for (std::size_t k = 0; k < y.size(); ++k) y[k] = -div[k] + diag[k] * x[k];
        };
        auto precondition = [&](const Field2D& r, Field2D& z) { solve_p_.solve(dbar, -cbar, r, z); };
        dq.fill(0.0);
        const PcgResult res = pcg(apply, precondition, rhs, dq, setup_.pcg_tol, setup_.pcg_max_iter);
        ops::grad_x(g_, dq, gx);
        ops::grad_y(g_, dq, gy);
        for (std::size_t k = 0; k < gx.size(); ++k) us[k] -= cu[k] * gx[k];
        for (std::size_t k = 0; k < gy.size(); ++k) ws[k] -= cw[k] * gy[k];
        zero_wall_rows(ws);
        return res.iterations;
    }

    /// One implicit stage: weighted CN momentum and energy solves from the
    /// state s, given weights, explicit forces and the pressure variable q.
    void full_stage(const FieldState& s, const Field2D& r_u, const Field2D& r_w, const Field2D& cap,
                    const Field2D& fu, const Field2D& fw, const Field2D& g, const Field2D& q, Field2D& u_out,
                    Field2D& w_out, Field2D& th_out) {
        const double dt = setup_.dt, gamma = setup_.groups.gamma;
        const double c = 0.5 * dt * setup_.nu(), ct = 0.5 * dt * setup_.kappa();
        Field2D gx = make_u(g_), gy = make_w(g_), lu = make_u(g_), lw = make_w(g_);
        ops::grad_x(g_, q, gx);
        ops::grad_y(g_, q, gy);
        ops::laplacian_dirichlet(g_, s.u, {}, lu);
        ops::laplacian_w(g_, s.w, lw);
        Field2D bu = make_u(g_), bw = make_w(g_);
        for (std::size_t k = 0; k < bu.size(); ++k)
            bu[k] = r_u[k] * s.u[k] + dt * (fu[k] - gamma * gx[k]) + c * lu[k];
        for (std::size_t k = 0; k < bw.size(); ++k)
            bw[k] = r_w[k] * s.w[k] + dt * (fw[k] - gamma * gy[k]) + c * lw[k];
        zero_wall_rows(bw);
        u_out = s.u;
        w_out = s.w;
        report_.momentum_residual = std::max(weighted_solve(solve_u_, r_u, c, bu, u_out, report_.pcg_iterations),
                                             weighted_solve(solve_w_, r_w, c, bw, w_out, report_.pcg_iterations));

        Field2D lt = make_scalar(g_), wall = make_scalar(g_), zero = make_scalar(g_);
        ops::laplacian_dirichlet(g_, s.theta, setup_.theta_walls(), lt);
        ops::laplacian_dirichlet(g_, zero, setup_.theta_walls(), wall);
        Field2D bt = make_scalar(g_);
        for (std::size_t k = 0; k < bt.size(); ++k)
            bt[k] = cap[k] * s.theta[k] + dt * g[k] + ct * (lt[k] + wall[k]);
        th_out = s.theta;
        report_.energy_residual = weighted_solve(solve_theta_, cap, ct, bt, th_out, report_.pcg_iterations);
    }

    static Field2D average(const Field2D& a, const Field2D& b) {
        Field2D m = a;
        m += b;
        m *= 0.5;
        return m;
    }

    void full_kernel(FieldState& s) {
        const double dt = setup_.dt;
        report_ = {};
        // midpoint estimate of q_t from the two previous one-step rates
        Field2D rate = s.q_rate;
        rate *= 2.0;
        rate -= s.q_rate_prev;

        const FullTendency t0 = full_tendency(s.u, s.w, s.theta, s.q, s.t, rate);
        Field2D u1, w1, th1, dq = make_scalar(g_), div = make_scalar(g_);
        full_stage(s, t0.r_u, t0.r_w, t0.cap, t0.fu, t0.fw, t0.g, s.q, u1, w1, th1);
        ops::divergence(g_, u1, w1, div);
        Field2D rhs = t0.mass_rhs - div;
        report_.pcg_iterations += full_projection(u1, w1, t0.r_u, t0.r_w, t0.compress, rhs, dq);
        const Field2D q1 = s.q + dq;

        const FullTendency t1 = full_tendency(u1, w1, th1, q1, s.t + dt, rate);
        const Field2D r_u = average(t0.r_u, t1.r_u), r_w = average(t0.r_w, t1.r_w), cap = average(t0.cap, t1.cap);
        const Field2D fu = average(t0.fu, t1.fu), fw = average(t0.fw, t1.fw), g = average(t0.g, t1.g);
        Field2D u2, w2, th2;
        full_stage(s, r_u, r_w, cap, fu, fw, g, q1, u2, w2, th2);

        const Field2D compress = average(t0.compress, t1.compress), mass = average(t0.mass_rhs, t1.mass_rhs);
        ops::divergence(g_, u2, w2, div);
        for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = mass[k] - compress[k] / dt * (q1[k] - s.q[k]) - div[k];
        report_.pcg_iterations += full_projection(u2, w2, r_u, r_w, compress, rhs, dq);
        Field2D q2 = q1 + dq;

        // discrete mass constraint at the new level
        ops::divergence(g_, u2, w2, div);
        Field2D res = make_scalar(g_);
        for (std::size_t k = 0; k < res.size(); ++k) res[k] = div[k] + compress[k] / dt * (q2[k] - s.q[k]) - mass[k];
        report_.mass_residual = ops::l2_centre(g_, res);

        Field2D new_rate = q2;
        new_rate -= s.q;
        new_rate *= 1.0 / dt;
        s.q_rate_prev = std::move(s.q_rate);
        s.q_rate = std::move(new_rate);
        s.u = std::move(u2);
        s.w = std::move(w2);
        s.theta = std::move(th2);
        s.q = std::move(q2);
        s.p = pressure_from_q(s.q);
    }

    ProblemSetup setup_;
    Grid g_;
    ChannelSolver solve_u_, solve_w_, solve_theta_, solve_p_;
    StepReport report_;
};

/// Conduction state: v = 0, theta linear between the wall values, and the
/// matching hydrostatic pressure of the selected system.
inline FieldState conduction_state(const ProblemSetup& setup, SystemKind kind) {
    const Grid& g = setup.grid;
    FieldState s(g);
    const double tb = setup.theta_bottom, tt = setup.theta_top;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s.theta(i, j) = tb + (tt - tb) * g.yc(j);
    // ob: grad p = (theta - 1) e_y -> p = (tb - 1) y + (tt - tb) y^2 / 2
    Field2D pob = make_scalar(g);
    for (int j = 0; j < g.ny; ++j) {
        const double y = g.yc(j);
        for (int i = 0; i < g.nx; ++i) pob(i, j) = (tb - 1) * y + 0.5 * (tt - tb) * y * y;
    }
    const double m = pob.mean();
    for (std::size_t k = 0; k < pob.size(); ++k) pob[k] -= m;
    if (kind == SystemKind::ob) {
        s.p = pob;
    } else if (kind == SystemKind::expansion) {
        const double A = setup.groups.A;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s.p(i, j) = A * (pob(i, j) + g.yc(j)) - g.yc(j);
    }
    return s;
}

// Single-step conveniences; prefer a Stepper for repeated steps.
inline FieldState ob_step(const FieldState& s, const ProblemSetup& setup) { return Stepper(setup).ob_step(s); }
inline FieldState expansion_step(const FieldState& s, const ProblemSetup& setup) {
    return Stepper(setup, SystemKind::expansion).expansion_step(s);
}
inline FieldState full_step(const FieldState& s, const ProblemSetup& setup) {
    return Stepper(setup, SystemKind::full).full_step(s);
}

}  // namespace oblimit
