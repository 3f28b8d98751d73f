#pragma once

// Manufactured solutions for the three systems and convergence-order fits.
//
// The trigonometric family, with k = 2 pi / lx and T(t) = 1 + sin(2t)/2:
//   psi   = sin^2(pi y) sin(k x) T                 (u, w) = (psi_y, -psi_x)
//   chi   = sin(k x) (y (1 - y))^2 T               full system adds eps grad chi
//   theta = theta_b + (theta_t - theta_b) y + s sin(pi y) cos(k x) T
//   p     = c cos(k x) cos(pi y) T                 ob pressure, expansion kernel
//                                                  pressure and full-system q
// All velocities vanish on the walls and theta takes the wall values, so the
// sources are the only change to the discrete problem.

#include <cmath>
#include <numbers>
#include <vector>

#include "oblimit/errors.hpp"
#include "oblimit/grid.hpp"
#include "oblimit/jet.hpp"
#include "oblimit/solver.hpp"

namespace oblimit::mms {

enum class Shape {
    zero,        ///< v = 0, theta = 0, hydrostatic ob pressure p = f
    conduction,  ///< v = 0, theta linear between the wall values
    trig,
};

struct Manufactured {
    Shape shape{Shape::trig};
    double lx{1.0};
    double amp_v{0.5};
    double amp_theta{0.1};
    double amp_p{0.3};
    double eps_compress{0.2};  ///< compressible part, full system only
    double theta_bottom{0.5};
    double theta_top{-0.5};

    double k() const { return 2 * std::numbers::pi / lx; }

    static Jet time_factor(const Jet& t) { return 1 + 0.5 * sin(2 * t); }

    Jet u(const Jet& x, const Jet& y, const Jet& t, bool compressible) const {
        if (shape != Shape::trig) return 0.0;
        const double pi = std::numbers::pi;
        const Jet T = time_factor(t);
        Jet r = amp_v * pi * sin(2 * pi * y) * sin(k() * x) * T;
        if (compressible) {
            const Jet b = y * (1 - y);
            r += eps_compress * k() * cos(k() * x) * b * b * T;
        }
        return r;
    }

    Jet w(const Jet& x, const Jet& y, const Jet& t, bool compressible) const {
        if (shape != Shape::trig) return 0.0;
        const double pi = std::numbers::pi;
        const Jet T = time_factor(t);
        const Jet s = sin(pi * y);
        Jet r = -amp_v * k() * s * s * cos(k() * x) * T;
        if (compressible) r += eps_compress * sin(k() * x) * 2 * y * (1 - y) * (1 - 2 * y) * T;
        return r;
    }

    /// Stream function of the solenoidal part (for discretely div-free samples).
    double psi(double x, double y, double t) const {
        if (shape != Shape::trig) return 0.0;
        const double s = std::sin(std::numbers::pi * y);
        return amp_v * s * s * std::sin(k() * x) * (1 + 0.5 * std::sin(2 * t));
    }

    Jet theta(const Jet& x, const Jet& y, const Jet& t) const {
        if (shape == Shape::zero) return 0.0;
        Jet r = theta_bottom + (theta_top - theta_bottom) * y;
        if (shape == Shape::trig)
            r += amp_theta * sin(std::numbers::pi * y) * cos(k() * x) * time_factor(t);
        return r;
    }

    /// ob pressure; also the expansion kernel pressure (p - f)/A and the
    /// full-system q for the trig shape.
    Jet pressure(const Jet& x, const Jet& y, const Jet& t) const {
        switch (shape) {
            case Shape::zero: return -y;
            case Shape::conduction: {
                // grad p = (theta - 1) e_y
                const double tb = theta_bottom, tt = theta_top;
                return (tb - 1) * y + 0.5 * (tt - tb) * y * y;
            }
            case Shape::trig: break;
        }
        return amp_p * cos(k() * x) * cos(std::numbers::pi * y) * time_factor(t);
    }

    /// Throws ParameterError unless v = 0 and theta matches the setup wall
    /// values on both walls.
    void check_compatible(const ProblemSetup& setup) const {
        if (std::abs(lx - setup.grid.lx) > 1e-14 * lx)
            throw ParameterError("mms: manufactured period differs from the channel length");
        for (double xs : {0.0, 0.137, 0.5, 0.71}) {
            for (double ts : {0.0, 0.3}) {
                for (double yw : {0.0, 1.0}) {
                    const double x = xs * lx;
                    const double th = theta(x, yw, ts).v;
                    const double expect = yw == 0.0 ? setup.theta_bottom : setup.theta_top;
                    const double vmax = std::max(std::abs(u(x, yw, ts, true).v), std::abs(w(x, yw, ts, true).v));
                    if (vmax > 1e-12) throw ParameterError("mms: manufactured velocity does not vanish on the walls");
                    if (std::abs(th - expect) > 1e-12)
                        throw ParameterError("mms: manufactured theta does not match the wall values");
                }
            }
        }
    }
};

struct PointJets {
    Jet u, w, theta, p;
};

inline PointJets jets_at(const Manufactured& m, double x, double y, double t, bool compressible) {
    const Jet X = Jet::variable(x, 0), Y = Jet::variable(y, 1), T = Jet::variable(t, 2);
    return {m.u(X, Y, T, compressible), m.w(X, Y, T, compressible), m.theta(X, Y, T), m.pressure(X, Y, T)};
}

/// Pointwise residuals of the selected system at (x, y, t): the sources that
/// make the manufactured fields an exact solution, in the form SourceTerms
/// documents.
struct PointSource {
    double u{0}, w{0}, theta{0}, mass{0};
};

inline PointSource point_source(const Manufactured& m, SystemKind kind, const ProblemSetup& setup, double x, double y,
                                double t) {
    const bool full = kind == SystemKind::full;
    const PointJets f = jets_at(m, x, y, t, full);
    const Jet &u = f.u, &w = f.w, &th = f.theta;
    const double adv_u = u.v * u.dx() + w.v * u.dy();
    const double adv_w = u.v * w.dx() + w.v * w.dy();
    const double adv_t = u.v * th.dx() + w.v * th.dy();
    const double nu = setup.nu();
    PointSource s;
    if (!full) {
        // buoyancy on the w equation: ob theta - 1, expansion theta
        const double buoy = kind == SystemKind::ob ? th.v - 1 : th.v;
        s.u = u.dt() + adv_u - nu * u.lap() + f.p.dx();
        s.w = w.dt() + adv_w - nu * w.lap() + f.p.dy() - buoy;
        s.theta = th.dt() + adv_t - setup.kappa_ob() * th.lap();
        return s;
    }
    const auto& gr = setup.groups;
    const auto coef = setup.coefficients();
    const double A = gr.A, gamma = gr.gamma;
    const Jet& q = f.p;
    const double p = -y / gamma + A * q.v;
    const double n = coef.bracket(p, th.v);
    const double r = coef.density(p, th.v);
    const double cap = coef.heat_capacity(p, th.v);
    const double div = u.dx() + w.dy();
    const double ddiv_x = u.dxx() + w.dxy(), ddiv_y = u.dxy() + w.dyy();
    const double pdot = A * (q.dt() + u.v * q.dx() + w.v * q.dy()) - w.v / gamma;
    const double thdot = th.dt() + adv_t;
    const double shear = 0.5 * (u.dy() + w.dx());
    const double d2 = u.dx() * u.dx() + w.dy() * w.dy() + 2 * shear * shear;
    const double diss = d2 / (gamma * gr.re_mu) + gr.inv_re_lambda() / gamma * div * div;
    const double nu_gd = setup.grad_div_coefficient();
    s.u = r * (u.dt() + adv_u) - nu * u.lap() - nu_gd * ddiv_x + gamma * q.dx();
    s.w = r * (w.dt() + adv_w) - nu * w.lap() - nu_gd * ddiv_y + gamma * q.dy() + coef.density_excess_over_A(p, th.v);
    s.theta = cap * thdot - setup.kappa() * th.lap() - (th.v + gr.theta_r) * (A / n) * pdot - A * diss;
    s.mass = div - (A / n) * thdot + (gr.B / n) * pdot;
    return s;
}

/// Source callback sampling point_source on the staggered grid.
inline SourceFunction make_source(const Manufactured& m, SystemKind kind, const ProblemSetup& setup) {
    m.check_compatible(setup);
    return [m, kind, setup](double t, SourceTerms& out) {
        const Grid& g = setup.grid;
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                out.u(i, j) = point_source(m, kind, setup, g.xf(i), g.yc(j), t).u;
                const PointSource c = point_source(m, kind, setup, g.xc(i), g.yc(j), t);
                out.theta(i, j) = c.theta;
                out.mass(i, j) = c.mass;
            }
        }
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                out.w(i, j) = (j == 0 || j == g.ny) ? 0.0 : point_source(m, kind, setup, g.xc(i), g.yn(j), t).w;
    };
}

/// Manufactured state at time t. ob/expansion velocities are the discrete
/// curl of psi (divergence free to rounding); the full system samples the
/// velocity pointwise and carries q with its two one-step rates.
inline FieldState exact_state(const Manufactured& m, SystemKind kind, const ProblemSetup& setup, double t) {
    const Grid& g = setup.grid;
    FieldState s(g);
    s.t = t;
    const bool full = kind == SystemKind::full;
    auto val = [&](auto fn, double x, double y) { return fn(Jet(x), Jet(y), Jet(t)).v; };
    if (full) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s.u(i, j) = m.u(g.xf(i), g.yc(j), t, true).v;
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) s.w(i, j) = m.w(g.xc(i), g.yn(j), t, true).v;
    } else {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s.u(i, j) = (m.psi(g.xf(i), g.yn(j + 1), t) - m.psi(g.xf(i), g.yn(j), t)) / g.dy();
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s.w(i, j) = -(m.psi(g.xf(i + 1), g.yn(j), t) - m.psi(g.xf(i), g.yn(j), t)) / g.dx();
    }
    auto theta_fn = [&](const Jet& x, const Jet& y, const Jet& tt) { return m.theta(x, y, tt); };
    auto p_fn = [&](const Jet& x, const Jet& y, const Jet& tt) { return m.pressure(x, y, tt); };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            s.theta(i, j) = val(theta_fn, g.xc(i), g.yc(j));
            const double pm = val(p_fn, g.xc(i), g.yc(j));
            if (kind == SystemKind::ob)
                s.p(i, j) = pm;
            else if (kind == SystemKind::expansion)
                s.p(i, j) = setup.groups.A * pm - g.yc(j);
        }
    }
    if (full) {
        s.ensure_full_state();
        const double dt = setup.dt, A = setup.groups.A, gamma = setup.groups.gamma;
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.xc(i), y = g.yc(j);
                const double q0 = m.pressure(x, y, t).v, q1 = m.pressure(x, y, t - dt).v,
                             q2 = m.pressure(x, y, t - 2 * dt).v;
                s.q(i, j) = q0;
                s.q_rate(i, j) = (q0 - q1) / dt;
                s.q_rate_prev(i, j) = (q1 - q2) / dt;
                s.p(i, j) = -y / gamma + A * q0;
            }
        }
    }
    return s;
}

struct ErrorNorms {
    double velocity{0};
    double theta{0};
    double pressure{0};  ///< mean-free pressure (ob/expansion kernel pressure, full-system q)
};

/// Discrete L2 errors against the manufactured fields sampled pointwise.
inline ErrorNorms errors(const Manufactured& m, SystemKind kind, const ProblemSetup& setup, const FieldState& s) {
    const Grid& g = setup.grid;
    const double t = s.t;
    const bool full = kind == SystemKind::full;
    Field2D eu = make_u(g), ew = make_w(g), et = make_scalar(g), ep = make_scalar(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) eu(i, j) = s.u(i, j) - m.u(g.xf(i), g.yc(j), t, full).v;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) ew(i, j) = s.w(i, j) - m.w(g.xc(i), g.yn(j), t, full).v;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xc(i), y = g.yc(j);
            et(i, j) = s.theta(i, j) - m.theta(x, y, t).v;
            double pk = s.p(i, j);
            if (kind == SystemKind::expansion) pk = (s.p(i, j) + y) / setup.groups.A;
            if (full) pk = s.q(i, j);
            ep(i, j) = pk - m.pressure(x, y, t).v;
        }
    }
    const double shift = ep.mean();
    for (std::size_t k = 0; k < ep.size(); ++k) ep[k] -= shift;
    ErrorNorms e;
    e.velocity = std::hypot(ops::l2_u(g, eu), ops::l2_w(g, ew));
    e.theta = ops::l2_centre(g, et);
    e.pressure = ops::l2_centre(g, ep);
    return e;
}

/// Least-squares slope of log(err) against log(h): the observed order.
inline double fit_order(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2) throw ParameterError("fit_order: need >= 2 matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (!(h[k] > 0) || !(err[k] > 0)) throw ParameterError("fit_order: samples must be positive");
        const double x = std::log(h[k]), y = std::log(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct OrderStudy {
    std::vector<int> resolutions;
    std::vector<double> h;
    std::vector<ErrorNorms> errors;
    double order_velocity{0};
    double order_theta{0};
    double order_pressure{0};
    int max_pcg_iterations{0};
};

/// Runs the manufactured problem to t_end on n x n grids with dt = dt_factor h
/// and fits the orders. `base` supplies the groups and the scheme options.
inline OrderStudy order_study(const Manufactured& m, SystemKind kind, const ProblemSetup& base,
                              const std::vector<int>& resolutions, double t_end, double dt_factor) {
    OrderStudy out;
    out.resolutions = resolutions;
    std::vector<double> ev, et, ep;
    for (int n : resolutions) {
        ProblemSetup setup = base;
        setup.grid = Grid{n, n, m.lx};
        const double h = std::min(setup.grid.dx(), setup.grid.dy());
        const int steps = std::max(1, int(std::lround(t_end / (dt_factor * h))));
        setup.dt = t_end / steps;
        setup.t_end = t_end;
        setup.theta_bottom = m.theta_bottom;
        setup.theta_top = m.theta_top;
        setup.sources = make_source(m, kind, setup);
        Stepper stepper(setup, kind);
        FieldState s = exact_state(m, kind, setup, 0.0);
        for (int k = 0; k < steps; ++k) {
            s = stepper.step(kind, s);
            out.max_pcg_iterations = std::max(out.max_pcg_iterations, stepper.last_report().pcg_iterations);
        }
        const ErrorNorms e = errors(m, kind, setup, s);
        out.h.push_back(h);
        out.errors.push_back(e);
        ev.push_back(e.velocity);
        et.push_back(e.theta);
        ep.push_back(e.pressure);
    }
    out.order_velocity = fit_order(out.h, ev);
    out.order_theta = fit_order(out.h, et);
    out.order_pressure = fit_order(out.h, ep);
    return out;
}

}  // namespace oblimit::mms
