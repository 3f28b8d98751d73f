#pragma once

// Families of runs with (A, B) -> (0, 0): difference norms against the OB
// reference on a shared grid, weak-form residuals of the limit system,
// expansion/OB gauge comparison and report emission.

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "oblimit/errors.hpp"
#include "oblimit/jet.hpp"
#include "oblimit/mms.hpp"
#include "oblimit/nondim.hpp"
#include "oblimit/snapshot_io.hpp"
#include "oblimit/solver.hpp"

namespace oblimit::harness {

/// Worker count: OBLIMIT_MAX_THREADS if set (>= 1), else the hardware count.
inline unsigned max_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OBLIMIT_MAX_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = unsigned(v);
    }
    return n;
}

/// Runs fn(0..count-1) on up to max_threads() workers.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(max_threads(), count);
    if (workers <= 1) {
        for (std::size_t k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < count; k = next++) fn(k);
        });
    for (auto& t : pool) t.join();
}

/// Git blob id: SHA-1 of "blob <len>\0" followed by the content.
inline std::string git_blob_sha1(const std::string& content) {
    const std::string prefix = "blob " + std::to_string(content.size());
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx) throw Error("crypto", "EVP_MD_CTX_new failed");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, prefix.data(), prefix.size() + 1) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error("crypto", "SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

enum class NormKind { space_time, final_time };

struct StudyConfig {
    std::vector<double> A_sequence{0.2, 0.1, 0.05, 0.025};
    double b_coefficient{1.0};  ///< B = b_coefficient * A^b_exponent
    double b_exponent{2.0};
    Grid grid{64, 64, 1.0};
    double dt{0.0};  ///< 0: auto_dt with unit velocity bound
    double t_end{0.5};
    int snapshot_stride{1};
    /// Groups shared by every run; A and B are overwritten per case.
    nondim::DimensionlessGroups groups{};
    double perturbation{0.1};
    SystemKind system{SystemKind::full};
    NormKind norm{NormKind::space_time};
    int test_functions{8};
    bool record_wall_time{false};

    StudyConfig() {
        groups.gamma = 1;
        groups.re_mu = 10;
        groups.re_lambda = std::numeric_limits<double>::infinity();
        groups.pr = 1;
        groups.c0 = 40;
        groups.theta_r = 10;
    }

    double B_of(double A) const { return b_coefficient * std::pow(A, b_exponent); }

    double resolved_dt() const { return dt > 0 ? dt : auto_dt(grid, 1.0); }

    void validate() const {
        grid.validate();
        if (A_sequence.empty()) throw ParameterError("StudyConfig: A_sequence is empty");
        for (std::size_t k = 0; k < A_sequence.size(); ++k) {
            if (!(A_sequence[k] > 0)) throw ParameterError("StudyConfig: A_sequence values must be > 0");
            if (k > 0 && !(A_sequence[k] < A_sequence[k - 1]))
                throw ParameterError("StudyConfig: A_sequence must be strictly decreasing");
        }
        if (!(b_coefficient > 0) || !(b_exponent > 1))
            throw ParameterError("StudyConfig: B rule must give B = o(A) (coefficient > 0, exponent > 1)");
        for (double A : A_sequence)
            if (!(nondim::check_regimes(A, B_of(A), groups.theta_r).B_over_A < 1))
                throw ParameterError("StudyConfig: B rule must give B < A along the sequence");
        if (!(t_end > 0)) throw ParameterError("StudyConfig: t_end must be > 0");
        if (dt < 0) throw ParameterError("StudyConfig: dt must be >= 0 (0 selects auto)");
        if (snapshot_stride < 1) throw ParameterError("StudyConfig: snapshot_stride must be >= 1");
        if (test_functions < 1 || test_functions > 8) throw ParameterError("StudyConfig: test_functions must be in 1..8");
        groups.validate();
    }

    ProblemSetup setup_for(double A, double B) const {
        ProblemSetup s;
        s.grid = grid;
        s.groups = groups;
        s.groups.A = A;
        s.groups.B = B;
        s.dt = resolved_dt();
        s.t_end = t_end;
        return s;
    }
};

/// Conduction profile plus amplitude * sin(pi y) cos(2 pi x / lx), v = 0.
inline FieldState perturbed_conduction(const ProblemSetup& setup, double amplitude) {
    const Grid& g = setup.grid;
    FieldState s(g);
    const double tb = setup.theta_bottom, tt = setup.theta_top;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            s.theta(i, j) = tb + (tt - tb) * g.yc(j) +
                            amplitude * std::sin(std::numbers::pi * g.yc(j)) * std::cos(2 * std::numbers::pi * g.xc(i) / g.lx);
    return s;
}

struct RunResult {
    SystemKind kind{SystemKind::ob};
    ProblemSetup setup;
    std::vector<FieldState> snapshots;  ///< t = 0, every stride steps, and the final state
    std::vector<Diagnostics> diagnostics;
    double snapshot_dt{0};
    double wall_s{std::numeric_limits<double>::quiet_NaN()};
    int steps{0};
    int max_pcg_iterations{0};
};

/// Integrates from `initial` to setup.t_end. The initial pressure (or q) is
/// computed here. Step failures are rethrown as StepFailure.
inline RunResult run_case(const ProblemSetup& setup, SystemKind kind, FieldState initial, int stride = 1,
                          bool time_it = false) {
    const auto start = std::chrono::steady_clock::now();
    RunResult r;
    r.kind = kind;
    r.setup = setup;
    r.steps = setup.t_end > 0 ? std::max(1, int(std::ceil(setup.t_end / setup.dt - 1e-9))) : 0;
    if (r.steps > 0) r.setup.dt = setup.t_end / r.steps;
    Stepper stepper(r.setup, kind);
    r.snapshot_dt = r.setup.dt * stride;
    try {
        stepper.initialize_pressure(initial, kind);
    } catch (const Error& e) {
        throw StepFailure(0, e);
    }
    FieldState s = std::move(initial);
    r.snapshots.push_back(s);
    r.diagnostics.push_back(diagnostics(s));
    for (int k = 1; k <= r.steps; ++k) {
        try {
            s = stepper.step(kind, s);
        } catch (const Error& e) {
            throw StepFailure(k, e);
        }
        r.max_pcg_iterations = std::max(r.max_pcg_iterations, stepper.last_report().pcg_iterations);
        r.diagnostics.push_back(diagnostics(s));
        if (k % stride == 0 || k == r.steps) r.snapshots.push_back(s);
    }
    if (r.steps == 0 || r.steps % stride != 0) r.snapshot_dt = 0;  // uneven last interval: final-time norms only
    if (time_it)
        r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

enum class Component { velocity, theta, velocity_gradient };

inline double snapshot_difference(const FieldState& a, const FieldState& b, Component c) {
    const Grid& g = a.grid;
    if (c == Component::theta) return ops::l2_centre(g, a.theta - b.theta);
    const Field2D du = a.u - b.u, dw = a.w - b.w;
    if (c == Component::velocity) return std::hypot(ops::l2_u(g, du), ops::l2_w(g, dw));
    // discrete H1 seminorm: face differences of u and w
    double sum = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double ux = (du(g.wrap(i + 1), j) - du(i, j)) / g.dx();
            const double uy = (j + 1 < g.ny ? du(i, j + 1) - du(i, j) : -2 * du(i, j)) / g.dy();
            const double wx = (dw(g.wrap(i + 1), j) - dw(i, j)) / g.dx();
            const double wy = (dw(i, j + 1) - dw(i, j)) / g.dy();
            sum += ux * ux + uy * uy + wx * wx + wy * wy;
        }
    return std::sqrt(sum * g.cell_area());
}

/// L2(Q) (trapezoid in time over the snapshots) or final-time L2 distance.
inline double difference_norm(const RunResult& a, const RunResult& b, Component c, NormKind kind) {
    if (a.setup.grid != b.setup.grid) throw ParameterError("difference_norm: runs use different grids");
    if (a.snapshots.size() != b.snapshots.size()) throw ParameterError("difference_norm: snapshot counts differ");
    if (kind == NormKind::final_time || a.snapshot_dt == 0)
        return snapshot_difference(a.snapshots.back(), b.snapshots.back(), c);
    double sum = 0;
    const std::size_t n = a.snapshots.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double d = snapshot_difference(a.snapshots[k], b.snapshots[k], c);
        const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
        sum += w * d * d;
    }
    return std::sqrt(sum * a.snapshot_dt);
}

/// Pressure-gauge residual of a run against the OB reference at one time:
///   ob         p - p_ob
///   expansion  p - (A (p_ob - f) + f)
///   full       gamma q - p_ob with horizontal means removed row by row
///              (the two pressures differ by A-dependent functions of y)
/// returned mean free.
inline Field2D gauge_residual(SystemKind kind, const FieldState& s, const FieldState& ob, double A, double gamma) {
    const Grid& g = s.grid;
    Field2D r = make_scalar(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double f = -g.yc(j);
            switch (kind) {
                case SystemKind::ob: r(i, j) = s.p(i, j) - ob.p(i, j); break;
                case SystemKind::expansion: r(i, j) = s.p(i, j) - (A * (ob.p(i, j) - f) + f); break;
                case SystemKind::full: r(i, j) = gamma * s.q(i, j) - ob.p(i, j); break;
            }
        }
    }
    if (kind == SystemKind::full) {
        for (int j = 0; j < g.ny; ++j) {
            double m = 0;
            for (int i = 0; i < g.nx; ++i) m += r(i, j);
            m /= g.nx;
            for (int i = 0; i < g.nx; ++i) r(i, j) -= m;
        }
    }
    const double m = r.mean();
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= m;
    return r;
}

/// Root-mean-square over the snapshots of the spatial standard deviation of
/// the gauge residual.
inline double gauge_std(const RunResult& run, const RunResult& ob) {
    double sum = 0;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const Field2D r = gauge_residual(run.kind, run.snapshots[k], ob.snapshots[k], run.setup.groups.A,
                                         run.setup.groups.gamma);
        double v = 0;
        for (std::size_t m = 0; m < r.size(); ++m) v += r[m] * r[m];
        sum += v / double(r.size());
    }
    return std::sqrt(sum / double(run.snapshots.size()));
}

struct GaugeComparison {
    double dv_inf{0};        ///< max over snapshots of |v_exp - v_ob|_inf
    double dv_relative{0};   ///< dv_inf / max |v_ob|_inf
    double dtheta_inf{0};
    double p_gauge_std{0};   ///< max over snapshots of std(p_exp - (A (p_ob - f) + f))
};

inline GaugeComparison gauge_compare(const RunResult& expansion, const RunResult& ob, double A) {
    if (expansion.setup.grid != ob.setup.grid) throw ParameterError("gauge_compare: grids differ");
    if (expansion.snapshots.size() != ob.snapshots.size()) throw ParameterError("gauge_compare: snapshot counts differ");
    GaugeComparison c;
    double vmax = 0;
    for (std::size_t k = 0; k < ob.snapshots.size(); ++k) {
        const FieldState &e = expansion.snapshots[k], &o = ob.snapshots[k];
        c.dv_inf = std::max({c.dv_inf, (e.u - o.u).max_abs(), (e.w - o.w).max_abs()});
        c.dtheta_inf = std::max(c.dtheta_inf, (e.theta - o.theta).max_abs());
        vmax = std::max(vmax, max_speed(o));
        const Field2D r = gauge_residual(SystemKind::expansion, e, o, A, 1.0);
        double v = 0;
        for (std::size_t m = 0; m < r.size(); ++m) v += r[m] * r[m];
        c.p_gauge_std = std::max(c.p_gauge_std, std::sqrt(v / double(r.size())));
    }
    c.dv_relative = vmax > 0 ? c.dv_inf / vmax : c.dv_inf;
    return c;
}

struct LogFit {
    double slope{0};
    double residual{0};  ///< RMS deviation of log(e) from the fitted line
};

inline std::optional<LogFit> fit_log_slope(const std::vector<double>& A, const std::vector<double>& e) {
    if (A.size() < 2) return std::nullopt;
    for (double v : e)
        if (!(v > 0)) return std::nullopt;
    LogFit f;
    f.slope = mms::fit_order(A, e);
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < A.size(); ++k) {
        mx += std::log(A[k]);
        my += std::log(e[k]);
    }
    mx /= double(A.size());
    my /= double(A.size());
    double ss = 0;
    for (std::size_t k = 0; k < A.size(); ++k) {
        const double d = std::log(e[k]) - (my + f.slope * (std::log(A[k]) - mx));
        ss += d * d;
    }
    f.residual = std::sqrt(ss / double(A.size()));
    return f;
}

struct ConvergenceRow {
    double A{0}, B{0};
    double e_v{0}, e_theta{0}, e_grad_v{0};
    double p_gauge_std{0};
    double wall_s{std::numeric_limits<double>::quiet_NaN()};
    double theta_min{0}, theta_max{0}, v_max{0};
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::optional<LogFit> slope_v, slope_theta;
    bool monotone_v{false}, monotone_theta{false};
    std::string error;  ///< first failure; rows hold the cases before it
};

inline bool strictly_decreasing(const std::vector<double>& e) {
    for (std::size_t k = 1; k < e.size(); ++k)
        if (!(e[k] < e[k - 1])) return false;
    return true;
}

inline void finalize(ConvergenceReport& rep) {
    std::vector<double> A, ev, et;
    for (const auto& r : rep.rows) {
        A.push_back(r.A);
        ev.push_back(r.e_v);
        et.push_back(r.e_theta);
    }
    rep.slope_v = fit_log_slope(A, ev);
    rep.slope_theta = fit_log_slope(A, et);
    rep.monotone_v = strictly_decreasing(ev);
    rep.monotone_theta = strictly_decreasing(et);
}

/// Compares every case of the family with one OB reference run on the same
/// grid, dt and initial data. Cases run concurrently; rows are in A order.
inline ConvergenceReport limit_study(const StudyConfig& cfg) {
    cfg.validate();
    const ProblemSetup ref_setup = cfg.setup_for(cfg.A_sequence.front(), cfg.B_of(cfg.A_sequence.front()));
    const RunResult ob = run_case(ref_setup, SystemKind::ob, perturbed_conduction(ref_setup, cfg.perturbation),
                                  cfg.snapshot_stride, cfg.record_wall_time);
    const std::size_t n = cfg.A_sequence.size();
    std::vector<std::optional<ConvergenceRow>> rows(n);
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t k) {
        const double A = cfg.A_sequence[k], B = cfg.B_of(A);
        try {
            const ProblemSetup setup = cfg.setup_for(A, B);
            const RunResult run = run_case(setup, cfg.system, perturbed_conduction(setup, cfg.perturbation),
                                           cfg.snapshot_stride, cfg.record_wall_time);
            ConvergenceRow row;
            row.A = A;
            row.B = B;
            row.e_v = difference_norm(run, ob, Component::velocity, cfg.norm);
            row.e_theta = difference_norm(run, ob, Component::theta, cfg.norm);
            row.e_grad_v = difference_norm(run, ob, Component::velocity_gradient, cfg.norm);
            row.p_gauge_std = gauge_std(run, ob);
            row.wall_s = run.wall_s;
            row.theta_min = std::numeric_limits<double>::infinity();
            row.theta_max = -row.theta_min;
            for (const auto& d : run.diagnostics) {
                row.theta_min = std::min(row.theta_min, d.theta_min);
                row.theta_max = std::max(row.theta_max, d.theta_max);
            }
            for (const auto& s : run.snapshots) row.v_max = std::max(row.v_max, max_speed(s));
            rows[k] = row;
        } catch (const std::exception& e) {
            std::ostringstream os;
            os.precision(17);
            os << "case A=" << A << ", B=" << B << ": " << e.what();
            errors[k] = os.str();
        }
    });
    ConvergenceReport rep;
    for (std::size_t k = 0; k < n; ++k) {
        if (!rows[k]) {
            rep.error = errors[k];
            break;
        }
        rep.rows.push_back(*rows[k]);
    }
    finalize(rep);
    return rep;
}

// -- weak residuals of the limit system -------------------------------------

struct WeakResidual {
    double mass{0};
    double heat{0};
    double momentum{0};
};

/// Test function k of the dictionary: chi_k = Y(y) X(x) tau(t) with
/// Y = (y(1-y))^4 or (y(1-y))^4 (1 - 2y), X = sin or cos of m 2 pi x / lx
/// (m = 1, 2) and tau = sin^2(pi t / T). Momentum uses curl chi, the scalar
/// equations use chi itself; all vanish with their first derivatives on the
/// walls and at t = 0, T.
inline Jet dictionary_function(int k, const Jet& x, const Jet& y, const Jet& t, double lx, double t_end) {
    if (k < 0 || k > 7) throw ParameterError("dictionary_function: index must be in 0..7");
    const double pi = std::numbers::pi;
    const int m = 1 + (k & 1);
    const bool odd_y = (k >> 1) & 1;
    const bool use_cos = (k >> 2) & 1;
    const Jet b = y * (1 - y);
    Jet Y = b * b * b * b;
    if (odd_y) Y = Y * (1 - 2 * y);
    const Jet arg = (2 * pi * m / lx) * x;
    const Jet X = use_cos ? cos(arg) : sin(arg);
    const Jet s = sin((pi / t_end) * t);
    return Y * X * s * s;
}

/// Residuals of the weak OB forms, each normalized by the L2(Q) norm of its
/// test function, maximized over the first `count` dictionary entries.
/// Midpoint quadrature on cell centres, trapezoid in time.
inline WeakResidual weak_residual(const RunResult& run, int count = 8) {
    if (run.kind == SystemKind::full) throw ParameterError("weak_residual: expects an ob or expansion run");
    if (run.snapshot_dt == 0) throw ParameterError("weak_residual: needs evenly spaced snapshots");
    const ProblemSetup& setup = run.setup;
    const Grid& g = setup.grid;
    const double t_end = run.snapshots.back().t;
    if (!(std::abs(t_end - run.snapshots.front().t - (run.snapshots.size() - 1) * run.snapshot_dt) < 1e-9 * t_end + 1e-12))
        throw ParameterError("weak_residual: snapshot times are not uniform");
    const double t0 = run.snapshots.front().t;
    const double span = t_end - t0;
    const double inv_re = 1.0 / setup.groups.re_mu, c0 = setup.groups.c0, kappa = setup.kappa();
    const ops::WallValues walls = setup.theta_walls(), noslip{};
    std::vector<double> rm(count, 0), rh(count, 0), rc(count, 0), nm(count, 0), ns(count, 0);
    const std::size_t n = run.snapshots.size();
    for (std::size_t s = 0; s < n; ++s) {
        const FieldState& st = run.snapshots[s];
        const double wt = ((s == 0 || s + 1 == n) ? 0.5 : 1.0) * run.snapshot_dt * g.cell_area();
        const double tl = st.t - t0;
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const int ip = g.wrap(i + 1), im = g.wrap(i - 1);
                const double u = ops::u_at_centre(g, st.u, i, j), w = ops::w_at_centre(st.w, i, j);
                const double ux = (st.u(ip, j) - st.u(i, j)) / g.dx();
                const double wy = (st.w(i, j + 1) - st.w(i, j)) / g.dy();
                const double wx = (ops::w_at_centre(st.w, ip, j) - ops::w_at_centre(st.w, im, j)) / (2 * g.dx());
                // d/dy of u at the centre: average of the two faces, wall value 0
                const double uyc = 0.5 * (ops::ddy_centre(g, st.u, i, j, noslip) + ops::ddy_centre(g, st.u, ip, j, noslip));
                const double th = st.theta(i, j);
                const double tx = ops::ddx_centre(g, st.theta, i, j), ty = ops::ddy_centre(g, st.theta, i, j, walls);
                const double div = ux + wy;
                for (int k = 0; k < count; ++k) {
                    const Jet c = dictionary_function(k, Jet::variable(g.xc(i), 0), Jet::variable(g.yc(j), 1),
                                                      Jet::variable(tl, 2), g.lx, span);
                    // phi = (chi_y, -chi_x)
                    const double p1 = c.dy(), p2 = -c.dx();
                    const double p1t = c.h[5], p2t = -c.h[4];
                    const double p1x = c.dxy(), p1y = c.dyy(), p2x = -c.dxx(), p2y = -c.dxy();
                    const double ddot = ux * p1x + wy * p2y + 0.5 * (uyc + wx) * (p1y + p2x);
                    const double mom = -(u * p1t + w * p2t) + (u * ux + w * uyc) * p1 + (u * wx + w * wy) * p2 +
                                       inv_re * ddot + (1 - th) * p2;
                    rm[k] += wt * mom;
                    nm[k] += wt * (p1 * p1 + p2 * p2);
                    const double heat = -c0 * th * c.dt() + c0 * (u * tx + w * ty) * c.v + kappa * (tx * c.dx() + ty * c.dy());
                    rh[k] += wt * heat;
                    rc[k] += wt * div * c.v;
                    ns[k] += wt * c.v * c.v;
                }
            }
        }
    }
    WeakResidual r;
    for (int k = 0; k < count; ++k) {
        r.momentum = std::max(r.momentum, std::abs(rm[k]) / std::sqrt(nm[k]));
        r.heat = std::max(r.heat, std::abs(rh[k]) / std::sqrt(ns[k]));
        r.mass = std::max(r.mass, std::abs(rc[k]) / std::sqrt(ns[k]));
    }
    return r;
}

// -- reports -----------------------------------------------------------------

inline std::string report_csv(const ConvergenceReport& rep, int digits = 17) {
    auto f = [digits](double v) { return io::fmt(v, digits); };
    std::string out = "A,B,e_v_L2,e_theta_L2,p_gauge_std,wall_s\n";
    for (const auto& r : rep.rows)
        out += f(r.A) + "," + f(r.B) + "," + f(r.e_v) + "," + f(r.e_theta) + "," + f(r.p_gauge_std) + "," + f(r.wall_s) + "\n";
    return out;
}

inline nlohmann::ordered_json report_json(const ConvergenceReport& rep, const std::string& config_text) {
    using J = nlohmann::ordered_json;
    auto fit = [](const std::optional<LogFit>& f) -> J {
        if (!f) return nullptr;
        return J{{"slope", f->slope}, {"fit_residual", f->residual}};
    };
    J j;
    j["slopes"] = {{"e_v", fit(rep.slope_v)}, {"e_theta", fit(rep.slope_theta)}};
    j["monotone"] = {{"e_v", rep.monotone_v}, {"e_theta", rep.monotone_theta}};
    J rows = J::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"A", r.A},
                        {"B", r.B},
                        {"e_v_L2", r.e_v},
                        {"e_theta_L2", r.e_theta},
                        {"e_grad_v_L2", r.e_grad_v},
                        {"p_gauge_std", r.p_gauge_std},
                        {"theta_min", r.theta_min},
                        {"theta_max", r.theta_max},
                        {"v_max", r.v_max}});
    j["rows"] = rows;
    j["error"] = rep.error.empty() ? J(nullptr) : J(rep.error);
    j["config"] = config_text;
    j["input_sha1"] = git_blob_sha1(config_text);
    return j;
}

/// Writes limit_study.csv and limit_study.json into `dir`.
inline void emit_report(const ConvergenceReport& rep, const std::string& dir, const std::string& config_text,
                        int digits = 17) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
    io::write_text(dir + "/limit_study.csv", report_csv(rep, digits));
    io::write_text(dir + "/limit_study.json", report_json(rep, config_text).dump(2) + "\n");
}

}  // namespace oblimit::harness
