#pragma once

// Nondimensionalization of the example model: the (a,b) <-> (A,B) mapping,
// the reference scales, the dimensionless groups, and the expansion
// identities of phi^{A,B} that the limit analysis relies on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "oblimit/constitutive.hpp"
#include "oblimit/errors.hpp"
#include "oblimit/precision.hpp"

namespace oblimit::nondim {

/// Scale constants fixed independently of (a, b).
template <class Real = double>
struct ScaleBase {
    Real vartheta0{1};        ///< base temperature scale [K]
    Real pi0{1};              ///< base pressure scale [Pa]
    Real theta_r{10};         ///< dimensionless reference temperature offset
    Real g{9.81};             ///< gravitational acceleration [m s^-2]
    Real mu{1};               ///< shear viscosity [Pa s]
    Real lambda{1};           ///< bulk viscosity [Pa s]
    Real kappa{1};            ///< thermal conductivity [W m^-1 K^-1]
    Real length_constant{1};  ///< L = length_constant * A^(-1/3)

    void validate() const {
        if (!(vartheta0 > 0) || !(pi0 > 0)) throw ParameterError("vartheta0 and pi0 must be > 0");
        if (!(g > 0)) throw ParameterError("g must be > 0");
        if (!(length_constant > 0)) throw ParameterError("length_constant must be > 0");
        if (!(mu >= 0) || !(3 * lambda + 2 * mu >= 0) || !(kappa >= 0))
            throw ParameterError("viscosity/conductivity sign conditions violated: mu >= 0, 3 lambda + 2 mu >= 0, kappa >= 0");
    }
};

template <class Real = double>
struct ScaleSet {
    Real L{1}, T{1}, V{1};
    Real pi{1};
    Real vartheta{1};
    Real theta_r{10};
    Real phi0{1};
    Real g{9.81};
    Real mu{1}, lambda{1}, kappa{1};
    Real vartheta0{1}, pi0{1};

    void validate() const {
        using std::abs;
        if (!(L > 0 && T > 0 && V > 0 && pi > 0 && vartheta > 0 && phi0 > 0 && g > 0 && vartheta0 > 0 && pi0 > 0))
            throw ParameterError("ScaleSet: all scales must be strictly positive");
        if (!(mu >= 0) || !(3 * lambda + 2 * mu >= 0) || !(kappa >= 0))
            throw ParameterError("ScaleSet: mu >= 0, 3 lambda + 2 mu >= 0, kappa >= 0 required");
        if (abs(V * T - L) > 8 * std::numeric_limits<Real>::epsilon() * L)
            throw ParameterError("ScaleSet: V T = L violated");
    }
};

template <class Real = double>
struct ABPair {
    Real A{0};
    Real B{0};
};

template <class Real = double>
struct DimensionalParams {
    Real a{0};
    Real b{0};
};

/// A = a vt / (1 + b pi - a vt (1 + theta_r)),  B = b pi / (same).
template <class Real>
ABPair<Real> compute_AB(const Real& a, const Real& b, const ScaleSet<Real>& s) {
    const Real den = 1 + b * s.pi - a * s.vartheta * (1 + s.theta_r);
    if (!(den > 0)) throw ParameterError("compute_AB: 1 + b pi - a vartheta (1 + theta_r) must be > 0");
    return {a * s.vartheta / den, b * s.pi / den};
}

/// x_{A,B} = 1 + A (1 + theta_r) - B.
template <class Real>
Real x_AB(const Real& A, const Real& B, const Real& theta_r) {
    return 1 + A * (1 + theta_r) - B;
}

/// Inverse of compute_AB under the scale choice vt = vt0 (a vt0)^(-1/4), pi = pi0 (a vt0)^(-1/4).
template <class Real>
DimensionalParams<Real> invert_AB(const Real& A, const Real& B, const ScaleBase<Real>& base) {
    using std::cbrt;
    if (!(A >= 0) || !(B >= 0)) throw ParameterError("invert_AB: A, B must be >= 0");
    const Real x = x_AB(A, B, base.theta_r);
    if (!(x > 0)) throw ParameterError("invert_AB: x_AB = 1 + A (1 + theta_r) - B must be > 0");
    const Real r = A / x;
    const Real r43 = r * Real(cbrt(r));
    const Real x43 = x * Real(cbrt(x));
    return {r43 / base.vartheta0, B * Real(cbrt(A)) / x43 / base.pi0};
}

/// Scales of the example model: vt and pi from a, L ~ A^(-1/3), V^2 = A g L,
/// T = L / V, phi0 = phi(pi, vt b pi0 / (a vt0)).
template <class Real>
ScaleSet<Real> scales_from_model(const constitutive::GibbsModel<Real>& model, const ScaleBase<Real>& base) {
    using std::cbrt;
    using std::pow;
    using std::sqrt;
    model.validate();
    base.validate();
    if (!(model.a > 0)) throw ParameterError("scales_from_model: a must be > 0");
    ScaleSet<Real> s;
    const Real shrink = Real(pow(model.a * base.vartheta0, Real(-0.25)));
    s.vartheta = base.vartheta0 * shrink;
    s.pi = base.pi0 * shrink;
    s.theta_r = base.theta_r;
    s.g = base.g;
    s.mu = base.mu;
    s.lambda = base.lambda;
    s.kappa = base.kappa;
    s.vartheta0 = base.vartheta0;
    s.pi0 = base.pi0;
    const ABPair<Real> ab = compute_AB(model.a, model.b, s);
    s.L = base.length_constant / Real(cbrt(ab.A));
    s.V = Real(sqrt(ab.A * s.g * s.L));
    s.T = s.L / s.V;
    const constitutive::ThermoPoint<Real> ref{s.pi, s.vartheta * model.b * base.pi0 / (model.a * base.vartheta0)};
    s.phi0 = constitutive::gibbs_phi(model, ref);
    return s;
}

struct DimensionlessGroups {
    double A{0};
    double B{0};
    double gamma{1};
    double re_mu{1};
    double re_lambda{1};  ///< +inf when lambda = 0; the tr D terms are then dropped
    double pr{1};
    double c0{1};
    double theta_r{10};
    bool gamma_in_band{true};
    bool re_mu_in_band{true};
    bool re_lambda_in_band{true};
    bool pr_in_band{true};

    void validate() const {
        if (!(A >= 0) || !(B >= 0)) throw ParameterError("DimensionlessGroups: A, B must be >= 0");
        if (!(gamma > 0 && std::isfinite(gamma))) throw ParameterError("DimensionlessGroups: gamma must be finite and > 0");
        if (!(re_mu > 0 && std::isfinite(re_mu))) throw ParameterError("DimensionlessGroups: re_mu must be finite and > 0");
        if (!(re_lambda > 0)) throw ParameterError("DimensionlessGroups: re_lambda must be > 0 (inf allowed)");
        if (!(pr > 0 && std::isfinite(pr))) throw ParameterError("DimensionlessGroups: pr must be finite and > 0");
        if (!(c0 > 0)) throw ParameterError("DimensionlessGroups: c0 must be > 0");
    }
    bool all_in_band() const { return gamma_in_band && re_mu_in_band && re_lambda_in_band && pr_in_band; }
    /// 1 / Re_lambda, zero when lambda = 0.
    double inv_re_lambda() const { return std::isinf(re_lambda) ? 0.0 : 1.0 / re_lambda; }
};

struct Band {
    double lo{1e-2};
    double hi{1e2};
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// gamma = phi0/(gL), Re_mu = pi V L/(2 mu phi0), Re_lambda = pi V L/(lambda phi0),
/// Pr = phi0 mu/(vt kappa). `c0` is the dimensionless specific-heat constant
/// c0 vt0 rho0 / pi0.
inline DimensionlessGroups dimensionless_groups(const ScaleSet<double>& s, double A, double B, double c0,
                                                Band band = {}) {
    if (!(s.mu > 0)) throw ParameterError("dimensionless_groups: mu = 0 makes Re_mu and Pr degenerate");
    if (!(s.kappa > 0)) throw ParameterError("dimensionless_groups: kappa = 0 makes Pr unbounded");
    if (!(s.phi0 > 0) || !(s.g > 0) || !(s.L > 0) || !(s.vartheta > 0))
        throw ParameterError("dimensionless_groups: phi0, g, L, vartheta must be > 0");
    DimensionlessGroups out;
    out.A = A;
    out.B = B;
    out.c0 = c0;
    out.theta_r = s.theta_r;
    out.gamma = s.phi0 / (s.g * s.L);
    out.re_mu = s.pi * s.V * s.L / (2 * s.mu * s.phi0);
    out.re_lambda = s.lambda > 0 ? s.pi * s.V * s.L / (s.lambda * s.phi0) : std::numeric_limits<double>::infinity();
    out.pr = s.phi0 * s.mu / (s.vartheta * s.kappa);
    out.gamma_in_band = band.contains(out.gamma);
    out.re_mu_in_band = band.contains(out.re_mu);
    out.re_lambda_in_band = std::isinf(out.re_lambda) || band.contains(out.re_lambda);
    out.pr_in_band = band.contains(out.pr);
    return out;
}

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

struct RegimeReport {
    // limit regime B = o(A), checked against the family B <= A^2
    bool limit_pass{false};
    double B_over_A{0};
    // expansion regime A^2 <= B <= A
    bool expansion_pass{false};
    bool A2_le_B{false};
    bool B_le_A{false};
    // example condition: b pi0 / (a vt0)^(5/4) = B x^(1/3) / A^(4/3) small
    bool example_pass{false};
    double example_ratio{0};
};

struct RegimeThresholds {
    double rel_tol{1e-12};          ///< slack on the boundary comparisons
    double example_threshold{1.0};  ///< example condition passes below this
};

inline RegimeReport check_regimes(double A, double B, double theta_r, RegimeThresholds th = {}) {
    RegimeReport r;
    const double slack = 1 + th.rel_tol;
    r.B_over_A = A > 0 ? B / A : std::numeric_limits<double>::infinity();
    r.limit_pass = A > 0 && B <= A * A * slack;
    r.A2_le_B = A * A <= B * slack;
    r.B_le_A = B <= A * slack;
    r.expansion_pass = r.A2_le_B && r.B_le_A;
    if (A > 0) {
        const double x = x_AB(A, B, theta_r);
        r.example_ratio = x > 0 ? B * std::cbrt(x) / (A * std::cbrt(A)) : std::numeric_limits<double>::infinity();
    } else {
        r.example_ratio = std::numeric_limits<double>::infinity();
    }
    r.example_pass = r.example_ratio < th.example_threshold;
    return r;
}

// ---------------------------------------------------------------------------
// Expansion identities of phi^{A,B}
// ---------------------------------------------------------------------------

/// Closed forms of the example written in terms of (A, B). The density
/// remainder and k1 are given in two variants: as stated in the worked
/// example ("printed") and as the exact decomposition with k1 = rho0 phi0 / pi.
namespace expansion {

/// N = 1 + B (p - 1) - A (theta - 1): common denominator of the coefficient brackets.
template <class Real>
Real bracket_denominator(const Real& A, const Real& B, const Real& p, const Real& theta) {
    return 1 + B * (p - 1) - A * (theta - 1);
}

/// Coefficient bracket 1 - (B(p-1) - A(theta-1)) / N of the alpha and beta ratios.
template <class Real>
Real coefficient_bracket(const Real& A, const Real& B, const Real& p, const Real& theta) {
    const Real n = bracket_denominator(A, B, p, theta);
    return 1 - (B * (p - 1) - A * (theta - 1)) / n;
}

template <class Real>
Real rho_r_printed(const Real& A, const Real& B, const Real& theta_r, const Real& p, const Real& theta) {
    const Real x = x_AB(A, B, theta_r);
    return -A * B * ((p - 1) * (1 + theta_r) / x + (theta - 1) / x) + A * A * (theta - 1) * (1 + theta_r) / x +
           B * B * (p - 1) / x;
}

/// rho_r such that 1/d_p phi^{A,B} = (1 - A(theta+theta_r) + B p + rho_r) k1 holds
/// exactly with k1 = rho0 phi0 / pi.
template <class Real>
Real rho_r_exact(const Real& A, const Real& B, const Real& theta_r, const Real& p, const Real& theta) {
    const Real x = x_AB(A, B, theta_r);
    return (A * A * (1 + theta_r) * (theta + theta_r) - A * B * (p * (1 + theta_r) + theta + theta_r) + B * B * p) /
           x;
}

/// c1 of the specific-heat identity (same in both variants).
template <class Real>
Real c1(const Real& A, const Real& B, const Real& theta_r, const Real& p, const Real& theta) {
    const Real x = x_AB(A, B, theta_r);
    const Real n = bracket_denominator(A, B, p, theta);
    const Real m = 1 - B - A * (theta - 1);
    return -x * p * (theta + theta_r) * (2 + B * (p - 2) - 2 * A * (theta - 1)) / (n * n * m * m);
}

/// k1 exactly as written in the worked example.
template <class Real>
Real k1_printed(const Real& A, const Real& B, const Real& theta_r, const Real& c0_dimless, const Real& vartheta0) {
    using std::log;
    using std::pow;
    const Real x = x_AB(A, B, theta_r);
    const Real x1312 = Real(pow(x, Real(13) / 12));
    const Real ratio = B / Real(pow(A, Real(4) / 3));
    const Real first = (x / B) * (log(1 + B / x - B / x1312) - log(1 - B / x1312));
    const Real second = Real(pow(A, Real(1) / 3)) * c0_dimless / Real(pow(x, Real(1) / 12)) * ratio *
                        (log(vartheta0 * Real(pow(x, Real(1) / 4)) * ratio) - 1);
    return first - second;
}

/// k1 = rho0 phi0 / pi written in (A, B):
/// -(x/B) ln(1 - B/x) - c0 (B/A) (ln theta* - 1), theta* = vt0 B x^(1/3) / A^(4/3).
/// Accurate in double for small B (log1p); tends to 1 as B -> 0.
inline double k1_exact(double A, double B, double theta_r, double c0_dimless, double vartheta0) {
    if (!(A > 0)) throw ParameterError("k1_exact: A must be > 0");
    if (B == 0) return 1.0;
    const double x = x_AB(A, B, theta_r);
    const double first = -(x / B) * std::log1p(-B / x);
    const double theta_star = vartheta0 * B * std::cbrt(x) / (A * std::cbrt(A));
    return first - c0_dimless * (B / A) * (std::log(theta_star) - 1);
}

}  // namespace expansion

struct GridRect {
    double p_lo{0.5}, p_hi{1.5};
    double theta_lo{0.5}, theta_hi{1.5};
    int points{21};  ///< per direction, endpoints included
};

struct ExpansionChecks {
    double A{0}, B{0};
    double x_AB{1};
    double k1{1}, k2{1};  ///< printed forms, k2 = 1 / k1
    double rho_r_sup{0};
    double rho_r_ratio{0};  ///< rho_r_sup / (A^2 + B^2 + A B)
    double c1_sup{0};
    double alpha1_sup{0};  ///< sup of the remainder in the alpha bracket (role of A alpha_1 + B alpha_2)
    double beta1_sup{0};   ///< same for the beta bracket
    // exact decomposition, evaluated from the dimensional potential
    double k1_exact{1};
    double rho_r_exact_sup{0};
    double density_identity_residual{0};   ///< exact decomposition vs 1/d_p phi^{A,B}, relative
    double printed_identity_residual{0};   ///< printed decomposition vs 1/d_p phi^{A,B}, relative
    double coefficient_identity_residual{0};  ///< alpha/beta/c_p closed forms vs dimensional coefficients
    double sign_structure_residual{0};     ///< |(alpha-ratio)/A - (beta-ratio)/B| relative
};

/// Evaluates the expansion identities of the example model on a (p, theta)
/// grid in 50-digit arithmetic. `rho0` and `c0` are the dimensional model
/// constants; a and b come from invert_AB.
inline ExpansionChecks verify_assumptions(double A_in, double B_in, const GridRect& grid,
                                          const ScaleBase<double>& base_in, double rho0_in = 1.0,
                                          double c0_in = 1.0) {
    using HP = HighPrecision;
    using std::abs;
    if (!(A_in > 0) || !(B_in > 0)) throw ParameterError("verify_assumptions: A and B must be > 0");
    if (grid.points < 2) throw ParameterError("verify_assumptions: grid needs at least 2 points per direction");
    const HP A(A_in), B(B_in);
    ScaleBase<HP> base;
    base.vartheta0 = base_in.vartheta0;
    base.pi0 = base_in.pi0;
    base.theta_r = base_in.theta_r;
    base.g = base_in.g;
    base.mu = base_in.mu;
    base.lambda = base_in.lambda;
    base.kappa = base_in.kappa;
    base.length_constant = base_in.length_constant;
    const HP tr = base.theta_r;

    const DimensionalParams<HP> ab = invert_AB(A, B, base);
    constitutive::GibbsModel<HP> model{HP(rho0_in), ab.a, ab.b, HP(c0_in)};
    const ScaleSet<HP> s = scales_from_model(model, base);
    const HP c0_dimless = model.c0 * base.vartheta0 * model.rho0 / base.pi0;

    ExpansionChecks out;
    out.A = A_in;
    out.B = B_in;
    const HP x = x_AB(A, B, tr);
    out.x_AB = static_cast<double>(x);
    const HP k1 = expansion::k1_printed(A, B, tr, c0_dimless, base.vartheta0);
    out.k1 = static_cast<double>(k1);
    out.k2 = 1.0 / out.k1;
    const HP k1x = model.rho0 * s.phi0 / s.pi;
    out.k1_exact = static_cast<double>(k1x);

    HP rho_sup(0), rho_x_sup(0), c1_sup(0), rem_sup(0), id_res(0), id_printed(0), coef_res(0), sign_res(0);
    const int n = grid.points;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const HP p = HP(grid.p_lo) + (HP(grid.p_hi) - HP(grid.p_lo)) * i / (n - 1);
            const HP th = HP(grid.theta_lo) + (HP(grid.theta_hi) - HP(grid.theta_lo)) * j / (n - 1);
            const constitutive::ThermoPoint<HP> dim{s.pi * p, s.vartheta * (th + tr)};
            if (!constitutive::admissible(model, dim))
                throw DomainError("verify_assumptions: grid point (p=" + std::to_string(static_cast<double>(p)) +
                                  ", theta=" + std::to_string(static_cast<double>(th)) +
                                  ") maps outside the admissible domain");
            // nondimensional coefficients from the dimensional closed forms
            const HP dens = constitutive::density(model, dim) * s.phi0 / s.pi;  // 1 / d_p phi^{A,B}
            const HP alpha_ratio = constitutive::alpha(model, dim) * s.vartheta;
            const HP beta_ratio = constitutive::beta(model, dim) * s.pi;
            const HP heat = constitutive::specific_heat_cp(model, dim) * s.vartheta / s.phi0;

            const HP lin = 1 - A * (th + tr) + B * p;
            const HP rr = expansion::rho_r_printed(A, B, tr, p, th);
            const HP rx = expansion::rho_r_exact(A, B, tr, p, th);
            const HP cc = expansion::c1(A, B, tr, p, th);
            const HP bracket = expansion::coefficient_bracket(A, B, p, th);

            rho_sup = std::max<HP>(rho_sup, abs(rr));
            rho_x_sup = std::max<HP>(rho_x_sup, abs(rx));
            c1_sup = std::max<HP>(c1_sup, abs(cc));
            rem_sup = std::max<HP>(rem_sup, abs(bracket - 1));
            id_res = std::max<HP>(id_res, abs((lin + rx) * k1x - dens) / abs(dens));
            id_printed = std::max<HP>(id_printed, abs((lin + rr) * k1 - dens) / abs(dens));
            coef_res = std::max<HP>(coef_res, abs(A * bracket - alpha_ratio) / abs(alpha_ratio));
            coef_res = std::max<HP>(coef_res, abs(B * bracket - beta_ratio) / abs(beta_ratio));
            coef_res = std::max<HP>(coef_res, abs((c0_dimless + A * A * cc) / k1x - heat) / abs(heat));
            sign_res = std::max<HP>(sign_res, abs(alpha_ratio / A - beta_ratio / B) / abs(alpha_ratio / A));
        }
    }
    out.rho_r_sup = static_cast<double>(rho_sup);
    out.rho_r_ratio = static_cast<double>(rho_sup / (A * A + B * B + A * B));
    out.c1_sup = static_cast<double>(c1_sup);
    out.alpha1_sup = static_cast<double>(rem_sup);
    out.beta1_sup = static_cast<double>(rem_sup);
    out.rho_r_exact_sup = static_cast<double>(rho_x_sup);
    out.density_identity_residual = static_cast<double>(id_res);
    out.printed_identity_residual = static_cast<double>(id_printed);
    out.coefficient_identity_residual = static_cast<double>(coef_res);
    out.sign_structure_residual = static_cast<double>(sign_res);
    return out;
}

inline nlohmann::json to_json(const ExpansionChecks& c, const RegimeReport& r) {
    nlohmann::json j;
    j["A"] = c.A;
    j["B"] = c.B;
    j["x_AB"] = c.x_AB;
    j["k1"] = c.k1;
    j["k2"] = c.k2;
    j["rho_r_sup"] = c.rho_r_sup;
    j["rho_r_ratio"] = c.rho_r_ratio;
    j["c1_sup"] = c.c1_sup;
    j["alpha1_sup"] = c.alpha1_sup;
    j["beta1_sup"] = c.beta1_sup;
    j["exact"] = {{"k1", c.k1_exact},
                  {"rho_r_sup", c.rho_r_exact_sup},
                  {"density_identity_residual", c.density_identity_residual},
                  {"coefficient_identity_residual", c.coefficient_identity_residual}};
    j["printed_identity_residual"] = c.printed_identity_residual;
    j["sign_structure_residual"] = c.sign_structure_residual;
    j["regimes"] = {{"limit", {{"pass", r.limit_pass}, {"B_over_A", r.B_over_A}}},
                    {"expansion", {{"pass", r.expansion_pass}, {"A2_le_B", r.A2_le_B}, {"B_le_A", r.B_le_A}}},
                    {"example_condition", {{"pass", r.example_pass}, {"ratio", r.example_ratio}}}};
    return j;
}

inline nlohmann::json to_json(const DimensionlessGroups& g) {
    nlohmann::json j;
    j["A"] = g.A;
    j["B"] = g.B;
    j["gamma"] = g.gamma;
    j["re_mu"] = g.re_mu;
    j["re_lambda"] = std::isinf(g.re_lambda) ? nlohmann::json("inf") : nlohmann::json(g.re_lambda);
    j["pr"] = g.pr;
    j["c0"] = g.c0;
    j["theta_r"] = g.theta_r;
    j["in_band"] = {{"gamma", g.gamma_in_band},
                    {"re_mu", g.re_mu_in_band},
                    {"re_lambda", g.re_lambda_in_band},
                    {"pr", g.pr_in_band}};
    return j;
}

}  // namespace oblimit::nondim
