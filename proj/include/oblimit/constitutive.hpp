#pragma once

// Example Gibbs free energy with density linear in pressure and temperature,
//
//   phi(p, theta) = (b rho0)^-1 (ln(1 + b p - a theta) - ln(1 - a theta))
//                   - c0 theta (ln theta - 1),
//
// and the thermodynamic coefficients derived from it. Every coefficient is
// available in closed form and as central finite differences of phi.

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "oblimit/errors.hpp"

namespace oblimit::constitutive {

/// Log arguments below this value are rejected.
inline constexpr double kDomainMargin = 1e-10;

template <class Real = double>
struct GibbsModel {
    Real rho0{1};  ///< reference density [kg m^-3]
    Real a{0};     ///< thermal parameter [K^-1]
    Real b{0};     ///< compressibility parameter [Pa^-1]
    Real c0{1};    ///< specific-heat constant

    void validate() const {
        if (!(rho0 > 0)) throw ParameterError("GibbsModel: rho0 must be > 0");
        if (!(a >= 0)) throw ParameterError("GibbsModel: a must be >= 0");
        if (!(b >= 0)) throw ParameterError("GibbsModel: b must be >= 0");
        if (!(c0 > 0)) throw ParameterError("GibbsModel: c0 must be > 0");
    }

    template <class Other>
    GibbsModel<Other> cast() const {
        return {Other(rho0), Other(a), Other(b), Other(c0)};
    }
};

template <class Real = double>
struct ThermoPoint {
    Real p{0};      ///< pressure [Pa]
    Real theta{1};  ///< absolute temperature [K]

    template <class Other>
    ThermoPoint<Other> cast() const {
        return {Other(p), Other(theta)};
    }
};

enum class Evaluation { closed_form, finite_difference };

namespace detail {

template <class Real>
std::string describe(const ThermoPoint<Real>& pt) {
    std::ostringstream os;
    os.precision(17);
    os << "(p=" << pt.p << ", theta=" << pt.theta << ")";
    return os.str();
}

template <class Real>
Real pressure_bracket(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    return 1 + m.b * pt.p - m.a * pt.theta;
}

template <class Real>
Real thermal_bracket(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    return 1 - m.a * pt.theta;
}

template <class Real>
void require_density_domain(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    if (!(pressure_bracket(m, pt) >= Real(kDomainMargin)))
        throw DomainError("inadmissible point " + describe(pt) + ": 1 + b p - a theta > 0 violated");
}

template <class Real>
void require_potential_domain(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    if (!(m.b > 0))
        throw DomainError("Gibbs potential undefined for b = 0 (density-based coefficients remain available)");
    require_density_domain(m, pt);
    if (!(thermal_bracket(m, pt) >= Real(kDomainMargin)))
        throw DomainError("inadmissible point " + describe(pt) + ": 1 - a theta > 0 violated");
    if (!(pt.theta >= Real(kDomainMargin)))
        throw DomainError("inadmissible point " + describe(pt) + ": theta > 0 violated");
}

}  // namespace detail

/// Admissible for the potential: all three log arguments above the margin and b > 0.
template <class Real>
bool admissible(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    return m.b > 0 && detail::pressure_bracket(m, pt) >= Real(kDomainMargin) &&
           detail::thermal_bracket(m, pt) >= Real(kDomainMargin) && pt.theta >= Real(kDomainMargin);
}

template <class Real>
Real gibbs_phi(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    using std::log;
    detail::require_potential_domain(m, pt);
    const Real mech = (log(detail::pressure_bracket(m, pt)) - log(detail::thermal_bracket(m, pt))) / (m.b * m.rho0);
    return mech - m.c0 * pt.theta * (log(pt.theta) - 1);
}

template <class Real>
Real density(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt) {
    detail::require_density_domain(m, pt);
    return m.rho0 * detail::pressure_bracket(m, pt);
}

// ---------------------------------------------------------------------------
// Finite differences of an arbitrary potential phi(p, theta).
//
// First derivatives use h = eps^(1/3) max(1, |x|), second derivatives
// h = eps^(1/4) max(1, |x|), where eps is the machine epsilon of Real.
// ---------------------------------------------------------------------------
namespace fd {

template <class Real>
Real first_step(const Real& x) {
    using std::abs;
    using std::cbrt;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real scale = abs(x) > 1 ? Real(abs(x)) : Real(1);
    return Real(cbrt(eps)) * scale;
}

template <class Real>
Real second_step(const Real& x) {
    using std::abs;
    using std::sqrt;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const Real scale = abs(x) > 1 ? Real(abs(x)) : Real(1);
    return Real(sqrt(sqrt(eps))) * scale;
}

template <class Real, class Phi>
Real dp(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real h = first_step(pt.p);
    return (phi(pt.p + h, pt.theta) - phi(pt.p - h, pt.theta)) / (2 * h);
}

template <class Real, class Phi>
Real dtheta(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real h = first_step(pt.theta);
    return (phi(pt.p, pt.theta + h) - phi(pt.p, pt.theta - h)) / (2 * h);
}

template <class Real, class Phi>
Real dpp(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real h = second_step(pt.p);
    return (phi(pt.p + h, pt.theta) - 2 * phi(pt.p, pt.theta) + phi(pt.p - h, pt.theta)) / (h * h);
}

template <class Real, class Phi>
Real dthth(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real h = second_step(pt.theta);
    return (phi(pt.p, pt.theta + h) - 2 * phi(pt.p, pt.theta) + phi(pt.p, pt.theta - h)) / (h * h);
}

template <class Real, class Phi>
Real dpth(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real hp = second_step(pt.p);
    const Real ht = second_step(pt.theta);
    return (phi(pt.p + hp, pt.theta + ht) - phi(pt.p + hp, pt.theta - ht) - phi(pt.p - hp, pt.theta + ht) +
            phi(pt.p - hp, pt.theta - ht)) /
           (4 * hp * ht);
}

}  // namespace fd

/// Coefficients of any Gibbs potential, computed by finite differences.
/// This is the evaluation interface a non-example potential would plug into.
template <class Real>
struct Coefficients {
    Real density;
    Real alpha;
    Real beta;
    Real cp;
    Real entropy;
};

template <class Real, class Phi>
Coefficients<Real> coefficients_from_potential(Phi&& phi, const ThermoPoint<Real>& pt) {
    const Real phi_p = fd::dp(phi, pt);
    return {1 / phi_p, fd::dpth(phi, pt) / phi_p, -fd::dpp(phi, pt) / phi_p, -pt.theta * fd::dthth(phi, pt),
            -fd::dtheta(phi, pt)};
}

namespace detail {

template <class Real>
auto potential_of(const GibbsModel<Real>& m) {
    return [&m](const Real& p, const Real& theta) { return gibbs_phi(m, ThermoPoint<Real>{p, theta}); };
}

}  // namespace detail

/// Thermal expansion coefficient, (d_p phi)^-1 d_theta d_p phi.
template <class Real>
Real alpha(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt, Evaluation how = Evaluation::closed_form) {
    if (how == Evaluation::finite_difference) {
        auto phi = detail::potential_of(m);
        return fd::dpth(phi, pt) / fd::dp(phi, pt);
    }
    detail::require_density_domain(m, pt);
    return m.a / detail::pressure_bracket(m, pt);
}

/// Isothermal compressibility, -(d_p phi)^-1 d_p^2 phi.
template <class Real>
Real beta(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt, Evaluation how = Evaluation::closed_form) {
    if (how == Evaluation::finite_difference) {
        auto phi = detail::potential_of(m);
        return -fd::dpp(phi, pt) / fd::dp(phi, pt);
    }
    detail::require_density_domain(m, pt);
    return m.b / detail::pressure_bracket(m, pt);
}

/// Specific heat at constant pressure, -theta d_theta^2 phi.
template <class Real>
Real specific_heat_cp(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt,
                      Evaluation how = Evaluation::closed_form) {
    if (how == Evaluation::finite_difference) return -pt.theta * fd::dthth(detail::potential_of(m), pt);
    detail::require_potential_domain(m, pt);
    const Real x = detail::pressure_bracket(m, pt);
    const Real y = detail::thermal_bracket(m, pt);
    return m.c0 + pt.theta * m.a * m.a / (m.b * m.rho0) * (1 / (x * x) - 1 / (y * y));
}

/// Entropy, -d_theta phi.
template <class Real>
Real entropy(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt, Evaluation how = Evaluation::closed_form) {
    using std::log;
    if (how == Evaluation::finite_difference) return -fd::dtheta(detail::potential_of(m), pt);
    detail::require_potential_domain(m, pt);
    const Real x = detail::pressure_bracket(m, pt);
    const Real y = detail::thermal_bracket(m, pt);
    return m.a / (m.b * m.rho0) * (1 / x - 1 / y) + m.c0 * log(pt.theta);
}

/// Reconstructs the Helmholtz energy psi(rho, theta) = phi - p / rho by
/// inverting the linear equation of state, differentiates it in rho, and
/// returns |rho^2 d_rho psi - p| / max(1, |p|).
///
/// `fd_step` is relative to rho; pass 0 for the eps^(1/3) default.
template <class Real>
Real legendre_consistency(const GibbsModel<Real>& m, const ThermoPoint<Real>& pt, Real fd_step = Real(0)) {
    using std::abs;
    using std::cbrt;
    detail::require_potential_domain(m, pt);
    const Real rho = density(m, pt);
    const Real rel = fd_step > 0 ? fd_step : Real(cbrt(std::numeric_limits<Real>::epsilon()));
    const Real h = rel * rho;
    auto pressure_of = [&](const Real& r) { return (r / m.rho0 - 1 + m.a * pt.theta) / m.b; };
    auto psi = [&](const Real& r) {
        const ThermoPoint<Real> q{pressure_of(r), pt.theta};
        if (!admissible(m, q))
            throw DomainError("legendre_consistency: density perturbation leaves the admissible domain at " +
                              detail::describe(q));
        return gibbs_phi(m, q) - q.p / r;
    };
    const Real dpsi = (psi(rho + h) - psi(rho - h)) / (2 * h);
    const Real scale = abs(pt.p) > 1 ? Real(abs(pt.p)) : Real(1);
    return Real(abs(rho * rho * dpsi - pt.p)) / scale;
}

}  // namespace oblimit::constitutive
