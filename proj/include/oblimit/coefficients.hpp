#pragma once

// Coefficients of the nondimensional full system for the example model,
// written in (A, B) with the exact normalization k1 = rho0 phi0 / pi:
//
//   d_thp phi / d_p phi = A / N,   d_pp phi / d_p phi = -B / N,
//   1 / d_p phi = k1 N / x,        -(theta + theta_r) d_thth phi / d_p phi = N (c0 + A^2 c1) / x,
//
// with N = 1 + B (p - 1) - A (theta - 1) and x = 1 + A (1 + theta_r) - B.

#include <cmath>
#include <sstream>
#include <string>

#include "oblimit/errors.hpp"
#include "oblimit/nondim.hpp"

namespace oblimit::nondim {

struct ExampleCoefficients {
    double A{0};
    double B{0};
    double theta_r{10};
    double c0{1};  ///< dimensionless specific-heat constant
    double k1{1};
    double x{1};

    static ExampleCoefficients make(double A, double B, double theta_r, double c0, double vartheta0 = 1.0) {
        if (!(A > 0) || !(B >= 0)) throw ParameterError("ExampleCoefficients: A > 0 and B >= 0 required");
        if (!(theta_r > 0.5)) throw ParameterError("ExampleCoefficients: theta_r > 1/2 required");
        ExampleCoefficients c;
        c.A = A;
        c.B = B;
        c.theta_r = theta_r;
        c.c0 = c0;
        c.x = x_AB(A, B, theta_r);
        if (!(c.x > 0)) throw ParameterError("ExampleCoefficients: x_AB must be > 0");
        c.k1 = expansion::k1_exact(A, B, theta_r, c0, vartheta0);
        return c;
    }

    template <class T>
    T bracket(const T& p, const T& theta) const {
        return 1 + B * (p - 1) - A * (theta - 1);
    }
    template <class T>
    T thermal_bracket(const T& theta) const {
        return 1 - B - A * (theta - 1);
    }
    /// 1 / d_p phi
    template <class T>
    T density(const T& p, const T& theta) const {
        return k1 * bracket(p, theta) / x;
    }
    /// (R - 1) / A, evaluated without cancellation for small A.
    template <class T>
    T density_excess_over_A(const T& p, const T& theta) const {
        const T n = bracket(p, theta);
        return ((k1 - 1) / A * n + (B / A) * p - (theta + theta_r)) / x;
    }
    template <class T>
    T alpha(const T& p, const T& theta) const {
        return A / bracket(p, theta);
    }
    template <class T>
    T beta(const T& p, const T& theta) const {
        return B / bracket(p, theta);
    }
    template <class T>
    T c1(const T& p, const T& theta) const {
        const T n = bracket(p, theta);
        const T m = thermal_bracket(theta);
        return -x * p * (theta + theta_r) * (2 + B * (p - 2) - 2 * A * (theta - 1)) / (n * n * m * m);
    }
    /// Effective heat capacity multiplying theta-dot in the energy equation.
    template <class T>
    T heat_capacity(const T& p, const T& theta) const {
        return bracket(p, theta) * (c0 + A * A * c1(p, theta)) / x;
    }

    /// Throws DomainError when (p, theta) leaves the admissible set.
    void require_admissible(double p, double theta) const {
        const char* violated = nullptr;
        if (!(theta + theta_r > 0))
            violated = "theta + theta_r > 0";
        else if (!(bracket(p, theta) > 0))
            violated = "1 + B (p - 1) - A (theta - 1) > 0";
        else if (!(thermal_bracket(theta) > 0))
            violated = "1 - B - A (theta - 1) > 0";
        else if (!(heat_capacity(p, theta) > 0))
            violated = "heat capacity > 0";
        if (violated) {
            std::ostringstream os;
            os.precision(17);
            os << "coefficient domain violated at (p=" << p << ", theta=" << theta << "): " << violated;
            throw DomainError(os.str());
        }
    }
};

}  // namespace oblimit::nondim
