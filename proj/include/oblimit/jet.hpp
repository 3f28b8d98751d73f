#pragma once

// Second-order forward-mode jet in (x, y, t): value, gradient and Hessian.
// Used to differentiate manufactured fields exactly.

#include <array>
#include <cmath>

namespace oblimit {

struct Jet {
    static constexpr int kVars = 3;  // x, y, t
    double v{0};
    std::array<double, 3> d{};
    // symmetric Hessian, packed: xx, yy, tt, xy, xt, yt
    std::array<double, 6> h{};

    Jet() = default;
    Jet(double value) : v(value) {}  // NOLINT: constants promote implicitly

    static Jet variable(double value, int k) {
        Jet j(value);
        j.d[k] = 1;
        return j;
    }

    static constexpr int hidx(int a, int b) {
        if (a == b) return a;
        const int lo = a < b ? a : b, hi = a < b ? b : a;
        return lo == 0 ? (hi == 1 ? 3 : 4) : 5;
    }
    double dd(int a, int b) const { return h[hidx(a, b)]; }

    double dx() const { return d[0]; }
    double dy() const { return d[1]; }
    double dt() const { return d[2]; }
    double dxx() const { return h[0]; }
    double dyy() const { return h[1]; }
    double dxy() const { return h[3]; }
    double lap() const { return h[0] + h[1]; }
};

namespace detail {

// g(f) for a scalar function with g, g', g'' at f.v
inline Jet chain(const Jet& f, double g0, double g1, double g2) {
    Jet r(g0);
    for (int a = 0; a < 3; ++a) r.d[a] = g1 * f.d[a];
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) r.h[Jet::hidx(a, b)] = g1 * f.dd(a, b) + g2 * f.d[a] * f.d[b];
    return r;
}

}  // namespace detail

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r(a.v + b.v);
    for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] + b.d[k];
    for (int k = 0; k < 6; ++k) r.h[k] = a.h[k] + b.h[k];
    return r;
}
inline Jet operator-(const Jet& a) {
    Jet r(-a.v);
    for (int k = 0; k < 3; ++k) r.d[k] = -a.d[k];
    for (int k = 0; k < 6; ++k) r.h[k] = -a.h[k];
    return r;
}
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v);
    for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
    for (int p = 0; p < 3; ++p)
        for (int q = p; q < 3; ++q) {
            const int k = Jet::hidx(p, q);
            r.h[k] = a.h[k] * b.v + a.v * b.h[k] + a.d[p] * b.d[q] + a.d[q] * b.d[p];
        }
    return r;
}
inline Jet operator/(const Jet& a, const Jet& b) {
    const double inv = 1.0 / b.v;
    return a * detail::chain(b, inv, -inv * inv, 2 * inv * inv * inv);
}
inline Jet& operator+=(Jet& a, const Jet& b) { return a = a + b; }
inline Jet& operator-=(Jet& a, const Jet& b) { return a = a - b; }
inline Jet& operator*=(Jet& a, const Jet& b) { return a = a * b; }

inline Jet sin(const Jet& f) { return detail::chain(f, std::sin(f.v), std::cos(f.v), -std::sin(f.v)); }
inline Jet cos(const Jet& f) { return detail::chain(f, std::cos(f.v), -std::sin(f.v), -std::cos(f.v)); }
inline Jet exp(const Jet& f) {
    const double e = std::exp(f.v);
    return detail::chain(f, e, e, e);
}
inline Jet log(const Jet& f) { return detail::chain(f, std::log(f.v), 1 / f.v, -1 / (f.v * f.v)); }

}  // namespace oblimit
