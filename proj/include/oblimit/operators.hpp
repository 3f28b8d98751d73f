#pragma once

// Second-order MAC stencils on the periodic channel. Velocity is no-slip on
// both walls; cell-centred scalars take Dirichlet wall values through ghost
// cells (Laplacians) or one-sided quadratics (first derivatives).

#include <algorithm>
#include <cmath>

#include "oblimit/grid.hpp"

namespace oblimit::ops {

struct WallValues {
    double bottom{0};
    double top{0};
};

/// div v at cell centres.
inline void divergence(const Grid& g, const Field2D& u, const Field2D& w, Field2D& out) {
    const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (u(g.wrap(i + 1), j) - u(i, j)) * idx + (w(i, j + 1) - w(i, j)) * idy;
}

/// d/dx of a cell-centred field, on u faces.
inline void grad_x(const Grid& g, const Field2D& s, Field2D& out) {
    const double idx = 1.0 / g.dx();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out(i, j) = (s(i, j) - s(g.wrap(i - 1), j)) * idx;
}

/// d/dy of a cell-centred field, on interior w nodes; wall rows are zero.
inline void grad_y(const Grid& g, const Field2D& s, Field2D& out) {
    const double idy = 1.0 / g.dy();
    for (int i = 0; i < g.nx; ++i) {
        out(i, 0) = 0;
        out(i, g.ny) = 0;
    }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out(i, j) = (s(i, j) - s(i, j - 1)) * idy;
}

/// Laplacian of a cell-centred field (u or a scalar) with Dirichlet wall values.
inline void laplacian_dirichlet(const Grid& g, const Field2D& s, WallValues wall, Field2D& out) {
    const double idx2 = 1.0 / (g.dx() * g.dx()), idy2 = 1.0 / (g.dy() * g.dy());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double c = s(i, j);
            const double below = j > 0 ? s(i, j - 1) : 2 * wall.bottom - c;
            const double above = j < g.ny - 1 ? s(i, j + 1) : 2 * wall.top - c;
            out(i, j) = (s(g.wrap(i + 1), j) - 2 * c + s(g.wrap(i - 1), j)) * idx2 + (above - 2 * c + below) * idy2;
        }
    }
}

/// Laplacian of a cell-centred field with zero normal derivative at the walls.
inline void laplacian_neumann(const Grid& g, const Field2D& s, Field2D& out) {
    const double idx2 = 1.0 / (g.dx() * g.dx()), idy2 = 1.0 / (g.dy() * g.dy());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double c = s(i, j);
            const double below = j > 0 ? s(i, j - 1) : c;
            const double above = j < g.ny - 1 ? s(i, j + 1) : c;
            out(i, j) = (s(g.wrap(i + 1), j) - 2 * c + s(g.wrap(i - 1), j)) * idx2 + (above - 2 * c + below) * idy2;
        }
    }
}

/// Laplacian of w on interior nodes; wall rows are zero.
inline void laplacian_w(const Grid& g, const Field2D& w, Field2D& out) {
    const double idx2 = 1.0 / (g.dx() * g.dx()), idy2 = 1.0 / (g.dy() * g.dy());
    for (int i = 0; i < g.nx; ++i) {
        out(i, 0) = 0;
        out(i, g.ny) = 0;
    }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (w(g.wrap(i + 1), j) - 2 * w(i, j) + w(g.wrap(i - 1), j)) * idx2 +
                        (w(i, j + 1) - 2 * w(i, j) + w(i, j - 1)) * idy2;
}

/// d/dy of a cell-centred field at the centre of row j. Interior rows are
/// central; wall rows use the quadratic through the wall value.
inline double ddy_centre(const Grid& g, const Field2D& s, int i, int j, WallValues wall) {
    const double idy = 1.0 / g.dy();
    if (j == 0) return (-4.0 / 3.0 * wall.bottom + s(i, 0) + s(i, 1) / 3.0) * idy;
    if (j == g.ny - 1) return (4.0 / 3.0 * wall.top - s(i, j) - s(i, j - 1) / 3.0) * idy;
    return (s(i, j + 1) - s(i, j - 1)) * 0.5 * idy;
}

/// Same without wall values: one-sided second-order differences in wall rows.
inline double ddy_centre_free(const Grid& g, const Field2D& s, int i, int j) {
    const double idy = 1.0 / g.dy();
    if (j == 0) return (-3 * s(i, 0) + 4 * s(i, 1) - s(i, 2)) * 0.5 * idy;
    if (j == g.ny - 1) return (3 * s(i, j) - 4 * s(i, j - 1) + s(i, j - 2)) * 0.5 * idy;
    return (s(i, j + 1) - s(i, j - 1)) * 0.5 * idy;
}

inline double ddx_centre(const Grid& g, const Field2D& s, int i, int j) {
    return (s(g.wrap(i + 1), j) - s(g.wrap(i - 1), j)) * 0.5 / g.dx();
}

inline double u_at_centre(const Grid& g, const Field2D& u, int i, int j) { return 0.5 * (u(i, j) + u(g.wrap(i + 1), j)); }
inline double w_at_centre(const Field2D& w, int i, int j) { return 0.5 * (w(i, j) + w(i, j + 1)); }

/// (v . grad) u on u faces.
inline void advect_u(const Grid& g, const Field2D& u, const Field2D& w, Field2D& out) {
    const WallValues noslip{};
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int im = g.wrap(i - 1);
            const double wbar = 0.25 * (w(im, j) + w(i, j) + w(im, j + 1) + w(i, j + 1));
            out(i, j) = u(i, j) * ddx_centre(g, u, i, j) + wbar * ddy_centre(g, u, i, j, noslip);
        }
    }
}

/// (v . grad) w on interior w nodes; wall rows are zero.
inline void advect_w(const Grid& g, const Field2D& u, const Field2D& w, Field2D& out) {
    const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
    for (int i = 0; i < g.nx; ++i) {
        out(i, 0) = 0;
        out(i, g.ny) = 0;
    }
    for (int j = 1; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int ip = g.wrap(i + 1);
            const double ubar = 0.25 * (u(i, j - 1) + u(ip, j - 1) + u(i, j) + u(ip, j));
            out(i, j) = ubar * (w(ip, j) - w(g.wrap(i - 1), j)) * 0.5 * idx + w(i, j) * (w(i, j + 1) - w(i, j - 1)) * 0.5 * idy;
        }
    }
}

/// v . grad s at cell centres, central differences.
inline void advect_scalar(const Grid& g, const Field2D& u, const Field2D& w, const Field2D& s, WallValues wall,
                          Field2D& out) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = u_at_centre(g, u, i, j) * ddx_centre(g, s, i, j) + w_at_centre(w, i, j) * ddy_centre(g, s, i, j, wall);
}

/// v . grad s at cell centres for a field without wall values (pressure-like).
inline void advect_scalar_free(const Grid& g, const Field2D& u, const Field2D& w, const Field2D& s, Field2D& out) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = u_at_centre(g, u, i, j) * ddx_centre(g, s, i, j) + w_at_centre(w, i, j) * ddy_centre_free(g, s, i, j);
}

/// v . grad s by first-order upwinding. In wall rows the upwind neighbour is
/// the wall value at distance dy/2, which keeps the update a convex
/// combination under dt (|u|/dx + 2|w|/dy) <= 1.
inline void advect_scalar_upwind(const Grid& g, const Field2D& u, const Field2D& w, const Field2D& s, WallValues wall,
                                 Field2D& out) {
    const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const double ub = u_at_centre(g, u, i, j);
            const double wb = w_at_centre(w, i, j);
            const double c = s(i, j);
            const double sx = ub > 0 ? (c - s(g.wrap(i - 1), j)) * idx : (s(g.wrap(i + 1), j) - c) * idx;
            double sy;
            if (wb > 0)
                sy = j > 0 ? (c - s(i, j - 1)) * idy : (c - wall.bottom) * 2 * idy;
            else
                sy = j < g.ny - 1 ? (s(i, j + 1) - c) * idy : (wall.top - c) * 2 * idy;
            out(i, j) = ub * sx + wb * sy;
        }
    }
}

/// Cell-centred values averaged onto u faces.
inline void centre_to_u(const Grid& g, const Field2D& s, Field2D& out) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out(i, j) = 0.5 * (s(i, j) + s(g.wrap(i - 1), j));
}

/// Cell-centred values averaged onto w nodes; wall rows take the adjacent cell value.
inline void centre_to_w(const Grid& g, const Field2D& s, Field2D& out) {
    for (int i = 0; i < g.nx; ++i) {
        out(i, 0) = s(i, 0);
        out(i, g.ny) = s(i, g.ny - 1);
    }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out(i, j) = 0.5 * (s(i, j) + s(i, j - 1));
}

/// |D|^2 = D:D at cell centres, D the symmetric velocity gradient. The shear
/// part lives on cell corners and is averaged to the centre.
inline void strain_squared(const Grid& g, const Field2D& u, const Field2D& w, Field2D& out) {
    const double idx = 1.0 / g.dx(), idy = 1.0 / g.dy();
    // shear at corner (i, j): node x = i dx, y = j dy
    auto shear = [&](int i, int j) {
        double duy;
        if (j == 0)
            duy = u(i, 0) * 2 * idy;
        else if (j == g.ny)
            duy = -u(i, g.ny - 1) * 2 * idy;
        else
            duy = (u(i, j) - u(i, j - 1)) * idy;
        const double dwx = (w(i, j) - w(g.wrap(i - 1), j)) * idx;
        return 0.5 * (duy + dwx);
    };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const int ip = g.wrap(i + 1);
            const double dxx = (u(ip, j) - u(i, j)) * idx;
            const double dyy = (w(i, j + 1) - w(i, j)) * idy;
            const double dxy = 0.25 * (shear(i, j) + shear(ip, j) + shear(i, j + 1) + shear(ip, j + 1));
            out(i, j) = dxx * dxx + dyy * dyy + 2 * dxy * dxy;
        }
    }
}

/// Discrete L2 norms with cell-area weights. w norms skip the wall rows.
inline double l2_centre(const Grid& g, const Field2D& s) {
    double sum = 0;
    for (std::size_t k = 0; k < s.size(); ++k) sum += s[k] * s[k];
    return std::sqrt(sum * g.cell_area());
}
inline double l2_u(const Grid& g, const Field2D& u) { return l2_centre(g, u); }
inline double l2_w(const Grid& g, const Field2D& w) {
    double sum = 0;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) sum += w(i, j) * w(i, j);
    return std::sqrt(sum * g.cell_area());
}

}  // namespace oblimit::ops
