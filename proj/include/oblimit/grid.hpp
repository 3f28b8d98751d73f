#pragma once

// Staggered (MAC) grid on the periodic channel [0, lx) x [0, 1].
//
//   u(i, j) at (i dx, (j + 1/2) dy),          i < nx, j < ny
//   w(i, j) at ((i + 1/2) dx, j dy),          i < nx, j <= ny (walls at j = 0, ny)
//   scalars at ((i + 1/2) dx, (j + 1/2) dy),  i < nx, j < ny
//
// Storage is row-major, index j * nx + i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "oblimit/errors.hpp"

namespace oblimit {

struct Grid {
    int nx{64};
    int ny{64};
    double lx{1.0};

    Grid() = default;
    Grid(int nx_, int ny_, double lx_ = 1.0) : nx(nx_), ny(ny_), lx(lx_) { validate(); }

    void validate() const {
        if (nx < 8 || ny < 8) throw ParameterError("Grid: nx, ny must be >= 8");
        if (!(lx > 0) || !std::isfinite(lx)) throw ParameterError("Grid: lx must be finite and > 0");
    }
    double dx() const { return lx / nx; }
    double dy() const { return 1.0 / ny; }
    double cell_area() const { return dx() * dy(); }

    double xc(int i) const { return (i + 0.5) * dx(); }
    double yc(int j) const { return (j + 0.5) * dy(); }
    double xf(int i) const { return i * dx(); }
    double yn(int j) const { return j * dy(); }

    int wrap(int i) const { return ((i % nx) + nx) % nx; }

    bool operator==(const Grid& o) const { return nx == o.nx && ny == o.ny && lx == o.lx; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

class Field2D {
public:
    Field2D() = default;
    Field2D(int nx, int ny, double value = 0.0) : nx_(nx), ny_(ny), data_(std::size_t(nx) * ny, value) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int i, int j) { return data_[std::size_t(j) * nx_ + i]; }
    double operator()(int i, int j) const { return data_[std::size_t(j) * nx_ + i]; }
    double& operator[](std::size_t k) { return data_[k]; }
    double operator[](std::size_t k) const { return data_[k]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Field2D& operator+=(const Field2D& o) {
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Field2D& operator-=(const Field2D& o) {
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Field2D& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }
    /// this += s * o
    void axpy(double s, const Field2D& o) {
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    }

    double mean() const {
        double s = 0;
        for (double v : data_) s += v;
        return data_.empty() ? 0.0 : s / double(data_.size());
    }
    double max_abs() const {
        double m = 0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }
    bool same_shape(const Field2D& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

private:
    int nx_{0};
    int ny_{0};
    std::vector<double> data_;
};

inline Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
inline Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
inline Field2D operator*(double s, Field2D a) { return a *= s; }

inline Field2D make_u(const Grid& g) { return Field2D(g.nx, g.ny); }
inline Field2D make_w(const Grid& g) { return Field2D(g.nx, g.ny + 1); }
inline Field2D make_scalar(const Grid& g) { return Field2D(g.nx, g.ny); }

/// One time level. `p` is the physical pressure of the system being solved.
/// The full system additionally carries q = (p - f/gamma)/A and the last two
/// one-step rates of q; they stay empty for the other systems.
struct FieldState {
    Grid grid;
    Field2D u, w, theta, p;
    double t{0};
    Field2D q, q_rate, q_rate_prev;

    FieldState() = default;
    explicit FieldState(const Grid& g)
        : grid(g), u(make_u(g)), w(make_w(g)), theta(make_scalar(g)), p(make_scalar(g)) {}

    bool has_full_state() const { return !q.empty(); }
    void ensure_full_state() {
        if (q.empty()) q = make_scalar(grid);
        if (q_rate.empty()) q_rate = make_scalar(grid);
        if (q_rate_prev.empty()) q_rate_prev = make_scalar(grid);
    }
    bool all_finite() const {
        return u.all_finite() && w.all_finite() && theta.all_finite() && p.all_finite() &&
               (q.empty() || q.all_finite());
    }
};

}  // namespace oblimit
