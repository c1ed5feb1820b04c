#include "chanstab/grid.hpp"

#include <algorithm>
#include <cmath>

namespace chanstab {

BoundaryProfile& BoundaryProfile::operator+=(const BoundaryProfile& o) {
    in_vx += o.in_vx;
    in_vy += o.in_vy;
    out_vx += o.out_vx;
    out_vy += o.out_vy;
    bot_vx += o.bot_vx;
    bot_vy += o.bot_vy;
    top_vx += o.top_vx;
    top_vy += o.top_vy;
    return *this;
}

BoundaryProfile& BoundaryProfile::operator*=(double c) {
    in_vx *= c;
    in_vy *= c;
    out_vx *= c;
    out_vy *= c;
    bot_vx *= c;
    bot_vy *= c;
    top_vx *= c;
    top_vy *= c;
    return *this;
}

StaggeredVelocityField StaggeredVelocityField::poiseuille(const GridGeometry& g) {
    StaggeredVelocityField f(g);
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double y = g.yu(j);
            f.u(i, j) = y * (1.0 - y);
        }
    // v = 0 everywhere; tangential traces vanish (U(0) = U(1) = 0).
    return f;
}

StaggeredVelocityField& StaggeredVelocityField::operator+=(const StaggeredVelocityField& o) {
    u += o.u;
    v += o.v;
    tan_in += o.tan_in;
    tan_out += o.tan_out;
    tan_bot += o.tan_bot;
    tan_top += o.tan_top;
    return *this;
}

StaggeredVelocityField& StaggeredVelocityField::operator-=(const StaggeredVelocityField& o) {
    u -= o.u;
    v -= o.v;
    tan_in -= o.tan_in;
    tan_out -= o.tan_out;
    tan_bot -= o.tan_bot;
    tan_top -= o.tan_top;
    return *this;
}

StaggeredVelocityField& StaggeredVelocityField::operator*=(double c) {
    u *= c;
    v *= c;
    tan_in *= c;
    tan_out *= c;
    tan_bot *= c;
    tan_top *= c;
    return *this;
}

namespace {

/// 1D interpolation helper: positions p_k = off + k*h, k = 0..n-1, with
/// optional wall samples at the ends (wall0 at coordinate lo, wall1 at hi).
struct Axis {
    double off, h, lo, hi;
    int n;
};

}  // namespace

Vec2 StaggeredVelocityField::eval(double x, double y) const {
    const auto& g = grid;
    if (x < 0.0 || x > g.d || y < 0.0 || y > 1.0) return {0.0, 0.0};

    // u component: lattice (xu(i), yu(j)), walls at y=0 (tan_bot) and y=1.
    double uval;
    {
        const double fx = std::clamp(x / g.hx, 0.0, static_cast<double>(g.nx));
        const int i0 = std::min(static_cast<int>(fx), g.nx - 1);
        const double ax = fx - i0;
        auto column = [&](int i) -> double {
            const double fy = y / g.hy - 0.5;
            if (fy <= 0.0) {
                // Between the bottom wall trace and the first row.
                const double t = y / (0.5 * g.hy);
                const double wall = 0.5 * (tan_bot(i) + tan_bot(std::min(i + 1, g.nx)));
                return wall * (1.0 - t) + u(i, 0) * t;
            }
            if (fy >= g.ny - 1) {
                const double t = (1.0 - y) / (0.5 * g.hy);
                const double wall = 0.5 * (tan_top(i) + tan_top(std::min(i + 1, g.nx)));
                return wall * (1.0 - t) + u(i, g.ny - 1) * t;
            }
            const int j0 = static_cast<int>(fy);
            const double ay = fy - j0;
            return u(i, j0) * (1.0 - ay) + u(i, j0 + 1) * ay;
        };
        uval = column(i0) * (1.0 - ax) + column(i0 + 1) * ax;
    }

    // v component: lattice (xv(i), yv(j)), walls at x=0 (tan_in) and x=d.
    double vval;
    {
        const double fy = std::clamp(y / g.hy, 0.0, static_cast<double>(g.ny));
        const int j0 = std::min(static_cast<int>(fy), g.ny - 1);
        const double ay = fy - j0;
        auto row = [&](int j) -> double {
            const double fx = x / g.hx - 0.5;
            if (fx <= 0.0) {
                const double t = x / (0.5 * g.hx);
                const double wall = 0.5 * (tan_in(j) + tan_in(std::min(j + 1, g.ny)));
                return wall * (1.0 - t) + v(0, j) * t;
            }
            if (fx >= g.nx - 1) {
                const double t = (g.d - x) / (0.5 * g.hx);
                const double wall = 0.5 * (tan_out(j) + tan_out(std::min(j + 1, g.ny)));
                return wall * (1.0 - t) + v(g.nx - 1, j) * t;
            }
            const int i0 = static_cast<int>(fx);
            const double ax = fx - i0;
            return v(i0, j) * (1.0 - ax) + v(i0 + 1, j) * ax;
        };
        vval = row(j0) * (1.0 - ay) + row(j0 + 1) * ay;
    }
    return {uval, vval};
}

Eigen::VectorXd StaggeredVelocityField::interior() const {
    const auto& g = grid;
    Eigen::VectorXd w(g.n_interior());
    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) w(g.iu(i, j)) = u(i, j);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) w(g.iv(i, j)) = v(i, j);
    return w;
}

void StaggeredVelocityField::set_interior(const Eigen::VectorXd& w) {
    const auto& g = grid;
    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) u(i, j) = w(g.iu(i, j));
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) v(i, j) = w(g.iv(i, j));
}

StaggeredVelocityField StaggeredVelocityField::from_interior(const GridGeometry& g,
                                                             const Eigen::VectorXd& w) {
    StaggeredVelocityField f(g);
    f.set_interior(w);
    return f;
}

void StaggeredVelocityField::set_boundary(const BoundaryProfile& p) {
    const auto& g = grid;
    for (int j = 0; j < g.ny; ++j) {
        u(0, j) = p.in_vx(j);
        u(g.nx, j) = p.out_vx(j);
    }
    for (int i = 0; i < g.nx; ++i) {
        v(i, 0) = p.bot_vy(i);
        v(i, g.ny) = p.top_vy(i);
    }
    // Tangential traces at corner/edge levels from the cell-center samples;
    // profiles vanish towards the corners, so one-sided halves are fine there.
    auto to_levels = [](const Eigen::ArrayXd& samples) {
        const int n = static_cast<int>(samples.size());
        Eigen::ArrayXd lv(n + 1);
        lv(0) = 0.5 * samples(0);
        for (int k = 1; k < n; ++k) lv(k) = 0.5 * (samples(k - 1) + samples(k));
        lv(n) = 0.5 * samples(n - 1);
        return lv;
    };
    tan_in = to_levels(p.in_vy);
    tan_out = to_levels(p.out_vy);
    tan_bot = to_levels(p.bot_vx);
    tan_top = to_levels(p.top_vx);
}

BoundaryProfile StaggeredVelocityField::boundary() const {
    const auto& g = grid;
    BoundaryProfile p(g);
    for (int j = 0; j < g.ny; ++j) {
        p.in_vx(j) = u(0, j);
        p.out_vx(j) = u(g.nx, j);
        p.in_vy(j) = 0.5 * (tan_in(j) + tan_in(j + 1));
        p.out_vy(j) = 0.5 * (tan_out(j) + tan_out(j + 1));
    }
    for (int i = 0; i < g.nx; ++i) {
        p.bot_vy(i) = v(i, 0);
        p.top_vy(i) = v(i, g.ny);
        p.bot_vx(i) = 0.5 * (tan_bot(i) + tan_bot(i + 1));
        p.top_vx(i) = 0.5 * (tan_top(i) + tan_top(i + 1));
    }
    return p;
}

}  // namespace chanstab
