#pragma once

#include <Eigen/Dense>

#include "chanstab/geometry.hpp"

namespace chanstab {

/// MAC staggered layout on (0,d) x (0,1): pressure and scalars at cell
/// centers, horizontal velocity u on vertical faces, vertical velocity v on
/// horizontal faces.
struct GridGeometry {
    int nx = 0;
    int ny = 0;
    double d = 1.0;
    double hx = 0.0;
    double hy = 0.0;

    GridGeometry() = default;
    GridGeometry(int nx_, int ny_, double d_)
        : nx(nx_), ny(ny_), d(d_), hx(d_ / nx_), hy(1.0 / ny_) {}
    static GridGeometry from_config(const ChannelConfig& cfg) {
        return GridGeometry(cfg.nx, cfg.ny, cfg.d);
    }

    // Sample positions.
    double xu(int i) const { return i * hx; }            // u-face x, i in [0, nx]
    double yu(int j) const { return (j + 0.5) * hy; }    // u-face y, j in [0, ny)
    double xv(int i) const { return (i + 0.5) * hx; }    // v-face x, i in [0, nx)
    double yv(int j) const { return j * hy; }            // v-face y, j in [0, ny]
    double xc(int i) const { return (i + 0.5) * hx; }    // cell-center x
    double yc(int j) const { return (j + 0.5) * hy; }    // cell-center y

    // Interior velocity degrees of freedom (zero-trace subspace layout).
    int n_u_interior() const { return (nx - 1) * ny; }
    int n_v_interior() const { return nx * (ny - 1); }
    int n_interior() const { return n_u_interior() + n_v_interior(); }
    int n_cells() const { return nx * ny; }
    int iu(int i, int j) const { return (i - 1) * ny + j; }              // i in [1, nx)
    int iv(int i, int j) const { return n_u_interior() + i * (ny - 1) + (j - 1); }  // j in [1, ny)
    int ic(int i, int j) const { return i * ny + j; }

    double cell_area() const { return hx * hy; }

    bool same_as(const GridGeometry& o) const {
        return nx == o.nx && ny == o.ny && d == o.d;
    }
};

/// Cell-centered scalar field (density, pressure, stream potentials).
struct ScalarGridField {
    GridGeometry grid;
    Eigen::ArrayXXd values;  // nx x ny

    ScalarGridField() = default;
    explicit ScalarGridField(const GridGeometry& g)
        : grid(g), values(Eigen::ArrayXXd::Zero(g.nx, g.ny)) {}

    double& at(int i, int j) { return values(i, j); }
    double at(int i, int j) const { return values(i, j); }
    double max_abs() const { return values.abs().maxCoeff(); }

    template <class F>
    static ScalarGridField sample(const GridGeometry& g, F&& f) {
        ScalarGridField s(g);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) s.values(i, j) = f(g.xc(i), g.yc(j));
        return s;
    }
};

/// Velocity trace on the four boundary segments, sampled at the boundary
/// face centers of the cells bordering each segment. Both velocity
/// components are stored; the normal component coincides with the staggered
/// boundary faces, the tangential component feeds ghost cells.
struct BoundaryProfile {
    GridGeometry grid;
    Eigen::ArrayXd in_vx, in_vy;    // ny samples at (0, yc(j))
    Eigen::ArrayXd out_vx, out_vy;  // ny samples at (d, yc(j))
    Eigen::ArrayXd bot_vx, bot_vy;  // nx samples at (xc(i), 0)
    Eigen::ArrayXd top_vx, top_vy;  // nx samples at (xc(i), 1)

    BoundaryProfile() = default;
    explicit BoundaryProfile(const GridGeometry& g)
        : grid(g),
          in_vx(Eigen::ArrayXd::Zero(g.ny)),
          in_vy(Eigen::ArrayXd::Zero(g.ny)),
          out_vx(Eigen::ArrayXd::Zero(g.ny)),
          out_vy(Eigen::ArrayXd::Zero(g.ny)),
          bot_vx(Eigen::ArrayXd::Zero(g.nx)),
          bot_vy(Eigen::ArrayXd::Zero(g.nx)),
          top_vx(Eigen::ArrayXd::Zero(g.nx)),
          top_vy(Eigen::ArrayXd::Zero(g.nx)) {}

    /// Net flux through the boundary, outward positive.
    double flux() const {
        double f = 0.0;
        f += grid.hy * (out_vx.sum() - in_vx.sum());
        f += grid.hx * (top_vy.sum() - bot_vy.sum());
        return f;
    }

    /// L2(Gamma) inner product with the per-sample quadrature.
    double dot(const BoundaryProfile& o) const {
        double s = 0.0;
        s += grid.hy * ((in_vx * o.in_vx).sum() + (in_vy * o.in_vy).sum());
        s += grid.hy * ((out_vx * o.out_vx).sum() + (out_vy * o.out_vy).sum());
        s += grid.hx * ((bot_vx * o.bot_vx).sum() + (bot_vy * o.bot_vy).sum());
        s += grid.hx * ((top_vx * o.top_vx).sum() + (top_vy * o.top_vy).sum());
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
    double max_abs() const {
        double m = 0.0;
        for (const auto* a : {&in_vx, &in_vy, &out_vx, &out_vy})
            m = std::max(m, a->size() ? a->abs().maxCoeff() : 0.0);
        for (const auto* a : {&bot_vx, &bot_vy, &top_vx, &top_vy})
            m = std::max(m, a->size() ? a->abs().maxCoeff() : 0.0);
        return m;
    }

    BoundaryProfile& operator+=(const BoundaryProfile& o);
    BoundaryProfile& operator*=(double c);
};

/// MAC velocity field. Normal boundary faces are stored in-array (u column 0
/// and nx, v row 0 and ny); tangential boundary traces are kept separately
/// and feed second-order ghost values.
struct StaggeredVelocityField {
    GridGeometry grid;
    Eigen::ArrayXXd u;  // (nx+1) x ny
    Eigen::ArrayXXd v;  // nx x (ny+1)
    // Tangential traces at the dof levels of the adjacent component:
    Eigen::ArrayXd tan_in, tan_out;  // v-component at x=0 / x=d, levels j=0..ny
    Eigen::ArrayXd tan_bot, tan_top; // u-component at y=0 / y=1, positions i=0..nx

    StaggeredVelocityField() = default;
    explicit StaggeredVelocityField(const GridGeometry& g)
        : grid(g),
          u(Eigen::ArrayXXd::Zero(g.nx + 1, g.ny)),
          v(Eigen::ArrayXXd::Zero(g.nx, g.ny + 1)),
          tan_in(Eigen::ArrayXd::Zero(g.ny + 1)),
          tan_out(Eigen::ArrayXd::Zero(g.ny + 1)),
          tan_bot(Eigen::ArrayXd::Zero(g.nx + 1)),
          tan_top(Eigen::ArrayXd::Zero(g.nx + 1)) {}

    /// Samples the Poiseuille profile (exactly representable on u-faces).
    static StaggeredVelocityField poiseuille(const GridGeometry& g);

    /// Pointwise evaluation with bilinear interpolation inside the channel;
    /// boundary traces participate near walls. Outside the channel the field
    /// is zero (the caller adds any reference extension).
    Vec2 eval(double x, double y) const;

    StaggeredVelocityField& operator+=(const StaggeredVelocityField& o);
    StaggeredVelocityField& operator-=(const StaggeredVelocityField& o);
    StaggeredVelocityField& operator*=(double c);

    double max_abs() const {
        return std::max(u.abs().maxCoeff(), v.abs().maxCoeff());
    }

    /// Copies interior dofs into a flat vector (zero-trace subspace layout).
    Eigen::VectorXd interior() const;
    /// Writes a flat interior vector back; boundary entries are untouched.
    void set_interior(const Eigen::VectorXd& w);
    static StaggeredVelocityField from_interior(const GridGeometry& g, const Eigen::VectorXd& w);

    /// Imposes a boundary profile: normal faces in-array, tangential traces
    /// interpolated to the trace levels.
    void set_boundary(const BoundaryProfile& p);

    /// Extracts the boundary values as a profile (normal faces directly,
    /// tangential traces averaged back to face centers).
    BoundaryProfile boundary() const;
};

}  // namespace chanstab
