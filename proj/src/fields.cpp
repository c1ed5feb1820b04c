#include "chanstab/fields.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

namespace chanstab {

ScalarGridField divergence(const StaggeredVelocityField& vel) {
    const auto& g = vel.grid;
    ScalarGridField div(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            div.values(i, j) = (vel.u(i + 1, j) - vel.u(i, j)) / g.hx +
                               (vel.v(i, j + 1) - vel.v(i, j)) / g.hy;
    return div;
}

double inner_product_v0(const StaggeredVelocityField& a, const StaggeredVelocityField& b) {
    const auto& g = a.grid;
    if (!g.same_as(b.grid)) throw std::invalid_argument("inner_product_v0: grid mismatch");
    double s = 0.0;
    for (int i = 0; i <= g.nx; ++i) {
        const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
        for (int j = 0; j < g.ny; ++j) s += w * a.u(i, j) * b.u(i, j);
    }
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) {
            const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
            s += w * a.v(i, j) * b.v(i, j);
        }
    return s * g.cell_area();
}

double norm_v0(const StaggeredVelocityField& a) { return std::sqrt(inner_product_v0(a, a)); }

double norm_v1_sq(const StaggeredVelocityField& a) {
    const auto& g = a.grid;
    const double area = g.cell_area();
    double s = 0.0;
    // du/dx at cell centers (boundary u-faces included).
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double dx = (a.u(i + 1, j) - a.u(i, j)) / g.hx;
            s += dx * dx * area;
        }
    // du/dy on interior horizontal edges plus half-cell one-sided wall terms.
    for (int i = 0; i <= g.nx; ++i) {
        const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
        for (int j = 0; j + 1 < g.ny; ++j) {
            const double dy = (a.u(i, j + 1) - a.u(i, j)) / g.hy;
            s += w * dy * dy * area;
        }
        const double dyb = (a.u(i, 0) - a.tan_bot(i)) / (0.5 * g.hy);
        s += w * dyb * dyb * 0.5 * area;
        const double dyt = (a.tan_top(i) - a.u(i, g.ny - 1)) / (0.5 * g.hy);
        s += w * dyt * dyt * 0.5 * area;
    }
    // dv/dy at cell centers.
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double dy = (a.v(i, j + 1) - a.v(i, j)) / g.hy;
            s += dy * dy * area;
        }
    // dv/dx on vertical edges plus wall terms at x=0, d.
    for (int j = 0; j <= g.ny; ++j) {
        const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
        for (int i = 0; i + 1 < g.nx; ++i) {
            const double dx = (a.v(i + 1, j) - a.v(i, j)) / g.hx;
            s += w * dx * dx * area;
        }
        const double dxl = (a.v(0, j) - a.tan_in(j)) / (0.5 * g.hx);
        s += w * dxl * dxl * 0.5 * area;
        const double dxr = (a.tan_out(j) - a.v(g.nx - 1, j)) / (0.5 * g.hx);
        s += w * dxr * dxr * 0.5 * area;
    }
    return s;
}

double norm_h2_sq(const StaggeredVelocityField& a) {
    const auto& g = a.grid;
    const double area = g.cell_area();
    double s = 0.0;
    auto second = [&](double m, double c, double p, double h) {
        const double v = (p - 2.0 * c + m) / (h * h);
        return v * v;
    };
    for (int i = 1; i < g.nx; ++i)
        for (int j = 1; j + 1 < g.ny; ++j)
            s += area * (second(a.u(i - 1, j), a.u(i, j), a.u(i + 1, j), g.hx) +
                         second(a.u(i, j - 1), a.u(i, j), a.u(i, j + 1), g.hy));
    for (int i = 1; i + 1 < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j)
            s += area * (second(a.v(i - 1, j), a.v(i, j), a.v(i + 1, j), g.hx) +
                         second(a.v(i, j - 1), a.v(i, j), a.v(i, j + 1), g.hy));
    return s;
}

double dot_v0(const GridGeometry& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != g.n_interior() || b.size() != g.n_interior())
        throw std::invalid_argument("dot_v0: dimension mismatch");
    return g.cell_area() * a.dot(b);
}

double norm_v1_sq_interior(const GridGeometry& g, const Eigen::VectorXd& w) {
    StaggeredVelocityField f(g);
    f.set_interior(w);
    return norm_v1_sq(f);
}

NeumannPoisson::NeumannPoisson(const GridGeometry& g) : g_(g) {
    const int n = g.n_cells();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5 * n);
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const int c = g.ic(i, j);
            double diag = 0.0;
            auto link = [&](int ii, int jj, double a) {
                trips.emplace_back(c, g.ic(ii, jj), -a);
                diag += a;
            };
            if (i > 0) link(i - 1, j, ax);
            if (i + 1 < g.nx) link(i + 1, j, ax);
            if (j > 0) link(i, j - 1, ay);
            if (j + 1 < g.ny) link(i, j + 1, ay);
            trips.emplace_back(c, c, diag);
        }
    // Negative Laplacian (SPD, singular on constants); pin dof 0 by deleting
    // its row/column: remap indices 1..n-1 -> 0..n-2.
    Eigen::SparseMatrix<double> L(n - 1, n - 1);
    std::vector<Eigen::Triplet<double>> red;
    red.reserve(trips.size());
    for (const auto& t : trips) {
        if (t.row() == 0 || t.col() == 0) continue;
        red.emplace_back(t.row() - 1, t.col() - 1, t.value());
    }
    L.setFromTriplets(red.begin(), red.end());
    ldlt_.compute(L);
    if (ldlt_.info() != Eigen::Success)
        throw std::runtime_error("NeumannPoisson: factorization failed");
}

Eigen::VectorXd NeumannPoisson::solve(const Eigen::VectorXd& rhs_cells) const {
    const int n = g_.n_cells();
    if (rhs_cells.size() != n) throw std::invalid_argument("NeumannPoisson: bad rhs size");
    // div grad phi = rhs  <=>  (-Lap) phi = -rhs ; remove the mean so the
    // pinned system stays consistent.
    Eigen::VectorXd r = -rhs_cells;
    r.array() -= r.mean();
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
    phi.tail(n - 1) = ldlt_.solve(r.tail(n - 1));
    if (ldlt_.info() != Eigen::Success)
        throw std::runtime_error("NeumannPoisson: solve failed");
    return phi;
}

LerayProjector::LerayProjector(const GridGeometry& g) : g_(g), poisson_(g) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(4 * g.n_cells());
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const int c = g.ic(i, j);
            if (i > 0) trips.emplace_back(c, g.iu(i, j), -1.0 / g.hx);
            if (i + 1 < g.nx) trips.emplace_back(c, g.iu(i + 1, j), 1.0 / g.hx);
            if (j > 0) trips.emplace_back(c, g.iv(i, j), -1.0 / g.hy);
            if (j + 1 < g.ny) trips.emplace_back(c, g.iv(i, j + 1), 1.0 / g.hy);
        }
    D_.resize(g.n_cells(), g.n_interior());
    D_.setFromTriplets(trips.begin(), trips.end());
}

Eigen::VectorXd LerayProjector::div_interior(const Eigen::VectorXd& w) const {
    return D_ * w;
}

Eigen::VectorXd LerayProjector::project_interior(const Eigen::VectorXd& w) const {
    const Eigen::VectorXd phi = poisson_.solve(D_ * w);
    return w + D_.transpose() * phi;
}

Eigen::VectorXd LerayProjector::potential(const StaggeredVelocityField& w) const {
    const ScalarGridField dv = divergence(w);
    Eigen::VectorXd rhs(g_.n_cells());
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) rhs(g_.ic(i, j)) = dv.values(i, j);
    return poisson_.solve(rhs);
}

StaggeredVelocityField LerayProjector::project(const StaggeredVelocityField& w) const {
    const Eigen::VectorXd phi = potential(w);
    StaggeredVelocityField out = w;
    for (int i = 1; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j)
            out.u(i, j) -= (phi(g_.ic(i, j)) - phi(g_.ic(i - 1, j))) / g_.hx;
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 1; j < g_.ny; ++j)
            out.v(i, j) -= (phi(g_.ic(i, j)) - phi(g_.ic(i, j - 1))) / g_.hy;
    for (int j = 0; j < g_.ny; ++j) {
        out.u(0, j) = 0.0;
        out.u(g_.nx, j) = 0.0;
    }
    for (int i = 0; i < g_.nx; ++i) {
        out.v(i, 0) = 0.0;
        out.v(i, g_.ny) = 0.0;
    }
    return out;
}

double LerayProjector::divergence_after(const StaggeredVelocityField& w) const {
    return divergence(project(w)).max_abs();
}

void write_scalar_csv(const ScalarGridField& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "x,y,value\n";
    char buf[96];
    const auto& g = s.grid;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", g.xc(i), g.yc(j),
                          s.values(i, j));
            f << buf;
        }
}

void write_velocity_csv(const StaggeredVelocityField& v, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "x,y,u,v\n";
    char buf[128];
    const auto& g = v.grid;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double uc = 0.5 * (v.u(i, j) + v.u(i + 1, j));
            const double vc = 0.5 * (v.v(i, j) + v.v(i, j + 1));
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", g.xc(i), g.yc(j), uc, vc);
            f << buf;
        }
}

}  // namespace chanstab
