#include "chanstab/oseen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace chanstab {

namespace {
double upoise(double y) { return y * (1.0 - y); }
double upoise_dy(double y) { return 1.0 - 2.0 * y; }
}  // namespace

OseenOperator::OseenOperator(const ChannelConfig& cfg, double beta_eff)
    : cfg_(cfg),
      geo_(cfg),
      g_(GridGeometry::from_config(cfg)),
      beta_(beta_eff),
      lambda0_(cfg.lambda0_eff(beta_eff)),
      leray_(std::make_unique<LerayProjector>(g_)) {
    assemble();
}

void OseenOperator::assemble() {
    const auto& g = g_;
    const int Ni = g.n_interior();
    const double ihx2 = 1.0 / (g.hx * g.hx);
    const double ihy2 = 1.0 / (g.hy * g.hy);
    const double ihx2c = 1.0 / (2.0 * g.hx);

    std::vector<Eigen::Triplet<double>> lt, ct, rt;
    // u rows.
    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const int r = g.iu(i, j);
            double diag = -2.0 * ihx2 - 2.0 * ihy2;
            if (i - 1 >= 1) lt.emplace_back(r, g.iu(i - 1, j), ihx2);
            if (i + 1 <= g.nx - 1) lt.emplace_back(r, g.iu(i + 1, j), ihx2);
            if (j - 1 >= 0) lt.emplace_back(r, g.iu(i, j - 1), ihy2);
            else diag -= ihy2;  // ghost reflection across the bottom wall
            if (j + 1 <= g.ny - 1) lt.emplace_back(r, g.iu(i, j + 1), ihy2);
            else diag -= ihy2;
            lt.emplace_back(r, r, diag);

            const double U = upoise(g.yu(j));
            if (i + 1 <= g.nx - 1) ct.emplace_back(r, g.iu(i + 1, j), U * ihx2c);
            if (i - 1 >= 1) ct.emplace_back(r, g.iu(i - 1, j), -U * ihx2c);

            // (y . grad) vs = (U'(x2) * y2, 0): four surrounding v faces,
            // U' taken at each v level so that the A/A* pair transposes.
            for (int jv : {j, j + 1}) {
                if (jv < 1 || jv > g.ny - 1) continue;
                const double w = 0.25 * upoise_dy(g.yv(jv));
                rt.emplace_back(r, g.iv(i - 1, jv), w);
                rt.emplace_back(r, g.iv(i, jv), w);
            }
        }
    // v rows.
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            const int r = g.iv(i, j);
            double diag = -2.0 * ihx2 - 2.0 * ihy2;
            if (j - 1 >= 1) lt.emplace_back(r, g.iv(i, j - 1), ihy2);
            if (j + 1 <= g.ny - 1) lt.emplace_back(r, g.iv(i, j + 1), ihy2);
            if (i - 1 >= 0) lt.emplace_back(r, g.iv(i - 1, j), ihx2);
            else diag -= ihx2;  // ghost reflection across the inflow wall
            if (i + 1 <= g.nx - 1) lt.emplace_back(r, g.iv(i + 1, j), ihx2);
            else diag -= ihx2;
            lt.emplace_back(r, r, diag);

            // Skew-completed centered x-derivative: the wall rows drop the
            // ghost so that U d/dx stays an exactly antisymmetric matrix.
            const double U = upoise(g.yv(j));
            if (i + 1 <= g.nx - 1) ct.emplace_back(r, g.iv(i + 1, j), U * ihx2c);
            if (i - 1 >= 0) ct.emplace_back(r, g.iv(i - 1, j), -U * ihx2c);
        }

    lap_.resize(Ni, Ni);
    lap_.setFromTriplets(lt.begin(), lt.end());
    conv_.resize(Ni, Ni);
    conv_.setFromTriplets(ct.begin(), ct.end());
    reac_.resize(Ni, Ni);
    reac_.setFromTriplets(rt.begin(), rt.end());

    K_ = cfg_.nu * lap_ - conv_ - reac_;
    Kadj_ = cfg_.nu * lap_ + conv_ - Eigen::SparseMatrix<double>(reac_.transpose());

    // Saddle systems (lambda0 I - A(*)) y + grad q = w, div y = 0 with the
    // cell-0 pressure dof pinned and its (redundant) constraint dropped.
    const int nc = g.n_cells();
    n_saddle_ = Ni + nc - 1;
    auto build = [&](const Eigen::SparseMatrix<double>& K) {
        std::vector<Eigen::Triplet<double>> st;
        st.reserve(K.nonZeros() + 8 * nc);
        for (int k = 0; k < K.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
                st.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                -it.value());
        for (int r = 0; r < Ni; ++r) st.emplace_back(r, r, lambda0_ - beta_);
        auto pcol = [&](int c) { return Ni + c - 1; };
        for (int i = 1; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) {
                const int r = g.iu(i, j);
                const int cr = g.ic(i, j), cl = g.ic(i - 1, j);
                if (cr >= 1) st.emplace_back(r, pcol(cr), 1.0 / g.hx);
                if (cl >= 1) st.emplace_back(r, pcol(cl), -1.0 / g.hx);
            }
        for (int i = 0; i < g.nx; ++i)
            for (int j = 1; j < g.ny; ++j) {
                const int r = g.iv(i, j);
                const int ct_ = g.ic(i, j), cb = g.ic(i, j - 1);
                if (ct_ >= 1) st.emplace_back(r, pcol(ct_), 1.0 / g.hy);
                if (cb >= 1) st.emplace_back(r, pcol(cb), -1.0 / g.hy);
            }
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) {
                const int c = g.ic(i, j);
                if (c < 1) continue;
                const int rr = pcol(c);
                if (i >= 1) st.emplace_back(rr, g.iu(i, j), -1.0 / g.hx);
                if (i + 1 <= g.nx - 1) st.emplace_back(rr, g.iu(i + 1, j), 1.0 / g.hx);
                if (j >= 1) st.emplace_back(rr, g.iv(i, j), -1.0 / g.hy);
                if (j + 1 <= g.ny - 1) st.emplace_back(rr, g.iv(i, j + 1), 1.0 / g.hy);
            }
        Eigen::SparseMatrix<double> S(n_saddle_, n_saddle_);
        S.setFromTriplets(st.begin(), st.end());
        return S;
    };
    saddle_dir_ = build(K_);
    saddle_adj_ = build(Kadj_);
    lu_dir_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_dir_->compute(saddle_dir_);
    if (lu_dir_->info() != Eigen::Success)
        throw std::runtime_error("oseen: direct saddle factorization failed");
    lu_adj_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_adj_->compute(saddle_adj_);
    if (lu_adj_->info() != Eigen::Success)
        throw std::runtime_error("oseen: adjoint saddle factorization failed");
}

Eigen::VectorXd OseenOperator::apply_oseen(const Eigen::VectorXd& y, double div_tol) const {
    const double dv = leray_->div_interior(y).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if (dv > div_tol * scale)
        throw std::invalid_argument("apply_oseen: input not solenoidal (div=" +
                                    std::to_string(dv) + ")");
    return leray_->project_interior(K_ * y) + beta_ * y;
}

Eigen::VectorXd OseenOperator::apply_adjoint(const Eigen::VectorXd& z, double div_tol) const {
    const double dv = leray_->div_interior(z).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
    if (dv > div_tol * scale)
        throw std::invalid_argument("apply_adjoint: input not solenoidal (div=" +
                                    std::to_string(dv) + ")");
    return leray_->project_interior(Kadj_ * z) + beta_ * z;
}

Eigen::VectorXcd OseenOperator::apply_adjoint_c(const Eigen::VectorXcd& z) const {
    Eigen::VectorXcd out(z.size());
    out.real() = apply_adjoint(z.real(), 1e-6);
    out.imag() = apply_adjoint(z.imag(), 1e-6);
    return out;
}

Eigen::VectorXcd OseenOperator::apply_oseen_c(const Eigen::VectorXcd& z) const {
    Eigen::VectorXcd out(z.size());
    out.real() = apply_oseen(z.real(), 1e-6);
    out.imag() = apply_oseen(z.imag(), 1e-6);
    return out;
}

double OseenOperator::coercivity_gap(const Eigen::VectorXd& y, double lambda0,
                                     bool adjoint) const {
    const Eigen::VectorXd Ky = adjoint ? Eigen::VectorXd(Kadj_ * y) : Eigen::VectorXd(K_ * y);
    const double quad = (lambda0 - beta_) * dot_v0(g_, y, y) - dot_v0(g_, Ky, y);
    return quad - 0.5 * norm_v1_sq_interior(g_, y);
}

OseenOperator::CoercivityReport OseenOperator::verify_coercivity(int samples,
                                                                 unsigned seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    // Per-sample invariants of the quadratic form: with a = |y|_V0^2,
    // b = <K y, y>, c = 0.5 |y|_V1^2 the tested ratio is ((l0-b)a - b)/c,
    // affine in the shift.
    struct Probe {
        double a, b_dir, b_adj, c;
    };
    std::vector<Probe> ps;
    ps.reserve(samples);
    for (int s = 0; s < samples; ++s) {
        Eigen::VectorXd w(g_.n_interior());
        for (int k = 0; k < w.size(); ++k) w(k) = dist(rng);
        Eigen::VectorXd y = leray_->project_interior(w);
        y /= std::sqrt(dot_v0(g_, y, y));
        Probe p;
        p.a = dot_v0(g_, y, y);
        p.b_dir = dot_v0(g_, Eigen::VectorXd(K_ * y), y);
        p.b_adj = dot_v0(g_, Eigen::VectorXd(Kadj_ * y), y);
        p.c = 0.5 * norm_v1_sq_interior(g_, y);
        ps.push_back(p);
    }
    auto worst = [&](double lambda0, bool adjoint) {
        double w = std::numeric_limits<double>::infinity();
        for (const auto& p : ps) {
            const double b = adjoint ? p.b_adj : p.b_dir;
            w = std::min(w, ((lambda0 - beta_) * p.a - b) / p.c);
        }
        return w;
    };
    CoercivityReport rep;
    rep.worst_ratio = worst(lambda0_, false);
    rep.worst_ratio_adjoint = worst(lambda0_, true);
    rep.pass = rep.worst_ratio >= 1.0 && rep.worst_ratio_adjoint >= 1.0;
    if (rep.pass) {
        rep.suggested_lambda0 = lambda0_;
        return rep;
    }
    // Bisection for the smallest shift that restores the bound on both forms.
    double lo = lambda0_, hi = std::max(2.0 * lambda0_, beta_ + 1.0);
    while (std::min(worst(hi, false), worst(hi, true)) < 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("verify_coercivity: no restoring shift found");
    }
    for (int it = 0; it < 80 && (hi - lo) > 1e-9 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::min(worst(mid, false), worst(mid, true)) >= 1.0) hi = mid;
        else lo = mid;
    }
    rep.suggested_lambda0 = hi;
    return rep;
}

Eigen::VectorXd OseenOperator::lift_rhs(const BoundaryProfile& ub) const {
    const auto& g = g_;
    StaggeredVelocityField bc(g);
    bc.set_boundary(ub);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_saddle_);
    const double ihx2 = cfg_.nu / (g.hx * g.hx);
    const double ihy2 = cfg_.nu / (g.hy * g.hy);
    // u rows: Dirichlet x-neighbors, wall ghosts, convection and reaction
    // references to boundary values.
    for (int j = 0; j < g.ny; ++j) {
        const double U = upoise(g.yu(j));
        rhs(g.iu(1, j)) += (ihx2 + U / (2.0 * g.hx)) * bc.u(0, j);
        rhs(g.iu(g.nx - 1, j)) += (ihx2 - U / (2.0 * g.hx)) * bc.u(g.nx, j);
    }
    for (int i = 1; i < g.nx; ++i) {
        rhs(g.iu(i, 0)) += 2.0 * ihy2 * bc.tan_bot(i);
        rhs(g.iu(i, g.ny - 1)) += 2.0 * ihy2 * bc.tan_top(i);
        // reaction touching the boundary-normal v rows jv = 0 and ny
        const double w0 = 0.25 * upoise_dy(g.yv(0));
        rhs(g.iu(i, 0)) -= w0 * (bc.v(i - 1, 0) + bc.v(i, 0));
        const double w1 = 0.25 * upoise_dy(g.yv(g.ny));
        rhs(g.iu(i, g.ny - 1)) -= w1 * (bc.v(i - 1, g.ny) + bc.v(i, g.ny));
    }
    // v rows: wall ghosts at x = 0 and x = d; Dirichlet y-neighbors.
    for (int j = 1; j < g.ny; ++j) {
        rhs(g.iv(0, j)) += 2.0 * ihx2 * bc.tan_in(j);
        rhs(g.iv(g.nx - 1, j)) += 2.0 * ihx2 * bc.tan_out(j);
    }
    for (int i = 0; i < g.nx; ++i) {
        rhs(g.iv(i, 1)) += ihy2 * bc.v(i, 0);
        rhs(g.iv(i, g.ny - 1)) += ihy2 * bc.v(i, g.ny);
    }
    // Constraint rows: boundary fluxes.
    auto prow = [&](int c) { return g.n_interior() + c - 1; };
    for (int j = 0; j < g.ny; ++j) {
        if (g.ic(0, j) >= 1) rhs(prow(g.ic(0, j))) += bc.u(0, j) / g.hx;
        rhs(prow(g.ic(g.nx - 1, j))) -= bc.u(g.nx, j) / g.hx;
    }
    for (int i = 0; i < g.nx; ++i) {
        if (g.ic(i, 0) >= 1) rhs(prow(g.ic(i, 0))) += bc.v(i, 0) / g.hy;
        rhs(prow(g.ic(i, g.ny - 1))) -= bc.v(i, g.ny) / g.hy;
    }
    return rhs;
}

OseenOperator::LiftedField OseenOperator::dirichlet_lift(const BoundaryProfile& ub,
                                                         double flux_tol) const {
    const double fl = ub.flux();
    const double scale = std::max(1.0, ub.max_abs());
    if (std::abs(fl) > flux_tol * scale)
        throw std::invalid_argument("dirichlet_lift: boundary data has net flux " +
                                    std::to_string(fl));
    const Eigen::VectorXd rhs = lift_rhs(ub);
    const Eigen::VectorXd sol = lu_dir_->solve(rhs);
    if (lu_dir_->info() != Eigen::Success)
        throw std::runtime_error("dirichlet_lift: solve failed");
    LiftedField lf{StaggeredVelocityField(g_), ScalarGridField(g_)};
    lf.velocity.set_interior(sol.head(g_.n_interior()));
    lf.velocity.set_boundary(ub);
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) {
            const int c = g_.ic(i, j);
            lf.pressure.values(i, j) = (c == 0) ? 0.0 : sol(g_.n_interior() + c - 1);
        }
    lf.pressure.values -= lf.pressure.values.mean();
    return lf;
}

double OseenOperator::lift_residual(const LiftedField& lf, const BoundaryProfile& ub) const {
    // Independent stencil evaluation of the lifting equations on the lifted
    // pair, including boundary values and ghosts.
    const auto& g = g_;
    StaggeredVelocityField y = lf.velocity;
    y.set_boundary(ub);
    const auto& q = lf.pressure.values;
    double num = 0.0, den = 0.0;
    auto acc = [&](double r, double ref) {
        num += r * r;
        den += ref * ref;
    };
    const double nu = cfg_.nu;
    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double U = upoise(g.yu(j));
            const double ujm = (j == 0) ? 2.0 * y.tan_bot(i) - y.u(i, 0) : y.u(i, j - 1);
            const double ujp =
                (j == g.ny - 1) ? 2.0 * y.tan_top(i) - y.u(i, g.ny - 1) : y.u(i, j + 1);
            const double lap = (y.u(i + 1, j) - 2.0 * y.u(i, j) + y.u(i - 1, j)) / (g.hx * g.hx) +
                               (ujp - 2.0 * y.u(i, j) + ujm) / (g.hy * g.hy);
            const double conv = U * (y.u(i + 1, j) - y.u(i - 1, j)) / (2.0 * g.hx);
            double reac = 0.0;
            for (int jv : {j, j + 1})
                reac += 0.25 * upoise_dy(g.yv(jv)) * (y.v(i - 1, jv) + y.v(i, jv));
            const double gp = (q(i, j) - q(i - 1, j)) / g.hx;
            const double r =
                (lambda0_ - beta_) * y.u(i, j) - nu * lap + conv + reac + gp;
            acc(r, (lambda0_ - beta_) * y.u(i, j) + nu * lap);
        }
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            const double U = upoise(g.yv(j));
            const double vim = (i == 0) ? 0.0 : y.v(i - 1, j);
            const double vip = (i == g.nx - 1) ? 0.0 : y.v(i + 1, j);
            // Laplacian ghosts at the in/outflow walls.
            double lapx;
            if (i == 0)
                lapx = (y.v(1, j) - 3.0 * y.v(0, j) + 2.0 * y.tan_in(j)) / (g.hx * g.hx);
            else if (i == g.nx - 1)
                lapx = (y.v(g.nx - 2, j) - 3.0 * y.v(g.nx - 1, j) + 2.0 * y.tan_out(j)) /
                       (g.hx * g.hx);
            else
                lapx = (y.v(i + 1, j) - 2.0 * y.v(i, j) + y.v(i - 1, j)) / (g.hx * g.hx);
            const double lap =
                lapx + (y.v(i, j + 1) - 2.0 * y.v(i, j) + y.v(i, j - 1)) / (g.hy * g.hy);
            const double conv = U * (vip - vim) / (2.0 * g.hx);
            const double gp = (q(i, j) - q(i, j - 1)) / g.hy;
            const double r = (lambda0_ - beta_) * y.v(i, j) - nu * lap + conv + gp;
            acc(r, (lambda0_ - beta_) * y.v(i, j) + nu * lap);
        }
    // Continuity residual.
    const ScalarGridField dv = divergence(y);
    num += dv.values.square().sum();
    den += 1.0;
    return std::sqrt(num) / std::sqrt(std::max(den, 1e-30));
}

BoundaryProfile OseenOperator::localize_M(const BoundaryProfile& gprof) const {
    const auto& g = g_;
    BoundaryProfile out(g);
    Eigen::ArrayXd m(g.ny);
    for (int j = 0; j < g.ny; ++j) m(j) = geo_.control_weight(g.yc(j));
    const double int_m = g.hy * m.sum();
    // int_Gamma m (g . n): only the inflow side carries m; n = (-1, 0).
    const double flux_m = g.hy * (m * (-gprof.in_vx)).sum();
    out.in_vx = m * gprof.in_vx + (m / int_m) * flux_m;
    out.in_vy = m * gprof.in_vy;
    return out;
}

BoundaryProfile OseenOperator::apply_Bstar(const Eigen::VectorXd& phi,
                                           const Eigen::VectorXd& psi) const {
    const auto& g = g_;
    StaggeredVelocityField f(g);
    f.set_interior(phi);
    // Boundary extrapolations of the pressure on all four segments (needed
    // for the boundary mean).
    auto psi_at = [&](int i, int j) { return psi(g.ic(i, j)); };
    Eigen::ArrayXd ps_in(g.ny), ps_out(g.ny), ps_bot(g.nx), ps_top(g.nx);
    for (int j = 0; j < g.ny; ++j) {
        ps_in(j) = 1.5 * psi_at(0, j) - 0.5 * psi_at(1, j);
        ps_out(j) = 1.5 * psi_at(g.nx - 1, j) - 0.5 * psi_at(g.nx - 2, j);
    }
    for (int i = 0; i < g.nx; ++i) {
        ps_bot(i) = 1.5 * psi_at(i, 0) - 0.5 * psi_at(i, 1);
        ps_top(i) = 1.5 * psi_at(i, g.ny - 1) - 0.5 * psi_at(i, g.ny - 2);
    }
    const double mean = (g.hy * (ps_in.sum() + ps_out.sum()) +
                         g.hx * (ps_bot.sum() + ps_top.sum())) /
                        (2.0 * (1.0 + g.d));

    BoundaryProfile tr(g);
    const double nu = cfg_.nu;
    // dv/dx at the wall levels from the one-sided quadratic through the wall.
    Eigen::ArrayXd dvdx(g.ny + 1);
    for (int j = 0; j <= g.ny; ++j) {
        if (j == 0 || j == g.ny) {
            dvdx(j) = 0.0;
        } else {
            dvdx(j) = (9.0 * f.v(0, j) - f.v(1, j)) / (3.0 * g.hx);
        }
    }
    for (int j = 0; j < g.ny; ++j) {
        const double dudx = (4.0 * f.u(1, j) - f.u(2, j)) / (2.0 * g.hx);
        tr.in_vx(j) = nu * dudx - (ps_in(j) - mean);
        tr.in_vy(j) = nu * 0.5 * (dvdx(j) + dvdx(j + 1));
    }
    return localize_M(tr);
}

Eigen::VectorXd OseenOperator::resolvent_solve(const Eigen::VectorXd& w, bool adjoint,
                                               Eigen::VectorXd* pressure) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_saddle_);
    rhs.head(g_.n_interior()) = w;
    const auto& lu = adjoint ? *lu_adj_ : *lu_dir_;
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw std::runtime_error("resolvent_solve failed");
    if (pressure) {
        Eigen::VectorXd p = Eigen::VectorXd::Zero(g_.n_cells());
        p.tail(g_.n_cells() - 1) = sol.tail(g_.n_cells() - 1);
        p.array() -= p.mean();
        *pressure = p;
    }
    return sol.head(g_.n_interior());
}

namespace {

struct RitzMode {
    std::complex<double> lambda;
    Eigen::VectorXcd vec;
    double est;
};

}  // namespace

SpectralData OseenOperator::spectrum(bool adjoint, int n_wanted, unsigned seed) const {
    const int Ni = g_.n_interior();
    std::mt19937_64 rng(seed ^ (adjoint ? 0x517cc1b727220a95ull : 0ull));
    std::normal_distribution<double> dist;
    Eigen::VectorXd v0(Ni);
    for (int k = 0; k < Ni; ++k) v0(k) = dist(rng);
    v0 = leray_->project_interior(v0);
    v0 /= v0.norm();

    int m = std::max(48, 6 * std::max(1, n_wanted));
    const int m_max = std::min(Ni, 288);
    SpectralData out;
    while (true) {
        // Arnoldi with full re-orthogonalization on the shift-inverted map.
        Eigen::MatrixXd V(Ni, m + 1);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        V.col(0) = v0;
        int mdone = m;
        for (int k = 0; k < m; ++k) {
            Eigen::VectorXd w = resolvent_solve(V.col(k), adjoint);
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= k; ++i) {
                    const double h = V.col(i).dot(w);
                    w -= h * V.col(i);
                    H(i, k) += h;
                }
            const double hn = w.norm();
            H(k + 1, k) = hn;
            if (hn < 1e-13) {
                mdone = k + 1;
                break;
            }
            V.col(k + 1) = w / hn;
        }
        const Eigen::MatrixXd Hm = H.topLeftCorner(mdone, mdone);
        Eigen::EigenSolver<Eigen::MatrixXd> es(Hm);
        if (es.info() != Eigen::Success) throw std::runtime_error("spectrum: dense eig failed");
        out.arnoldi_dim = mdone;

        std::vector<RitzMode> ritz;
        for (int k = 0; k < mdone; ++k) {
            const std::complex<double> theta = es.eigenvalues()(k);
            if (std::abs(theta) < 1e-14) continue;
            if (theta.imag() < -1e-13 * std::abs(theta)) continue;  // keep one of each pair
            RitzMode rm;
            rm.lambda = lambda0_ - 1.0 / theta;
            const Eigen::VectorXcd s = es.eigenvectors().col(k);
            rm.vec.resize(Ni);
            rm.vec.real() = V.leftCols(mdone) * s.real();
            rm.vec.imag() = V.leftCols(mdone) * s.imag();
            rm.est = (mdone < m ? 0.0 : H(mdone, mdone - 1)) *
                     std::abs(es.eigenvectors()(mdone - 1, k)) / std::abs(theta);
            ritz.push_back(std::move(rm));
        }
        std::sort(ritz.begin(), ritz.end(), [](const RitzMode& a, const RitzMode& b) {
            if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
            return std::abs(a.lambda.imag()) < std::abs(b.lambda.imag());
        });

        // Walk down the spectrum, verifying residuals explicitly, until
        // n_wanted real dimensions are converged (plus one witness below).
        out.modes.clear();
        int real_dims = 0;
        bool ok = true;
        for (const auto& rm : ritz) {
            if (real_dims >= n_wanted + 1) break;
            const bool is_complex = std::abs(rm.lambda.imag()) > 1e-11;
            Eigen::VectorXcd phi = rm.vec;
            const double nrm = std::sqrt(g_.cell_area()) * phi.norm();
            phi /= nrm;
            // Deterministic phase: largest component real positive.
            int imax = 0;
            phi.cwiseAbs().maxCoeff(&imax);
            const std::complex<double> ph = phi(imax) / std::abs(phi(imax));
            phi /= ph;
            const Eigen::VectorXcd Aphi = adjoint ? apply_adjoint_c(phi) : apply_oseen_c(phi);
            const double res = std::sqrt(g_.cell_area()) * (Aphi - rm.lambda * phi).norm();
            if (res > cfg_.tol_eig) {
                ok = false;
                break;
            }
            EigenMode mode;
            mode.lambda = rm.lambda;
            mode.phi = phi;
            mode.residual = res;
            out.modes.push_back(mode);
            real_dims += 1;
            if (is_complex) {
                EigenMode conj_mode;
                conj_mode.lambda = std::conj(rm.lambda);
                conj_mode.phi = phi.conjugate();
                conj_mode.residual = res;
                out.modes.push_back(std::move(conj_mode));
                real_dims += 1;
            }
        }
        if (ok && real_dims >= n_wanted + 1) break;
        if (mdone < m) {
            if (!ok) throw std::runtime_error("spectrum: Arnoldi breakdown before convergence");
            break;  // exhausted the Krylov space; everything found converged
        }
        if (m >= m_max)
            throw std::runtime_error("spectrum: eigensolver did not converge (m=" +
                                     std::to_string(m) + ")");
        m = std::min(m_max, m + 48);
    }
    std::sort(out.modes.begin(), out.modes.end(), [](const EigenMode& a, const EigenMode& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        if (std::abs(a.lambda.imag()) != std::abs(b.lambda.imag()))
            return std::abs(a.lambda.imag()) < std::abs(b.lambda.imag());
        return a.lambda.imag() > b.lambda.imag();
    });
    // Pressure recovery: one resolvent back-solve per mode; psi = (l0-l) psi_hat.
    for (auto& mode : out.modes) {
        Eigen::VectorXd pre, pim;
        (void)resolvent_solve(mode.phi.real(), adjoint, &pre);
        (void)resolvent_solve(mode.phi.imag(), adjoint, &pim);
        Eigen::VectorXcd psi(pre.size());
        psi.real() = pre;
        psi.imag() = pim;
        psi *= (lambda0_ - mode.lambda);
        psi.array() -= psi.mean();
        mode.psi = psi;
    }
    out.n_unstable = 0;
    for (const auto& mode : out.modes)
        if (mode.lambda.real() > 0.0) ++out.n_unstable;
    return out;
}

SpectralData OseenOperator::unstable_spectrum(unsigned seed) const {
    int wanted = cfg_.n_margin + 6;
    SpectralData sd = spectrum(true, wanted, seed);
    while (sd.n_unstable + cfg_.n_margin + 1 > wanted) {
        wanted = sd.n_unstable + cfg_.n_margin + 4;
        sd = spectrum(true, wanted, seed);
    }
    for (const auto& mode : sd.modes)
        if (std::abs(mode.lambda.real()) < cfg_.tol_eig)
            throw std::runtime_error(
                "unstable_spectrum: eigenvalue too close to the imaginary axis; "
                "beta must be adjusted");
    return sd;
}

BetaResolution resolve_beta(const ChannelConfig& cfg, unsigned seed) {
    OseenOperator op(cfg, cfg.beta);
    const SpectralData sd = op.spectrum(true, std::max(4, cfg.n_margin + 2), seed);
    BetaResolution r;
    r.top_eigen_before = sd.modes.empty() ? std::complex<double>(0, 0) : sd.modes[0].lambda;
    r.n_unstable_before = sd.n_unstable;
    const double axis_tol = std::max(100.0 * cfg.tol_eig, 1e-6);
    const double top_re = r.top_eigen_before.real();
    bool clean = top_re > axis_tol;
    if (clean)
        for (const auto& mode : sd.modes)
            if (std::abs(mode.lambda.real()) < axis_tol) clean = false;
    if (clean) {
        r.beta_eff = cfg.beta;
        r.raised = false;
        return r;
    }
    // Raising beta shifts the whole spectrum by the same amount exactly.
    double dbeta = -top_re + std::max(0.3 * std::abs(top_re), 0.1);
    for (int guard = 0; guard < 50; ++guard) {
        bool collision = false;
        for (const auto& mode : sd.modes)
            if (std::abs(mode.lambda.real() + dbeta) < axis_tol) collision = true;
        if (!collision) break;
        dbeta += 3.0 * axis_tol;
    }
    r.beta_eff = cfg.beta + dbeta;
    r.raised = true;
    return r;
}

}  // namespace chanstab
