#include "chanstab/sim.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

namespace chanstab {

namespace {
double upoise(double y) { return y * (1.0 - y); }
}  // namespace

double decay_rate_fit(const std::vector<double>& t, const std::vector<double>& values) {
    if (t.size() != values.size() || t.size() < 10)
        throw std::invalid_argument("decay_rate_fit: need at least 10 samples");
    const double t_lo = t.front() + 0.5 * (t.back() - t.front());
    std::vector<double> ts, ys;
    for (size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo) continue;
        if (values[k] <= 0.0) continue;  // only the positive tail enters the fit
        ts.push_back(t[k]);
        ys.push_back(std::log(values[k]));
    }
    if (ts.size() < 2) throw std::runtime_error("decay_rate_fit: empty positive tail");
    const double n = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t k = 0; k < ts.size(); ++k) {
        st += ts[k];
        sy += ys[k];
        stt += ts[k] * ts[k];
        sty += ts[k] * ys[k];
    }
    const double denom = n * stt - st * st;
    if (std::abs(denom) < 1e-300) throw std::runtime_error("decay_rate_fit: degenerate window");
    return (n * sty - st * sy) / denom;
}

Simulator::Simulator(const ChannelConfig& cfg, double beta_eff)
    : cfg_(cfg),
      geo_(cfg),
      g_(GridGeometry::from_config(cfg)),
      beta_(beta_eff),
      vs_(StaggeredVelocityField::poiseuille(g_)),
      poisson_(std::make_unique<NeumannPoisson>(g_)) {
    // Helmholtz operator (1/dt) I - nu Lap with quadratic wall ghosts: the
    // parabolic profile is an exact discrete steady state of this stencil.
    const double nu = cfg_.nu;
    const double ihx2 = 1.0 / (g_.hx * g_.hx), ihy2 = 1.0 / (g_.hy * g_.hy);
    std::vector<Eigen::Triplet<double>> trips;
    auto add = [&](int r, int c, double v) { trips.emplace_back(r, c, v); };
    for (int i = 1; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) {
            const int r = g_.iu(i, j);
            double diag = 1.0 / cfg_.dt + nu * (2.0 * ihx2 + 2.0 * ihy2);
            if (i - 1 >= 1) add(r, g_.iu(i - 1, j), -nu * ihx2);
            if (i + 1 <= g_.nx - 1) add(r, g_.iu(i + 1, j), -nu * ihx2);
            if (j == 0) {
                diag = 1.0 / cfg_.dt + nu * (2.0 * ihx2 + 4.0 * ihy2);
                add(r, g_.iu(i, 1), -nu * (4.0 / 3.0) * ihy2);
            } else if (j == g_.ny - 1) {
                diag = 1.0 / cfg_.dt + nu * (2.0 * ihx2 + 4.0 * ihy2);
                add(r, g_.iu(i, g_.ny - 2), -nu * (4.0 / 3.0) * ihy2);
            } else {
                add(r, g_.iu(i, j - 1), -nu * ihy2);
                add(r, g_.iu(i, j + 1), -nu * ihy2);
            }
            add(r, r, diag);
        }
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 1; j < g_.ny; ++j) {
            const int r = g_.iv(i, j);
            double diag = 1.0 / cfg_.dt + nu * (2.0 * ihx2 + 2.0 * ihy2);
            if (j - 1 >= 1) add(r, g_.iv(i, j - 1), -nu * ihy2);
            if (j + 1 <= g_.ny - 1) add(r, g_.iv(i, j + 1), -nu * ihy2);
            if (i == 0) {
                diag = 1.0 / cfg_.dt + nu * (4.0 * ihx2 + 2.0 * ihy2);
                add(r, g_.iv(1, j), -nu * (4.0 / 3.0) * ihx2);
            } else if (i == g_.nx - 1) {
                diag = 1.0 / cfg_.dt + nu * (4.0 * ihx2 + 2.0 * ihy2);
                add(r, g_.iv(g_.nx - 2, j), -nu * (4.0 / 3.0) * ihx2);
            } else {
                add(r, g_.iv(i - 1, j), -nu * ihx2);
                add(r, g_.iv(i + 1, j), -nu * ihx2);
            }
            add(r, r, diag);
        }
    helm_.resize(g_.n_interior(), g_.n_interior());
    helm_.setFromTriplets(trips.begin(), trips.end());
    helm_lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    helm_lu_->compute(helm_);
    if (helm_lu_->info() != Eigen::Success)
        throw std::runtime_error("simulator: Helmholtz factorization failed");
}

SimState Simulator::initial_state(const Eigen::VectorXd& v_shape, double amp_v,
                                  const ScalarGridField& rho_shape, double amp_rho) const {
    SimState st;
    st.t = 0.0;
    st.vel = vs_;
    if (v_shape.size() > 0) {
        StaggeredVelocityField pert = StaggeredVelocityField::from_interior(g_, v_shape);
        pert *= amp_v;
        st.vel += pert;
    }
    st.rho = ScalarGridField(g_);
    st.rho.values.setOnes();
    if (rho_shape.values.size() > 0) st.rho.values += amp_rho * rho_shape.values;
    st.pressure = ScalarGridField::sample(g_, [this](double x, double) {
        return geo_.poiseuille_pressure(x);
    });
    st.w_c = Eigen::VectorXd();
    return st;
}

ScalarGridField Simulator::default_rho_shape(int margin_cells) const {
    const double mx = margin_cells * g_.hx, my = margin_cells * g_.hy;
    const double xa = mx, xb = cfg_.d - mx;
    const double ya = cfg_.A1 + my, yb = 1.0 - cfg_.A1 - my;
    return ScalarGridField::sample(g_, [&](double x, double y) {
        return smooth_bump(x, xa, xb, 0.25 * (xb - xa)) *
               smooth_bump(y, ya, yb, 0.25 * (yb - ya));
    });
}

BoundaryProfile Simulator::control_trace(const ControllerPack& pack, const Eigen::VectorXd& w_c,
                                         double t, double* sup_norm) const {
    BoundaryProfile uc(g_);
    const double damp = std::exp(-beta_ * t);
    for (int j = 0; j < pack.n_controls(); ++j) {
        BoundaryProfile term = pack.shapes[j];
        term *= damp * w_c(j);
        uc += term;
    }
    if (sup_norm) *sup_norm = uc.max_abs();
    return uc;
}

Eigen::VectorXd Simulator::step_feedback(const ControllerPack& pack, const Eigen::VectorXd& w_c,
                                         const Eigen::VectorXd& coords, double dt) const {
    const int nc = pack.n_controls();
    const Eigen::MatrixXd Ky = pack.K.leftCols(pack.n_modes());
    const Eigen::MatrixXd Kw = pack.K.rightCols(nc);
    const Eigen::VectorXd c = Ky * coords;
    const double gam = pack.gamma;
    auto rhs = [&](const Eigen::VectorXd& w) -> Eigen::VectorXd {
        return -gam * w + Kw * w + c;
    };
    const Eigen::VectorXd k1 = rhs(w_c);
    const Eigen::VectorXd k2 = rhs(w_c + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = rhs(w_c + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = rhs(w_c + dt * k3);
    return w_c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd Simulator::momentum_rhs(const SimState& state,
                                        const StaggeredVelocityField& bc_new,
                                        const ScalarGridField& rho_new) const {
    const auto& g = g_;
    const auto& v = state.vel;
    const double nu = cfg_.nu;
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    Eigen::VectorXd rhs(g.n_interior());

    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double u0 = v.u(i, j);
            // advective derivatives (quadratic ghosts at the walls)
            const double dudx = (v.u(i + 1, j) - v.u(i - 1, j)) / (2.0 * g.hx);
            double ujm, ujp;
            if (j == 0) ujm = (8.0 * v.tan_bot(i) - 6.0 * v.u(i, 0) + v.u(i, 1)) / 3.0;
            else ujm = v.u(i, j - 1);
            if (j == g.ny - 1)
                ujp = (8.0 * v.tan_top(i) - 6.0 * v.u(i, g.ny - 1) + v.u(i, g.ny - 2)) / 3.0;
            else ujp = v.u(i, j + 1);
            const double dudy = (ujp - ujm) / (2.0 * g.hy);
            const double vbar =
                0.25 * (v.v(i - 1, j) + v.v(i, j) + v.v(i - 1, j + 1) + v.v(i, j + 1));
            const double conv = u0 * dudx + vbar * dudy;
            const double lap = (v.u(i + 1, j) - 2.0 * u0 + v.u(i - 1, j)) * ihx2 +
                               (ujp - 2.0 * u0 + ujm) * ihy2;
            const double rho_f = 0.5 * (rho_new.values(i - 1, j) + rho_new.values(i, j));
            const double dpdx =
                (state.pressure.values(i, j) - state.pressure.values(i - 1, j)) / g.hx;
            double r = u0 / cfg_.dt - conv + nu * (1.0 / rho_f - 1.0) * lap - dpdx / rho_f;
            // implicit-side boundary eliminations at the new time level
            if (i == 1) r += nu * ihx2 * bc_new.u(0, j);
            if (i == g.nx - 1) r += nu * ihx2 * bc_new.u(g.nx, j);
            if (j == 0) r += nu * (8.0 / 3.0) * ihy2 * bc_new.tan_bot(i);
            if (j == g.ny - 1) r += nu * (8.0 / 3.0) * ihy2 * bc_new.tan_top(i);
            rhs(g.iu(i, j)) = r;
        }
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            const double v0 = v.v(i, j);
            const double dvdy = (v.v(i, j + 1) - v.v(i, j - 1)) / (2.0 * g.hy);
            double vim, vip;
            if (i == 0) vim = (8.0 * v.tan_in(j) - 6.0 * v.v(0, j) + v.v(1, j)) / 3.0;
            else vim = v.v(i - 1, j);
            if (i == g.nx - 1)
                vip = (8.0 * v.tan_out(j) - 6.0 * v.v(g.nx - 1, j) + v.v(g.nx - 2, j)) / 3.0;
            else vip = v.v(i + 1, j);
            const double dvdx = (vip - vim) / (2.0 * g.hx);
            const double ubar =
                0.25 * (v.u(i, j - 1) + v.u(i + 1, j - 1) + v.u(i, j) + v.u(i + 1, j));
            const double conv = ubar * dvdx + v0 * dvdy;
            const double lap = (vip - 2.0 * v0 + vim) * ihx2 +
                               (v.v(i, j + 1) - 2.0 * v0 + v.v(i, j - 1)) * ihy2;
            const double rho_f = 0.5 * (rho_new.values(i, j - 1) + rho_new.values(i, j));
            const double dpdy =
                (state.pressure.values(i, j) - state.pressure.values(i, j - 1)) / g.hy;
            double r = v0 / cfg_.dt - conv + nu * (1.0 / rho_f - 1.0) * lap - dpdy / rho_f;
            if (j == 1) r += nu * ihy2 * bc_new.v(i, 0);
            if (j == g.ny - 1) r += nu * ihy2 * bc_new.v(i, g.ny);
            if (i == 0) r += nu * (8.0 / 3.0) * ihx2 * bc_new.tan_in(j);
            if (i == g.nx - 1) r += nu * (8.0 / 3.0) * ihx2 * bc_new.tan_out(j);
            rhs(g.iv(i, j)) = r;
        }
    return rhs;
}

void Simulator::apply_projection(StaggeredVelocityField& vel, ScalarGridField& pressure) const {
    const ScalarGridField dv = divergence(vel);
    Eigen::VectorXd rhs(g_.n_cells());
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) rhs(g_.ic(i, j)) = dv.values(i, j) / cfg_.dt;
    const Eigen::VectorXd phi = poisson_->solve(rhs);
    for (int i = 1; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j)
            vel.u(i, j) -= cfg_.dt * (phi(g_.ic(i, j)) - phi(g_.ic(i - 1, j))) / g_.hx;
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 1; j < g_.ny; ++j)
            vel.v(i, j) -= cfg_.dt * (phi(g_.ic(i, j)) - phi(g_.ic(i, j - 1))) / g_.hy;
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) pressure.values(i, j) += phi(g_.ic(i, j));
    pressure.values -= pressure.values.mean();
}

SimState Simulator::step_coupled(const SimState& state, const ControllerPack* pack,
                                 RunReport* report, PreimageTracker* tracker,
                                 bool feedback_on) const {
    const auto& g = g_;
    SimState next;
    next.t = state.t + cfg_.dt;

    // (1) density transport with the current velocity (physical variables:
    // growth-free max principle on rho - 1).
    const StaggeredVelocityField* velp = &state.vel;
    FlowSampler flow;
    flow.extra = [velp](double x, double y, double /*t*/) -> Vec2 {
        const auto& g2 = velp->grid;
        if (x < 0.0 || x > g2.d || y < 0.0 || y > 1.0) return {0.0, 0.0};
        const Vec2 v = velp->eval(x, y);
        const double vs = (y > 0.0 && y < 1.0) ? upoise(y) : 0.0;
        return {v.x - vs, v.y};
    };
    DensityState ds{ScalarGridField(g), state.t};
    ds.sigma.values = state.rho.values - 1.0;
    std::vector<Vec2> feet;
    const DensityState ds_next = step_density(ds, flow, cfg_.dt, 0.0, &feet);
    next.rho = ScalarGridField(g);
    next.rho.values = ds_next.sigma.values + 1.0;
    if (report) {
        const double before = ds.sigma.max_abs();
        const double after = ds_next.sigma.max_abs();
        const double slack = before * 1e-13;
        if (after > before + slack) {
            report->max_principle_ok = false;
        }
        report->max_principle_worst =
            std::max(report->max_principle_worst, after - before);
    }
    if (tracker) tracker->advance(feet, state.t);

    // (2) momentum with lagged density, implicit diffusion, explicit
    // convection, then pressure projection.
    BoundaryProfile uc(g);
    double uc_sup = 0.0;
    if (pack && pack->n_controls() > 0 && state.w_c.size() == pack->n_controls())
        uc = control_trace(*pack, state.w_c, next.t, &uc_sup);
    BoundaryProfile bc = vs_.boundary();
    bc += uc;
    StaggeredVelocityField bc_field(g);
    bc_field.set_boundary(bc);

    const Eigen::VectorXd rhs = momentum_rhs(state, bc_field, next.rho);
    const Eigen::VectorXd vstar = helm_lu_->solve(rhs);
    if (helm_lu_->info() != Eigen::Success)
        throw std::runtime_error("step_coupled: Helmholtz solve failed");
    next.vel = StaggeredVelocityField(g);
    next.vel.set_boundary(bc);
    next.vel.set_interior(vstar);
    next.pressure = state.pressure;
    apply_projection(next.vel, next.pressure);

    // (3) actuator ODE driven by the shifted projected state.
    if (pack && pack->n_controls() > 0) {
        Eigen::VectorXd w = state.w_c.size() == pack->n_controls()
                                ? state.w_c
                                : Eigen::VectorXd::Zero(pack->n_controls());
        if (feedback_on) {
            StaggeredVelocityField diff = state.vel;
            diff -= vs_;
            const Eigen::VectorXd y = std::exp(beta_ * state.t) * diff.interior();
            Eigen::VectorXd coords(pack->n_modes());
            for (int i = 0; i < pack->n_modes(); ++i)
                coords(i) = g.cell_area() * pack->dual_fields[i].dot(y);
            next.w_c = step_feedback(*pack, w, coords, cfg_.dt);
        } else {
            next.w_c = w;  // open loop: w stays zero
        }
    }

    if (report) {
        report->uc_sup.push_back(uc_sup);
        const double bound = cfg_.L * (1.0 - cfg_.L) / 2.0;
        if (uc_sup > bound) report->control_bound_ok = false;
        // Inflow/outflow preservation: the perturbed field must keep the
        // sign of vs . n wherever it is nonzero.
        for (int j = 0; j < g.ny; ++j) {
            if (!(next.vel.u(0, j) > 0.0)) report->inflow_preserved = false;
            if (!(next.vel.u(g.nx, j) > 0.0)) report->inflow_preserved = false;
        }
    }
    return next;
}

RunReport Simulator::run_closed_loop(const ControllerPack& pack,
                                     const RunOptions& opts) const {
    RunReport rep;
    rep.beta_eff = beta_;
    rep.T1 = cfg_.T1();
    rep.closed_loop = opts.feedback_on;
    rep.amp_v0 = opts.amp_v0;
    rep.amp_rho0 = opts.amp_rho0;

    const ScalarGridField rho_shape = default_rho_shape();
    SimState st = initial_state(pack.v0_shape, opts.amp_v0, rho_shape, opts.amp_rho0);
    st.w_c = Eigen::VectorXd::Zero(pack.n_controls());

    PreimageTracker tracker(g_);
    const double sigma0_sup = (rho_shape.values * opts.amp_rho0).abs().maxCoeff();
    const double vdiff0 = [&] {
        StaggeredVelocityField d = st.vel;
        d -= vs_;
        return norm_v0(d);
    }();

    std::vector<std::pair<double, double>> sup_series;
    const int n_steps = static_cast<int>(std::round(cfg_.t_end / cfg_.dt));
    double e0 = -1.0;
    for (int k = 0; k <= n_steps; ++k) {
        const bool sample = (k % opts.sample_every == 0) || k == n_steps;
        if (sample) {
            StaggeredVelocityField diff = st.vel;
            diff -= vs_;
            const double growth = std::exp(beta_ * st.t);
            const double vd = norm_v0(diff);
            rep.t.push_back(st.t);
            rep.vdiff_v0.push_back(vd);
            rep.y_v0.push_back(growth * vd);
            rep.y_v1.push_back(growth * std::sqrt(norm_v1_sq(diff)));
            const double ssup = growth * (st.rho.values - 1.0).abs().maxCoeff();
            rep.sigma_sup.push_back(ssup);
            sup_series.emplace_back(st.t, ssup);
            ScalarGridField sig(g_);
            sig.values = growth * (st.rho.values - 1.0);
            const double el = tracker.localized_energy(geo_, sig);
            if (e0 < 0.0) e0 = el;
            rep.eloc.push_back(el);
            if (st.t <= cfg_.T1() + 1e-12) {
                const double excess = el - std::exp(2.0 * beta_ * st.t) * e0;
                rep.eloc_worst = std::max(rep.eloc_worst, excess);
                if (excess > 1e-10) rep.eloc_ok = false;
            }
            if (pack.n_controls() > 0 && st.w_c.size() == pack.n_controls()) {
                rep.w_norm.push_back(st.w_c.norm());
                const Eigen::VectorXd y = growth * diff.interior();
                Eigen::VectorXd z(pack.n_modes() + pack.n_controls());
                for (int i = 0; i < pack.n_modes(); ++i)
                    z(i) = g_.cell_area() * pack.dual_fields[i].dot(y);
                z.tail(pack.n_controls()) = st.w_c;
                rep.lyap.push_back(pack.P.size() > 0 ? z.dot(pack.P * z) : 0.0);
            }
            if (!std::isfinite(vd) || vd > opts.divergence_cap * std::max(vdiff0, 1e-14)) {
                rep.diverged = true;
                rep.failure = "velocity norm exceeded divergence cap";
                break;
            }
            if (opts.snapshot_every > 0 && (k % opts.snapshot_every == 0) &&
                !opts.snapshot_dir.empty()) {
                const std::string stem =
                    opts.snapshot_dir + "/snap_" + std::to_string(k);
                write_velocity_csv(st.vel, stem + "_vel.csv");
                write_scalar_csv(st.rho, stem + "_rho.csv");
            }
        }
        if (k == n_steps) break;
        st = step_coupled(st, &pack, &rep, &tracker, opts.feedback_on);
    }

    if (!rep.diverged) {
        try {
            rep.fitted_rate = -decay_rate_fit(rep.t, rep.vdiff_v0);
        } catch (const std::exception&) {
            rep.fitted_rate = 0.0;
        }
        const auto ext = extinction_check(sup_series, cfg_.T1(), beta_,
                                          std::max(sigma0_sup, 1e-300));
        rep.extinction_time = ext.first_extinct_time;
        // Lyapunov tail monotonicity (closed loop only).
        if (opts.feedback_on && rep.lyap.size() > 4) {
            const size_t half = rep.lyap.size() / 2;
            for (size_t k = half + 1; k < rep.lyap.size(); ++k) {
                const double inc = rep.lyap[k] - rep.lyap[k - 1];
                rep.lyap_worst_increment = std::max(rep.lyap_worst_increment, inc);
                if (inc > 1e-9 * std::max(rep.lyap[half], 1e-300))
                    rep.lyap_tail_monotone = false;
            }
        }
    }
    return rep;
}

Simulator::SteadyResidual Simulator::steady_residual() const {
    SimState st = initial_state(Eigen::VectorXd(), 0.0, ScalarGridField(), 0.0);
    const auto& g = g_;
    SteadyResidual res;
    // Momentum residual of (rho_s, v_s, p_s) under the simulator stencils:
    // rho (v.grad)v - nu Lap v + grad p evaluated at every interior face.
    const auto& v = st.vel;
    const double nu = cfg_.nu;
    for (int i = 1; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double dudx = (v.u(i + 1, j) - v.u(i - 1, j)) / (2.0 * g.hx);
            double ujm, ujp;
            if (j == 0) ujm = (8.0 * v.tan_bot(i) - 6.0 * v.u(i, 0) + v.u(i, 1)) / 3.0;
            else ujm = v.u(i, j - 1);
            if (j == g.ny - 1)
                ujp = (8.0 * v.tan_top(i) - 6.0 * v.u(i, g.ny - 1) + v.u(i, g.ny - 2)) / 3.0;
            else ujp = v.u(i, j + 1);
            const double vbar =
                0.25 * (v.v(i - 1, j) + v.v(i, j) + v.v(i - 1, j + 1) + v.v(i, j + 1));
            const double conv = v.u(i, j) * dudx + vbar * (ujp - ujm) / (2.0 * g.hy);
            const double lap = (v.u(i + 1, j) - 2.0 * v.u(i, j) + v.u(i - 1, j)) /
                                   (g.hx * g.hx) +
                               (ujp - 2.0 * v.u(i, j) + ujm) / (g.hy * g.hy);
            const double dpdx =
                (st.pressure.values(i, j) - st.pressure.values(i - 1, j)) / g.hx;
            res.momentum_inf =
                std::max(res.momentum_inf, std::abs(conv - nu * lap + dpdx));
        }
    for (int i = 0; i < g.nx; ++i)
        for (int j = 1; j < g.ny; ++j) {
            double vim, vip;
            if (i == 0) vim = (8.0 * v.tan_in(j) - 6.0 * v.v(0, j) + v.v(1, j)) / 3.0;
            else vim = v.v(i - 1, j);
            if (i == g.nx - 1)
                vip = (8.0 * v.tan_out(j) - 6.0 * v.v(g.nx - 1, j) + v.v(g.nx - 2, j)) / 3.0;
            else vip = v.v(i + 1, j);
            const double ubar =
                0.25 * (v.u(i, j - 1) + v.u(i + 1, j - 1) + v.u(i, j) + v.u(i + 1, j));
            const double conv = ubar * (vip - vim) / (2.0 * g.hx) +
                                v.v(i, j) * (v.v(i, j + 1) - v.v(i, j - 1)) / (2.0 * g.hy);
            const double lap = (vip - 2.0 * v.v(i, j) + vim) / (g.hx * g.hx) +
                               (v.v(i, j + 1) - 2.0 * v.v(i, j) + v.v(i, j - 1)) /
                                   (g.hy * g.hy);
            const double dpdy =
                (st.pressure.values(i, j) - st.pressure.values(i, j - 1)) / g.hy;
            res.momentum_inf =
                std::max(res.momentum_inf, std::abs(conv - nu * lap + dpdy));
        }
    res.continuity_inf = divergence(st.vel).max_abs();
    return res;
}

}  // namespace chanstab
