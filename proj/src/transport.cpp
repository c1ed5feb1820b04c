#include "chanstab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chanstab {

Vec2 VelocityHistory::eval(double x, double y, double t) const {
    if (fields.empty()) return {0.0, 0.0};
    if (fields.size() == 1) return fields[0].eval(x, y);
    const double s = std::clamp((t - t0) / dt_snap, 0.0, static_cast<double>(fields.size() - 1));
    const int k = std::min(static_cast<int>(s), static_cast<int>(fields.size()) - 2);
    const double a = s - k;
    const Vec2 f0 = fields[k].eval(x, y);
    const Vec2 f1 = fields[k + 1].eval(x, y);
    return {f0.x * (1.0 - a) + f1.x * a, f0.y * (1.0 - a) + f1.y * a};
}

double VelocityHistory::norm_v21() const {
    if (fields.size() < 2) return 0.0;
    double acc = 0.0;
    for (size_t k = 0; k < fields.size(); ++k) {
        const auto& f = fields[k];
        const double w = (k == 0 || k + 1 == fields.size()) ? 0.5 : 1.0;
        acc += w * dt_snap * (inner_product_v0(f, f) + norm_v1_sq(f) + norm_h2_sq(f));
    }
    for (size_t k = 0; k + 1 < fields.size(); ++k) {
        StaggeredVelocityField df = fields[k + 1];
        df -= fields[k];
        acc += inner_product_v0(df, df) / dt_snap;
    }
    return std::sqrt(acc);
}

Vec2 integrate_flow(const FlowSampler& flow, Vec2 x, double t, double s, double max_step) {
    const double span = t - s;
    if (span == 0.0) return x;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / max_step)));
    const double h = span / n;
    double theta = s;
    for (int k = 0; k < n; ++k) {
        const Vec2 k1 = flow.velocity(x.x, x.y, theta);
        const Vec2 k2 =
            flow.velocity(x.x + 0.5 * h * k1.x, x.y + 0.5 * h * k1.y, theta + 0.5 * h);
        const Vec2 k3 =
            flow.velocity(x.x + 0.5 * h * k2.x, x.y + 0.5 * h * k2.y, theta + 0.5 * h);
        const Vec2 k4 = flow.velocity(x.x + h * k3.x, x.y + h * k3.y, theta + h);
        x.x += h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        x.y += h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y);
        theta += h;
    }
    return x;
}

double linear_transport_exact(const std::function<double(double, double)>& sigma0, double x1,
                              double x2, double t, double beta) {
    const double growth = std::exp(beta * t);
    const double speed = x2 * (1.0 - x2);
    if (x2 <= 0.0 || x2 >= 1.0) return growth * sigma0(x1, x2);  // stagnant walls
    if (t > x1 / speed) return 0.0;
    return growth * sigma0(x1 - speed * t, x2);
}

double interp_zero(const ScalarGridField& s, double x, double y) {
    const auto& g = s.grid;
    const double fi = x / g.hx - 0.5;
    const double fj = y / g.hy - 0.5;
    const int i0 = static_cast<int>(std::floor(fi));
    const int j0 = static_cast<int>(std::floor(fj));
    const double ax = fi - i0;
    const double ay = fj - j0;
    auto val = [&](int i, int j) -> double {
        if (i < 0 || i >= g.nx || j < 0 || j >= g.ny) return 0.0;
        return s.values(i, j);
    };
    return val(i0, j0) * (1.0 - ax) * (1.0 - ay) + val(i0 + 1, j0) * ax * (1.0 - ay) +
           val(i0, j0 + 1) * (1.0 - ax) * ay + val(i0 + 1, j0 + 1) * ax * ay;
}

std::optional<DensityState::Support> DensityState::support(double threshold) const {
    const auto& g = sigma.grid;
    Support s{g.nx, -1, g.ny, -1};
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            if (std::abs(sigma.values(i, j)) > threshold) {
                s.i_min = std::min(s.i_min, i);
                s.i_max = std::max(s.i_max, i);
                s.j_min = std::min(s.j_min, j);
                s.j_max = std::max(s.j_max, j);
            }
    if (s.i_max < 0) return std::nullopt;
    return s;
}

DensityState step_density(const DensityState& state, const FlowSampler& flow, double dt,
                          double beta, std::vector<Vec2>* feet_out, double max_substep) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_density: dt must be positive");
    const auto& g = state.sigma.grid;
    if (max_substep <= 0.0) max_substep = dt;
    DensityState next{ScalarGridField(g), state.t + dt};
    const double growth = std::exp(beta * dt);
    if (feet_out) feet_out->assign(static_cast<size_t>(g.nx) * g.ny, Vec2{});
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const Vec2 foot = integrate_flow(flow, {g.xc(i), g.yc(j)}, state.t, state.t + dt,
                                             max_substep);
            if (feet_out) (*feet_out)[static_cast<size_t>(i) * g.ny + j] = foot;
            next.sigma.values(i, j) = growth * interp_zero(state.sigma, foot.x, foot.y);
        }
    return next;
}

double localized_energy(const Geometry& geo, const ScalarGridField& sigma, double t,
                        const FlowSampler& flow, double max_substep) {
    const auto& g = sigma.grid;
    double e = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            const double sv = sigma.values(i, j);
            if (sv == 0.0) continue;
            const Vec2 pre = integrate_flow(flow, {g.xc(i), g.yc(j)}, 0.0, t, max_substep);
            e += geo.extinction_cutoff(pre.x, pre.y) * sv * sv;
        }
    return 0.5 * e * g.cell_area();
}

PreimageTracker::PreimageTracker(const GridGeometry& g)
    : g_(g), fx_(g.nx, g.ny), fy_(g.nx, g.ny) {
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
            fx_(i, j) = g.xc(i);
            fy_(i, j) = g.yc(j);
        }
}

void PreimageTracker::advance(const std::vector<Vec2>& feet, double t_before_step) {
    Eigen::ArrayXXd nfx(g_.nx, g_.ny), nfy(g_.nx, g_.ny);
    auto clamp_interp = [&](const Eigen::ArrayXXd& f, double x, double y) {
        const double fi = std::clamp(x / g_.hx - 0.5, 0.0, static_cast<double>(g_.nx - 1));
        const double fj = std::clamp(y / g_.hy - 0.5, 0.0, static_cast<double>(g_.ny - 1));
        const int i0 = std::min(static_cast<int>(fi), g_.nx - 2);
        const int j0 = std::min(static_cast<int>(fj), g_.ny - 2);
        const double ax = fi - i0, ay = fj - j0;
        return f(i0, j0) * (1.0 - ax) * (1.0 - ay) + f(i0 + 1, j0) * ax * (1.0 - ay) +
               f(i0, j0 + 1) * (1.0 - ax) * ay + f(i0 + 1, j0 + 1) * ax * ay;
    };
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) {
            const Vec2 foot = feet[static_cast<size_t>(i) * g_.ny + j];
            const bool inside = foot.x >= 0.0 && foot.x <= g_.d && foot.y >= 0.0 && foot.y <= 1.0;
            if (inside) {
                nfx(i, j) = clamp_interp(fx_, foot.x, foot.y);
                nfy(i, j) = clamp_interp(fy_, foot.x, foot.y);
            } else {
                // Outside the channel the perturbation vanishes, so the
                // remaining backward drift is the extended Poiseuille flow.
                const double speed =
                    (foot.y > 0.0 && foot.y < 1.0) ? foot.y * (1.0 - foot.y) : 0.0;
                nfx(i, j) = foot.x - t_before_step * speed;
                nfy(i, j) = foot.y;
            }
        }
    fx_.swap(nfx);
    fy_.swap(nfy);
}

double PreimageTracker::localized_energy(const Geometry& geo,
                                         const ScalarGridField& sigma) const {
    double e = 0.0;
    for (int i = 0; i < g_.nx; ++i)
        for (int j = 0; j < g_.ny; ++j) {
            const double sv = sigma.values(i, j);
            if (sv == 0.0) continue;
            e += geo.extinction_cutoff(fx_(i, j), fy_(i, j)) * sv * sv;
        }
    return 0.5 * e * g_.cell_area();
}

ExtinctionReport extinction_check(const std::vector<std::pair<double, double>>& sup_series,
                                  double T1, double beta, double sigma0_scale) {
    ExtinctionReport rep;
    rep.threshold =
        std::numeric_limits<double>::epsilon() * std::max(sigma0_scale, 1e-300);
    rep.pass = true;
    bool any_after = false;
    for (const auto& [t, sup] : sup_series) {
        if (t >= T1) {
            any_after = true;
            const double rel = sup * std::exp(-beta * t);
            rep.sup_after_T1 = std::max(rep.sup_after_T1, rel);
            if (rel > rep.threshold) rep.pass = false;
        }
    }
    // First sampled time after which the support stays empty.
    int last_nonzero = -1;
    for (int k = 0; k < static_cast<int>(sup_series.size()); ++k)
        if (sup_series[k].second > 0.0) last_nonzero = k;
    if (last_nonzero + 1 < static_cast<int>(sup_series.size()))
        rep.first_extinct_time = sup_series[last_nonzero + 1].first;
    if (!any_after) rep.pass = false;
    rep.extinct_by_T1 = rep.pass;
    return rep;
}

FlowDeviationReport check_flow_deviation(const VelocityHistory& hist, double beta, int n_space,
                                         int n_time, double max_substep) {
    FlowDeviationReport rep;
    rep.y_norm_v21 = hist.norm_v21();
    FlowSampler flow;
    flow.extra = [&hist, beta](double x, double y, double t) {
        const Vec2 e = hist.eval(x, y, t);
        const double damp = std::exp(-beta * t);
        return Vec2{damp * e.x, damp * e.y};
    };
    const double T = hist.t_last();
    const double d = hist.fields.empty() ? 1.0 : hist.fields[0].grid.d;
    for (int a = 0; a < n_space; ++a)
        for (int b = 0; b < n_space; ++b) {
            const Vec2 x{d * (a + 0.5) / n_space, (b + 0.5) / n_space};
            for (int it = 0; it <= n_time; ++it)
                for (int is = 0; is <= n_time; ++is) {
                    const double t = T * it / n_time;
                    const double s = T * is / n_time;
                    const Vec2 X = integrate_flow(flow, x, t, s, max_substep);
                    const Vec2 X0 = reference_flow(x, t, s);
                    rep.sup_deviation = std::max(
                        rep.sup_deviation, std::hypot(X.x - X0.x, X.y - X0.y));
                }
        }
    rep.ratio = rep.y_norm_v21 > 0.0 ? rep.sup_deviation / rep.y_norm_v21 : 0.0;
    return rep;
}

std::vector<TransportOracleRow> transport_oracle_study(const ChannelConfig& base,
                                                       const std::vector<int>& grids,
                                                       double t_final) {
    // Smooth bump supported inside the admissible band with generous margin.
    const double xa = 0.05 * base.d, xb = 0.55 * base.d;
    const double ya = base.A1 + 0.05, yb = 1.0 - base.A1 - 0.05;
    auto sigma0 = [&](double x, double y) {
        return smooth_bump(x, xa, xb, 0.3 * (xb - xa)) * smooth_bump(y, ya, yb, 0.3 * (yb - ya));
    };
    std::vector<TransportOracleRow> rows;
    for (int n : grids) {
        ChannelConfig cfg = base;
        cfg.nx = n;
        cfg.ny = n;
        const GridGeometry g = GridGeometry::from_config(cfg);
        DensityState st{ScalarGridField::sample(g, sigma0), 0.0};
        const double dt = base.dt * (64.0 / n);
        FlowSampler flow;  // y = 0
        const int steps = static_cast<int>(std::round(t_final / dt));
        for (int k = 0; k < steps; ++k) st = step_density(st, flow, dt, base.beta);
        double err = 0.0;
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.ny; ++j) {
                const double exact =
                    linear_transport_exact(sigma0, g.xc(i), g.yc(j), st.t, base.beta);
                err = std::max(err, std::abs(st.sigma.values(i, j) - exact));
            }
        TransportOracleRow row;
        row.n = n;
        row.h = g.hx;
        row.err_linf = err;
        rows.push_back(row);
    }
    for (size_t k = 1; k < rows.size(); ++k)
        rows[k].observed_order = std::log(rows[k - 1].err_linf / rows[k].err_linf) /
                                 std::log(rows[k - 1].h / rows[k].h);
    return rows;
}

}  // namespace chanstab
